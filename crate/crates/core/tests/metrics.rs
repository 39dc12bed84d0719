use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use refsr_core::feature::Image;
use refsr_core::matching::{predicted_ops, MatchConfig, RefBlockScale};
use refsr_core::metrics::{flops_report, l1_loss, psnr_y, ssim_y, ImageMetrics, MetricReport};

fn pattern() -> Image {
    Image::from_fn(32, 40, |y, x| {
        let (y, x) = (y as f64, x as f64);
        [
            (0.5 + 0.4 * (0.3 * x + 0.2 * y).sin()) as f32,
            (0.5 + 0.3 * (0.17 * x - 0.25 * y).cos()) as f32,
            (((x * 7.0 + y * 13.0) % 17.0) / 16.0) as f32,
        ]
    })
    .unwrap()
}

fn noisy(img: &Image, amp: f32, seed: u64) -> Image {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = img
        .data()
        .iter()
        .map(|&v| (v + rng.random_range(-amp..=amp)).clamp(0.0, 1.0))
        .collect();
    Image::from_vec(img.height(), img.width(), data).unwrap()
}

fn random_image(h: usize, w: usize, seed: u64) -> Image {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Image::from_fn(h, w, |_, _| [rng.random(), rng.random(), rng.random()]).unwrap()
}

#[test]
fn l1_values() {
    let a = Image::filled(4, 4, [0.0; 3]).unwrap();
    let b = Image::filled(4, 4, [0.5; 3]).unwrap();
    assert_eq!(l1_loss(&a, &a).unwrap(), 0.0);
    assert_eq!(l1_loss(&a, &b).unwrap(), 0.5);
    let (p, q) = (random_image(9, 7, 1), random_image(9, 7, 2));
    let mut naive = 0.0f64;
    for y in 0..9 {
        for x in 0..7 {
            for c in 0..3 {
                naive += (p.get(y, x, c) as f64 - q.get(y, x, c) as f64).abs();
            }
        }
    }
    assert!((l1_loss(&p, &q).unwrap() - naive / 189.0).abs() < 1e-7);
    assert!(l1_loss(&a, &Image::filled(4, 5, [0.0; 3]).unwrap()).is_err());
}

#[test]
fn l1_symmetric_and_triangle() {
    for s in 0..10 {
        let (a, b, c) = (
            random_image(6, 6, s),
            random_image(6, 6, s + 100),
            random_image(6, 6, s + 200),
        );
        assert_eq!(l1_loss(&a, &b).unwrap(), l1_loss(&b, &a).unwrap());
        assert!(
            l1_loss(&a, &c).unwrap() <= l1_loss(&a, &b).unwrap() + l1_loss(&b, &c).unwrap() + 1e-12
        );
    }
}

#[test]
fn psnr_values() {
    let a = pattern();
    assert_eq!(psnr_y(&a, &a).unwrap(), f64::INFINITY);
    // black vs white differs by 219 in Y
    let k = Image::filled(4, 4, [0.0; 3]).unwrap();
    let w = Image::filled(4, 4, [1.0; 3]).unwrap();
    let expect = 10.0 * (255.0f64.powi(2) / 219.0f64.powi(2)).log10();
    assert!((psnr_y(&k, &w).unwrap() - expect).abs() < 1e-9);

    let b = noisy(&a, 0.1, 3);
    let mut mse = 0.0;
    for y in 0..32 {
        for x in 0..40 {
            let lum = |img: &Image| {
                16.0 + 65.481 * img.get(y, x, 0) as f64
                    + 128.553 * img.get(y, x, 1) as f64
                    + 24.966 * img.get(y, x, 2) as f64
            };
            mse += (lum(&a) - lum(&b)).powi(2);
        }
    }
    let expect = 10.0 * (65025.0 / (mse / 1280.0)).log10();
    assert!((psnr_y(&a, &b).unwrap() - expect).abs() < 1e-4);
    assert_eq!(psnr_y(&a, &b).unwrap(), psnr_y(&b, &a).unwrap());
}

#[test]
fn psnr_decreases_with_noise() {
    let a = pattern();
    let values: Vec<f64> = [0.01, 0.03, 0.06, 0.1, 0.2]
        .iter()
        .map(|&amp| psnr_y(&a, &noisy(&a, amp, 9)).unwrap())
        .collect();
    assert!(values.windows(2).all(|w| w[0] > w[1]), "{values:?}");
}

#[test]
fn ssim_values() {
    let a = pattern();
    assert_eq!(ssim_y(&a, &a).unwrap(), 1.0);

    let neg = Image::from_vec(32, 40, a.data().iter().map(|&v| 1.0 - v).collect()).unwrap();
    // scikit-image structural_similarity(gaussian_weights, sigma 1.5,
    // population covariance, data_range 255) on the same luma planes
    assert!((ssim_y(&a, &neg).unwrap() - (-0.7100611774656451)).abs() < 1e-6);

    let lo = Image::filled(16, 16, [0.2; 3]).unwrap();
    let hi = Image::filled(16, 16, [0.2 + 128.0 / 255.0; 3]).unwrap();
    let ya = 16.0 + 219.0 * lo.get(0, 0, 0) as f64;
    let yb = 16.0 + 219.0 * hi.get(0, 0, 0) as f64;
    let c1 = (0.01f64 * 255.0).powi(2);
    let expect = (2.0 * ya * yb + c1) / (ya * ya + yb * yb + c1);
    assert!((ssim_y(&lo, &hi).unwrap() - expect).abs() < 1e-9);

    let small = Image::filled(10, 20, [0.2; 3]).unwrap();
    assert!(ssim_y(&small, &small).is_err());
}

#[test]
fn ssim_in_range() {
    for s in 0..5 {
        let v = ssim_y(&random_image(16, 16, s), &random_image(16, 16, s + 1)).unwrap();
        assert!((-1.0..=1.0).contains(&v));
    }
}

#[test]
fn report_rendering() {
    let a = pattern();
    let mut r = MetricReport::default();
    r.push(ImageMetrics::compute("same", &a, &a).unwrap());
    r.push(ImageMetrics::compute("noisy", &noisy(&a, 0.05, 1), &a).unwrap());
    let table = r.to_table();
    assert!(table.contains("inf"));
    assert!(table.lines().last().unwrap().starts_with("mean"));
    let json = r.to_json();
    assert_eq!(json["images"][0]["psnr_y"], "inf");
    assert_eq!(json["summary"]["count"], 2);
}

#[test]
fn flops_table() {
    let r = predicted_ops(&MatchConfig::default(), (128, 128), (128, 128), 3).unwrap();
    let t = flops_report(&r);
    assert!(t.contains("16.40x"));
    assert!(
        t.contains("coarse-to-fine")
            && t.contains("8.84")
            && t.contains("618.48")
            && t.contains("6005.78")
    );
    assert!(!t.contains("no acceleration"));

    let cfg = MatchConfig {
        dilations: vec![1],
        ref_block_scale: RefBlockScale::Full,
        ..Default::default()
    };
    let r = predicted_ops(&cfg, (32, 32), (32, 32), 3).unwrap();
    assert!(r.reduction() <= 1.0);
    assert!(flops_report(&r).contains("no acceleration"));
}
