//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.
//!
//! The determinism criterion runs the `refsr` binary from the same target
//! directory; `cargo test --workspace` builds it.

use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use refsr_core::adaptation::{apply_sam, channel_stats, ParamPredictor};
use refsr_core::feature::{
    bicubic_resize, encode, fold_blocks, overlap_fold, unfold_blocks, FeatureMap, ScaleFactor,
};
use refsr_core::fusion::{conv2d, dram_forward, dram_trace, DramWeights};
use refsr_core::matching::{
    correspond, dense_match_oracle, predicted_ops, CorrespondenceField, MatchConfig, RefBlockScale,
};
use refsr_core::pipeline::{ablate, load_corpus, oracle_compare, ImagePair, PipelineConfig};

const SAM_TOL: f32 = 1e-4;
const SUPERPOSITION_TOL: f32 = 1e-5;
const MIN_RATIO: f64 = 0.95;
const MIN_AGREEMENT: f64 = 0.60;
const MIN_REDUCTION: f64 = 15.0;
const MIN_SPEEDUP: f64 = 5.0;
/// Corpus means recorded on the first oracle run.
const GOLDEN_AGREEMENT: f64 = 0.620_291;
const GOLDEN_RATIO: f64 = 0.997_435;
const GOLDEN_TOL: f64 = 5e-6;

type Outcome = Result<String, String>;

fn random_map(rng: &mut ChaCha8Rng, c: usize, h: usize, w: usize) -> FeatureMap {
    FeatureMap::from_fn(c, h, w, |_, _, _| rng.random_range(-1.0f32..1.0))
}

fn refsr_bin() -> Result<PathBuf, String> {
    let exe = std::env::current_exe().map_err(|e| e.to_string())?;
    // target/<profile>/deps/acceptance-<hash>
    let dir = exe
        .parent()
        .and_then(Path::parent)
        .ok_or("no target directory")?;
    let bin = dir.join(format!("refsr{}", std::env::consts::EXE_SUFFIX));
    if bin.exists() {
        Ok(bin)
    } else {
        Err(format!(
            "{} not built; run `cargo build -p refsr-cli`",
            bin.display()
        ))
    }
}

fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/corpus")
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn oracle_exactness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let cfg = MatchConfig {
        ref_block_scale: RefBlockScale::Full,
        ..Default::default()
    };
    let trials = 20;
    let mut mismatched = Vec::new();
    for t in 0..trials {
        let c = if t % 2 == 0 { 3 } else { 12 };
        // the last trial pins the upper end of the size range
        let (lh, lw) = if t == trials - 1 {
            (32, 40)
        } else {
            (rng.random_range(32..=64), rng.random_range(32..=64))
        };
        let (rh, rw) = if t == trials - 1 {
            (128, 128)
        } else {
            (rng.random_range(32..=96), rng.random_range(32..=96))
        };
        let lr = random_map(&mut rng, c, lh, lw);
        let rd = random_map(&mut rng, c, rh, rw);
        let (fast, _) = correspond(&lr, &rd, &cfg).map_err(|e| e.to_string())?;
        let (dense, _) = dense_match_oracle(&lr, &rd, &cfg).map_err(|e| e.to_string())?;
        if fast != dense {
            mismatched.push(t);
        }
    }
    check(
        mismatched.is_empty(),
        format!(
            "{} of {trials} random maps differ from the oracle {mismatched:?}",
            mismatched.len()
        ),
    )
}

fn matching_quality(pairs: &[ImagePair]) -> Outcome {
    let r = oracle_compare(&PipelineConfig::default(), pairs).map_err(|e| e.to_string())?;
    print!("{}", r.to_table());
    let detail = format!(
        "agreement {:.6} (>= {MIN_AGREEMENT}, golden {GOLDEN_AGREEMENT}), ratio {:.6} (>= {MIN_RATIO}, golden {GOLDEN_RATIO})",
        r.mean_agreement, r.mean_ratio
    );
    check(
        r.mean_ratio >= MIN_RATIO
            && r.mean_agreement >= MIN_AGREEMENT
            && (r.mean_agreement - GOLDEN_AGREEMENT).abs() <= GOLDEN_TOL
            && (r.mean_ratio - GOLDEN_RATIO).abs() <= GOLDEN_TOL,
        detail,
    )
}

fn features(pair: &ImagePair) -> (FeatureMap, FeatureMap) {
    let spec = PipelineConfig::default().encoder_spec().unwrap();
    let rd = bicubic_resize(&pair.reference, ScaleFactor::new(1, 4).unwrap()).unwrap();
    (
        encode(&pair.lr, &spec, 1).unwrap(),
        encode(&rd, &spec, 1).unwrap(),
    )
}

fn complexity(pairs: &[ImagePair]) -> Outcome {
    let mut configs = vec![
        MatchConfig::default(),
        MatchConfig {
            ref_block_scale: RefBlockScale::Full,
            ..Default::default()
        },
    ];
    for (b, s, d) in [
        (4, 1.0, vec![1]),
        (16, 2.0, vec![1, 2, 3]),
        (12, 3.0, vec![2]),
        (32, 1.5, vec![1, 4]),
    ] {
        configs.push(MatchConfig {
            lr_block: b,
            ref_block_scale: RefBlockScale::Scaled(s),
            dilations: d,
            ..Default::default()
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut inputs: Vec<_> = pairs.iter().take(2).map(features).collect();
    inputs.push((
        random_map(&mut rng, 12, 45, 37),
        random_map(&mut rng, 12, 70, 90),
    ));
    let mut mismatches = 0;
    let mut runs = 0;
    for cfg in &configs {
        for (lr, rd) in &inputs {
            let (_, counted) = correspond(lr, rd, cfg).map_err(|e| e.to_string())?;
            let predicted = predicted_ops(
                cfg,
                (lr.height(), lr.width()),
                (rd.height(), rd.width()),
                lr.channels(),
            )
            .map_err(|e| e.to_string())?;
            runs += 1;
            mismatches += !counted.same_counts(&predicted) as usize;
        }
    }

    let default = predicted_ops(&MatchConfig::default(), (128, 128), (128, 128), 3)
        .map_err(|e| e.to_string())?;
    let (mut fast, mut dense) = (0.0, 0.0);
    for (lr, rd) in inputs.iter().take(2) {
        let t = Instant::now();
        correspond(lr, rd, &MatchConfig::default()).map_err(|e| e.to_string())?;
        fast += t.elapsed().as_secs_f64();
        let t = Instant::now();
        dense_match_oracle(lr, rd, &MatchConfig::default()).map_err(|e| e.to_string())?;
        dense += t.elapsed().as_secs_f64();
    }
    let speedup = dense / fast;
    check(
        mismatches == 0 && default.reduction() >= MIN_REDUCTION && speedup >= MIN_SPEEDUP,
        format!(
            "counted == predicted in {}/{runs} runs; 128/512 ops {} vs dense {} ({:.2}x, >= {MIN_REDUCTION}); wall-clock {speedup:.1}x (>= {MIN_SPEEDUP})",
            runs - mismatches,
            default.total_ops,
            default.dense_ops,
            default.reduction()
        ),
    )
}

fn sweep_trends(pairs: &[ImagePair]) -> Outcome {
    let points = ablate(&PipelineConfig::default(), pairs).map_err(|e| e.to_string())?;
    print!("{}", refsr_core::pipeline::ablation_table(&points));
    let axis = |name: &str| points.iter().filter(|p| p.axis == name).collect::<Vec<_>>();
    let strictly_dec = |v: &[f64]| v.windows(2).all(|w| w[1] < w[0]);
    let non_dec = |v: &[f64]| v.windows(2).all(|w| w[1] >= w[0]);

    let mut failed = Vec::new();
    let mut summary = Vec::new();
    let block: Vec<f64> = axis("lr_block").iter().map(|p| p.ops).collect();
    let mut sub = |name: &str, ok: bool, values: &[f64]| {
        summary.push(format!("{name} {}", if ok { "ok" } else { "violated" }));
        if !ok {
            failed.push(format!("{name}: {values:?}"));
        }
    };
    sub("ops decrease with lr_block", strictly_dec(&block), &block);
    for name in ["ref_block_scale", "dilations"] {
        let pts = axis(name);
        let ops: Vec<f64> = pts.iter().map(|p| p.ops).collect();
        let r: Vec<f64> = pts.iter().map(|p| p.mean_r).collect();
        sub(
            &format!("ops non-decreasing in {name}"),
            non_dec(&ops),
            &ops,
        );
        sub(&format!("mean R non-decreasing in {name}"), non_dec(&r), &r);
    }
    let detail = summary.join("; ");
    if failed.is_empty() {
        Ok(detail)
    } else {
        Err(format!("{detail}; {}", failed.join("; ")))
    }
}

fn sam_statistics() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (mut worst_stat, mut worst_shift) = (0.0f32, 0.0f32);
    for t in 0..100 {
        let c = rng.random_range(1..=12);
        let (h, w) = (rng.random_range(4..=24), rng.random_range(4..=24));
        let lr = random_map(&mut rng, c, h, w).map(|v| 3.0 * v + 0.5);
        let mut reference = random_map(&mut rng, c, h, w);
        if t % 2 == 1 {
            let offset = rng.random_range(-2.0f32..2.0);
            reference = reference.map(|v| v + offset);
        }
        let out = apply_sam(&lr, &reference, &ParamPredictor::Zero).map_err(|e| e.to_string())?;
        let (a, b) = (channel_stats(&out), channel_stats(&lr));
        for k in 0..c {
            worst_stat = worst_stat
                .max((a.mu[k] - b.mu[k]).abs())
                .max((a.sigma[k] - b.sigma[k]).abs());
        }
        let delta = rng.random_range(-1.0f32..1.0);
        let shifted = apply_sam(&lr, &reference.map(|v| v + delta), &ParamPredictor::Zero)
            .map_err(|e| e.to_string())?;
        worst_shift = worst_shift.max(shifted.max_abs_diff(&out).map_err(|e| e.to_string())?);
    }
    check(
        worst_stat <= SAM_TOL && worst_shift <= SAM_TOL,
        format!("100 pairs: max stat error {worst_stat:.2e}, max shift response {worst_shift:.2e} (<= {SAM_TOL:e})"),
    )
}

fn dram_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut cancel = true;
    let mut worst_super = 0.0f32;
    for w in [DramWeights::fixed_default(6), DramWeights::seeded(6, 3)] {
        for _ in 0..10 {
            let (h, wd) = (rng.random_range(3..=16), rng.random_range(3..=16));
            let lr = random_map(&mut rng, 6, h, wd);
            let r = random_map(&mut rng, 6, 2 * h, 2 * wd);
            let t = dram_trace(&lr, &r, &w).map_err(|e| e.to_string())?;
            cancel &= t
                .res_ref
                .add(&t.res_lr)
                .unwrap()
                .data()
                .iter()
                .all(|&v| v == 0.0);

            let (lr2, r2) = (
                random_map(&mut rng, 6, h, wd),
                random_map(&mut rng, 6, 2 * h, 2 * wd),
            );
            let (a, b) = (
                rng.random_range(-2.0f32..2.0),
                rng.random_range(-2.0f32..2.0),
            );
            let mix = |x: &FeatureMap, y: &FeatureMap| x.zip_with(y, |u, v| a * u + b * v).unwrap();
            let lhs =
                dram_forward(&mix(&lr, &lr2), &mix(&r, &r2), &w).map_err(|e| e.to_string())?;
            let rhs = mix(
                &dram_forward(&lr, &r, &w).unwrap(),
                &dram_forward(&lr2, &r2, &w).unwrap(),
            );
            worst_super = worst_super.max(lhs.max_abs_diff(&rhs).unwrap());
        }
    }
    let w = DramWeights::fixed_default(6);
    let r = random_map(&mut rng, 6, 20, 14);
    let lr = conv2d(&r, &w.conv_down).map_err(|e| e.to_string())?;
    let t = dram_trace(&lr, &r, &w).map_err(|e| e.to_string())?;
    let fixed = t.res_ref.data().iter().all(|&v| v == 0.0) && t.ref_refined == r;
    check(
        cancel && fixed && worst_super <= SUPERPOSITION_TOL,
        format!(
            "residuals cancel exactly: {cancel}; zero-residual fixed point: {fixed}; superposition error {worst_super:.2e} (<= {SUPERPOSITION_TOL:e})"
        ),
    )
}

fn round_trips(pairs: &[ImagePair]) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut fold_fail = 0;
    let mut unity_fail = 0;
    for _ in 0..50 {
        let c = rng.random_range(1..=6);
        let (h, w) = (rng.random_range(1..=48), rng.random_range(1..=48));
        let (bh, bw) = (
            rng.random_range(1..=h.min(12)),
            rng.random_range(1..=w.min(12)),
        );
        let f = random_map(&mut rng, c, h, w);
        let (part, blocks) = unfold_blocks(&f, bh, bw).map_err(|e| e.to_string())?;
        fold_fail +=
            (fold_blocks(&blocks, &part, (h, w)).map_err(|e| e.to_string())? != f) as usize;

        let p = rng.random_range(1..=h.min(w).min(4));
        let mut patches = Vec::new();
        let mut anchors = Vec::new();
        for y in 0..=h - p {
            for x in 0..=w - p {
                patches.push(FeatureMap::filled(c, p, p, 1.0));
                anchors.push((y, x));
            }
        }
        let cover = overlap_fold(&patches, &anchors, h, w).map_err(|e| e.to_string())?;
        unity_fail += !cover.data().iter().all(|&v| (v - 1.0).abs() < 1e-6) as usize;
    }
    let (lr, rd) = features(&pairs[0]);
    let (field, _) = correspond(&lr, &rd, &MatchConfig::default()).map_err(|e| e.to_string())?;
    let bytes = field.to_bytes();
    let back = CorrespondenceField::from_bytes(&bytes).map_err(|e| e.to_string())?;
    let bytes_ok = back == field && back.to_bytes() == bytes;
    check(
        fold_fail == 0 && unity_fail == 0 && bytes_ok,
        format!(
            "fold/unfold failures {fold_fail}/50; partition-of-unity failures {unity_fail}/50; field bytes round trip: {bytes_ok}"
        ),
    )
}

fn determinism(pairs: &[ImagePair]) -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let pair = &pairs[0];
    let (lr, reference) = (dir.path().join("lr.png"), dir.path().join("ref.png"));
    pair.lr.save(&lr).map_err(|e| e.to_string())?;
    pair.reference.save(&reference).map_err(|e| e.to_string())?;
    let bin = refsr_bin()?;
    let run = |workers: usize| -> Result<(Vec<u8>, Vec<u8>), String> {
        let out = dir.path().join(format!("w{workers}"));
        let status = Command::new(&bin)
            .arg("transfer")
            .arg("--lr")
            .arg(&lr)
            .arg("--ref")
            .arg(&reference)
            .args(["--workers", &workers.to_string()])
            .arg("--out")
            .arg(&out)
            .output()
            .map_err(|e| e.to_string())?;
        if !status.status.success() {
            return Err(format!(
                "workers={workers}: {}",
                String::from_utf8_lossy(&status.stderr)
            ));
        }
        let read = |name: &str| std::fs::read(out.join(name)).map_err(|e| e.to_string());
        Ok((read("sr.png")?, read("correspondence.bin")?))
    };
    let (one, eight) = (run(1)?, run(8)?);
    check(
        one == eight,
        format!(
            "sr.png identical: {}; correspondence.bin identical: {}",
            one.0 == eight.0,
            one.1 == eight.1
        ),
    )
}

fn main() -> ExitCode {
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return ExitCode::SUCCESS;
    }
    let pairs = match load_corpus(corpus_dir()) {
        Ok(p) => p,
        Err(e) => {
            println!("FAIL corpus: {e}");
            return ExitCode::FAILURE;
        }
    };
    let pairs = &pairs;
    type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);
    let criteria: Vec<Criterion> = vec![
        (
            "1 oracle exactness, full-extent blocks",
            Box::new(oracle_exactness),
        ),
        (
            "2 matching quality vs oracle on corpus",
            Box::new(|| matching_quality(pairs)),
        ),
        (
            "3 op counts, reduction and speedup",
            Box::new(|| complexity(pairs)),
        ),
        ("4 sweep trends", Box::new(|| sweep_trends(pairs))),
        (
            "5 SAM statistics and shift invariance",
            Box::new(sam_statistics),
        ),
        ("6 DRAM identities", Box::new(dram_identities)),
        ("7 structural round trips", Box::new(|| round_trips(pairs))),
        (
            "8 transfer determinism across workers",
            Box::new(|| determinism(pairs)),
        ),
    ];
    let mut failures = 0;
    for (name, run) in &criteria {
        let t = Instant::now();
        let outcome = run();
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("PASS [{name}] {d} ({secs:.1}s)"),
            Err(d) => {
                failures += 1;
                println!("FAIL [{name}] {d} ({secs:.1}s)");
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failures,
        criteria.len()
    );
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
