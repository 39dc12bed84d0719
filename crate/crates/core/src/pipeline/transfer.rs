use std::time::Instant;

use crate::adaptation::apply_sam;
use crate::error::{Error, Result, StageContext};
use crate::feature::{bicubic_resize, encode, FeatureMap, Image, ScaleFactor};
use crate::fusion::{conv2d, dram_forward};
use crate::matching::{mem_forward, CorrespondenceField};
use crate::pipeline::manifest::{sha256_hex, InputChecksum, RunManifest};
use crate::pipeline::{with_workers, PipelineConfig};

/// Everything a transfer run produces.
#[derive(Clone, Debug)]
pub struct TransferOutput {
    pub image: Image,
    pub field: CorrespondenceField,
    pub manifest: RunManifest,
}

/// Bilinear 2x upsampling with half-pixel centers and clamped edges.
pub fn upsample2(f: &FeatureMap) -> FeatureMap {
    let (c, h, w) = f.shape();
    let taps = |len: usize| -> Vec<(usize, usize, f32)> {
        (0..2 * len)
            .map(|o| {
                let u = ((o as f32 + 0.5) / 2.0 - 0.5).clamp(0.0, (len - 1) as f32);
                let i0 = u.floor() as usize;
                (i0, (i0 + 1).min(len - 1), u - i0 as f32)
            })
            .collect()
    };
    let (ty, tx) = (taps(h), taps(w));
    FeatureMap::from_fn(c, 2 * h, 2 * w, |ch, y, x| {
        let (y0, y1, fy) = ty[y];
        let (x0, x1, fx) = tx[x];
        let top = f.get(ch, y0, x0) * (1.0 - fx) + f.get(ch, y0, x1) * fx;
        let bot = f.get(ch, y1, x0) * (1.0 - fx) + f.get(ch, y1, x1) * fx;
        top * (1.0 - fy) + bot * fy
    })
}

/// Decode a feature map to RGB: the first three channels clamped to `[0, 1]`.
/// Every encoder mode keeps the RGB identity response in channels 0..3.
pub fn decode(f: &FeatureMap) -> Result<Image> {
    if f.channels() < 3 {
        return Err(Error::shape("decoding needs at least three channels"));
    }
    Image::from_feature_clamped(&f.slice_channels(0, 3)?)
}

/// Run the full pipeline: encode, match once, extract at 1x/2x/4x, adapt, fuse
/// 1x -> 2x -> 4x, decode.
pub fn run_transfer(lr: &Image, reference: &Image, cfg: &PipelineConfig) -> Result<TransferOutput> {
    cfg.validate()?;
    if cfg.matching.scales != [1, 2, 4] {
        return Err(Error::config("transfer needs scales [1, 2, 4]"));
    }
    if !reference.height().is_multiple_of(4) || !reference.width().is_multiple_of(4) {
        return Err(Error::shape(format!(
            "reference {}x{} not divisible by 4",
            reference.height(),
            reference.width()
        )));
    }
    with_workers(cfg.run.workers, || transfer_inner(lr, reference, cfg))?
}

fn transfer_inner(lr: &Image, reference: &Image, cfg: &PipelineConfig) -> Result<TransferOutput> {
    let mut timings = Vec::new();
    let mut clock = Instant::now();
    let mut lap = |name: &str, timings: &mut Vec<(String, f64)>| {
        timings.push((name.to_string(), clock.elapsed().as_secs_f64() * 1e3));
        clock = Instant::now();
    };

    let spec = cfg.encoder_spec().stage("encode")?;
    let ref_down = bicubic_resize(reference, ScaleFactor::new(1, 4)?).stage("resample")?;
    let f_lr = encode(lr, &spec, 1).stage("encode")?;
    let f_ref_down = encode(&ref_down, &spec, 1).stage("encode")?;
    let f_ref = [4, 2, 1]
        .iter()
        .map(|&d| encode(reference, &spec, d))
        .collect::<Result<Vec<_>>>()
        .stage("encode")?;
    lap("encode", &mut timings);

    let mem = mem_forward(
        &f_lr,
        &f_ref_down,
        &[&f_ref[0], &f_ref[1], &f_ref[2]],
        &cfg.matching,
    )
    .stage("match")?;
    lap("match", &mut timings);

    let c = f_lr.channels();
    let predictor = cfg.predictor(c).stage("adapt")?;
    let dram = cfg.dram_weights(c).stage("fuse")?;
    let t = |s| mem.at_scale(s).expect("all scales extracted");

    let a1 = apply_sam(&f_lr, t(1), &predictor).stage("adapt")?;
    let x1 = conv2d(&f_lr.concat_channels(&a1)?, &dram.conv_merge).stage("fuse")?;
    let a2 = apply_sam(&upsample2(&x1), t(2), &predictor).stage("adapt")?;
    let x2 = dram_forward(&x1, &a2, &dram).stage("fuse")?;
    let a4 = apply_sam(&upsample2(&x2), t(4), &predictor).stage("adapt")?;
    let x4 = dram_forward(&x2, &a4, &dram).stage("fuse")?;
    lap("adapt+fuse", &mut timings);

    let image = decode(&x4).stage("decode")?;
    lap("decode", &mut timings);

    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        config_hash: cfg.hash(),
        config: cfg.clone(),
        inputs: vec![
            InputChecksum::of("lr", lr),
            InputChecksum::of("ref", reference),
        ],
        timings_ms: timings,
        complexity: mem.report.clone(),
        correspondence_sha256: sha256_hex(&mem.field.to_bytes()),
        output_sha256: sha256_hex(&image.encode_png()?),
        mean_similarity: mem.field.mean_score(),
        metrics: None,
    };
    Ok(TransferOutput {
        image,
        field: mem.field,
        manifest,
    })
}
