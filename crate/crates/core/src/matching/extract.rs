//! Similarity-weighted feature extraction at a reference scale.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::feature::{fold_blocks, overlap_fold, FeatureMap};
use crate::matching::CorrespondenceField;

/// Assemble the scale-`s` transferred feature map from a correspondence field.
///
/// For LR patch `i` of block `k` the matched `p*s` patch of `ref_s` (anchored at
/// `s` times its reference-map anchor) is placed at `s` times the LR patch's
/// in-block anchor; overlaps are averaged. Each folded block is multiplied by
/// the bilinearly upsampled similarity map, then blocks are tiled and cropped to
/// `s` times the LR size.
pub fn extract_features(
    field: &CorrespondenceField,
    ref_s: &FeatureMap,
    s: usize,
) -> Result<FeatureMap> {
    let g = field.geometry;
    if s == 0 {
        return Err(Error::config("scale must be positive"));
    }
    if ref_s.height() != s * g.ref_h || ref_s.width() != s * g.ref_w {
        return Err(Error::shape(format!(
            "scale-{s} reference is {}x{}, expected {}x{}",
            ref_s.height(),
            ref_s.width(),
            s * g.ref_h,
            s * g.ref_w
        )));
    }
    field.validate()?;
    let side = g.patch_side();
    let ps = g.patch * s;
    let bs = g.block * s;

    let blocks = (0..g.block_count())
        .into_par_iter()
        .map(|k| {
            let b = &field.blocks[k];
            let mut patches = Vec::with_capacity(b.indices.len());
            let mut anchors = Vec::with_capacity(b.indices.len());
            for i in 0..b.indices.len() {
                let (ry, rx) = field.ref_anchor(k, i);
                patches.push(ref_s.crop(s * ry, s * rx, ps, ps)?);
                anchors.push((s * (i / side), s * (i % side)));
            }
            let mut folded = overlap_fold(&patches, &anchors, bs, bs)?;
            let weight = upsample_scores(&b.scores, side, g.patch, s);
            for c in 0..folded.channels() {
                for (v, w) in folded.plane_mut(c).iter_mut().zip(&weight) {
                    *v *= w;
                }
            }
            Ok(folded)
        })
        .collect::<Result<Vec<_>>>()?;

    fold_blocks(&blocks, &g.partition().scaled(s), (s * g.lr_h, s * g.lr_w))
}

/// Bilinear `s`x upsampling of an `n x n` score map to the `s*b` block, with
/// score `i` sitting at its patch center and edge values held.
pub(crate) fn upsample_scores(scores: &[f32], n: usize, patch: usize, s: usize) -> Vec<f32> {
    let out = s * (n + patch - 1);
    let half = (patch as f64 - 1.0) / 2.0;
    let coords: Vec<(usize, usize, f32)> = (0..out)
        .map(|y| {
            let u = ((y as f64 + 0.5) / s as f64 - 0.5 - half).clamp(0.0, (n - 1) as f64);
            let i0 = u.floor() as usize;
            let i1 = (i0 + 1).min(n - 1);
            (i0, i1, (u - i0 as f64) as f32)
        })
        .collect();
    let mut w = Vec::with_capacity(out * out);
    for &(y0, y1, fy) in &coords {
        for &(x0, x1, fx) in &coords {
            let top = scores[y0 * n + x0] * (1.0 - fx) + scores[y0 * n + x1] * fx;
            let bot = scores[y1 * n + x0] * (1.0 - fx) + scores[y1 * n + x1] * fx;
            w.push(top * (1.0 - fy) + bot * fy);
        }
    }
    w
}
