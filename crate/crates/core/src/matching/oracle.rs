//! Exhaustive matching over the whole reference map.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::feature::FeatureMap;
use crate::matching::cosine::{best_match, PatchTable};
use crate::matching::stages::LrBlocks;
use crate::matching::{BlockMatch, CorrespondenceField, FieldGeometry, MatchConfig, OpCounter};

/// Match every LR patch of the per-block fine grid against every reference
/// patch. Each block's reference window is the whole map, so indices are
/// global row-major anchors. Returns the field and its similarity-op count.
pub fn dense_match_oracle(
    lr: &FeatureMap,
    ref_down: &FeatureMap,
    cfg: &MatchConfig,
) -> Result<(CorrespondenceField, u64)> {
    cfg.validate()?;
    if lr.channels() != ref_down.channels() {
        return Err(Error::shape("LR and reference channel counts differ"));
    }
    let blocks = LrBlocks::new(lr, cfg.lr_block)?;
    let (rh, rw) = (ref_down.height(), ref_down.width());
    let reference = PatchTable::build(ref_down, (0, 0, rh, rw), cfg.patch, 1)?;
    let counter = OpCounter::new();
    let matches = (0..blocks.partition.count())
        .into_par_iter()
        .map(|k| {
            let w = blocks.block(k);
            let queries =
                PatchTable::build(w.map, (w.top, w.left, w.height, w.width), cfg.patch, 1)?;
            let (indices, scores) = queries
                .iter()
                .map(|q| best_match(q, reference.iter()))
                .unzip();
            counter.add_dense((queries.count() * reference.count()) as u64);
            Ok(BlockMatch {
                ref_top: 0,
                ref_left: 0,
                ref_h: rh,
                ref_w: rw,
                indices,
                scores,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let p = &blocks.partition;
    let field = CorrespondenceField {
        geometry: FieldGeometry {
            lr_h: lr.height(),
            lr_w: lr.width(),
            block: cfg.lr_block,
            patch: cfg.patch,
            grid_rows: p.grid_rows,
            grid_cols: p.grid_cols,
            ref_h: rh,
            ref_w: rw,
        },
        blocks: matches,
    };
    Ok((field, counter.dense()))
}
