use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::feature::FeatureMap;
use crate::matching::stages::{coarse_match, fine_match, LrBlocks};
use crate::matching::{
    extract_features, predicted_ops, BlockMatch, ComplexityReport, CorrespondenceField,
    FieldGeometry, MatchConfig, OpCounter, ReportSource,
};

/// Result of a full match-and-extract pass.
#[derive(Clone, Debug)]
pub struct MemOutput {
    /// One transferred map per entry of `cfg.scales`, in that order.
    pub extracted: Vec<(usize, FeatureMap)>,
    pub field: CorrespondenceField,
    pub report: ComplexityReport,
}

impl MemOutput {
    pub fn at_scale(&self, s: usize) -> Option<&FeatureMap> {
        self.extracted.iter().find(|(t, _)| *t == s).map(|(_, f)| f)
    }
}

/// Coarse then fine matching. The returned report is built from the op
/// counters and must agree with [`predicted_ops`]; a mismatch is an
/// [`Error::Invariant`].
pub fn correspond(
    lr: &FeatureMap,
    ref_down: &FeatureMap,
    cfg: &MatchConfig,
) -> Result<(CorrespondenceField, ComplexityReport)> {
    let blocks = LrBlocks::new(lr, cfg.lr_block)?;
    let counter = OpCounter::new();
    let triples = coarse_match(&blocks, ref_down, cfg, &counter)?;
    let matches = triples
        .par_iter()
        .map(|t| {
            let (indices, scores) = fine_match(t, cfg, &counter)?;
            Ok(BlockMatch {
                ref_top: t.ref_lr.top,
                ref_left: t.ref_lr.left,
                ref_h: t.ref_lr.height,
                ref_w: t.ref_lr.width,
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
            ref_h: ref_down.height(),
            ref_w: ref_down.width(),
        },
        blocks: matches,
    };
    field.validate()?;

    let predicted = predicted_ops(cfg, lr_dims(lr), lr_dims(ref_down), lr.channels())?;
    let report = ComplexityReport {
        source: ReportSource::Counted,
        coarse_ops: counter.coarse(),
        fine_ops: counter.fine(),
        total_ops: counter.total(),
        ..predicted.clone()
    };
    if !report.same_counts(&predicted) {
        return Err(Error::Invariant(format!(
            "counted ops {}+{} differ from predicted {}+{}",
            report.coarse_ops, report.fine_ops, predicted.coarse_ops, predicted.fine_ops
        )));
    }
    Ok((field, report))
}

fn lr_dims(f: &FeatureMap) -> (usize, usize) {
    (f.height(), f.width())
}

/// Match once on `(lr, ref_down)`, then extract at every configured scale.
/// `ref_scales[i]` is the reference feature map for `cfg.scales[i]` and must be
/// that many times the size of `ref_down`.
pub fn mem_forward(
    lr: &FeatureMap,
    ref_down: &FeatureMap,
    ref_scales: &[&FeatureMap],
    cfg: &MatchConfig,
) -> Result<MemOutput> {
    cfg.validate()?;
    if ref_scales.len() != cfg.scales.len() {
        return Err(Error::config(format!(
            "{} reference maps for {} scales",
            ref_scales.len(),
            cfg.scales.len()
        )));
    }
    for f in [lr, ref_down].into_iter().chain(ref_scales.iter().copied()) {
        if !f.is_finite() {
            return Err(Error::shape("non-finite feature values"));
        }
    }
    let (field, report) = correspond(lr, ref_down, cfg)?;
    let extracted = cfg
        .scales
        .iter()
        .zip(ref_scales)
        .map(|(&s, r)| Ok((s, extract_features(&field, r, s)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(MemOutput {
        extracted,
        field,
        report,
    })
}
