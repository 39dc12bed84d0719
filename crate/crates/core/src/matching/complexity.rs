//! Similarity-evaluation accounting.
//!
//! One op is one cosine evaluation between two patch vectors. The closed form
//! for the coarse-to-fine matcher is `K * sum_d n_d + m * n'`, against `m * n`
//! for exhaustive search.

use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::feature::BlockPartition;
use crate::matching::MatchConfig;

/// Thread-safe similarity-op tally. Workers add per-block totals.
#[derive(Debug, Default)]
pub struct OpCounter {
    coarse: AtomicU64,
    fine: AtomicU64,
    dense: AtomicU64,
}

impl OpCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_coarse(&self, n: u64) {
        self.coarse.fetch_add(n, Ordering::Relaxed);
    }

    pub fn add_fine(&self, n: u64) {
        self.fine.fetch_add(n, Ordering::Relaxed);
    }

    pub fn add_dense(&self, n: u64) {
        self.dense.fetch_add(n, Ordering::Relaxed);
    }

    pub fn coarse(&self) -> u64 {
        self.coarse.load(Ordering::Relaxed)
    }

    pub fn fine(&self) -> u64 {
        self.fine.load(Ordering::Relaxed)
    }

    pub fn dense(&self) -> u64 {
        self.dense.load(Ordering::Relaxed)
    }

    pub fn total(&self) -> u64 {
        self.coarse() + self.fine()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReportSource {
    Predicted,
    Counted,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexityReport {
    pub source: ReportSource,
    /// Number of LR blocks `K`.
    pub blocks: u64,
    /// LR patches across all blocks, `m`.
    pub lr_patches: u64,
    /// Reference patches at dilation 1, `n`.
    pub ref_patches: u64,
    /// Patches per reference search block, `n'`.
    pub ref_block_patches: u64,
    /// Reference patches scanned per block in the coarse stage, summed over dilations.
    pub coarse_candidates: u64,
    pub dilation_count: u64,
    pub patch: u64,
    pub channels: u64,
    pub coarse_ops: u64,
    pub fine_ops: u64,
    pub total_ops: u64,
    /// Exhaustive-search cost `m * n`.
    pub dense_ops: u64,
}

impl ComplexityReport {
    /// Dense-to-coarse-to-fine similarity-op ratio.
    pub fn reduction(&self) -> f64 {
        self.dense_ops as f64 / self.total_ops.max(1) as f64
    }

    /// FLOPs per cosine evaluation counting a multiply-add as two operations:
    /// `2 p^2 C` for the dot product and `3 p^2 C` for the two norms and scaling.
    pub fn flops_per_op_mac2(&self) -> u64 {
        5 * self.patch * self.patch * self.channels
    }

    /// FLOPs per cosine evaluation counting a multiply-add as one operation.
    pub fn flops_per_op_mac1(&self) -> u64 {
        self.patch * self.patch * self.channels + 3 * self.patch * self.patch * self.channels / 2
    }

    pub fn same_counts(&self, other: &Self) -> bool {
        (
            self.coarse_ops,
            self.fine_ops,
            self.total_ops,
            self.dense_ops,
        ) == (
            other.coarse_ops,
            other.fine_ops,
            other.total_ops,
            other.dense_ops,
        )
    }
}

/// Closed-form similarity-op counts for matching an `lr` feature map against a
/// reference map of size `reference` (`(height, width)` each).
pub fn predicted_ops(
    cfg: &MatchConfig,
    lr: (usize, usize),
    reference: (usize, usize),
    channels: usize,
) -> Result<ComplexityReport> {
    cfg.validate()?;
    let part = BlockPartition::new(lr.0, lr.1, cfg.lr_block, cfg.lr_block)?;
    let (dy, dx) = cfg.ref_block_dims(lr, reference)?;
    let p = cfg.patch;
    let positions = |h: usize, w: usize, fp: usize| -> u64 {
        if fp > h || fp > w {
            0
        } else {
            ((h - fp + 1) * (w - fp + 1)) as u64
        }
    };
    let k = part.count() as u64;
    let per_block_lr = positions(cfg.lr_block, cfg.lr_block, p);
    let m = k * per_block_lr;
    let n = positions(reference.0, reference.1, p);
    let n_block = positions(dy, dx, p);
    let dilations = cfg.dilation_set();
    let coarse_candidates: u64 = dilations
        .iter()
        .map(|&d| positions(reference.0, reference.1, cfg.footprint(d)))
        .sum();
    let coarse = k * coarse_candidates;
    let fine = m * n_block;
    Ok(ComplexityReport {
        source: ReportSource::Predicted,
        blocks: k,
        lr_patches: m,
        ref_patches: n,
        ref_block_patches: n_block,
        coarse_candidates,
        dilation_count: dilations.len() as u64,
        patch: p as u64,
        channels: channels as u64,
        coarse_ops: coarse,
        fine_ops: fine,
        total_ops: coarse + fine,
        dense_ops: m * n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_on_128_square() {
        let r = predicted_ops(&MatchConfig::default(), (128, 128), (128, 128), 3).unwrap();
        assert_eq!(r.blocks, 256);
        assert_eq!(r.lr_patches, 9216);
        assert_eq!(r.ref_block_patches, 100);
        assert_eq!(r.fine_ops, 921_600);
        assert_eq!(r.coarse_ops, 256 * (126 * 126 + 124 * 124));
        assert_eq!(r.coarse_ops, 8_000_512);
        assert_eq!(r.total_ops, 8_922_112);
        assert_eq!(r.ref_patches, 15876);
        assert_eq!(r.dense_ops, 146_313_216);
        assert!((r.reduction() - 16.4).abs() < 0.05);
    }

    #[test]
    fn counter_merges_by_addition() {
        let c = OpCounter::new();
        std::thread::scope(|s| {
            for _ in 0..4 {
                s.spawn(|| {
                    c.add_coarse(10);
                    c.add_fine(3);
                });
            }
        });
        assert_eq!((c.coarse(), c.fine(), c.total()), (40, 12, 52));
    }
}
