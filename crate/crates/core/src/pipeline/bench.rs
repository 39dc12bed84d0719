//! Oracle agreement, timing, and hyper-parameter sweeps over image pairs.

use std::time::Instant;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::feature::{bicubic_resize, encode, EncoderSpec, FeatureMap, ScaleFactor};
use crate::matching::{
    correspond, dense_match_oracle, ComplexityReport, MatchConfig, RefBlockScale,
};
use crate::pipeline::{ImagePair, PipelineConfig};

fn pair_features(pair: &ImagePair, spec: &EncoderSpec) -> Result<(FeatureMap, FeatureMap)> {
    let ref_down = bicubic_resize(&pair.reference, ScaleFactor::new(1, 4)?)?;
    Ok((encode(&pair.lr, spec, 1)?, encode(&ref_down, spec, 1)?))
}

fn need_pairs(pairs: &[ImagePair]) -> Result<()> {
    if pairs.is_empty() {
        Err(Error::config("at least one image pair is required"))
    } else {
        Ok(())
    }
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PairAgreement {
    pub name: String,
    /// Fraction of LR patches whose match equals the oracle's.
    pub agreement: f64,
    pub mean_r: f64,
    pub oracle_mean_r: f64,
    /// `mean_r / oracle_mean_r`.
    pub ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct OracleReport {
    pub pairs: Vec<PairAgreement>,
    pub mean_agreement: f64,
    pub mean_ratio: f64,
}

impl OracleReport {
    pub fn to_table(&self) -> String {
        let mut s = format!(
            "{:<20} {:>10} {:>10} {:>10} {:>8}\n",
            "pair", "agreement", "mean R", "oracle R", "ratio"
        );
        for p in &self.pairs {
            s += &format!(
                "{:<20} {:>10.4} {:>10.4} {:>10.4} {:>8.4}\n",
                p.name, p.agreement, p.mean_r, p.oracle_mean_r, p.ratio
            );
        }
        s += &format!(
            "{:<20} {:>10.4} {:>10} {:>10} {:>8.4}\n",
            "mean", self.mean_agreement, "", "", self.mean_ratio
        );
        s
    }
}

/// Compare coarse-to-fine matches with the exhaustive oracle on every pair.
pub fn oracle_compare(cfg: &PipelineConfig, pairs: &[ImagePair]) -> Result<OracleReport> {
    need_pairs(pairs)?;
    let spec = cfg.encoder_spec()?;
    let mut out = Vec::with_capacity(pairs.len());
    for pair in pairs {
        let (lr, rd) = pair_features(pair, &spec)?;
        let (fast, _) = correspond(&lr, &rd, &cfg.matching)?;
        let (dense, _) = dense_match_oracle(&lr, &rd, &cfg.matching)?;
        let mut same = 0usize;
        for (k, b) in fast.blocks.iter().enumerate() {
            for i in 0..b.indices.len() {
                same += (fast.global_index(k, i) == dense.global_index(k, i)) as usize;
            }
        }
        let (mean_r, oracle_mean_r) = (fast.mean_score(), dense.mean_score());
        out.push(PairAgreement {
            name: pair.name.clone(),
            agreement: same as f64 / fast.entry_count() as f64,
            mean_r,
            oracle_mean_r,
            ratio: if oracle_mean_r == 0.0 {
                1.0
            } else {
                mean_r / oracle_mean_r
            },
        });
    }
    Ok(OracleReport {
        mean_agreement: mean(out.iter().map(|p| p.agreement)),
        mean_ratio: mean(out.iter().map(|p| p.ratio)),
        pairs: out,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct AblationPoint {
    /// `lr_block`, `ref_block_scale`, or `dilations`.
    pub axis: String,
    pub value: String,
    pub config: MatchConfig,
    /// Mean counted similarity ops per pair.
    pub ops: f64,
    pub wall_ms: f64,
    /// Corpus mean of per-pair mean similarity.
    pub mean_r: f64,
}

/// Configurations swept along each axis. Block-size sweeps use dilation 1
/// so every block size admits the dilated center patch.
pub fn sweep_configs(base: &MatchConfig) -> Vec<(String, String, MatchConfig)> {
    let mut v = Vec::new();
    for b in [4, 8, 16, 32] {
        let c = MatchConfig {
            lr_block: b,
            dilations: vec![1],
            ..base.clone()
        };
        v.push(("lr_block".into(), b.to_string(), c));
    }
    for s in [1.0, 1.5, 2.0, 3.0] {
        let c = MatchConfig {
            ref_block_scale: RefBlockScale::Scaled(s),
            dilations: vec![1],
            ..base.clone()
        };
        v.push(("ref_block_scale".into(), s.to_string(), c));
    }
    for d in [vec![1], vec![1, 2], vec![1, 2, 3]] {
        let label = format!("{d:?}");
        let c = MatchConfig {
            dilations: d,
            ..base.clone()
        };
        v.push(("dilations".into(), label, c));
    }
    v
}

/// Sweep block sizes, reference block scale, and dilation sets.
pub fn ablate(cfg: &PipelineConfig, pairs: &[ImagePair]) -> Result<Vec<AblationPoint>> {
    need_pairs(pairs)?;
    let spec = cfg.encoder_spec()?;
    let feats = pairs
        .iter()
        .map(|p| pair_features(p, &spec))
        .collect::<Result<Vec<_>>>()?;
    let mut out = Vec::new();
    for (axis, value, mc) in sweep_configs(&cfg.matching) {
        mc.validate()?;
        let start = Instant::now();
        let mut ops = Vec::new();
        let mut rs = Vec::new();
        for (lr, rd) in &feats {
            let (field, report) = correspond(lr, rd, &mc)?;
            ops.push(report.total_ops as f64);
            rs.push(field.mean_score());
        }
        out.push(AblationPoint {
            axis,
            value,
            config: mc,
            ops: mean(ops.into_iter()),
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
            mean_r: mean(rs.into_iter()),
        });
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct PairTiming {
    pub name: String,
    pub coarse_to_fine_ms: f64,
    pub dense_ms: f64,
    pub speedup: f64,
    pub report: ComplexityReport,
}

#[derive(Clone, Debug, Serialize)]
pub struct BenchReport {
    pub timings: Vec<PairTiming>,
    /// Total dense time over total coarse-to-fine time.
    pub speedup: f64,
    pub ablation: Vec<AblationPoint>,
}

impl BenchReport {
    pub fn to_table(&self) -> String {
        let mut s = format!(
            "{:<20} {:>12} {:>12} {:>9} {:>14}\n",
            "pair", "c2f ms", "dense ms", "speedup", "ops"
        );
        for t in &self.timings {
            s += &format!(
                "{:<20} {:>12.1} {:>12.1} {:>8.1}x {:>14}\n",
                t.name, t.coarse_to_fine_ms, t.dense_ms, t.speedup, t.report.total_ops
            );
        }
        s += &format!("overall wall-clock speedup: {:.1}x\n\n", self.speedup);
        s += &ablation_table(&self.ablation);
        s
    }
}

pub fn ablation_table(points: &[AblationPoint]) -> String {
    let mut s = format!(
        "{:<16} {:<10} {:>14} {:>10} {:>8}\n",
        "axis", "value", "ops", "wall ms", "mean R"
    );
    for p in points {
        s += &format!(
            "{:<16} {:<10} {:>14.0} {:>10.1} {:>8.4}\n",
            p.axis, p.value, p.ops, p.wall_ms, p.mean_r
        );
    }
    s
}

/// Time coarse-to-fine matching against the dense oracle, then run the sweeps.
pub fn bench(cfg: &PipelineConfig, pairs: &[ImagePair]) -> Result<BenchReport> {
    need_pairs(pairs)?;
    let spec = cfg.encoder_spec()?;
    let mut timings = Vec::new();
    for pair in pairs {
        let (lr, rd) = pair_features(pair, &spec)?;
        let t0 = Instant::now();
        let (_, report) = correspond(&lr, &rd, &cfg.matching)?;
        let fast = t0.elapsed().as_secs_f64() * 1e3;
        let t1 = Instant::now();
        dense_match_oracle(&lr, &rd, &cfg.matching)?;
        let dense = t1.elapsed().as_secs_f64() * 1e3;
        timings.push(PairTiming {
            name: pair.name.clone(),
            coarse_to_fine_ms: fast,
            dense_ms: dense,
            speedup: dense / fast.max(1e-9),
            report,
        });
    }
    let total = |f: fn(&PairTiming) -> f64| timings.iter().map(f).sum::<f64>();
    let speedup = total(|t| t.dense_ms) / total(|t| t.coarse_to_fine_ms).max(1e-9);
    Ok(BenchReport {
        speedup,
        ablation: ablate(cfg, pairs)?,
        timings,
    })
}
