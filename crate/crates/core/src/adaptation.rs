//! Spatial adaptation: remap reference features toward LR channel statistics.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::feature::FeatureMap;
use crate::fusion::{conv2d, ConvKernel};
use crate::weights;

/// Floor on the standard deviation when normalizing.
pub const SAM_EPS: f32 = 1e-5;

/// Per-channel mean and population standard deviation.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelStats {
    pub mu: Vec<f32>,
    pub sigma: Vec<f32>,
}

pub fn channel_stats(f: &FeatureMap) -> ChannelStats {
    let n = (f.height() * f.width()) as f64;
    let (mu, sigma) = (0..f.channels())
        .map(|c| {
            let plane = f.plane(c);
            let mean = plane.iter().map(|&v| v as f64).sum::<f64>() / n;
            let var = plane
                .iter()
                .map(|&v| (v as f64 - mean).powi(2))
                .sum::<f64>()
                / n;
            (mean as f32, var.sqrt() as f32)
        })
        .unzip();
    ChannelStats { mu, sigma }
}

/// `(F - mu_c) / max(sigma_c, eps)` channel by channel.
pub fn instance_normalize(f: &FeatureMap, stats: &ChannelStats) -> Result<FeatureMap> {
    if stats.mu.len() != f.channels() || stats.sigma.len() != f.channels() {
        return Err(Error::shape(format!(
            "stats for {} channels, map has {}",
            stats.mu.len(),
            f.channels()
        )));
    }
    let mut out = f.clone();
    for c in 0..f.channels() {
        let (m, s) = (stats.mu[c], stats.sigma[c].max(SAM_EPS));
        out.plane_mut(c).iter_mut().for_each(|v| *v = (*v - m) / s);
    }
    Ok(out)
}

/// Source of the spatial residuals added to the LR statistics.
///
/// A convolution predictor maps `concat(F_LR, F_Ref)` (2C channels) to 2C
/// channels: the first C are the beta residual, the rest the gamma residual.
#[derive(Clone, Debug, PartialEq)]
pub enum ParamPredictor {
    Zero,
    Conv(ConvKernel),
}

impl ParamPredictor {
    /// 3x3 convolution with `uniform(-0.1, 0.1)` taps from `seed`, zero bias.
    pub fn seeded(channels: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::Conv(ConvKernel::seeded(
            2 * channels,
            2 * channels,
            3,
            1,
            &mut rng,
        ))
    }

    /// A single `(weight, bias)` pair; the kernel must be odd-sized and map
    /// `2C` to `2C` channels.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let t = weights::load(path)?;
        if t.len() != 2 {
            return Err(Error::format(
                "predictor weights",
                "expected one (weight, bias) pair",
            ));
        }
        let k = ConvKernel::from_tensors(&t[0], &t[1], 1)?;
        if k.in_channels != k.out_channels || k.in_channels % 2 != 0 {
            return Err(Error::shape(
                "predictor must map 2C channels to 2C channels",
            ));
        }
        Ok(Self::Conv(k))
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Zero => "zero",
            Self::Conv(_) => "conv",
        }
    }

    fn residuals(
        &self,
        lr: &FeatureMap,
        reference: &FeatureMap,
    ) -> Result<Option<(FeatureMap, FeatureMap)>> {
        match self {
            Self::Zero => Ok(None),
            Self::Conv(k) => {
                let c = lr.channels();
                if k.in_channels != 2 * c {
                    return Err(Error::shape(format!(
                        "predictor expects {} input channels, features have {}",
                        k.in_channels,
                        2 * c
                    )));
                }
                let out = conv2d(&lr.concat_channels(reference)?, k)?;
                Ok(Some((
                    out.slice_channels(0, c)?,
                    out.slice_channels(c, 2 * c)?,
                )))
            }
        }
    }
}

/// Spatial modulation maps and the statistics they were built from.
#[derive(Clone, Debug, PartialEq)]
pub struct SamParams {
    pub beta: FeatureMap,
    pub gamma: FeatureMap,
    pub lr_stats: ChannelStats,
    pub ref_stats: ChannelStats,
}

pub fn sam_params(
    lr: &FeatureMap,
    reference: &FeatureMap,
    predictor: &ParamPredictor,
) -> Result<SamParams> {
    if lr.shape() != reference.shape() {
        return Err(Error::shape(format!(
            "LR features {:?} and reference features {:?} differ",
            lr.shape(),
            reference.shape()
        )));
    }
    let lr_stats = channel_stats(lr);
    let ref_stats = channel_stats(reference);
    let (c, h, w) = lr.shape();
    let (mut beta, mut gamma) = predictor
        .residuals(lr, reference)?
        .unwrap_or_else(|| (FeatureMap::zeros(c, h, w), FeatureMap::zeros(c, h, w)));
    for ch in 0..c {
        beta.plane_mut(ch)
            .iter_mut()
            .for_each(|v| *v += lr_stats.mu[ch]);
        gamma
            .plane_mut(ch)
            .iter_mut()
            .for_each(|v| *v += lr_stats.sigma[ch]);
    }
    Ok(SamParams {
        beta,
        gamma,
        lr_stats,
        ref_stats,
    })
}

/// `normalize(F_Ref) * gamma + beta` with beta, gamma offset by the LR
/// channel mean and deviation.
pub fn apply_sam(
    lr: &FeatureMap,
    reference: &FeatureMap,
    predictor: &ParamPredictor,
) -> Result<FeatureMap> {
    let p = sam_params(lr, reference, predictor)?;
    let norm = instance_normalize(reference, &p.ref_stats)?;
    let scaled = norm.zip_with(&p.gamma, |x, g| x * g)?;
    scaled.add(&p.beta)
}
