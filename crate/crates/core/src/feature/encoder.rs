//! Deterministic stand-ins for a learned multi-scale feature encoder.
//!
//! Every mode computes a full-resolution feature map and then mean-pools it by
//! the requested scale, so the scale-`s` output of an `H x W` image is
//! `H/s x W/s` (after reflect padding to a multiple of `s`).

use std::path::Path;

use crate::error::{Error, Result};
use crate::feature::map::reflect_signed;
use crate::feature::{FeatureMap, Image};
use crate::fusion::{conv2d, ConvKernel};
use crate::weights;

#[derive(Clone, Debug, PartialEq)]
pub enum EncoderSpec {
    /// RGB values as three channels.
    IdentityRgb,
    /// Identity, horizontal gradient, vertical gradient and 3x3 Gaussian blur
    /// of each RGB channel, grouped by filter (12 channels).
    FilterBank,
    /// A stack of stride-1 convolutions with ReLU between layers.
    Loaded(Vec<ConvKernel>),
}

pub const SCALES: [usize; 3] = [1, 2, 4];

impl EncoderSpec {
    /// Load a convolution stack: consecutive `(weight, bias)` tensor pairs.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let tensors = weights::load(path)?;
        if tensors.is_empty() || tensors.len() % 2 != 0 {
            return Err(Error::format(
                "encoder weights",
                "expected (weight, bias) tensor pairs",
            ));
        }
        let layers = tensors
            .chunks_exact(2)
            .map(|wb| ConvKernel::from_tensors(&wb[0], &wb[1], 1))
            .collect::<Result<Vec<_>>>()?;
        if layers[0].in_channels != 3 {
            return Err(Error::shape(
                "first encoder layer must take 3 input channels",
            ));
        }
        for pair in layers.windows(2) {
            if pair[0].out_channels != pair[1].in_channels {
                return Err(Error::shape("encoder layer channel counts do not chain"));
            }
        }
        Ok(Self::Loaded(layers))
    }

    pub fn channels(&self) -> usize {
        match self {
            Self::IdentityRgb => 3,
            Self::FilterBank => 12,
            Self::Loaded(layers) => layers.last().map_or(3, |l| l.out_channels),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::IdentityRgb => "identity-rgb",
            Self::FilterBank => "filter-bank",
            Self::Loaded(_) => "loaded-weights",
        }
    }
}

pub fn encode(img: &Image, spec: &EncoderSpec, scale: usize) -> Result<FeatureMap> {
    if !SCALES.contains(&scale) {
        return Err(Error::config(format!(
            "encoder scale {scale} not in {{1,2,4}}"
        )));
    }
    let rgb = img.to_feature();
    let full = match spec {
        EncoderSpec::IdentityRgb => rgb,
        EncoderSpec::FilterBank => filter_bank(&rgb)?,
        EncoderSpec::Loaded(layers) => {
            let mut f = rgb;
            for (n, layer) in layers.iter().enumerate() {
                f = conv2d(&f, layer)?;
                if n + 1 < layers.len() {
                    f = f.map(|v| v.max(0.0));
                }
            }
            f
        }
    };
    mean_pool(&full, scale)
}

/// Mean over non-overlapping `s x s` cells, reflect-padding the bottom/right edge.
pub fn mean_pool(f: &FeatureMap, s: usize) -> Result<FeatureMap> {
    if s == 1 {
        return Ok(f.clone());
    }
    let (h, w) = (f.height(), f.width());
    let padded = f.reflect_pad(h.next_multiple_of(s) - h, w.next_multiple_of(s) - w)?;
    let (oh, ow) = (padded.height() / s, padded.width() / s);
    let norm = 1.0 / (s * s) as f32;
    Ok(FeatureMap::from_fn(f.channels(), oh, ow, |c, y, x| {
        let mut acc = 0.0f32;
        for dy in 0..s {
            for dx in 0..s {
                acc += padded.get(c, y * s + dy, x * s + dx);
            }
        }
        acc * norm
    }))
}

fn filter_bank(rgb: &FeatureMap) -> Result<FeatureMap> {
    let (h, w) = (rgb.height(), rgb.width());
    let at = |c: usize, y: isize, x: isize| rgb.get(c, reflect_signed(y, h), reflect_signed(x, w));
    let gx = FeatureMap::from_fn(3, h, w, |c, y, x| {
        let (y, x) = (y as isize, x as isize);
        0.5 * (at(c, y, x + 1) - at(c, y, x - 1))
    });
    let gy = FeatureMap::from_fn(3, h, w, |c, y, x| {
        let (y, x) = (y as isize, x as isize);
        0.5 * (at(c, y + 1, x) - at(c, y - 1, x))
    });
    const G: [f32; 3] = [0.25, 0.5, 0.25];
    let blur = FeatureMap::from_fn(3, h, w, |c, y, x| {
        let (y, x) = (y as isize, x as isize);
        let mut acc = 0.0;
        for (i, gy) in G.iter().enumerate() {
            for (j, gx) in G.iter().enumerate() {
                acc += gy * gx * at(c, y + i as isize - 1, x + j as isize - 1);
            }
        }
        acc
    });
    rgb.concat_channels(&gx)?
        .concat_channels(&gy)?
        .concat_channels(&blur)
}
