//! Separable Catmull-Rom resampling.
//!
//! Downscaling widens the kernel support by the reduction ratio so the result
//! is low-pass filtered before decimation. Taps falling outside the image are
//! dropped and the remaining weights renormalized, so constants are preserved
//! exactly at every factor.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::feature::Image;

/// Catmull-Rom `a` parameter.
pub const CUBIC_A: f64 = -0.5;

/// A positive rational resampling factor, `num / den`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ScaleFactor {
    pub num: u32,
    pub den: u32,
}

impl ScaleFactor {
    pub const ONE: Self = Self { num: 1, den: 1 };

    pub fn new(num: u32, den: u32) -> Result<Self> {
        if num == 0 || den == 0 {
            return Err(Error::config(format!(
                "scale factor {num}/{den} must be positive"
            )));
        }
        Ok(Self { num, den })
    }

    /// Output length for an input of `len` samples, rounded to nearest.
    pub fn apply(self, len: usize) -> usize {
        let n = len as u64 * self.num as u64;
        ((n + self.den as u64 / 2) / self.den as u64) as usize
    }
}

impl fmt::Display for ScaleFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl FromStr for ScaleFactor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parse = |t: &str| {
            t.trim()
                .parse::<u32>()
                .map_err(|_| Error::config(format!("bad scale factor {s:?}")))
        };
        match s.split_once('/') {
            Some((n, d)) => Self::new(parse(n)?, parse(d)?),
            None => Self::new(parse(s)?, 1),
        }
    }
}

#[inline]
pub fn cubic_kernel(x: f64) -> f64 {
    let x = x.abs();
    if x < 1.0 {
        ((CUBIC_A + 2.0) * x - (CUBIC_A + 3.0)) * x * x + 1.0
    } else if x < 2.0 {
        (((x - 5.0) * x + 8.0) * x - 4.0) * CUBIC_A
    } else {
        0.0
    }
}

/// Per-output-sample contributions: first source index and normalized weights.
#[derive(Debug, Clone)]
pub(crate) struct Taps {
    pub start: usize,
    pub weights: Vec<f64>,
}

pub(crate) fn axis_taps(in_len: usize, out_len: usize) -> Vec<Taps> {
    let ratio = in_len as f64 / out_len as f64;
    let support_scale = ratio.max(1.0);
    let support = 2.0 * support_scale;
    (0..out_len)
        .map(|o| {
            let center = (o as f64 + 0.5) * ratio;
            let lo = ((center - support).floor().max(0.0)) as usize;
            let hi = ((center + support).ceil() as usize).min(in_len);
            let mut weights: Vec<f64> = (lo..hi)
                .map(|i| cubic_kernel((i as f64 + 0.5 - center) / support_scale))
                .collect();
            let sum: f64 = weights.iter().sum();
            if sum != 0.0 {
                weights.iter_mut().for_each(|w| *w /= sum);
            }
            Taps { start: lo, weights }
        })
        .collect()
}

/// Resample `img` by `factor` on both axes. Output values are clamped to `[0, 1]`.
pub fn bicubic_resize(img: &Image, factor: ScaleFactor) -> Result<Image> {
    let out_h = factor.apply(img.height());
    let out_w = factor.apply(img.width());
    resize_to(img, out_h, out_w)
}

/// Resample `img` to exactly `out_h x out_w`.
pub fn resize_to(img: &Image, out_h: usize, out_w: usize) -> Result<Image> {
    if out_h == 0 || out_w == 0 {
        return Err(Error::Degenerate(format!(
            "resize of {}x{} to {out_h}x{out_w}",
            img.height(),
            img.width()
        )));
    }
    let (in_h, in_w) = (img.height(), img.width());
    let xt = axis_taps(in_w, out_w);
    let yt = axis_taps(in_h, out_h);
    let src = img.data();

    // horizontal pass: in_h x out_w x 3
    let mut tmp = vec![0.0f64; in_h * out_w * 3];
    for y in 0..in_h {
        for (ox, t) in xt.iter().enumerate() {
            let mut acc = [0.0f64; 3];
            for (k, &w) in t.weights.iter().enumerate() {
                let o = (y * in_w + t.start + k) * 3;
                for c in 0..3 {
                    acc[c] += w * src[o + c] as f64;
                }
            }
            tmp[(y * out_w + ox) * 3..][..3].copy_from_slice(&acc);
        }
    }

    let mut out = Vec::with_capacity(out_h * out_w * 3);
    for t in &yt {
        for ox in 0..out_w {
            let mut acc = [0.0f64; 3];
            for (k, &w) in t.weights.iter().enumerate() {
                let o = ((t.start + k) * out_w + ox) * 3;
                for c in 0..3 {
                    acc[c] += w * tmp[o + c];
                }
            }
            out.extend(acc.iter().map(|&v| (v as f32).clamp(0.0, 1.0)));
        }
    }
    Image::from_vec(out_h, out_w, out)
}
