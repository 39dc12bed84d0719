//! Reconstruction and image-quality metrics, and op/FLOP reporting.

use std::fmt::Write as _;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::feature::Image;
use crate::matching::ComplexityReport;

fn same_shape(a: &Image, b: &Image) -> Result<()> {
    if (a.height(), a.width()) != (b.height(), b.width()) {
        return Err(Error::shape(format!(
            "images differ in size: {}x{} vs {}x{}",
            a.height(),
            a.width(),
            b.height(),
            b.width()
        )));
    }
    Ok(())
}

/// Mean absolute difference over all channel values.
pub fn l1_loss(a: &Image, b: &Image) -> Result<f64> {
    same_shape(a, b)?;
    let sum: f64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| (x as f64 - y as f64).abs())
        .sum();
    Ok(sum / a.data().len() as f64)
}

/// BT.601 luma on the `[16, 235]` scale from `[0, 1]` RGB, unrounded.
pub fn luma(img: &Image) -> Vec<f64> {
    img.data()
        .chunks_exact(3)
        .map(|p| 16.0 + 65.481 * p[0] as f64 + 128.553 * p[1] as f64 + 24.966 * p[2] as f64)
        .collect()
}

/// PSNR of the luma channels with peak 255. Identical images give `+inf`.
pub fn psnr_y(a: &Image, b: &Image) -> Result<f64> {
    same_shape(a, b)?;
    let (ya, yb) = (luma(a), luma(b));
    let mse = ya
        .iter()
        .zip(&yb)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        / ya.len() as f64;
    Ok(psnr_from_mse(mse))
}

pub fn psnr_from_mse(mse: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (255.0f64 * 255.0 / mse).log10()
    }
}

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;

fn gaussian_window() -> [f64; SSIM_WINDOW] {
    let r = (SSIM_WINDOW / 2) as f64;
    let mut g = [0.0; SSIM_WINDOW];
    for (i, v) in g.iter_mut().enumerate() {
        let x = i as f64 - r;
        *v = (-x * x / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    let s: f64 = g.iter().sum();
    g.iter_mut().for_each(|v| *v /= s);
    g
}

/// Separable Gaussian filter keeping only windows fully inside the image.
fn filter_valid(x: &[f64], h: usize, w: usize, g: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let (oh, ow) = (h - SSIM_WINDOW + 1, w - SSIM_WINDOW + 1);
    let mut rows = vec![0.0; h * ow];
    for y in 0..h {
        for ox in 0..ow {
            rows[y * ow + ox] = g
                .iter()
                .enumerate()
                .map(|(k, gk)| gk * x[y * w + ox + k])
                .sum();
        }
    }
    let mut out = vec![0.0; oh * ow];
    for oy in 0..oh {
        for ox in 0..ow {
            out[oy * ow + ox] = g
                .iter()
                .enumerate()
                .map(|(k, gk)| gk * rows[(oy + k) * ow + ox])
                .sum();
        }
    }
    out
}

/// Mean SSIM of the luma channels: 11x11 Gaussian window (sigma 1.5),
/// K1 = 0.01, K2 = 0.03, dynamic range 255, population moments, valid windows.
pub fn ssim_y(a: &Image, b: &Image) -> Result<f64> {
    same_shape(a, b)?;
    let (h, w) = (a.height(), a.width());
    if h < SSIM_WINDOW || w < SSIM_WINDOW {
        return Err(Error::shape(format!(
            "SSIM needs at least {SSIM_WINDOW}x{SSIM_WINDOW}, got {h}x{w}"
        )));
    }
    ssim_plane(&luma(a), &luma(b), h, w)
}

pub(crate) fn ssim_plane(x: &[f64], y: &[f64], h: usize, w: usize) -> Result<f64> {
    let g = gaussian_window();
    let c1 = (0.01f64 * 255.0).powi(2);
    let c2 = (0.03f64 * 255.0).powi(2);
    let prod = |f: fn(f64, f64) -> f64| x.iter().zip(y).map(|(&p, &q)| f(p, q)).collect::<Vec<_>>();
    let mx = filter_valid(x, h, w, &g);
    let my = filter_valid(y, h, w, &g);
    let mxx = filter_valid(&prod(|p, _| p * p), h, w, &g);
    let myy = filter_valid(&prod(|_, q| q * q), h, w, &g);
    let mxy = filter_valid(&prod(|p, q| p * q), h, w, &g);
    let mut total = 0.0;
    for i in 0..mx.len() {
        let (ux, uy) = (mx[i], my[i]);
        let vx = mxx[i] - ux * ux;
        let vy = myy[i] - uy * uy;
        let cxy = mxy[i] - ux * uy;
        total +=
            ((2.0 * ux * uy + c1) * (2.0 * cxy + c2)) / ((ux * ux + uy * uy + c1) * (vx + vy + c2));
    }
    Ok((total / mx.len() as f64).clamp(-1.0, 1.0))
}

fn ser_db<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_infinite() {
        s.serialize_str("inf")
    } else {
        s.serialize_f64(*v)
    }
}

fn fmt_db(v: f64) -> String {
    if v.is_infinite() {
        "inf".into()
    } else {
        format!("{v:.4}")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ImageMetrics {
    pub name: String,
    pub l1: f64,
    #[serde(serialize_with = "ser_db")]
    pub psnr_y: f64,
    pub ssim_y: f64,
}

impl ImageMetrics {
    pub fn compute(name: impl Into<String>, output: &Image, target: &Image) -> Result<Self> {
        Ok(Self {
            name: name.into(),
            l1: l1_loss(output, target)?,
            psnr_y: psnr_y(output, target)?,
            ssim_y: ssim_y(output, target)?,
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct MetricReport {
    pub images: Vec<ImageMetrics>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricSummary {
    pub count: usize,
    pub l1: f64,
    #[serde(serialize_with = "ser_db")]
    pub psnr_y: f64,
    pub ssim_y: f64,
}

impl MetricReport {
    pub fn push(&mut self, m: ImageMetrics) {
        self.images.push(m);
    }

    pub fn summary(&self) -> MetricSummary {
        let n = self.images.len().max(1) as f64;
        let mean = |f: fn(&ImageMetrics) -> f64| self.images.iter().map(f).sum::<f64>() / n;
        MetricSummary {
            count: self.images.len(),
            l1: mean(|m| m.l1),
            psnr_y: mean(|m| m.psnr_y),
            ssim_y: mean(|m| m.ssim_y),
        }
    }

    pub fn to_table(&self) -> String {
        let width = self
            .images
            .iter()
            .map(|m| m.name.len())
            .max()
            .unwrap_or(0)
            .max(4);
        let mut s = format!(
            "{:<width$}  {:>10}  {:>10}  {:>8}\n",
            "name", "l1", "psnr_y", "ssim_y"
        );
        let mut row = |name: &str, l1: f64, p: f64, q: f64| {
            let _ = writeln!(s, "{name:<width$}  {l1:>10.6}  {:>10}  {q:>8.5}", fmt_db(p));
        };
        for m in &self.images {
            row(&m.name, m.l1, m.psnr_y, m.ssim_y);
        }
        let sum = self.summary();
        row("mean", sum.l1, sum.psnr_y, sum.ssim_y);
        s
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({ "images": self.images, "summary": self.summary() })
    }
}

/// Published matching-step GFLOPs for a 128x128 LR and 512x512 reference input.
pub const REFERENCE_MATCHING_GFLOPS: [(&str, f64); 3] = [
    ("coarse-to-fine", 8.84),
    ("TTSR", 618.48),
    ("SRNTT", 6005.78),
];

/// Aligned text report of similarity ops and FLOPs under both multiply-add
/// conventions, with the dense-baseline ratio and published reference rows.
pub fn flops_report(r: &ComplexityReport) -> String {
    let mut s = String::new();
    let g = |ops: u64, per: u64| (ops * per) as f64 / 1e9;
    let (m2, m1) = (r.flops_per_op_mac2(), r.flops_per_op_mac1());
    let _ = writeln!(
        s,
        "K={} m={} n={} n'={} dilations={} patch={} C={}",
        r.blocks,
        r.lr_patches,
        r.ref_patches,
        r.ref_block_patches,
        r.dilation_count,
        r.patch,
        r.channels
    );
    let _ = writeln!(
        s,
        "{:<14} {:>16} {:>14} {:>14}",
        "stage", "similarity ops", "GFLOPs(mac=2)", "GFLOPs(mac=1)"
    );
    for (name, ops) in [
        ("coarse", r.coarse_ops),
        ("fine", r.fine_ops),
        ("total", r.total_ops),
        ("dense", r.dense_ops),
    ] {
        let _ = writeln!(
            s,
            "{name:<14} {ops:>16} {:>14.4} {:>14.4}",
            g(ops, m2),
            g(ops, m1)
        );
    }
    let ratio = r.reduction();
    let _ = write!(s, "dense / coarse-to-fine: {ratio:.2}x");
    if ratio <= 1.0 {
        s.push_str(" (no acceleration)");
    }
    s.push('\n');
    let _ = writeln!(s, "published matching GFLOPs:");
    for (name, v) in REFERENCE_MATCHING_GFLOPS {
        let _ = writeln!(s, "  {name:<16} {v:>10.2}");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_is_normalized_and_symmetric() {
        let g = gaussian_window();
        assert!((g.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(g[0], g[10]);
        assert!(g[5] > g[4]);
    }

    #[test]
    fn psnr_edge_cases() {
        assert_eq!(psnr_from_mse(0.0), f64::INFINITY);
        assert_eq!(psnr_from_mse(255.0 * 255.0), 0.0);
    }
}
