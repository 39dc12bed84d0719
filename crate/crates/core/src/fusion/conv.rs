//! Direct 2-D convolution and stride-2 transposed convolution.
//!
//! Accumulation order is fixed: bias first, then input channels in order, then
//! kernel taps row-major, each applied across the output plane row-major.

use rand::Rng;

use crate::error::{Error, Result};
use crate::feature::FeatureMap;
use crate::weights::Tensor;

/// Cross-correlation kernel, taps laid out `[out][in][ky][kx]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvKernel {
    pub out_channels: usize,
    pub in_channels: usize,
    pub size: usize,
    pub stride: usize,
    pub taps: Vec<f32>,
    pub bias: Vec<f32>,
}

impl ConvKernel {
    pub fn new(
        out_channels: usize,
        in_channels: usize,
        size: usize,
        stride: usize,
        taps: Vec<f32>,
        bias: Vec<f32>,
    ) -> Result<Self> {
        if out_channels == 0 || in_channels == 0 || size == 0 {
            return Err(Error::config("convolution dimensions must be positive"));
        }
        match stride {
            1 if size.is_multiple_of(2) => {
                return Err(Error::config(format!(
                    "stride-1 convolution needs an odd kernel, got {size}"
                )))
            }
            1 | 2 => {}
            s => return Err(Error::config(format!("unsupported convolution stride {s}"))),
        }
        if taps.len() != out_channels * in_channels * size * size || bias.len() != out_channels {
            return Err(Error::shape(format!(
                "conv {out_channels}x{in_channels}x{size}x{size}: got {} taps, {} biases",
                taps.len(),
                bias.len()
            )));
        }
        if taps.iter().chain(&bias).any(|v| !v.is_finite()) {
            return Err(Error::Invariant("non-finite convolution weights".into()));
        }
        Ok(Self {
            out_channels,
            in_channels,
            size,
            stride,
            taps,
            bias,
        })
    }

    pub fn from_tensors(weight: &Tensor, bias: &Tensor, stride: usize) -> Result<Self> {
        match (weight.dims.as_slice(), bias.dims.as_slice()) {
            ([o, i, kh, kw], [b]) if kh == kw && b == o => Self::new(
                *o,
                *i,
                *kh,
                stride,
                weight.values.clone(),
                bias.values.clone(),
            ),
            _ => Err(Error::shape(format!(
                "conv weight {:?} / bias {:?} not [O,I,K,K] / [O]",
                weight.dims, bias.dims
            ))),
        }
    }

    pub fn to_tensors(&self) -> [Tensor; 2] {
        [
            Tensor {
                dims: vec![self.out_channels, self.in_channels, self.size, self.size],
                values: self.taps.clone(),
            },
            Tensor {
                dims: vec![self.out_channels],
                values: self.bias.clone(),
            },
        ]
    }

    /// 1x1 pass-through.
    pub fn identity(channels: usize) -> Self {
        Self::diagonal(channels, 1, 1, &[1.0])
    }

    /// 2x2 stride-2 mean pooling, channel by channel.
    pub fn avg_pool2(channels: usize) -> Self {
        Self::diagonal(channels, 2, 2, &[0.25; 4])
    }

    /// Same spatial taps on every channel, no cross-channel mixing.
    pub fn diagonal(channels: usize, size: usize, stride: usize, spatial: &[f32]) -> Self {
        assert_eq!(spatial.len(), size * size);
        let mut taps = vec![0.0; channels * channels * size * size];
        for c in 0..channels {
            let o = (c * channels + c) * size * size;
            taps[o..o + size * size].copy_from_slice(spatial);
        }
        Self::new(channels, channels, size, stride, taps, vec![0.0; channels])
            .expect("valid diagonal kernel")
    }

    /// Taps drawn from `uniform(-0.1, 0.1)`, zero bias.
    pub fn seeded<R: Rng>(
        out_channels: usize,
        in_channels: usize,
        size: usize,
        stride: usize,
        rng: &mut R,
    ) -> Self {
        let taps = (0..out_channels * in_channels * size * size)
            .map(|_| rng.random_range(-0.1f32..0.1))
            .collect();
        Self::new(
            out_channels,
            in_channels,
            size,
            stride,
            taps,
            vec![0.0; out_channels],
        )
        .expect("valid seeded kernel")
    }

    #[inline]
    pub fn padding(&self) -> usize {
        match self.stride {
            1 => self.size / 2,
            _ => (self.size - 1) / 2,
        }
    }

    pub fn output_size(&self, height: usize, width: usize) -> Result<(usize, usize)> {
        let p = self.padding();
        if height + 2 * p < self.size || width + 2 * p < self.size {
            return Err(Error::shape(format!(
                "{height}x{width} input smaller than {}x{} kernel",
                self.size, self.size
            )));
        }
        Ok((
            (height + 2 * p - self.size) / self.stride + 1,
            (width + 2 * p - self.size) / self.stride + 1,
        ))
    }

    #[inline]
    fn tap(&self, o: usize, i: usize, ky: usize, kx: usize) -> f32 {
        self.taps[((o * self.in_channels + i) * self.size + ky) * self.size + kx]
    }
}

/// Transposed convolution with stride 2, taps laid out `[in][out][ky][kx]`.
///
/// Padding `(k-1)/2` and output padding `2*pad + 2 - k` give exactly twice the
/// input size for any kernel size.
#[derive(Clone, Debug, PartialEq)]
pub struct DeconvKernel {
    pub in_channels: usize,
    pub out_channels: usize,
    pub size: usize,
    pub taps: Vec<f32>,
    pub bias: Vec<f32>,
}

impl DeconvKernel {
    pub fn new(
        in_channels: usize,
        out_channels: usize,
        size: usize,
        taps: Vec<f32>,
        bias: Vec<f32>,
    ) -> Result<Self> {
        if in_channels == 0 || out_channels == 0 || size < 2 {
            return Err(Error::config(
                "transposed convolution needs kernel size >= 2",
            ));
        }
        if taps.len() != out_channels * in_channels * size * size || bias.len() != out_channels {
            return Err(Error::shape(format!(
                "deconv {in_channels}x{out_channels}x{size}x{size}: got {} taps, {} biases",
                taps.len(),
                bias.len()
            )));
        }
        if taps.iter().chain(&bias).any(|v| !v.is_finite()) {
            return Err(Error::Invariant("non-finite deconvolution weights".into()));
        }
        Ok(Self {
            in_channels,
            out_channels,
            size,
            taps,
            bias,
        })
    }

    pub fn from_tensors(weight: &Tensor, bias: &Tensor) -> Result<Self> {
        match (weight.dims.as_slice(), bias.dims.as_slice()) {
            ([i, o, kh, kw], [b]) if kh == kw && b == o => {
                Self::new(*i, *o, *kh, weight.values.clone(), bias.values.clone())
            }
            _ => Err(Error::shape(format!(
                "deconv weight {:?} / bias {:?} not [I,O,K,K] / [O]",
                weight.dims, bias.dims
            ))),
        }
    }

    pub fn to_tensors(&self) -> [Tensor; 2] {
        [
            Tensor {
                dims: vec![self.in_channels, self.out_channels, self.size, self.size],
                values: self.taps.clone(),
            },
            Tensor {
                dims: vec![self.out_channels],
                values: self.bias.clone(),
            },
        ]
    }

    /// Channel-wise 2x bilinear upsampling taps (4x4, `[1,3,3,1]/4` per axis).
    pub fn bilinear2(channels: usize) -> Self {
        let k1 = [0.25f32, 0.75, 0.75, 0.25];
        let mut taps = vec![0.0; channels * channels * 16];
        for c in 0..channels {
            let o = (c * channels + c) * 16;
            for ky in 0..4 {
                for kx in 0..4 {
                    taps[o + ky * 4 + kx] = k1[ky] * k1[kx];
                }
            }
        }
        Self::new(channels, channels, 4, taps, vec![0.0; channels]).expect("valid bilinear kernel")
    }

    pub fn seeded<R: Rng>(
        in_channels: usize,
        out_channels: usize,
        size: usize,
        rng: &mut R,
    ) -> Self {
        let taps = (0..out_channels * in_channels * size * size)
            .map(|_| rng.random_range(-0.1f32..0.1))
            .collect();
        Self::new(
            in_channels,
            out_channels,
            size,
            taps,
            vec![0.0; out_channels],
        )
        .expect("valid seeded kernel")
    }

    #[inline]
    pub fn padding(&self) -> usize {
        (self.size - 1) / 2
    }

    #[inline]
    pub fn output_padding(&self) -> usize {
        2 * self.padding() + 2 - self.size
    }

    #[inline]
    fn tap(&self, i: usize, o: usize, ky: usize, kx: usize) -> f32 {
        self.taps[((i * self.out_channels + o) * self.size + ky) * self.size + kx]
    }
}

/// Valid output indices `o` with `0 <= stride*o + k - pad < len`.
#[inline]
fn valid_range(out_len: usize, len: usize, stride: usize, k: usize, pad: usize) -> (usize, usize) {
    let lo = if k >= pad {
        0
    } else {
        (pad - k).div_ceil(stride)
    };
    // largest o with stride*o + k - pad <= len - 1
    let hi = if len + pad < k + 1 {
        0
    } else {
        ((len - 1 + pad - k) / stride + 1).min(out_len)
    };
    (lo.min(hi), hi)
}

pub fn conv2d(f: &FeatureMap, kernel: &ConvKernel) -> Result<FeatureMap> {
    if f.channels() != kernel.in_channels {
        return Err(Error::shape(format!(
            "conv expects {} input channels, got {}",
            kernel.in_channels,
            f.channels()
        )));
    }
    let (h, w) = (f.height(), f.width());
    let (oh, ow) = kernel.output_size(h, w)?;
    let (s, p) = (kernel.stride, kernel.padding());
    let mut out = FeatureMap::zeros(kernel.out_channels, oh, ow);
    for o in 0..kernel.out_channels {
        let dst = out.plane_mut(o);
        dst.fill(kernel.bias[o]);
        for i in 0..kernel.in_channels {
            let src = f.plane(i);
            for ky in 0..kernel.size {
                let (y0, y1) = valid_range(oh, h, s, ky, p);
                for kx in 0..kernel.size {
                    let wv = kernel.tap(o, i, ky, kx);
                    if wv == 0.0 {
                        continue;
                    }
                    let (x0, x1) = valid_range(ow, w, s, kx, p);
                    for y in y0..y1 {
                        let iy = s * y + ky - p;
                        let row = &src[iy * w..(iy + 1) * w];
                        let drow = &mut dst[y * ow..(y + 1) * ow];
                        if s == 1 {
                            let ix0 = x0 + kx - p;
                            for (d, &v) in drow[x0..x1].iter_mut().zip(&row[ix0..ix0 + (x1 - x0)]) {
                                *d += wv * v;
                            }
                        } else {
                            for x in x0..x1 {
                                drow[x] += wv * row[s * x + kx - p];
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

pub fn deconv2d(f: &FeatureMap, kernel: &DeconvKernel) -> Result<FeatureMap> {
    if f.channels() != kernel.in_channels {
        return Err(Error::shape(format!(
            "deconv expects {} input channels, got {}",
            kernel.in_channels,
            f.channels()
        )));
    }
    let (h, w) = (f.height(), f.width());
    let (oh, ow) = (2 * h, 2 * w);
    let p = kernel.padding() as isize;
    let mut out = FeatureMap::zeros(kernel.out_channels, oh, ow);
    for o in 0..kernel.out_channels {
        let dst = out.plane_mut(o);
        dst.fill(kernel.bias[o]);
        for i in 0..kernel.in_channels {
            let src = f.plane(i);
            for ky in 0..kernel.size {
                for kx in 0..kernel.size {
                    let wv = kernel.tap(i, o, ky, kx);
                    if wv == 0.0 {
                        continue;
                    }
                    for iy in 0..h {
                        let oy = 2 * iy as isize - p + ky as isize;
                        if oy < 0 || oy >= oh as isize {
                            continue;
                        }
                        let drow = &mut dst[oy as usize * ow..(oy as usize + 1) * ow];
                        let srow = &src[iy * w..(iy + 1) * w];
                        for (ix, &v) in srow.iter().enumerate() {
                            let ox = 2 * ix as isize - p + kx as isize;
                            if ox >= 0 && ox < ow as isize {
                                drow[ox as usize] += wv * v;
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}
