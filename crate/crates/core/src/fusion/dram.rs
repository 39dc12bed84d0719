//! Dual residual aggregation: refine Ref and LR features against each other
//! and merge them at twice the LR resolution.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::feature::FeatureMap;
use crate::fusion::{conv2d, deconv2d, ConvKernel, DeconvKernel};
use crate::weights;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DramMode {
    FixedDefault,
    Seeded(u64),
    Loaded,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DramWeights {
    /// Stride-2 convolution shared by both residuals.
    pub conv_down: ConvKernel,
    pub deconv_ref: DeconvKernel,
    pub deconv_lr: DeconvKernel,
    /// Stride-1 `2C -> C` convolution over `concat(F_Ref', F_LR')`.
    pub conv_merge: ConvKernel,
    pub mode: DramMode,
    /// When false, `F_Ref' = F_Ref`.
    pub ref_branch: bool,
    /// When false, `F_LR' = Deconv(F_LR)`.
    pub lr_branch: bool,
}

impl DramWeights {
    /// 2x2 mean pooling down, bilinear up, and a merge that averages the two
    /// refined features channel by channel.
    pub fn fixed_default(channels: usize) -> Self {
        let c = channels;
        let mut taps = vec![0.0; c * 2 * c * 9];
        for o in 0..c {
            taps[(o * 2 * c + o) * 9 + 4] = 0.5;
            taps[(o * 2 * c + c + o) * 9 + 4] = 0.5;
        }
        let merge =
            ConvKernel::new(c, 2 * c, 3, 1, taps, vec![0.0; c]).expect("valid merge kernel");
        Self::assemble(
            ConvKernel::avg_pool2(c),
            DeconvKernel::bilinear2(c),
            DeconvKernel::bilinear2(c),
            merge,
            DramMode::FixedDefault,
        )
    }

    /// `uniform(-0.1, 0.1)` taps in the order down, up-ref, up-lr, merge; zero bias.
    pub fn seeded(channels: usize, seed: u64) -> Self {
        let c = channels;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let down = ConvKernel::seeded(c, c, 3, 2, &mut rng);
        let up_ref = DeconvKernel::seeded(c, c, 4, &mut rng);
        let up_lr = DeconvKernel::seeded(c, c, 4, &mut rng);
        let merge = ConvKernel::seeded(c, 2 * c, 3, 1, &mut rng);
        Self::assemble(down, up_ref, up_lr, merge, DramMode::Seeded(seed))
    }

    /// Four `(weight, bias)` pairs: down, up-ref, up-lr, merge.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let t = weights::load(path)?;
        if t.len() != 8 {
            return Err(Error::format(
                "DRAM weights",
                "expected four (weight, bias) pairs",
            ));
        }
        let w = Self::assemble(
            ConvKernel::from_tensors(&t[0], &t[1], 2)?,
            DeconvKernel::from_tensors(&t[2], &t[3])?,
            DeconvKernel::from_tensors(&t[4], &t[5])?,
            ConvKernel::from_tensors(&t[6], &t[7], 1)?,
            DramMode::Loaded,
        );
        w.check()?;
        Ok(w)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut t = Vec::with_capacity(8);
        t.extend(self.conv_down.to_tensors());
        t.extend(self.deconv_ref.to_tensors());
        t.extend(self.deconv_lr.to_tensors());
        t.extend(self.conv_merge.to_tensors());
        weights::save(path, &t)
    }

    fn assemble(
        conv_down: ConvKernel,
        deconv_ref: DeconvKernel,
        deconv_lr: DeconvKernel,
        conv_merge: ConvKernel,
        mode: DramMode,
    ) -> Self {
        Self {
            conv_down,
            deconv_ref,
            deconv_lr,
            conv_merge,
            mode,
            ref_branch: true,
            lr_branch: true,
        }
    }

    pub fn channels(&self) -> usize {
        self.conv_down.in_channels
    }

    pub fn check(&self) -> Result<()> {
        let c = self.channels();
        let ok = self.conv_down.stride == 2
            && self.conv_down.out_channels == c
            && (self.deconv_ref.in_channels, self.deconv_ref.out_channels) == (c, c)
            && (self.deconv_lr.in_channels, self.deconv_lr.out_channels) == (c, c)
            && (self.conv_merge.in_channels, self.conv_merge.out_channels) == (2 * c, c)
            && self.conv_merge.stride == 1;
        if ok {
            Ok(())
        } else {
            Err(Error::shape("DRAM kernel channel counts do not chain"))
        }
    }
}

/// Every intermediate of one forward pass.
#[derive(Clone, Debug)]
pub struct DramTrace {
    pub res_ref: FeatureMap,
    pub res_lr: FeatureMap,
    pub ref_refined: FeatureMap,
    pub lr_refined: FeatureMap,
    pub output: FeatureMap,
}

pub fn dram_trace(lr: &FeatureMap, reference: &FeatureMap, w: &DramWeights) -> Result<DramTrace> {
    w.check()?;
    let (c, h, wd) = lr.shape();
    if c != w.channels() || reference.shape() != (c, 2 * h, 2 * wd) {
        return Err(Error::shape(format!(
            "DRAM with {} channels needs reference {:?}, got LR {:?} and reference {:?}",
            w.channels(),
            (c, 2 * h, 2 * wd),
            lr.shape(),
            reference.shape()
        )));
    }
    let down = conv2d(reference, &w.conv_down)?;
    let res_ref = down.sub(lr)?;
    let res_lr = lr.sub(&down)?;
    let ref_refined = if w.ref_branch {
        reference.add(&deconv2d(&res_ref, &w.deconv_ref)?)?
    } else {
        reference.clone()
    };
    let lr_refined = if w.lr_branch {
        deconv2d(&lr.add(&res_lr)?, &w.deconv_lr)?
    } else {
        deconv2d(lr, &w.deconv_lr)?
    };
    let output = conv2d(&ref_refined.concat_channels(&lr_refined)?, &w.conv_merge)?;
    Ok(DramTrace {
        res_ref,
        res_lr,
        ref_refined,
        lr_refined,
        output,
    })
}

/// Fuse `lr` (`C x H x W`) with `reference` (`C x 2H x 2W`) into a
/// `C x 2H x 2W` map.
pub fn dram_forward(
    lr: &FeatureMap,
    reference: &FeatureMap,
    w: &DramWeights,
) -> Result<FeatureMap> {
    Ok(dram_trace(lr, reference, w)?.output)
}
