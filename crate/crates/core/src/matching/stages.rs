//! Coarse block matching and fine patch matching.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::feature::{BlockPartition, FeatureMap};
use crate::matching::cosine::{best_match, unit_dot, unit_patch, PatchTable};
use crate::matching::{MatchConfig, OpCounter};

/// A rectangular view into a feature map.
#[derive(Clone, Copy, Debug)]
pub struct Window<'a> {
    pub map: &'a FeatureMap,
    pub top: usize,
    pub left: usize,
    pub height: usize,
    pub width: usize,
}

impl<'a> Window<'a> {
    pub fn new(
        map: &'a FeatureMap,
        top: usize,
        left: usize,
        height: usize,
        width: usize,
    ) -> Result<Self> {
        if top + height > map.height() || left + width > map.width() {
            return Err(Error::shape(format!(
                "window {height}x{width}@({top},{left}) outside {}x{} map",
                map.height(),
                map.width()
            )));
        }
        Ok(Self {
            map,
            top,
            left,
            height,
            width,
        })
    }

    pub fn whole(map: &'a FeatureMap) -> Self {
        Self {
            map,
            top: 0,
            left: 0,
            height: map.height(),
            width: map.width(),
        }
    }

    pub fn to_map(&self) -> FeatureMap {
        self.map
            .crop(self.top, self.left, self.height, self.width)
            .expect("window is in bounds")
    }

    pub(crate) fn rect(&self) -> (usize, usize, usize, usize) {
        (self.top, self.left, self.height, self.width)
    }
}

/// The LR feature map reflect-padded to whole blocks, with its tiling.
#[derive(Clone, Debug)]
pub struct LrBlocks {
    pub partition: BlockPartition,
    pub padded: FeatureMap,
}

impl LrBlocks {
    pub fn new(lr: &FeatureMap, block: usize) -> Result<Self> {
        let partition = BlockPartition::new(lr.height(), lr.width(), block, block)?;
        let padded = lr.reflect_pad(partition.pad_bottom(), partition.pad_right())?;
        Ok(Self { partition, padded })
    }

    pub fn block(&self, k: usize) -> Window<'_> {
        let (top, left) = self.partition.anchor(k);
        Window {
            map: &self.padded,
            top,
            left,
            height: self.partition.block_h,
            width: self.partition.block_w,
        }
    }
}

/// An LR block paired with its reference search block.
///
/// The scale-`s` reference block is the `s*d_y x s*d_x` window anchored at
/// `s * ref_lr` anchor in the scale-`s` reference map.
#[derive(Clone, Copy, Debug)]
pub struct BlockTriple<'a> {
    pub k: usize,
    pub lr: Window<'a>,
    pub ref_lr: Window<'a>,
    /// Center of the winning coarse candidate in reference coordinates.
    pub center: (usize, usize),
    /// Summed similarity of the winning candidate over dilations.
    pub score: f32,
}

impl<'a> BlockTriple<'a> {
    pub fn ref_block_at<'m>(&self, map: &'m FeatureMap, s: usize) -> Result<Window<'m>> {
        Window::new(
            map,
            s * self.ref_lr.top,
            s * self.ref_lr.left,
            s * self.ref_lr.height,
            s * self.ref_lr.width,
        )
    }
}

/// Top-left of a `d`-long window centered on `c`, clamped into `0..=len-d`.
#[inline]
fn centered_start(c: usize, d: usize, len: usize) -> usize {
    (c as isize - (d / 2) as isize).clamp(0, (len - d) as isize) as usize
}

/// Stage 1: pick a reference search block for every LR block.
///
/// The LR block's center patch at each dilation is compared with every
/// reference patch at the same dilation. Candidates are identified by patch
/// center; a candidate's score is the sum of its similarities over the
/// dilations at which its footprint fits. Ties go to the lowest row-major
/// center index.
pub fn coarse_match<'a>(
    lr: &'a LrBlocks,
    ref_down: &'a FeatureMap,
    cfg: &MatchConfig,
    counter: &OpCounter,
) -> Result<Vec<BlockTriple<'a>>> {
    cfg.validate()?;
    if lr.padded.channels() != ref_down.channels() {
        return Err(Error::shape(format!(
            "LR has {} channels, reference {}",
            lr.padded.channels(),
            ref_down.channels()
        )));
    }
    if lr.partition.block_h != cfg.lr_block {
        return Err(Error::config("LR blocks do not match lr_block"));
    }
    let (rh, rw) = (ref_down.height(), ref_down.width());
    if cfg.max_footprint() > rh || cfg.max_footprint() > rw {
        return Err(Error::shape(format!(
            "reference {rh}x{rw} smaller than footprint {}",
            cfg.max_footprint()
        )));
    }
    let (dy, dx) = cfg.ref_block_dims((lr.partition.orig_h, lr.partition.orig_w), (rh, rw))?;
    let dilations = cfg.dilation_set();
    let tables = dilations
        .iter()
        .map(|&d| PatchTable::build(ref_down, (0, 0, rh, rw), cfg.patch, d))
        .collect::<Result<Vec<_>>>()?;
    let b = cfg.lr_block;

    Ok((0..lr.partition.count())
        .into_par_iter()
        .map(|k| {
            let block = lr.block(k);
            let mut score = vec![0.0f32; rh * rw];
            let mut seen = vec![false; rh * rw];
            let mut ops = 0u64;
            for (&d, table) in dilations.iter().zip(&tables) {
                let fp = cfg.footprint(d);
                let a = (b - fp) / 2;
                let c_off = (fp - 1) / 2;
                let query = unit_patch(&lr.padded, block.top + a, block.left + a, cfg.patch, d);
                for (j, cand) in table.iter().enumerate() {
                    let (ay, ax) = (j / table.cols, j % table.cols);
                    let idx = (ay + c_off) * rw + ax + c_off;
                    score[idx] += unit_dot(&query, cand);
                    seen[idx] = true;
                }
                ops += table.count() as u64;
            }
            counter.add_coarse(ops);

            let mut best = (0usize, f32::NEG_INFINITY);
            for (idx, (&s, &ok)) in score.iter().zip(&seen).enumerate() {
                if ok && s > best.1 {
                    best = (idx, s);
                }
            }
            let center = (best.0 / rw, best.0 % rw);
            let ref_lr = Window {
                map: ref_down,
                top: centered_start(center.0, dy, rh),
                left: centered_start(center.1, dx, rw),
                height: dy,
                width: dx,
            };
            BlockTriple {
                k,
                lr: block,
                ref_lr,
                center,
                score: best.1,
            }
        })
        .collect())
}

/// Stage 2: exhaustive patch matching inside one block pair.
///
/// Returns `(D^k, R^k)`, one entry per stride-1 LR patch fully inside the LR
/// block, row-major.
pub fn fine_match(
    triple: &BlockTriple<'_>,
    cfg: &MatchConfig,
    counter: &OpCounter,
) -> Result<(Vec<u32>, Vec<f32>)> {
    let p = cfg.patch;
    let lr = PatchTable::build(triple.lr.map, triple.lr.rect(), p, 1)?;
    let reference = PatchTable::build(triple.ref_lr.map, triple.ref_lr.rect(), p, 1)?;
    let mut indices = Vec::with_capacity(lr.count());
    let mut scores = Vec::with_capacity(lr.count());
    for q in lr.iter() {
        let (j, r) = best_match(q, reference.iter());
        indices.push(j);
        scores.push(r);
    }
    counter.add_fine((lr.count() * reference.count()) as u64);
    Ok((indices, scores))
}
