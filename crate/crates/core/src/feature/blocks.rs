use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feature::FeatureMap;

/// Geometry of a non-overlapping block tiling over a (reflect-padded) map.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockPartition {
    pub block_h: usize,
    pub block_w: usize,
    pub grid_rows: usize,
    pub grid_cols: usize,
    /// Dimensions of the map before padding.
    pub orig_h: usize,
    pub orig_w: usize,
}

impl BlockPartition {
    pub fn new(height: usize, width: usize, block_h: usize, block_w: usize) -> Result<Self> {
        if block_h == 0 || block_w == 0 {
            return Err(Error::config("block size must be positive"));
        }
        if height == 0 || width == 0 {
            return Err(Error::Degenerate(format!("map {height}x{width}")));
        }
        if block_h > height || block_w > width {
            return Err(Error::shape(format!(
                "block {block_h}x{block_w} larger than feature map {height}x{width}"
            )));
        }
        Ok(Self {
            block_h,
            block_w,
            grid_rows: height.div_ceil(block_h),
            grid_cols: width.div_ceil(block_w),
            orig_h: height,
            orig_w: width,
        })
    }

    /// Total number of blocks `K`.
    #[inline]
    pub fn count(&self) -> usize {
        self.grid_rows * self.grid_cols
    }

    #[inline]
    pub fn padded_h(&self) -> usize {
        self.grid_rows * self.block_h
    }

    #[inline]
    pub fn padded_w(&self) -> usize {
        self.grid_cols * self.block_w
    }

    #[inline]
    pub fn pad_bottom(&self) -> usize {
        self.padded_h() - self.orig_h
    }

    #[inline]
    pub fn pad_right(&self) -> usize {
        self.padded_w() - self.orig_w
    }

    /// Top-left corner of block `k` in padded coordinates.
    #[inline]
    pub fn anchor(&self, k: usize) -> (usize, usize) {
        (
            (k / self.grid_cols) * self.block_h,
            (k % self.grid_cols) * self.block_w,
        )
    }

    /// The same grid with every length multiplied by `s`.
    pub fn scaled(&self, s: usize) -> Self {
        Self {
            block_h: self.block_h * s,
            block_w: self.block_w * s,
            grid_rows: self.grid_rows,
            grid_cols: self.grid_cols,
            orig_h: self.orig_h * s,
            orig_w: self.orig_w * s,
        }
    }
}

/// Split `f` into row-major non-overlapping blocks, reflect-padding the bottom
/// and right edges when the size is not a multiple of the block.
pub fn unfold_blocks(
    f: &FeatureMap,
    block_h: usize,
    block_w: usize,
) -> Result<(BlockPartition, Vec<FeatureMap>)> {
    let part = BlockPartition::new(f.height(), f.width(), block_h, block_w)?;
    let padded = f.reflect_pad(part.pad_bottom(), part.pad_right())?;
    let blocks = (0..part.count())
        .map(|k| {
            let (y, x) = part.anchor(k);
            padded.crop(y, x, block_h, block_w)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((part, blocks))
}

/// Inverse of [`unfold_blocks`]: tile the blocks back and crop to `crop`
/// (`(height, width)`).
pub fn fold_blocks(
    blocks: &[FeatureMap],
    part: &BlockPartition,
    crop: (usize, usize),
) -> Result<FeatureMap> {
    if blocks.len() != part.count() {
        return Err(Error::shape(format!(
            "expected {} blocks, got {}",
            part.count(),
            blocks.len()
        )));
    }
    let channels = blocks[0].channels();
    if let Some(b) = blocks
        .iter()
        .find(|b| b.shape() != (channels, part.block_h, part.block_w))
    {
        return Err(Error::shape(format!(
            "block shape {:?} differs from {:?}",
            b.shape(),
            (channels, part.block_h, part.block_w)
        )));
    }
    let (crop_h, crop_w) = crop;
    if crop_h == 0 || crop_w == 0 || crop_h > part.padded_h() || crop_w > part.padded_w() {
        return Err(Error::shape(format!(
            "crop {crop_h}x{crop_w} outside folded {}x{}",
            part.padded_h(),
            part.padded_w()
        )));
    }
    let mut out = FeatureMap::zeros(channels, crop_h, crop_w);
    for (k, block) in blocks.iter().enumerate() {
        let (top, left) = part.anchor(k);
        for c in 0..channels {
            for by in 0..part.block_h {
                let y = top + by;
                if y >= crop_h {
                    break;
                }
                for bx in 0..part.block_w {
                    let x = left + bx;
                    if x >= crop_w {
                        break;
                    }
                    out.set(c, y, x, block.get(c, by, bx));
                }
            }
        }
    }
    Ok(out)
}
