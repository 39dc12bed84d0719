use crate::error::{Error, Result};
use crate::feature::FeatureMap;

/// A square sliding-window layout over a region.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PatchGrid {
    pub patch: usize,
    pub stride: usize,
    pub dilation: usize,
}

impl PatchGrid {
    pub fn dense(patch: usize) -> Self {
        Self {
            patch,
            stride: 1,
            dilation: 1,
        }
    }

    pub fn dilated(patch: usize, dilation: usize) -> Self {
        Self {
            patch,
            stride: 1,
            dilation,
        }
    }

    /// Side length of the area a patch touches: `(patch - 1) * dilation + 1`.
    #[inline]
    pub fn footprint(&self) -> usize {
        (self.patch - 1) * self.dilation + 1
    }

    /// Number of anchor rows and columns inside a `height x width` region.
    pub fn positions(&self, height: usize, width: usize) -> Result<(usize, usize)> {
        if self.patch == 0 || self.stride == 0 || self.dilation == 0 {
            return Err(Error::config(format!("invalid patch grid {self:?}")));
        }
        let fp = self.footprint();
        if fp > height || fp > width {
            return Err(Error::shape(format!(
                "patch footprint {fp} exceeds region {height}x{width}"
            )));
        }
        Ok((
            (height - fp) / self.stride + 1,
            (width - fp) / self.stride + 1,
        ))
    }

    /// Length of a flattened patch vector over `channels` channels.
    #[inline]
    pub fn vector_len(&self, channels: usize) -> usize {
        channels * self.patch * self.patch
    }
}

/// Patches of a region flattened into row-major vectors (`c`, then tap row,
/// then tap column).
#[derive(Clone, Debug)]
pub struct PatchSet {
    pub grid: PatchGrid,
    pub rows: usize,
    pub cols: usize,
    len: usize,
    data: Vec<f32>,
}

impl PatchSet {
    #[inline]
    pub fn count(&self) -> usize {
        self.rows * self.cols
    }

    #[inline]
    pub fn vector_len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn patch(&self, i: usize) -> &[f32] {
        &self.data[i * self.len..(i + 1) * self.len]
    }

    /// Top-left tap of patch `i` in region coordinates.
    #[inline]
    pub fn anchor(&self, i: usize) -> (usize, usize) {
        (
            (i / self.cols) * self.grid.stride,
            (i % self.cols) * self.grid.stride,
        )
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f32]> {
        self.data.chunks_exact(self.len)
    }
}

/// Gather every patch fully contained in `region`.
pub fn extract_patches(region: &FeatureMap, grid: PatchGrid) -> Result<PatchSet> {
    let (rows, cols) = grid.positions(region.height(), region.width())?;
    let len = grid.vector_len(region.channels());
    let mut data = Vec::with_capacity(rows * cols * len);
    for r in 0..rows {
        for q in 0..cols {
            let (ay, ax) = (r * grid.stride, q * grid.stride);
            gather_patch(region, ay, ax, grid.patch, grid.dilation, &mut data);
        }
    }
    Ok(PatchSet {
        grid,
        rows,
        cols,
        len,
        data,
    })
}

#[inline]
pub(crate) fn gather_patch(
    f: &FeatureMap,
    ay: usize,
    ax: usize,
    patch: usize,
    dilation: usize,
    out: &mut Vec<f32>,
) {
    let w = f.width();
    for c in 0..f.channels() {
        let plane = f.plane(c);
        for ty in 0..patch {
            let row = (ay + ty * dilation) * w + ax;
            for tx in 0..patch {
                out.push(plane[row + tx * dilation]);
            }
        }
    }
}

/// Place each patch at its anchor in a `height x width` map, averaging where
/// patches overlap. Elements no patch covers are zero.
pub fn overlap_fold(
    patches: &[FeatureMap],
    anchors: &[(usize, usize)],
    height: usize,
    width: usize,
) -> Result<FeatureMap> {
    let first = patches
        .first()
        .ok_or_else(|| Error::shape("overlap_fold needs at least one patch"))?;
    if patches.len() != anchors.len() {
        return Err(Error::shape(format!(
            "{} patches but {} anchors",
            patches.len(),
            anchors.len()
        )));
    }
    let channels = first.channels();
    let mut acc = FeatureMap::zeros(channels, height, width);
    let mut cover = vec![0u32; height * width];
    for (p, &(ay, ax)) in patches.iter().zip(anchors) {
        if p.channels() != channels {
            return Err(Error::shape("patches disagree on channel count"));
        }
        if ay + p.height() > height || ax + p.width() > width {
            return Err(Error::shape(format!(
                "patch {}x{} at ({ay},{ax}) exceeds {height}x{width}",
                p.height(),
                p.width()
            )));
        }
        for y in 0..p.height() {
            for x in 0..p.width() {
                cover[(ay + y) * width + ax + x] += 1;
            }
        }
        for c in 0..channels {
            let src = p.plane(c);
            let dst = acc.plane_mut(c);
            for y in 0..p.height() {
                let d = (ay + y) * width + ax;
                for x in 0..p.width() {
                    dst[d + x] += src[y * p.width() + x];
                }
            }
        }
    }
    for c in 0..channels {
        for (v, &n) in acc.plane_mut(c).iter_mut().zip(&cover) {
            if n > 0 {
                *v /= n as f32;
            }
        }
    }
    Ok(acc)
}
