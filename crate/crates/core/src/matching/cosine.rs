use crate::error::{Error, Result};
use crate::feature::{gather_patch, FeatureMap};

/// Norm floor applied before dividing.
pub const NORM_EPS: f64 = 1e-8;

/// `<p/|p|, q/|q|>` with norms floored at [`NORM_EPS`], clamped to `[-1, 1]`.
pub fn cosine_similarity(p: &[f32], q: &[f32]) -> Result<f32> {
    if p.len() != q.len() {
        return Err(Error::shape(format!(
            "patch lengths differ: {} vs {}",
            p.len(),
            q.len()
        )));
    }
    if p.is_empty() {
        return Err(Error::shape("empty patch vectors"));
    }
    let mut a = p.to_vec();
    let mut b = q.to_vec();
    normalize(&mut a);
    normalize(&mut b);
    Ok(unit_dot(&a, &b))
}

/// Scale `v` to unit length in place (or leave it near zero if its norm is below eps).
#[inline]
pub(crate) fn normalize(v: &mut [f32]) {
    let norm = v.iter().map(|&x| x as f64 * x as f64).sum::<f64>().sqrt();
    let inv = (1.0 / norm.max(NORM_EPS)) as f32;
    v.iter_mut().for_each(|x| *x *= inv);
}

/// Dot product of two normalized vectors, clamped to `[-1, 1]`.
///
/// Eight independent lanes reduced in a fixed order: the result depends only
/// on the inputs, never on scheduling.
#[inline]
pub(crate) fn unit_dot(a: &[f32], b: &[f32]) -> f32 {
    debug_assert_eq!(a.len(), b.len());
    let mut lanes = [0.0f32; 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for l in 0..8 {
            lanes[l] += x[l] * y[l];
        }
    }
    for (l, (x, y)) in ra.iter().zip(rb).enumerate() {
        lanes[l] += x * y;
    }
    let s = ((lanes[0] + lanes[1]) + (lanes[2] + lanes[3]))
        + ((lanes[4] + lanes[5]) + (lanes[6] + lanes[7]));
    s.clamp(-1.0, 1.0)
}

/// Normalized patch vectors for every anchor of a rectangular window.
#[derive(Clone, Debug)]
pub(crate) struct PatchTable {
    pub rows: usize,
    pub cols: usize,
    pub len: usize,
    data: Vec<f32>,
}

impl PatchTable {
    /// Patches of side `patch` at `dilation` whose footprint lies inside the
    /// `height x width` window at `(top, left)` of `f`.
    pub fn build(
        f: &FeatureMap,
        (top, left, height, width): (usize, usize, usize, usize),
        patch: usize,
        dilation: usize,
    ) -> Result<Self> {
        let fp = (patch - 1) * dilation + 1;
        if fp > height || fp > width {
            return Err(Error::shape(format!(
                "patch footprint {fp} exceeds {height}x{width} window"
            )));
        }
        debug_assert!(top + height <= f.height() && left + width <= f.width());
        let rows = height - fp + 1;
        let cols = width - fp + 1;
        let len = f.channels() * patch * patch;
        let mut data = Vec::with_capacity(rows * cols * len);
        for y in 0..rows {
            for x in 0..cols {
                let start = data.len();
                gather_patch(f, top + y, left + x, patch, dilation, &mut data);
                normalize(&mut data[start..]);
            }
        }
        Ok(Self {
            rows,
            cols,
            len,
            data,
        })
    }

    #[inline]
    pub fn count(&self) -> usize {
        self.rows * self.cols
    }

    pub fn iter(&self) -> std::slice::ChunksExact<'_, f32> {
        self.data.chunks_exact(self.len)
    }
}

/// The normalized vector of a single patch.
pub(crate) fn unit_patch(
    f: &FeatureMap,
    ay: usize,
    ax: usize,
    patch: usize,
    dilation: usize,
) -> Vec<f32> {
    let mut v = Vec::with_capacity(f.channels() * patch * patch);
    gather_patch(f, ay, ax, patch, dilation, &mut v);
    normalize(&mut v);
    v
}

/// Index and value of the maximum similarity; the lowest index wins ties.
#[inline]
pub(crate) fn best_match<'a>(
    query: &[f32],
    candidates: impl Iterator<Item = &'a [f32]>,
) -> (u32, f32) {
    let mut best = (0u32, f32::NEG_INFINITY);
    for (j, c) in candidates.enumerate() {
        let s = unit_dot(query, c);
        if s > best.1 {
            best = (j as u32, s);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn analytic_values() {
        assert_abs_diff_eq!(
            cosine_similarity(&[0.3, -2.0, 5.0], &[0.3, -2.0, 5.0]).unwrap(),
            1.0,
            epsilon = 1e-7
        );
        assert_eq!(cosine_similarity(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert_abs_diff_eq!(
            cosine_similarity(&[1.0, 1.0], &[1.0, 0.0]).unwrap(),
            std::f32::consts::FRAC_1_SQRT_2,
            epsilon = 1e-7
        );
        assert_abs_diff_eq!(
            cosine_similarity(&[1.0, 2.0], &[-2.0, -4.0]).unwrap(),
            -1.0,
            epsilon = 1e-7
        );
    }

    #[test]
    fn zero_vector_is_guarded() {
        assert_eq!(cosine_similarity(&[0.0, 0.0], &[1.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn errors() {
        assert!(cosine_similarity(&[1.0], &[1.0, 2.0]).is_err());
        assert!(cosine_similarity(&[], &[]).is_err());
    }

    #[test]
    fn long_vectors_use_all_lanes() {
        let a: Vec<f32> = (0..27).map(|i| (i as f32 * 0.37).sin()).collect();
        let b: Vec<f32> = (0..27).map(|i| (i as f32 * 0.11).cos()).collect();
        let naive = {
            let dot: f64 = a.iter().zip(&b).map(|(&x, &y)| x as f64 * y as f64).sum();
            let na: f64 = a.iter().map(|&x| (x as f64).powi(2)).sum::<f64>().sqrt();
            let nb: f64 = b.iter().map(|&x| (x as f64).powi(2)).sum::<f64>().sqrt();
            dot / (na * nb)
        };
        assert_abs_diff_eq!(
            cosine_similarity(&a, &b).unwrap() as f64,
            naive,
            epsilon = 1e-6
        );
    }

    #[test]
    fn ties_pick_lowest_index() {
        let q = [1.0f32, 0.0];
        let c = [[0.0f32, 1.0], [1.0, 0.0], [1.0, 0.0]];
        assert_eq!(best_match(&q, c.iter().map(|v| v.as_slice())), (1, 1.0));
    }
}
