//! Per-block index and similarity maps, and their on-disk formats.
//!
//! Binary layout, all integers little-endian:
//!
//! ```text
//! "RCFD"  magic
//! u16     version (1)
//! u32     K
//! u32 x 8 lr_h, lr_w, block, patch, grid_rows, grid_cols, ref_h, ref_w
//! per block:
//!   u32 x 4  ref_top, ref_left, ref_h, ref_w
//!   u32      entry count
//!   u32 x n  D
//!   f32 x n  R
//! ```

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feature::BlockPartition;

pub const FIELD_MAGIC: &[u8; 4] = b"RCFD";
pub const FIELD_VERSION: u16 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldGeometry {
    /// LR feature size before block padding.
    pub lr_h: usize,
    pub lr_w: usize,
    pub block: usize,
    pub patch: usize,
    pub grid_rows: usize,
    pub grid_cols: usize,
    /// Reference (Ref-down) feature size.
    pub ref_h: usize,
    pub ref_w: usize,
}

impl FieldGeometry {
    pub fn partition(&self) -> BlockPartition {
        BlockPartition {
            block_h: self.block,
            block_w: self.block,
            grid_rows: self.grid_rows,
            grid_cols: self.grid_cols,
            orig_h: self.lr_h,
            orig_w: self.lr_w,
        }
    }

    pub fn block_count(&self) -> usize {
        self.grid_rows * self.grid_cols
    }

    /// LR patch positions per block side, `b - p + 1`.
    pub fn patch_side(&self) -> usize {
        self.block - self.patch + 1
    }

    pub fn patches_per_block(&self) -> usize {
        self.patch_side() * self.patch_side()
    }

    /// Anchor columns across the whole reference map.
    pub fn ref_cols(&self) -> usize {
        self.ref_w - self.patch + 1
    }

    pub fn ref_rows(&self) -> usize {
        self.ref_h - self.patch + 1
    }

    /// Top-left of LR patch `i` of block `k` in padded LR coordinates.
    pub fn lr_anchor(&self, k: usize, i: usize) -> (usize, usize) {
        let (by, bx) = self.partition().anchor(k);
        let side = self.patch_side();
        (by + i / side, bx + i % side)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlockMatch {
    pub ref_top: usize,
    pub ref_left: usize,
    pub ref_h: usize,
    pub ref_w: usize,
    /// `D^k`: index of the best patch inside the reference block.
    pub indices: Vec<u32>,
    /// `R^k`: its cosine similarity.
    pub scores: Vec<f32>,
}

impl BlockMatch {
    pub fn ref_cols(&self, patch: usize) -> usize {
        self.ref_w - patch + 1
    }

    pub fn ref_patch_count(&self, patch: usize) -> usize {
        (self.ref_h - patch + 1) * (self.ref_w - patch + 1)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CorrespondenceField {
    pub geometry: FieldGeometry,
    pub blocks: Vec<BlockMatch>,
}

impl CorrespondenceField {
    pub fn validate(&self) -> Result<()> {
        let g = &self.geometry;
        if g.patch == 0 || g.block < g.patch || g.ref_h < g.patch || g.ref_w < g.patch {
            return Err(Error::Invariant(format!(
                "inconsistent field geometry {g:?}"
            )));
        }
        if self.blocks.len() != g.block_count() {
            return Err(Error::Invariant(format!(
                "{} blocks for a {}x{} grid",
                self.blocks.len(),
                g.grid_rows,
                g.grid_cols
            )));
        }
        let n = g.patches_per_block();
        for (k, b) in self.blocks.iter().enumerate() {
            if b.indices.len() != n || b.scores.len() != n {
                return Err(Error::Invariant(format!("block {k}: expected {n} entries")));
            }
            if b.ref_h < g.patch
                || b.ref_w < g.patch
                || b.ref_top + b.ref_h > g.ref_h
                || b.ref_left + b.ref_w > g.ref_w
            {
                return Err(Error::Invariant(format!(
                    "block {k}: reference window out of bounds"
                )));
            }
            let limit = b.ref_patch_count(g.patch) as u32;
            if b.indices.iter().any(|&d| d >= limit) {
                return Err(Error::Invariant(format!("block {k}: index out of range")));
            }
            if b.scores.iter().any(|r| !(-1.0..=1.0).contains(r)) {
                return Err(Error::Invariant(format!(
                    "block {k}: score outside [-1, 1]"
                )));
            }
        }
        Ok(())
    }

    pub fn entry_count(&self) -> usize {
        self.blocks.iter().map(|b| b.indices.len()).sum()
    }

    /// Top-left of the matched reference patch for LR patch `i` of block `k`,
    /// in reference-map coordinates.
    pub fn ref_anchor(&self, k: usize, i: usize) -> (usize, usize) {
        let b = &self.blocks[k];
        let cols = b.ref_cols(self.geometry.patch);
        let j = b.indices[i] as usize;
        (b.ref_top + j / cols, b.ref_left + j % cols)
    }

    /// Row-major index of the matched patch over the whole reference map.
    pub fn global_index(&self, k: usize, i: usize) -> usize {
        let (y, x) = self.ref_anchor(k, i);
        y * self.geometry.ref_cols() + x
    }

    pub fn mean_score(&self) -> f64 {
        let n = self.entry_count();
        if n == 0 {
            return 0.0;
        }
        self.blocks
            .iter()
            .flat_map(|b| b.scores.iter())
            .map(|&r| r as f64)
            .sum::<f64>()
            / n as f64
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let g = &self.geometry;
        let mut out = Vec::with_capacity(64 + self.entry_count() * 8);
        out.extend_from_slice(FIELD_MAGIC);
        out.extend_from_slice(&FIELD_VERSION.to_le_bytes());
        let put = |out: &mut Vec<u8>, v: usize| out.extend_from_slice(&(v as u32).to_le_bytes());
        put(&mut out, self.blocks.len());
        for v in [
            g.lr_h,
            g.lr_w,
            g.block,
            g.patch,
            g.grid_rows,
            g.grid_cols,
            g.ref_h,
            g.ref_w,
        ] {
            put(&mut out, v);
        }
        for b in &self.blocks {
            for v in [b.ref_top, b.ref_left, b.ref_h, b.ref_w, b.indices.len()] {
                put(&mut out, v);
            }
            for &d in &b.indices {
                out.extend_from_slice(&d.to_le_bytes());
            }
            for &r in &b.scores {
                out.extend_from_slice(&r.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self> {
        let mut pos = 0usize;
        let mut take = |n: usize| -> Result<&[u8]> {
            let end = pos
                .checked_add(n)
                .filter(|&e| e <= buf.len())
                .ok_or_else(|| Error::format("correspondence file", "truncated"))?;
            let s = &buf[pos..end];
            pos = end;
            Ok(s)
        };
        if take(4)? != FIELD_MAGIC {
            return Err(Error::format("correspondence file", "bad magic"));
        }
        let version = u16::from_le_bytes(take(2)?.try_into().unwrap());
        if version != FIELD_VERSION {
            return Err(Error::format(
                "correspondence file",
                format!("unsupported version {version}"),
            ));
        }
        let mut u32_ =
            || -> Result<usize> { Ok(u32::from_le_bytes(take(4)?.try_into().unwrap()) as usize) };
        let k = u32_()?;
        let g = FieldGeometry {
            lr_h: u32_()?,
            lr_w: u32_()?,
            block: u32_()?,
            patch: u32_()?,
            grid_rows: u32_()?,
            grid_cols: u32_()?,
            ref_h: u32_()?,
            ref_w: u32_()?,
        };
        let mut blocks = Vec::with_capacity(k.min(1 << 20));
        for _ in 0..k {
            let (ref_top, ref_left, ref_h, ref_w, n) =
                (u32_()?, u32_()?, u32_()?, u32_()?, u32_()?);
            let indices = (0..n)
                .map(|_| u32_().map(|v| v as u32))
                .collect::<Result<Vec<_>>>()?;
            let scores = (0..n)
                .map(|_| u32_().map(|v| f32::from_bits(v as u32)))
                .collect::<Result<Vec<_>>>()?;
            blocks.push(BlockMatch {
                ref_top,
                ref_left,
                ref_h,
                ref_w,
                indices,
                scores,
            });
        }
        if pos != buf.len() {
            return Err(Error::format("correspondence file", "trailing bytes"));
        }
        let field = Self {
            geometry: g,
            blocks,
        };
        field
            .validate()
            .map_err(|e| Error::format("correspondence file", e.to_string()))?;
        Ok(field)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let buf = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&buf)
    }

    /// One `k i j score` line per entry.
    pub fn to_text(&self) -> String {
        let mut s = String::with_capacity(self.entry_count() * 24);
        for (k, b) in self.blocks.iter().enumerate() {
            for (i, (&j, &r)) in b.indices.iter().zip(&b.scores).enumerate() {
                let _ = writeln!(s, "{k} {i} {j} {r}");
            }
        }
        s
    }
}
