use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::feature::SCALES;

/// Size of the reference search block relative to its basic size
/// `lr_block * H_ref / H_lr` (and likewise for width).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RefBlockScale {
    Scaled(f64),
    /// Search the whole reference map for every block.
    Full,
}

impl fmt::Display for RefBlockScale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Scaled(s) => write!(f, "{s}"),
            Self::Full => f.write_str("full"),
        }
    }
}

impl FromStr for RefBlockScale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.trim().eq_ignore_ascii_case("full") {
            return Ok(Self::Full);
        }
        s.trim()
            .parse::<f64>()
            .map(Self::Scaled)
            .map_err(|_| Error::config(format!("bad ref block scale {s:?}")))
    }
}

impl Serialize for RefBlockScale {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Self::Scaled(v) => s.serialize_f64(*v),
            Self::Full => s.serialize_str("full"),
        }
    }
}

impl<'de> Deserialize<'de> for RefBlockScale {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Str(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(Self::Scaled(v)),
            Repr::Str(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MatchConfig {
    pub lr_block: usize,
    pub ref_block_scale: RefBlockScale,
    pub patch: usize,
    pub dilations: Vec<usize>,
    pub scales: Vec<usize>,
}

impl Default for MatchConfig {
    fn default() -> Self {
        Self {
            lr_block: 8,
            ref_block_scale: RefBlockScale::Scaled(1.5),
            patch: 3,
            dilations: vec![1, 2],
            scales: SCALES.to_vec(),
        }
    }
}

impl MatchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.patch == 0 || self.lr_block == 0 {
            return Err(Error::config("patch and lr_block must be positive"));
        }
        if self.dilations.is_empty() || self.dilations.contains(&0) {
            return Err(Error::config(
                "dilations must be a non-empty set of positive rates",
            ));
        }
        let fp = self.max_footprint();
        if fp > self.lr_block {
            return Err(Error::config(format!(
                "dilated center patch footprint {fp} exceeds lr_block {}",
                self.lr_block
            )));
        }
        if let RefBlockScale::Scaled(s) = self.ref_block_scale {
            if !(s.is_finite() && s > 0.0) {
                return Err(Error::config(format!(
                    "ref_block_scale {s} must be positive"
                )));
            }
        }
        if self.scales.is_empty() || self.scales.iter().any(|s| !SCALES.contains(s)) {
            return Err(Error::config(
                "scales must be a non-empty subset of {1,2,4}",
            ));
        }
        Ok(())
    }

    /// Sorted, de-duplicated dilation rates.
    pub fn dilation_set(&self) -> Vec<usize> {
        let mut d = self.dilations.clone();
        d.sort_unstable();
        d.dedup();
        d
    }

    pub fn footprint(&self, dilation: usize) -> usize {
        (self.patch - 1) * dilation + 1
    }

    pub fn max_footprint(&self) -> usize {
        self.footprint(self.dilations.iter().copied().max().unwrap_or(1))
    }

    /// Reference search block `(d_y, d_x)` for the given LR and reference
    /// feature sizes, clamped to the reference extent.
    pub fn ref_block_dims(
        &self,
        lr: (usize, usize),
        reference: (usize, usize),
    ) -> Result<(usize, usize)> {
        let (rh, rw) = reference;
        let dims = match self.ref_block_scale {
            RefBlockScale::Full => (rh, rw),
            RefBlockScale::Scaled(s) => {
                let side = |r: usize, l: usize| {
                    let d = (s * self.lr_block as f64 * r as f64 / l as f64).round();
                    (d.max(0.0) as usize).min(r)
                };
                (side(rh, lr.0), side(rw, lr.1))
            }
        };
        if dims.0 < self.patch || dims.1 < self.patch {
            return Err(Error::config(format!(
                "reference block {}x{} smaller than patch {}",
                dims.0, dims.1, self.patch
            )));
        }
        Ok(dims)
    }
}
