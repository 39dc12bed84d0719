use std::path::Path;

use crate::error::{Error, Result};
use crate::feature::{bicubic_resize, Image, ScaleFactor};

/// An LR input and its reference, plus the ground truth when known.
#[derive(Clone, Debug)]
pub struct ImagePair {
    pub name: String,
    pub hr: Option<Image>,
    pub lr: Image,
    pub reference: Image,
}

impl ImagePair {
    /// Derive the LR input from `hr` by 4x bicubic downsampling.
    pub fn new(name: impl Into<String>, hr: Image, reference: Image) -> Result<Self> {
        let lr = bicubic_resize(&hr, ScaleFactor::new(1, 4)?)?;
        Ok(Self {
            name: name.into(),
            hr: Some(hr),
            lr,
            reference,
        })
    }

    pub fn from_lr(name: impl Into<String>, lr: Image, reference: Image) -> Self {
        Self {
            name: name.into(),
            hr: None,
            lr,
            reference,
        }
    }
}

/// Load every `<name>_hr.png` / `<name>_ref.png` pair in `dir`, sorted by name.
pub fn load_corpus(dir: impl AsRef<Path>) -> Result<Vec<ImagePair>> {
    let dir = dir.as_ref();
    let mut names = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        if let Some(stem) = entry
            .file_name()
            .to_str()
            .and_then(|n| n.strip_suffix("_hr.png"))
        {
            names.push(stem.to_string());
        }
    }
    names.sort();
    if names.is_empty() {
        return Err(Error::config(format!(
            "no *_hr.png images in {}",
            dir.display()
        )));
    }
    names
        .into_iter()
        .map(|n| {
            let hr = Image::load(dir.join(format!("{n}_hr.png")))?;
            let reference = Image::load(dir.join(format!("{n}_ref.png")))?;
            ImagePair::new(n, hr, reference)
        })
        .collect()
}
