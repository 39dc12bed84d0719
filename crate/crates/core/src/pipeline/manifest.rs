use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::feature::Image;
use crate::matching::ComplexityReport;
use crate::pipeline::PipelineConfig;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InputChecksum {
    pub role: String,
    pub height: usize,
    pub width: usize,
    /// SHA-256 of the 8-bit RGB pixel buffer.
    pub sha256: String,
}

impl InputChecksum {
    pub fn of(role: &str, img: &Image) -> Self {
        Self {
            role: role.to_string(),
            height: img.height(),
            width: img.width(),
            sha256: sha256_hex(img.to_rgb8().as_raw()),
        }
    }
}

/// Provenance record of one transfer run. Everything except `timings_ms` is a
/// function of the inputs and configuration.
#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub config_hash: String,
    pub config: PipelineConfig,
    pub inputs: Vec<InputChecksum>,
    pub timings_ms: Vec<(String, f64)>,
    pub complexity: ComplexityReport,
    pub correspondence_sha256: String,
    pub output_sha256: String,
    pub mean_similarity: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metrics: Option<serde_json::Value>,
}

impl RunManifest {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }
}
