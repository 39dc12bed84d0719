//! Coarse-to-fine patch correspondence, feature extraction, the exhaustive
//! oracle, and similarity-op accounting.

mod complexity;
mod config;
pub(crate) mod cosine;
mod extract;
mod field;
mod mem;
mod oracle;
mod stages;

pub use complexity::{predicted_ops, ComplexityReport, OpCounter, ReportSource};
pub use config::{MatchConfig, RefBlockScale};
pub use cosine::{cosine_similarity, NORM_EPS};
pub use extract::extract_features;
pub use field::{BlockMatch, CorrespondenceField, FieldGeometry, FIELD_MAGIC, FIELD_VERSION};
pub use mem::{correspond, mem_forward, MemOutput};
pub use oracle::dense_match_oracle;
pub use stages::{coarse_match, fine_match, BlockTriple, LrBlocks, Window};
