//! Feature containers, image I/O, resampling, and the block/patch
//! unfold-fold machinery used by the matcher.

mod blocks;
mod encoder;
mod image;
pub(crate) mod map;
mod patches;
mod resize;

pub use self::blocks::{fold_blocks, unfold_blocks, BlockPartition};
pub use self::encoder::{encode, mean_pool, EncoderSpec, SCALES};
pub use self::image::{stitch_horizontal, Image};
pub use self::map::{reflect_index, FeatureMap};
pub use self::patches::{extract_patches, overlap_fold, PatchGrid, PatchSet};
pub use self::resize::{bicubic_resize, cubic_kernel, resize_to, ScaleFactor, CUBIC_A};

pub(crate) use self::patches::gather_patch;
