//! End-to-end orchestration, run provenance, visualization, and the
//! benchmark/ablation drivers.

mod bench;
mod config;
mod corpus;
mod manifest;
mod transfer;
mod visualize;

pub use bench::{
    ablate, ablation_table, bench, oracle_compare, sweep_configs, AblationPoint, BenchReport,
    OracleReport, PairAgreement, PairTiming,
};
pub use config::{
    DramConfig, DramModeConfig, EncoderConfig, EncoderMode, PipelineConfig, PredictorConfig,
    PredictorMode, RunConfig, UPSCALE,
};
pub use corpus::{load_corpus, ImagePair};
pub use manifest::{sha256_hex, InputChecksum, RunManifest};
pub use transfer::{decode, run_transfer, upsample2, TransferOutput};
pub use visualize::visualize_correspondence;

use crate::error::{Error, Result};

/// Run `f` on a pool of `workers` threads (0: the global pool).
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if workers == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::config(format!("cannot start {workers} workers: {e}")))?;
    Ok(pool.install(f))
}
