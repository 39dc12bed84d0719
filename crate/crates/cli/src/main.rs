use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use log::info;
use refsr_core::feature::{bicubic_resize, stitch_horizontal, Image, ScaleFactor};
use refsr_core::matching::{correspond, RefBlockScale};
use refsr_core::metrics::{flops_report, ImageMetrics, MetricReport};
use refsr_core::pipeline::{
    ablate, ablation_table, bench, load_corpus, oracle_compare, run_transfer,
    visualize_correspondence, with_workers, ImagePair, PipelineConfig,
};
use refsr_core::{feature, Error};

#[derive(Parser)]
#[command(
    name = "refsr",
    version,
    about = "Coarse-to-fine reference patch matching and texture transfer"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Match an LR image against a reference; write the correspondence field,
    /// its visualization, and an op/FLOP report.
    Match(PairArgs),
    /// Produce a 4x output image and a run manifest.
    Transfer(PairArgs),
    /// Compare coarse-to-fine matches with exhaustive search.
    OracleCompare(CorpusArgs),
    /// Time coarse-to-fine vs exhaustive matching and run the sweeps.
    Bench(CorpusArgs),
    /// Sweep LR block size, reference block scale, and dilation sets.
    Ablate(CorpusArgs),
}

#[derive(Args)]
struct Common {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    lr_block: Option<usize>,
    /// A positive number or "full".
    #[arg(long)]
    ref_block_scale: Option<String>,
    /// Comma-separated dilation rates, e.g. 1,2.
    #[arg(long, value_delimiter = ',')]
    dilations: Option<Vec<usize>>,
    #[arg(long)]
    patch: Option<usize>,
    /// Worker threads (0: one per core).
    #[arg(long)]
    workers: Option<usize>,
    /// Seed for the seeded predictor and fusion weights.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PairArgs {
    #[arg(long)]
    lr: PathBuf,
    /// Reference image; repeat to stitch several side by side.
    #[arg(long = "ref", required = true)]
    reference: Vec<PathBuf>,
    /// Ground truth, for quality metrics.
    #[arg(long)]
    hr: Option<PathBuf>,
    /// Also write a text dump of the correspondence field.
    #[arg(long)]
    text: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct CorpusArgs {
    /// Directory of <name>_hr.png / <name>_ref.png pairs.
    #[arg(long, conflicts_with = "lr")]
    corpus: Option<PathBuf>,
    /// Single LR input instead of a corpus.
    #[arg(long, requires = "reference")]
    lr: Option<PathBuf>,
    #[arg(long = "ref")]
    reference: Vec<PathBuf>,
    #[command(flatten)]
    common: Common,
}

fn build_config(c: &Common) -> anyhow::Result<PipelineConfig> {
    let mut cfg = match &c.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    let m = &mut cfg.matching;
    if let Some(v) = c.lr_block {
        m.lr_block = v;
    }
    if let Some(v) = &c.ref_block_scale {
        m.ref_block_scale = v.parse::<RefBlockScale>()?;
    }
    if let Some(v) = &c.dilations {
        m.dilations = v.clone();
    }
    if let Some(v) = c.patch {
        m.patch = v;
    }
    if let Some(v) = c.workers {
        cfg.run.workers = v;
    }
    if let Some(v) = c.seed {
        cfg.predictor.seed = v;
        cfg.dram.seed = v;
    }
    if let Some(v) = &c.out {
        cfg.run.out = v.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn load_reference(paths: &[PathBuf]) -> anyhow::Result<Image> {
    let images = paths
        .iter()
        .map(Image::load)
        .collect::<Result<Vec<_>, _>>()?;
    Ok(stitch_horizontal(&images)?)
}

fn out_dir(cfg: &PipelineConfig) -> anyhow::Result<&Path> {
    let dir = cfg.run.out.as_path();
    std::fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.display().to_string(),
        source: e,
    })?;
    Ok(dir)
}

fn write(path: PathBuf, contents: impl AsRef<[u8]>) -> anyhow::Result<()> {
    std::fs::write(&path, contents).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(())
}

fn cmd_match(a: &PairArgs) -> anyhow::Result<()> {
    let cfg = build_config(&a.common)?;
    let lr = Image::load(&a.lr)?;
    let reference = load_reference(&a.reference)?;
    let spec = cfg.encoder_spec()?;
    let ref_down = bicubic_resize(&reference, ScaleFactor::new(1, 4)?)?;
    let (field, report) = with_workers(cfg.run.workers, || {
        let f_lr = feature::encode(&lr, &spec, 1)?;
        let f_rd = feature::encode(&ref_down, &spec, 1)?;
        correspond(&f_lr, &f_rd, &cfg.matching)
    })??;
    let dir = out_dir(&cfg)?;
    field.save(dir.join("correspondence.bin"))?;
    if a.text {
        write(dir.join("correspondence.txt"), field.to_text())?;
    }
    visualize_correspondence(&field)?.save(dir.join("correspondence.png"))?;
    let table = flops_report(&report);
    write(dir.join("report.txt"), &table)?;
    write(
        dir.join("report.json"),
        serde_json::to_string_pretty(&report)?,
    )?;
    print!("{table}");
    println!("mean similarity: {:.6}", field.mean_score());
    Ok(())
}

fn cmd_transfer(a: &PairArgs) -> anyhow::Result<()> {
    let cfg = build_config(&a.common)?;
    let lr = Image::load(&a.lr)?;
    let reference = load_reference(&a.reference)?;
    info!(
        "transfer {}x{} with reference {}x{}",
        lr.height(),
        lr.width(),
        reference.height(),
        reference.width()
    );
    let mut out = run_transfer(&lr, &reference, &cfg)?;
    let dir = out_dir(&cfg)?;
    if let Some(hr) = &a.hr {
        let hr = Image::load(hr)?;
        let mut report = MetricReport::default();
        report.push(ImageMetrics::compute("output", &out.image, &hr)?);
        let up = bicubic_resize(&lr, ScaleFactor::new(4, 1)?)?;
        report.push(ImageMetrics::compute("bicubic", &up, &hr)?);
        print!("{}", report.to_table());
        write(dir.join("metrics.txt"), report.to_table())?;
        out.manifest.metrics = Some(report.to_json());
    }
    out.image.save(dir.join("sr.png"))?;
    out.field.save(dir.join("correspondence.bin"))?;
    if a.text {
        write(dir.join("correspondence.txt"), out.field.to_text())?;
    }
    out.manifest.save(dir.join("manifest.json"))?;
    println!("output {}", dir.join("sr.png").display());
    println!("sha256 {}", out.manifest.output_sha256);
    Ok(())
}

fn load_pairs(a: &CorpusArgs) -> anyhow::Result<Vec<ImagePair>> {
    if let Some(lr) = &a.lr {
        let name = lr
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("pair")
            .to_string();
        return Ok(vec![ImagePair::from_lr(
            name,
            Image::load(lr)?,
            load_reference(&a.reference)?,
        )]);
    }
    let dir = a
        .corpus
        .clone()
        .unwrap_or_else(|| PathBuf::from("data/corpus"));
    Ok(load_corpus(&dir)?)
}

fn cmd_corpus(a: &CorpusArgs, which: &Command) -> anyhow::Result<()> {
    let cfg = build_config(&a.common)?;
    let pairs = load_pairs(a)?;
    info!("{} image pairs", pairs.len());
    let dir = out_dir(&cfg)?.to_path_buf();
    with_workers(cfg.run.workers, || -> anyhow::Result<()> {
        match which {
            Command::OracleCompare(_) => {
                let r = oracle_compare(&cfg, &pairs)?;
                print!("{}", r.to_table());
                write(dir.join("oracle.json"), serde_json::to_string_pretty(&r)?)
            }
            Command::Bench(_) => {
                let r = bench(&cfg, &pairs)?;
                print!("{}", r.to_table());
                write(dir.join("bench.json"), serde_json::to_string_pretty(&r)?)
            }
            Command::Ablate(_) => {
                let r = ablate(&cfg, &pairs)?;
                print!("{}", ablation_table(&r));
                write(dir.join("ablate.json"), serde_json::to_string_pretty(&r)?)
            }
            _ => bail!("not a corpus command"),
        }
    })?
}

/// 2: configuration or shape, 3: I/O or format, 4: invariant violation.
fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>().map(Error::root) {
        Some(Error::Config(_) | Error::Shape(_) | Error::Degenerate(_)) => 2,
        Some(Error::Io { .. } | Error::Format { .. } | Error::Codec(_)) => 3,
        Some(Error::Invariant(_)) => 4,
        Some(Error::Stage { .. }) => unreachable!("root skips stage tags"),
        None if err.downcast_ref::<std::io::Error>().is_some() => 3,
        None => 2,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Match(a) => cmd_match(a),
        Command::Transfer(a) => cmd_transfer(a),
        c @ (Command::OracleCompare(a) | Command::Bench(a) | Command::Ablate(a)) => {
            cmd_corpus(a, c)
        }
    }
    .context("refsr failed");
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
