use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fieldfuse_core::metrics::LevelReport;
use fieldfuse_core::pipeline::{Pipeline, RunConfig};
use fieldfuse_core::protocol::{run_mock_adapter, MockAdapterConfig};
use fieldfuse_core::raster::Variant;
use fieldfuse_core::synth::FieldscapeSpec;
use fieldfuse_core::vector::Checkpoint;
use fieldfuse_core::{Error, Result};

/// Environment variable naming an external adapter command; overrides the config.
const ADAPTER_ENV: &str = "FIELDFUSE_ADAPTER";
/// Environment variable pointing the hidden `mock-adapter` at its JSON config.
const MOCK_CONFIG_ENV: &str = "FIELDFUSE_MOCK_CONFIG";

#[derive(Parser)]
#[command(name = "fieldfuse", version, about = "Field-boundary delineation pipeline")]
struct Cli {
    /// Log progress to stderr (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Writes the synthetic ground truth and per-date rasters.
    Synth(RunArgs),
    /// Normalizes, pansharpens, georectifies and enhances every date.
    Preprocess(RunArgs),
    /// Cuts every composite into tiles at every configured size.
    Tile(RunArgs),
    /// Runs the segmenter on every (date, variant, size, checkpoint) cell.
    Segment(RunArgs),
    /// Turns tile masks into world-coordinate polygons.
    Vectorize(RunArgs),
    /// Reassembles fragments cut by tile borders into scene layers.
    MergeTiles(RunArgs),
    /// Pools layers across checkpoints, sizes, dates and variants.
    Fuse(RunArgs),
    /// Scores every raw and fused layer against ground truth.
    Evaluate(RunArgs),
    /// Renders CSV, JSON and SVG reports from the evaluation.
    Report(RunArgs),
    /// All stages in order.
    RunAll(RunArgs),
    /// Mock segmenter speaking the adapter protocol.
    #[command(hide = true)]
    MockAdapter(MockArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Run configuration JSON. Without it a default synthetic scene is used.
    #[arg(short, long)]
    config: Option<PathBuf>,
    #[arg(short, long)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated tile sizes in pixels.
    #[arg(long, value_delimiter = ',')]
    tile_sizes: Option<Vec<usize>>,
    /// Comma-separated checkpoints (vit_b, vit_h, vit_l).
    #[arg(long, value_delimiter = ',')]
    checkpoints: Option<Vec<String>>,
    /// Comma-separated variants (original, edge_enhanced).
    #[arg(long, value_delimiter = ',')]
    variants: Option<Vec<String>>,
    #[arg(long)]
    workers: Option<usize>,
    /// External adapter command line.
    #[arg(long, env = ADAPTER_ENV)]
    adapter: Option<String>,
}

#[derive(Args)]
struct MockArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    checkpoint: String,
}

fn parse_all<T: std::str::FromStr<Err = Error>>(items: &[String]) -> Result<Vec<T>> {
    items.iter().map(|s| s.trim().parse()).collect()
}

impl RunArgs {
    fn config(&self) -> Result<RunConfig> {
        let mut c = match (&self.config, &self.output_dir) {
            (Some(path), _) => RunConfig::read(path)?,
            (None, Some(out)) => RunConfig::synthetic(out, FieldscapeSpec::default()),
            (None, None) => return Err(Error::Config("need --config or --output-dir".into())),
        };
        if let Some(out) = &self.output_dir {
            c.output_dir = out.clone();
        }
        if let Some(seed) = self.seed {
            c.seed = seed;
        }
        if let Some(sizes) = &self.tile_sizes {
            c.tile_sizes = sizes.clone();
        }
        if let Some(cks) = &self.checkpoints {
            c.checkpoints = parse_all::<Checkpoint>(cks)?;
        }
        if let Some(vs) = &self.variants {
            c.variants = parse_all::<Variant>(vs)?;
        }
        if self.workers.is_some() {
            c.workers = self.workers;
        }
        if let Some(cmd) = self.adapter.as_deref().filter(|s| !s.trim().is_empty()) {
            c.override_adapter(cmd);
        }
        c.validate()?;
        Ok(c)
    }
}

fn print_levels(report: &LevelReport) {
    for r in &report.reports {
        let iou = r.mean_iou.map_or("-".to_string(), |v| format!("{v:.4}"));
        println!(
            "{:<40} detection {:>7.2}%  iou {:>6}  {}/{} matched, {} predicted",
            r.key.to_string(),
            r.detection_pct,
            iou,
            r.matched,
            r.gt_total,
            r.predictions_total
        );
    }
}

fn run(command: Command) -> Result<()> {
    let (args, stage) = match command {
        Command::MockAdapter(m) => {
            let path = std::env::var_os(MOCK_CONFIG_ENV)
                .map(PathBuf::from)
                .ok_or_else(|| Error::Config(format!("{MOCK_CONFIG_ENV} is not set")))?;
            let segmenter = MockAdapterConfig::read(&path)?.segmenter()?;
            return run_mock_adapter(&m.manifest, &m.out, &m.checkpoint, &segmenter);
        }
        Command::Synth(a) => (a, "synth"),
        Command::Preprocess(a) => (a, "preprocess"),
        Command::Tile(a) => (a, "tile"),
        Command::Segment(a) => (a, "segment"),
        Command::Vectorize(a) => (a, "vectorize"),
        Command::MergeTiles(a) => (a, "merge-tiles"),
        Command::Fuse(a) => (a, "fuse"),
        Command::Evaluate(a) => (a, "evaluate"),
        Command::Report(a) => (a, "report"),
        Command::RunAll(a) => (a, "run-all"),
    };
    let p = Pipeline::new(args.config()?)?;
    match stage {
        "synth" => println!("{} fields written to {}", p.synth()?, p.layout().synthetic_gt().display()),
        "preprocess" => p.preprocess()?,
        "tile" => p.tile()?,
        "segment" => {
            let s = p.segment()?;
            println!(
                "{} jobs ({} failed), {} tiles ({} failed)",
                s.jobs, s.failed_jobs, s.tiles, s.failed_tiles
            );
        }
        "vectorize" => p.vectorize()?,
        "merge-tiles" => p.merge_tiles()?,
        "fuse" => println!("{} fused layers", p.fuse()?.len()),
        "evaluate" => print_levels(&p.evaluate()?),
        "report" => {
            p.report()?;
            println!("{}", p.layout().report_dir().display());
        }
        _ => {
            print_levels(&p.run_all()?);
            println!("report: {}", p.layout().report_dir().display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fieldfuse: {e}");
            ExitCode::from(if e.is_config_error() { 1 } else { 2 })
        }
    }
}
