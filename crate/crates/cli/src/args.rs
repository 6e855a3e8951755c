use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use conalloc_core::pipeline::AppetiteMode;
use conalloc_core::pointproc::Domain;

#[derive(Debug, Parser)]
#[command(
    name = "conalloc",
    version,
    about = "Connected stable allocations of the plane to point centers"
)]
pub struct Cli {
    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a random point sample.
    Sample(SampleArgs),
    /// Build the allocation for a point sample.
    Run(RunArgs),
    /// Draw an allocation as SVG.
    Render(RenderArgs),
    /// Check an allocation file against its point sample.
    Verify(VerifyArgs),
    /// Corner-image gap statistics of every face map.
    Stats(StatsArgs),
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("count").required(true).args(["n", "intensity"]))]
pub struct SampleArgs {
    /// Exact number of uniform points.
    #[arg(long)]
    pub n: Option<usize>,

    /// Poisson intensity (points per unit area).
    #[arg(long)]
    pub intensity: Option<f64>,

    /// `disk`, `disk:R` or `rect:WxH`.
    #[arg(long, default_value = "disk", value_parser = parse_domain)]
    pub domain: Domain,

    #[arg(long, default_value_t = 1)]
    pub seed: u64,

    /// Output file; standard output when absent.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Points file.
    pub points: PathBuf,

    /// Grid cell side.
    #[arg(long, default_value_t = 0.005)]
    pub grid: f64,

    #[arg(long, default_value_t = AppetiteMode::Figure, value_parser = parse_mode)]
    pub mode: AppetiteMode,

    /// Boundary sample spacing; per face a quarter of its shortest tree
    /// edge when absent.
    #[arg(long)]
    pub spacing: Option<f64>,

    /// Spacing halvings tried when a face map fails.
    #[arg(long, default_value_t = 2)]
    pub retries: usize,

    /// Allocation file; standard output when absent.
    #[arg(short, long)]
    pub output: Option<PathBuf>,

    /// Diagnostics report; next to the allocation file as `.diag.txt`, or
    /// standard error.
    #[arg(long)]
    pub diagnostics: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    pub allocation: PathBuf,
    pub points: PathBuf,

    /// SVG file; standard output when absent.
    #[arg(short, long)]
    pub output: Option<PathBuf>,

    /// Shifts every territory color.
    #[arg(long, default_value_t = 0)]
    pub palette_seed: u64,

    /// Tree edge width as a fraction of the picture size.
    #[arg(long, default_value_t = 0.002)]
    pub tree_width: f64,

    /// Center dot radius as a fraction of the picture size.
    #[arg(long, default_value_t = 0.003)]
    pub point_radius: f64,

    #[arg(long)]
    pub no_tree: bool,

    #[arg(long)]
    pub no_points: bool,

    /// Picture width in pixels.
    #[arg(long, default_value_t = 800)]
    pub width: u32,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    pub allocation: PathBuf,
    pub points: PathBuf,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    pub points: PathBuf,

    /// Boundary sample spacing; per-face default when absent.
    #[arg(long)]
    pub spacing: Option<f64>,
}

pub fn parse_domain(s: &str) -> Result<Domain, String> {
    let bad = || format!("expected disk, disk:R or rect:WxH, got {s:?}");
    let num = |t: &str| t.parse::<f64>().map_err(|_| bad());
    let domain = match s.split_once(':') {
        None if s == "disk" => return Ok(Domain::unit_disk()),
        Some(("disk", r)) => Domain::disk(Default::default(), num(r)?),
        Some(("rect", wh)) => {
            let (w, h) = wh.split_once('x').ok_or_else(bad)?;
            Domain::rectangle(num(w)?, num(h)?)
        }
        _ => return Err(bad()),
    };
    domain.map_err(|e| e.to_string())
}

pub fn parse_mode(s: &str) -> Result<AppetiteMode, String> {
    s.parse().map_err(|e: conalloc_core::Error| e.to_string())
}
