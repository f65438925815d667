use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "constxr", version, about = "Constant geodesic X-ray transform experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample the density whose transform is identically one.
    Synth(SynthArgs),
    /// Check that the synthesized density integrates to one along sampled geodesics.
    Verify(VerifyArgs),
    /// Check the Herglotz condition d/dr(r/c) > 0.
    Herglotz(HerglotzArgs),
    /// Decide whether a planar convex body is a disc.
    Disctest(DiscArgs),
    /// Estimate the second fundamental form from chord lengths.
    Iiest(IiArgs),
    /// Test umbilicity by fitting ellipses to near-tangent slices.
    Slicetest(SliceArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct ProfileSource {
    /// Sound speed c(r) as an expression in r.
    #[arg(long)]
    pub profile: Option<String>,
    /// Sound speed as (r, c) samples covering [0, 1].
    #[arg(long, value_name = "PATH")]
    pub profile_csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct Output {
    /// Write the result here instead of standard output.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[command(flatten)]
    pub source: ProfileSource,
    /// Number of grid intervals on [0, 1].
    #[arg(long, default_value_t = 100)]
    pub grid: usize,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub source: ProfileSource,
    /// Number of randomly sampled geodesics.
    #[arg(long, default_value_t = 100)]
    pub chords: usize,
    /// Largest accepted |If - 1|.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Also write the traced geodesic with the largest deviation as CSV.
    #[arg(long, value_name = "PATH")]
    pub trace_csv: Option<PathBuf>,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct HerglotzArgs {
    #[command(flatten)]
    pub source: ProfileSource,
    /// Number of grid points on [0, 1].
    #[arg(long, default_value_t = 1001)]
    pub grid: usize,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct DiscArgs {
    /// "disc cx cy R", "ellipse a b", "reuleaux w eps", or a CSV file of (theta, h).
    #[arg(long)]
    pub shape: String,
    /// Fourier tolerance relative to the width.
    #[arg(long, default_value_t = constxr::xray2d::DISC_TOL)]
    pub tol: f64,
    /// Number of support-function samples for parametric shapes.
    #[arg(long, default_value_t = constxr::xray2d::DEFAULT_SAMPLES)]
    pub grid: usize,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct IiArgs {
    /// "sphere R", "ellipsoid a b c", or any planar shape accepted by disctest.
    #[arg(long)]
    pub shape: String,
    /// Boundary point, space separated; defaults to the end of the first axis.
    #[arg(long, allow_hyphen_values = true)]
    pub point: Option<String>,
    /// Tangent direction, space separated; defaults to the second axis.
    #[arg(long, allow_hyphen_values = true)]
    pub direction: Option<String>,
    /// Number of depths, log-spaced on [1e-6, 1e-2].
    #[arg(long, default_value_t = 9)]
    pub grid: usize,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct SliceArgs {
    /// "sphere R" or "ellipsoid a b c".
    #[arg(long)]
    pub shape: String,
    /// Boundary point, space separated; defaults to the end of the first axis.
    #[arg(long, allow_hyphen_values = true)]
    pub point: Option<String>,
    /// Accepted deviation of the limiting axis ratio from 1.
    #[arg(long, default_value_t = 1e-3)]
    pub tol: f64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[command(flatten)]
    pub output: Output,
}
