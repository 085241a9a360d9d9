mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

/// Differentiable smoke transport, rendering, and reconstruction.
#[derive(Parser, Debug)]
#[command(name = "smokeflow", version, about)]
pub struct Cli {
    /// Seed for every random choice; overrides seeds in config files.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Print reports as JSON on stdout.
    #[arg(long, global = true)]
    pub json: bool,
    /// Worker threads for operator kernels (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a synthetic plume scene directory.
    Gen(GenArgs),
    /// Render density volumes through the cameras of a scene file.
    Render(RenderArgs),
    /// Scatter an image back along its camera rays into a volume.
    Project(ProjectArgs),
    /// Advect a density by a velocity (or the curl of a potential).
    Advect(AdvectArgs),
    /// Reconstruct density and motion from a scene's images.
    Reconstruct(ReconstructArgs),
    /// Compare reconstructions from different camera sets.
    AblateViews(AblateArgs),
    /// Compare two scene directories.
    Metrics(MetricsArgs),
    /// Check the full objective's gradient against finite differences.
    Gradcheck(GradcheckArgs),
    /// Compare velocity smoothness of linear and B-spline potential upsampling.
    CompareUpsample(CompareUpsampleArgs),
}

#[derive(Args, Debug)]
pub struct GenArgs {
    /// Scene config JSON.
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct RenderArgs {
    /// Scene file with `cameras`, optional `light`, `render_step`, and
    /// `background` (a `manifest.json` works).
    #[arg(long)]
    pub scene: PathBuf,
    /// Density `.vgrid`; repeat for several frames.
    #[arg(long, required = true)]
    pub density: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct ProjectArgs {
    #[arg(long)]
    pub scene: PathBuf,
    /// Camera index in the scene file.
    #[arg(long, default_value_t = 0)]
    pub view: usize,
    /// PFM image to project.
    #[arg(long)]
    pub image: PathBuf,
    /// Volume resolution `nx,ny,nz`; defaults to the scene's `res`.
    #[arg(long, value_delimiter = ',')]
    pub res: Option<Vec<usize>>,
    /// Output `.vgrid`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct AdvectArgs {
    #[arg(long)]
    pub density: PathBuf,
    /// Velocity `.vgrid` (3 channels).
    #[arg(long, conflicts_with = "potential")]
    pub velocity: Option<PathBuf>,
    /// Vector potential `.vgrid`; its curl is used as velocity.
    #[arg(long)]
    pub potential: Option<PathBuf>,
    #[arg(long, default_value = "mac-cormack")]
    pub scheme: String,
    #[arg(long, default_value_t = 1)]
    pub steps: usize,
    #[arg(long, default_value_t = 1.0)]
    pub dt: f64,
    /// Output directory for `density_001.vgrid`, ...
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct ReconstructArgs {
    /// Scene directory with `manifest.json`.
    #[arg(long)]
    pub scene: PathBuf,
    /// Reconstruction config JSON; defaults apply when absent.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Camera indices to fit, input view first.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub views: Vec<usize>,
    #[arg(long)]
    pub out: PathBuf,
    /// Use the normalized inverse projection as rendering gradient.
    #[arg(long)]
    pub paper_backward: bool,
    /// Clamp transported densities to be nonnegative.
    #[arg(long)]
    pub clamp_density: bool,
    /// Apply the CFL term to each residual potential level.
    #[arg(long)]
    pub cfl_per_level: bool,
}

#[derive(Args, Debug)]
pub struct AblateArgs {
    #[arg(long)]
    pub scene: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// View sets separated by `/`, cameras by `,`; the first set is the
    /// baseline. Example: `0/0,1,2`.
    #[arg(long, default_value = "0/0,1,2")]
    pub sets: String,
    /// Also compare the first set with and without the center term.
    #[arg(long)]
    pub center: bool,
    /// Write the report here as well.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct MetricsArgs {
    /// Scene directory under test.
    #[arg(long)]
    pub ours: PathBuf,
    /// Reference scene directory.
    #[arg(long)]
    pub reference: PathBuf,
}

#[derive(Args, Debug)]
pub struct GradcheckArgs {
    /// Scene config JSON; resolution and image size are replaced by `--size`.
    #[arg(long)]
    pub scene: PathBuf,
    #[arg(long, default_value_t = 6)]
    pub size: usize,
    #[arg(long, default_value_t = 2)]
    pub steps: usize,
    #[arg(long, default_value_t = 1e-5)]
    pub h: f64,
    #[arg(long, default_value_t = 64)]
    pub samples: usize,
    /// Largest accepted relative error.
    #[arg(long, default_value_t = 1e-6)]
    pub tolerance: f64,
}

#[derive(Args, Debug)]
pub struct CompareUpsampleArgs {
    /// Coarse vector potential `.vgrid`; random (seeded) when absent.
    #[arg(long)]
    pub potential: Option<PathBuf>,
    /// Resolution of the random coarse potential.
    #[arg(long, value_delimiter = ',', default_value = "6,6,6")]
    pub res: Vec<usize>,
    /// Number of factor-2 upsampling steps.
    #[arg(long, default_value_t = 2)]
    pub times: usize,
    /// Side-by-side PNG of velocity magnitude slices (linear left).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Error printed as `{"error": {...}}` on stderr.
#[derive(Debug, Serialize)]
pub struct CliError {
    pub kind: &'static str,
    pub message: String,
}

impl From<smokeflow::Error> for CliError {
    fn from(e: smokeflow::Error) -> Self {
        use smokeflow::Error as E;
        let kind = match &e {
            E::Io { .. } => "io",
            E::Format(_) => "format",
            E::Shape(_) => "shape",
            E::Invalid { .. } => "invalid",
            E::NonFinite(_) => "non-finite",
            E::Diverged { .. } => "diverged",
            E::Json(_) => "json",
        };
        CliError { kind, message: e.to_string() }
    }
}

impl CliError {
    pub fn new(kind: &'static str, message: impl Into<String>) -> Self {
        CliError { kind, message: message.into() }
    }
}

fn report_error(e: &CliError) {
    let body = serde_json::json!({ "error": e });
    eprintln!("{body}");
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            report_error(&CliError::new("usage", e.to_string().trim().to_string()));
            return ExitCode::from(2);
        }
    };
    if let Err(e) = configure_threads(cli.threads) {
        report_error(&e);
        return ExitCode::from(2);
    }
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            report_error(&e);
            ExitCode::from(if e.kind == "usage" { 2 } else { 1 })
        }
    }
}

#[cfg(feature = "parallel")]
fn configure_threads(threads: Option<usize>) -> Result<(), CliError> {
    if let Some(n) = threads {
        if n == 0 {
            return Err(CliError::new("usage", "--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::new("usage", e.to_string()))?;
    }
    Ok(())
}

#[cfg(not(feature = "parallel"))]
fn configure_threads(threads: Option<usize>) -> Result<(), CliError> {
    if threads == Some(0) {
        return Err(CliError::new("usage", "--threads must be at least 1"));
    }
    Ok(())
}
