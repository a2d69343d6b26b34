//! `vemrb`: command line driver for mesh generation, offline training,
//! validation, VEM solves, convergence studies, reconstruction and timing.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "vemrb", version, about = "Lowest-order VEM with reduced-basis basis-function reconstruction")]
pub struct Cli {
    /// Worker threads for the data-parallel loops (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    /// Seed of every random stream used by the command.
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    /// Log progress at info level (RUST_LOG overrides).
    #[arg(short, long, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a polygonal mesh of the unit square.
    Mesh(MeshArgs),
    /// Generate a dataset of random convex polygons.
    GenDataset(GenDatasetArgs),
    /// Train reduced-basis databases.
    Offline(OfflineArgs),
    /// Accuracy statistics of the reduced basis on random test polygons.
    Validate(ValidateArgs),
    /// Solve a diffusion problem on a mesh.
    Solve(SolveArgs),
    /// Error tables over a sequence of meshes.
    Convergence(ConvergenceArgs),
    /// Reconstruct a stored solution on a line or over the whole mesh.
    Reconstruct(ReconstructArgs),
    /// Time the projection, finite element and reduced-basis evaluations.
    Bench(BenchArgs),
    /// Discontinuous-boundary-data demo: projection vs conforming reconstruction.
    DemoJump(DemoJumpArgs),
}

#[derive(Debug, Args)]
pub struct MeshArgs {
    /// Number of cells (a perfect square for `--kind squares`).
    #[arg(long, default_value_t = 100)]
    pub cells: usize,
    /// `voronoi` (centroidal, Lloyd-relaxed) or `squares`.
    #[arg(long, default_value = "voronoi")]
    pub kind: String,
    /// Maximum Lloyd iterations.
    #[arg(long, default_value_t = 100)]
    pub lloyd: usize,
    /// Short-edge collapse tolerance for Voronoi meshes (0 disables).
    #[arg(long, default_value_t = vemrb::polymesh::COLLAPSE_TOL)]
    pub collapse: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct GenDatasetArgs {
    /// Vertex count.
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 100)]
    pub count: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct OfflineArgs {
    /// Vertex counts: a list (`4,6,9`) or a range (`4..10`, inclusive).
    #[arg(long, default_value = "6")]
    pub n: String,
    /// Training polygons per vertex count.
    #[arg(long, default_value_t = 100)]
    pub train: usize,
    /// Largest reduced basis kept.
    #[arg(long, default_value_t = 20)]
    pub mmax: usize,
    /// Reference mesh size.
    #[arg(long, default_value_t = 0.02)]
    pub delta: f64,
    /// Snapshot mesh size on the training polygons (defaults to `--delta`).
    #[arg(long)]
    pub delta_k: Option<f64>,
    /// `independent` or `pulled-back` snapshot meshes.
    #[arg(long, default_value = "independent")]
    pub snapshots: String,
    /// Output library root; one `n<N>/` directory per vertex count.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub db: PathBuf,
    #[arg(long, default_value_t = 6)]
    pub n: usize,
    #[arg(long, default_value_t = 500)]
    pub tests: usize,
    /// Basis sizes; 0 is the projection alone.
    #[arg(long, default_value = "0,1,2,5,10,20", value_delimiter = ',')]
    pub m: Vec<usize>,
    /// Finite element mesh size of the reference solution (defaults to the database's).
    #[arg(long)]
    pub delta_fe: Option<f64>,
    /// Dof cases: `smooth`, `random`.
    #[arg(long, default_value = "smooth,random", value_delimiter = ',')]
    pub cases: Vec<String>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Clone)]
pub struct ProblemArgs {
    /// `poisson`, `test1`, `test2`, `smooth`, `patch`, `jump` or `custom`.
    #[arg(long, default_value = "poisson")]
    pub problem: String,
    /// Frequency ν of test1, ν₁ of test2.
    #[arg(long)]
    pub nu: Option<f64>,
    /// Frequency ν₂ of test2.
    #[arg(long)]
    pub nu2: Option<f64>,
    /// Diffusion tensor `k11,k12,k21,k22` for `custom` and `patch`.
    #[arg(long, value_delimiter = ',')]
    pub tensor: Option<Vec<f64>>,
    /// Constant source of `custom`.
    #[arg(long, default_value_t = 1.0)]
    pub source: f64,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub mesh: PathBuf,
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// `dofi`, `drecipe`, `rb` or `rb:<M>`.
    #[arg(long, default_value = "dofi")]
    pub stab: String,
    /// Reduced-basis library root (needed by `rb`).
    #[arg(long)]
    pub db: Option<PathBuf>,
    /// Basis size of `--stab rb`.
    #[arg(long, default_value_t = 1)]
    pub m: usize,
    /// Use dofi-dofi on cells without a database instead of failing.
    #[arg(long)]
    pub downgrade: bool,
    /// Also estimate the condition number of the interior operator.
    #[arg(long)]
    pub condition: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ConvergenceArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[arg(long, default_value = "dofi,drecipe,rb:1", value_delimiter = ',')]
    pub stabs: Vec<String>,
    /// Cell counts of the mesh sequence.
    #[arg(long, default_value = "25,100,400,1600", value_delimiter = ',')]
    pub cells: Vec<usize>,
    /// `voronoi` or `squares`.
    #[arg(long, default_value = "voronoi")]
    pub mesh_kind: String,
    /// Reconstructions to measure: `pi`, `rb:<M>`, `fe:<relative δ>`.
    #[arg(long, default_value = "pi", value_delimiter = ',')]
    pub modes: Vec<String>,
    #[arg(long)]
    pub db: Option<PathBuf>,
    /// Also write condition-number estimates.
    #[arg(long)]
    pub condition: bool,
    /// Maximum Lloyd iterations.
    #[arg(long, default_value_t = 100)]
    pub lloyd: usize,
    /// Short-edge collapse tolerance for Voronoi meshes (0 disables).
    #[arg(long, default_value_t = vemrb::polymesh::COLLAPSE_TOL)]
    pub collapse: f64,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReconstructArgs {
    #[arg(long)]
    pub mesh: PathBuf,
    /// Solution file (`VEMSOL v1`).
    #[arg(long)]
    pub sol: PathBuf,
    /// `pi`, `rb:<M>` or `fe:<relative δ>`.
    #[arg(long, default_value = "rb:1")]
    pub mode: String,
    #[arg(long)]
    pub db: Option<PathBuf>,
    /// Sample the segment `x0,y0,x1,y1` instead of exporting the whole field.
    #[arg(long, value_delimiter = ',')]
    pub line: Option<Vec<f64>>,
    /// Points on the segment.
    #[arg(long, default_value_t = 201)]
    pub count: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub db: PathBuf,
    /// Vertex count (comma list allowed).
    #[arg(long, default_value = "6", value_delimiter = ',')]
    pub n: Vec<usize>,
    #[arg(long, default_value_t = 100)]
    pub polygons: usize,
    /// Repetitions of the cheap batches; the fastest is reported.
    #[arg(long, default_value_t = 5)]
    pub repeats: usize,
    #[arg(long, default_value = "1,5,30,60", value_delimiter = ',')]
    pub m: Vec<usize>,
    /// Finite element mesh size on the normalized polygons.
    #[arg(long, default_value_t = 0.01)]
    pub fe_delta: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DemoJumpArgs {
    #[arg(long, default_value_t = 100)]
    pub cells: usize,
    #[arg(long)]
    pub db: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub m: usize,
    /// Maximum Lloyd iterations.
    #[arg(long, default_value_t = 100)]
    pub lloyd: usize,
    /// Short-edge collapse tolerance for Voronoi meshes (0 disables).
    #[arg(long, default_value_t = vemrb::polymesh::COLLAPSE_TOL)]
    pub collapse: f64,
    /// Points on the sampled diagonal.
    #[arg(long, default_value_t = 401)]
    pub count: usize,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

/// Exit status of each error category of the library.
fn exit_code(category: &str) -> u8 {
    match category {
        "invalid-argument" => 2,
        "degenerate-triangle" => 10,
        "generation-failure" => 11,
        "resource-limit" => 12,
        "assembly-error" => 13,
        "solver-failure" => 14,
        "out-of-domain" => 15,
        "numeric-failure" => 16,
        "no-database-for-n" => 17,
        "reduced-solver-failure" => 18,
        "parse-error" => 19,
        "load-error" => 20,
        "db-not-found" => 21,
        "io-error" => 22,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match vemrb::par::with_threads(cli.threads, || commands::run(&cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let category = e
                .chain()
                .find_map(|c| c.downcast_ref::<vemrb::Error>())
                .map_or("other", |e| e.category());
            eprintln!("error [{category}]: {e:#}");
            ExitCode::from(exit_code(category))
        }
    }
}
