use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;

#[derive(Parser, Debug, Clone)]
#[command(name = "ellgraph", version, about = "Spectra, isoperimetry and heat flow of elliptic operators on weighted graphs")]
pub struct Cli {
    /// Worker threads for parallel sections (default: available parallelism)
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Dirichlet ground state λ₀(L_U) of a finite region
    Spectrum(SpectrumArgs),
    /// Ground state by exhaustion with balls around an origin
    GroundState(GroundStateArgs),
    /// Isoperimetric constants and the Cheeger lower bound
    Cheeger(CheegerArgs),
    /// Heat kernel slice p_t(x, ·) with certified errors
    HeatKernel(HeatKernelArgs),
    /// Parabolic initial value problem on a window
    Ivp(IvpArgs),
    /// Ground-state transform and the completeness identity
    Htransform(HtransformArgs),
    /// Maximum principle, Harnack and envelope checks (exit 3 on violation)
    Verify(VerifyArgs),
    /// Dense eigenvalues of a coordinate-format matrix
    Eigh(EighArgs),
    /// Run a TOML config: `command = "<name>"` plus that command's flags as keys
    Run {
        config: PathBuf,
    },
}

#[derive(Args, Debug, Clone)]
pub struct GraphArgs {
    /// `lattice:<d>`, `tree:<degree>`, `file:<path>`, or a path to an edge list
    #[arg(long, visible_alias = "generator")]
    pub graph: String,
    /// `const:<v>` for every edge, or `file:<path>` with `<x> <y> <a>` overrides (finite graphs)
    #[arg(long)]
    pub weights: Option<String>,
    /// Potential file with lines `<x> <W_x>`
    #[arg(long)]
    pub potential: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug, Clone)]
pub struct OutputArgs {
    /// Report path (default: stdout)
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// CSV is available for tabular reports only
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Args, Debug, Clone)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    /// `all`, `ball:<center>:<radius>` or `vertices:<id,id,...>`
    #[arg(long, default_value = "all")]
    pub region: String,
    /// Residual tolerance of the eigensolver, relative to the matrix scale
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    #[arg(long, default_value_t = 10_000)]
    pub max_iterations: usize,
    /// Also write L_U in coordinate format
    #[arg(long)]
    pub matrix_out: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Args, Debug, Clone)]
pub struct GroundStateArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[arg(long, default_value_t = 0)]
    pub origin: usize,
    /// `a..b` (inclusive) or a comma list
    #[arg(long)]
    pub levels: String,
    /// Change below which a ground-state value counts as converged
    #[arg(long, default_value_t = 1e-8)]
    pub stabilization_tol: f64,
    /// Report a Richardson extrapolation of λ (heuristic)
    #[arg(long)]
    pub richardson: bool,
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Args, Debug, Clone)]
pub struct CheegerArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    /// `exhaustive`, `balls:<origin>:<max-radius>` or `greedy:<seeds>:<steps>`
    #[arg(long, default_value = "exhaustive")]
    pub strategy: String,
    /// Restrict exhaustive search to the interior of this region and report its λ₀
    #[arg(long)]
    pub region: Option<String>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Args, Debug, Clone)]
pub struct HeatKernelArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[arg(long, default_value_t = 0)]
    pub source: usize,
    #[arg(long)]
    pub t: f64,
    #[arg(long, default_value_t = 10)]
    pub radius: usize,
    /// Sup-norm error budget
    #[arg(long, default_value_t = 1e-10)]
    pub err: f64,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Args, Debug, Clone)]
pub struct IvpArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    /// `values:<path>` with `<x> <u0>` lines, or `growth:<c1>:<c2>` for u0(y) = c1·e^{c2·d(origin,y)}
    #[arg(long)]
    pub data: String,
    #[arg(long, default_value_t = 0)]
    pub origin: usize,
    #[arg(long)]
    pub t: f64,
    #[arg(long, default_value_t = 3)]
    pub window_radius: usize,
    #[arg(long, default_value_t = 1e-9)]
    pub err: f64,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Args, Debug, Clone)]
pub struct HtransformArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[arg(long, default_value_t = 0)]
    pub origin: usize,
    /// Exhaustion levels for generated graphs
    #[arg(long, default_value = "60")]
    pub levels: String,
    /// Comma list of times
    #[arg(long, default_value = "0,0.1,0.5,1,2")]
    pub times: String,
    #[arg(long, default_value_t = 10)]
    pub window_radius: usize,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    /// Random functions for the conjugation identity
    #[arg(long, default_value_t = 4)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum CheckKind {
    All,
    MaxPrinciple,
    Harnack,
    Envelope,
    Parabolic,
}

#[derive(Args, Debug, Clone)]
pub struct VerifyArgs {
    /// Graph to check; without it the bundled battery runs
    #[arg(long, visible_alias = "generator")]
    pub graph: Option<String>,
    #[arg(long)]
    pub weights: Option<String>,
    #[arg(long)]
    pub potential: Option<PathBuf>,
    /// Region for the checks (see `spectrum`)
    #[arg(long, default_value = "all")]
    pub region: String,
    #[arg(long, value_enum, default_value_t = CheckKind::All)]
    pub check: CheckKind,
    /// Function to check (`<x> <f>` lines) instead of the Dirichlet ground state
    #[arg(long)]
    pub function: Option<PathBuf>,
    /// Relative tolerance of hypotheses and conclusions
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    /// Shift a negative potential to W ≥ 0 instead of rejecting it
    #[arg(long)]
    pub shift_potential: bool,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Args, Debug, Clone)]
pub struct EighArgs {
    /// Coordinate-format matrix `<i> <j> <value>`
    #[arg(long)]
    pub matrix: PathBuf,
    #[command(flatten)]
    pub out: OutputArgs,
}
