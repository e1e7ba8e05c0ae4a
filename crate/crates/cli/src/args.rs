use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Exact and Monte Carlo checks of backward-conditional Bell and GHZ models.
///
/// Angles are in radians everywhere; there is no degrees option.
#[derive(Debug, Parser)]
#[command(name = "retrobell", version, args_override_self = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Output format (default json; csv for emit-curve).
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,

    /// Worker threads for scans and sampling.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// `key=value` file of defaults; command-line flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run exact verification checks over a settings grid.
    #[command(args_override_self = true)]
    Verify(VerifyArgs),
    /// CHSH values, Tsirelson scans and the local bound.
    #[command(args_override_self = true)]
    Chsh(ChshArgs),
    /// Enumerate the 64 classical GHZ assignments.
    #[command(name = "ghz-exhaust", args_override_self = true)]
    GhzExhaust(ExhaustArgs),
    /// Sample runs and compare against the exact distribution.
    #[command(args_override_self = true)]
    Sample(SampleArgs),
    /// Correlation E against the angle difference, as a table.
    #[command(name = "emit-curve", args_override_self = true)]
    EmitCurve(CurveArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    Bell,
    Ghz,
    Prbox,
    Counterexample,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Bell => "bell",
            ModelKind::Ghz => "ghz",
            ModelKind::Prbox => "prbox",
            ModelKind::Counterexample => "counterexample",
        }
    }

    pub fn uses_angles(self) -> bool {
        matches!(self, ModelKind::Bell | ModelKind::Counterexample)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackendArg {
    Rational,
    Float,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Human,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CheckArg {
    Si,
    Nosignal,
    Recovery,
    KernelNorm,
}

impl CheckArg {
    pub const ALL: [CheckArg; 4] = [CheckArg::Si, CheckArg::Nosignal, CheckArg::Recovery, CheckArg::KernelNorm];

    pub fn name(self) -> &'static str {
        match self {
            CheckArg::Si => "si",
            CheckArg::Nosignal => "nosignal",
            CheckArg::Recovery => "recovery",
            CheckArg::KernelNorm => "kernel-norm",
        }
    }
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum, default_value = "bell")]
    pub model: ModelKind,

    /// Comma-separated subset of si,nosignal,recovery,kernel-norm (default all).
    #[arg(long, value_enum, value_delimiter = ',')]
    pub checks: Vec<CheckArg>,

    /// Restrict label-wise checks to one λ label (e.g. 1, lambda_bar, #0).
    #[arg(long)]
    pub label: Option<String>,

    /// Angles per wing in the grid (angle models only).
    #[arg(long, default_value_t = retrobell_core::backward::DEFAULT_RESOLUTION)]
    pub resolution: usize,

    #[arg(long, value_enum)]
    pub backend: Option<BackendArg>,
}

#[derive(Debug, Args)]
pub struct ChshArgs {
    #[arg(long, value_enum, default_value = "bell")]
    pub model: ModelKind,

    /// Bell state 1..4.
    #[arg(long, default_value_t = 1)]
    pub state: u8,

    /// λ label to condition on (defaults to the one matching --state).
    #[arg(long)]
    pub label: Option<String>,

    /// α1,α1′,α2,α2′ in radians.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub angles: Option<Vec<f64>>,

    /// Maximize the quantum value over a grid of all four angles.
    #[arg(long)]
    pub scan: bool,

    /// Grid points per angle for --scan.
    #[arg(long, default_value_t = retrobell_core::chsh::DEFAULT_SCAN_RESOLUTION)]
    pub resolution: usize,

    /// Enumerate the 16 deterministic local strategies instead.
    #[arg(long)]
    pub lhv: bool,

    #[arg(long, value_enum)]
    pub backend: Option<BackendArg>,
}

#[derive(Debug, Args)]
pub struct ExhaustArgs {
    /// Also list assignments meeting exactly three of the four constraints.
    #[arg(long)]
    pub list_near_misses: bool,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long, value_enum, default_value = "bell")]
    pub model: ModelKind,

    /// λ label to postselect on (default: the first label).
    #[arg(long)]
    pub label: Option<String>,

    /// Wing settings: radians for angle models, 0 or 1 for binary ones.
    #[arg(long, allow_negative_numbers = true)]
    pub alpha1: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    pub alpha2: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    pub alpha3: Option<String>,

    /// Accepted runs (or total runs with --unconditional).
    #[arg(long, default_value_t = 1_000_000)]
    pub n: u64,

    #[arg(long, env = "RETROBELL_SEED", default_value_t = 0)]
    pub seed: u64,

    /// Total draw budget (default 100 × n).
    #[arg(long)]
    pub cap: Option<u64>,

    /// Independent RNG streams; results depend on this, not on --threads.
    #[arg(long, default_value_t = 1)]
    pub shards: usize,

    /// Report statistics before postselection instead.
    #[arg(long)]
    pub unconditional: bool,

    #[arg(long, value_enum)]
    pub backend: Option<BackendArg>,
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    /// Bell state 1..4.
    #[arg(long, default_value_t = 1)]
    pub state: u8,

    /// Intervals over [0, 2π]; emits resolution + 1 rows.
    #[arg(long, default_value_t = 64)]
    pub resolution: usize,

    #[arg(long, value_enum)]
    pub backend: Option<BackendArg>,
}

/// Flags that take no value, for config-file expansion.
pub const SWITCHES: [&str; 4] = ["scan", "lhv", "list-near-misses", "unconditional"];

pub const COMMANDS: [&str; 5] = ["verify", "chsh", "ghz-exhaust", "sample", "emit-curve"];
