//! `mglab`: batch experiments on matchgate parity embeddings.
//!
//! Exit codes: 0 success, 1 domain failure (verification failed, learner
//! failed), 2 usage error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;

#[derive(Debug, Parser)]
#[command(name = "mglab", version, about = "Matchgate parity-embedding laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build the circuit whose Born distribution is the (noisy) fermionized parity distribution.
    Embed(EmbedArgs),
    /// Check a circuit's Born distribution against the fermionized parity distribution.
    Verify(VerifyArgs),
    /// Learn a parity through simulated statistical queries to the fermionized distribution.
    Sq(SqArgs),
    /// Ask one catalogued statistical query of a parity distribution.
    Query(QueryArgs),
    /// Learn a parity from samples of the embedded noisy circuit.
    Lpn(LpnArgs),
    /// Sample-based elimination versus exhaustive statistical queries.
    Separation(SeparationArgs),
    /// Export one of the parity distributions as CSV.
    Dist(DistArgs),
}

#[derive(Debug, Args)]
struct Locality {
    /// Realize the output permutation with FSWAP gates (default).
    #[arg(long, conflicts_with = "nonlocal")]
    local: bool,
    /// Leave the permutation as an output relabelling (depth-2 circuit plus noise gate).
    #[arg(long)]
    nonlocal: bool,
}

impl Locality {
    fn is_local(&self) -> bool {
        !self.nonlocal
    }
}

#[derive(Debug, Args)]
struct SeedArg {
    /// Master seed; every random stream is derived from it.
    #[arg(long, env = "MGLAB_SEED")]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct EmbedArgs {
    #[arg(long)]
    secret: String,
    #[arg(long, default_value_t = 0.0)]
    eta: f64,
    #[command(flatten)]
    locality: Locality,
    /// Circuit JSON destination (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Plan JSON destination (defaults to `<out>.plan.json`).
    #[arg(long)]
    plan: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long)]
    circuit: PathBuf,
    #[arg(long)]
    secret: String,
    #[arg(long, default_value_t = 0.0)]
    eta: f64,
    /// Plan written by `embed`; required to undo a non-local output relabelling.
    #[arg(long)]
    plan: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum, PartialEq, Eq)]
enum ModeArg {
    Exact,
    Empirical,
    Adversarial,
}

#[derive(Debug, Args)]
struct SqArgs {
    #[arg(long)]
    n: usize,
    /// Secret as 0/1 text; drawn from the seed when omitted.
    #[arg(long)]
    secret: Option<String>,
    /// Tolerance of the simulated queries; the underlying oracle answers within tau/2.
    #[arg(long, default_value_t = 0.2)]
    tau: f64,
    #[arg(long, value_enum, default_value_t = ModeArg::Adversarial)]
    mode: ModeArg,
    /// Shots per query in empirical mode (Hoeffding default for tau/2).
    #[arg(long)]
    shots: Option<usize>,
    #[command(flatten)]
    seed: SeedArg,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum, PartialEq, Eq)]
enum QueryFamily {
    /// `(-1)^{a.x + b.y}`.
    Correlator,
    /// `1[v = target]`.
    Indicator,
}

#[derive(Debug, Clone, Copy, ValueEnum, PartialEq, Eq)]
enum QueryTarget {
    /// The parity distribution on `(x, y)`.
    D,
    /// The fermionized distribution on `(x, y, z)`, simulated with two queries to `D`.
    M,
}

#[derive(Debug, Args)]
struct QueryArgs {
    #[arg(long)]
    secret: String,
    #[arg(long, value_enum)]
    family: QueryFamily,
    /// Correlator mask on `x`.
    #[arg(long)]
    a: Option<String>,
    /// Correlator weight on `y`.
    #[arg(long, default_value_t = 1)]
    b: u8,
    /// Indicator string, over `(x, y)` or `(x, y, z)` depending on `--target`.
    #[arg(long)]
    point: Option<String>,
    #[arg(long, value_enum, default_value_t = QueryTarget::D)]
    target: QueryTarget,
    #[arg(long, default_value_t = 0.1)]
    tau: f64,
    #[arg(long, value_enum, default_value_t = ModeArg::Exact)]
    mode: ModeArg,
    #[arg(long)]
    shots: Option<usize>,
    #[command(flatten)]
    seed: SeedArg,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct LpnArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    secret: Option<String>,
    #[arg(long, default_value_t = 0.1)]
    eta: f64,
    #[arg(long, default_value_t = 500)]
    samples: usize,
    /// Independent trials, each with its own derived seed and secret.
    #[arg(long, default_value_t = 1)]
    trials: usize,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[command(flatten)]
    seed: SeedArg,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SeparationArgs {
    #[arg(long, default_value_t = 10)]
    n: usize,
    #[arg(long, default_value_t = 30)]
    samples: usize,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 0.2)]
    tau: f64,
    #[command(flatten)]
    seed: SeedArg,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum, PartialEq, Eq)]
enum DistKind {
    Parity,
    NoisyParity,
    Fermionized,
    FermionizedNoisy,
    Even,
}

#[derive(Debug, Args)]
struct DistArgs {
    #[arg(long, value_enum)]
    kind: DistKind,
    #[arg(long)]
    secret: Option<String>,
    #[arg(long, default_value_t = 0.0)]
    eta: f64,
    /// Width for `--kind even`.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Embed(a) => commands::embed(a),
        Command::Verify(a) => commands::verify(a),
        Command::Sq(a) => commands::sq(a),
        Command::Query(a) => commands::query(a),
        Command::Lpn(a) => commands::lpn(a),
        Command::Separation(a) => commands::separation(a),
        Command::Dist(a) => commands::dist(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            e.exit_code()
        }
    }
}
