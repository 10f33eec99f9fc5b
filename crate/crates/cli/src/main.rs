mod commands;
mod output;
mod spec;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

/// Correlated equilibria, gradient dynamics and Bertrand certificates.
#[derive(Parser, Debug)]
#[command(name = "semicoarse", version)]
struct Cli {
    /// Directory receiving output files (relative output names are placed here)
    #[arg(long, global = true, env = "SEMICOARSE_OUT_DIR", default_value = ".")]
    out_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// Generate a game and write it as JSON
    Gen(GenArgs),
    /// Solve an equilibrium program on a game file
    Solve(SolveArgs),
    /// Run projected gradient ascent and report regrets
    Dynamics(DynamicsArgs),
    /// Build and check the dual certificate of a Bertrand or first-price market
    Certify(CertifyArgs),
    /// Reproduce the price-distribution experiments
    Experiment(ExperimentArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum GenKind {
    Bertrand,
    Firstprice,
    Badgame,
    Rps,
    Random,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize, PartialEq)]
#[serde(rename_all = "kebab-case")]
enum Gauge {
    Uniform,
    Square,
}

#[derive(Args, Debug, Serialize)]
struct GenArgs {
    kind: GenKind,
    /// Price or bid grid resolution
    #[arg(long, default_value_t = 10)]
    n: u32,
    /// Firm costs as grid indices, e.g. 0,0,5
    #[arg(long, default_value = "0,0")]
    costs: String,
    /// inelastic, linear or samples:d0,..,dn
    #[arg(long, default_value = "inelastic")]
    demand: String,
    /// Buyer values as grid indices
    #[arg(long, default_value = "10,10")]
    values: String,
    #[arg(long, value_enum, default_value = "uniform")]
    gauge: Gauge,
    /// Action counts per player
    #[arg(long, default_value = "3,3")]
    sizes: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "game.json")]
    #[serde(skip)]
    output: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum SolveKind {
    Cce,
    Ce,
    Semicoarse,
    SemicoarseExt,
    Lyapunov,
    Weighted,
}

#[derive(Args, Debug, Serialize)]
struct SolveArgs {
    #[arg(long, required_unless_present = "lp", conflicts_with = "lp")]
    game: Option<PathBuf>,
    /// Solve a program given in LP text format instead of an equilibrium program
    #[arg(long)]
    lp: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "semicoarse-ext")]
    kind: SolveKind,
    /// ones, not-nash, indicator:PLAYER:ACTION, square or distance:x1,..,xN
    #[arg(long, default_value = "not-nash")]
    objective: String,
    /// Action weights for the weighted program, players separated by ';'
    #[arg(long)]
    weights: Option<String>,
    /// Solve in exact rational arithmetic
    #[arg(long)]
    exact: bool,
    /// Also write the program in LP text format
    #[arg(long)]
    #[serde(skip)]
    export_lp: Option<PathBuf>,
    #[arg(long, default_value = "solution.json")]
    #[serde(skip)]
    output: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Init {
    Uniform,
    Random,
}

#[derive(Args, Debug, Serialize)]
struct DynamicsArgs {
    #[arg(long, required_unless_present = "meanbased_demo")]
    game: Option<PathBuf>,
    /// constant:C, inverse-sqrt:C or power:C:ALPHA
    #[arg(long, default_value = "inverse-sqrt:0.5")]
    schedule: String,
    #[arg(long, default_value_t = 1000)]
    rounds: usize,
    /// Run the rescaled dynamics with these action weights (players separated by ';')
    #[arg(long)]
    weights: Option<String>,
    #[arg(long, value_enum, default_value = "uniform")]
    init: Init,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Skip cycles longer than this in the regret report
    #[arg(long)]
    max_cycle_len: Option<usize>,
    /// Run the two-phase experts scenario instead of a game
    #[arg(long)]
    meanbased_demo: bool,
    #[arg(long, default_value_t = 2)]
    actions: usize,
    /// Step scale of the experts scenario
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    /// Step exponent of the experts scenario
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long, default_value = "trajectory.csv")]
    #[serde(skip)]
    trajectory: PathBuf,
    #[arg(long, default_value = "regret.json")]
    #[serde(skip)]
    regret: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum MarketKind {
    Bertrand,
    Firstprice,
}

#[derive(Args, Debug, Serialize)]
struct CertifyArgs {
    kind: MarketKind,
    #[arg(long, default_value_t = 10)]
    n: u32,
    #[arg(long, default_value = "0,0,0")]
    costs: String,
    #[arg(long, default_value = "inelastic")]
    demand: String,
    #[arg(long, default_value = "10,10,10")]
    values: String,
    #[arg(long, default_value = "certificate.json")]
    #[serde(skip)]
    output: PathBuf,
    #[arg(long, default_value = "verification.json")]
    #[serde(skip)]
    report: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Figure {
    Fig1,
    Fig2,
}

#[derive(Args, Debug, Serialize)]
struct ExperimentArgs {
    figure: Figure,
    /// Grid sizes to run, e.g. 6,8,10
    #[arg(long, default_value = "10")]
    n: String,
    /// Instances solved in parallel
    #[arg(long, default_value_t = 1)]
    #[serde(skip)]
    jobs: usize,
}

/// Process exit statuses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exit {
    Usage = 1,
    Infeasible = 2,
    Unbounded = 3,
    Precondition = 4,
    Stall = 5,
    /// A certificate was built but failed verification.
    Rejected = 6,
}

#[derive(Debug)]
pub struct Failure {
    pub exit: Exit,
    pub msg: String,
}

impl Failure {
    pub fn new(exit: Exit, msg: impl Into<String>) -> Self {
        Failure { exit, msg: msg.into() }
    }
}

impl From<semicoarse::Error> for Failure {
    fn from(e: semicoarse::Error) -> Self {
        use semicoarse::lp::LpError;
        use semicoarse::Error as E;
        let exit = match &e {
            E::Precondition(_) | E::CertificateUnavailable(_) => Exit::Precondition,
            E::Lp(LpError::Stall { .. }) => Exit::Stall,
            _ => Exit::Usage,
        };
        Failure::new(exit, e.to_string())
    }
}

impl From<semicoarse::lp::LpError> for Failure {
    fn from(e: semicoarse::lp::LpError) -> Self {
        semicoarse::Error::from(e).into()
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::new(Exit::Usage, e.to_string())
    }
}

impl From<String> for Failure {
    fn from(msg: String) -> Self {
        Failure::new(Exit::Usage, msg)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(Exit::Usage as u8) } else { ExitCode::SUCCESS };
        }
    };
    let out = output::OutDir(cli.out_dir.clone());
    let fp = output::fingerprint(&cli.command);
    let result = match &cli.command {
        Command::Gen(a) => commands::gen(a, &out, &fp),
        Command::Solve(a) => commands::solve(a, &out, &fp),
        Command::Dynamics(a) => commands::dynamics(a, &out, &fp),
        Command::Certify(a) => commands::certify(a, &out, &fp),
        Command::Experiment(a) => commands::experiment(a, &out, &fp),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.exit as u8)
        }
    }
}
