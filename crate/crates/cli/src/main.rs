//! `chm2u`: generate, verify, measure and search 2-unitary complex
//! Hadamard matrices from the command line.
//!
//! Exit codes: 0 when all requested checks pass, 1 on a failed check or a
//! non-converged run, 2 on usage errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod report;

#[derive(Parser)]
#[command(
    name = "chm2u",
    version,
    about = "2-unitary complex Hadamard matrix toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write one of the built-in matrices to a file.
    Generate(GenerateArgs),
    /// Run checks against a matrix file and record a certificate.
    Verify(VerifyArgs),
    /// Compute the defect of a matrix file.
    Defect(DefectArgs),
    /// Drive the fixed-point iteration from a perturbed permutation seed.
    Sinkhorn(SinkhornArgs),
    /// Minimize the CHM-ization objective over two local unitaries.
    Chmize(ChmizeArgs),
    /// Summarize certificates in a directory as a table.
    Report(ReportArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum GenerateKind {
    /// The 19-parameter family H(alpha) of order 36.
    Hadamard36,
    /// The biunimodular triple U_1..U_3 and the deformation U_3(a).
    Biunimodular,
    /// Fourier matrix of a given order (unimodular entries).
    Fourier,
    /// The d = 3 reference (F_3 x F_3) P_9.
    Ame43,
    /// The base exponent table B as a Butson file.
    BaseB,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(value_enum)]
    kind: GenerateKind,
    /// 19 comma-separated values in sixths of a turn, or "zero" / "sigma".
    #[arg(long)]
    alpha: Option<String>,
    /// Family index (biunimodular: 1..3) or order (fourier).
    #[arg(long)]
    index: Option<usize>,
    /// Free phase of U_3(a), in turns.
    #[arg(long)]
    a: Option<f64>,
    /// Diagonal-phase parameter: alpha = delta(gamma).
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    out: PathBuf,
    /// Payload representation; defaults to the most exact one available.
    #[arg(long, value_enum)]
    repr: Option<ReprArg>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ReprArg {
    Complex,
    Butson,
    PhaseSixths,
}

#[derive(Args)]
struct VerifyArgs {
    path: PathBuf,
    /// Comma-separated: unitary,two-unitary,chm,butson,symmetric.
    #[arg(long)]
    checks: String,
    /// Scale for unitary / two-unitary checks (stored entries divided by it).
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    /// Tolerance; defaults to $CHM2U_TOL or 1e-10.
    #[arg(long)]
    tol: Option<f64>,
    /// Certificate path; defaults to <input>.cert.json.
    #[arg(long)]
    cert: Option<PathBuf>,
    /// Largest root order tried by the butson check.
    #[arg(long, default_value_t = chm2u_core::hadamard::DEFAULT_Q_MAX)]
    q_max: i64,
}

#[derive(Args)]
struct DefectArgs {
    path: PathBuf,
    /// Certificate path; defaults to <input>.cert.json.
    #[arg(long)]
    cert: Option<PathBuf>,
}

#[derive(Args)]
struct SinkhornArgs {
    /// Local dimension; the iteration runs on d^2 x d^2 matrices.
    #[arg(long)]
    d: usize,
    /// Seed permutation file; defaults to the bundled one for d = 6 and
    /// the identity otherwise.
    #[arg(long)]
    seed_perm: Option<PathBuf>,
    #[arg(long, default_value_t = 0.05)]
    eta: f64,
    #[arg(long, default_value_t = 0.0)]
    epsilon: f64,
    /// Chop ramp "start,end,steps".
    #[arg(long)]
    ramp: Option<String>,
    #[arg(long, default_value_t = 2000)]
    t_max: usize,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, default_value_t = 0)]
    rng: u64,
    /// Apply the realignments in the opposite order (transpose first).
    #[arg(long)]
    gamma_first: bool,
    /// Final matrix (complex representation, unitary scale).
    #[arg(long)]
    out: PathBuf,
    /// Trace file (config, per-step residuals, status).
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct ChmizeArgs {
    path: PathBuf,
    #[arg(long, default_value_t = 32)]
    restarts: usize,
    /// Objective evaluations allowed per restart.
    #[arg(long, default_value_t = 60_000)]
    budget: usize,
    #[arg(long, default_value_t = 0)]
    rng: u64,
    /// Also try the reshuffled and partially transposed inputs.
    #[arg(long)]
    realign: bool,
    /// Stop once the objective falls below this (default 1e-7).
    #[arg(long)]
    target: Option<f64>,
    /// Write the outcome (value, local unitaries) as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    dir: PathBuf,
}

fn default_tol() -> f64 {
    std::env::var("CHM2U_TOL")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(1e-10)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Generate(args) => commands::generate(args),
        Command::Verify(args) => commands::verify(args),
        Command::Defect(args) => commands::defect(args),
        Command::Sinkhorn(args) => commands::sinkhorn(args),
        Command::Chmize(args) => commands::chmize(args),
        Command::Report(args) => report::report(args),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}
