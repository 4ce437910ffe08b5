//! The `swipt` command-line front end.
//!
//! Exit codes: 0 success, 1 error, 2 infeasible channel (`solve` only).
//! Output is rendered in memory and written in one go, so a failed run never
//! leaves a partial file behind.

mod commands;
mod settings;
mod table;

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{Result, SwiptError};
use crate::mc::{Policy, SweepAxis};

pub use settings::{parse_key_values, Settings, DEFAULT_SEED, DEFAULT_TRIALS};
pub use table::{fmt_f64, Cell, Format, Table};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "swipt",
    version,
    about = "Resource allocation for a power-splitting SWIPT decode-and-forward relay"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Optimal allocation for one channel.
    #[command(allow_negative_numbers = true)]
    Solve(SolveArgs),
    /// One row per axis value and policy, on a fixed or fading channel.
    #[command(allow_negative_numbers = true)]
    Sweep(SweepArgs),
    /// Average throughput over Rician fading draws.
    #[command(allow_negative_numbers = true)]
    Mc(McArgs),
    /// Closed-form lower bound on the optimal rate.
    #[command(allow_negative_numbers = true)]
    Bound(BoundArgs),
    /// Brute-force grid optimum next to the solver result.
    #[command(allow_negative_numbers = true)]
    Oracle(OracleArgs),
    /// FLOP counts of bisection against the interior-point reference.
    #[command(allow_negative_numbers = true)]
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ParamArgs {
    /// File of `key = value` lines; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Source transmit power Q (mW).
    #[arg(long)]
    pub q: Option<f64>,
    /// Noise power (mW).
    #[arg(long)]
    pub sigma2: Option<f64>,
    /// Sample period T0 (s).
    #[arg(long, conflicts_with = "t0_us")]
    pub t0: Option<f64>,
    /// Sample period T0 (µs).
    #[arg(long)]
    pub t0_us: Option<f64>,
    /// Harvesting efficiency.
    #[arg(long)]
    pub eta: Option<f64>,
    /// Decoder static power (mW).
    #[arg(long)]
    pub pd: Option<f64>,
    /// Encoder static power (mW).
    #[arg(long)]
    pub pe: Option<f64>,
    /// Decoder energy per unit rate (mW per bit/s).
    #[arg(long)]
    pub eps_d: Option<f64>,
    /// Encoder energy per unit rate (mW per bit/s).
    #[arg(long)]
    pub eps_e: Option<f64>,
    /// Number of θ grid levels.
    #[arg(long)]
    pub n: Option<usize>,
    /// Relative bisection tolerance on P_t.
    #[arg(long)]
    pub tol_pt_rel: Option<f64>,
    #[arg(long)]
    pub tol_constraint: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Write the table here instead of stdout.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Clone, Args)]
pub struct FadingArgs {
    /// Rice factor; `inf` for a pure line-of-sight channel.
    #[arg(long = "K", visible_alias = "k")]
    pub k: Option<f64>,
    /// Mean S-R power gain.
    #[arg(long)]
    pub omega1: Option<f64>,
    /// Mean R-D power gain.
    #[arg(long)]
    pub omega2: Option<f64>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long, env = "SWIPT_SEED")]
    pub seed: Option<u64>,
}

fn parse_policy(s: &str) -> std::result::Result<Policy, String> {
    s.parse().map_err(|e: SwiptError| e.to_string())
}

fn parse_axis(s: &str) -> std::result::Result<SweepAxis, String> {
    s.parse().map_err(|e: SwiptError| e.to_string())
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    #[command(flatten)]
    pub out: OutputArgs,
    #[arg(long)]
    pub g1: Option<f64>,
    #[arg(long)]
    pub g2: Option<f64>,
    /// dynamic, conventional-half or no-cpc.
    #[arg(long, default_value = "dynamic", value_parser = parse_policy)]
    pub policy: Policy,
    /// Check a previously emitted record against the KKT conditions instead
    /// of solving. Parameters in the record's header are applied first.
    #[arg(long)]
    pub verify: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    #[command(flatten)]
    pub out: OutputArgs,
    #[command(flatten)]
    pub fading: FadingArgs,
    /// g1, g2, q, eps_sum, pd_pe, k, omega1 or omega2.
    #[arg(long, value_parser = parse_axis)]
    pub axis: SweepAxis,
    /// Comma-separated monotone axis values.
    #[arg(long, value_delimiter = ',', required = true)]
    pub values: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "dynamic", value_parser = parse_policy)]
    pub policies: Vec<Policy>,
    #[arg(long)]
    pub g1: Option<f64>,
    #[arg(long)]
    pub g2: Option<f64>,
    /// Average over fading draws. Implied by --trials and by the k and omega axes.
    #[arg(long)]
    pub fading_channel: bool,
}

#[derive(Debug, Clone, Args)]
pub struct McArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    #[command(flatten)]
    pub out: OutputArgs,
    #[command(flatten)]
    pub fading: FadingArgs,
    #[arg(long, value_delimiter = ',', default_value = "dynamic", value_parser = parse_policy)]
    pub policies: Vec<Policy>,
}

#[derive(Debug, Clone, Args)]
pub struct BoundArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    #[command(flatten)]
    pub out: OutputArgs,
    #[arg(long)]
    pub g1: Option<f64>,
    #[arg(long)]
    pub g2: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    #[command(flatten)]
    pub out: OutputArgs,
    #[arg(long)]
    pub g1: Option<f64>,
    #[arg(long)]
    pub g2: Option<f64>,
    /// Pin θ and compare against the fixed-θ solve.
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long, default_value_t = 200)]
    pub n_theta: usize,
    #[arg(long, default_value_t = 400)]
    pub n_lambda: usize,
    #[arg(long, default_value_t = 400)]
    pub n_pt: usize,
    #[arg(long, default_value_t = 2)]
    pub refine_rounds: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// P_d = P_e = 10 mW, ε_d + ε_e = 0.1, g₂ = 0.3.
    Fig3Caption,
    /// P_d = P_e = 5 mW, ε_d + ε_e = 10, g₂ = 0.1.
    Fig3Text,
}

impl Preset {
    pub fn as_str(&self) -> &'static str {
        match self {
            Preset::Fig3Caption => "fig3-caption",
            Preset::Fig3Text => "fig3-text",
        }
    }

    /// Applies the preset's circuit parameters and R-D gain.
    pub fn apply(&self, s: &mut Settings) {
        let (pd, eps, g2) = match self {
            Preset::Fig3Caption => (10.0, 0.1, 0.3),
            Preset::Fig3Text => (5.0, 10.0, 0.1),
        };
        s.params.pd = pd;
        s.params.pe = pd;
        s.params.eps_d = eps / 2.0;
        s.params.eps_e = eps / 2.0;
        s.g2 = Some(g2);
    }
}

pub const DEFAULT_BENCH_G1: [f64; 10] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0];

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    #[command(flatten)]
    pub out: OutputArgs,
    #[arg(long, value_enum, default_value_t = Preset::Fig3Caption)]
    pub preset: Preset,
    /// Overrides the preset's R-D gain.
    #[arg(long)]
    pub g2: Option<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_BENCH_G1)]
    pub g1_values: Vec<f64>,
    /// Interior-point stopping tolerance (relative duality gap). Defaults to
    /// the bisection tolerance so both methods target the same accuracy.
    #[arg(long)]
    pub ip_tol: Option<f64>,
}

/// Outcome of a command before rendering.
pub struct Output {
    pub table: Table,
    pub exit_code: i32,
    /// Printed to stderr after the table is written.
    pub note: Option<String>,
}

/// Runs the CLI on `args` (including the program name) and returns the exit
/// code. Tables go to `--output` or `stdout`; diagnostics go to `stderr`.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{}", e.render());
                    EXIT_OK
                }
                _ => {
                    let _ = write!(stderr, "{}", e.render());
                    EXIT_ERROR
                }
            };
        }
    };
    let out_args = match &cli.command {
        Command::Solve(a) => &a.out,
        Command::Sweep(a) => &a.out,
        Command::Mc(a) => &a.out,
        Command::Bound(a) => &a.out,
        Command::Oracle(a) => &a.out,
        Command::Bench(a) => &a.out,
    }
    .clone();
    match commands::dispatch(&cli.command).and_then(|o| emit(o, &out_args, stdout)) {
        Ok((code, note)) => {
            if let Some(note) = note {
                let _ = writeln!(stderr, "{note}");
            }
            code
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_ERROR
        }
    }
}

fn emit(out: Output, args: &OutputArgs, stdout: &mut dyn Write) -> Result<(i32, Option<String>)> {
    let bytes = out.table.render(args.format)?;
    match &args.output {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &bytes) {
                let _ = std::fs::remove_file(path);
                return Err(SwiptError::Config(format!("cannot write {}: {e}", path.display())));
            }
        }
        None => {
            stdout
                .write_all(&bytes)
                .and_then(|_| stdout.flush())
                .map_err(|e| SwiptError::Config(format!("cannot write output: {e}")))?;
        }
    }
    Ok((out.exit_code, out.note))
}
