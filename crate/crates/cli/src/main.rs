//! `padic-uncertainty`: batch verification of the p-adic uncertainty
//! inequalities.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 a mathematical
//! violation was detected.

mod config;
mod eval;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use padic_uncertainty::campaign::{self, Failure};
use padic_uncertainty::{run_campaign, CampaignConfig, CheckId, ReportFormat, Suite};

use crate::config::CampaignArgs;

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_VIOLATION: u8 = 2;

pub const THREADS_ENV: &str = "PADIC_UNCERTAINTY_THREADS";

#[derive(Parser)]
#[command(
    name = "padic-uncertainty",
    version,
    about = "Exact verification of p-adic uncertainty inequalities"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a randomized campaign over every inequality and identity.
    Verify(CampaignArgs),
    /// Evaluate Δ and every applicable check on one serialized instance.
    Eval(EvalArgs),
    /// Run only the expansion identity and the self-adjoint notes.
    Identity(CampaignArgs),
    /// Check that the harness detects deliberately reversed comparisons.
    Selftest(SelftestArgs),
}

#[derive(Args)]
struct EvalArgs {
    /// Instance JSON file.
    instance: PathBuf,
    #[arg(long, default_value = "text")]
    format: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SelftestArgs {
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

#[derive(Debug)]
pub struct CliError(pub String);

impl<E: std::fmt::Display> From<E> for CliError {
    fn from(e: E) -> Self {
        CliError(e.to_string())
    }
}

fn open_output(out: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match out {
        Some(path) => Box::new(BufWriter::new(
            File::create(path).map_err(|e| CliError(format!("cannot write {}: {e}", path.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn configure_threads() -> Result<(), CliError> {
    if let Ok(raw) = std::env::var(THREADS_ENV) {
        let n: usize = raw
            .parse()
            .map_err(|_| CliError(format!("{THREADS_ENV} must be a positive integer, got {raw:?}")))?;
        rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global()?;
    }
    Ok(())
}

fn cmd_campaign(args: &CampaignArgs, suite: Suite) -> Result<u8, CliError> {
    let config = args.resolve(suite)?;
    let format: ReportFormat = args.format.parse().map_err(CliError)?;
    let report = run_campaign(&config)?;
    let mut out = open_output(args.out.as_deref())?;
    campaign::emit_report(&report, format, &mut out)?;
    out.flush()?;
    if report.failed > 0 {
        eprintln!("{} violation(s) detected", report.failed);
        Ok(EXIT_VIOLATION)
    } else {
        Ok(EXIT_OK)
    }
}

fn cmd_selftest(args: &SelftestArgs) -> Result<u8, CliError> {
    let base = CampaignConfig {
        dims: vec![2, 3],
        trials_per_cell: 5,
        witnesses_per_instance: 3,
        seed: args.seed,
        ..CampaignConfig::default()
    };
    let honest = run_campaign(&CampaignConfig { suite: Suite::Identity, ..base.clone() })?;
    let mutated = run_campaign(&CampaignConfig { mutate: true, ..base })?;
    let reproduced = mutated
        .failures
        .iter()
        .all(|f: &Failure| matches!(f.recheck(), Ok(vs) if vs.iter().all(|v| !v.holds)));
    let mutated_checks: Vec<CheckId> =
        mutated.totals.iter().filter(|(_, t)| t.failed > 0).map(|(c, _)| *c).collect();
    println!("identity suite failures: {}", honest.failed);
    println!("mutated campaign failures: {}", mutated.failed);
    println!("mutated checks caught: {}", mutated_checks.len());
    println!("failures reproduce from their serialized instances: {reproduced}");
    let ok = honest.failed == 0 && mutated.failed > 0 && reproduced;
    println!("selftest: {}", if ok { "ok" } else { "FAILED" });
    Ok(if ok { EXIT_OK } else { EXIT_VIOLATION })
}

fn run(cli: Cli) -> Result<u8, CliError> {
    configure_threads()?;
    match cli.command {
        Command::Verify(args) => cmd_campaign(&args, Suite::Full),
        Command::Identity(args) => cmd_campaign(&args, Suite::Identity),
        Command::Eval(args) => {
            let format: ReportFormat = args.format.parse().map_err(CliError)?;
            let mut out = open_output(args.out.as_deref())?;
            let code = eval::cmd_eval(&args.instance, format, &mut out)?;
            out.flush()?;
            Ok(code)
        }
        Command::Selftest(args) => cmd_selftest(&args),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(CliError(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
