use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use torus_dirac::error::Error;
use torus_dirac::report::{self, RunConfig, RunReport};

#[derive(Parser)]
#[command(name = "torus-dirac", version, about = "Dirac spectra, critical spinors and CMC tori on flat 2-tori")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// TOML config file, or JSON when it ends in .json
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory (overrides `output`)
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_name = "K")]
    seed: Option<u64>,
    /// Grid size per direction
    #[arg(long, global = true, value_name = "N")]
    grid: Option<usize>,
    /// Mesh tiling, e.g. 2x3
    #[arg(long, global = true, value_name = "K1xK2", value_parser = parse_copies)]
    copies: Option<[usize; 2]>,
    /// Verify the surface without writing files
    #[arg(long, global = true)]
    verify_only: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form and discretized Dirac spectra
    Spectrum,
    /// Table of mu_q on the unit-area torus
    MuCurve,
    /// Continue to a critical solution and save it
    Solve {
        /// Continue from a saved solution instead of the first eigenspinor
        #[arg(long, value_name = "PATH")]
        resume: Option<PathBuf>,
    },
    /// Build, verify and export the Weierstrass surface of a solution
    Surface {
        /// Defaults to <out>/solution.json
        solution: Option<PathBuf>,
    },
    /// Run every check on a saved solution and its surface
    Check {
        /// Defaults to <out>/solution.json
        solution: Option<PathBuf>,
    },
}

fn parse_copies(s: &str) -> Result<[usize; 2], String> {
    let (a, b) = s.split_once(['x', 'X']).ok_or("expected K1xK2")?;
    let parse = |v: &str| v.trim().parse::<usize>().map_err(|e| format!("{v:?}: {e}"));
    Ok([parse(a)?, parse(b)?])
}

fn config(common: &Common) -> Result<RunConfig, Error> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(out) = &common.out {
        cfg.output = out.clone();
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(n) = common.grid {
        cfg.grid = n;
    }
    if let Some(c) = common.copies {
        cfg.surface.copies = c;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn solution_path(cfg: &RunConfig, given: Option<PathBuf>) -> PathBuf {
    given.unwrap_or_else(|| cfg.output.join("solution.json"))
}

fn run(cli: Cli) -> Result<RunReport, Error> {
    let cfg = config(&cli.common)?;
    match cli.command {
        Command::Spectrum => report::cmd_spectrum(&cfg),
        Command::MuCurve => report::cmd_mu_curve(&cfg),
        Command::Solve { resume } => report::cmd_solve(&cfg, resume.as_deref()).map(|(r, _)| r),
        Command::Surface { solution } => {
            let path = solution_path(&cfg, solution);
            report::cmd_surface(&cfg, Path::new(&path), cli.common.verify_only)
        }
        Command::Check { solution } => report::cmd_check(&cfg, &solution_path(&cfg, solution)),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(rep) => {
            print!("{}", rep.to_json());
            if rep.checks.passed() {
                ExitCode::SUCCESS
            } else {
                for c in rep.checks.failures() {
                    eprintln!("check failed: {} = {:e} (tolerance {:e})", c.name, c.value, c.tolerance);
                }
                ExitCode::from(4)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            if let Error::ContinuationStep { trace, .. } = &e {
                for (p, lambda, sup) in trace {
                    eprintln!("  p = {p}: lambda = {lambda}, sup|phi| = {sup}");
                }
            }
            ExitCode::from(report::exit_code(&e) as u8)
        }
    }
}
