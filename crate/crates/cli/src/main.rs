use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use flexd_core::channel::marcum_q1;
use flexd_core::config::load_scenario;
use flexd_core::scheduler::Scheme;
use flexd_core::selfcheck::{self, SelfcheckOptions};
use flexd_core::sweep::{parse_grid, parse_schemes, run_sweep, write_csv, SweepOptions, SweepSpec, SweepVar};

#[derive(Parser)]
#[command(name = "flexd", version, about = "Flexible-duplex ISL scheduling: closed forms vs Monte Carlo")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Var {
    Zeta,
    Power,
    Slot,
}

#[derive(Clone, Copy, ValueEnum)]
enum Fault {
    Marcum,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep one variable and write closed-form and Monte Carlo columns to CSV.
    Sweep {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, value_enum)]
        var: Var,
        /// `a,b,c`, `linspace:lo:hi:n`, `logspace:lo:hi:n` or `range:lo:hi`.
        #[arg(long)]
        grid: String,
        /// Comma-separated scheme names or `all`. Defaults to the scenario's list.
        #[arg(long)]
        schemes: Option<String>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long)]
        workers: Option<usize>,
        /// Record per-row wall time (output is then no longer reproducible).
        #[arg(long)]
        timing: bool,
    },
    /// Run the built-in verification suite.
    Selfcheck {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 200_000)]
        trials: u64,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long, value_enum, hide = true)]
        inject_fault: Option<Fault>,
    },
}

fn faulty_marcum(a: f64, b: f64) -> flexd_core::Result<f64> {
    Ok((marcum_q1(a, b)? + 1e-6).min(1.0))
}

#[allow(clippy::too_many_arguments)]
fn sweep(
    scenario: PathBuf,
    var: Var,
    grid: String,
    schemes: Option<String>,
    out: PathBuf,
    seed: Option<u64>,
    trials: Option<u64>,
    workers: Option<usize>,
    timing: bool,
) -> Result<()> {
    let mut sc = load_scenario(&scenario).with_context(|| format!("loading {}", scenario.display()))?;
    if let Some(s) = seed {
        sc.plan = sc.plan.with_seed(s);
    }
    if let Some(n) = trials {
        sc.plan = sc.plan.with_trials(n)?;
    }
    if let Some(w) = workers {
        sc.plan = sc.plan.with_workers(w)?;
    }
    let variable = match var {
        Var::Zeta => SweepVar::Zeta,
        Var::Power => SweepVar::Power,
        Var::Slot => SweepVar::Slot,
    };
    let grid = parse_grid(&grid).context("--grid")?;
    let schemes = match schemes {
        Some(list) => parse_schemes(&list).context("--schemes")?,
        // no outage closed form for FD, so a threshold sweep leaves it out unless asked
        None if variable == SweepVar::Zeta => sc.schemes.iter().copied().filter(|s| *s != Scheme::Fd).collect(),
        None => sc.schemes.clone(),
    };
    if schemes.is_empty() {
        bail!("no schemes to evaluate");
    }
    let spec = SweepSpec { variable, grid, schemes };
    let result = run_sweep(&sc, &spec, SweepOptions { timing })?;
    write_csv(&result, &out).with_context(|| format!("writing {}", out.display()))?;
    let flagged = result.flagged().count();
    eprintln!("{} rows written to {}, {flagged} flagged", result.rows.len(), out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Sweep { scenario, var, grid, schemes, out, seed, trials, workers, timing } => {
            sweep(scenario, var, grid, schemes, out, seed, trials, workers, timing).map(|_| true)
        }
        Command::Selfcheck { seed, trials, workers, inject_fault } => {
            let opts = SelfcheckOptions {
                marcum: match inject_fault {
                    Some(Fault::Marcum) => faulty_marcum,
                    None => marcum_q1,
                },
                seed,
                trials,
                workers,
            };
            selfcheck::run(&opts).map_err(Into::into).map(|report| {
                print!("{report}");
                report.passed()
            })
        }
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
