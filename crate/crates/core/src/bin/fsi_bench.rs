use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use robin_fsi::bench::{energy_check, run_convergence, run_pressure_wave, sweep_alpha};
use robin_fsi::{load_config, BenchError};

#[derive(Parser)]
#[command(name = "fsi-bench", version, about = "Pressure-wave benchmark for the Robin loosely coupled FSI solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Configuration file
    #[arg(long)]
    config: PathBuf,
    /// Output directory
    #[arg(long, default_value = "./out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured scheme and write time series and snapshots
    Run(Common),
    /// Refinement study against a fine strongly coupled reference
    Converge(Common),
    /// End-time error for each configured Robin parameter
    SweepAlpha(Common),
    /// Energy balance of an unforced run from random data
    EnergyCheck(Common),
}

fn execute(cli: Cli) -> Result<(), BenchError> {
    match cli.command {
        Command::Run(c) => {
            let cfg = load_config(&c.config)?;
            let s = run_pressure_wave(&cfg, &c.out)?;
            println!("{} steps of {}, final time {}", s.n_steps, cfg.scheme.label(), s.final_state.t);
            for f in &s.files {
                println!("wrote {}", f.display());
            }
        }
        Command::Converge(c) => {
            let cfg = load_config(&c.config)?;
            let report = run_convergence(&cfg, &c.out)?;
            for s in &report.schemes {
                let errs: Vec<String> = s.errors.iter().map(|e| format!("{e:.4e}")).collect();
                println!("{:<12} errors [{}] mean rate {:.3}", s.scheme.label(), errs.join(", "), s.mean_rate);
            }
            println!("wrote {}", c.out.join("convergence.csv").display());
        }
        Command::SweepAlpha(c) => {
            let cfg = load_config(&c.config)?;
            for r in sweep_alpha(&cfg, &c.out)? {
                println!(
                    "alpha {:<10} error {:.4e} energy residual {:.2e} ({})",
                    r.alpha,
                    r.error,
                    r.identity.max_relative_residual,
                    if r.identity.passed { "ok" } else { "FAILED" }
                );
            }
            println!("wrote {}", c.out.join("alpha_sweep.csv").display());
        }
        Command::EnergyCheck(c) => {
            let cfg = load_config(&c.config)?;
            let check = energy_check(&cfg, &c.out)?;
            println!("max relative energy residual {:.3e}", check.max_relative_residual);
            if !check.passed {
                let level = check.first_violation.unwrap_or(0);
                return Err(BenchError::Solver(robin_fsi::SolverError::Diagnostics(format!(
                    "energy identity violated at level {level}"
                ))));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
