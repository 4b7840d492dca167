//! `trace-bounds`: runs the verification pipeline from a TOML config, or
//! the matrix-norm and optimal-stress checks on their own.
//!
//! Exit status: 0 all checks passed, 2 usage or configuration error,
//! 3 solver or I/O failure, 4 a check failed.

mod config;
mod pipeline;
mod report;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use trace_bounds::io::write_equivalence_csv;
use trace_bounds::matnorm::NormKind;

use config::{RunConfig, DEFAULT_SEED};
use pipeline::RunError;
use report::Check;

const EXIT_CHECK_FAILED: u8 = 4;

#[derive(Parser)]
#[command(name = "trace-bounds", version, about = "Trace-mapping bounds for W11 and LD fields")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the tasks of a TOML configuration and write reports.
    Run {
        config: PathBuf,
        /// Overrides the configured output directory.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Check the matrix-norm equivalence relations on random symmetric matrices.
    VerifyMatnorm {
        #[arg(long, value_parser = clap::value_parser!(u8).range(2..=3))]
        dim: u8,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
    /// Compare closed-form optimal stresses with brute force over inclinations.
    SweepTheta {
        #[arg(long)]
        norm: NormKind,
        #[arg(long, default_value_t = 91)]
        steps: usize,
        #[arg(long, default_value_t = 41)]
        resolution: usize,
    },
}

fn summarize(checks: &[Check]) -> ExitCode {
    match checks.iter().find(|c| !c.passed) {
        None => ExitCode::SUCCESS,
        Some(c) => {
            eprintln!("check failed: {} ({} {} {})", c.name, c.value, c.relation, c.limit);
            ExitCode::from(EXIT_CHECK_FAILED)
        }
    }
}

fn fail(e: RunError) -> ExitCode {
    eprintln!("trace-bounds: {e}");
    ExitCode::from(e.exit_code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, output } => {
            let mut cfg = match RunConfig::load(&config) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("trace-bounds: invalid configuration: {e}");
                    eprintln!("usage: trace-bounds run <config.toml>   (schema: docs/config.md)");
                    return ExitCode::from(2);
                }
            };
            if let Some(o) = output {
                cfg.output = o;
            }
            match pipeline::run(&cfg) {
                Ok(report) => {
                    let failed = report.checks.iter().filter(|c| !c.passed).count();
                    println!(
                        "{} checks, {} failed; report written to {}",
                        report.checks.len(),
                        failed,
                        cfg.output.join("report.json").display()
                    );
                    summarize(&report.checks)
                }
                Err(e) => fail(e),
            }
        }
        Command::VerifyMatnorm { dim, samples, seed } => {
            if samples == 0 {
                eprintln!("trace-bounds: --samples must be at least 1");
                return ExitCode::from(2);
            }
            match pipeline::matnorm_dim(dim as usize, samples, seed) {
                Ok((sec, checks)) => {
                    let stdout = std::io::stdout();
                    if let Err(e) = write_equivalence_csv(&sec.relations, stdout.lock()) {
                        return fail(RunError::Solver(e.to_string()));
                    }
                    for w in &sec.witnesses {
                        eprintln!("witness {} for {} {:?} bound {}: ratio {}", w.witness, w.pair, w.side, w.bound, w.ratio);
                    }
                    summarize(&checks)
                }
                Err(e) => fail(e),
            }
        }
        Command::SweepTheta { norm, steps, resolution } => {
            if steps < 2 || resolution < 3 {
                eprintln!("trace-bounds: --steps must be at least 2 and --resolution at least 3");
                return ExitCode::from(2);
            }
            if !matches!(norm, NormKind::Vec2 | NormKind::VecInf | NormKind::Op2) {
                eprintln!("trace-bounds: --norm must be vec2, vecInf or op2");
                return ExitCode::from(2);
            }
            match pipeline::sweep_rows(norm, steps, resolution) {
                Ok((rows, sec, checks)) => {
                    let mut stdout = std::io::stdout().lock();
                    if let Err(e) = pipeline::write_sweep_csv(&rows, &mut stdout) {
                        return fail(RunError::Solver(e.to_string()));
                    }
                    let _ = stdout.flush();
                    if let Some(d) = sec.worst_case_d {
                        eprintln!("worst-case D = {d}, brute-force sweep maximum = {}", sec.max_brute_value);
                    }
                    summarize(&checks)
                }
                Err(e) => fail(e),
            }
        }
    }
}
