use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lagset::golden;
use lagset::harness::{self, Backend, BenchConfig, Scenario, VerifyOptions};
use lagset::plant::PlantError;
use lagset::{PlantModel, Rational, Scalar, StepMode};

const EXIT_MISMATCH: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_USAGE: u8 = 3;

#[derive(Parser)]
#[command(name = "lagset", version, about = "Exact uncertainty-set recursion for SISO lag plants")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a noisy trajectory and run the set recursion on its measurements.
    Simulate {
        #[arg(long)]
        plant: PathBuf,
        #[arg(long)]
        steps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "ptu")]
        mode: StepMode,
        #[arg(long, default_value = "exact")]
        backend: Backend,
        /// Replay measurements z_0..z_K from a JSON array instead of simulating.
        #[arg(long)]
        measurements: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the fast recursion and the projection oracle in lockstep.
    Verify {
        #[arg(long)]
        plant: PathBuf,
        #[arg(long)]
        steps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "ptu")]
        mode: StepMode,
        /// Cap on vertex/direction pairs per step for the alignment check (0 = all).
        #[arg(long, default_value_t = 0)]
        samples: usize,
        /// Drop the ridge rows of the propagation table (fault injection).
        #[arg(long, hide = true)]
        skip_ridges: bool,
    },
    /// Time fast updates against the oracle on a random stable plant.
    Bench {
        #[arg(long)]
        order: usize,
        #[arg(long)]
        steps: usize,
        #[arg(long, default_value_t = 1)]
        repeats: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "ptu")]
        mode: StepMode,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Print a worked example: fig1, square or diamond.
    Example { name: String },
}

fn load_plant(path: &PathBuf) -> Result<PlantModel<Rational>, ExitCode> {
    PlantModel::from_file(path).map_err(|e| {
        eprintln!("error: {e}");
        match e {
            PlantError::Io(_) => ExitCode::from(EXIT_USAGE),
            _ => ExitCode::from(EXIT_INPUT),
        }
    })
}

fn load_measurements(path: &PathBuf) -> Result<Vec<Rational>, ExitCode> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        eprintln!("error: cannot read {}: {e}", path.display());
        ExitCode::from(EXIT_USAGE)
    })?;
    let raw: Vec<serde_json::Value> = serde_json::from_str(&text).map_err(|e| {
        eprintln!("error: malformed measurement file: {e}");
        ExitCode::from(EXIT_INPUT)
    })?;
    raw.iter()
        .map(|v| {
            let s = match v {
                serde_json::Value::String(s) => s.clone(),
                other => other.to_string(),
            };
            Rational::parse_str(&s).map_err(|e| {
                eprintln!("error: bad measurement {s}: {e}");
                ExitCode::from(EXIT_INPUT)
            })
        })
        .collect()
}

fn harness_failure(e: &harness::HarnessError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(if e.is_input_error() { EXIT_INPUT } else { EXIT_MISMATCH })
}

fn write_out(path: &Option<PathBuf>, body: &str) -> Result<(), ExitCode> {
    match path {
        Some(p) => std::fs::write(p, body).map_err(|e| {
            eprintln!("error: cannot write {}: {e}", p.display());
            ExitCode::from(EXIT_USAGE)
        }),
        None => {
            println!("{body}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<(), ExitCode> {
    match cli.command {
        Command::Simulate { plant, steps, seed, mode, backend, measurements, out } => {
            let mut sc = Scenario::new(load_plant(&plant)?, steps, seed).with_mode(mode);
            sc.backend = backend;
            if let Some(path) = &measurements {
                sc.measurements = Some(load_measurements(path)?);
            }
            let res = harness::simulate(&sc).map_err(|e| harness_failure(&e))?;
            write_out(&out, &res.trace_json())?;
            let largest = res.sizes.iter().map(|s| s.0).max().unwrap_or(0);
            eprintln!("simulated {steps} steps; true state contained throughout; largest facet count {largest}");
            Ok(())
        }
        Command::Verify { plant, steps, seed, mode, samples, skip_ridges } => {
            let sc = Scenario::new(load_plant(&plant)?, steps, seed).with_mode(mode);
            let opts = VerifyOptions { theorem_samples: samples, skip_ridges };
            let summary = harness::verify(&sc, opts).map_err(|e| harness_failure(&e))?;
            println!("{}", summary.describe());
            if summary.passed() {
                println!("PASS");
                Ok(())
            } else {
                for v in summary
                    .theorem_violations
                    .iter()
                    .chain(&summary.bound_violations)
                    .chain(&summary.isomorphism_violations)
                    .chain(&summary.validation_failures)
                {
                    println!("  {v}");
                }
                println!("FAIL");
                Err(ExitCode::from(EXIT_MISMATCH))
            }
        }
        Command::Bench { order, steps, repeats, seed, mode, csv } => {
            if order == 0 || repeats == 0 {
                eprintln!("error: --order and --repeats must be positive");
                return Err(ExitCode::from(EXIT_USAGE));
            }
            let cfg = BenchConfig { order, steps, repeats, seed, mode };
            let records = harness::bench(&cfg).map_err(|e| harness_failure(&e))?;
            let io_err = |e: std::io::Error| {
                eprintln!("error: {e}");
                ExitCode::from(EXIT_USAGE)
            };
            match &csv {
                Some(p) => {
                    let f = File::create(p).map_err(io_err)?;
                    let mut w = BufWriter::new(f);
                    harness::write_bench_csv(&records, &mut w).map_err(io_err)?;
                    w.flush().map_err(io_err)?;
                }
                None => harness::write_bench_csv(&records, std::io::stdout().lock()).map_err(io_err)?,
            }
            if records.iter().any(|r| r.equal == Some(false)) {
                eprintln!("error: fast and oracle results differ");
                return Err(ExitCode::from(EXIT_MISMATCH));
            }
            Ok(())
        }
        Command::Example { name } => match golden::render(&name) {
            Ok(text) => {
                print!("{text}");
                Ok(())
            }
            Err(e) => {
                eprintln!("error: {e}");
                Err(ExitCode::from(EXIT_USAGE))
            }
        },
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(code) => code,
    }
}
