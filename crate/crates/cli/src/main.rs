//! Command-line driver for Monte-Carlo sweeps.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use swipt_core::feasibility::Verdict;
use swipt_core::harness::{self, ExperimentFile, Scheme, Sweep};

#[derive(Debug, Parser)]
#[command(name = "swipt", version, about = "Sum-rate sweeps for IRS-aided SWIPT with movable antennas")]
struct Args {
    /// Experiment file (TOML); flags below override its entries.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Swept parameter and values, e.g. `power_dbm=30,35,40`. Kinds:
    /// power_dbm, array_size (in wavelengths), num_antennas, idr_distance (m).
    #[arg(long)]
    sweep: Option<String>,

    /// Comma-separated schemes: MA-OPS, FPA-OPS, MA-RPS, FPA-RPS.
    #[arg(long, value_delimiter = ',')]
    schemes: Option<Vec<String>>,

    /// Channel draws per sweep value.
    #[arg(long)]
    seeds: Option<usize>,

    /// Results CSV path.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Directory for per-run convergence traces.
    #[arg(long)]
    trace: Option<PathBuf>,

    /// Record wall-clock time per run (makes the CSV non-reproducible).
    #[arg(long)]
    timing: bool,

    /// Only run the feasibility search and report verdicts.
    #[arg(long)]
    feasibility_only: bool,
}

fn build_spec(args: &Args) -> swipt_core::Result<harness::ExperimentSpec> {
    let mut file = match &args.config {
        Some(path) => ExperimentFile::load(path)?,
        None => ExperimentFile::default(),
    };
    if let Some(s) = &args.sweep {
        file.sweep = Some(Sweep::parse(s)?);
    }
    if let Some(list) = &args.schemes {
        for s in list {
            s.parse::<Scheme>()?;
        }
        file.schemes = Some(list.clone());
    }
    if let Some(n) = args.seeds {
        file.seeds = Some(n);
    }
    if let Some(out) = &args.out {
        file.out = Some(out.clone());
    }
    if let Some(dir) = &args.trace {
        file.trace_dir = Some(dir.clone());
    }
    file.record_timing |= args.timing;
    file.to_spec()
}

fn run(args: &Args) -> swipt_core::Result<ExitCode> {
    let spec = build_spec(args)?;
    if args.feasibility_only {
        let rows = harness::run_feasibility_experiment(&spec)?;
        for r in &rows {
            println!(
                "{}={} seed {}: {} (beta* = {:.3e} W{})",
                spec.sweep.kind.name(),
                r.sweep_value,
                r.seed,
                r.verdict.as_str(),
                r.beta_star,
                if r.screened { ", screened" } else { "" }
            );
        }
        let any_feasible = rows.iter().any(|r| r.verdict == Verdict::Feasible);
        return Ok(if any_feasible { ExitCode::SUCCESS } else { ExitCode::from(2) });
    }
    let results = harness::run_experiment(&spec)?;
    for s in &results.summary {
        println!(
            "{:<8} {}={:<8} feasible {}/{}  mean {:.4} nats  stderr {:.4}",
            s.scheme.label(),
            spec.sweep.kind.name(),
            s.sweep_value,
            s.num_feasible,
            s.num_seeds,
            s.mean_sum_rate_nats,
            s.stderr_sum_rate_nats
        );
    }
    eprintln!("wrote {} and {}", spec.output_path.display(), spec.summary_path().display());
    Ok(if results.all_infeasible() { ExitCode::from(2) } else { ExitCode::SUCCESS })
}

fn main() -> ExitCode {
    // Usage errors exit with 1; 2 is reserved for all-infeasible outcomes.
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(&args) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
