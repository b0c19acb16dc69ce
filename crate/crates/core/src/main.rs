use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use uavloc::experiment::{self, GainRow, Kind};
use uavloc::{ExperimentSpec, GainOutcome, LocalizabilityCurve, Overrides, Result};

#[derive(Parser)]
#[command(name = "uavloc", version, about = "B-localizability simulator for cellular-connected UAVs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunOpts {
    /// Master seed
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo snapshots per configuration
    #[arg(long)]
    snapshots: Option<usize>,
    /// Worker threads; results do not depend on it
    #[arg(long)]
    workers: Option<usize>,
    /// Output CSV path (a `.meta` sidecar is written next to it)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate P_B over the sweep in an experiment file
    Simulate {
        spec: PathBuf,
        #[command(flatten)]
        opts: RunOpts,
    },
    /// Solve for the processing gain that reaches a target P_B
    Gain {
        spec: PathBuf,
        /// Post-processing SINR threshold, dB
        #[arg(long, allow_hyphen_values = true)]
        beta: Option<f64>,
        /// Target localizability probability, in (0, 1)
        #[arg(long)]
        target: Option<f64>,
        #[command(flatten)]
        opts: RunOpts,
    },
    /// Run a built-in figure preset (fig1..fig5)
    Preset {
        name: String,
        /// Print the preset's experiment file instead of running it
        #[arg(long)]
        print: bool,
        #[command(flatten)]
        opts: RunOpts,
    },
}

fn overrides(opts: &RunOpts) -> Overrides {
    Overrides {
        seed: opts.seed,
        snapshots: opts.snapshots,
        out: opts.out.clone(),
        ..Default::default()
    }
}

fn print_curve(path: &std::path::Path, curve: &LocalizabilityCurve) {
    println!(
        "wrote {} rows to {} ({} snapshots per point, seed {})",
        curve.points.len(),
        path.display(),
        curve.n_snapshots,
        curve.seed
    );
    if curve.points.len() <= 40 {
        println!("{:>9} {:>8} {:>3} {:>5} {:>5} {:>8} {:>8}", "alpha_db", "h_ut_m", "B", "p", "q", "pb", "±95%");
        for pt in &curve.points {
            println!(
                "{:>9.2} {:>8.1} {:>3} {:>5.2} {:>5.2} {:>8.4} {:>8.4}",
                pt.alpha_db,
                pt.h_ut_m,
                pt.b,
                pt.p,
                pt.q,
                pt.estimate.pb,
                pt.estimate.half_width()
            );
        }
    }
}

fn print_gain(path: &std::path::Path, rows: &[GainRow]) {
    println!("wrote {} rows to {}", rows.len(), path.display());
    println!("{:>8} {:>5} {:>5} {:>3} {:>8} {:>9} {:>10} {:>8}", "h_ut_m", "p", "q", "B", "beta_db", "target_pb", "alpha*_db", "gamma_db");
    for r in rows {
        let (a, g) = match r.outcome {
            GainOutcome::Solved { alpha_star_db, gamma_db } => (format!("{alpha_star_db:.2}"), format!("{gamma_db:.2}")),
            GainOutcome::NoSolution => ("none".into(), "none".into()),
        };
        println!(
            "{:>8.1} {:>5.2} {:>5.2} {:>3} {:>8.2} {:>9.3} {:>10} {:>8}",
            r.h_ut_m, r.p, r.q, r.b, r.beta_db, r.target_pb, a, g
        );
    }
}

fn run_simulate(spec: ExperimentSpec, workers: Option<usize>) -> Result<()> {
    let (path, curve) = experiment::run_experiment(&spec, workers)?;
    print_curve(&path, &curve);
    Ok(())
}

fn run_gain(spec: ExperimentSpec, workers: Option<usize>) -> Result<()> {
    let (path, rows) = experiment::run_gain_solver(&spec, workers)?;
    print_gain(&path, &rows);
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { spec, opts } => {
            let spec = ExperimentSpec::load(&spec)?.with_overrides(&overrides(&opts))?;
            run_simulate(spec, opts.workers)
        }
        Command::Gain { spec, beta, target, opts } => {
            let o = Overrides {
                beta_db: beta,
                target_pb: target,
                ..overrides(&opts)
            };
            let spec = ExperimentSpec::load(&spec)?.with_overrides(&o)?;
            run_gain(spec, opts.workers)
        }
        Command::Preset { name, print, opts } => {
            if print {
                // validates the name
                ExperimentSpec::preset(&name)?;
                print!("{}", experiment::preset_source(&name).unwrap_or_default());
                return Ok(());
            }
            let spec = ExperimentSpec::preset(&name)?.with_overrides(&overrides(&opts))?;
            match spec.experiment.kind {
                Kind::Simulate => run_simulate(spec, opts.workers),
                Kind::Gain => run_gain(spec, opts.workers),
            }
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
