use clap::{Args, Parser, Subcommand};
use lakevort::commands;
use lakevort::config::ExperimentConfig;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "lakevort",
    version,
    about = "Energy-maximizing vortex pairs for the lake equations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the bathtub ascent and write the converged state
    Maximize(RunArgs),
    /// Sweep the rotation speed and tabulate the predicted pair radii
    Figure1(RunArgs),
    /// Maximize over a decreasing list of ε and tabulate concentration
    EpsSweep(RunArgs),
    /// Run the operator/rearrangement invariant suite
    Invariants(RunArgs),
    /// Verify the Green's-function expansion on a disk lake
    GreenCheck(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Experiment configuration file (flat `key = value` lines)
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides the config
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; overrides LAKEVORT_THREADS and the config
    #[arg(long)]
    threads: Option<usize>,
}

impl RunArgs {
    fn load(&self) -> lakevort::Result<(ExperimentConfig, PathBuf, Option<usize>)> {
        let cfg = ExperimentConfig::from_file(&self.config)?;
        let out = self.out.clone().unwrap_or_else(|| cfg.out.clone());
        let threads = self
            .threads
            .or_else(|| {
                std::env::var("LAKEVORT_THREADS")
                    .ok()
                    .and_then(|v| v.parse().ok())
            })
            .or(cfg.threads);
        Ok((cfg, out, threads))
    }
}

fn run() -> lakevort::Result<bool> {
    let cli = Cli::parse();
    let args = match &cli.command {
        Command::Maximize(a)
        | Command::Figure1(a)
        | Command::EpsSweep(a)
        | Command::Invariants(a)
        | Command::GreenCheck(a) => a,
    };
    let (cfg, out, threads) = args.load()?;
    let pool = {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(k) = threads {
            builder = builder.num_threads(k);
        }
        builder.build().map_err(|e| {
            lakevort::Error::Parameter(format!("could not build the worker pool: {e}"))
        })?
    };
    pool.install(|| dispatch(&cli.command, &cfg, &out))
}

fn dispatch(command: &Command, cfg: &ExperimentConfig, out: &PathBuf) -> lakevort::Result<bool> {
    match command {
        Command::Maximize(_) => {
            let outcome = commands::cmd_maximize(cfg, out)?;
            println!(
                "converged = {} after {} iterations, energy = {:.12e}",
                outcome.state.converged,
                outcome.state.iterations,
                outcome.state.energy_trace.last().copied().unwrap_or(0.0)
            );
            println!("steadiness residual = {:.6e}", outcome.residual);
            if let Some(p) = &outcome.report.plus {
                println!(
                    "positive part: centroid ({:.6}, {:.6}), diameter {:.6}",
                    p.centroid.0, p.centroid.1, p.diameter
                );
            }
            if let Some(m) = &outcome.report.minus {
                println!(
                    "negative part: centroid ({:.6}, {:.6}), diameter {:.6}",
                    m.centroid.0, m.centroid.1, m.diameter
                );
            }
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            Ok(outcome.state.converged)
        }
        Command::Figure1(_) => {
            let outcome = commands::cmd_figure1(cfg, out)?;
            println!("{} rotation samples", outcome.rows.len());
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            Ok(true)
        }
        Command::EpsSweep(_) => {
            let outcome = commands::cmd_epsilon_sweep(cfg, out)?;
            if outcome.minus_absent {
                println!("negative part absent (tau = 1): minus columns omitted");
            }
            for row in &outcome.rows {
                match row.minus {
                    Some((dm, cm, _)) => println!(
                        "eps {:.4}: diam+ {:.4e} diam- {:.4e} cerr+ {:.4e} cerr- {:.4e}",
                        row.eps, row.diam_plus, dm, row.centroid_err_plus, cm
                    ),
                    None => println!(
                        "eps {:.4}: diam+ {:.4e} cerr+ {:.4e}",
                        row.eps, row.diam_plus, row.centroid_err_plus
                    ),
                }
            }
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            Ok(true)
        }
        Command::Invariants(_) => {
            let outcome = commands::cmd_invariants(cfg, out)?;
            for line in &outcome.checks {
                println!("{line}");
            }
            Ok(outcome.pass)
        }
        Command::GreenCheck(_) => {
            let outcome = commands::cmd_green_check(cfg, out)?;
            for (x, y, sup_r, rel) in &outcome.rows {
                println!("probe ({x:.4}, {y:.4}): sup R {sup_r:.6e}, rel err {rel:.6e}");
            }
            println!(
                "max relative expansion error {:.6e} (bound {:.6e}): {}",
                outcome.max_rel_err,
                cfg.green_max_rel_err,
                if outcome.pass { "pass" } else { "FAIL" }
            );
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            Ok(outcome.pass)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
