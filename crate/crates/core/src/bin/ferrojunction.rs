use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ferrojunction::config::{finite_schedule, load_config, write_results, DEFAULT_H_A};
use ferrojunction::harness::{diagnostics, run_gradcheck, run_limit, run_solve3d, run_sweep};
use ferrojunction::{Error, LimitVariant, MinimizeReport, Regime, RunConfig};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "ferrojunction", version, about = "Wire-on-film polarization energies and their thin-structure limits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration; defaults to ℓ = 1 on the standard ladder.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file. Sweeps write CSV plus a sibling JSON; other commands write JSON.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (defaults to all cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Minimize E_n and S_n along the thickness schedule and compare with the limit.
    Sweep(Common),
    /// Minimize E_n for one thickness pair.
    Solve3d {
        #[command(flatten)]
        common: Common,
        /// Wire thickness (defaults to the first scheduled pair).
        #[arg(long)]
        h_a: Option<f64>,
        #[arg(long)]
        h_b: Option<f64>,
    },
    /// Minimize the one-dimensional wire limit energy.
    Limit1d(Common),
    /// Minimize the two-dimensional film limit energy.
    Limit2d(Common),
    /// Minimize the coupled wire-film limit energy.
    LimitCoupled(Common),
    /// Compare analytic gradients with central finite differences.
    Gradcheck(Common),
}

fn load(common: &Common) -> ferrojunction::Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(p) => load_config(p)?,
        None => RunConfig::new(Regime::Finite(1.0), finite_schedule(1.0, &DEFAULT_H_A)),
    };
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(n) = common.threads {
        if n == 0 {
            return Err(Error::Validation("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Validation(e.to_string()))?;
    }
    cfg.validate()
}

fn write_json<T: Serialize>(value: &T, out: Option<&Path>) -> ferrojunction::Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Serialize {
        path: out.map(Path::to_path_buf).unwrap_or_default(),
        message: e.to_string(),
    })?;
    match out {
        Some(p) => std::fs::write(p, text).map_err(|source| Error::Io {
            path: p.to_path_buf(),
            source,
        }),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn summarize(report: &MinimizeReport) {
    eprintln!(
        "energy {:.10e}  iterations {}  restarts {}  converged {}  stationarity {:.3e}",
        report.energy.total, report.iterations, report.restarts, report.converged, report.stationarity
    );
}

enum Outcome {
    Done,
    NotConverged,
}

fn run(cli: Cli) -> ferrojunction::Result<Outcome> {
    match cli.command {
        Command::Sweep(common) => {
            let cfg = load(&common)?;
            let sweep = run_sweep(&cfg)?;
            let out = common.out.unwrap_or_else(|| PathBuf::from(&cfg.output_path));
            write_results(&sweep.rows, &out)?;
            for r in &sweep.rows {
                match &r.failure {
                    None => eprintln!(
                        "h_a {:<6} h_b {:<10.4e} E/scale {:.6e}  limit {:.6e}  gap {:.3e}",
                        r.h_a, r.h_b, r.e3d_scaled, r.e_limit, r.gap
                    ),
                    Some(msg) => eprintln!("h_a {:<6} h_b {:<10.4e} failed: {msg}", r.h_a, r.h_b),
                }
            }
            let diag = diagnostics(&sweep.rows);
            if !diag.passed {
                eprintln!("warning: scaled norms are not bounded along the schedule");
            }
            Ok(Outcome::Done)
        }
        Command::Solve3d { common, h_a, h_b } => {
            let cfg = load(&common)?;
            let (a0, b0) = cfg.thickness_schedule[0];
            let (_, report) = run_solve3d(&cfg, h_a.unwrap_or(a0), h_b.unwrap_or(b0))?;
            summarize(&report);
            write_json(&report, common.out.as_deref())?;
            Ok(if report.converged { Outcome::Done } else { Outcome::NotConverged })
        }
        Command::Limit1d(common) => limit(common, LimitVariant::Wire1D),
        Command::Limit2d(common) => limit(common, LimitVariant::Film2D),
        Command::LimitCoupled(common) => limit(common, LimitVariant::Coupled),
        Command::Gradcheck(common) => {
            let cfg = load(&common)?;
            let report = run_gradcheck(&cfg)?;
            for (name, err) in &report.entries {
                eprintln!("{name:<28} max relative error {err:.3e}");
            }
            println!("max relative error {:.3e}", report.worst);
            if let Some(p) = common.out.as_deref() {
                write_json(&report, Some(p))?;
            }
            Ok(Outcome::Done)
        }
    }
}

fn limit(common: Common, variant: LimitVariant) -> ferrojunction::Result<Outcome> {
    let cfg = load(&common)?;
    let (state, report) = run_limit(&cfg, variant)?;
    summarize(&report);
    #[derive(Serialize)]
    struct Out<'a> {
        report: &'a MinimizeReport,
        state: &'a ferrojunction::LimitState,
    }
    write_json(&Out { report: &report, state: &state }, common.out.as_deref())?;
    Ok(if report.converged { Outcome::Done } else { Outcome::NotConverged })
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::NotConverged) => {
            eprintln!("error: optimizer did not reach the stationarity tolerance");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::NonConvergence { .. } => ExitCode::from(3),
                Error::Parse { .. } | Error::Validation(_) | Error::Grid(_) | Error::Shape(_) | Error::Inadmissible(_) => {
                    ExitCode::from(2)
                }
                _ => ExitCode::from(1),
            }
        }
    }
}
