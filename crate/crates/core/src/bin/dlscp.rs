use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use dlscp::artifacts::{smoothing_table, write_csv, RunArtifacts, RunSummary, SweepRow, ARTIFACT_SCHEMA_VERSION};
use dlscp::config::RunConfig;
use dlscp::conic::ClarabelSolver;
use dlscp::ptr::{self, PtrError};
use dlscp::verify::{repropagate, verify, VerificationReport, VerifyOptions};

const EXIT_OK: u8 = 0;
const EXIT_CONFIG: u8 = 1;
const EXIT_FAILED: u8 = 2;

#[derive(Parser)]
#[command(name = "dlscp", version, about = "Rendezvous trajectory optimization with discrete logic constraints")]
struct Cli {
    /// Log each PTR iteration (repeat for debug output).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a scenario and write the run artifacts.
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Override `ptr.max_iters`.
        #[arg(long)]
        max_iters: Option<usize>,
    },
    /// Check a run against the exact dynamics and logic.
    Verify {
        #[arg(long)]
        run: PathBuf,
    },
    /// Solve once per trigger threshold and tabulate iterations and fuel.
    SweepTrig {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        /// CSV destination; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tabulate the smoothings over a predicate grid at the homotopy values.
    CompareSmoothing {
        #[arg(long)]
        out: PathBuf,
        /// Homotopy parameters come from this config; defaults otherwise.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 401)]
        points: usize,
    },
    /// Write the default Apollo scenario as a config file.
    DefaultConfig {
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let result = match cli.command {
        Command::Solve { config, out, max_iters } => solve(&config, &out, max_iters),
        Command::Verify { run } => verify_run(&run),
        Command::SweepTrig { config, values, out } => sweep(&config, &values, out.as_deref()),
        Command::CompareSmoothing { out, config, points } => compare(&out, config.as_deref(), points),
        Command::DefaultConfig { out } => std::fs::write(&out, RunConfig::default().to_toml())
            .with_context(|| format!("writing {}", out.display()))
            .map(|_| EXIT_OK),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}

fn load(config: &Path) -> Result<RunConfig> {
    Ok(RunConfig::load(config)?)
}

fn solve(config: &Path, out: &Path, max_iters: Option<usize>) -> Result<u8> {
    let mut run = load(config)?;
    if let Some(n) = max_iters {
        run.ptr.max_iters = n;
    }
    let artifacts = RunArtifacts::create(out)?;
    let (report, converged) = match ptr::solve(&run, &ClarabelSolver::default()) {
        Ok(r) => (r, true),
        Err(PtrError::NotConverged(r)) => (*r, false),
        Err(PtrError::Config(msg)) => anyhow::bail!("invalid config: {msg}"),
        Err(e) => {
            eprintln!("solve failed: {e}");
            return Ok(EXIT_FAILED);
        }
    };
    let solution = &report.solution;
    let mut summary = RunSummary::new(solution, &run, converged, report.updates);
    let opts = VerifyOptions::default();
    let verification = verify(solution, &run.scenario, &run.integrator, &opts);
    let dense = match &verification {
        Ok(v) => v.dense.clone(),
        Err(_) => repropagate(solution, &run.scenario, &run.integrator, opts.dense_factor).unwrap_or_default(),
    };
    if let Ok(v) = &verification {
        summary.verified = Some(v.passed);
        artifacts.write_verification(v)?;
    }
    artifacts.write_run(&run, solution, &summary, &dense)?;
    eprintln!(
        "{} after {} iterations ({} homotopy updates); fuel {:.4}, impulse {:.1} N·s, t_f {:.1} s",
        if converged { "converged" } else { "NOT converged" },
        report.iterations,
        report.updates,
        summary.fuel_cost,
        summary.impulse,
        solution.t_f
    );
    match verification {
        Ok(v) => print_report(&v),
        Err(e) => eprintln!("re-propagation failed: {e}"),
    }
    Ok(if converged { EXIT_OK } else { EXIT_FAILED })
}

fn verify_run(dir: &Path) -> Result<u8> {
    let artifacts = RunArtifacts::open(dir);
    let run = artifacts.read_config().context("reading run config")?;
    let solution = artifacts.read_solution().context("reading run solution")?;
    let report = verify(&solution, &run.scenario, &run.integrator, &VerifyOptions::default())
        .context("re-propagating the solution")?;
    artifacts.write_verification(&report)?;
    let mut summary = artifacts.read_summary()?;
    summary.verified = Some(report.passed);
    artifacts.write_summary(&summary)?;
    print_report(&report);
    Ok(if report.passed { EXIT_OK } else { EXIT_FAILED })
}

fn print_report(report: &VerificationReport) {
    for c in &report.checks {
        println!(
            "{:4} {:<18} worst {:>12.6e} {:<5} limit {:>10.4e}  ({})",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.worst,
            c.units,
            c.limit,
            c.location
        );
    }
    println!("verification {}", if report.passed { "passed" } else { "FAILED" });
}

fn sweep(config: &Path, values: &[f64], out: Option<&Path>) -> Result<u8> {
    let base = load(config)?;
    for &v in values {
        let mut run = base.clone();
        run.homotopy.beta_trig = v;
        run.validate()
            .map_err(|e| anyhow::anyhow!("beta_trig = {v}: {e}"))?;
    }
    // One solve per worker; each solve is sequential internally.
    let rows: Vec<SweepRow> = std::thread::scope(|s| {
        let handles: Vec<_> = values
            .iter()
            .map(|&v| {
                let mut run = base.clone();
                run.homotopy.beta_trig = v;
                s.spawn(move || sweep_one(&run, v))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sweep worker panicked"))
            .collect()
    });
    match out {
        Some(path) => write_csv(path, &rows)?,
        None => {
            let mut w = csv::Writer::from_writer(std::io::stdout());
            for r in &rows {
                w.serialize(r)?;
            }
            w.flush()?;
        }
    }
    Ok(if rows.iter().all(|r| r.converged) { EXIT_OK } else { EXIT_FAILED })
}

fn sweep_one(run: &RunConfig, beta_trig: f64) -> SweepRow {
    let (report, error) = match ptr::solve(run, &ClarabelSolver::default()) {
        Ok(r) => (Some(r), String::new()),
        Err(PtrError::NotConverged(r)) => (Some(*r), "not converged".into()),
        Err(e) => (None, e.to_string()),
    };
    let dt_max = run.scenario.vehicle.dt_max;
    match report {
        Some(r) => SweepRow {
            schema_version: ARTIFACT_SCHEMA_VERSION,
            beta_trig,
            converged: r.converged,
            iterations: r.iterations,
            homotopy_updates: r.updates,
            fuel_cost: dlscp::rendezvous::fuel_cost(&r.solution.schedule, dt_max),
            impulse: run.scenario.vehicle.thrust * r.solution.schedule.dt.sum(),
            error,
        },
        None => SweepRow {
            schema_version: ARTIFACT_SCHEMA_VERSION,
            beta_trig,
            converged: false,
            iterations: 0,
            homotopy_updates: 0,
            fuel_cost: f64::NAN,
            impulse: f64::NAN,
            error,
        },
    }
}

fn compare(out: &Path, config: Option<&Path>, points: usize) -> Result<u8> {
    let homotopy = match config {
        Some(c) => load(c)?.homotopy,
        None => RunConfig::default().homotopy,
    };
    let points = points.max(2);
    let grid: Vec<f64> = (0..points)
        .map(|j| -1.0 + 2.0 * j as f64 / (points - 1) as f64)
        .collect();
    let rows = smoothing_table(&homotopy.schedule(), &grid)?;
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let path = out.join("smoothing.csv");
    write_csv(&path, &rows)?;
    eprintln!("wrote {} rows to {}", rows.len(), path.display());
    Ok(EXIT_OK)
}
