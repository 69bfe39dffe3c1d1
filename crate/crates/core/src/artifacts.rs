//! On-disk run artifacts.
//!
//! A run directory holds:
//!
//! | file                | format | content                                    |
//! |---------------------|--------|--------------------------------------------|
//! | `trajectory.csv`    | CSV    | node states and dense re-propagated samples |
//! | `schedule.csv`      | CSV    | obtained and reference pulse per thruster/node |
//! | `iterations.json`   | JSON   | one record per PTR iteration               |
//! | `verification.json` | JSON   | exact-logic check report                   |
//! | `summary.json`      | JSON   | convergence and fuel figures               |
//! | `scenario.toml`     | TOML   | the configuration that produced the run    |
//!
//! Every CSV row and JSON document carries `schema_version`. Writers emit
//! floats with Rust's shortest round-trip formatting, so rereading a run
//! reproduces the solution bit for bit.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{ConfigError, RunConfig};
use crate::dynamics::ChaserState;
use crate::quaternion::Quaternion;
use crate::rendezvous::fuel_cost;
use crate::trajectory::{IterationRecord, PulseSchedule, SolutionTrajectory, TerminalRelaxation};
use crate::verify::{DenseSample, VerificationReport};

pub const ARTIFACT_SCHEMA_VERSION: u32 = 1;

pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const SCHEDULE_FILE: &str = "schedule.csv";
pub const ITERATIONS_FILE: &str = "iterations.json";
pub const VERIFICATION_FILE: &str = "verification.json";
pub const SUMMARY_FILE: &str = "summary.json";
pub const SCENARIO_FILE: &str = "scenario.toml";

#[derive(Debug, Error)]
pub enum ArtifactError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path}: unsupported schema_version {found} (expected {ARTIFACT_SCHEMA_VERSION})")]
    Schema { path: PathBuf, found: u32 },
    #[error("{path}: {message}")]
    Malformed { path: PathBuf, message: String },
}

/// Point kind in `trajectory.csv`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PointKind {
    /// Optimizer node state, pre-jump.
    Node,
    /// Re-propagated sample.
    Dense,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub schema_version: u32,
    pub kind: PointKind,
    /// Node index for nodes, sample index for dense rows.
    pub index: usize,
    /// Coast arc the point starts or belongs to.
    pub segment: usize,
    /// s
    pub t: f64,
    /// m, LVLH
    pub px: f64,
    pub py: f64,
    pub pz: f64,
    /// m/s, LVLH
    pub vx: f64,
    pub vy: f64,
    pub vz: f64,
    /// Body-to-LVLH attitude, scalar last.
    pub qx: f64,
    pub qy: f64,
    pub qz: f64,
    pub qw: f64,
    /// rad/s, body
    pub wx: f64,
    pub wy: f64,
    pub wz: f64,
}

impl TrajectoryRow {
    fn new(kind: PointKind, index: usize, segment: usize, t: f64, s: &ChaserState) -> Self {
        let q: [f64; 4] = s.q.into();
        Self {
            schema_version: ARTIFACT_SCHEMA_VERSION,
            kind,
            index,
            segment,
            t,
            px: s.p.x,
            py: s.p.y,
            pz: s.p.z,
            vx: s.v.x,
            vy: s.v.y,
            vz: s.v.z,
            qx: q[0],
            qy: q[1],
            qz: q[2],
            qw: q[3],
            wx: s.w.x,
            wy: s.w.y,
            wz: s.w.z,
        }
    }

    pub fn state(&self) -> ChaserState {
        ChaserState::new(
            Vector3::new(self.px, self.py, self.pz),
            Vector3::new(self.vx, self.vy, self.vz),
            Quaternion::from([self.qx, self.qy, self.qz, self.qw]),
            Vector3::new(self.wx, self.wy, self.wz),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleRow {
    pub schema_version: u32,
    pub node: usize,
    /// Firing time, s.
    pub t: f64,
    pub thruster: usize,
    pub forward_facing: bool,
    /// Obtained pulse, s.
    pub dt: f64,
    /// Reference pulse, s.
    pub dt_ref: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationLog {
    pub schema_version: u32,
    pub records: Vec<IterationRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub schema_version: u32,
    pub converged: bool,
    pub iterations: usize,
    pub homotopy_updates: usize,
    /// Sharpness of the last iteration; absent for a run with no iterations.
    pub final_beta: Option<f64>,
    /// s
    pub t_f: f64,
    /// `Σ dt / dt_max`.
    pub fuel_cost: f64,
    /// `F_rcs Σ dt`, N·s.
    pub impulse: f64,
    pub pulses_fired: usize,
    /// Scaled virtual-control one-norm of the last iteration.
    pub vc_norm: Option<f64>,
    pub terminal_relaxation: TerminalRelaxation,
    /// Absent until the run has been verified.
    pub verified: Option<bool>,
}

impl RunSummary {
    pub fn new(solution: &SolutionTrajectory, run: &RunConfig, converged: bool, updates: usize) -> Self {
        let last = solution.iterate_log.last();
        let v = &run.scenario.vehicle;
        Self {
            schema_version: ARTIFACT_SCHEMA_VERSION,
            converged,
            iterations: solution.iterate_log.len(),
            homotopy_updates: updates,
            final_beta: last.map(|r| r.beta),
            t_f: solution.t_f,
            fuel_cost: fuel_cost(&solution.schedule, v.dt_max),
            impulse: v.thrust * solution.schedule.dt.sum(),
            pulses_fired: solution.schedule.dt.iter().filter(|&&dt| dt > 0.5 * v.dt_min).count(),
            vc_norm: last.map(|r| r.vc_norm),
            terminal_relaxation: solution.relax,
            verified: None,
        }
    }
}

/// Handle on a run directory.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    dir: PathBuf,
}

impl RunArtifacts {
    /// Creates the directory if needed.
    pub fn create(dir: impl Into<PathBuf>) -> Result<Self, ArtifactError> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir).map_err(|source| ArtifactError::Io {
            path: dir.clone(),
            source,
        })?;
        Ok(Self { dir })
    }

    pub fn open(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path(&self, file: &str) -> PathBuf {
        self.dir.join(file)
    }

    /// Writes every artifact except the verification report.
    pub fn write_run(
        &self,
        run: &RunConfig,
        solution: &SolutionTrajectory,
        summary: &RunSummary,
        dense: &[DenseSample],
    ) -> Result<(), ArtifactError> {
        self.write_text(SCENARIO_FILE, &run.to_toml())?;
        self.write_trajectory(solution, dense)?;
        self.write_schedule(solution, run)?;
        self.write_json(
            ITERATIONS_FILE,
            &IterationLog {
                schema_version: ARTIFACT_SCHEMA_VERSION,
                records: solution.iterate_log.clone(),
            },
        )?;
        self.write_json(SUMMARY_FILE, summary)
    }

    pub fn write_verification(&self, report: &VerificationReport) -> Result<(), ArtifactError> {
        self.write_json(VERIFICATION_FILE, report)
    }

    pub fn write_summary(&self, summary: &RunSummary) -> Result<(), ArtifactError> {
        self.write_json(SUMMARY_FILE, summary)
    }

    pub fn write_trajectory(
        &self,
        solution: &SolutionTrajectory,
        dense: &[DenseSample],
    ) -> Result<(), ArtifactError> {
        let path = self.path(TRAJECTORY_FILE);
        let mut w = csv_writer(&path)?;
        let t_c = solution.coast_time();
        let nodes = solution.states.iter().enumerate().map(|(k, s)| {
            TrajectoryRow::new(PointKind::Node, k, k, k as f64 * t_c, s)
        });
        let samples = dense
            .iter()
            .enumerate()
            .map(|(j, d)| TrajectoryRow::new(PointKind::Dense, j, d.segment, d.t, &d.state));
        for row in nodes.chain(samples) {
            w.serialize(row).map_err(|source| csv_err(&path, source))?;
        }
        w.flush().map_err(|source| ArtifactError::Io { path, source })
    }

    pub fn write_schedule(&self, solution: &SolutionTrajectory, run: &RunConfig) -> Result<(), ArtifactError> {
        let path = self.path(SCHEDULE_FILE);
        let mut w = csv_writer(&path)?;
        let sched = &solution.schedule;
        let thrusters = &run.scenario.vehicle.thrusters;
        for k in 0..sched.nodes() {
            for i in 0..sched.n_thrusters() {
                let row = ScheduleRow {
                    schema_version: ARTIFACT_SCHEMA_VERSION,
                    node: k,
                    t: solution.node_time(k),
                    thruster: i,
                    forward_facing: thrusters.get(i).is_some_and(|t| t.forward_facing),
                    dt: sched.dt[(i, k)],
                    dt_ref: sched.dt_ref[(i, k)],
                };
                w.serialize(row).map_err(|source| csv_err(&path, source))?;
            }
        }
        w.flush().map_err(|source| ArtifactError::Io { path, source })
    }

    pub fn read_config(&self) -> Result<RunConfig, ArtifactError> {
        Ok(RunConfig::load(&self.path(SCENARIO_FILE))?)
    }

    pub fn read_summary(&self) -> Result<RunSummary, ArtifactError> {
        let path = self.path(SUMMARY_FILE);
        let s: RunSummary = read_json(&path)?;
        check_schema(&path, s.schema_version)?;
        Ok(s)
    }

    pub fn read_iterations(&self) -> Result<IterationLog, ArtifactError> {
        let path = self.path(ITERATIONS_FILE);
        let log: IterationLog = read_json(&path)?;
        check_schema(&path, log.schema_version)?;
        Ok(log)
    }

    pub fn read_verification(&self) -> Result<VerificationReport, ArtifactError> {
        let path = self.path(VERIFICATION_FILE);
        let r: VerificationReport = read_json(&path)?;
        check_schema(&path, r.schema_version)?;
        Ok(r)
    }

    /// Reassembles the solution from the node rows, the schedule and the
    /// summary.
    pub fn read_solution(&self) -> Result<SolutionTrajectory, ArtifactError> {
        let summary = self.read_summary()?;
        let path = self.path(TRAJECTORY_FILE);
        let mut states = Vec::new();
        for row in csv_rows::<TrajectoryRow>(&path)? {
            if row.kind == PointKind::Node {
                if row.index != states.len() {
                    return Err(malformed(&path, format!("node {} out of order", row.index)));
                }
                states.push(row.state());
            }
        }
        if states.len() < 2 {
            return Err(malformed(&path, "fewer than two nodes".into()));
        }
        let nodes = states.len() - 1;

        let path = self.path(SCHEDULE_FILE);
        let rows = csv_rows::<ScheduleRow>(&path)?;
        let n_thrusters = rows.iter().map(|r| r.thruster + 1).max().unwrap_or(0);
        let mut schedule = PulseSchedule::zeros(n_thrusters, nodes);
        if rows.len() != n_thrusters * nodes {
            return Err(malformed(
                &path,
                format!("{} rows for {n_thrusters} thrusters and {nodes} nodes", rows.len()),
            ));
        }
        for r in rows {
            if r.node >= nodes {
                return Err(malformed(&path, format!("node {} beyond {nodes}", r.node)));
            }
            schedule.dt[(r.thruster, r.node)] = r.dt;
            schedule.dt_ref[(r.thruster, r.node)] = r.dt_ref;
        }
        let iterate_log = match self.read_iterations() {
            Ok(log) => log.records,
            Err(ArtifactError::Io { .. }) => Vec::new(),
            Err(e) => return Err(e),
        };
        Ok(SolutionTrajectory {
            states,
            schedule,
            t_f: summary.t_f,
            relax: summary.terminal_relaxation,
            iterate_log,
        })
    }

    fn write_text(&self, file: &str, text: &str) -> Result<(), ArtifactError> {
        let path = self.path(file);
        std::fs::write(&path, text).map_err(|source| ArtifactError::Io { path, source })
    }

    fn write_json<T: Serialize>(&self, file: &str, value: &T) -> Result<(), ArtifactError> {
        let path = self.path(file);
        let f = File::create(&path).map_err(|source| ArtifactError::Io {
            path: path.clone(),
            source,
        })?;
        let mut w = BufWriter::new(f);
        serde_json::to_writer_pretty(&mut w, value).map_err(|source| ArtifactError::Json {
            path: path.clone(),
            source,
        })?;
        writeln!(w).and_then(|_| w.flush()).map_err(|source| ArtifactError::Io { path, source })
    }
}

fn csv_writer(path: &Path) -> Result<csv::Writer<File>, ArtifactError> {
    csv::Writer::from_path(path).map_err(|source| csv_err(path, source))
}

fn csv_err(path: &Path, source: csv::Error) -> ArtifactError {
    ArtifactError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

fn malformed(path: &Path, message: String) -> ArtifactError {
    ArtifactError::Malformed {
        path: path.to_path_buf(),
        message,
    }
}

fn check_schema(path: &Path, found: u32) -> Result<(), ArtifactError> {
    if found == ARTIFACT_SCHEMA_VERSION {
        Ok(())
    } else {
        Err(ArtifactError::Schema {
            path: path.to_path_buf(),
            found,
        })
    }
}

fn csv_rows<T>(path: &Path) -> Result<Vec<T>, ArtifactError>
where
    T: for<'de> Deserialize<'de> + HasSchema,
{
    let mut r = csv::Reader::from_path(path).map_err(|source| match source.kind() {
        csv::ErrorKind::Io(_) => ArtifactError::Io {
            path: path.to_path_buf(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, source.to_string()),
        },
        _ => csv_err(path, source),
    })?;
    let mut out = Vec::new();
    for row in r.deserialize::<T>() {
        let row = row.map_err(|source| csv_err(path, source))?;
        check_schema(path, row.schema_version())?;
        out.push(row);
    }
    Ok(out)
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, ArtifactError> {
    let text = std::fs::read_to_string(path).map_err(|source| ArtifactError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| ArtifactError::Json {
        path: path.to_path_buf(),
        source,
    })
}

trait HasSchema {
    fn schema_version(&self) -> u32;
}

impl HasSchema for TrajectoryRow {
    fn schema_version(&self) -> u32 {
        self.schema_version
    }
}

impl HasSchema for ScheduleRow {
    fn schema_version(&self) -> u32 {
        self.schema_version
    }
}

/// One line of the `sweep-trig` table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub schema_version: u32,
    pub beta_trig: f64,
    pub converged: bool,
    pub iterations: usize,
    pub homotopy_updates: usize,
    pub fuel_cost: f64,
    /// N·s
    pub impulse: f64,
    /// Empty on success.
    pub error: String,
}

/// One line of the `compare-smoothing` table: a single normalized
/// predicate `g_hat` through each smoothing at one sharpness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothingRow {
    pub schema_version: u32,
    pub beta: f64,
    pub g_hat: f64,
    pub logit: f64,
    /// Logit shifted so the gate reads one at the anchor `g_hat = 1`.
    pub logit_shifted: f64,
    pub rashs: f64,
    pub csc: f64,
    /// RASHS at twice the sharpness, which CSC equals.
    pub rashs_double: f64,
}

/// Tabulates the smoothings over `grid` at each `beta`.
pub fn smoothing_table(betas: &[f64], grid: &[f64]) -> Result<Vec<SmoothingRow>, crate::smooth::GateError> {
    use crate::smooth::{csc_and, rashs_and, SmoothOrGate};
    let mut rows = Vec::with_capacity(betas.len() * grid.len());
    for &beta in betas {
        let gate = SmoothOrGate::new(1.0, vec![1.0], beta)?;
        for &g in grid {
            rows.push(SmoothingRow {
                schema_version: ARTIFACT_SCHEMA_VERSION,
                beta,
                g_hat: g,
                logit: gate.unshifted(&[g])?,
                logit_shifted: gate.eval(&[g])?.value,
                rashs: rashs_and(&[g], beta),
                csc: csc_and(&[g], beta),
                rashs_double: rashs_and(&[g], 2.0 * beta),
            });
        }
    }
    Ok(rows)
}

/// Writes serializable rows as CSV with a header.
pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), ArtifactError> {
    let mut w = csv_writer(path)?;
    for r in rows {
        w.serialize(r).map_err(|source| csv_err(path, source))?;
    }
    w.flush().map_err(|source| ArtifactError::Io {
        path: path.to_path_buf(),
        source,
    })
}
