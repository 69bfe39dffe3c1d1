//! Post-hoc verification of a solution against the exact problem.
//!
//! Nothing here touches the smoothing machinery: pulses are re-propagated
//! through the nonlinear dynamics and checked against the original discrete
//! logic (pulse membership, plume implication, approach cone) and the
//! terminal tolerances.

use serde::{Deserialize, Serialize};

use crate::dynamics::{impulse_jump, propagate_coast_dense, ChaserState, DynamicsError, IntegratorOptions};
use crate::quaternion::Quaternion;
use crate::scenario::ScenarioConfig;
use crate::trajectory::SolutionTrajectory;

pub const VERIFICATION_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyOptions {
    /// Dense samples per coast arc.
    pub dense_factor: usize,
    /// Allowed distance of a pulse from `{0} ∪ [dt_min, dt_max]`, s.
    pub mib_tol: f64,
    /// Largest forward-thruster pulse tolerated inside the plume sphere, s.
    pub plume_tol: f64,
    /// Shell around each sphere in which the implications are not checked, m.
    pub shell: f64,
    /// Approach cone tolerance, deg.
    pub cone_tol_deg: f64,
    pub node_position: f64,
    pub node_velocity: f64,
    pub node_attitude_deg: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            dense_factor: 10,
            mib_tol: 1e-3,
            plume_tol: 1e-3,
            shell: 0.5,
            cone_tol_deg: 0.5,
            node_position: 0.1,
            node_velocity: 0.01,
            node_attitude_deg: 0.5,
        }
    }
}

/// Outcome of one check. `worst` and `limit` share units; the check passes
/// when `worst <= limit`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub worst: f64,
    pub limit: f64,
    pub units: String,
    /// Where the worst case occurs, or why the check is vacuous.
    pub location: String,
}

impl Check {
    fn new(name: &str, units: &str, worst: f64, limit: f64, location: String) -> Self {
        Self {
            name: name.to_string(),
            passed: worst <= limit,
            worst,
            limit,
            units: units.to_string(),
            location,
        }
    }
}

/// One state of the re-propagated trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DenseSample {
    pub t: f64,
    /// Coast arc the sample belongs to.
    pub segment: usize,
    pub state: ChaserState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub schema_version: u32,
    pub passed: bool,
    pub options: VerifyOptions,
    pub checks: Vec<Check>,
    #[serde(skip)]
    pub dense: Vec<DenseSample>,
}

impl VerificationReport {
    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

/// Rotation angle between two attitudes, sign-insensitive, rad.
pub fn attitude_error(a: &Quaternion, b: &Quaternion) -> f64 {
    let c = (a.dot(b).abs() / (a.norm() * b.norm())).min(1.0);
    2.0 * c.acos()
}

/// Re-propagates `solution` from the scenario's initial state, firing each
/// node's pulses and then coasting with `dense_factor` samples per arc.
pub fn repropagate(
    solution: &SolutionTrajectory,
    cfg: &ScenarioConfig,
    integrator: &IntegratorOptions,
    dense_factor: usize,
) -> Result<Vec<DenseSample>, DynamicsError> {
    let n = solution.nodes();
    let t_c = solution.coast_time();
    let mut out = Vec::with_capacity(n * dense_factor + 1);
    let mut x = cfg.x0;
    out.push(DenseSample { t: 0.0, segment: 0, state: x });
    for k in 0..n {
        let jumped = impulse_jump(&x, &solution.schedule.column(k), &cfg.vehicle)?;
        let arc = propagate_coast_dense(&jumped, t_c, dense_factor, &cfg.vehicle, &cfg.orbit, integrator)?;
        let h = t_c / (arc.len() - 1) as f64;
        // Sample 0 is the post-jump state at the node time; the node itself is
        // recorded pre-jump, as the previous arc's end.
        for (j, s) in arc.iter().enumerate().skip(1) {
            out.push(DenseSample {
                t: k as f64 * t_c + j as f64 * h,
                segment: k,
                state: *s,
            });
        }
        x = *arc.last().expect("arc has at least two samples");
    }
    Ok(out)
}

/// Node states of a dense re-propagation, `N_c + 1` of them.
pub fn node_states(dense: &[DenseSample], dense_factor: usize) -> Vec<ChaserState> {
    dense.iter().step_by(dense_factor.max(1)).map(|s| s.state).collect()
}

pub fn verify(
    solution: &SolutionTrajectory,
    cfg: &ScenarioConfig,
    integrator: &IntegratorOptions,
    opts: &VerifyOptions,
) -> Result<VerificationReport, DynamicsError> {
    let dense = repropagate(solution, cfg, integrator, opts.dense_factor)?;
    let nodes = node_states(&dense, opts.dense_factor);
    let mut checks = vec![
        mib_check(solution, cfg, opts),
        plume_check(solution, cfg, opts),
        cone_check(&dense, cfg, opts),
        node_check("node_position", "m", opts.node_position, solution, &nodes, |a, b| {
            (a.p - b.p).norm()
        }),
        node_check("node_velocity", "m/s", opts.node_velocity, solution, &nodes, |a, b| {
            (a.v - b.v).norm()
        }),
        node_check("node_attitude", "deg", opts.node_attitude_deg, solution, &nodes, |a, b| {
            attitude_error(&a.q, &b.q).to_degrees()
        }),
    ];
    let terminal = nodes.last().copied().unwrap_or(cfg.x0);
    checks.extend(terminal_checks(&terminal, cfg));
    Ok(VerificationReport {
        schema_version: VERIFICATION_SCHEMA_VERSION,
        passed: checks.iter().all(|c| c.passed),
        options: *opts,
        checks,
        dense,
    })
}

/// Distance of each obtained pulse from the admissible set.
fn mib_check(solution: &SolutionTrajectory, cfg: &ScenarioConfig, opts: &VerifyOptions) -> Check {
    let v = &cfg.vehicle;
    let sched = &solution.schedule;
    let mut worst = (0.0, String::from("every pulse admissible"));
    for k in 0..sched.nodes() {
        for i in 0..sched.n_thrusters() {
            let dt = sched.dt[(i, k)];
            let dist = if dt < 0.5 * v.dt_min {
                dt.abs()
            } else if dt < v.dt_min {
                v.dt_min - dt
            } else {
                (dt - v.dt_max).max(0.0)
            };
            if dist > worst.0 {
                worst = (dist, format!("thruster {i}, node {k}, dt = {dt:.6} s"));
            }
        }
    }
    Check::new("mib_membership", "s", worst.0, opts.mib_tol, worst.1)
}

fn plume_check(solution: &SolutionTrajectory, cfg: &ScenarioConfig, opts: &VerifyOptions) -> Check {
    let forward: Vec<usize> = cfg.vehicle.forward_facing().collect();
    let mut worst = (0.0, String::from("no node inside the plume sphere"));
    let mut inside = false;
    for k in 0..solution.nodes() {
        let p = solution.states[k].p;
        if p.norm() > cfg.r_plume - opts.shell {
            continue;
        }
        if !inside {
            inside = true;
            worst.1 = format!("no forward firing at {} m or closer", cfg.r_plume - opts.shell);
        }
        for &i in &forward {
            let dt = solution.schedule.dt[(i, k)];
            if dt > worst.0 {
                worst = (dt, format!("thruster {i}, node {k}, |p| = {:.3} m", p.norm()));
            }
        }
    }
    Check::new("plume_impingement", "s", worst.0, opts.plume_tol, worst.1)
}

fn cone_check(dense: &[DenseSample], cfg: &ScenarioConfig, opts: &VerifyOptions) -> Check {
    let mut worst = (f64::NEG_INFINITY, String::from("no sample inside the approach sphere"));
    for s in dense {
        let r = s.state.p.norm();
        if r > cfg.r_appch - opts.shell || r == 0.0 {
            continue;
        }
        let off_axis = (s.state.p.x / r).clamp(-1.0, 1.0).acos();
        let excess = (off_axis - cfg.theta_appch).to_degrees();
        if excess > worst.0 {
            worst = (excess, format!("t = {:.2} s, |p| = {r:.3} m", s.t));
        }
    }
    Check::new("approach_cone", "deg", worst.0.max(0.0), opts.cone_tol_deg, worst.1)
}

fn node_check(
    name: &str,
    units: &str,
    limit: f64,
    solution: &SolutionTrajectory,
    propagated: &[ChaserState],
    err: impl Fn(&ChaserState, &ChaserState) -> f64,
) -> Check {
    let mut worst = (0.0, String::from("node 0"));
    for (k, (a, b)) in solution.states.iter().zip(propagated).enumerate() {
        let e = err(a, b);
        if e > worst.0 {
            worst = (e, format!("node {k}"));
        }
    }
    Check::new(name, units, worst.0, limit, worst.1)
}

/// Terminal tolerances on the re-propagated final state.
fn terminal_checks(x: &ChaserState, cfg: &ScenarioConfig) -> Vec<Check> {
    let tol = &cfg.tol;
    let f = &cfg.xf;
    let here = String::from("final node");
    vec![
        Check::new("terminal_position", "m", (x.p - f.p).amax(), tol.position, here.clone()),
        Check::new("terminal_velocity", "m/s", (x.v - f.v).amax(), tol.velocity, here.clone()),
        Check::new(
            "terminal_attitude",
            "deg",
            attitude_error(&x.q, &f.q).to_degrees(),
            tol.attitude.to_degrees(),
            here.clone(),
        ),
        Check::new("terminal_rate", "rad/s", (x.w - f.w).amax(), tol.rate, here),
    ]
}
