//! The rendezvous problem instance: boundary conditions, costs and the three
//! smoothed logic constraints (approach cone, plume impingement, minimum
//! impulse bit).

use nalgebra::Vector3;
use thiserror::Error;

use crate::continuation::HomotopyParams;
use crate::dynamics::{ChaserState, StateVector};
use crate::quaternion::Quaternion;
use crate::scenario::ScenarioConfig;
use crate::smooth::{sigmoid, GateError, SmoothOrGate};
use crate::trajectory::{PulseSchedule, SolutionTrajectory, TerminalRelaxation};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("approach direction undefined at |p| = {0:e} m")]
    SingularDirection(f64),
    #[error(transparent)]
    Gate(#[from] GateError),
}

/// Smallest position norm at which the approach direction is defined.
pub const MIN_RANGE: f64 = 1e-6;

/// `q_f = q_ℓ ⊗ q_dp*`, `p_f = −rotate(q_f, p_dp)`.
pub fn terminal_pose(
    q_l: &Quaternion,
    q_dp: &Quaternion,
    p_dp: &Vector3<f64>,
) -> (Quaternion, Vector3<f64>) {
    let q_f = *q_l * q_dp.conj();
    (q_f, -q_f.rotate(p_dp))
}

/// `Σ dt / dt_max`.
pub fn fuel_cost(schedule: &PulseSchedule, dt_max: f64) -> f64 {
    schedule.dt.sum() / dt_max
}

/// `w_eq Σ |dt − dt_ref| / dt_min`.
pub fn eq_regularization(schedule: &PulseSchedule, w_eq: f64, dt_min: f64) -> f64 {
    let mismatch: f64 = schedule
        .dt
        .iter()
        .zip(schedule.dt_ref.iter())
        .map(|(a, b)| (a - b).abs())
        .sum();
    w_eq * mismatch / dt_min
}

/// The three single-predicate gates of the scenario at one sharpness.
#[derive(Debug, Clone, PartialEq)]
pub struct LogicGates {
    pub approach: SmoothOrGate,
    pub plume: SmoothOrGate,
    pub mib: SmoothOrGate,
    dt_min: f64,
    /// SDC slope at the wall-avoidance pivot `dt_min + dt_db`.
    g_db: f64,
    pivot: f64,
}

impl LogicGates {
    pub fn new(cfg: &ScenarioConfig, beta: f64) -> Result<Self, ModelError> {
        let n = &cfg.gates;
        let mib = SmoothOrGate::new(n.mib_g_max, vec![n.mib_anchor], beta)?;
        let dt_min = cfg.vehicle.dt_min;
        let pivot = dt_min + cfg.vehicle.dt_db;
        let (r, dr, _) = mib.eval_scalar(pivot - dt_min);
        Ok(Self {
            approach: SmoothOrGate::new(n.approach_g_max, vec![n.approach_anchor], beta)?,
            plume: SmoothOrGate::new(n.plume_g_max, vec![n.plume_anchor], beta)?,
            mib,
            dt_min,
            g_db: dr * pivot + r,
            pivot,
        })
    }

    /// Gates at the final sharpness of a homotopy.
    pub fn sharpest(cfg: &ScenarioConfig, params: &HomotopyParams) -> Result<Self, ModelError> {
        Self::new(cfg, params.final_value())
    }

    pub fn beta(&self) -> f64 {
        self.mib.beta()
    }

    /// Wall-avoidance threshold `G_db`.
    pub fn wall_threshold(&self) -> f64 {
        self.g_db
    }
}

/// Value and position gradient of a sphere gate `R̂(pᵀp − r²)`.
fn sphere_gate(gate: &SmoothOrGate, p: &Vector3<f64>, r: f64) -> (f64, Vector3<f64>) {
    let (v, dv, _) = gate.eval_scalar(p.norm_squared() - r * r);
    (v, p * (2.0 * dv))
}

/// Smoothed approach-cone residual (feasible when ≤ 0) and its gradient.
pub fn approach_cone_constraint(
    p: &Vector3<f64>,
    gates: &LogicGates,
    cfg: &ScenarioConfig,
) -> Result<(f64, Vector3<f64>), ModelError> {
    let norm = p.norm();
    if norm < MIN_RANGE {
        return Err(ModelError::SingularDirection(norm));
    }
    let cos = cfg.theta_appch.cos();
    let (r_hat, dr_hat) = sphere_gate(&gates.approach, p, cfg.r_appch);
    let residual = cos - (1.0 + cos) * r_hat - p.x / norm;
    let d_dir = (Vector3::x() - p * (p.x / (norm * norm))) / norm;
    Ok((residual, -dr_hat * (1.0 + cos) - d_dir))
}

/// Plume residual `dt − R̂_plume(p)·dt_max` for a forward-facing thruster,
/// with its gradient in `p` (the `dt` derivative is 1).
pub fn plume_constraint(
    p_node: &Vector3<f64>,
    dt: f64,
    gates: &LogicGates,
    cfg: &ScenarioConfig,
) -> (f64, Vector3<f64>) {
    let dt_max = cfg.vehicle.dt_max;
    let (r_hat, dr_hat) = sphere_gate(&gates.plume, p_node, cfg.r_plume);
    (dt - r_hat * dt_max, -dr_hat * dt_max)
}

/// Smooth deadband curve `dt = R̂_mib(dt_ref)·dt_ref` with its slope and
/// curvature in `dt_ref`.
pub fn mib_sdc(dt_ref: f64, gates: &LogicGates) -> (f64, f64, f64) {
    let (r, dr, d2r) = gates.mib.eval_scalar(dt_ref - gates.dt_min);
    (r * dt_ref, r + dr * dt_ref, 2.0 * dr + d2r * dt_ref)
}

/// Wall-avoidance residual `SDC'(dt_ref) − G_db` (feasible when ≤ 0) and
/// its derivative. The gate values are differenced through their
/// complements so the pass-through side keeps its sign at large β.
pub fn wall_avoidance(dt_ref: f64, gates: &LogicGates) -> (f64, f64) {
    let gate = &gates.mib;
    let (beta, g_max) = (gate.beta(), gate.g_max());
    let w = (dt_ref - gates.dt_min) / g_max;
    let w_b = (gates.pivot - gates.dt_min) / g_max;
    let (_, dr, d2r) = gate.eval_scalar(dt_ref - gates.dt_min);
    let (_, dr_b, _) = gate.eval_scalar(gates.pivot - gates.dt_min);
    let level = sigmoid(-w_b, beta) - sigmoid(-w, beta);
    let residual = level + (dr * dt_ref - dr_b * gates.pivot);
    (residual, 2.0 * dr + d2r * dt_ref)
}

/// Terminal attitude flipped into the hemisphere of `q_ref`.
pub fn aligned_target_attitude(q_f: &Quaternion, q_ref: &Quaternion) -> Quaternion {
    if q_ref.dot(q_f) < 0.0 {
        -*q_f
    } else {
        *q_f
    }
}

/// Residuals of the terminal boundary conditions. Every entry must be ≤ 0
/// (boxes, half-space) or 0 (equalities) for the conditions to hold.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryResiduals {
    /// `x_N + Δx_f − x_f`, with the attitude block taken against the aligned
    /// target quaternion.
    pub terminal: StateVector,
    /// `‖Δp_f‖∞ − tol_pf`.
    pub position_box: f64,
    /// `e_xᵀΔp_f`.
    pub axial: f64,
    pub velocity_box: f64,
    pub rate_box: f64,
    /// `cos(tol_qf/2) − q_Nᵀq_f`.
    pub attitude: f64,
}

impl BoundaryResiduals {
    pub fn satisfied(&self, tol: f64) -> bool {
        self.terminal.amax() <= tol
            && self.axial.abs() <= tol
            && self.position_box <= tol
            && self.velocity_box <= tol
            && self.rate_box <= tol
            && self.attitude <= tol
    }
}

pub fn boundary_constraints(
    x_n: &ChaserState,
    relax: &TerminalRelaxation,
    cfg: &ScenarioConfig,
) -> BoundaryResiduals {
    let q_f = aligned_target_attitude(&cfg.xf.q, &x_n.q);
    let mut target = cfg.xf;
    target.q = q_f;
    BoundaryResiduals {
        terminal: x_n.to_vector() + relax.to_vector() - target.to_vector(),
        position_box: relax.dp.amax() - cfg.tol.position,
        axial: relax.dp.x,
        velocity_box: relax.dv.amax() - cfg.tol.velocity,
        rate_box: relax.dw.amax() - cfg.tol.rate,
        attitude: (0.5 * cfg.tol.attitude).cos() - x_n.q.dot(&q_f),
    }
}

/// Straight-line position, slerp attitude, constant-rate spin, no firings,
/// at the midpoint final time.
pub fn initial_guess(cfg: &ScenarioConfig) -> SolutionTrajectory {
    let [lo, hi] = cfg.t_f_bounds;
    let t_f = 0.5 * (lo + hi);
    let n = cfg.nodes;
    let (x0, xf) = (&cfg.x0, &cfg.xf);
    let q_f = aligned_target_attitude(&xf.q, &x0.q);
    let v = (xf.p - x0.p) / t_f;
    let w = (x0.q.conj() * q_f).log() / t_f;
    let states = (0..=n)
        .map(|k| {
            let s = k as f64 / n as f64;
            ChaserState::new(x0.p + (xf.p - x0.p) * s, v, x0.q.slerp(&q_f, s), w)
        })
        .collect();
    SolutionTrajectory {
        states,
        schedule: PulseSchedule::zeros(cfg.n_thrusters(), n),
        t_f,
        relax: TerminalRelaxation::default(),
        iterate_log: Vec::new(),
    }
}
