//! Discrete trajectory representation shared by the model and the solver.

use nalgebra::{DMatrix, Vector3, Vector4};
use serde::{Deserialize, Serialize};

use crate::dynamics::{ChaserState, StateVector};

/// Obtained and reference pulse widths, thruster-major (`n_rcs × N_c`), s.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseSchedule {
    pub dt: DMatrix<f64>,
    pub dt_ref: DMatrix<f64>,
}

impl PulseSchedule {
    pub fn zeros(n_thrusters: usize, nodes: usize) -> Self {
        Self {
            dt: DMatrix::zeros(n_thrusters, nodes),
            dt_ref: DMatrix::zeros(n_thrusters, nodes),
        }
    }

    pub fn n_thrusters(&self) -> usize {
        self.dt.nrows()
    }

    pub fn nodes(&self) -> usize {
        self.dt.ncols()
    }

    /// Pulses fired at node `k`.
    pub fn column(&self, k: usize) -> Vec<f64> {
        self.dt.column(k).iter().copied().collect()
    }

    pub fn is_finite(&self) -> bool {
        self.dt.iter().chain(self.dt_ref.iter()).all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TerminalRelaxation {
    pub dp: Vector3<f64>,
    pub dv: Vector3<f64>,
    pub dq: Vector4<f64>,
    pub dw: Vector3<f64>,
}

impl TerminalRelaxation {
    pub fn to_vector(&self) -> StateVector {
        let mut x = StateVector::zeros();
        x.fixed_rows_mut::<3>(0).copy_from(&self.dp);
        x.fixed_rows_mut::<3>(3).copy_from(&self.dv);
        x.fixed_rows_mut::<4>(6).copy_from(&self.dq);
        x.fixed_rows_mut::<3>(10).copy_from(&self.dw);
        x
    }

    pub fn from_vector(x: &StateVector) -> Self {
        Self {
            dp: x.fixed_rows::<3>(0).into_owned(),
            dv: x.fixed_rows::<3>(3).into_owned(),
            dq: x.fixed_rows::<4>(6).into_owned(),
            dw: x.fixed_rows::<3>(10).into_owned(),
        }
    }
}

/// One line of the solver's iteration history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    /// PTR iteration ℓ, 1-based.
    pub iteration: usize,
    /// Homotopy updates performed so far, L.
    pub updates: usize,
    pub beta: f64,
    /// Subproblem optimal cost J_ℓ.
    pub cost: f64,
    pub fuel: f64,
    pub eq_reg: f64,
    /// Weighted trust-region term `Σ_k ‖scaled deviation‖²`.
    pub trust_region: f64,
    /// Largest scaled deviation from the previous iterate (∞-norm).
    pub deviation: f64,
    /// Virtual-control one-norm (scaled).
    pub vc_norm: f64,
    /// Virtual-buffer one-norm on the smoothed logic constraints.
    pub buffer_norm: f64,
    pub t_f: f64,
    pub status: String,
    pub solve_time: f64,
    pub wall_time: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolutionTrajectory {
    /// Node states, `N_c + 1` of them.
    pub states: Vec<ChaserState>,
    pub schedule: PulseSchedule,
    pub t_f: f64,
    pub relax: TerminalRelaxation,
    pub iterate_log: Vec<IterationRecord>,
}

impl SolutionTrajectory {
    pub fn nodes(&self) -> usize {
        self.schedule.nodes()
    }

    pub fn coast_time(&self) -> f64 {
        self.t_f / self.nodes() as f64
    }

    pub fn node_time(&self, k: usize) -> f64 {
        k as f64 * self.coast_time()
    }

    pub fn is_finite(&self) -> bool {
        self.t_f.is_finite()
            && self.states.iter().all(ChaserState::is_finite)
            && self.schedule.is_finite()
    }
}
