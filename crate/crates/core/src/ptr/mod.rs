//! Penalized-trust-region sequential convex programming.
//!
//! Each iteration linearizes the impulsive dynamics and the smoothed logic
//! constraints about the current reference, solves the resulting cone
//! program, and adopts its optimizer as the next reference. Infeasibility
//! introduced by linearization is absorbed by penalized virtual controls and
//! buffers; step size is governed by a quadratic trust-region penalty.

mod discretize;
mod solve;
mod subproblem;

pub use discretize::{discretize, DiscretizeError, Segment};
pub use solve::{ptr_step, solve, solve_from, PtrError, SolveReport, StepOutcome};
pub use subproblem::{build_subproblem, Layout, Subproblem, SubproblemError};

use serde::{Deserialize, Serialize};

/// Characteristic magnitudes dividing each state block before it enters the
/// subproblem. Pulses are scaled by `dt_max` and the final time by its range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scaling {
    pub position: f64,
    pub velocity: f64,
    pub quaternion: f64,
    pub rate: f64,
}

impl Default for Scaling {
    fn default() -> Self {
        Self {
            position: 100.0,
            velocity: 1.0,
            quaternion: 1.0,
            rate: 0.1,
        }
    }
}

impl Scaling {
    /// Scale of state component `i` in `[p; v; q; ω]` order.
    pub fn state(&self, i: usize) -> f64 {
        match i {
            0..=2 => self.position,
            3..=5 => self.velocity,
            6..=9 => self.quaternion,
            _ => self.rate,
        }
    }
}

/// How the homotopy is interleaved with the PTR iterations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ContinuationMode {
    /// β may change between any two PTR iterations.
    Embedded,
    /// A full PTR solve per β level.
    Sequential,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PtrConfig {
    pub w_vc: f64,
    pub w_tr: f64,
    pub eps_stop: f64,
    pub vc_tol: f64,
    pub max_iters: usize,
    pub mode: ContinuationMode,
    /// Fraction of each terminal tolerance imposed in the subproblem, so
    /// re-propagated trajectories keep a margin to the true tolerance.
    pub terminal_margin: f64,
    /// Re-solves with a tenfold trust-region weight after a candidate whose
    /// propagation fails.
    pub max_rejections: usize,
    pub scaling: Scaling,
}

impl Default for PtrConfig {
    fn default() -> Self {
        Self {
            // Tuned on the Apollo scenario. One m/s of virtual control must
            // cost far more than the fuel it would save, and the trust region
            // must be stiff enough that pulses do not hop across the MIB gap.
            w_vc: 1e4,
            w_tr: 50.0,
            eps_stop: 1e-3,
            vc_tol: 1e-6,
            max_iters: 200,
            mode: ContinuationMode::Embedded,
            terminal_margin: 0.95,
            max_rejections: 3,
            scaling: Scaling::default(),
        }
    }
}

impl PtrConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.w_vc > 0.0 && self.w_tr > 0.0) {
            return Err("penalty weights must be positive".into());
        }
        if !(self.eps_stop > 0.0 && self.vc_tol > 0.0) {
            return Err("stopping tolerances must be positive".into());
        }
        if self.max_iters == 0 {
            return Err("max_iters must be at least 1".into());
        }
        if !(self.terminal_margin > 0.0 && self.terminal_margin <= 1.0) {
            return Err("terminal_margin must lie in (0, 1]".into());
        }
        let s = &self.scaling;
        if [s.position, s.velocity, s.quaternion, s.rate]
            .iter()
            .any(|v| !(*v > 0.0))
        {
            return Err("scaling factors must be positive".into());
        }
        Ok(())
    }
}
