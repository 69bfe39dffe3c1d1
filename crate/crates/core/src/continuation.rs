//! Homotopy schedule for the gate sharpness β.
//!
//! The sigmoid is required to reach `1 − ε` at argument `δ`; sweeping `δ`
//! geometrically from `δ₀` to `δ₁` gives the β schedule. In the embedded
//! scheme β is advanced between single PTR iterations whenever the relative
//! cost decrease falls inside `[β_worse, β_trig]`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ContinuationError {
    #[error("interpolation parameter {0} outside [0, 1]")]
    AlphaOutOfRange(f64),
    #[error("homotopy already at its final value ({0} updates done)")]
    Exhausted(usize),
    #[error("invalid homotopy parameters: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HomotopyParams {
    /// Precision ε ∈ (0, 1).
    pub precision: f64,
    /// Smoothest δ₀.
    pub delta0: f64,
    /// Sharpest δ₁ < δ₀.
    pub delta1: f64,
    /// Number of updates N_h.
    pub updates: usize,
    pub beta_worse: f64,
    pub beta_trig: f64,
}

impl Default for HomotopyParams {
    fn default() -> Self {
        Self {
            precision: 1e-2,
            delta0: 10.0,
            delta1: 0.01,
            updates: 10,
            beta_worse: -1e-3,
            beta_trig: 0.1,
        }
    }
}

impl HomotopyParams {
    pub fn validate(&self) -> Result<(), ContinuationError> {
        let bad = |m: &str| Err(ContinuationError::Invalid(m.to_string()));
        if !(self.precision > 0.0 && self.precision < 1.0) {
            return bad("precision must lie in (0, 1)");
        }
        if !(0.0 < self.delta1 && self.delta1 < self.delta0) {
            return bad("smoothness must satisfy 0 < delta1 < delta0");
        }
        if self.updates < 2 {
            return bad("at least two homotopy updates are required");
        }
        if !(self.beta_worse < 0.0 && 0.0 < self.beta_trig) {
            return bad("thresholds must satisfy beta_worse < 0 < beta_trig");
        }
        Ok(())
    }

    /// Geometric ratio γ = δ₁/δ₀.
    pub fn ratio(&self) -> f64 {
        self.delta1 / self.delta0
    }

    pub fn delta_at(&self, alpha: f64) -> Result<f64, ContinuationError> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(ContinuationError::AlphaOutOfRange(alpha));
        }
        Ok(self.ratio().powf(alpha) * self.delta0)
    }

    /// β(α) = ln(ε⁻¹ − 1) / (γ^α δ₀).
    pub fn homotopy_value(&self, alpha: f64) -> f64 {
        (1.0 / self.precision - 1.0).ln() / (self.ratio().powf(alpha) * self.delta0)
    }

    /// β after `count` updates (1-based), i.e. at α = (count − 1)/(N_h − 1).
    pub fn value_after(&self, count: usize) -> f64 {
        let alpha = (count.saturating_sub(1)) as f64 / (self.updates - 1) as f64;
        self.homotopy_value(alpha.min(1.0))
    }

    pub fn schedule(&self) -> Vec<f64> {
        (1..=self.updates).map(|l| self.value_after(l)).collect()
    }

    pub fn final_value(&self) -> f64 {
        self.homotopy_value(1.0)
    }
}

/// Counters of the embedded continuation loop.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ContinuationState {
    /// Number of β updates performed so far (L).
    pub updates: usize,
    /// PTR iteration counter (ℓ).
    pub iteration: usize,
    /// Current sharpness; `None` before the first update.
    pub beta: Option<f64>,
    /// Subproblem costs J₁, J₂, … in iteration order.
    pub cost_history: Vec<f64>,
}

impl ContinuationState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Relative decrease `(J_{ℓ−1} − J_ℓ)/|J_{ℓ−1}|` of the last two costs.
    /// A vanishing previous cost counts as no decrease.
    pub fn relative_decrease(&self) -> Option<f64> {
        let n = self.cost_history.len();
        if n < 2 {
            return None;
        }
        let (prev, cur) = (self.cost_history[n - 2], self.cost_history[n - 1]);
        if prev.abs() < 1e-12 {
            return Some(0.0);
        }
        Some((prev - cur) / prev.abs())
    }
}

/// Advances L and returns the new β.
pub fn update_rule(
    state: &mut ContinuationState,
    params: &HomotopyParams,
) -> Result<f64, ContinuationError> {
    if state.updates >= params.updates {
        return Err(ContinuationError::Exhausted(state.updates));
    }
    let alpha = state.updates as f64 / (params.updates - 1) as f64;
    let beta = params.homotopy_value(alpha);
    state.updates += 1;
    state.beta = Some(beta);
    Ok(beta)
}

/// Whether β should be advanced before the next PTR iteration.
pub fn update_decision(state: &ContinuationState, params: &HomotopyParams) -> bool {
    if state.updates >= params.updates {
        return false;
    }
    match state.relative_decrease() {
        Some(r) => params.beta_worse <= r && r <= params.beta_trig,
        None => false,
    }
}
