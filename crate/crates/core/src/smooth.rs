//! Multinomial-logit smoothing of Boolean OR logic over predicate
//! inequalities `gᵢ(z) > 0`.
//!
//! The gate is evaluated in four stages: normalize the predicates by
//! `g_max`, take a softmax (log-sum-exp), pass it through a sigmoid, then
//! shift the result so it is exactly one at the anchor predicate `g_c`.
//! Softmax and sigmoid are kept as separate stages; fusing them into the
//! logit form loses precision at large sharpness.
//!
//! RASHS and CSC smoothings of AND logic are included as comparators.

use thiserror::Error;

/// Exponent arguments are clamped to this magnitude.
pub const EXP_CLAMP: f64 = 700.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GateError {
    #[error("normalization g_max must be positive, got {0}")]
    NonPositiveScale(f64),
    #[error("sharpness must be positive, got {0}")]
    NonPositiveSharpness(f64),
    #[error("anchor predicate needs at least one strictly positive element")]
    AnchorNotPositive,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("empty predicate vector")]
    Empty,
}

pub fn normalize(g: &[f64], g_max: f64) -> Result<Vec<f64>, GateError> {
    if !(g_max > 0.0) {
        return Err(GateError::NonPositiveScale(g_max));
    }
    Ok(g.iter().map(|v| v / g_max).collect())
}

/// `β⁻¹ log Σ exp(β ĝᵢ)` with max subtraction.
pub fn softmax(g_hat: &[f64], beta: f64) -> f64 {
    softmax_with_weights(g_hat, beta).0
}

/// Softmax value and its gradient (the softmax weights, which sum to one).
pub fn softmax_with_weights(g_hat: &[f64], beta: f64) -> (f64, Vec<f64>) {
    let m = g_hat.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let terms: Vec<f64> = g_hat
        .iter()
        .map(|g| clamped_exp(beta * (g - m)))
        .collect();
    let sum: f64 = terms.iter().sum();
    let value = m + sum.ln() / beta;
    (value, terms.into_iter().map(|t| t / sum).collect())
}

fn clamped_exp(x: f64) -> f64 {
    x.clamp(-EXP_CLAMP, EXP_CLAMP).exp()
}

/// Logistic function of `z` in a form that is accurate in both tails.
fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + clamped_exp(-z))
    } else {
        let e = clamped_exp(z);
        e / (1.0 + e)
    }
}

/// `1 − (1 + exp(βw))⁻¹`.
pub fn sigmoid(w: f64, beta: f64) -> f64 {
    logistic(beta * w)
}

/// `dσ/dw = β σ (1 − σ)`, computed without cancellation.
pub fn sigmoid_slope(w: f64, beta: f64) -> f64 {
    beta * logistic(beta * w) * logistic(-beta * w)
}

/// `d²σ/dw² = β² σ (1 − σ)(1 − 2σ)`.
pub fn sigmoid_curvature(w: f64, beta: f64) -> f64 {
    let s = logistic(beta * w);
    let c = logistic(-beta * w);
    beta * beta * s * c * (c - s)
}

/// Shifted multinomial-logit OR gate.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothOrGate {
    g_max: f64,
    g_c: Vec<f64>,
    beta: f64,
    shift: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GateEval {
    pub value: f64,
    /// `∂value/∂g` for the raw (unnormalized) predicates.
    pub grad: Vec<f64>,
}

impl SmoothOrGate {
    pub fn new(g_max: f64, g_c: Vec<f64>, beta: f64) -> Result<Self, GateError> {
        if !(g_max > 0.0) {
            return Err(GateError::NonPositiveScale(g_max));
        }
        if !(beta > 0.0) {
            return Err(GateError::NonPositiveSharpness(beta));
        }
        if g_c.is_empty() {
            return Err(GateError::Empty);
        }
        if !g_c.iter().any(|&g| g > 0.0) {
            return Err(GateError::AnchorNotPositive);
        }
        let anchor = normalize(&g_c, g_max)?;
        let shift = 1.0 - sigmoid(softmax(&anchor, beta), beta);
        Ok(Self {
            g_max,
            g_c,
            beta,
            shift,
        })
    }

    pub fn n_predicates(&self) -> usize {
        self.g_c.len()
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn g_max(&self) -> f64 {
        self.g_max
    }

    pub fn anchor(&self) -> &[f64] {
        &self.g_c
    }

    /// `1 − σ_β(softmax(ĝ_c))`, the vertical shift.
    pub fn shift(&self) -> f64 {
        self.shift
    }

    /// Same gate at a different sharpness.
    pub fn with_beta(&self, beta: f64) -> Result<Self, GateError> {
        Self::new(self.g_max, self.g_c.clone(), beta)
    }

    /// The sigmoid-of-softmax without the shift.
    pub fn unshifted(&self, g: &[f64]) -> Result<f64, GateError> {
        let g_hat = normalize(g, self.g_max)?;
        Ok(sigmoid(softmax(&g_hat, self.beta), self.beta))
    }

    pub fn eval(&self, g: &[f64]) -> Result<GateEval, GateError> {
        if g.len() != self.g_c.len() {
            return Err(GateError::LengthMismatch(g.len(), self.g_c.len()));
        }
        let g_hat = normalize(g, self.g_max)?;
        let (star, weights) = softmax_with_weights(&g_hat, self.beta);
        let sig = sigmoid(star, self.beta);
        let outer = sigmoid_slope(star, self.beta) / self.g_max;
        Ok(GateEval {
            value: sig + self.shift,
            grad: weights.into_iter().map(|w| w * outer).collect(),
        })
    }

    /// Value, first and second derivative for a single-predicate gate. For
    /// `n_g = 1` the softmax is the identity, so only the sigmoid remains.
    pub fn eval_scalar(&self, g: f64) -> (f64, f64, f64) {
        debug_assert_eq!(self.g_c.len(), 1);
        let w = g / self.g_max;
        (
            sigmoid(w, self.beta) + self.shift,
            sigmoid_slope(w, self.beta) / self.g_max,
            sigmoid_curvature(w, self.beta) / (self.g_max * self.g_max),
        )
    }
}

/// RASHS smooth AND: `Πᵢ (1 + exp(β ĝᵢ))⁻¹`.
pub fn rashs_and(g_hat: &[f64], beta: f64) -> f64 {
    g_hat.iter().map(|g| logistic(-beta * g)).product()
}

/// CSC smooth AND: `Πᵢ ½(1 − tanh(β ĝᵢ))`.
pub fn csc_and(g_hat: &[f64], beta: f64) -> f64 {
    g_hat
        .iter()
        .map(|g| 0.5 * (1.0 - (beta * g).tanh()))
        .product()
}

/// `(1 − R̂) f_if + R̂ f_else`, to be constrained nonpositive by callers.
pub fn smooth_implication(f_if: &[f64], f_else: &[f64], r_hat: f64) -> Result<Vec<f64>, GateError> {
    if f_if.len() != f_else.len() {
        return Err(GateError::LengthMismatch(f_if.len(), f_else.len()));
    }
    Ok(f_if
        .iter()
        .zip(f_else)
        .map(|(a, b)| (1.0 - r_hat) * a + r_hat * b)
        .collect())
}
