//! Solver-neutral cone programs.
//!
//! A program minimizes `cᵀx` subject to blocks `A x + b ∈ K` with `K` a zero
//! cone, a nonnegative orthant or a second-order cone
//! `{(t, u) : ‖u‖₂ ≤ t}`. Only [`clarabel`] references a concrete solver.

pub mod clarabel;
pub mod text;

pub use self::clarabel::ClarabelSolver;

use std::fmt;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Cone {
    Zero,
    Nonneg,
    Soc,
}

impl Cone {
    pub fn tag(self) -> &'static str {
        match self {
            Cone::Zero => "ZERO",
            Cone::Nonneg => "NONNEG",
            Cone::Soc => "SOC",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "ZERO" => Some(Cone::Zero),
            "NONNEG" => Some(Cone::Nonneg),
            "SOC" => Some(Cone::Soc),
            _ => None,
        }
    }
}

/// Sparse matrix in triplet form. Repeated entries are summed.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Triplets {
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
}

impl Triplets {
    pub fn push(&mut self, row: usize, col: usize, val: f64) {
        self.rows.push(row);
        self.cols.push(col);
        self.vals.push(val);
    }

    pub fn len(&self) -> usize {
        self.vals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vals.is_empty()
    }

    /// `A x` for a block with `m` rows.
    pub fn apply(&self, m: usize, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; m];
        for ((&r, &c), &v) in self.rows.iter().zip(&self.cols).zip(&self.vals) {
            out[r] += v * x[c];
        }
        out
    }
}

/// One constraint `A x + b ∈ cone` of dimension `b.len()`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintBlock {
    pub cone: Cone,
    pub dim: usize,
    pub a: Triplets,
    pub b: Vec<f64>,
}

impl ConstraintBlock {
    pub fn new(cone: Cone, dim: usize) -> Self {
        Self {
            cone,
            dim,
            a: Triplets::default(),
            b: vec![0.0; dim],
        }
    }

    /// `A x + b`.
    pub fn evaluate(&self, x: &[f64]) -> Vec<f64> {
        let mut out = self.a.apply(self.dim, x);
        for (o, b) in out.iter_mut().zip(&self.b) {
            *o += b;
        }
        out
    }

    /// Distance-like violation of the cone membership at `x` (zero when
    /// feasible).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let s = self.evaluate(x);
        match self.cone {
            Cone::Zero => s.iter().fold(0.0, |m, v| m.max(v.abs())),
            Cone::Nonneg => s.iter().fold(0.0, |m, v| m.max(-v)),
            Cone::Soc => {
                let tail = s[1..].iter().map(|v| v * v).sum::<f64>().sqrt();
                (tail - s[0]).max(0.0)
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConicProgram {
    pub n: usize,
    pub c: Vec<f64>,
    pub blocks: Vec<ConstraintBlock>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Violation {
    #[error("cost vector has {got} entries, expected {n}")]
    CostLength { n: usize, got: usize },
    #[error("non-finite cost entry {0}")]
    NonFiniteCost(usize),
    #[error("block {block}: b has {rows} rows but the cone has dimension {dim}")]
    RowMismatch { block: usize, rows: usize, dim: usize },
    #[error("block {block}: second-order cone of dimension {dim} < 2")]
    SocTooSmall { block: usize, dim: usize },
    #[error("block {block}: triplet arrays have different lengths")]
    Ragged { block: usize },
    #[error("block {block}: entry ({row}, {col}) outside {dim}x{n}")]
    IndexOutOfRange {
        block: usize,
        row: usize,
        col: usize,
        dim: usize,
        n: usize,
    },
    #[error("block {block}: non-finite coefficient at entry {entry}")]
    NonFiniteMatrix { block: usize, entry: usize },
    #[error("block {block}: non-finite offset at row {row}")]
    NonFiniteOffset { block: usize, row: usize },
}

impl ConicProgram {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            c: vec![0.0; n],
            blocks: Vec::new(),
        }
    }

    pub fn rows(&self) -> usize {
        self.blocks.iter().map(|b| b.dim).sum()
    }

    pub fn nnz(&self) -> usize {
        self.blocks.iter().map(|b| b.a.len()).sum()
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        self.c.iter().zip(x).map(|(c, x)| c * x).sum()
    }

    /// Largest cone-membership violation over all blocks.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        self.blocks
            .iter()
            .map(|b| b.violation(x))
            .fold(0.0, f64::max)
    }

    /// Checks every structural invariant and reports all violations.
    pub fn validate(&self) -> Result<(), Vec<Violation>> {
        let mut out = Vec::new();
        if self.c.len() != self.n {
            out.push(Violation::CostLength {
                n: self.n,
                got: self.c.len(),
            });
        }
        for (i, c) in self.c.iter().enumerate() {
            if !c.is_finite() {
                out.push(Violation::NonFiniteCost(i));
            }
        }
        for (k, blk) in self.blocks.iter().enumerate() {
            if blk.b.len() != blk.dim {
                out.push(Violation::RowMismatch {
                    block: k,
                    rows: blk.b.len(),
                    dim: blk.dim,
                });
            }
            if blk.cone == Cone::Soc && blk.dim < 2 {
                out.push(Violation::SocTooSmall {
                    block: k,
                    dim: blk.dim,
                });
            }
            let a = &blk.a;
            if a.rows.len() != a.vals.len() || a.cols.len() != a.vals.len() {
                out.push(Violation::Ragged { block: k });
                continue;
            }
            for (e, ((&row, &col), v)) in a.rows.iter().zip(&a.cols).zip(&a.vals).enumerate() {
                if row >= blk.dim || col >= self.n {
                    out.push(Violation::IndexOutOfRange {
                        block: k,
                        row,
                        col,
                        dim: blk.dim,
                        n: self.n,
                    });
                }
                if !v.is_finite() {
                    out.push(Violation::NonFiniteMatrix { block: k, entry: e });
                }
            }
            for (row, b) in blk.b.iter().enumerate() {
                if !b.is_finite() {
                    out.push(Violation::NonFiniteOffset { block: k, row });
                }
            }
        }
        if out.is_empty() {
            Ok(())
        } else {
            Err(out)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    NumericalError,
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolveStatus::Optimal => "OPTIMAL",
            SolveStatus::Infeasible => "INFEASIBLE",
            SolveStatus::NumericalError => "NUMERICAL_ERROR",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverResult {
    pub status: SolveStatus,
    pub x: Vec<f64>,
    /// `cᵀx` at the returned point.
    pub objective: f64,
    /// Dual objective reported by the solver.
    pub dual_objective: f64,
    pub solve_time: Duration,
    pub iterations: u32,
    /// Largest cone violation of the returned point.
    pub primal_residual: f64,
}

impl SolverResult {
    /// `|primal − dual| / max(1, |primal|)`.
    pub fn relative_gap(&self) -> f64 {
        (self.objective - self.dual_objective).abs() / self.objective.abs().max(1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConicError {
    #[error("invalid program: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
    #[error("solver setup failed: {0}")]
    Setup(String),
}

/// A bound conic solver.
pub trait ConicSolver {
    fn name(&self) -> &'static str;

    /// Whether independent solves may run concurrently on separate threads.
    fn reentrant(&self) -> bool;

    fn solve(&self, program: &ConicProgram) -> Result<SolverResult, ConicError>;
}
