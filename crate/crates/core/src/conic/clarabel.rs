//! Adapter to the Clarabel interior-point solver.
//!
//! Clarabel uses `A x + s = b, s ∈ K`; a block `A x + b ∈ K` is passed as
//! `(-A, b)`. The solver holds no global state, so separate solves may run
//! on separate threads.

use std::time::{Duration, Instant};

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettings, DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};

use super::{Cone, ConicError, ConicProgram, ConicSolver, SolveStatus, SolverResult};

/// Largest cone violation accepted for an optimal status, relative to
/// `max(1, ‖b‖∞)`.
pub const PRIMAL_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct ClarabelSolver {
    pub max_iter: u32,
    pub tol: f64,
    pub verbose: bool,
}

impl Default for ClarabelSolver {
    fn default() -> Self {
        Self {
            max_iter: 200,
            tol: 1e-9,
            verbose: false,
        }
    }
}

impl ClarabelSolver {
    fn settings(&self) -> Result<DefaultSettings<f64>, ConicError> {
        DefaultSettingsBuilder::default()
            .verbose(self.verbose)
            .max_iter(self.max_iter)
            .tol_gap_abs(self.tol)
            .tol_gap_rel(self.tol)
            .tol_feas(self.tol)
            .presolve_enable(false)
            .build()
            .map_err(|e| ConicError::Setup(e.to_string()))
    }
}

impl ConicSolver for ClarabelSolver {
    fn name(&self) -> &'static str {
        "clarabel"
    }

    fn reentrant(&self) -> bool {
        true
    }

    fn solve(&self, p: &ConicProgram) -> Result<SolverResult, ConicError> {
        p.validate().map_err(ConicError::Invalid)?;
        let start = Instant::now();
        let m = p.rows();
        let (mut ri, mut ci, mut vi) = (Vec::new(), Vec::new(), Vec::new());
        let mut b = Vec::with_capacity(m);
        let mut cones = Vec::with_capacity(p.blocks.len());
        let mut offset = 0;
        for blk in &p.blocks {
            for ((&r, &c), &v) in blk.a.rows.iter().zip(&blk.a.cols).zip(&blk.a.vals) {
                ri.push(offset + r);
                ci.push(c);
                vi.push(-v);
            }
            b.extend_from_slice(&blk.b);
            cones.push(match blk.cone {
                Cone::Zero => SupportedConeT::ZeroConeT(blk.dim),
                Cone::Nonneg => SupportedConeT::NonnegativeConeT(blk.dim),
                Cone::Soc => SupportedConeT::SecondOrderConeT(blk.dim),
            });
            offset += blk.dim;
        }
        if p.n == 0 {
            let violation = p.max_violation(&[]);
            let status = if violation <= PRIMAL_TOL * scale(&b) {
                SolveStatus::Optimal
            } else {
                SolveStatus::Infeasible
            };
            return Ok(SolverResult {
                status,
                x: Vec::new(),
                objective: 0.0,
                dual_objective: 0.0,
                solve_time: start.elapsed(),
                iterations: 0,
                primal_residual: violation,
            });
        }
        let a = CscMatrix::new_from_triplets(m, p.n, ri, ci, vi);
        let q_mat = CscMatrix::zeros((p.n, p.n));
        let mut solver = DefaultSolver::new(&q_mat, &p.c, &a, &b, &cones, self.settings()?)
            .map_err(|e| ConicError::Setup(e.to_string()))?;
        solver.solve();
        let sol = &solver.solution;
        let x = sol.x.clone();
        let residual = if x.iter().all(|v| v.is_finite()) {
            p.max_violation(&x)
        } else {
            f64::INFINITY
        };
        let accurate = residual <= PRIMAL_TOL * scale(&b);
        if sol.status != SolverStatus::Solved {
            log::debug!("clarabel: {:?}, residual {residual:.3e}", sol.status);
        }
        let status = match sol.status {
            SolverStatus::Solved | SolverStatus::AlmostSolved if accurate => SolveStatus::Optimal,
            SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => {
                SolveStatus::Infeasible
            }
            _ => SolveStatus::NumericalError,
        };
        Ok(SolverResult {
            status,
            objective: p.objective(&x),
            dual_objective: sol.obj_val_dual,
            x,
            solve_time: Duration::from_secs_f64(sol.solve_time.max(0.0)),
            iterations: sol.iterations,
            primal_residual: residual,
        })
    }
}

fn scale(b: &[f64]) -> f64 {
    b.iter().fold(1.0, |m, v| m.max(v.abs()))
}
