use std::time::{Duration, Instant};

use thiserror::Error;

use super::subproblem::CostParts;
use super::{build_subproblem, discretize, ContinuationMode, DiscretizeError, Segment, SubproblemError};
use crate::config::RunConfig;
use crate::conic::{ConicError, ConicSolver, SolveStatus};
use crate::continuation::{update_decision, update_rule, ContinuationError, ContinuationState};
use crate::rendezvous::{initial_guess, LogicGates, ModelError};
use crate::trajectory::{IterationRecord, SolutionTrajectory};

#[derive(Debug, Error)]
pub enum PtrError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("discretization failed: {0}")]
    Discretize(#[from] DiscretizeError),
    #[error(transparent)]
    Subproblem(#[from] SubproblemError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Conic(#[from] ConicError),
    #[error("subproblem solve returned {status} at iteration {iteration}")]
    Solver { status: SolveStatus, iteration: usize },
    #[error(transparent)]
    Continuation(#[from] ContinuationError),
    #[error("no convergence within {} iterations", .0.iterations)]
    NotConverged(Box<SolveReport>),
}

/// Result of one PTR iteration.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub trajectory: SolutionTrajectory,
    /// Subproblem optimal cost J_ℓ.
    pub cost: f64,
    pub parts: CostParts,
    pub deviation: f64,
    pub status: SolveStatus,
    pub solve_time: Duration,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    /// Final iterate; its `iterate_log` holds every iteration.
    pub solution: SolutionTrajectory,
    pub converged: bool,
    pub iterations: usize,
    /// Homotopy updates performed, L.
    pub updates: usize,
}

/// Solves one subproblem about `reference` and maps the optimizer back.
pub fn ptr_step(
    reference: &SolutionTrajectory,
    segments: &[Segment],
    gates: &LogicGates,
    run: &RunConfig,
    w_tr: f64,
    solver: &dyn ConicSolver,
) -> Result<StepOutcome, PtrError> {
    let sub = build_subproblem(reference, segments, gates, &run.scenario, &run.ptr, w_tr)?;
    let res = solver.solve(&sub.program)?;
    let mut trajectory = sub.extract(&res.x);
    trajectory.iterate_log = reference.iterate_log.clone();
    Ok(StepOutcome {
        trajectory,
        cost: res.objective,
        parts: sub.costs(&res.x),
        deviation: sub.deviation(&res.x),
        status: res.status,
        solve_time: res.solve_time,
    })
}

/// Runs the continuation-PTR loop from the straight-line initial guess.
pub fn solve(run: &RunConfig, solver: &dyn ConicSolver) -> Result<SolveReport, PtrError> {
    solve_from(run, initial_guess(&run.scenario), solver)
}

pub fn solve_from(
    run: &RunConfig,
    initial: SolutionTrajectory,
    solver: &dyn ConicSolver,
) -> Result<SolveReport, PtrError> {
    run.validate().map_err(PtrError::Config)?;
    let mut driver = Driver {
        run,
        solver,
        start: Instant::now(),
        state: ContinuationState::new(),
        segments: discretize(&initial, &run.scenario, &run.integrator)?,
        reference: initial,
        gates: None,
    };
    let converged = match run.ptr.mode {
        ContinuationMode::Embedded => driver.embedded()?,
        ContinuationMode::Sequential => driver.sequential()?,
    };
    let report = SolveReport {
        iterations: driver.state.iteration,
        updates: driver.state.updates,
        solution: driver.reference,
        converged,
    };
    if converged {
        Ok(report)
    } else {
        Err(PtrError::NotConverged(Box::new(report)))
    }
}

struct Driver<'a> {
    run: &'a RunConfig,
    solver: &'a dyn ConicSolver,
    start: Instant,
    state: ContinuationState,
    reference: SolutionTrajectory,
    segments: Vec<Segment>,
    gates: Option<LogicGates>,
}

impl Driver<'_> {
    fn advance_homotopy(&mut self) -> Result<(), PtrError> {
        let beta = update_rule(&mut self.state, &self.run.homotopy)?;
        self.gates = Some(LogicGates::new(&self.run.scenario, beta)?);
        Ok(())
    }

    /// Algorithm loop with β updates between single iterations.
    fn embedded(&mut self) -> Result<bool, PtrError> {
        let hp = &self.run.homotopy;
        while self.state.iteration < self.run.ptr.max_iters {
            self.state.iteration += 1;
            if self.state.iteration == 1 || update_decision(&self.state, hp) {
                self.advance_homotopy()?;
            }
            let rec = self.iterate()?;
            if self.state.updates == hp.updates && self.stop_test(&rec) {
                return Ok(true);
            }
        }
        Ok(false)
    }

    /// One full PTR solve per β level.
    fn sequential(&mut self) -> Result<bool, PtrError> {
        for _ in 0..self.run.homotopy.updates {
            self.advance_homotopy()?;
            loop {
                if self.state.iteration >= self.run.ptr.max_iters {
                    return Ok(false);
                }
                self.state.iteration += 1;
                let rec = self.iterate()?;
                if self.stop_test(&rec) {
                    break;
                }
            }
        }
        Ok(true)
    }

    fn stop_test(&self, rec: &IterationRecord) -> bool {
        rec.deviation <= self.run.ptr.eps_stop && rec.vc_norm <= self.run.ptr.vc_tol
    }

    /// One PTR step with candidate rejection; adopts the accepted iterate.
    fn iterate(&mut self) -> Result<IterationRecord, PtrError> {
        let gates = self.gates.as_ref().expect("homotopy initialized");
        let mut w_tr = self.run.ptr.w_tr;
        let mut attempt = 0;
        let (step, segments) = loop {
            let outcome = ptr_step(
                &self.reference,
                &self.segments,
                gates,
                self.run,
                w_tr,
                self.solver,
            );
            let failure = match outcome {
                Ok(step) if step.status == SolveStatus::Optimal => {
                    match discretize(&step.trajectory, &self.run.scenario, &self.run.integrator) {
                        Ok(seg) => break (step, seg),
                        Err(e) => PtrError::Discretize(e),
                    }
                }
                Ok(step) => PtrError::Solver {
                    status: step.status,
                    iteration: self.state.iteration,
                },
                Err(e) => return Err(e),
            };
            attempt += 1;
            if attempt > self.run.ptr.max_rejections {
                return Err(failure);
            }
            log::warn!("iteration {}: {failure}; retrying with w_tr x10", self.state.iteration);
            w_tr *= 10.0;
        };
        let rec = IterationRecord {
            iteration: self.state.iteration,
            updates: self.state.updates,
            beta: gates.beta(),
            cost: step.cost,
            fuel: step.parts.fuel,
            eq_reg: step.parts.eq_reg,
            trust_region: step.parts.trust_region,
            deviation: step.deviation,
            vc_norm: step.parts.vc_norm,
            buffer_norm: step.parts.buffer_norm,
            t_f: step.trajectory.t_f,
            status: step.status.to_string(),
            solve_time: step.solve_time.as_secs_f64(),
            wall_time: self.start.elapsed().as_secs_f64(),
        };
        log::info!(
            "{}",
            serde_json::to_string(&rec).unwrap_or_else(|_| format!("{rec:?}"))
        );
        self.state.cost_history.push(step.cost);
        self.reference = step.trajectory;
        self.reference.iterate_log.push(rec.clone());
        self.segments = segments;
        Ok(rec)
    }
}
