use nalgebra::DMatrix;
use thiserror::Error;

use crate::dynamics::{
    impulse_jump, linearize_jump, linearize_with, CoastModel, DynamicsError,
    IntegratorOptions, StateMatrix, StateVector,
};
use crate::scenario::ScenarioConfig;
use crate::trajectory::SolutionTrajectory;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("segment {segment}: {source}")]
pub struct DiscretizeError {
    pub segment: usize,
    pub source: DynamicsError,
}

/// Affine model of one jump-then-coast segment about the reference.
#[derive(Debug, Clone)]
pub struct Segment {
    /// Coast state transition matrix.
    pub stm: StateMatrix,
    /// Jump Jacobian with respect to the pre-jump state.
    pub jump_x: StateMatrix,
    /// Jump Jacobian with respect to the pulses (`13 × n_rcs`).
    pub jump_u: DMatrix<f64>,
    /// Coast defect: `end_state = stm·post_jump + defect`.
    pub defect: StateVector,
    /// `∂x_{k+1}/∂t_f`.
    pub sigma: StateVector,
    pub post_jump: StateVector,
    pub end_state: StateVector,
}

impl Segment {
    /// Linear prediction of the next node from deviations of the node state,
    /// pulses and final time.
    pub fn predict(&self, dx: &StateVector, du: &[f64], dt_f: f64) -> StateVector {
        let du = DMatrix::from_column_slice(du.len(), 1, du);
        let jumped = self.jump_x * dx + (&self.jump_u * du).fixed_rows::<13>(0).into_owned();
        self.end_state + self.stm * jumped + self.sigma * dt_f
    }

    /// `stm · jump_x`.
    pub fn state_matrix(&self) -> StateMatrix {
        self.stm * self.jump_x
    }

    /// `stm · jump_u`.
    pub fn input_matrix(&self) -> DMatrix<f64> {
        let stm = DMatrix::from_column_slice(13, 13, self.stm.as_slice());
        stm * &self.jump_u
    }
}

/// Linearizes every segment of the reference. Segments are independent, so
/// this is a pure function of the reference.
pub fn discretize(
    reference: &SolutionTrajectory,
    cfg: &ScenarioConfig,
    opts: &IntegratorOptions,
) -> Result<Vec<Segment>, DiscretizeError> {
    let model = CoastModel::new(&cfg.vehicle, &cfg.orbit);
    let n = reference.nodes();
    let t_c = reference.t_f / n as f64;
    (0..n)
        .map(|k| {
            let wrap = |source| DiscretizeError { segment: k, source };
            let x = &reference.states[k];
            let pulses = reference.schedule.column(k);
            let jumped = impulse_jump(x, &pulses, &cfg.vehicle).map_err(wrap)?;
            let (jump_x, jump_u) = linearize_jump(x, &pulses, &cfg.vehicle).map_err(wrap)?;
            let lin = linearize_with(&model, &jumped.to_vector(), t_c, opts).map_err(wrap)?;
            if !lin.stm.iter().all(|v| v.is_finite()) {
                return Err(wrap(DynamicsError::Divergence { time: t_c }));
            }
            Ok(Segment {
                stm: lin.stm,
                jump_x,
                jump_u,
                defect: lin.defect,
                sigma: lin.duration_sensitivity / n as f64,
                post_jump: jumped.to_vector(),
                end_state: lin.end_state,
            })
        })
        .collect()
}
