//! 6-DOF chaser dynamics in the LVLH frame: Clohessy-Wiltshire-Hill
//! translation, rigid-body attitude, impulsive RCS firings, and the
//! linearizations used by the convex subproblems.
//!
//! Vectorized states always use the order `[p; v; q; ω]` (13 elements) with
//! the quaternion stored scalar-last.

use nalgebra::{DMatrix, Matrix3, SMatrix, SVector, Vector3, Vector4};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quaternion::{skew, Quaternion};

pub const STATE_DIM: usize = 13;

pub type StateVector = SVector<f64, STATE_DIM>;
pub type StateMatrix = SMatrix<f64, STATE_DIM, STATE_DIM>;

/// Standard gravitational parameter of the Earth, m³/s².
pub const MU_EARTH: f64 = 3.986004418e14;
/// Equatorial radius of the Earth, m.
pub const EARTH_RADIUS: f64 = 6.378137e6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("propagation diverged (non-finite state) after {time:.3} s")]
    Divergence { time: f64 },
    #[error("negative propagation interval {0} s")]
    NegativeInterval(f64),
    #[error("invalid vehicle model: {0}")]
    InvalidVehicle(String),
    #[error("expected {expected} pulses, got {got}")]
    PulseCount { expected: usize, got: usize },
}

/// Chaser state: LVLH position and velocity, body-to-LVLH attitude, body rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChaserState {
    pub p: Vector3<f64>,
    pub v: Vector3<f64>,
    pub q: Quaternion,
    pub w: Vector3<f64>,
}

impl ChaserState {
    pub fn new(p: Vector3<f64>, v: Vector3<f64>, q: Quaternion, w: Vector3<f64>) -> Self {
        Self { p, v, q, w }
    }

    pub fn to_vector(&self) -> StateVector {
        let mut x = StateVector::zeros();
        x.fixed_rows_mut::<3>(0).copy_from(&self.p);
        x.fixed_rows_mut::<3>(3).copy_from(&self.v);
        x.fixed_rows_mut::<4>(6).copy_from(&self.q.to_vector());
        x.fixed_rows_mut::<3>(10).copy_from(&self.w);
        x
    }

    pub fn from_vector(x: &StateVector) -> Self {
        Self {
            p: x.fixed_rows::<3>(0).into_owned(),
            v: x.fixed_rows::<3>(3).into_owned(),
            q: Quaternion::from_vector(&x.fixed_rows::<4>(6).into_owned()),
            w: x.fixed_rows::<3>(10).into_owned(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_vector().iter().all(|v| v.is_finite())
    }
}

/// One RCS thruster: application point and unit thrust direction in the
/// body frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thruster {
    pub position: Vector3<f64>,
    pub direction: Vector3<f64>,
    /// Nozzle points along `+x_B` (its thrust force is along `-x_B`), so its
    /// plume can reach a target ahead of the chaser.
    pub forward_facing: bool,
}

impl Thruster {
    /// Normalizes `direction` so that the unit-norm invariant holds.
    pub fn new(position: Vector3<f64>, direction: Vector3<f64>, forward_facing: bool) -> Self {
        Self {
            position,
            direction: direction.normalize(),
            forward_facing,
        }
    }

    pub fn torque_arm(&self) -> Vector3<f64> {
        self.position.cross(&self.direction)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VehicleModel {
    pub mass: f64,
    pub inertia: Matrix3<f64>,
    pub thrusters: Vec<Thruster>,
    /// Thrust level of a firing thruster, N.
    pub thrust: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    /// Wall-avoidance buffer above `dt_min`, s.
    pub dt_db: f64,
}

impl VehicleModel {
    pub fn validate(&self) -> Result<(), DynamicsError> {
        let bad = |m: String| Err(DynamicsError::InvalidVehicle(m));
        if !(self.mass > 0.0) {
            return bad(format!("mass must be positive, got {}", self.mass));
        }
        if (self.inertia - self.inertia.transpose()).abs().max() > 1e-9 {
            return bad("inertia must be symmetric".into());
        }
        if self.inertia.symmetric_eigenvalues().iter().any(|&e| !(e > 0.0)) {
            return bad("inertia must be positive definite".into());
        }
        if !(self.thrust > 0.0) {
            return bad("thrust must be positive".into());
        }
        if !(0.0 < self.dt_min && self.dt_min < self.dt_max) {
            return bad("pulse bounds must satisfy 0 < dt_min < dt_max".into());
        }
        if !(0.0 < self.dt_db && self.dt_db < self.dt_max - self.dt_min) {
            return bad("dt_db must lie in (0, dt_max - dt_min)".into());
        }
        for (i, t) in self.thrusters.iter().enumerate() {
            if (t.direction.norm() - 1.0).abs() > 1e-12 {
                return bad(format!("thruster {i} direction is not unit length"));
            }
        }
        Ok(())
    }

    pub fn n_thrusters(&self) -> usize {
        self.thrusters.len()
    }

    pub fn inertia_inv(&self) -> Matrix3<f64> {
        self.inertia
            .try_inverse()
            .expect("validated inertia is invertible")
    }

    pub fn forward_facing(&self) -> impl Iterator<Item = usize> + '_ {
        self.thrusters
            .iter()
            .enumerate()
            .filter(|(_, t)| t.forward_facing)
            .map(|(i, _)| i)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrbitModel {
    /// Mean motion of the circular target orbit, rad/s.
    pub mean_motion: f64,
}

impl OrbitModel {
    /// Circular Earth orbit at the given altitude above the equatorial radius.
    pub fn circular_earth(altitude: f64) -> Self {
        let a = EARTH_RADIUS + altitude;
        Self {
            mean_motion: (MU_EARTH / (a * a * a)).sqrt(),
        }
    }
}

/// Clohessy-Wiltshire-Hill relative acceleration.
pub fn lvlh_accel(p: &Vector3<f64>, v: &Vector3<f64>, orbit: &OrbitModel) -> Vector3<f64> {
    let n = orbit.mean_motion;
    Vector3::new(
        -2.0 * n * v.z,
        -n * n * p.y,
        3.0 * n * n * p.z + 2.0 * n * v.x,
    )
}

/// RK4 step control. The step is `dt / substeps`, further refined so that it
/// never exceeds `max_step` when one is given.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorOptions {
    pub substeps: usize,
    pub max_step: Option<f64>,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self {
            substeps: 20,
            max_step: None,
        }
    }
}

impl IntegratorOptions {
    fn steps_for(&self, dt: f64) -> usize {
        let base = self.substeps.max(1);
        match self.max_step {
            Some(h) if h > 0.0 => base.max((dt / h).ceil() as usize),
            _ => base,
        }
    }
}

/// Pre-factored coast dynamics, so the inertia inverse is computed once.
#[derive(Debug, Clone)]
pub struct CoastModel {
    inertia: Matrix3<f64>,
    inertia_inv: Matrix3<f64>,
    orbit: OrbitModel,
}

impl CoastModel {
    pub fn new(vehicle: &VehicleModel, orbit: &OrbitModel) -> Self {
        Self {
            inertia: vehicle.inertia,
            inertia_inv: vehicle.inertia_inv(),
            orbit: *orbit,
        }
    }

    pub fn derivative(&self, x: &StateVector) -> StateVector {
        let p = x.fixed_rows::<3>(0).into_owned();
        let v = x.fixed_rows::<3>(3).into_owned();
        let q = Quaternion::from_vector(&x.fixed_rows::<4>(6).into_owned());
        let w = x.fixed_rows::<3>(10).into_owned();
        let mut dx = StateVector::zeros();
        dx.fixed_rows_mut::<3>(0).copy_from(&v);
        dx.fixed_rows_mut::<3>(3)
            .copy_from(&lvlh_accel(&p, &v, &self.orbit));
        let qdot = (q * Quaternion::pure(&w)).scale(0.5);
        dx.fixed_rows_mut::<4>(6).copy_from(&qdot.to_vector());
        let wdot = -self.inertia_inv * w.cross(&(self.inertia * w));
        dx.fixed_rows_mut::<3>(10).copy_from(&wdot);
        dx
    }

    /// Analytic Jacobian `∂f/∂x` of [`CoastModel::derivative`].
    pub fn jacobian(&self, x: &StateVector) -> StateMatrix {
        let n = self.orbit.mean_motion;
        let q = Quaternion::from_vector(&x.fixed_rows::<4>(6).into_owned());
        let w = x.fixed_rows::<3>(10).into_owned();
        let mut a = StateMatrix::zeros();
        for i in 0..3 {
            a[(i, 3 + i)] = 1.0;
        }
        a[(3, 5)] = -2.0 * n;
        a[(4, 1)] = -n * n;
        a[(5, 2)] = 3.0 * n * n;
        a[(5, 3)] = 2.0 * n;
        // q̇ = ½ q ⊗ ω̄ is bilinear in (q, ω).
        let dq_dq = Quaternion::pure(&w).right_matrix() * 0.5;
        a.fixed_view_mut::<4, 4>(6, 6).copy_from(&dq_dq);
        let dq_dw = q.left_matrix().fixed_columns::<3>(0) * 0.5;
        a.fixed_view_mut::<4, 3>(6, 10).copy_from(&dq_dw);
        let jw = self.inertia * w;
        let dw_dw = -self.inertia_inv * (skew(&w) * self.inertia - skew(&jw));
        a.fixed_view_mut::<3, 3>(10, 10).copy_from(&dw_dw);
        a
    }
}

pub fn coast_derivative(x: &ChaserState, vehicle: &VehicleModel, orbit: &OrbitModel) -> StateVector {
    CoastModel::new(vehicle, orbit).derivative(&x.to_vector())
}

fn normalize_quat_block(x: &mut StateVector) -> (f64, Vector4<f64>) {
    let q = x.fixed_rows::<4>(6).into_owned();
    let n = q.norm();
    let qhat = q / n;
    x.fixed_rows_mut::<4>(6).copy_from(&qhat);
    (n, qhat)
}

fn rk4_step(model: &CoastModel, x: &StateVector, h: f64) -> StateVector {
    let k1 = model.derivative(x);
    let k2 = model.derivative(&(x + k1 * (0.5 * h)));
    let k3 = model.derivative(&(x + k2 * (0.5 * h)));
    let k4 = model.derivative(&(x + k3 * h));
    x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
}

/// Propagates the zero-thrust dynamics over `dt` seconds with fixed-step RK4,
/// renormalizing the quaternion after each step.
pub fn propagate_coast(
    x: &ChaserState,
    dt: f64,
    vehicle: &VehicleModel,
    orbit: &OrbitModel,
    opts: &IntegratorOptions,
) -> Result<ChaserState, DynamicsError> {
    let model = CoastModel::new(vehicle, orbit);
    propagate_with(&model, &x.to_vector(), dt, opts).map(|x| ChaserState::from_vector(&x))
}

pub(crate) fn propagate_with(
    model: &CoastModel,
    x0: &StateVector,
    dt: f64,
    opts: &IntegratorOptions,
) -> Result<StateVector, DynamicsError> {
    if dt < 0.0 {
        return Err(DynamicsError::NegativeInterval(dt));
    }
    if dt == 0.0 {
        return Ok(*x0);
    }
    let steps = opts.steps_for(dt);
    let h = dt / steps as f64;
    let mut x = *x0;
    for k in 0..steps {
        x = rk4_step(model, &x, h);
        normalize_quat_block(&mut x);
        if !x.iter().all(|v| v.is_finite()) {
            return Err(DynamicsError::Divergence {
                time: (k + 1) as f64 * h,
            });
        }
    }
    Ok(x)
}

/// Propagates and returns `samples + 1` equally spaced states over `[0, dt]`
/// (both ends included). Each sub-interval uses the full step control.
pub fn propagate_coast_dense(
    x: &ChaserState,
    dt: f64,
    samples: usize,
    vehicle: &VehicleModel,
    orbit: &OrbitModel,
    opts: &IntegratorOptions,
) -> Result<Vec<ChaserState>, DynamicsError> {
    let model = CoastModel::new(vehicle, orbit);
    let samples = samples.max(1);
    let h = dt / samples as f64;
    let mut out = Vec::with_capacity(samples + 1);
    let mut cur = x.to_vector();
    out.push(*x);
    for _ in 0..samples {
        cur = propagate_with(&model, &cur, h, opts)?;
        out.push(ChaserState::from_vector(&cur));
    }
    Ok(out)
}

/// Applies an impulsive firing: `pulses[i]` seconds of thruster `i` at
/// constant thrust, with position and attitude held fixed.
pub fn impulse_jump(
    x: &ChaserState,
    pulses: &[f64],
    vehicle: &VehicleModel,
) -> Result<ChaserState, DynamicsError> {
    check_pulses(pulses, vehicle)?;
    let (force, torque) = net_body_impulse(pulses, vehicle);
    let mut out = *x;
    out.v += x.q.rotate(&force) / vehicle.mass;
    out.w += vehicle.inertia_inv() * torque;
    Ok(out)
}

fn check_pulses(pulses: &[f64], vehicle: &VehicleModel) -> Result<(), DynamicsError> {
    if pulses.len() != vehicle.n_thrusters() {
        return Err(DynamicsError::PulseCount {
            expected: vehicle.n_thrusters(),
            got: pulses.len(),
        });
    }
    Ok(())
}

/// Body-frame impulse (N·s) and angular impulse (N·m·s) of a pulse set.
pub fn net_body_impulse(pulses: &[f64], vehicle: &VehicleModel) -> (Vector3<f64>, Vector3<f64>) {
    let mut force = Vector3::zeros();
    let mut torque = Vector3::zeros();
    for (t, &dt) in vehicle.thrusters.iter().zip(pulses) {
        force += t.direction * (dt * vehicle.thrust);
        torque += t.torque_arm() * (dt * vehicle.thrust);
    }
    (force, torque)
}

/// Jacobians of [`impulse_jump`] with respect to the pre-jump state and the
/// pulse vector.
pub fn linearize_jump(
    x: &ChaserState,
    pulses: &[f64],
    vehicle: &VehicleModel,
) -> Result<(StateMatrix, DMatrix<f64>), DynamicsError> {
    check_pulses(pulses, vehicle)?;
    let (force, _) = net_body_impulse(pulses, vehicle);
    let mut dx = StateMatrix::identity();
    let dv_dq = x.q.rotate_jacobian(&force) / vehicle.mass;
    dx.fixed_view_mut::<3, 4>(3, 6).copy_from(&dv_dq);

    let jinv = vehicle.inertia_inv();
    let n = vehicle.n_thrusters();
    let mut du = DMatrix::zeros(STATE_DIM, n);
    for (i, t) in vehicle.thrusters.iter().enumerate() {
        let dv = x.q.rotate(&t.direction) * (vehicle.thrust / vehicle.mass);
        let dw = jinv * t.torque_arm() * vehicle.thrust;
        du.fixed_view_mut::<3, 1>(3, i).copy_from(&dv);
        du.fixed_view_mut::<3, 1>(10, i).copy_from(&dw);
    }
    Ok((dx, du))
}

/// Affine model of one coast arc around the reference started at `x0`.
#[derive(Debug, Clone)]
pub struct CoastLinearization {
    /// State transition matrix `∂x(dt)/∂x(0)`.
    pub stm: StateMatrix,
    /// Defect making `stm·x0 + defect` reproduce the reference end state.
    pub defect: StateVector,
    /// Sensitivity of the end state to the arc duration, `∂x(dt)/∂dt`.
    pub duration_sensitivity: StateVector,
    pub end_state: StateVector,
}

/// Integrates the variational equations alongside the reference with the
/// same RK4 steps and quaternion renormalization as [`propagate_coast`], so
/// the returned STM is the exact derivative of the discrete propagation map.
/// The duration sensitivity is integrated in dilated time (`ψ̇ = Aψ + f/dt`).
pub fn linearize_coast_segment(
    x0: &ChaserState,
    dt: f64,
    vehicle: &VehicleModel,
    orbit: &OrbitModel,
    opts: &IntegratorOptions,
) -> Result<CoastLinearization, DynamicsError> {
    let model = CoastModel::new(vehicle, orbit);
    linearize_with(&model, &x0.to_vector(), dt, opts)
}

type Tangent = SMatrix<f64, STATE_DIM, 14>;

pub(crate) fn linearize_with(
    model: &CoastModel,
    x0: &StateVector,
    dt: f64,
    opts: &IntegratorOptions,
) -> Result<CoastLinearization, DynamicsError> {
    if dt < 0.0 {
        return Err(DynamicsError::NegativeInterval(dt));
    }
    if dt == 0.0 {
        return Ok(CoastLinearization {
            stm: StateMatrix::identity(),
            defect: StateVector::zeros(),
            duration_sensitivity: model.derivative(x0),
            end_state: *x0,
        });
    }
    let steps = opts.steps_for(dt);
    let h = dt / steps as f64;
    let mut x = *x0;
    let mut t = Tangent::zeros();
    t.fixed_view_mut::<13, 13>(0, 0)
        .copy_from(&StateMatrix::identity());

    let tangent_rate = |x: &StateVector, t: &Tangent| -> (StateVector, Tangent) {
        let f = model.derivative(x);
        let a = model.jacobian(x);
        let mut dt_rate = a * t;
        let mut col = dt_rate.column_mut(13);
        col += f / dt;
        (f, dt_rate)
    };

    for k in 0..steps {
        let (k1, m1) = tangent_rate(&x, &t);
        let (k2, m2) = tangent_rate(&(x + k1 * (0.5 * h)), &(t + m1 * (0.5 * h)));
        let (k3, m3) = tangent_rate(&(x + k2 * (0.5 * h)), &(t + m2 * (0.5 * h)));
        let (k4, m4) = tangent_rate(&(x + k3 * h), &(t + m3 * h));
        x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        t += (m1 + m2 * 2.0 + m3 * 2.0 + m4) * (h / 6.0);
        let (n, qhat) = normalize_quat_block(&mut x);
        // d(q/‖q‖) = (I − q̂q̂ᵀ)/‖q‖ dq
        let proj = (nalgebra::Matrix4::identity() - qhat * qhat.transpose()) / n;
        let rows = proj * t.fixed_rows::<4>(6);
        t.fixed_rows_mut::<4>(6).copy_from(&rows);
        if !x.iter().all(|v| v.is_finite()) || !t.iter().all(|v| v.is_finite()) {
            return Err(DynamicsError::Divergence {
                time: (k + 1) as f64 * h,
            });
        }
    }
    let stm: StateMatrix = t.fixed_view::<13, 13>(0, 0).into_owned();
    let defect = x - stm * x0;
    Ok(CoastLinearization {
        stm,
        defect,
        duration_sensitivity: t.column(13).into_owned(),
        end_state: x,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn orbit() -> OrbitModel {
        OrbitModel {
            mean_motion: 1.13137e-3,
        }
    }

    fn vehicle() -> VehicleModel {
        VehicleModel {
            mass: 30323.0,
            inertia: Matrix3::new(49249.0, 2862.0, -370.0, 2862.0, 108514.0, -3075.0, -370.0, -3075.0, 110772.0),
            thrusters: vec![
                Thruster::new(Vector3::zeros(), Vector3::x(), false),
                Thruster::new(Vector3::new(0.0, 2.0, 0.0), Vector3::z(), false),
                Thruster::new(Vector3::new(0.0, -2.0, 0.0), Vector3::z(), false),
                Thruster::new(Vector3::new(0.3, 2.1, 0.0), -Vector3::x(), true),
            ],
            thrust: 445.0,
            dt_min: 0.112,
            dt_max: 1.0,
            dt_db: 0.0112,
        }
    }

    #[test]
    fn lvlh_accel_examples() {
        assert_eq!(lvlh_accel(&Vector3::zeros(), &Vector3::zeros(), &orbit()), Vector3::zeros());
        let a = lvlh_accel(&Vector3::z(), &Vector3::zeros(), &orbit());
        assert_relative_eq!(a, Vector3::new(0.0, 0.0, 3.840e-6), epsilon = 1e-9);
        let a = lvlh_accel(&Vector3::zeros(), &Vector3::x(), &orbit());
        assert_relative_eq!(a, Vector3::new(0.0, 0.0, 2.26274e-3), epsilon = 1e-8);
    }

    #[test]
    fn coast_derivative_at_rest_is_zero() {
        let x = ChaserState::new(Vector3::zeros(), Vector3::zeros(), Quaternion::identity(), Vector3::zeros());
        assert_eq!(coast_derivative(&x, &vehicle(), &orbit()), StateVector::zeros());
    }

    #[test]
    fn principal_spin_is_torque_free() {
        let mut v = vehicle();
        v.inertia = Matrix3::from_diagonal(&Vector3::new(1.0, 2.0, 3.0));
        let x = ChaserState::new(Vector3::zeros(), Vector3::zeros(), Quaternion::identity(), Vector3::new(0.1, 0.0, 0.0));
        let dx = coast_derivative(&x, &v, &orbit());
        assert_eq!(dx.fixed_rows::<3>(10).into_owned(), Vector3::zeros());
    }

    #[test]
    fn jump_examples() {
        let v = VehicleModel {
            thrusters: vec![Thruster::new(Vector3::zeros(), Vector3::x(), false)],
            ..vehicle()
        };
        let x = ChaserState::new(Vector3::zeros(), Vector3::zeros(), Quaternion::identity(), Vector3::zeros());
        let y = impulse_jump(&x, &[1.0], &v).unwrap();
        assert_relative_eq!(y.v, Vector3::new(445.0 / 30323.0, 0.0, 0.0), epsilon = 1e-15);
        assert_relative_eq!(y.v.x, 0.014676, epsilon = 1e-6);
        assert_eq!(y.w, Vector3::zeros());
        assert_eq!(impulse_jump(&x, &[0.0], &v).unwrap(), x);
        assert!(impulse_jump(&x, &[0.0, 1.0], &v).is_err());
    }

    #[test]
    fn opposed_offsets_cancel_torque() {
        let v = vehicle();
        let x = ChaserState::new(Vector3::zeros(), Vector3::zeros(), Quaternion::identity(), Vector3::zeros());
        let y = impulse_jump(&x, &[0.0, 0.5, 0.5, 0.0], &v).unwrap();
        assert_relative_eq!(y.w, Vector3::zeros(), epsilon = 1e-18);
        let single = impulse_jump(&x, &[0.0, 0.5, 0.0, 0.0], &v).unwrap();
        assert_relative_eq!(y.v, single.v * 2.0, epsilon = 1e-15);
    }

    #[test]
    fn zero_interval_and_equilibrium() {
        let x = ChaserState::new(Vector3::new(1.0, 2.0, 3.0), Vector3::new(0.1, 0.0, 0.0), Quaternion::identity(), Vector3::new(0.01, 0.0, 0.0));
        let opts = IntegratorOptions::default();
        assert_eq!(propagate_coast(&x, 0.0, &vehicle(), &orbit(), &opts).unwrap(), x);
        let rest = ChaserState::new(Vector3::zeros(), Vector3::zeros(), Quaternion::identity(), Vector3::zeros());
        let y = propagate_coast(&rest, 1000.0, &vehicle(), &orbit(), &opts).unwrap();
        assert!(y.p.norm() <= 1e-9 && y.v.norm() <= 1e-9);
        assert!(propagate_coast(&x, -1.0, &vehicle(), &orbit(), &opts).is_err());
    }

    #[test]
    fn linearization_at_zero_interval() {
        let x = ChaserState::new(Vector3::new(1.0, 2.0, 3.0), Vector3::zeros(), Quaternion::identity(), Vector3::zeros());
        let lin = linearize_coast_segment(&x, 0.0, &vehicle(), &orbit(), &IntegratorOptions::default()).unwrap();
        assert_eq!(lin.stm, StateMatrix::identity());
        assert_eq!(lin.defect, StateVector::zeros());
    }

    #[test]
    fn divergence_is_reported() {
        let x = ChaserState::new(Vector3::new(f64::NAN, 0.0, 0.0), Vector3::zeros(), Quaternion::identity(), Vector3::zeros());
        let err = propagate_coast(&x, 1.0, &vehicle(), &orbit(), &IntegratorOptions::default()).unwrap_err();
        assert!(matches!(err, DynamicsError::Divergence { .. }));
    }

    #[test]
    fn validate_rejects_bad_models() {
        assert!(vehicle().validate().is_ok());
        let mut v = vehicle();
        v.inertia[(0, 1)] += 1.0;
        assert!(v.validate().is_err());
        let mut v = vehicle();
        v.dt_db = 0.95;
        assert!(v.validate().is_err());
        let mut v = vehicle();
        v.thrusters[0].direction *= 2.0;
        assert!(v.validate().is_err());
    }

    #[test]
    fn circular_orbit_mean_motion() {
        // sqrt(μ/a³) with a = 6 778 137 m
        let n = OrbitModel::circular_earth(400e3).mean_motion;
        assert_relative_eq!(n, 1.1313e-3, epsilon = 1e-7);
    }
}
