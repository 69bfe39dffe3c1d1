//! Scenario configuration and the Apollo CSM transposition-and-docking
//! defaults.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{ChaserState, DynamicsError, OrbitModel, Thruster, VehicleModel};
use crate::quaternion::Quaternion;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error(transparent)]
    Vehicle(#[from] DynamicsError),
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

/// Normalization `g_max` and anchor `g_c` of the three logic gates, in the
/// raw predicate units (m² for the spheres, s for the pulse gate).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateNormalization {
    pub approach_g_max: f64,
    pub approach_anchor: f64,
    pub plume_g_max: f64,
    pub plume_anchor: f64,
    pub mib_g_max: f64,
    pub mib_anchor: f64,
}

impl GateNormalization {
    /// Scales each predicate by its magnitude at the "if" extreme (the sphere
    /// centre, a zero pulse) so the if-region maps onto `ĝ ∈ [-1, 0]`; the
    /// anchor sits at the outer envelope (`envelope` m, `dt_max`).
    pub fn if_side(r_appch: f64, r_plume: f64, envelope: f64, dt_min: f64, dt_max: f64) -> Self {
        let e2 = envelope * envelope;
        Self {
            approach_g_max: r_appch * r_appch,
            approach_anchor: e2 - r_appch * r_appch,
            plume_g_max: r_plume * r_plume,
            plume_anchor: e2 - r_plume * r_plume,
            mib_g_max: dt_min,
            mib_anchor: dt_max - dt_min,
        }
    }

    fn validate(&self) -> Result<(), ScenarioError> {
        let all = [
            self.approach_g_max,
            self.approach_anchor,
            self.plume_g_max,
            self.plume_anchor,
            self.mib_g_max,
            self.mib_anchor,
        ];
        if all.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(ScenarioError::Invalid(
                "gate normalizations and anchors must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TerminalTolerances {
    /// Position box, m.
    pub position: f64,
    /// Velocity box, m/s.
    pub velocity: f64,
    /// Attitude error angle, rad.
    pub attitude: f64,
    /// Rate box, rad/s.
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub vehicle: VehicleModel,
    pub orbit: OrbitModel,
    pub r_plume: f64,
    pub r_appch: f64,
    pub theta_appch: f64,
    pub x0: ChaserState,
    pub xf: ChaserState,
    pub tol: TerminalTolerances,
    pub t_f_bounds: [f64; 2],
    pub nodes: usize,
    pub w_eq: f64,
    pub gates: GateNormalization,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let bad = |m: &str| Err(ScenarioError::Invalid(m.to_string()));
        self.vehicle.validate()?;
        if !(self.orbit.mean_motion > 0.0) {
            return bad("orbit mean motion must be positive");
        }
        if !(0.0 < self.r_plume && self.r_plume < self.r_appch) {
            return bad("radii must satisfy 0 < r_plume < r_appch");
        }
        if !(0.0 < self.theta_appch && self.theta_appch < 0.5 * PI) {
            return bad("approach cone half-angle must lie in (0, pi/2)");
        }
        let [lo, hi] = self.t_f_bounds;
        if !(lo > 0.0 && lo <= hi) {
            return bad("final time bounds must satisfy 0 < lo <= hi");
        }
        if self.nodes < 2 {
            return bad("at least two nodes are required");
        }
        let t = &self.tol;
        if [t.position, t.velocity, t.attitude, t.rate]
            .iter()
            .any(|v| !(*v > 0.0))
        {
            return bad("all terminal tolerances must be positive");
        }
        if !(self.w_eq >= 0.0) {
            return bad("w_eq must be nonnegative");
        }
        if !self.x0.is_finite() || !self.xf.is_finite() {
            return bad("boundary states must be finite");
        }
        if (self.x0.q.norm() - 1.0).abs() > 1e-9 || (self.xf.q.norm() - 1.0).abs() > 1e-9 {
            return bad("boundary attitudes must be unit quaternions");
        }
        self.gates.validate()
    }

    pub fn n_thrusters(&self) -> usize {
        self.vehicle.n_thrusters()
    }

    /// Node spacing for a given final time.
    pub fn coast_time(&self, t_f: f64) -> f64 {
        t_f / self.nodes as f64
    }
}

/// Docked relative attitude between the chaser and target ports: yaw 180°.
pub const DOCKED_PORT_ATTITUDE: Quaternion = Quaternion::new(0.0, 0.0, 1.0, 0.0);

/// Chaser docking port orientation in the body frame, a −30° roll. Together
/// with [`DOCKED_PORT_ATTITUDE`] it produces the terminal attitude
/// `[0, sin 15°, cos 15°, 0]`.
pub fn apollo_port_attitude() -> Quaternion {
    Quaternion::from_axis_angle(&Vector3::x(), -30f64.to_radians())
}

/// Chaser docking port location in the body frame, m. Rounded output of
/// [`calibrate_port_position`] for the Apollo terminal position.
pub const APOLLO_PORT_POSITION: [f64; 3] = [4.48, -0.1283, -0.1222];

/// Nominal terminal position the port location is calibrated against, m.
pub const APOLLO_TERMINAL_POSITION: [f64; 3] = [4.48, -0.05, 0.17];

/// Inverts `p_f = −rotate(q_f, p_dp)` for the port position.
pub fn calibrate_port_position(q_f: &Quaternion, p_f: &Vector3<f64>) -> Vector3<f64> {
    -q_f.conj().rotate(p_f)
}

/// Four quads on a ring in the body `y-z` plane. Each quad carries a pair
/// of axial thrusters (aft-firing and forward-facing) and a pair of
/// tangential roll/translation thrusters.
pub fn apollo_thrusters() -> Vec<Thruster> {
    const RING_RADIUS: f64 = 2.1;
    const AXIAL_OFFSET: f64 = 0.3;
    let mut out = Vec::with_capacity(16);
    for k in 0..4 {
        let phi = k as f64 * 0.5 * PI;
        let (s, c) = phi.sin_cos();
        let station = Vector3::new(0.0, RING_RADIUS * c, RING_RADIUS * s);
        let tangent = Vector3::new(0.0, -s, c);
        let axial = Vector3::new(AXIAL_OFFSET, 0.0, 0.0);
        out.push(Thruster::new(station - axial, Vector3::x(), false));
        out.push(Thruster::new(station + axial, -Vector3::x(), true));
        out.push(Thruster::new(station, tangent, false));
        out.push(Thruster::new(station, -tangent, false));
    }
    out
}

pub fn apollo_vehicle() -> VehicleModel {
    VehicleModel {
        mass: 30323.0,
        inertia: Matrix3::new(
            49249.0, 2862.0, -370.0, //
            2862.0, 108514.0, -3075.0, //
            -370.0, -3075.0, 110772.0,
        ),
        thrusters: apollo_thrusters(),
        thrust: 445.0,
        dt_min: 0.112,
        dt_max: 1.0,
        dt_db: 0.0112,
    }
}

/// Target orbit altitude, m.
pub const APOLLO_ALTITUDE: f64 = 400e3;

/// Scale of the gate anchor envelope relative to the initial range.
pub const ENVELOPE_FACTOR: f64 = 10.0;

pub fn default_apollo_scenario() -> ScenarioConfig {
    let vehicle = apollo_vehicle();
    let (q_f, p_f) = crate::rendezvous::terminal_pose(
        &DOCKED_PORT_ATTITUDE,
        &apollo_port_attitude(),
        &Vector3::from(APOLLO_PORT_POSITION),
    );
    let p0 = Vector3::new(100.0, 20.0, -20.0);
    let (r_plume, r_appch) = (20.0, 30.0);
    let gates = GateNormalization::if_side(
        r_appch,
        r_plume,
        ENVELOPE_FACTOR * p0.norm(),
        vehicle.dt_min,
        vehicle.dt_max,
    );
    ScenarioConfig {
        orbit: OrbitModel::circular_earth(APOLLO_ALTITUDE),
        r_plume,
        r_appch,
        theta_appch: 10f64.to_radians(),
        x0: ChaserState::new(p0, Vector3::zeros(), Quaternion::identity(), Vector3::zeros()),
        xf: ChaserState::new(p_f, Vector3::new(-0.1, 0.0, 0.0), q_f, Vector3::zeros()),
        tol: TerminalTolerances {
            position: 0.1,
            velocity: 0.01,
            attitude: 1f64.to_radians(),
            rate: 0.01f64.to_radians(),
        },
        t_f_bounds: [100.0, 1000.0],
        nodes: 50,
        w_eq: 1.0,
        gates,
        vehicle,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn apollo_defaults() {
        let s = default_apollo_scenario();
        s.validate().unwrap();
        assert_eq!(s.vehicle.dt_min, 0.112);
        assert_eq!(s.vehicle.inertia[(0, 0)], 49249.0);
        assert_eq!(s.n_thrusters(), 16);
        assert_eq!(s.vehicle.forward_facing().count(), 4);
        assert_relative_eq!(s.orbit.mean_motion, 1.131e-3, epsilon = 1e-6);
    }

    #[test]
    fn terminal_pose_matches_printed_values() {
        let s = default_apollo_scenario();
        let q = s.xf.q;
        for (got, want) in [q.x, q.y, q.z, q.w].iter().zip([0.0, 0.26, 0.97, 0.0]) {
            assert!((got - want).abs() <= 0.005, "{got} vs {want}");
        }
        for (got, want) in s.xf.p.iter().zip(APOLLO_TERMINAL_POSITION) {
            assert!((got - want).abs() <= 0.005, "{got} vs {want}");
        }
    }

    #[test]
    fn port_calibration_round_trips() {
        let s = default_apollo_scenario();
        let p_dp = calibrate_port_position(&s.xf.q, &Vector3::from(APOLLO_TERMINAL_POSITION));
        for (a, b) in p_dp.iter().zip(APOLLO_PORT_POSITION) {
            assert!((a - b).abs() < 5e-5);
        }
    }

    #[test]
    fn thrusters_span_all_axes() {
        let v = apollo_vehicle();
        let mut force = Matrix3::zeros();
        let mut torque = Matrix3::zeros();
        for t in &v.thrusters {
            force += t.direction * t.direction.transpose();
            torque += t.torque_arm() * t.torque_arm().transpose();
        }
        assert!(force.determinant() > 0.0);
        assert!(torque.determinant() > 0.0);
        for i in v.forward_facing() {
            assert!(v.thrusters[i].direction.x < -0.99);
        }
    }

    #[test]
    fn validation_catches_bad_geometry() {
        let mut s = default_apollo_scenario();
        s.r_plume = 40.0;
        assert!(s.validate().is_err());
        let mut s = default_apollo_scenario();
        s.nodes = 1;
        assert!(s.validate().is_err());
        let mut s = default_apollo_scenario();
        s.tol.rate = 0.0;
        assert!(s.validate().is_err());
    }
}
