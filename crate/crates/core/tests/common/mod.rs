//! Fixtures shared by the integration tests.

#![allow(dead_code)]

use dlscp::config::RunConfig;
use dlscp::dynamics::{propagate_coast, ChaserState, IntegratorOptions};
use dlscp::scenario::{default_apollo_scenario, GateNormalization, ScenarioConfig, ENVELOPE_FACTOR};
use nalgebra::{Matrix6, Vector3, Vector6};

/// A free coast into the port: the initial state is the terminal state pulled
/// back 50 s through the linear translational dynamics, so zero pulses at
/// `t_f = 50` is optimal.
pub fn toy_scenario() -> ScenarioConfig {
    let mut cfg = default_apollo_scenario();
    let opts = IntegratorOptions::default();
    let flow = |p: Vector3<f64>, v: Vector3<f64>| {
        let x = ChaserState::new(p, v, cfg.xf.q, Vector3::zeros());
        let y = propagate_coast(&x, 50.0, &cfg.vehicle, &cfg.orbit, &opts).unwrap();
        Vector6::new(y.p.x, y.p.y, y.p.z, y.v.x, y.v.y, y.v.z)
    };
    let phi = Matrix6::from_fn(|r, c| {
        let mut e = Vector6::zeros();
        e[c] = 1.0;
        flow(e.fixed_rows::<3>(0).into(), e.fixed_rows::<3>(3).into())[r]
    });
    let f = &cfg.xf;
    let target = Vector6::new(f.p.x, f.p.y, f.p.z, f.v.x, f.v.y, f.v.z);
    let y0 = phi.lu().solve(&target).unwrap();
    let p0 = Vector3::new(y0[0], y0[1], y0[2]);
    cfg.x0 = ChaserState::new(p0, Vector3::new(y0[3], y0[4], y0[5]), cfg.xf.q, Vector3::zeros());
    cfg.nodes = 4;
    cfg.t_f_bounds = [30.0, 70.0];
    cfg.gates = GateNormalization::if_side(
        cfg.r_appch,
        cfg.r_plume,
        ENVELOPE_FACTOR * p0.norm(),
        cfg.vehicle.dt_min,
        cfg.vehicle.dt_max,
    );
    cfg
}

/// The toy scenario with a short homotopy, cheap enough for end-to-end
/// tests of the CLI.
pub fn toy_run() -> RunConfig {
    let mut run = RunConfig {
        scenario: toy_scenario(),
        ..RunConfig::default()
    };
    run.homotopy.updates = 2;
    run.ptr.max_iters = 40;
    run
}
