use approx::assert_relative_eq;
use dlscp::config::RunConfig;
use dlscp::conic::{ClarabelSolver, ConicSolver, SolveStatus};
use dlscp::dynamics::{impulse_jump, propagate_coast, ChaserState, IntegratorOptions, StateMatrix, StateVector};
use dlscp::ptr::{build_subproblem, discretize, solve, Layout, PtrConfig, PtrError};
use dlscp::rendezvous::{eq_regularization, fuel_cost, initial_guess, LogicGates};
use dlscp::scenario::{default_apollo_scenario, ScenarioConfig};
use dlscp::trajectory::SolutionTrajectory;
use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

mod common;
use common::toy_run;

const BETA_0: f64 = 0.45951;

/// A dynamically consistent trajectory: random pulses propagated from `x0`.
fn propagated_reference(cfg: &ScenarioConfig, seed: u64) -> SolutionTrajectory {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut r = initial_guess(cfg);
    let opts = IntegratorOptions::default();
    let t_c = r.coast_time();
    for k in 0..cfg.nodes {
        for i in 0..cfg.n_thrusters() {
            if rng.gen_bool(0.2) {
                let dt = rng.gen_range(cfg.vehicle.dt_min..0.5);
                r.schedule.dt[(i, k)] = dt;
                r.schedule.dt_ref[(i, k)] = dt + rng.gen_range(-0.01..0.01);
            }
        }
        let jumped = impulse_jump(&r.states[k], &r.schedule.column(k), &cfg.vehicle).unwrap();
        r.states[k + 1] = propagate_coast(&jumped, t_c, &cfg.vehicle, &cfg.orbit, &opts).unwrap();
    }
    r
}

fn rel_err(a: &StateVector, b: &StateVector) -> f64 {
    (a - b).amax() / b.amax().max(1.0)
}

#[test]
fn layout_matches_hand_count() {
    // 52 states, 12 pulses, τ, 13 relaxations, 78 virtual controls, 12
    // mismatch and 12 MIB slacks, 6 wall, 3 plume and 3 cone buffers, 4 + 1
    // epigraphs.
    assert_eq!(Layout::count(3, 2, 1), 197);
    assert_eq!(Layout::new(3, 2, vec![1]).n, 197);
    let cfg = default_apollo_scenario();
    let lay = Layout::new(cfg.nodes, cfg.n_thrusters(), cfg.vehicle.forward_facing().collect());
    assert_eq!(lay.n, Layout::count(cfg.nodes, 16, 4));
}

#[test]
fn affine_segment_reproduces_propagation() {
    let cfg = default_apollo_scenario();
    let r = propagated_reference(&cfg, 1);
    let opts = IntegratorOptions::default();
    let segs = discretize(&r, &cfg, &opts).unwrap();
    for (k, seg) in segs.iter().enumerate() {
        let zero = vec![0.0; cfg.n_thrusters()];
        let pred = seg.predict(&StateVector::zeros(), &zero, 0.0);
        assert!(rel_err(&pred, &r.states[k + 1].to_vector()) <= 1e-8, "segment {k}");
        let composed = seg.stm * seg.post_jump + seg.defect;
        assert!(rel_err(&composed, &seg.end_state) <= 1e-8);
    }
}

#[test]
fn final_time_sensitivity_matches_finite_difference() {
    let cfg = default_apollo_scenario();
    let mut r = propagated_reference(&cfg, 2);
    let opts = IntegratorOptions::default();
    let segs = discretize(&r, &cfg, &opts).unwrap();
    let h = 1e-2;
    let end = |r: &SolutionTrajectory, k: usize| {
        let jumped = impulse_jump(&r.states[k], &r.schedule.column(k), &cfg.vehicle).unwrap();
        propagate_coast(&jumped, r.coast_time(), &cfg.vehicle, &cfg.orbit, &opts)
            .unwrap()
            .to_vector()
    };
    let t_f = r.t_f;
    for k in [0, 17, 49] {
        r.t_f = t_f + h;
        let plus = end(&r, k);
        r.t_f = t_f - h;
        let minus = end(&r, k);
        let fd = (plus - minus) / (2.0 * h);
        let err = (segs[k].sigma - fd).amax() / fd.amax();
        assert!(err <= 1e-4, "segment {k}: {err:e}");
    }
}

#[test]
fn equilibrium_reference_has_consistent_defect() {
    let mut cfg = default_apollo_scenario();
    cfg.x0 = ChaserState::new(Vector3::zeros(), Vector3::zeros(), cfg.xf.q, Vector3::zeros());
    let mut r = initial_guess(&cfg);
    for s in r.states.iter_mut() {
        *s = cfg.x0;
    }
    let segs = discretize(&r, &cfg, &IntegratorOptions::default()).unwrap();
    for seg in &segs {
        let x = cfg.x0.to_vector();
        let drift = seg.defect - (StateMatrix::identity() - seg.stm) * x;
        assert!(drift.amax() <= 1e-9, "{drift}");
    }
}

#[test]
fn zero_deviation_reproduces_reference_costs() {
    let cfg = default_apollo_scenario();
    let r = propagated_reference(&cfg, 3);
    let ptr = PtrConfig::default();
    let segs = discretize(&r, &cfg, &IntegratorOptions::default()).unwrap();
    for beta in [BETA_0, 20.0, 459.512] {
        let gates = LogicGates::new(&cfg, beta).unwrap();
        let sub = build_subproblem(&r, &segs, &gates, &cfg, &ptr, ptr.w_tr).unwrap();
        let x = sub.reference_point();
        let parts = sub.costs(&x);
        let dt_max = cfg.vehicle.dt_max;
        assert_relative_eq!(parts.fuel, fuel_cost(&r.schedule, dt_max), epsilon = 1e-9);
        assert_relative_eq!(
            parts.eq_reg,
            eq_regularization(&r.schedule, cfg.w_eq, cfg.vehicle.dt_min),
            epsilon = 1e-9
        );
        assert!(parts.vc_norm <= 1e-9, "{}", parts.vc_norm);
        assert_eq!(parts.trust_region, 0.0);
        assert_eq!(sub.deviation(&x), 0.0);
    }
}

#[test]
fn first_subproblem_is_feasible_and_consistent() {
    let run = RunConfig::default();
    let cfg = &run.scenario;
    let r = initial_guess(cfg);
    let segs = discretize(&r, cfg, &run.integrator).unwrap();
    let gates = LogicGates::new(cfg, BETA_0).unwrap();
    let sub = build_subproblem(&r, &segs, &gates, cfg, &run.ptr, run.ptr.w_tr).unwrap();
    sub.program.validate().unwrap();
    let res = ClarabelSolver::default().solve(&sub.program).unwrap();
    assert_eq!(res.status, SolveStatus::Optimal);

    let p = sub.costs(&res.x);
    let recomputed = p.fuel + p.eq_reg + run.ptr.w_vc * (p.vc_norm + p.buffer_norm) + run.ptr.w_tr * p.trust_region;
    assert!((recomputed - res.objective).abs() <= 1e-6 * res.objective.abs());

    let lay = &sub.layout;
    for k in 0..lay.nodes {
        for i in 0..lay.n_u {
            for j in [lay.u(i, k), lay.v(i, k)] {
                assert!(res.x[j] >= -1e-8 && res.x[j] <= 1.0 + 1e-8);
            }
        }
    }
    let next = sub.extract(&res.x);
    assert_eq!(next.states[0], cfg.x0);
    let [lo, hi] = cfg.t_f_bounds;
    assert!(next.t_f >= lo && next.t_f <= hi);
}

#[test]
fn short_horizon_smoke() {
    let run = toy_run();
    let report = match solve(&run, &ClarabelSolver::default()) {
        Ok(r) => r,
        Err(PtrError::NotConverged(r)) => panic!("not converged after {} iterations", r.iterations),
        Err(e) => panic!("{e}"),
    };
    assert!(report.converged);
    assert_eq!(report.updates, 2);
    assert!(report.iterations <= run.ptr.max_iters);
    let betas: Vec<f64> = report.solution.iterate_log.iter().map(|r| r.beta).collect();
    assert!(betas.windows(2).all(|w| w[0] <= w[1]));
    let mut distinct = betas.clone();
    distinct.dedup();
    assert_eq!(distinct.len(), run.homotopy.updates);
    let last = report.solution.iterate_log.last().unwrap();
    assert!(last.vc_norm <= run.ptr.vc_tol);
}
