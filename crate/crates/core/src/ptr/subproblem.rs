use thiserror::Error;

use super::{PtrConfig, Segment};
use crate::conic::{Cone, ConicProgram, ConstraintBlock, Violation};
use crate::dynamics::{ChaserState, StateVector, STATE_DIM};
use crate::rendezvous::{
    aligned_target_attitude, approach_cone_constraint, mib_sdc, plume_constraint, wall_avoidance,
    LogicGates, ModelError, MIN_RANGE,
};
use crate::scenario::ScenarioConfig;
use crate::trajectory::{PulseSchedule, SolutionTrajectory, TerminalRelaxation};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SubproblemError {
    #[error("reference has {got} segments, expected {expected}")]
    Shape { expected: usize, got: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("subproblem data is invalid: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
}

/// Offsets of every variable group in the subproblem vector.
///
/// Node states `X_k` (`k = 0..=N`), obtained and reference pulses `U`, `V`
/// (node-major), the final-time parameter `τ`, the terminal relaxation,
/// virtual-control pairs `ν±` (13 per segment), one-norm pairs for the
/// pulse mismatch, signed MIB slack pairs, wall/plume/cone buffers, and the
/// trust-region epigraphs `η_k` plus one for `τ`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub nodes: usize,
    pub n_u: usize,
    pub forward: Vec<usize>,
    x: usize,
    u: usize,
    v: usize,
    tau: usize,
    relax: usize,
    nu_pos: usize,
    nu_neg: usize,
    eq_pos: usize,
    eq_neg: usize,
    mib_pos: usize,
    mib_neg: usize,
    wall: usize,
    plume: usize,
    cone: usize,
    eta: usize,
    eta_t: usize,
    pub n: usize,
}

impl Layout {
    pub fn new(nodes: usize, n_u: usize, forward: Vec<usize>) -> Self {
        let pulses = n_u * nodes;
        let x = 0;
        let u = x + STATE_DIM * (nodes + 1);
        let v = u + pulses;
        let tau = v + pulses;
        let relax = tau + 1;
        let nu_pos = relax + STATE_DIM;
        let nu_neg = nu_pos + STATE_DIM * nodes;
        let eq_pos = nu_neg + STATE_DIM * nodes;
        let eq_neg = eq_pos + pulses;
        let mib_pos = eq_neg + pulses;
        let mib_neg = mib_pos + pulses;
        let wall = mib_neg + pulses;
        let plume = wall + pulses;
        let cone = plume + forward.len() * nodes;
        let eta = cone + nodes;
        let eta_t = eta + nodes + 1;
        Self {
            nodes,
            n_u,
            forward,
            x,
            u,
            v,
            tau,
            relax,
            nu_pos,
            nu_neg,
            eq_pos,
            eq_neg,
            mib_pos,
            mib_neg,
            wall,
            plume,
            cone,
            eta,
            eta_t,
            n: eta_t + 1,
        }
    }

    pub fn x(&self, k: usize, i: usize) -> usize {
        self.x + STATE_DIM * k + i
    }
    fn pulse(&self, base: usize, i: usize, k: usize) -> usize {
        base + k * self.n_u + i
    }
    pub fn u(&self, i: usize, k: usize) -> usize {
        self.pulse(self.u, i, k)
    }
    pub fn v(&self, i: usize, k: usize) -> usize {
        self.pulse(self.v, i, k)
    }
    pub fn tau(&self) -> usize {
        self.tau
    }
    pub fn relax(&self, i: usize) -> usize {
        self.relax + i
    }
    pub fn nu_pos(&self, k: usize, i: usize) -> usize {
        self.nu_pos + STATE_DIM * k + i
    }
    pub fn nu_neg(&self, k: usize, i: usize) -> usize {
        self.nu_neg + STATE_DIM * k + i
    }
    pub fn eq_pos(&self, i: usize, k: usize) -> usize {
        self.pulse(self.eq_pos, i, k)
    }
    pub fn eq_neg(&self, i: usize, k: usize) -> usize {
        self.pulse(self.eq_neg, i, k)
    }
    pub fn mib_pos(&self, i: usize, k: usize) -> usize {
        self.pulse(self.mib_pos, i, k)
    }
    pub fn mib_neg(&self, i: usize, k: usize) -> usize {
        self.pulse(self.mib_neg, i, k)
    }
    pub fn wall(&self, i: usize, k: usize) -> usize {
        self.pulse(self.wall, i, k)
    }
    /// Plume buffer of the `j`-th forward-facing thruster at node `k`.
    pub fn plume(&self, j: usize, k: usize) -> usize {
        self.plume + k * self.forward.len() + j
    }
    /// Cone buffer at node `k ∈ 1..=N`.
    pub fn cone(&self, k: usize) -> usize {
        self.cone + k - 1
    }
    pub fn eta(&self, k: usize) -> usize {
        self.eta + k
    }
    pub fn eta_t(&self) -> usize {
        self.eta_t
    }

    fn virtual_controls(&self) -> std::ops::Range<usize> {
        self.nu_pos..self.eq_pos
    }
    fn eq_slacks(&self) -> std::ops::Range<usize> {
        self.eq_pos..self.mib_pos
    }
    fn buffers(&self) -> std::ops::Range<usize> {
        self.mib_pos..self.eta
    }
    fn epigraphs(&self) -> std::ops::Range<usize> {
        self.eta..self.n
    }
    /// States, pulses and `τ`: the iterate proper.
    fn primal(&self) -> std::ops::Range<usize> {
        self.x..self.relax
    }
}

/// Cost breakdown of a subproblem point (scaled units).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CostParts {
    pub fuel: f64,
    pub eq_reg: f64,
    /// `‖ν‖₁` on the dynamics rows.
    pub vc_norm: f64,
    /// One-norm of the logic-constraint buffers.
    pub buffer_norm: f64,
    /// `Σ η`, the unweighted trust-region term.
    pub trust_region: f64,
}

/// A cone program together with the bookkeeping needed to read it back.
#[derive(Debug, Clone)]
pub struct Subproblem {
    pub program: ConicProgram,
    pub layout: Layout,
    /// Reference iterate in scaled subproblem coordinates (zero elsewhere).
    pub reference: Vec<f64>,
    state_scale: [f64; STATE_DIM],
    x0: ChaserState,
    dt_max: f64,
    t_lo: f64,
    t_range: f64,
    eq_weight: f64,
}

struct Rows {
    block: ConstraintBlock,
}

impl Rows {
    fn new(cone: Cone) -> Self {
        Self {
            block: ConstraintBlock {
                cone,
                dim: 0,
                a: Default::default(),
                b: Vec::new(),
            },
        }
    }

    fn row(&mut self, terms: &[(usize, f64)], b: f64) {
        let r = self.block.dim;
        for &(c, v) in terms {
            if v != 0.0 {
                self.block.a.push(r, c, v);
            }
        }
        self.block.b.push(b);
        self.block.dim += 1;
    }
}

fn time_range(cfg: &ScenarioConfig) -> (f64, f64) {
    let [lo, hi] = cfg.t_f_bounds;
    (lo, hi - lo)
}

/// Assembles the convex subproblem about `reference` at the gate sharpness
/// of `gates`. `w_tr` overrides the configured trust-region weight.
pub fn build_subproblem(
    reference: &SolutionTrajectory,
    segments: &[Segment],
    gates: &LogicGates,
    cfg: &ScenarioConfig,
    ptr: &PtrConfig,
    w_tr: f64,
) -> Result<Subproblem, SubproblemError> {
    let nodes = cfg.nodes;
    if segments.len() != nodes || reference.nodes() != nodes || reference.states.len() != nodes + 1
    {
        return Err(SubproblemError::Shape {
            expected: nodes,
            got: segments.len(),
        });
    }
    let n_u = cfg.n_thrusters();
    let lay = Layout::new(nodes, n_u, cfg.vehicle.forward_facing().collect());
    let d: [f64; STATE_DIM] = std::array::from_fn(|i| ptr.scaling.state(i));
    let veh = &cfg.vehicle;
    let dt_max = veh.dt_max;
    let (t_lo, t_range) = time_range(cfg);
    let tau_ref = if t_range > 0.0 {
        ((reference.t_f - t_lo) / t_range).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let xs: Vec<StateVector> = reference.states.iter().map(ChaserState::to_vector).collect();
    let sched = &reference.schedule;

    let mut refv = vec![0.0; lay.n];
    for (k, x) in xs.iter().enumerate() {
        for i in 0..STATE_DIM {
            refv[lay.x(k, i)] = x[i] / d[i];
        }
    }
    for k in 0..nodes {
        for i in 0..n_u {
            refv[lay.u(i, k)] = sched.dt[(i, k)] / dt_max;
            refv[lay.v(i, k)] = sched.dt_ref[(i, k)] / dt_max;
        }
    }
    refv[lay.tau()] = tau_ref;

    let mut c = vec![0.0; lay.n];
    let eq_weight = cfg.w_eq * dt_max / veh.dt_min;
    for k in 0..nodes {
        for i in 0..n_u {
            c[lay.u(i, k)] = 1.0;
            c[lay.eq_pos(i, k)] = eq_weight;
            c[lay.eq_neg(i, k)] = eq_weight;
        }
    }
    for j in lay.virtual_controls().chain(lay.buffers()) {
        c[j] = ptr.w_vc;
    }
    for j in lay.epigraphs() {
        c[j] = w_tr;
    }

    let mut eq = Rows::new(Cone::Zero);
    let mut ineq = Rows::new(Cone::Nonneg);

    for (i, (x0, di)) in cfg.x0.to_vector().iter().zip(d.iter()).enumerate() {
        eq.row(&[(lay.x(0, i), 1.0)], -x0 / di);
    }

    let mut terms = Vec::with_capacity(STATE_DIM + n_u + 4);
    for (k, seg) in segments.iter().enumerate() {
        let mx = seg.state_matrix();
        let mu = seg.input_matrix();
        let u_ref: Vec<f64> = (0..n_u).map(|i| sched.dt[(i, k)]).collect();
        for i in 0..STATE_DIM {
            terms.clear();
            terms.push((lay.x(k + 1, i), 1.0));
            let mut constant = seg.end_state[i] - seg.sigma[i] * (reference.t_f - t_lo);
            for j in 0..STATE_DIM {
                terms.push((lay.x(k, j), -mx[(i, j)] * d[j] / d[i]));
                constant -= mx[(i, j)] * xs[k][j];
            }
            for (l, u) in u_ref.iter().enumerate() {
                terms.push((lay.u(l, k), -mu[(i, l)] * dt_max / d[i]));
                constant -= mu[(i, l)] * u;
            }
            terms.push((lay.tau(), -seg.sigma[i] * t_range / d[i]));
            terms.push((lay.nu_pos(k, i), -1.0));
            terms.push((lay.nu_neg(k, i), 1.0));
            eq.row(&terms, -constant / d[i]);
        }
    }

    let q_target = aligned_target_attitude(&cfg.xf.q, &reference.states[nodes].q);
    let mut target = cfg.xf;
    target.q = q_target;
    let xf = target.to_vector();
    for i in 0..STATE_DIM {
        eq.row(&[(lay.x(nodes, i), 1.0), (lay.relax(i), 1.0)], -xf[i] / d[i]);
    }
    eq.row(&[(lay.relax(0), 1.0)], 0.0);
    if t_range <= 0.0 {
        eq.row(&[(lay.tau(), 1.0)], 0.0);
    }

    for k in 0..nodes {
        for i in 0..n_u {
            eq.row(
                &[
                    (lay.u(i, k), 1.0),
                    (lay.v(i, k), -1.0),
                    (lay.eq_pos(i, k), -1.0),
                    (lay.eq_neg(i, k), 1.0),
                ],
                0.0,
            );
            let v_ref = sched.dt_ref[(i, k)];
            let (s, slope, _) = mib_sdc(v_ref, gates);
            eq.row(
                &[
                    (lay.u(i, k), 1.0),
                    (lay.v(i, k), -slope),
                    (lay.mib_pos(i, k), -1.0),
                    (lay.mib_neg(i, k), 1.0),
                ],
                -(s - slope * v_ref) / dt_max,
            );
            let (w, dw) = wall_avoidance(v_ref, gates);
            let scale = wall_row_scale(w, dw * dt_max);
            ineq.row(
                &[(lay.wall(i, k), 1.0), (lay.v(i, k), -scale * dw * dt_max)],
                -scale * (w - dw * v_ref),
            );
            for var in [lay.u(i, k), lay.v(i, k)] {
                ineq.row(&[(var, 1.0)], 0.0);
                ineq.row(&[(var, -1.0)], 1.0);
            }
        }
    }
    ineq.row(&[(lay.tau(), 1.0)], 0.0);
    ineq.row(&[(lay.tau(), -1.0)], 1.0);

    let m = ptr.terminal_margin;
    let boxes = [
        (1..3, cfg.tol.position),
        (3..6, cfg.tol.velocity),
        (10..13, cfg.tol.rate),
    ];
    for (range, tol) in boxes {
        for i in range {
            let bound = m * tol / d[i];
            ineq.row(&[(lay.relax(i), -1.0)], bound);
            ineq.row(&[(lay.relax(i), 1.0)], bound);
        }
    }
    let qf = q_target.to_vector();
    let att: Vec<(usize, f64)> = (0..4).map(|j| (lay.x(nodes, 6 + j), qf[j] * d[6 + j])).collect();
    ineq.row(&att, -(0.5 * m * cfg.tol.attitude).cos());

    let dp = d[0];
    for k in 0..nodes {
        let p_ref = reference.states[k].p;
        let (res0, grad) = plume_constraint(&p_ref, 0.0, gates, cfg);
        let r_hat = -res0 / dt_max;
        let g = grad / dt_max;
        for (j, &i) in lay.forward.iter().enumerate() {
            let mut t = vec![(lay.plume(j, k), 1.0), (lay.u(i, k), -1.0)];
            for a in 0..3 {
                t.push((lay.x(k, a), -g[a] * dp));
            }
            ineq.row(&t, r_hat + g.dot(&p_ref));
        }
    }
    for k in 1..=nodes {
        let p_ref = reference.states[k].p;
        if p_ref.norm() < MIN_RANGE {
            continue;
        }
        let (r, g) = approach_cone_constraint(&p_ref, gates, cfg)?;
        let mut t = vec![(lay.cone(k), 1.0)];
        for a in 0..3 {
            t.push((lay.x(k, a), -g[a] * dp));
        }
        ineq.row(&t, -(r - g.dot(&p_ref)));
    }

    for j in lay.virtual_controls().chain(lay.eq_slacks()).chain(lay.buffers()) {
        ineq.row(&[(j, 1.0)], 0.0);
    }

    let mut blocks = vec![eq.block, ineq.block];
    // On the unit sphere the half-space above equals this ball; only the
    // ball also limits tangential moves of the linearized attitude.
    let mut ball = Rows::new(Cone::Soc);
    ball.row(&[], 2.0 * (0.25 * m * cfg.tol.attitude).sin());
    for j in 0..4 {
        ball.row(&[(lay.x(nodes, 6 + j), d[6 + j])], -qf[j]);
    }
    blocks.push(ball.block);
    for k in 0..=nodes {
        let mut vars: Vec<usize> = (0..STATE_DIM).map(|i| lay.x(k, i)).collect();
        if k < nodes {
            vars.extend((0..n_u).map(|i| lay.u(i, k)));
            vars.extend((0..n_u).map(|i| lay.v(i, k)));
        }
        blocks.push(trust_region_block(lay.eta(k), &vars, &refv));
    }
    blocks.push(trust_region_block(lay.eta_t(), &[lay.tau()], &refv));

    let program = ConicProgram {
        n: lay.n,
        c,
        blocks,
    };
    program.validate().map_err(SubproblemError::Invalid)?;
    Ok(Subproblem {
        program,
        layout: lay,
        reference: refv,
        state_scale: d,
        x0: cfg.x0,
        dt_max,
        t_lo,
        t_range,
        eq_weight,
    })
}

/// Row scale for a linearized wall-avoidance constraint violated at the
/// reference: the row is divided by its slope so that residual and buffer
/// measure the Newton distance to the boundary in scaled pulse units, capped
/// at one full pulse range. Near the pivot at large β both residual and
/// slope are exponentially small, and the unscaled row would be void at
/// solver precision. Satisfied rows keep unit scale so a pulse sitting on
/// the pivot can still be switched off.
fn wall_row_scale(residual: f64, slope: f64) -> f64 {
    if residual <= 0.0 {
        return 1.0;
    }
    let scale = (1.0 / slope.abs()).min(1.0 / residual);
    if scale.is_finite() {
        scale.max(1.0)
    } else {
        1.0
    }
}

fn trust_region_block(eta: usize, vars: &[usize], refv: &[f64]) -> ConstraintBlock {
    let mut r = Rows::new(Cone::Soc);
    r.row(&[(eta, 1.0)], 1.0);
    r.row(&[(eta, 1.0)], -1.0);
    for &v in vars {
        r.row(&[(v, 2.0)], -2.0 * refv[v]);
    }
    r.block
}

impl Subproblem {
    pub fn costs(&self, x: &[f64]) -> CostParts {
        let lay = &self.layout;
        let sum = |r: std::ops::Range<usize>| x[r].iter().sum::<f64>();
        let mut fuel = 0.0;
        for k in 0..lay.nodes {
            for i in 0..lay.n_u {
                fuel += x[lay.u(i, k)];
            }
        }
        CostParts {
            fuel,
            eq_reg: self.eq_weight * sum(lay.eq_slacks()),
            vc_norm: sum(lay.virtual_controls()),
            buffer_norm: sum(lay.buffers()),
            trust_region: sum(lay.epigraphs()),
        }
    }

    /// Largest scaled change of states, pulses or `τ` against the reference.
    pub fn deviation(&self, x: &[f64]) -> f64 {
        self.layout
            .primal()
            .map(|j| (x[j] - self.reference[j]).abs())
            .fold(0.0, f64::max)
    }

    /// Maps a subproblem point back to a trajectory. Pulses and `τ` are
    /// clipped into their boxes to remove solver round-off.
    pub fn extract(&self, x: &[f64]) -> SolutionTrajectory {
        let lay = &self.layout;
        let d = &self.state_scale;
        // The initial state is pinned by an equality; copy it to drop the
        // solver's round-off.
        let states = std::iter::once(self.x0)
            .chain((1..=lay.nodes).map(|k| {
                let v = StateVector::from_fn(|i, _| x[lay.x(k, i)] * d[i]);
                ChaserState::from_vector(&v)
            }))
            .collect();
        let mut schedule = PulseSchedule::zeros(lay.n_u, lay.nodes);
        for k in 0..lay.nodes {
            for i in 0..lay.n_u {
                schedule.dt[(i, k)] = (x[lay.u(i, k)] * self.dt_max).clamp(0.0, self.dt_max);
                schedule.dt_ref[(i, k)] = (x[lay.v(i, k)] * self.dt_max).clamp(0.0, self.dt_max);
            }
        }
        let relax = StateVector::from_fn(|i, _| x[lay.relax(i)] * d[i]);
        SolutionTrajectory {
            states,
            schedule,
            t_f: self.t_lo + self.t_range * x[lay.tau()].clamp(0.0, 1.0),
            relax: TerminalRelaxation::from_vector(&relax),
            iterate_log: Vec::new(),
        }
    }

    /// The reference itself as a subproblem point: zero deviation, with
    /// every slack set to the smallest value that satisfies its rows.
    pub fn reference_point(&self) -> Vec<f64> {
        let mut x = self.reference.clone();
        let lay = &self.layout;
        // Epigraphs stay at zero; solve each linear row for its slacks.
        let eq = &self.program.blocks[0];
        let ineq = &self.program.blocks[1];
        for (blk, signed) in [(eq, true), (ineq, false)] {
            let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); blk.dim];
            for ((&r, &c), &v) in blk.a.rows.iter().zip(&blk.a.cols).zip(&blk.a.vals) {
                rows[r].push((c, v));
            }
            for (r, terms) in rows.iter().enumerate() {
                let slacks: Vec<&(usize, f64)> = terms
                    .iter()
                    .filter(|(c, _)| lay.is_slack(*c))
                    .collect();
                if slacks.is_empty() {
                    continue;
                }
                let rest: f64 = terms
                    .iter()
                    .filter(|(c, _)| !lay.is_slack(*c))
                    .map(|(c, v)| v * x[*c])
                    .sum::<f64>()
                    + blk.b[r];
                if signed && slacks.len() == 2 {
                    let (pos, neg) = if slacks[0].1 < 0.0 {
                        (slacks[0].0, slacks[1].0)
                    } else {
                        (slacks[1].0, slacks[0].0)
                    };
                    x[pos] = rest.max(0.0);
                    x[neg] = (-rest).max(0.0);
                } else if !signed && slacks.len() == 1 && terms.len() > 1 {
                    let (c, v) = *slacks[0];
                    x[c] = (-rest / v).max(0.0);
                }
            }
        }
        x
    }
}

impl Layout {
    fn is_slack(&self, j: usize) -> bool {
        self.virtual_controls().contains(&j)
            || self.eq_slacks().contains(&j)
            || self.buffers().contains(&j)
    }

    /// Closed-form variable count.
    pub fn count(nodes: usize, n_u: usize, n_forward: usize) -> usize {
        STATE_DIM * (nodes + 1)
            + 2 * n_u * nodes
            + 1
            + STATE_DIM
            + 2 * STATE_DIM * nodes
            + 2 * n_u * nodes
            + 2 * n_u * nodes
            + n_u * nodes
            + n_forward * nodes
            + nodes
            + (nodes + 1)
            + 1
    }
}
