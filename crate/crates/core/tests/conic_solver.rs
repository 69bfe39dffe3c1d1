use dlscp::conic::text::{from_text, to_text};
use dlscp::conic::{ClarabelSolver, Cone, ConicProgram, ConicSolver, ConstraintBlock, SolveStatus, SolverResult};
use proptest::prelude::*;

fn block(cone: Cone, rows: &[(&[(usize, f64)], f64)]) -> ConstraintBlock {
    let mut blk = ConstraintBlock::new(cone, rows.len());
    for (r, (terms, b)) in rows.iter().enumerate() {
        for &(c, v) in terms.iter() {
            blk.a.push(r, c, v);
        }
        blk.b[r] = *b;
    }
    blk
}

fn solve(p: &ConicProgram) -> SolverResult {
    let res = ClarabelSolver::default().solve(p).unwrap();
    assert_eq!(res.status, SolveStatus::Optimal);
    assert!(res.relative_gap() <= 1e-6, "gap {}", res.relative_gap());
    let recomputed: f64 = p.c.iter().zip(&res.x).map(|(c, x)| c * x).sum();
    assert!((res.objective - recomputed).abs() <= 1e-8 * recomputed.abs().max(1.0));
    res
}

#[test]
fn bound_constraint() {
    let mut p = ConicProgram::new(1);
    p.c[0] = 1.0;
    p.blocks.push(block(Cone::Nonneg, &[(&[(0, 1.0)], -1.0)]));
    let res = solve(&p);
    assert!((res.x[0] - 1.0).abs() < 1e-7);
}

#[test]
fn second_order_cone() {
    let mut p = ConicProgram::new(1);
    p.c[0] = 1.0;
    p.blocks.push(block(Cone::Soc, &[(&[(0, 1.0)], 0.0), (&[], 3.0), (&[], 4.0)]));
    let res = solve(&p);
    assert!((res.x[0] - 5.0).abs() < 1e-7);
}

#[test]
fn one_norm_by_slack_pairs() {
    // x = (2, -3) fixed; x = s⁺ − s⁻ with s± ≥ 0; minimize Σ s⁺ + s⁻.
    let mut p = ConicProgram::new(6);
    p.c = vec![0.0, 0.0, 1.0, 1.0, 1.0, 1.0];
    p.blocks.push(block(
        Cone::Zero,
        &[
            (&[(0, 1.0)], -2.0),
            (&[(1, 1.0)], 3.0),
            (&[(0, 1.0), (2, -1.0), (3, 1.0)], 0.0),
            (&[(1, 1.0), (4, -1.0), (5, 1.0)], 0.0),
        ],
    ));
    p.blocks.push(block(
        Cone::Nonneg,
        &[(&[(2, 1.0)], 0.0), (&[(3, 1.0)], 0.0), (&[(4, 1.0)], 0.0), (&[(5, 1.0)], 0.0)],
    ));
    let res = solve(&p);
    assert!((res.objective - 5.0).abs() < 1e-7);
}

#[test]
fn infeasible_is_reported() {
    let mut p = ConicProgram::new(1);
    p.blocks.push(block(Cone::Nonneg, &[(&[(0, 1.0)], -2.0), (&[(0, -1.0)], 1.0)]));
    let res = ClarabelSolver::default().solve(&p).unwrap();
    assert_eq!(res.status, SolveStatus::Infeasible);
}

#[test]
fn invalid_program_is_rejected() {
    let mut p = ConicProgram::new(1);
    p.blocks.push(ConstraintBlock::new(Cone::Soc, 1));
    let mut nan = ConstraintBlock::new(Cone::Nonneg, 1);
    nan.a.push(0, 0, f64::NAN);
    p.blocks.push(nan);
    let errs = p.validate().unwrap_err();
    assert_eq!(errs.len(), 2);
    assert!(ClarabelSolver::default().solve(&p).is_err());
}

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![
        -1e6..1e6f64,
        any::<f64>().prop_filter("finite", |v| v.is_finite()),
    ]
}

fn program() -> impl Strategy<Value = ConicProgram> {
    (1usize..6).prop_flat_map(|n| {
        let blocks = prop::collection::vec(
            (0usize..3, 2usize..5).prop_flat_map(move |(cone, dim)| {
                let cone = [Cone::Zero, Cone::Nonneg, Cone::Soc][cone];
                (
                    Just(cone),
                    Just(dim),
                    prop::collection::vec((0..dim, 0..n, finite()), 0..8),
                    prop::collection::vec(finite(), dim),
                )
            }),
            0..4,
        );
        (Just(n), prop::collection::vec(finite(), n), blocks)
    })
    .prop_map(|(n, c, blocks)| ConicProgram {
        n,
        c,
        blocks: blocks
            .into_iter()
            .map(|(cone, dim, trips, b)| {
                let mut blk = ConstraintBlock::new(cone, dim);
                for (r, col, v) in trips {
                    blk.a.push(r, col, v);
                }
                blk.b = b;
                blk
            })
            .collect(),
    })
}

proptest! {
    #[test]
    fn text_format_round_trips(p in program()) {
        let back = from_text(&to_text(&p)).unwrap();
        prop_assert_eq!(back, p);
    }
}
