use payscheme_core::lp::{solve, LinearProgram, LpOutcome};
use payscheme_testkit::{random_lp, rng, vertex_oracle, OracleOutcome};

#[test]
fn simplex_matches_vertex_enumeration() {
    let mut r = rng(21);
    let mut seen = [0usize; 3];
    for case in 0..500 {
        let lp = random_lp(&mut r);
        let got = solve(&lp).unwrap();
        match (&got, vertex_oracle(&lp)) {
            (LpOutcome::Optimal(s), OracleOutcome::Optimal(v)) => {
                assert!((s.value - v).abs() <= 1e-7, "case {case}: {} vs {v}", s.value);
                assert!(lp.max_violation(&s.x) <= 1e-7);
                seen[0] += 1;
            }
            (LpOutcome::Infeasible, OracleOutcome::Infeasible) => seen[1] += 1,
            (LpOutcome::Unbounded, OracleOutcome::Unbounded) => seen[2] += 1,
            (a, b) => panic!("case {case}: solver {a:?}, oracle {b:?}, program {lp:?}"),
        }
    }
    assert!(seen.iter().all(|&c| c > 10), "{seen:?}");
}

#[test]
fn optimal_solutions_carry_a_dual_certificate() {
    let mut r = rng(22);
    for _ in 0..500 {
        let lp = random_lp(&mut r);
        if let LpOutcome::Optimal(s) = solve(&lp).unwrap() {
            assert!(s.ge_duals.iter().all(|&y| y >= -1e-9));
            assert!(s.dual_residual(&lp) <= 1e-6);
            assert!((s.dual_value(&lp) - s.value).abs() <= 1e-6);
        }
    }
}

#[test]
fn degenerate_vertex_terminates() {
    // Many constraints through the origin: a classic cycling setup.
    let mut lp = LinearProgram::minimize(vec![-0.75, 150.0, -0.02, 6.0]);
    lp.add_le(vec![0.25, -60.0, -0.04, 9.0], 0.0).unwrap();
    lp.add_le(vec![0.5, -90.0, -0.02, 3.0], 0.0).unwrap();
    lp.add_le(vec![0.0, 0.0, 1.0, 0.0], 1.0).unwrap();
    for k in 0..4 {
        let mut e = vec![0.0; 4];
        e[k] = 1.0;
        lp.add_ge(e, 0.0).unwrap();
    }
    let s = match solve(&lp).unwrap() {
        LpOutcome::Optimal(s) => s,
        other => panic!("{other:?}"),
    };
    assert!((s.value + 0.05).abs() < 1e-9);
}
