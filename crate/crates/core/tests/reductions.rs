use payscheme_core::reductions::{lp_to_game, point_from_scheme, scheme_from_point};
use payscheme_core::security::verify;
use payscheme_core::synthesis::{synthesize, SynthesisOptions};
use payscheme_core::{Matrix, SecurityParams};
use payscheme_testkit::rng;
use rand::Rng;

/// Integer data on a half-unit grid, so `A x - b` is either zero or at least
/// 1/2 in magnitude before row normalization.
fn triple(r: &mut impl Rng) -> (Matrix, Vec<f64>, Vec<f64>) {
    let rows = r.gen_range(1..=4);
    let vars = r.gen_range(1..=4);
    let mut a = Matrix::from_fn(rows, vars, |_, _| r.gen_range(0..=4) as f64);
    for i in 0..rows {
        if a.row(i).iter().all(|v| *v == 0.0) {
            a[(i, r.gen_range(0..vars))] = 1.0;
        }
    }
    let b = (0..rows).map(|_| r.gen_range(-3..=8) as f64).collect();
    let x = (0..vars).map(|_| r.gen_range(0..=8) as f64 * 0.5).collect();
    (a, b, x)
}

#[test]
fn verification_decides_feasibility() {
    let mut r = rng(91);
    let params = SecurityParams::new(0.0, 1).unwrap();
    let (mut feasible, mut infeasible) = (0, 0);
    for _ in 0..100 {
        let (a, b, x) = triple(&mut r);
        let inst = lp_to_game(&a, &b, &[1.0; 4][..a.cols()]).unwrap();
        let scheme = scheme_from_point(&inst, &x).unwrap();
        let ax = a.mul_vec(&x).unwrap();
        let expected = ax.iter().zip(&b).all(|(l, r)| l - r >= -1e-7);
        let rep = verify(&inst.tree, &inst.info, &scheme, &inst.intended, params).unwrap();
        assert_eq!(rep.pass, expected, "A = {:?}, b = {b:?}, x = {x:?}", a.to_rows());
        assert_eq!(point_from_scheme(&inst, &scheme).unwrap(), x);
        if expected {
            feasible += 1;
        } else {
            infeasible += 1;
        }
    }
    assert!(feasible > 10 && infeasible > 10, "{feasible} feasible, {infeasible} infeasible");
}

#[test]
fn synthesized_schemes_decode_to_feasible_points() {
    let mut r = rng(92);
    let params = SecurityParams::new(0.0, 1).unwrap();
    let mut solved = 0;
    for _ in 0..30 {
        let (a, b, _) = triple(&mut r);
        let c: Vec<f64> = (0..a.cols()).map(|_| r.gen_range(1..=5) as f64).collect();
        let inst = lp_to_game(&a, &b, &c).unwrap();
        let Ok(out) = synthesize(
            &inst.tree,
            &inst.info,
            &inst.intended,
            params,
            &inst.cost_vector(),
            SynthesisOptions::default(),
        ) else {
            continue;
        };
        let x = point_from_scheme(&inst, &out.scheme).unwrap();
        let ax = a.mul_vec(&x).unwrap();
        assert!(ax.iter().zip(&b).all(|(l, r)| l - r >= -1e-7));
        solved += 1;
    }
    assert!(solved > 0);
}
