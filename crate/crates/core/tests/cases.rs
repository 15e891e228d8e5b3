use nalgebra::DMatrix;
use payscheme_core::cases::{build_commerce, build_pvc, CommerceParams, PvcParams};
use payscheme_core::info::{implemented_utilities, left_inverse};
use payscheme_core::security::verify;
use payscheme_core::{Matrix, SecurityParams};
use payscheme_testkit::rng;
use rand::Rng;

#[test]
fn random_commerce_instances_are_sharp() {
    let mut r = rng(61);
    for _ in 0..50 {
        let xp = r.gen_range(1.0..100.0);
        let x = xp + r.gen_range(1.0..100.0);
        let y = x + r.gen_range(1.0..100.0);
        let eps = r.gen_range(0.01..0.45);
        let c = build_commerce(CommerceParams { x, x_prime: xp, y, eps }).unwrap();
        let u = c.tree.utility_matrix();
        let lambda_phi = c.closed_form.matrix().mul(c.info.phi()).unwrap();
        let diff = u.sub(&c.target).unwrap();
        assert!(lambda_phi.max_abs_diff(&diff) < 1e-9);

        let at = |delta: f64| {
            verify(&c.tree, &c.info, &c.closed_form, &c.honest, SecurityParams::new(delta, 1).unwrap())
                .unwrap()
                .pass
        };
        assert!(at(x), "x = {x}, x' = {xp}, y = {y}, eps = {eps}");
        assert!(!at(x + 1e-3));
    }
}

/// `(U - E) Phi^{-1}` through an LU solve independent of the crate.
fn oracle_scheme(u: &Matrix, e: &Matrix, phi: &Matrix) -> DMatrix<f64> {
    let diff = DMatrix::from_fn(u.rows(), u.cols(), |i, j| u[(i, j)] - e[(i, j)]);
    let phi_t = DMatrix::from_fn(phi.cols(), phi.rows(), |i, j| phi[(j, i)]);
    // Lambda Phi = D  <=>  Phi^T Lambda^T = D^T.
    phi_t.lu().solve(&diff.transpose()).unwrap().transpose()
}

#[test]
fn pvc_grid() {
    let (u_plus, u_minus) = (3.0, -0.5);
    for n in [2, 3] {
        for eps in [0.05, 0.1, 0.2, 0.25, 0.3, 0.4, 0.5] {
            for delta in [0.0, 0.5, 2.0] {
                let p = PvcParams::new(n, eps, u_plus, u_minus, delta);
                let c = build_pvc(&p).unwrap();
                let phi = c.info.phi();
                let inv = left_inverse(&c.info).unwrap();
                assert_eq!(inv.rank, 2 * n + 1);
                assert!(inv.matrix.mul(phi).unwrap().max_abs_diff(&Matrix::identity(2 * n + 1)) < 1e-8);

                let oracle = oracle_scheme(&c.tree.utility_matrix(), &c.target, phi);
                let l = c.lambda.matrix();
                for i in 0..n {
                    for k in 0..=2 * n {
                        assert!((l[(i, k)] - oracle[(i, k)]).abs() < 1e-9);
                    }
                }
                let e = implemented_utilities(&c.tree.utility_matrix(), &c.lambda, &c.info).unwrap();
                assert!(e.max_abs_diff(&c.target) < 1e-9);

                let expected_max = ((1.0 - eps) * u_plus + delta) / eps;
                for d in c.lambda.max_deposits() {
                    assert!((d - expected_max).abs() < 1e-9);
                }

                let at = |d: f64| {
                    verify(&c.tree, &c.info, &c.lambda, &c.honest, SecurityParams::new(d, 1).unwrap())
                        .unwrap()
                        .pass
                };
                // Deviating leaves sit at -delta against the honest 1.
                assert!(at(delta));
                assert!(at(delta + 1.0));
                assert!(!at(delta + 1.0 + 1e-3));
            }
        }
    }
}

#[test]
fn pvc_deposit_slopes() {
    let (u_plus, u_minus) = (2.5, -1.0);
    let max_dep = |eps: f64, delta: f64| {
        build_pvc(&PvcParams::new(2, eps, u_plus, u_minus, delta))
            .unwrap()
            .lambda
            .max_deposits()[0]
    };
    for eps in [0.1, 0.2, 0.5] {
        // d/d(delta) = 1/eps.
        let slope = (max_dep(eps, 3.0) - max_dep(eps, 1.0)) / 2.0;
        assert!((slope - 1.0 / eps).abs() < 1e-6);
    }
    for delta in [0.0, 1.0, 4.0] {
        // Linear in 1/eps with slope u+ + delta.
        let (a, b) = (0.1, 0.4);
        let slope = (max_dep(a, delta) - max_dep(b, delta)) / (1.0 / a - 1.0 / b);
        assert!((slope - (u_plus + delta)).abs() < 1e-6);
    }
}

#[test]
fn pvc_two_party_example() {
    let c = build_pvc(&PvcParams::new(2, 0.5, 2.0, -1.0, 1.0)).unwrap();
    let l = c.lambda.matrix();
    let expected = [[0.0, 1.0, 4.0, 0.0, -1.0], [0.0, 0.0, -1.0, 1.0, 4.0]];
    for i in 0..2 {
        for k in 0..5 {
            assert!((l[(i, k)] - expected[i][k]).abs() < 1e-9);
        }
    }
    let sums = &c.self_containment.column_sums;
    for (s, e) in sums.iter().zip([0.0, 1.0, 3.0, 1.0, 3.0]) {
        assert!((s - e).abs() < 1e-9);
    }
    assert!(c.self_containment.self_contained);
}
