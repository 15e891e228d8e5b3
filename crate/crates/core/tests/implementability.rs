use payscheme_core::info::{implemented_utilities, left_inverse, scheme_for_target};
use payscheme_core::{Error, InfoStructure, Matrix};
use payscheme_testkit::{full_rank_phi, rank_deficient_phi, rng};
use rand::Rng;

fn names(s: usize) -> Vec<String> {
    (0..s).map(|k| format!("s{k}")).collect()
}

fn random_matrix(r: &mut impl Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| r.gen_range(-10.0..10.0))
}

#[test]
fn full_rank_emissions_implement_any_target() {
    let mut r = rng(31);
    for _ in 0..50 {
        let m = r.gen_range(1..=5);
        let s = r.gen_range(m..=5);
        let n = r.gen_range(1..=3);
        let info = InfoStructure::new(names(s), full_rank_phi(&mut r, s, m)).unwrap();
        let inv = left_inverse(&info).unwrap();
        assert_eq!(inv.rank, m);
        assert!(inv.matrix.mul(info.phi()).unwrap().max_abs_diff(&Matrix::identity(m)) < 1e-8);

        let u = random_matrix(&mut r, n, m);
        let target = random_matrix(&mut r, n, m);
        let scheme = scheme_for_target(&u, &target, &info).unwrap();
        let e = implemented_utilities(&u, &scheme, &info).unwrap();
        assert!(e.max_abs_diff(&target) < 1e-8);
    }
}

#[test]
fn rank_deficient_emissions_reject_off_span_targets() {
    let mut r = rng(32);
    for _ in 0..20 {
        let m = r.gen_range(2..=5);
        let s = r.gen_range(2..=5);
        let n = r.gen_range(1..=3);
        let phi = rank_deficient_phi(&mut r, s, m);
        let info = InfoStructure::new(names(s), phi.clone()).unwrap();
        assert!(matches!(left_inverse(&info), Err(Error::NotLeftInvertible { .. })));

        // Rows of Lambda * Phi are orthogonal to the kernel of Phi, so a
        // kernel vector is never implementable.
        let dense = nalgebra::DMatrix::from_fn(s, m, |k, j| phi[(k, j)]);
        let eig = (dense.transpose() * &dense).symmetric_eigen();
        let (min_idx, _) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .unwrap();
        let z = eig.eigenvectors.column(min_idx);
        let mut diff = random_matrix(&mut r, n, m);
        for j in 0..m {
            diff[(0, j)] = z[j];
        }
        let u = random_matrix(&mut r, n, m);
        let target = u.sub(&diff).unwrap();
        match scheme_for_target(&u, &target, &info) {
            Err(Error::TargetNotImplementable { residual, .. }) => assert!(residual >= 1e-8),
            other => panic!("expected rejection, got {other:?}"),
        }
    }
}
