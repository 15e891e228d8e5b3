//! Matrix norms and lower bounds on the largest deposit.

use libm::sqrt;

use crate::error::{Error, Result};
use crate::game::{GameTree, StrategyProfile};
use crate::info::InfoStructure;
use crate::linalg::{norm2, Matrix};
use crate::security::{build_constraints, SecurityParams};
use crate::synthesis::minmax_deposit;

const POWER_TOL: f64 = 1e-10;
const POWER_MAX_ITER: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormReport {
    /// Largest absolute column sum.
    pub one: f64,
    /// Largest absolute row sum.
    pub inf: f64,
    /// Largest singular value.
    pub two: f64,
    /// Largest absolute entry.
    pub max: f64,
}

pub fn norms(m: &Matrix) -> NormReport {
    let (r, c) = m.shape();
    let one = (0..c)
        .map(|j| (0..r).map(|i| m[(i, j)].abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let inf = (0..r)
        .map(|i| m.row(i).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    NormReport {
        one,
        inf,
        two: spectral_norm(m),
        max: m.max_abs(),
    }
}

/// Largest singular value by power iteration on `M^T M`.
///
/// Starts from the row of largest norm and stops once the error estimated
/// from the geometric decay of successive Rayleigh quotients drops below
/// `1e-10` relative.
pub fn spectral_norm(m: &Matrix) -> f64 {
    let (r, c) = m.shape();
    if r == 0 || c == 0 {
        return 0.0;
    }
    let start = (0..r)
        .max_by(|&a, &b| norm2(m.row(a)).total_cmp(&norm2(m.row(b))))
        .unwrap_or(0);
    let mut v = m.row(start).to_vec();
    let nv = norm2(&v);
    if nv == 0.0 {
        return 0.0;
    }
    v.iter_mut().for_each(|x| *x /= nv);

    let mut lambda = 0.0;
    let mut last_change = f64::INFINITY;
    for _ in 0..POWER_MAX_ITER {
        let mv = m.mul_vec(&v).expect("matching dimensions");
        let rayleigh = mv.iter().map(|x| x * x).sum::<f64>();
        let w = m.vec_mul(&mv).expect("matching dimensions");
        let nw = norm2(&w);
        if nw == 0.0 {
            return sqrt(rayleigh);
        }
        let change = (rayleigh - lambda).abs();
        lambda = rayleigh;
        let ratio = if last_change.is_finite() && last_change > 0.0 {
            (change / last_change).min(0.999_999)
        } else {
            0.999_999
        };
        if change == 0.0 || change * ratio / (1.0 - ratio) <= POWER_TOL * lambda {
            break;
        }
        last_change = change;
        for (x, y) in v.iter_mut().zip(&w) {
            *x = y / nw;
        }
    }
    sqrt(lambda)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundReport {
    pub delta: f64,
    pub t: usize,
    pub players: usize,
    pub symbols: usize,
    /// Number of security constraints.
    pub alpha: usize,
    /// Spectral norm of the `alpha x n` per-player product `A U`.
    pub au_norm2: f64,
    /// `(delta sqrt(n) + |AU|_2 / sqrt(n alpha)) / (2 s)`.
    pub norm_bound: f64,
    /// Same with the delta term `delta / (2 s sqrt(n))`.
    pub conservative_bound: f64,
    /// Optimal min-max deposit at `delta = 0`; `inf` if none exists.
    pub delta_g: f64,
}

/// Both norm-based bounds on the largest deposit, plus the exact 0-strong
/// min-max deposit.
pub fn deposit_lower_bound(
    tree: &GameTree,
    info: &InfoStructure,
    profile: &StrategyProfile,
    params: SecurityParams,
) -> Result<BoundReport> {
    params.check_players(tree.num_players())?;
    let system = build_constraints(tree, profile, params)?;
    if system.is_empty() {
        return Err(Error::NoConstraints);
    }
    let n = tree.num_players() as f64;
    let s = info.num_symbols() as f64;
    let alpha = system.len();
    let au = system.per_player_product(&tree.utility_matrix());
    let au_norm2 = spectral_norm(&au);
    let u_term = au_norm2 / sqrt(n * alpha as f64) / (2.0 * s);
    let delta = params.delta;
    Ok(BoundReport {
        delta,
        t: params.t,
        players: tree.num_players(),
        symbols: info.num_symbols(),
        alpha,
        au_norm2,
        norm_bound: delta * sqrt(n) / (2.0 * s) + u_term,
        conservative_bound: delta / (2.0 * s * sqrt(n)) + u_term,
        delta_g: minmax_deposit(tree, info, profile, params.t)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cases::{build_commerce, CommerceParams};
    use crate::game::NodeSpec;
    use crate::info::PaymentScheme;
    use crate::security::verify;
    use alloc::string::ToString;
    use alloc::vec;

    #[test]
    fn small_norms() {
        let m = Matrix::from_rows(&[[1.0, -2.0], [3.0, 4.0]]).unwrap();
        let r = norms(&m);
        assert_eq!((r.one, r.inf, r.max), (6.0, 7.0, 4.0));
        // sigma_max^2 = (30 + sqrt(500)) / 2 for this matrix.
        assert!((r.two - sqrt((30.0 + sqrt(500.0)) / 2.0)).abs() < 1e-9);

        let r = norms(&Matrix::identity(4));
        assert_eq!((r.one, r.inf, r.max), (1.0, 1.0, 1.0));
        assert!((r.two - 1.0).abs() < 1e-12);
        assert_eq!(norms(&Matrix::zeros(2, 3)).two, 0.0);
    }

    fn commerce() -> crate::cases::CommerceCase {
        build_commerce(CommerceParams {
            x: 100.0,
            x_prime: 50.0,
            y: 150.0,
            eps: 0.1,
        })
        .unwrap()
    }

    #[test]
    fn commerce_bound_by_hand() {
        let c = commerce();
        let b = deposit_lower_bound(&c.tree, &c.info, &c.honest, SecurityParams::new(100.0, 1).unwrap())
            .unwrap();
        assert_eq!(b.alpha, 3);
        // AU has rows (0, 50), (-100, 0), (100, 0): |AU|_2 = 100 sqrt(2).
        let au2 = 100.0 * sqrt(2.0);
        assert!((b.au_norm2 - au2).abs() < 1e-8);
        let expected = (100.0 * sqrt(2.0) + au2 / sqrt(6.0)) / 6.0;
        assert!((b.norm_bound - expected).abs() < 1e-8);
        assert!(b.conservative_bound <= b.norm_bound);
        assert!(b.delta_g > 0.0);
    }

    #[test]
    fn delta_term_is_linear() {
        let c = commerce();
        let at = |d: f64| {
            deposit_lower_bound(&c.tree, &c.info, &c.honest, SecurityParams::new(d, 1).unwrap()).unwrap()
        };
        let (b0, b1, b2) = (at(0.0), at(10.0), at(20.0));
        assert!(((b2.norm_bound - b0.norm_bound) - 2.0 * (b1.norm_bound - b0.norm_bound)).abs() < 1e-9);
        assert!(
            ((b2.conservative_bound - b0.conservative_bound)
                - 2.0 * (b1.conservative_bound - b0.conservative_bound))
                .abs()
                < 1e-9
        );
        assert_eq!(b0.au_norm2, b2.au_norm2);
    }

    #[test]
    fn per_player_product_matches_zero_scheme_slacks() {
        let c = commerce();
        let params = SecurityParams::new(7.0, 1).unwrap();
        let sys = build_constraints(&c.tree, &c.honest, params).unwrap();
        let au = sys.per_player_product(&c.tree.utility_matrix());
        let rep = verify(&c.tree, &c.info, &PaymentScheme::zeros(2, 3), &c.honest, params).unwrap();
        let slacks = sys.slacks(&rep.implemented);
        for (r, slack) in slacks.iter().enumerate() {
            let row_sum: f64 = au.row(r).iter().sum();
            assert!((row_sum - 7.0 - slack).abs() < 1e-12);
        }
    }

    #[test]
    fn one_leaf_has_no_bound() {
        let t = GameTree::new(vec!["P".to_string()], 1, NodeSpec::leaf("l", vec![1.0], vec![1.0])).unwrap();
        let info = InfoStructure::from_tree(&t, vec!["a".to_string()]).unwrap();
        let out = deposit_lower_bound(&t, &info, &StrategyProfile::new(), SecurityParams::new(1.0, 1).unwrap());
        assert_eq!(out, Err(Error::NoConstraints));
    }
}
