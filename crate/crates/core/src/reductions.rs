//! Adversarial level agreements and the gadget game encoding a linear
//! feasibility problem `A x >= b, x >= 0` as payment-scheme synthesis.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::game::{GameTree, NodeSpec, StrategyProfile};
use crate::info::{InfoStructure, PaymentScheme};
use crate::linalg::Matrix;
use crate::synthesis::CostVector;

/// Symbol names `top, bot_1, ..., bot_n`.
pub fn blame_alphabet(n: usize) -> Vec<String> {
    let mut out = vec!["top".to_string()];
    out.extend((1..=n).map(|i| format!("bot_{i}")));
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlaSpec {
    pub damages: Vec<f64>,
}

/// Player `i` pays `d_i` when `bot_i` is observed and nothing otherwise.
pub fn ala_scheme(spec: &AlaSpec) -> Result<(Vec<String>, PaymentScheme)> {
    let n = spec.damages.len();
    if let Some(d) = spec.damages.iter().find(|d| !d.is_finite()) {
        return Err(Error::BadParameters(format!("damage {d} is not finite")));
    }
    let lambda = Matrix::from_fn(n, n + 1, |i, k| if k == i + 1 { spec.damages[i] } else { 0.0 });
    Ok((blame_alphabet(n), PaymentScheme::new(lambda)?))
}

pub const SABOTEUR: usize = 0;
pub const INEQUALITY: usize = 1;
pub const LIQUIDITY: usize = 2;

#[derive(Clone, Debug, PartialEq)]
pub struct LpGadgetInstance {
    pub tree: GameTree,
    pub info: InfoStructure,
    pub intended: StrategyProfile,
    pub a: Matrix,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    /// `A` with every row divided by its sum.
    pub a_bar: Matrix,
    pub b_bar: Vec<f64>,
}

impl LpGadgetInstance {
    pub fn num_vars(&self) -> usize {
        self.a.cols()
    }

    /// Whether `Lambda[i][k]` must be zero: the saboteur's row and the `top`
    /// column.
    pub fn forced_zero(&self, player: usize, symbol: usize) -> bool {
        player == SABOTEUR || symbol == 0
    }

    /// Infinite cost on the forced-zero entries, `c` on the liquidity row
    /// and zero on the inequality row.
    pub fn cost_vector(&self) -> CostVector {
        let s = self.num_vars() + 1;
        let entries = (0..3 * s)
            .map(|idx| {
                let (i, k) = (idx / s, idx % s);
                if self.forced_zero(i, k) {
                    None
                } else if i == LIQUIDITY {
                    Some(self.c[k - 1])
                } else {
                    Some(0.0)
                }
            })
            .collect();
        CostVector::new(3, s, entries).expect("consistent dimensions")
    }
}

/// Builds the gadget game. Requires `A >= 0` with positive row sums.
pub fn lp_to_game(a: &Matrix, b: &[f64], c: &[f64]) -> Result<LpGadgetInstance> {
    let (rows, vars) = a.shape();
    if rows == 0 || vars == 0 {
        return Err(Error::PreconditionViolated("A must have at least one row and column".into()));
    }
    if b.len() != rows {
        return Err(Error::DimensionMismatch {
            what: "length of b",
            expected: rows,
            found: b.len(),
        });
    }
    if c.len() != vars {
        return Err(Error::DimensionMismatch {
            what: "length of c",
            expected: vars,
            found: c.len(),
        });
    }
    if !a.is_finite() || b.iter().chain(c).any(|v| !v.is_finite()) {
        return Err(Error::PreconditionViolated("LP data must be finite".into()));
    }
    let mut a_bar = Matrix::zeros(rows, vars);
    let mut b_bar = Vec::with_capacity(rows);
    for i in 0..rows {
        if let Some(k) = a.row(i).iter().position(|&v| v < 0.0) {
            return Err(Error::PreconditionViolated(format!(
                "A[{i}][{k}] = {} is negative",
                a[(i, k)]
            )));
        }
        let sum: f64 = a.row(i).iter().sum();
        if sum <= 0.0 {
            return Err(Error::PreconditionViolated(format!("row {i} of A sums to zero")));
        }
        for k in 0..vars {
            a_bar[(i, k)] = a[(i, k)] / sum;
        }
        b_bar.push(b[i] / sum);
    }

    let s = vars + 1;
    let top: Vec<f64> = (0..s).map(|k| if k == 0 { 1.0 } else { 0.0 }).collect();
    let mut moves: Vec<(String, NodeSpec)> = Vec::with_capacity(rows + 1);
    for i in 0..rows {
        let name = format!("gadget_{}", i + 1);
        let mut blame = vec![0.0];
        blame.extend_from_slice(a_bar.row(i));
        let gadget = NodeSpec::branch(
            name.clone(),
            INEQUALITY,
            vec![
                ("left", NodeSpec::leaf(format!("{name}_left"), vec![1.0, b_bar[i], 0.0], top.clone())),
                ("right", NodeSpec::leaf(format!("{name}_right"), vec![0.0; 3], blame)),
            ],
        );
        moves.push((name, gadget));
    }
    moves.push(("target".to_string(), NodeSpec::leaf("target", vec![0.0; 3], top)));
    let root = NodeSpec::Branch {
        id: "P1".to_string(),
        owner: SABOTEUR,
        moves,
    };
    let players = vec!["P1".to_string(), "P2".to_string(), "P3".to_string()];
    let tree = GameTree::new(players, s, root)?;
    let info = InfoStructure::from_tree(&tree, blame_alphabet(vars))?;
    let mut intended = StrategyProfile::new().with("P1", "gadget_1");
    for i in 1..=rows {
        intended.insert(format!("gadget_{i}"), "right");
    }
    Ok(LpGadgetInstance {
        tree,
        info,
        intended,
        a: a.clone(),
        b: b.to_vec(),
        c: c.to_vec(),
        a_bar,
        b_bar,
    })
}

/// The inequality player is compensated `x_k` on `bot_k`, funded by the
/// liquidity player.
pub fn scheme_from_point(inst: &LpGadgetInstance, x: &[f64]) -> Result<PaymentScheme> {
    let n = inst.num_vars();
    if x.len() != n {
        return Err(Error::DimensionMismatch {
            what: "length of x",
            expected: n,
            found: x.len(),
        });
    }
    if let Some((index, &value)) = x.iter().enumerate().find(|(_, v)| !(**v >= 0.0)) {
        return Err(Error::NegativeComponent { index, value });
    }
    let mut lambda = Matrix::zeros(3, n + 1);
    for (k, &v) in x.iter().enumerate() {
        lambda[(INEQUALITY, k + 1)] = -v;
        lambda[(LIQUIDITY, k + 1)] = v;
    }
    PaymentScheme::new(lambda)
}

/// Reads `x_k = max(0, -Lambda[P2][bot_k])` after checking the forced
/// zeros.
pub fn point_from_scheme(inst: &LpGadgetInstance, scheme: &PaymentScheme) -> Result<Vec<f64>> {
    let n = inst.num_vars();
    let l = scheme.matrix();
    if l.shape() != (3, n + 1) {
        return Err(Error::DimensionMismatch {
            what: "payment scheme entries",
            expected: 3 * (n + 1),
            found: l.rows() * l.cols(),
        });
    }
    for player in 0..3 {
        for symbol in 0..=n {
            let value = l[(player, symbol)];
            if inst.forced_zero(player, symbol) && value.abs() > 1e-9 {
                return Err(Error::PatternViolated {
                    player,
                    symbol,
                    value,
                });
            }
        }
    }
    Ok((1..=n).map(|k| (-l[(INEQUALITY, k)]).max(0.0)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::security::{verify, SecurityParams};

    #[test]
    fn ala_examples() {
        let (alpha, s) = ala_scheme(&AlaSpec { damages: vec![5.0, 7.0] }).unwrap();
        assert_eq!(alpha, vec!["top", "bot_1", "bot_2"]);
        assert_eq!(s.matrix().to_rows(), vec![vec![0.0, 5.0, 0.0], vec![0.0, 0.0, 7.0]]);

        let (_, s) = ala_scheme(&AlaSpec { damages: vec![0.0, 0.0] }).unwrap();
        assert_eq!(s.matrix().max_abs(), 0.0);

        let (_, s) = ala_scheme(&AlaSpec { damages: vec![-1.0] }).unwrap();
        assert_eq!(s.matrix().to_rows(), vec![vec![0.0, -1.0]]);
        assert!(!s.diagnostics().self_contained);
    }

    fn unit() -> LpGadgetInstance {
        lp_to_game(&Matrix::from_rows(&[[1.0]]).unwrap(), &[1.0], &[1.0]).unwrap()
    }

    #[test]
    fn single_gadget_layout() {
        let inst = unit();
        let u = inst.tree.utility_matrix();
        assert_eq!(u.column(0), vec![1.0, 1.0, 0.0]);
        assert_eq!(inst.info.phi().column(1), vec![0.0, 1.0]);
        assert_eq!(inst.tree.num_leaves(), 3);

        let inst = lp_to_game(&Matrix::from_rows(&[[1.0, 1.0]]).unwrap(), &[2.0], &[0.0, 0.0]).unwrap();
        assert_eq!(inst.a_bar.row(0), &[0.5, 0.5]);
        assert_eq!(inst.b_bar, vec![1.0]);
    }

    #[test]
    fn preconditions() {
        let neg = lp_to_game(&Matrix::from_rows(&[[-1.0]]).unwrap(), &[1.0], &[1.0]);
        assert!(matches!(neg, Err(Error::PreconditionViolated(_))));
        let zero = lp_to_game(&Matrix::from_rows(&[[0.0, 0.0]]).unwrap(), &[1.0], &[1.0, 1.0]);
        assert!(matches!(zero, Err(Error::PreconditionViolated(_))));
    }

    #[test]
    fn feasibility_matches_verification() {
        let inst = unit();
        let p = SecurityParams::new(0.0, 1).unwrap();
        let check = |x: f64| {
            let s = scheme_from_point(&inst, &[x]).unwrap();
            verify(&inst.tree, &inst.info, &s, &inst.intended, p).unwrap().pass
        };
        assert!(check(1.0));
        assert!(check(3.0));
        assert!(!check(0.5));
        let s = scheme_from_point(&inst, &[1.0]).unwrap();
        assert_eq!(s.matrix().to_rows(), vec![vec![0.0, 0.0], vec![0.0, -1.0], vec![0.0, 1.0]]);
        assert!(s.diagnostics().zero_inflation);
        assert_eq!(scheme_from_point(&inst, &[0.0]).unwrap().matrix().max_abs(), 0.0);
    }

    #[test]
    fn point_extraction() {
        let inst = unit();
        let mk = |v: f64| PaymentScheme::new(Matrix::from_rows(&[[0.0, 0.0], [0.0, v], [0.0, 0.0]]).unwrap()).unwrap();
        assert_eq!(point_from_scheme(&inst, &mk(-1.0)).unwrap(), vec![1.0]);
        assert_eq!(point_from_scheme(&inst, &mk(2.0)).unwrap(), vec![0.0]);
        let s = scheme_from_point(&inst, &[0.75]).unwrap();
        assert_eq!(point_from_scheme(&inst, &s).unwrap(), vec![0.75]);
        let bad = PaymentScheme::new(Matrix::from_rows(&[[0.0, 1.0], [0.0, 0.0], [0.0, 0.0]]).unwrap()).unwrap();
        assert!(matches!(
            point_from_scheme(&inst, &bad),
            Err(Error::PatternViolated { player: 0, symbol: 1, .. })
        ));
        assert!(matches!(
            scheme_from_point(&inst, &[-0.1]),
            Err(Error::NegativeComponent { index: 0, .. })
        ));
    }

    #[test]
    fn cost_layout() {
        let inst = lp_to_game(&Matrix::from_rows(&[[1.0, 2.0]]).unwrap(), &[1.0], &[3.0, 4.0]).unwrap();
        let c = inst.cost_vector();
        assert_eq!(
            c.entries(),
            &[None, None, None, None, Some(0.0), Some(0.0), None, Some(3.0), Some(4.0)]
        );
    }
}
