//! Delta-strong t-robust security of an intended profile, expressed as the
//! linear system `A * vec(E) >= e`.
//!
//! For every subgame, every coalition `C` of at most `t` players, every leaf
//! `j` the coalition can reach with positive probability (others following
//! the profile) outside the honest support, and every member `i` of `C`, one
//! row demands `sum_a w_a * E[i][a] - E[i][j] >= delta`, where `w` is the
//! honest leaf distribution of the subgame. Flat indices are `i * m + j`.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::game::{Choices, GameTree, NodeId, NodeKind, StrategyProfile};
use crate::info::{implemented_utilities, InfoStructure, PaymentScheme};
use crate::linalg::Matrix;
use crate::tol;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SecurityParams {
    /// Utility every deviating member must lose.
    pub delta: f64,
    /// Largest coalition size considered.
    pub t: usize,
}

impl SecurityParams {
    pub fn new(delta: f64, t: usize) -> Result<Self> {
        if !delta.is_finite() || delta < 0.0 {
            return Err(Error::BadParameters(format!("delta must be >= 0, got {delta}")));
        }
        if t == 0 {
            return Err(Error::BadParameters("coalition bound t must be >= 1".into()));
        }
        Ok(SecurityParams { delta, t })
    }

    /// Rejects `t` larger than the number of players.
    pub fn check_players(&self, players: usize) -> Result<()> {
        if self.t > players {
            return Err(Error::BadParameters(format!(
                "coalition bound t = {} exceeds {players} players",
                self.t
            )));
        }
        Ok(())
    }
}

/// One inequality `coefficients . vec(E) >= delta` and where it came from.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstraintRow {
    pub subgame: NodeId,
    pub coalition: Vec<usize>,
    pub player: usize,
    pub leaf: usize,
    /// Sparse coefficients `(flat index, value)`, sorted by index.
    pub coefficients: Vec<(usize, f64)>,
}

impl ConstraintRow {
    pub fn apply(&self, v: &[f64]) -> f64 {
        self.coefficients.iter().map(|&(k, a)| a * v[k]).sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConstraintSystem {
    pub players: usize,
    pub leaves: usize,
    pub delta: f64,
    pub rows: Vec<ConstraintRow>,
}

impl ConstraintSystem {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Dense `alpha x (n m)` matrix `A`.
    pub fn matrix(&self) -> Matrix {
        let mut a = Matrix::zeros(self.rows.len(), self.players * self.leaves);
        for (r, row) in self.rows.iter().enumerate() {
            for &(k, v) in &row.coefficients {
                a[(r, k)] = v;
            }
        }
        a
    }

    /// Right-hand side `e`, every entry `delta`.
    pub fn rhs(&self) -> Vec<f64> {
        vec![self.delta; self.rows.len()]
    }

    /// `A * v` for a row-major vectorized `n x m` matrix.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        self.rows.iter().map(|r| r.apply(v)).collect()
    }

    /// Per-row slack `A * vec(E) - delta`.
    pub fn slacks(&self, implemented: &Matrix) -> Vec<f64> {
        self.apply(implemented.as_slice())
            .into_iter()
            .map(|x| x - self.delta)
            .collect()
    }

    /// `alpha x n` matrix whose `(r, i)` entry is row `r` of `A` restricted
    /// to player `i`'s block, applied to that player's utility row.
    pub fn per_player_product(&self, utilities: &Matrix) -> Matrix {
        let m = self.leaves;
        let mut out = Matrix::zeros(self.rows.len(), self.players);
        for (r, row) in self.rows.iter().enumerate() {
            for &(k, a) in &row.coefficients {
                let (i, j) = (k / m, k % m);
                out[(r, i)] += a * utilities[(i, j)];
            }
        }
        out
    }
}

/// Leaves reachable with positive probability from `root` when members of
/// `coalition` may pick any move and everybody else follows `profile`.
pub fn inducible_leaves(
    tree: &GameTree,
    root: &str,
    coalition: &[usize],
    profile: &StrategyProfile,
) -> Result<BTreeSet<usize>> {
    let v = tree.node_index(root)?;
    let choices = tree.resolve(profile)?;
    let members = membership(tree.num_players(), coalition)?;
    let mut out = BTreeSet::new();
    collect_inducible(tree, v, &members, &choices, &mut out);
    Ok(out)
}

fn membership(players: usize, coalition: &[usize]) -> Result<Vec<bool>> {
    let mut members = vec![false; players];
    for &i in coalition {
        if i >= players {
            return Err(Error::BadParameters(format!(
                "coalition member {i} out of range for {players} players"
            )));
        }
        members[i] = true;
    }
    Ok(members)
}

fn collect_inducible(
    tree: &GameTree,
    v: NodeId,
    members: &[bool],
    choices: &Choices,
    out: &mut BTreeSet<usize>,
) {
    match &tree.node(v).kind {
        NodeKind::Leaf { leaf, .. } => {
            out.insert(*leaf);
        }
        NodeKind::Branch { owner, moves } => {
            if members[*owner] {
                for &(_, c) in moves {
                    collect_inducible(tree, c, members, choices, out);
                }
            } else {
                let pos = choices.at(v).expect("resolved profile covers every branch");
                collect_inducible(tree, moves[pos].1, members, choices, out);
            }
        }
        NodeKind::Chance { outcomes } => {
            for &(p, c) in outcomes {
                if p > 0.0 {
                    collect_inducible(tree, c, members, choices, out);
                }
            }
        }
    }
}

/// Coalitions of size `1..=t` over `n` players, by size then lexicographically.
pub fn coalitions(n: usize, t: usize) -> Vec<Vec<usize>> {
    fn extend(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            extend(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    for k in 1..=t.min(n) {
        extend(0, n, k, &mut Vec::new(), &mut out);
    }
    out
}

/// Builds the deduplicated constraint system for `(delta, t)`.
pub fn build_constraints(
    tree: &GameTree,
    profile: &StrategyProfile,
    params: SecurityParams,
) -> Result<ConstraintSystem> {
    let choices = tree.resolve(profile)?;
    let n = tree.num_players();
    let m = tree.num_leaves();
    let groups = coalitions(n, params.t);
    let mut seen: BTreeMap<Vec<(usize, u64)>, usize> = BTreeMap::new();
    let mut rows = Vec::new();

    for root in tree.subgame_roots() {
        let honest = tree.outcome_from(root, &choices);
        let support = honest.support();
        for coalition in &groups {
            let members = membership(n, coalition)?;
            let mut reach = BTreeSet::new();
            collect_inducible(tree, root, &members, &choices, &mut reach);
            for &j in reach.iter().filter(|j| honest.weights[**j] == 0.0) {
                for &i in coalition {
                    let mut coefficients: Vec<(usize, f64)> = support
                        .iter()
                        .map(|&a| (i * m + a, honest.weights[a]))
                        .collect();
                    coefficients.push((i * m + j, -1.0));
                    coefficients.sort_by_key(|&(k, _)| k);
                    let key = coefficients.iter().map(|&(k, a)| (k, a.to_bits())).collect();
                    // A repeated row is attributed to the innermost subgame
                    // that produces it with no larger a coalition.
                    match seen.get(&key) {
                        Some(&r) => {
                            let row: &mut ConstraintRow = &mut rows[r];
                            if row.subgame != root && coalition.len() <= row.coalition.len() {
                                row.subgame = root;
                                row.coalition = coalition.clone();
                            }
                        }
                        None => {
                            seen.insert(key, rows.len());
                            rows.push(ConstraintRow {
                                subgame: root,
                                coalition: coalition.clone(),
                                player: i,
                                leaf: j,
                                coefficients,
                            });
                        }
                    }
                }
            }
        }
    }

    Ok(ConstraintSystem {
        players: n,
        leaves: m,
        delta: params.delta,
        rows,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub row: usize,
    pub subgame: NodeId,
    pub coalition: Vec<usize>,
    pub player: usize,
    pub leaf: usize,
    /// `A_r * vec(E) - delta`; negative here.
    pub slack: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerifyReport {
    pub pass: bool,
    pub constraints: usize,
    pub violations: Vec<Violation>,
    /// Smallest slack over all rows, `inf` when there are none.
    pub min_slack: f64,
    pub implemented: Matrix,
}

/// Checks that the game augmented with `scheme` is delta-strong t-robust
/// secure for `profile`.
pub fn verify(
    tree: &GameTree,
    info: &InfoStructure,
    scheme: &PaymentScheme,
    profile: &StrategyProfile,
    params: SecurityParams,
) -> Result<VerifyReport> {
    if scheme.num_symbols() != info.num_symbols() {
        return Err(Error::DimensionMismatch {
            what: "payment scheme symbols",
            expected: info.num_symbols(),
            found: scheme.num_symbols(),
        });
    }
    let system = build_constraints(tree, profile, params)?;
    let implemented = implemented_utilities(&tree.utility_matrix(), scheme, info)?;
    Ok(check_system(&system, implemented))
}

/// Evaluates an already-built system against an implemented matrix.
pub fn check_system(system: &ConstraintSystem, implemented: Matrix) -> VerifyReport {
    let slacks = system.slacks(&implemented);
    let violations: Vec<Violation> = slacks
        .iter()
        .enumerate()
        .filter(|(_, &s)| s < -tol::UTILITY)
        .map(|(r, &slack)| {
            let row = &system.rows[r];
            Violation {
                row: r,
                subgame: row.subgame,
                coalition: row.coalition.clone(),
                player: row.player,
                leaf: row.leaf,
                slack,
            }
        })
        .collect();
    VerifyReport {
        pass: violations.is_empty(),
        constraints: system.len(),
        violations,
        min_slack: slacks.iter().copied().fold(f64::INFINITY, f64::min),
        implemented,
    }
}

/// `(n m) x (n s)` matrix with `vec(Lambda * Phi) = R * vec(Lambda)`: `n`
/// diagonal copies of `Phi^T`.
#[derive(Clone, Debug, PartialEq)]
pub struct LiftingMatrix(pub Matrix);

pub fn lifting_matrix(info: &InfoStructure, players: usize) -> LiftingMatrix {
    let phi = info.phi();
    let (s, m) = phi.shape();
    let mut r = Matrix::zeros(players * m, players * s);
    for i in 0..players {
        for j in 0..m {
            for k in 0..s {
                r[(i * m + j, i * s + k)] = phi[(k, j)];
            }
        }
    }
    LiftingMatrix(r)
}

/// Groups rows by the subgame they were generated in; used by reports.
pub fn rows_by_subgame(system: &ConstraintSystem) -> BTreeMap<NodeId, usize> {
    let mut out = BTreeMap::new();
    for row in &system.rows {
        *out.entry(row.subgame).or_insert(0) += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cases::{build_commerce, CommerceParams};
    use crate::game::NodeSpec;
    use alloc::string::ToString;

    fn commerce() -> crate::cases::CommerceCase {
        build_commerce(CommerceParams {
            x: 100.0,
            x_prime: 50.0,
            y: 150.0,
            eps: 0.1,
        })
        .unwrap()
    }

    fn set(v: &[usize]) -> BTreeSet<usize> {
        v.iter().copied().collect()
    }

    #[test]
    fn inducible_leaves_in_commerce() {
        let c = commerce();
        let (b, s) = (0, 1);
        assert_eq!(
            inducible_leaves(&c.tree, "seller", &[s], &c.honest).unwrap(),
            set(&[1, 3])
        );
        assert_eq!(inducible_leaves(&c.tree, "seller", &[], &c.honest).unwrap(), set(&[3]));
        assert_eq!(
            inducible_leaves(&c.tree, "buyer_sent", &[b], &c.honest).unwrap(),
            set(&[2, 3])
        );
        assert!(matches!(
            inducible_leaves(&c.tree, "ghost", &[b], &c.honest),
            Err(Error::UnknownNodeId(_))
        ));
    }

    #[test]
    fn commerce_has_three_rows() {
        let c = commerce();
        let sys = build_constraints(&c.tree, &c.honest, SecurityParams::new(100.0, 1).unwrap())
            .unwrap();
        assert_eq!(sys.len(), 3);
        let patterns: BTreeSet<Vec<(usize, i64)>> = sys
            .rows
            .iter()
            .map(|r| r.coefficients.iter().map(|&(k, a)| (k, a as i64)).collect())
            .collect();
        let expected: BTreeSet<Vec<(usize, i64)>> = [
            vec![(5, -1), (7, 1)], // seller: honest vs (not-send, reject)
            vec![(2, -1), (3, 1)], // buyer after send
            vec![(0, -1), (1, 1)], // buyer after not-send
        ]
        .into_iter()
        .collect();
        assert_eq!(patterns, expected);
        let a = sys.matrix();
        let buyer_sent = sys.rows.iter().position(|r| r.leaf == 2).unwrap();
        assert_eq!(a[(buyer_sent, 3)], 1.0);
        assert_eq!(a[(buyer_sent, 2)], -1.0);
        assert_eq!(sys.rhs(), vec![100.0; 3]);
        for r in 0..a.rows() {
            assert_eq!(a.row(r).iter().sum::<f64>(), 0.0);
        }
    }

    #[test]
    fn single_leaf_has_no_rows() {
        let t = GameTree::new(
            vec!["P".to_string()],
            1,
            NodeSpec::leaf("l", vec![0.0], vec![1.0]),
        )
        .unwrap();
        let sys = build_constraints(&t, &StrategyProfile::new(), SecurityParams::new(1.0, 1).unwrap())
            .unwrap();
        assert!(sys.is_empty());
    }

    #[test]
    fn commerce_verify_sharpness() {
        let c = commerce();
        let ok = verify(&c.tree, &c.info, &c.closed_form, &c.honest, SecurityParams::new(100.0, 1).unwrap())
            .unwrap();
        assert!(ok.pass);
        assert!(ok.min_slack.abs() < 1e-9);

        let bad = verify(&c.tree, &c.info, &c.closed_form, &c.honest, SecurityParams::new(100.01, 1).unwrap())
            .unwrap();
        assert!(!bad.pass);
        assert_eq!(bad.violations.len(), 3);
        for v in &bad.violations {
            assert!((v.slack + 0.01).abs() < 1e-9);
        }
    }

    #[test]
    fn commerce_without_payments_fails_at_buyer_node() {
        let c = commerce();
        let zero = PaymentScheme::zeros(2, 3);
        let rep = verify(&c.tree, &c.info, &zero, &c.honest, SecurityParams::new(0.0, 1).unwrap())
            .unwrap();
        assert!(!rep.pass);
        assert_eq!(rep.violations.len(), 1);
        assert_eq!(rep.violations[0].player, 0);
        assert_eq!(rep.violations[0].leaf, 2);
        assert!((rep.violations[0].slack + 100.0).abs() < 1e-9);
    }

    #[test]
    fn lifting_matrix_layout() {
        let id = InfoStructure::new(vec!["a".into(), "b".into()], Matrix::identity(2)).unwrap();
        assert_eq!(lifting_matrix(&id, 1).0, Matrix::identity(2));

        let c = commerce();
        let r = lifting_matrix(&c.info, 2).0;
        assert_eq!(r.shape(), (8, 6));
        assert!((r[(2, 2)] - 0.9).abs() < 1e-15);

        let lambda = c.closed_form.matrix();
        let direct = lambda.mul(c.info.phi()).unwrap();
        let lifted = r.mul_vec(lambda.as_slice()).unwrap();
        for (a, b) in direct.as_slice().iter().zip(&lifted) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn coalition_enumeration_order() {
        assert_eq!(
            coalitions(3, 2),
            vec![vec![0], vec![1], vec![2], vec![0, 1], vec![0, 2], vec![1, 2]]
        );
        assert_eq!(coalitions(2, 5).len(), 3);
    }

    #[test]
    fn params_validation() {
        assert!(SecurityParams::new(-1.0, 1).is_err());
        assert!(SecurityParams::new(1.0, 0).is_err());
        assert!(SecurityParams::new(0.0, 3).unwrap().check_players(2).is_err());
    }
}
