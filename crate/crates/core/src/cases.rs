//! Worked examples: decentralized commerce with a noisy oracle, and rational
//! multi-party computation on top of a covert protocol with public
//! verifiability.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::game::{GameTree, NodeSpec, StrategyProfile};
use crate::info::{scheme_for_target, InfoStructure, PaymentScheme};
use crate::linalg::Matrix;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CommerceParams {
    /// Price.
    pub x: f64,
    /// Seller's value of the good.
    pub x_prime: f64,
    /// Buyer's value of the good.
    pub y: f64,
    /// Oracle error probability.
    pub eps: f64,
}

impl CommerceParams {
    pub fn validate(&self) -> Result<()> {
        let CommerceParams { x, x_prime, y, eps } = *self;
        if ![x, x_prime, y, eps].iter().all(|v| v.is_finite()) {
            return Err(Error::BadParameters("commerce parameters must be finite".into()));
        }
        if !(y > x && x > x_prime && x_prime > 0.0) {
            return Err(Error::BadParameters(format!(
                "need y > x > x' > 0, got y = {y}, x = {x}, x' = {x_prime}"
            )));
        }
        if !(eps > 0.0 && eps < 0.5) {
            return Err(Error::BadParameters(format!("need 0 < eps < 1/2, got {eps}")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CommerceCase {
    pub params: CommerceParams,
    pub tree: GameTree,
    pub info: InfoStructure,
    pub honest: StrategyProfile,
    pub target: Matrix,
    pub closed_form: PaymentScheme,
}

impl CommerceCase {
    /// Profile with the given moves at the seller, the buyer after sending,
    /// and the buyer after not sending.
    pub fn profile(seller: &str, after_send: &str, after_not_send: &str) -> StrategyProfile {
        StrategyProfile::new()
            .with("seller", seller)
            .with("buyer_sent", after_send)
            .with("buyer_not_sent", after_not_send)
    }
}

/// Players `[B, S]`, alphabet `[top, bot_B, bot_S]`. The seller moves first;
/// leaves in order: not sent and paid, not sent and refused, sent and
/// refused, sent and paid.
pub fn build_commerce(p: CommerceParams) -> Result<CommerceCase> {
    p.validate()?;
    let CommerceParams { x, x_prime: xp, y, eps } = p;
    let top = vec![1.0, 0.0, 0.0];
    let blame_b = vec![0.0, eps, 1.0 - eps];
    let blame_s = vec![0.0, 1.0 - eps, eps];
    let root = NodeSpec::branch(
        "seller",
        1,
        vec![
            (
                "not_send",
                NodeSpec::branch(
                    "buyer_not_sent",
                    0,
                    vec![
                        ("accept", NodeSpec::leaf("not_send_accept", vec![-x, x], top.clone())),
                        ("reject", NodeSpec::leaf("not_send_reject", vec![0.0, 0.0], blame_s)),
                    ],
                ),
            ),
            (
                "send",
                NodeSpec::branch(
                    "buyer_sent",
                    0,
                    vec![
                        ("reject", NodeSpec::leaf("send_reject", vec![y, -xp], blame_b)),
                        ("accept", NodeSpec::leaf("send_accept", vec![y - x, x - xp], top)),
                    ],
                ),
            ),
        ],
    );
    let tree = GameTree::new(vec!["B".to_string(), "S".to_string()], 3, root)?;
    let alphabet = vec!["top".to_string(), "bot_B".to_string(), "bot_S".to_string()];
    let info = InfoStructure::from_tree(&tree, alphabet)?;
    let honest = CommerceCase::profile("send", "accept", "reject");
    let target = Matrix::from_rows(&[
        [-x, 0.0, y - 2.0 * x, y - x],
        [x, -xp, -xp, x - xp],
    ])?;
    let d = 1.0 - 2.0 * eps;
    let closed_form = PaymentScheme::new(Matrix::from_rows(&[
        [0.0, -2.0 * eps * x / d, 2.0 * (1.0 - eps) * x / d],
        [0.0, (1.0 - eps) * xp / d, -eps * xp / d],
    ])?)?;
    Ok(CommerceCase {
        params: p,
        tree,
        info,
        honest,
        target,
        closed_form,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct PvcParams {
    /// Number of parties, at least 2.
    pub n: usize,
    /// Deterrence factor: probability a cheater is caught.
    pub eps: f64,
    /// Utility of cheating undetected.
    pub u_plus: f64,
    /// Utility of the other parties when someone cheats undetected.
    pub u_minus: f64,
    pub delta: f64,
    /// Per-party cheating gains overriding `u_plus`.
    pub u_plus_each: Option<Vec<f64>>,
}

impl PvcParams {
    pub fn new(n: usize, eps: f64, u_plus: f64, u_minus: f64, delta: f64) -> Self {
        PvcParams {
            n,
            eps,
            u_plus,
            u_minus,
            delta,
            u_plus_each: None,
        }
    }

    pub fn gain(&self, i: usize) -> f64 {
        match &self.u_plus_each {
            Some(g) => g[i],
            None => self.u_plus,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::BadParameters(format!("need n >= 2 parties, got {}", self.n)));
        }
        if !(self.eps > 0.0 && self.eps <= 1.0) {
            return Err(Error::BadParameters(format!("need 0 < eps <= 1, got {}", self.eps)));
        }
        if !(self.delta.is_finite() && self.delta >= 0.0) {
            return Err(Error::BadParameters(format!("need delta >= 0, got {}", self.delta)));
        }
        if let Some(g) = &self.u_plus_each {
            if g.len() != self.n {
                return Err(Error::DimensionMismatch {
                    what: "per-party cheating gains",
                    expected: self.n,
                    found: g.len(),
                });
            }
        }
        for i in 0..self.n {
            let up = self.gain(i);
            if !(up.is_finite() && self.u_minus.is_finite() && up > 1.0 && self.u_minus < 0.0) {
                return Err(Error::BadParameters(format!(
                    "need u+ > 1 > 0 > u-, got u+ = {up}, u- = {}",
                    self.u_minus
                )));
            }
        }
        Ok(())
    }
}

/// Column sums of the derived scheme and both self-containment thresholds
/// (homogeneous gains use `u_plus`).
#[derive(Clone, Debug, PartialEq)]
pub struct PvcSelfContainment {
    pub column_sums: Vec<f64>,
    pub self_contained: bool,
    /// `-(u+ + (n-1) u-)`.
    pub gross_threshold: f64,
    /// `-(1-eps)(u+ + (n-1) u-)`, which matches the collapsed utilities.
    pub net_threshold: f64,
    pub meets_gross: bool,
    pub meets_net: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PvcCase {
    pub params: PvcParams,
    pub tree: GameTree,
    pub info: InfoStructure,
    pub honest: StrategyProfile,
    pub target: Matrix,
    pub lambda: PaymentScheme,
    pub self_containment: PvcSelfContainment,
}

/// Symbol names `top, abort_1, cheat_1, ..., abort_n, cheat_n`.
pub fn pvc_alphabet(n: usize) -> Vec<String> {
    let mut out = vec!["top".to_string()];
    for i in 1..=n {
        out.push(format!("abort_{i}"));
        out.push(format!("cheat_{i}"));
    }
    out
}

fn pvc_symbol(s: usize, k: usize, p: f64) -> Vec<f64> {
    let mut v = vec![0.0; s];
    v[k] = p;
    v
}

/// Parties move in turn; each may abort, cheat, or continue honestly.
/// `collapsed` replaces each detection lottery by its expected-utility leaf.
fn pvc_tree(p: &PvcParams, collapsed: bool) -> Result<GameTree> {
    let n = p.n;
    let s = 2 * n + 1;
    let eps = p.eps;
    let mut node = NodeSpec::leaf("honest", vec![1.0; n], pvc_symbol(s, 0, 1.0));
    for i in (0..n).rev() {
        let abort = NodeSpec::leaf(
            format!("abort_{}", i + 1),
            vec![0.0; n],
            pvc_symbol(s, 1 + 2 * i, 1.0),
        );
        let undetected: Vec<f64> = (0..n)
            .map(|j| if j == i { p.gain(i) } else { p.u_minus })
            .collect();
        let cheat = if collapsed {
            let mut e = pvc_symbol(s, 2 + 2 * i, eps);
            e[0] = 1.0 - eps;
            NodeSpec::leaf(
                format!("cheat_{}", i + 1),
                undetected.iter().map(|u| (1.0 - eps) * u).collect(),
                e,
            )
        } else {
            NodeSpec::chance(
                format!("nature_{}", i + 1),
                vec![
                    (
                        eps,
                        NodeSpec::leaf(
                            format!("cheat_{}_caught", i + 1),
                            vec![0.0; n],
                            pvc_symbol(s, 2 + 2 * i, 1.0),
                        ),
                    ),
                    (
                        1.0 - eps,
                        NodeSpec::leaf(
                            format!("cheat_{}_undetected", i + 1),
                            undetected,
                            pvc_symbol(s, 0, 1.0),
                        ),
                    ),
                ],
            )
        };
        node = NodeSpec::branch(
            format!("P{}", i + 1),
            i,
            vec![("abort", abort), ("cheat", cheat), ("honest", node)],
        );
    }
    let players = (1..=n).map(|i| format!("P{i}")).collect();
    GameTree::new(players, s, node)
}

/// Target for the collapsed tree: each party loses `delta` on its own abort
/// and cheat leaves, is unaffected by others' deviations, and keeps 1 on
/// the honest leaf.
pub fn pvc_target(n: usize, delta: f64) -> Matrix {
    let m = 2 * n + 1;
    Matrix::from_fn(n, m, |i, j| {
        if j == m - 1 {
            1.0
        } else if j / 2 == i {
            -delta
        } else {
            0.0
        }
    })
}

pub fn pvc_honest(n: usize) -> StrategyProfile {
    (1..=n).map(|i| (format!("P{i}"), "honest".to_string())).collect()
}

/// Collapsed PVC game with the scheme derived by solving
/// `Lambda * Phi = U - E`.
pub fn build_pvc(p: &PvcParams) -> Result<PvcCase> {
    p.validate()?;
    let tree = pvc_tree(p, true)?;
    let info = InfoStructure::from_tree(&tree, pvc_alphabet(p.n))?;
    let target = pvc_target(p.n, p.delta);
    let lambda = scheme_for_target(&tree.utility_matrix(), &target, &info)?;
    let column_sums = lambda.matrix().column_sums();
    let self_contained = column_sums.iter().all(|c| *c >= -crate::tol::COLUMN_SUM);
    let base = p.u_plus + (p.n as f64 - 1.0) * p.u_minus;
    let gross_threshold = -base;
    let net_threshold = -(1.0 - p.eps) * base;
    let self_containment = PvcSelfContainment {
        column_sums,
        self_contained,
        gross_threshold,
        net_threshold,
        meets_gross: p.delta >= gross_threshold,
        meets_net: p.delta >= net_threshold,
    };
    Ok(PvcCase {
        params: p.clone(),
        honest: pvc_honest(p.n),
        tree,
        info,
        target,
        lambda,
        self_containment,
    })
}

/// PVC game with explicit detection lotteries; leaves per party are
/// abort, caught, undetected. Shares the alphabet (and thus schemes) of the
/// collapsed game.
pub fn build_pvc_uncollapsed(p: &PvcParams) -> Result<(GameTree, InfoStructure, StrategyProfile)> {
    p.validate()?;
    let tree = pvc_tree(p, false)?;
    let info = InfoStructure::from_tree(&tree, pvc_alphabet(p.n))?;
    Ok((tree, info, pvc_honest(p.n)))
}
