//! Random instances and brute-force oracles for payscheme tests.
//!
//! The oracles deliberately avoid the library's own traversal and linear
//! algebra: deviations are found by enumerating every pure strategy of a
//! coalition, and LP optima by enumerating vertices of a boxed polytope.

use std::collections::BTreeSet;

use payscheme_core::lp::LinearProgram;
use payscheme_core::{GameTree, InfoStructure, Matrix, NodeKind, NodeSpec, StrategyProfile};
use rand::seq::SliceRandom;
use rand::Rng;

pub use rand_chacha::ChaCha8Rng;
pub use rand::SeedableRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random pdf with small integer weights, at least one positive.
pub fn random_pdf<R: Rng>(rng: &mut R, len: usize) -> Vec<f64> {
    loop {
        let w: Vec<f64> = (0..len).map(|_| rng.gen_range(0..4) as f64).collect();
        let total: f64 = w.iter().sum();
        if total > 0.0 {
            return w.into_iter().map(|v| v / total).collect();
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct TreeConfig {
    pub max_nodes: usize,
    pub max_players: usize,
    pub symbols: usize,
    pub chance: bool,
}

impl Default for TreeConfig {
    fn default() -> Self {
        TreeConfig {
            max_nodes: 12,
            max_players: 3,
            symbols: 3,
            chance: true,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RandomGame {
    pub tree: GameTree,
    pub info: InfoStructure,
    pub profile: StrategyProfile,
}

struct Builder<'a, R> {
    rng: &'a mut R,
    cfg: TreeConfig,
    players: usize,
    next: usize,
}

impl<R: Rng> Builder<'_, R> {
    fn id(&mut self, prefix: &str) -> String {
        self.next += 1;
        format!("{prefix}{}", self.next)
    }

    fn leaf(&mut self) -> NodeSpec {
        let u = (0..self.players).map(|_| self.rng.gen_range(-5..=5) as f64).collect();
        let e = random_pdf(self.rng, self.cfg.symbols);
        let id = self.id("l");
        NodeSpec::leaf(id, u, e)
    }

    /// A subtree using at most `budget` nodes.
    fn node(&mut self, budget: usize) -> (NodeSpec, usize) {
        if budget < 3 || self.rng.gen_bool(0.3) {
            return (self.leaf(), 1);
        }
        let arity = if budget >= 4 { self.rng.gen_range(2..=3) } else { 2 };
        let chance = self.cfg.chance && self.rng.gen_bool(0.25);
        let mut used = 1;
        let mut kids = Vec::new();
        for k in 0..arity {
            let reserve = arity - k - 1;
            let avail = budget - used - reserve;
            let (child, n) = self.node(avail);
            used += n;
            kids.push(child);
        }
        if chance {
            let p = random_pdf(self.rng, arity);
            let outcomes = p.into_iter().zip(kids).collect();
            (NodeSpec::chance(self.id("c"), outcomes), used)
        } else {
            let owner = self.rng.gen_range(0..self.players);
            let names = ["a", "b", "c"];
            let moves = names.iter().copied().zip(kids).collect();
            (NodeSpec::branch(self.id("b"), owner, moves), used)
        }
    }
}

/// Random perfect-information game with a random pure profile.
pub fn random_game<R: Rng>(rng: &mut R, cfg: TreeConfig) -> RandomGame {
    let players = rng.gen_range(1..=cfg.max_players);
    let mut b = Builder {
        rng,
        cfg,
        players,
        next: 0,
    };
    let (root, _) = b.node(cfg.max_nodes);
    let names = (0..players).map(|i| format!("P{i}")).collect();
    let tree = GameTree::new(names, cfg.symbols, root).expect("generated tree is valid");
    let alphabet = (0..cfg.symbols).map(|k| format!("s{k}")).collect();
    let info = InfoStructure::from_tree(&tree, alphabet).expect("generated pdfs are valid");
    let profile = random_profile(rng, &tree);
    RandomGame { tree, info, profile }
}

pub fn random_profile<R: Rng>(rng: &mut R, tree: &GameTree) -> StrategyProfile {
    let mut p = StrategyProfile::new();
    for node in tree.nodes() {
        if let NodeKind::Branch { moves, .. } = &node.kind {
            let (name, _) = moves.choose(rng).expect("branches have moves");
            p.insert(node.id.clone(), name.clone());
        }
    }
    p
}

/// Replaces the emission pdfs of `tree` with the columns of `phi`.
pub fn with_emissions(tree: &GameTree, phi: &Matrix) -> GameTree {
    fn rebuild(spec: NodeSpec, phi: &Matrix, next: &mut usize) -> NodeSpec {
        match spec {
            NodeSpec::Leaf { id, utilities, .. } => {
                let e = phi.column(*next);
                *next += 1;
                NodeSpec::Leaf {
                    id,
                    utilities,
                    emission: e,
                }
            }
            NodeSpec::Branch { id, owner, moves } => NodeSpec::Branch {
                id,
                owner,
                moves: moves.into_iter().map(|(m, c)| (m, rebuild(c, phi, next))).collect(),
            },
            NodeSpec::Chance { id, outcomes } => NodeSpec::Chance {
                id,
                outcomes: outcomes.into_iter().map(|(p, c)| (p, rebuild(c, phi, next))).collect(),
            },
        }
    }
    let spec = rebuild(tree.to_spec(tree.root()), phi, &mut 0);
    GameTree::new(tree.players().to_vec(), phi.rows(), spec).expect("same shape")
}

/// `game` with a fresh left-invertible `m x m` emission matrix.
pub fn with_full_rank_emissions<R: Rng>(rng: &mut R, game: RandomGame) -> RandomGame {
    let m = game.tree.num_leaves();
    let phi = full_rank_phi(rng, m, m);
    let tree = with_emissions(&game.tree, &phi);
    let alphabet = (0..m).map(|k| format!("s{k}")).collect();
    let info = InfoStructure::from_tree(&tree, alphabet).expect("valid pdfs");
    RandomGame {
        tree,
        info,
        profile: game.profile,
    }
}

/// Column-stochastic `s x m` matrix with entries bounded away from rank
/// deficiency: a dominant diagonal plus random noise (requires `s >= m`).
pub fn full_rank_phi<R: Rng>(rng: &mut R, s: usize, m: usize) -> Matrix {
    assert!(s >= m);
    let mut phi = Matrix::from_fn(s, m, |k, j| if k == j { 2.0 + rng.gen::<f64>() } else { rng.gen::<f64>() * 0.5 });
    normalize_columns(&mut phi);
    phi
}

/// Column-stochastic `s x m` matrix of rank below `m`: the last column is a
/// convex combination of the first two, or a copy of the first when `m = 2`.
pub fn rank_deficient_phi<R: Rng>(rng: &mut R, s: usize, m: usize) -> Matrix {
    assert!(m >= 2);
    let mut phi = Matrix::from_fn(s, m, |_, _| rng.gen::<f64>() + 0.01);
    normalize_columns(&mut phi);
    let w = if m == 2 { 1.0 } else { rng.gen_range(0.2..0.8) };
    for k in 0..s {
        phi[(k, m - 1)] = w * phi[(k, 0)] + (1.0 - w) * phi[(k, 1)];
    }
    phi
}

fn normalize_columns(phi: &mut Matrix) {
    for j in 0..phi.cols() {
        let total: f64 = (0..phi.rows()).map(|k| phi[(k, j)]).sum();
        for k in 0..phi.rows() {
            phi[(k, j)] /= total;
        }
    }
}

/// Leaf distribution of the subgame at `v` when `strategy` fixes every
/// branch move (by arena id).
fn distribution(tree: &GameTree, v: usize, strategy: &[usize], out: &mut Vec<f64>, p: f64) {
    match &tree.node(v).kind {
        NodeKind::Leaf { leaf, .. } => out[*leaf] += p,
        NodeKind::Branch { moves, .. } => distribution(tree, moves[strategy[v]].1, strategy, out, p),
        NodeKind::Chance { outcomes } => {
            for &(q, c) in outcomes {
                distribution(tree, c, strategy, out, p * q);
            }
        }
    }
}

fn descendants(tree: &GameTree, v: usize, out: &mut Vec<usize>) {
    out.push(v);
    for c in tree.node(v).children() {
        descendants(tree, c, out);
    }
}

/// Rows `(flat index, coefficient)` with coefficients rounded to 1e-9, for
/// set comparison with the library's constraint builder.
pub type RowKey = Vec<(usize, i64)>;

pub fn row_key(coefficients: &[(usize, f64)]) -> RowKey {
    let mut key: RowKey = coefficients
        .iter()
        .map(|&(k, a)| (k, (a * 1e9).round() as i64))
        .filter(|&(_, a)| a != 0)
        .collect();
    key.sort();
    key
}

/// Security rows by brute force: every pure strategy of every coalition of
/// size at most `t` in every subgame.
pub fn brute_force_rows(tree: &GameTree, profile: &StrategyProfile, t: usize) -> BTreeSet<RowKey> {
    let n = tree.num_players();
    let m = tree.num_leaves();
    let nodes = tree.nodes();
    let mut base = vec![0usize; nodes.len()];
    for (v, node) in nodes.iter().enumerate() {
        if let NodeKind::Branch { moves, .. } = &node.kind {
            let chosen = profile.get(&node.id).expect("total profile");
            base[v] = moves.iter().position(|(name, _)| name == chosen).expect("valid move");
        }
    }
    let mut coalitions: Vec<Vec<usize>> = Vec::new();
    for mask in 1u32..(1 << n) {
        let members: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        if members.len() <= t {
            coalitions.push(members);
        }
    }

    let mut rows = BTreeSet::new();
    for v in 0..nodes.len() {
        if nodes[v].is_leaf() {
            continue;
        }
        let mut honest = vec![0.0; m];
        distribution(tree, v, &base, &mut honest, 1.0);
        let mut sub = Vec::new();
        descendants(tree, v, &mut sub);
        for c in &coalitions {
            let free: Vec<(usize, usize)> = sub
                .iter()
                .filter_map(|&w| match &nodes[w].kind {
                    NodeKind::Branch { owner, moves } if c.contains(owner) => Some((w, moves.len())),
                    _ => None,
                })
                .collect();
            let mut reach = BTreeSet::new();
            let mut digits = vec![0usize; free.len()];
            loop {
                let mut s = base.clone();
                for (&(w, _), &d) in free.iter().zip(&digits) {
                    s[w] = d;
                }
                let mut dist = vec![0.0; m];
                distribution(tree, v, &s, &mut dist, 1.0);
                reach.extend((0..m).filter(|&j| dist[j] > 0.0));
                // Odometer over all pure strategies of the coalition.
                let mut pos = 0;
                loop {
                    if pos == free.len() {
                        break;
                    }
                    digits[pos] += 1;
                    if digits[pos] < free[pos].1 {
                        break;
                    }
                    digits[pos] = 0;
                    pos += 1;
                }
                if pos == free.len() {
                    break;
                }
            }
            for &j in reach.iter().filter(|&&j| honest[j] == 0.0) {
                for &i in c {
                    let mut coef: Vec<(usize, f64)> =
                        (0..m).filter(|&a| honest[a] > 0.0).map(|a| (i * m + a, honest[a])).collect();
                    coef.push((i * m + j, -1.0));
                    rows.insert(row_key(&coef));
                }
            }
        }
    }
    rows
}

/// Outcome of the vertex-enumeration oracle.
#[derive(Clone, Debug, PartialEq)]
pub enum OracleOutcome {
    Optimal(f64),
    Infeasible,
    Unbounded,
}

fn det(a: &[Vec<f64>]) -> f64 {
    match a.len() {
        1 => a[0][0],
        2 => a[0][0] * a[1][1] - a[0][1] * a[1][0],
        3 => {
            a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
                + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
        }
        _ => panic!("oracle handles at most 3 variables"),
    }
}

/// Cramer's rule; `None` for singular systems.
fn cramer(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let d = det(a);
    if d.abs() < 1e-9 {
        return None;
    }
    Some(
        (0..a.len())
            .map(|k| {
                let mut ak = a.to_vec();
                for (row, &bv) in ak.iter_mut().zip(b) {
                    row[k] = bv;
                }
                det(&ak) / d
            })
            .collect(),
    )
}

fn boxed_optimum(lp: &LinearProgram, bound: f64) -> Option<f64> {
    let d = lp.num_vars();
    let mut planes: Vec<(Vec<f64>, f64)> = Vec::new();
    planes.extend(lp.ge_constraints().map(|(r, b)| (r.to_vec(), b)));
    planes.extend(lp.eq_constraints().map(|(r, b)| (r.to_vec(), b)));
    for k in 0..d {
        let mut e = vec![0.0; d];
        e[k] = 1.0;
        planes.push((e.clone(), bound));
        planes.push((e, -bound));
    }
    let feasible = |x: &[f64]| {
        let tol = 1e-9 * (1.0 + bound);
        lp.max_violation(x) <= tol && x.iter().all(|v| v.abs() <= bound + tol)
    };
    let mut best: Option<f64> = None;
    let mut idx: Vec<usize> = (0..d).collect();
    let p = planes.len();
    loop {
        let a: Vec<Vec<f64>> = idx.iter().map(|&i| planes[i].0.clone()).collect();
        let b: Vec<f64> = idx.iter().map(|&i| planes[i].1).collect();
        if let Some(x) = cramer(&a, &b) {
            if feasible(&x) {
                let v: f64 = lp.objective().iter().zip(&x).map(|(c, x)| c * x).sum();
                best = Some(best.map_or(v, |bv: f64| bv.min(v)));
            }
        }
        // Next d-subset in lexicographic order.
        let mut i = d;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if idx[i] < p - d + i {
                idx[i] += 1;
                for k in i + 1..d {
                    idx[k] = idx[k - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Brute-force optimum of a program with at most three variables.
pub fn vertex_oracle(lp: &LinearProgram) -> OracleOutcome {
    const B: f64 = 1e5;
    if lp.num_vars() == 0 {
        return if lp.max_violation(&[]) <= 1e-9 {
            OracleOutcome::Optimal(0.0)
        } else {
            OracleOutcome::Infeasible
        };
    }
    match (boxed_optimum(lp, B), boxed_optimum(lp, 2.0 * B)) {
        (None, _) => OracleOutcome::Infeasible,
        (Some(a), Some(b)) if b < a - 1e-6 * (1.0 + a.abs()) => OracleOutcome::Unbounded,
        (Some(a), _) => OracleOutcome::Optimal(a),
    }
}

/// Random program with up to three variables and integer data in
/// `[-5, 5]`.
pub fn random_lp<R: Rng>(rng: &mut R) -> LinearProgram {
    let d = rng.gen_range(1..=3);
    let coef = |rng: &mut R| -> Vec<f64> { (0..d).map(|_| rng.gen_range(-5..=5) as f64).collect() };
    let mut lp = LinearProgram::minimize(coef(rng));
    for _ in 0..rng.gen_range(0..=4) {
        let row = coef(rng);
        lp.add_ge(row, rng.gen_range(-5..=5) as f64).expect("consistent");
    }
    if rng.gen_bool(0.3) {
        let row = coef(rng);
        lp.add_eq(row, rng.gen_range(-5..=5) as f64).expect("consistent");
    }
    lp
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oracle_on_small_programs() {
        let mut lp = LinearProgram::minimize(vec![1.0]);
        lp.add_ge(vec![1.0], 3.0).unwrap();
        assert_eq!(vertex_oracle(&lp), OracleOutcome::Optimal(3.0));
        let mut lp = LinearProgram::minimize(vec![-1.0]);
        lp.add_ge(vec![1.0], 0.0).unwrap();
        assert_eq!(vertex_oracle(&lp), OracleOutcome::Unbounded);
        let mut lp = LinearProgram::minimize(vec![0.0, 0.0]);
        lp.add_ge(vec![1.0, 0.0], 1.0).unwrap();
        lp.add_ge(vec![-1.0, 0.0], 0.0).unwrap();
        assert_eq!(vertex_oracle(&lp), OracleOutcome::Infeasible);
    }

    #[test]
    fn generated_trees_respect_the_budget() {
        let mut r = rng(3);
        for _ in 0..200 {
            let g = random_game(&mut r, TreeConfig::default());
            assert!(g.tree.nodes().len() <= 12);
            assert!(g.tree.resolve(&g.profile).is_ok());
        }
    }
}
