//! Finite extensive-form games of perfect information with chance nodes.
//!
//! Trees are built from a recursive [`NodeSpec`] and stored as a flat arena in
//! depth-first preorder, so node `0` is the root and leaves are numbered
//! `0..m` from left to right. Each leaf carries one utility per player and the
//! emission distribution over the observer's alphabet.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::tol;

/// Index of a node in the tree arena (depth-first preorder).
pub type NodeId = usize;

/// Recursive description used to build a [`GameTree`].
#[derive(Clone, Debug, PartialEq)]
pub enum NodeSpec {
    Branch {
        id: String,
        owner: usize,
        moves: Vec<(String, NodeSpec)>,
    },
    Chance {
        id: String,
        outcomes: Vec<(f64, NodeSpec)>,
    },
    Leaf {
        id: String,
        utilities: Vec<f64>,
        emission: Vec<f64>,
    },
}

impl NodeSpec {
    pub fn branch(id: impl Into<String>, owner: usize, moves: Vec<(&str, NodeSpec)>) -> Self {
        NodeSpec::Branch {
            id: id.into(),
            owner,
            moves: moves.into_iter().map(|(m, n)| (m.to_string(), n)).collect(),
        }
    }

    pub fn chance(id: impl Into<String>, outcomes: Vec<(f64, NodeSpec)>) -> Self {
        NodeSpec::Chance {
            id: id.into(),
            outcomes,
        }
    }

    pub fn leaf(id: impl Into<String>, utilities: Vec<f64>, emission: Vec<f64>) -> Self {
        NodeSpec::Leaf {
            id: id.into(),
            utilities,
            emission,
        }
    }

    pub fn id(&self) -> &str {
        match self {
            NodeSpec::Branch { id, .. } | NodeSpec::Chance { id, .. } | NodeSpec::Leaf { id, .. } => id,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum NodeKind {
    Branch {
        owner: usize,
        moves: Vec<(String, NodeId)>,
    },
    Chance {
        outcomes: Vec<(f64, NodeId)>,
    },
    Leaf {
        leaf: usize,
        utilities: Vec<f64>,
        emission: Vec<f64>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Node {
    pub id: String,
    pub kind: NodeKind,
}

impl Node {
    pub fn children(&self) -> Vec<NodeId> {
        match &self.kind {
            NodeKind::Branch { moves, .. } => moves.iter().map(|&(_, c)| c).collect(),
            NodeKind::Chance { outcomes } => outcomes.iter().map(|&(_, c)| c).collect(),
            NodeKind::Leaf { .. } => Vec::new(),
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self.kind, NodeKind::Leaf { .. })
    }
}

/// Pure strategy profile: one move name per branch id, on and off the path.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct StrategyProfile {
    choices: BTreeMap<String, String>,
}

impl StrategyProfile {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, branch: impl Into<String>, action: impl Into<String>) {
        self.choices.insert(branch.into(), action.into());
    }

    pub fn with(mut self, branch: impl Into<String>, action: impl Into<String>) -> Self {
        self.insert(branch, action);
        self
    }

    pub fn get(&self, branch: &str) -> Option<&str> {
        self.choices.get(branch).map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.choices.iter().map(|(b, a)| (b.as_str(), a.as_str()))
    }

    pub fn len(&self) -> usize {
        self.choices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.choices.is_empty()
    }
}

impl<B: Into<String>, A: Into<String>> FromIterator<(B, A)> for StrategyProfile {
    fn from_iter<I: IntoIterator<Item = (B, A)>>(iter: I) -> Self {
        StrategyProfile {
            choices: iter
                .into_iter()
                .map(|(b, a)| (b.into(), a.into()))
                .collect(),
        }
    }
}

/// A profile resolved against a tree: the chosen child position at every
/// branch node, `None` elsewhere.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Choices(Vec<Option<usize>>);

impl Choices {
    #[inline]
    pub fn at(&self, node: NodeId) -> Option<usize> {
        self.0[node]
    }
}

/// Distribution over leaves reached from some node, and the matching expected utilities.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub weights: Vec<f64>,
    pub utilities: Vec<f64>,
}

impl Outcome {
    /// Leaves reached with positive probability, ascending.
    pub fn support(&self) -> Vec<usize> {
        self.weights
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > 0.0)
            .map(|(j, _)| j)
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GameTree {
    players: Vec<String>,
    symbols: usize,
    nodes: Vec<Node>,
    leaves: Vec<NodeId>,
    by_id: BTreeMap<String, NodeId>,
}

impl GameTree {
    /// Flattens and validates a tree. `symbols` is the alphabet size every
    /// leaf emission must match.
    pub fn new(players: Vec<String>, symbols: usize, root: NodeSpec) -> Result<Self> {
        if players.is_empty() {
            return Err(Error::DimensionMismatch {
                what: "number of players",
                expected: 1,
                found: 0,
            });
        }
        if symbols == 0 {
            return Err(Error::DimensionMismatch {
                what: "alphabet size",
                expected: 1,
                found: 0,
            });
        }
        let mut tree = GameTree {
            players,
            symbols,
            nodes: Vec::new(),
            leaves: Vec::new(),
            by_id: BTreeMap::new(),
        };
        tree.push(root)?;
        tree.check_leaf_order()?;
        Ok(tree)
    }

    fn push(&mut self, spec: NodeSpec) -> Result<NodeId> {
        let id = spec.id().to_string();
        if self.by_id.contains_key(&id) {
            return Err(Error::DuplicateNodeId(id));
        }
        let idx = self.nodes.len();
        self.by_id.insert(id.clone(), idx);
        // Placeholder keeps preorder numbering while children are pushed.
        self.nodes.push(Node {
            id: id.clone(),
            kind: NodeKind::Chance {
                outcomes: Vec::new(),
            },
        });
        let n = self.players.len();
        let kind = match spec {
            NodeSpec::Branch { owner, moves, .. } => {
                if owner >= n {
                    return Err(Error::InvalidNode {
                        node: id,
                        reason: format!("owner {owner} out of range for {n} players"),
                    });
                }
                if moves.is_empty() {
                    return Err(Error::InvalidNode {
                        node: id,
                        reason: "branch has no moves".into(),
                    });
                }
                let mut seen = BTreeSet::new();
                let mut out = Vec::with_capacity(moves.len());
                for (name, child) in moves {
                    if !seen.insert(name.clone()) {
                        return Err(Error::InvalidNode {
                            node: id,
                            reason: format!("duplicate move `{name}`"),
                        });
                    }
                    let c = self.push(child)?;
                    out.push((name, c));
                }
                NodeKind::Branch { owner, moves: out }
            }
            NodeSpec::Chance { outcomes, .. } => {
                if outcomes.is_empty() {
                    return Err(Error::InvalidNode {
                        node: id,
                        reason: "chance node has no outcomes".into(),
                    });
                }
                let mut sum = 0.0;
                for (p, _) in &outcomes {
                    if !p.is_finite() || *p < 0.0 {
                        return Err(Error::InvalidNode {
                            node: id,
                            reason: format!("invalid probability {p}"),
                        });
                    }
                    sum += p;
                }
                if (sum - 1.0).abs() > tol::PROB_SUM {
                    return Err(Error::BadProbabilitySum { node: id, sum });
                }
                let mut out = Vec::with_capacity(outcomes.len());
                for (p, child) in outcomes {
                    let c = self.push(child)?;
                    out.push((p, c));
                }
                NodeKind::Chance { outcomes: out }
            }
            NodeSpec::Leaf {
                utilities,
                emission,
                ..
            } => {
                if utilities.len() != n {
                    return Err(Error::DimensionMismatch {
                        what: "leaf utility vector",
                        expected: n,
                        found: utilities.len(),
                    });
                }
                if utilities.iter().any(|u| !u.is_finite()) {
                    return Err(Error::InvalidNode {
                        node: id,
                        reason: "non-finite utility".into(),
                    });
                }
                check_pdf(&id, &emission, self.symbols, "leaf emission pdf")?;
                let leaf = self.leaves.len();
                self.leaves.push(idx);
                NodeKind::Leaf {
                    leaf,
                    utilities,
                    emission,
                }
            }
        };
        self.nodes[idx].kind = kind;
        Ok(idx)
    }

    /// Re-derives the depth-first leaf order and checks it against the stored indices.
    fn check_leaf_order(&self) -> Result<()> {
        let mut order = Vec::new();
        let mut stack = vec![0];
        while let Some(v) = stack.pop() {
            let node = &self.nodes[v];
            if let NodeKind::Leaf { leaf, .. } = node.kind {
                if leaf != order.len() {
                    return Err(Error::InvalidNode {
                        node: node.id.clone(),
                        reason: format!("leaf index {leaf} out of depth-first order"),
                    });
                }
                order.push(v);
            }
            stack.extend(node.children().into_iter().rev());
        }
        if order != self.leaves {
            return Err(Error::DimensionMismatch {
                what: "leaf count",
                expected: order.len(),
                found: self.leaves.len(),
            });
        }
        Ok(())
    }

    pub fn players(&self) -> &[String] {
        &self.players
    }

    pub fn num_players(&self) -> usize {
        self.players.len()
    }

    pub fn num_leaves(&self) -> usize {
        self.leaves.len()
    }

    pub fn num_symbols(&self) -> usize {
        self.symbols
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, v: NodeId) -> &Node {
        &self.nodes[v]
    }

    pub fn root(&self) -> NodeId {
        0
    }

    /// Arena indices of the leaves, in leaf order.
    pub fn leaf_nodes(&self) -> &[NodeId] {
        &self.leaves
    }

    pub fn node_index(&self, id: &str) -> Result<NodeId> {
        self.by_id
            .get(id)
            .copied()
            .ok_or_else(|| Error::UnknownNodeId(id.to_string()))
    }

    pub fn branch_ids(&self) -> impl Iterator<Item = &str> {
        self.nodes
            .iter()
            .filter(|n| matches!(n.kind, NodeKind::Branch { .. }))
            .map(|n| n.id.as_str())
    }

    /// Roots of all proper subgames: every non-leaf node, in preorder.
    pub fn subgame_roots(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.nodes.len()).filter(|&v| !self.nodes[v].is_leaf())
    }

    /// `n x m` utility matrix, column `j` = utilities at leaf `j`.
    pub fn utility_matrix(&self) -> Matrix {
        let n = self.num_players();
        Matrix::from_fn(n, self.leaves.len(), |i, j| match &self.nodes[self.leaves[j]].kind {
            NodeKind::Leaf { utilities, .. } => utilities[i],
            _ => unreachable!("leaf list only holds leaves"),
        })
    }

    /// `s x m` emission matrix assembled from the leaf pdfs.
    pub fn emission_matrix(&self) -> Matrix {
        Matrix::from_fn(self.symbols, self.leaves.len(), |k, j| {
            match &self.nodes[self.leaves[j]].kind {
                NodeKind::Leaf { emission, .. } => emission[k],
                _ => unreachable!("leaf list only holds leaves"),
            }
        })
    }

    /// Utility matrix together with the leaf order (arena ids of leaves
    /// `0..m`). Leaf indices were re-derived and checked at construction.
    pub fn validate_and_index(&self) -> (Matrix, Vec<NodeId>) {
        (self.utility_matrix(), self.leaves.clone())
    }

    /// Resolves a profile into child positions. The profile must name a
    /// valid move for every branch; extra entries are rejected.
    pub fn resolve(&self, profile: &StrategyProfile) -> Result<Choices> {
        for (branch, _) in profile.iter() {
            let v = self.node_index(branch)?;
            if !matches!(self.nodes[v].kind, NodeKind::Branch { .. }) {
                return Err(Error::InvalidNode {
                    node: branch.to_string(),
                    reason: "profile assigns a move to a non-branch node".into(),
                });
            }
        }
        let mut out = vec![None; self.nodes.len()];
        for (v, node) in self.nodes.iter().enumerate() {
            if let NodeKind::Branch { moves, .. } = &node.kind {
                let action = profile
                    .get(&node.id)
                    .ok_or_else(|| Error::MissingBranchChoice(node.id.clone()))?;
                let pos = moves
                    .iter()
                    .position(|(m, _)| m == action)
                    .ok_or_else(|| Error::UnknownMove {
                        node: node.id.clone(),
                        action: action.to_string(),
                    })?;
                out[v] = Some(pos);
            }
        }
        Ok(Choices(out))
    }

    /// Expected utility vector when the whole game is played under `profile`.
    pub fn expected_utilities(&self, profile: &StrategyProfile) -> Result<Vec<f64>> {
        let choices = self.resolve(profile)?;
        Ok(self.value_from(self.root(), &choices))
    }

    /// Expected utilities of the subgame rooted at `v`, by direct recursion.
    pub fn value_from(&self, v: NodeId, choices: &Choices) -> Vec<f64> {
        match &self.nodes[v].kind {
            NodeKind::Leaf { utilities, .. } => utilities.clone(),
            NodeKind::Branch { moves, .. } => {
                let pos = choices.at(v).expect("resolved profile covers every branch");
                self.value_from(moves[pos].1, choices)
            }
            NodeKind::Chance { outcomes } => {
                let mut acc = vec![0.0; self.num_players()];
                for &(p, c) in outcomes {
                    if p == 0.0 {
                        continue;
                    }
                    for (a, u) in acc.iter_mut().zip(self.value_from(c, choices)) {
                        *a += p * u;
                    }
                }
                acc
            }
        }
    }

    /// Pure subgame-perfect equilibrium; ties go to the leftmost move.
    pub fn backward_induction(&self) -> StrategyProfile {
        let mut profile = StrategyProfile::new();
        self.induct(self.root(), &mut profile);
        profile
    }

    /// Whether no player gains by changing the move at a single branch,
    /// which for finite games is subgame perfection.
    pub fn is_subgame_perfect(&self, profile: &StrategyProfile) -> Result<bool> {
        let choices = self.resolve(profile)?;
        for (v, node) in self.nodes.iter().enumerate() {
            if let NodeKind::Branch { owner, moves } = &node.kind {
                let chosen = self.value_from(moves[choices.at(v).expect("resolved")].1, &choices)[*owner];
                let improves = moves
                    .iter()
                    .any(|&(_, c)| self.value_from(c, &choices)[*owner] > chosen + tol::UTILITY);
                if improves {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    fn induct(&self, v: NodeId, profile: &mut StrategyProfile) -> Vec<f64> {
        let node = &self.nodes[v];
        match &node.kind {
            NodeKind::Leaf { utilities, .. } => utilities.clone(),
            NodeKind::Chance { outcomes } => {
                let mut acc = vec![0.0; self.num_players()];
                for &(p, c) in outcomes {
                    let val = self.induct(c, profile);
                    for (a, u) in acc.iter_mut().zip(val) {
                        *a += p * u;
                    }
                }
                acc
            }
            NodeKind::Branch { owner, moves } => {
                let mut best: Option<(usize, Vec<f64>)> = None;
                for (pos, &(_, c)) in moves.iter().enumerate() {
                    let val = self.induct(c, profile);
                    let better = match &best {
                        None => true,
                        Some((_, b)) => val[*owner] > b[*owner] + tol::UTILITY,
                    };
                    if better {
                        best = Some((pos, val));
                    }
                }
                let (pos, val) = best.expect("branch has at least one move");
                profile.insert(node.id.clone(), moves[pos].0.clone());
                val
            }
        }
    }

    /// Leaf distribution and expected utilities of the subgame rooted at
    /// `root` when everybody follows `profile`.
    pub fn honest_outcome(&self, root: &str, profile: &StrategyProfile) -> Result<Outcome> {
        let v = self.node_index(root)?;
        let choices = self.resolve(profile)?;
        Ok(self.outcome_from(v, &choices))
    }

    pub fn outcome_from(&self, v: NodeId, choices: &Choices) -> Outcome {
        let mut weights = vec![0.0; self.num_leaves()];
        self.spread(v, 1.0, choices, &mut weights);
        let n = self.num_players();
        let mut utilities = vec![0.0; n];
        for (j, &w) in weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            if let NodeKind::Leaf { utilities: u, .. } = &self.nodes[self.leaves[j]].kind {
                for (acc, x) in utilities.iter_mut().zip(u) {
                    *acc += w * x;
                }
            }
        }
        Outcome { weights, utilities }
    }

    fn spread(&self, v: NodeId, mass: f64, choices: &Choices, weights: &mut [f64]) {
        match &self.nodes[v].kind {
            NodeKind::Leaf { leaf, .. } => weights[*leaf] += mass,
            NodeKind::Branch { moves, .. } => {
                let pos = choices.at(v).expect("resolved profile covers every branch");
                self.spread(moves[pos].1, mass, choices, weights);
            }
            NodeKind::Chance { outcomes } => {
                for &(p, c) in outcomes {
                    if p > 0.0 {
                        self.spread(c, mass * p, choices, weights);
                    }
                }
            }
        }
    }

    /// Rebuilds the recursive description of the subtree rooted at `v`.
    pub fn to_spec(&self, v: NodeId) -> NodeSpec {
        let node = &self.nodes[v];
        match &node.kind {
            NodeKind::Branch { owner, moves } => NodeSpec::Branch {
                id: node.id.clone(),
                owner: *owner,
                moves: moves
                    .iter()
                    .map(|(m, c)| (m.clone(), self.to_spec(*c)))
                    .collect(),
            },
            NodeKind::Chance { outcomes } => NodeSpec::Chance {
                id: node.id.clone(),
                outcomes: outcomes.iter().map(|&(p, c)| (p, self.to_spec(c))).collect(),
            },
            NodeKind::Leaf {
                utilities,
                emission,
                ..
            } => NodeSpec::Leaf {
                id: node.id.clone(),
                utilities: utilities.clone(),
                emission: emission.clone(),
            },
        }
    }
}

pub(crate) fn check_pdf(node: &str, pdf: &[f64], len: usize, what: &'static str) -> Result<()> {
    if pdf.len() != len {
        return Err(Error::DimensionMismatch {
            what,
            expected: len,
            found: pdf.len(),
        });
    }
    if pdf.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(Error::InvalidNode {
            node: node.to_string(),
            reason: format!("{what} has a negative or non-finite entry"),
        });
    }
    let sum: f64 = pdf.iter().sum();
    if (sum - 1.0).abs() > tol::PROB_SUM {
        return Err(Error::BadProbabilitySum {
            node: node.to_string(),
            sum,
        });
    }
    Ok(())
}
