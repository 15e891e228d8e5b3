use payscheme_core::security::{build_constraints, verify};
use payscheme_core::{GameTree, NodeKind, PaymentScheme, SecurityParams, StrategyProfile};
use payscheme_testkit::{brute_force_rows, random_game, rng, row_key, TreeConfig};

fn chance_free() -> TreeConfig {
    TreeConfig {
        chance: false,
        ..TreeConfig::default()
    }
}

/// Value of the subgame at `v` under `profile`, recomputed from scratch.
fn value(tree: &GameTree, v: usize, profile: &StrategyProfile) -> Vec<f64> {
    match &tree.node(v).kind {
        NodeKind::Leaf { utilities, .. } => utilities.clone(),
        NodeKind::Branch { moves, .. } => {
            let chosen = profile.get(&tree.node(v).id).unwrap();
            let c = moves.iter().find(|(m, _)| m == chosen).unwrap().1;
            value(tree, c, profile)
        }
        NodeKind::Chance { outcomes } => {
            let mut acc = vec![0.0; tree.num_players()];
            for &(p, c) in outcomes {
                for (a, x) in acc.iter_mut().zip(value(tree, c, profile)) {
                    *a += p * x;
                }
            }
            acc
        }
    }
}

/// One-shot deviation check at every branch.
fn is_spe(tree: &GameTree, profile: &StrategyProfile) -> bool {
    tree.nodes().iter().all(|node| match &node.kind {
        NodeKind::Branch { owner, moves } => {
            let chosen = profile.get(&node.id).unwrap();
            let c = moves.iter().find(|(m, _)| m == chosen).unwrap().1;
            let stay = value(tree, c, profile)[*owner];
            moves.iter().all(|&(_, alt)| value(tree, alt, profile)[*owner] <= stay + 1e-9)
        }
        _ => true,
    })
}

#[test]
fn backward_induction_is_secure_without_payments() {
    let mut r = rng(11);
    for _ in 0..200 {
        let g = random_game(&mut r, chance_free());
        let spe = g.tree.backward_induction();
        assert!(is_spe(&g.tree, &spe));
        let zero = PaymentScheme::zeros(g.tree.num_players(), g.info.num_symbols());
        let rep = verify(&g.tree, &g.info, &zero, &spe, SecurityParams::new(0.0, 1).unwrap()).unwrap();
        assert!(rep.pass, "{:?}", rep.violations);
    }
}

#[test]
fn zero_strong_one_robust_means_subgame_perfect() {
    let mut r = rng(12);
    let (mut spe, mut not_spe) = (0, 0);
    for _ in 0..300 {
        let g = random_game(&mut r, chance_free());
        let zero = PaymentScheme::zeros(g.tree.num_players(), g.info.num_symbols());
        let rep = verify(&g.tree, &g.info, &zero, &g.profile, SecurityParams::new(0.0, 1).unwrap()).unwrap();
        let expected = is_spe(&g.tree, &g.profile);
        assert_eq!(rep.pass, expected);
        if expected {
            spe += 1;
        } else {
            not_spe += 1;
        }
    }
    assert!(spe > 10 && not_spe > 10);
}

#[test]
fn constraint_builder_matches_brute_force() {
    let mut r = rng(13);
    for case in 0..200 {
        let g = random_game(&mut r, TreeConfig::default());
        let t = 1 + case % 2;
        let t = t.min(g.tree.num_players());
        let sys = build_constraints(&g.tree, &g.profile, SecurityParams::new(1.0, t).unwrap()).unwrap();
        let built: std::collections::BTreeSet<_> = sys.rows.iter().map(|r| row_key(&r.coefficients)).collect();
        assert_eq!(built.len(), sys.len(), "builder rows are unique");
        assert_eq!(built, brute_force_rows(&g.tree, &g.profile, t), "case {case}");
    }
}

#[test]
fn expected_utilities_agree_with_leaf_weights() {
    let mut r = rng(14);
    for _ in 0..100 {
        let g = random_game(&mut r, TreeConfig::default());
        let direct = g.tree.expected_utilities(&g.profile).unwrap();
        let root = g.tree.node(g.tree.root()).id.clone();
        let out = g.tree.honest_outcome(&root, &g.profile).unwrap();
        let u = g.tree.utility_matrix();
        let total: f64 = out.weights.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        for i in 0..g.tree.num_players() {
            let via: f64 = (0..u.cols()).map(|j| u[(i, j)] * out.weights[j]).sum();
            assert!((via - direct[i]).abs() < 1e-9);
            assert!((out.utilities[i] - direct[i]).abs() < 1e-9);
            assert!((value(&g.tree, g.tree.root(), &g.profile)[i] - direct[i]).abs() < 1e-9);
        }
    }
}

#[test]
fn subgame_perfection_check_matches_oracle() {
    let mut r = rng(14);
    for _ in 0..300 {
        let g = random_game(&mut r, TreeConfig::default());
        assert_eq!(g.tree.is_subgame_perfect(&g.profile).unwrap(), is_spe(&g.tree, &g.profile));
        assert!(g.tree.is_subgame_perfect(&g.tree.backward_induction()).unwrap());
    }
}
