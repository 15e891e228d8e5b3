use payscheme_core::info::implemented_utilities;
use payscheme_core::security::verify;
use payscheme_core::synthesis::{
    minmax_deposit, synthesize, CostVector, HonestInvariance, Objective, SynthesisOptions,
};
use payscheme_core::{Error, SecurityParams};
use payscheme_testkit::{random_game, rng, with_full_rank_emissions, RandomGame, TreeConfig};
use rand::Rng;

fn instance(r: &mut impl Rng) -> (RandomGame, usize) {
    let g = random_game(r, TreeConfig::default());
    let g = with_full_rank_emissions(r, g);
    let t = r.gen_range(1..=2).min(g.tree.num_players());
    (g, t)
}

fn minmax() -> SynthesisOptions {
    SynthesisOptions {
        objective: Objective::MinMaxDeposit,
        ..SynthesisOptions::default()
    }
}

#[test]
fn synthesized_schemes_verify_and_grow_with_delta() {
    let mut r = rng(41);
    let mut solved = 0;
    let mut attempts = 0;
    while solved < 100 {
        attempts += 1;
        assert!(attempts < 2000, "too few solvable instances");
        let (g, t) = instance(&mut r);
        let cost = CostVector::unit(g.tree.num_players(), g.info.num_symbols());
        let mut values = Vec::new();
        let mut ok = true;
        for delta in [0.0, 0.5, 1.0, 2.0] {
            let p = SecurityParams::new(delta, t).unwrap();
            match synthesize(&g.tree, &g.info, &g.profile, p, &cost, minmax()) {
                Ok(out) => {
                    let rep = verify(&g.tree, &g.info, &out.scheme, &g.profile, p).unwrap();
                    assert!(rep.pass, "{:?}", rep.violations);
                    for sum in out.scheme.matrix().column_sums() {
                        assert!(sum >= -1e-7);
                    }
                    values.push(out.value);
                }
                Err(Error::Infeasible(_)) => {
                    ok = false;
                    break;
                }
                Err(e) => panic!("{e}"),
            }
        }
        if !ok {
            continue;
        }
        solved += 1;
        for w in values.windows(2) {
            assert!(w[1] >= w[0] - 1e-7, "{values:?}");
        }
        let delta_g = minmax_deposit(&g.tree, &g.info, &g.profile, t).unwrap();
        assert!((delta_g - values[0]).abs() < 1e-7);
        for v in &values {
            assert!(*v >= delta_g - 1e-7);
        }

        let p = SecurityParams::new(1.0, t).unwrap();
        let weighted = synthesize(&g.tree, &g.info, &g.profile, p, &cost, SynthesisOptions::default());
        match weighted {
            Ok(out) => assert!(verify(&g.tree, &g.info, &out.scheme, &g.profile, p).unwrap().pass),
            Err(Error::Unbounded) => {}
            Err(e) => panic!("{e}"),
        }
    }
}

#[test]
fn zero_inflation_keeps_total_utility() {
    let mut r = rng(42);
    let mut successes = 0;
    for _ in 0..300 {
        let (g, t) = instance(&mut r);
        let cost = CostVector::unit(g.tree.num_players(), g.info.num_symbols());
        let opts = SynthesisOptions {
            zero_inflation: true,
            ..minmax()
        };
        let p = SecurityParams::new(1.0, t).unwrap();
        let out = match synthesize(&g.tree, &g.info, &g.profile, p, &cost, opts) {
            Ok(out) => out,
            Err(Error::Infeasible(_)) => continue,
            Err(e) => panic!("{e}"),
        };
        successes += 1;
        let u = g.tree.utility_matrix();
        let e = implemented_utilities(&u, &out.scheme, &g.info).unwrap();
        for sum in u.sub(&e).unwrap().column_sums() {
            assert!(sum.abs() < 1e-7);
        }
    }
    assert!(successes >= 30, "{successes}");
}

#[test]
fn honest_invariance_leaves_the_honest_outcome_alone() {
    let mut r = rng(43);
    let mut successes = 0;
    for _ in 0..200 {
        let (g, t) = instance(&mut r);
        let cost = CostVector::unit(g.tree.num_players(), g.info.num_symbols());
        let p = SecurityParams::new(0.5, t).unwrap();
        for mode in [HonestInvariance::PerLeaf, HonestInvariance::Expected] {
            let opts = SynthesisOptions {
                honest_invariance: mode,
                ..minmax()
            };
            let out = match synthesize(&g.tree, &g.info, &g.profile, p, &cost, opts) {
                Ok(out) => out,
                Err(Error::Infeasible(_)) => continue,
                Err(e) => panic!("{e}"),
            };
            successes += 1;
            let before = g.tree.expected_utilities(&g.profile).unwrap();
            let root = g.tree.node(g.tree.root()).id.clone();
            let honest = g.tree.honest_outcome(&root, &g.profile).unwrap();
            let e = implemented_utilities(&g.tree.utility_matrix(), &out.scheme, &g.info).unwrap();
            for (i, b) in before.iter().enumerate() {
                let after: f64 = (0..e.cols()).map(|j| honest.weights[j] * e[(i, j)]).sum();
                assert!((after - b).abs() < 1e-7);
                if mode == HonestInvariance::PerLeaf {
                    for j in honest.support() {
                        let u = g.tree.utility_matrix()[(i, j)];
                        assert!((e[(i, j)] - u).abs() < 1e-7);
                    }
                }
            }
        }
    }
    assert!(successes >= 30, "{successes}");
}
