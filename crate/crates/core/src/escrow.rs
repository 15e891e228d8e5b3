//! Simulated deposit, play, emission and repayment.
//!
//! Every player deposits `lambda_i* = max_k lambda_ik`, the game is played
//! under a pure profile with chance moves drawn from a seeded ChaCha stream,
//! a symbol `k` is drawn from the reached leaf's emission pdf, and player
//! `i` gets `lambda_i* - lambda_ik` back.

use alloc::vec;
use alloc::vec::Vec;

use libm::sqrt;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::game::{GameTree, NodeKind, StrategyProfile};
use crate::info::{InfoStructure, PaymentScheme};

#[derive(Clone, Debug, PartialEq)]
pub struct Episode {
    pub seed: u64,
    pub leaf: usize,
    pub symbol: usize,
    pub deposits: Vec<f64>,
    pub repayments: Vec<f64>,
    /// `deposit - repayment = lambda_ik`.
    pub net_loss: Vec<f64>,
    /// Leaf utilities minus net losses.
    pub utilities: Vec<f64>,
    /// Total deposits minus total repayments; positive amounts are burned.
    pub surplus: f64,
}

/// Uniform draw in `[0, 1)` from the top 53 bits.
fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Index drawn from `pdf`, never one with zero probability.
fn sample(pdf: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let u = uniform(rng);
    let mut acc = 0.0;
    let mut last = 0;
    for (k, &p) in pdf.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        acc += p;
        last = k;
        if u < acc {
            return k;
        }
    }
    last
}

fn check_dims(tree: &GameTree, info: &InfoStructure, scheme: &PaymentScheme) -> Result<()> {
    if scheme.num_players() != tree.num_players() {
        return Err(Error::DimensionMismatch {
            what: "payment scheme players",
            expected: tree.num_players(),
            found: scheme.num_players(),
        });
    }
    if scheme.num_symbols() != info.num_symbols() {
        return Err(Error::DimensionMismatch {
            what: "payment scheme symbols",
            expected: info.num_symbols(),
            found: scheme.num_symbols(),
        });
    }
    if info.num_leaves() != tree.num_leaves() {
        return Err(Error::DimensionMismatch {
            what: "emission matrix leaves",
            expected: tree.num_leaves(),
            found: info.num_leaves(),
        });
    }
    Ok(())
}

pub fn run_episode(
    tree: &GameTree,
    info: &InfoStructure,
    scheme: &PaymentScheme,
    profile: &StrategyProfile,
    seed: u64,
) -> Result<Episode> {
    check_dims(tree, info, scheme)?;
    let choices = tree.resolve(profile)?;
    Ok(play(tree, info, scheme, &choices, seed))
}

fn play(
    tree: &GameTree,
    info: &InfoStructure,
    scheme: &PaymentScheme,
    choices: &crate::game::Choices,
    seed: u64,
) -> Episode {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = tree.root();
    let (leaf, payoff) = loop {
        match &tree.node(v).kind {
            NodeKind::Branch { moves, .. } => {
                v = moves[choices.at(v).expect("resolved profile covers every branch")].1;
            }
            NodeKind::Chance { outcomes } => {
                let pdf: Vec<f64> = outcomes.iter().map(|o| o.0).collect();
                v = outcomes[sample(&pdf, &mut rng)].1;
            }
            NodeKind::Leaf { leaf, utilities, .. } => break (*leaf, utilities.clone()),
        }
    };
    let symbol = sample(&info.phi().column(leaf), &mut rng);
    let lambda = scheme.matrix();
    let deposits = scheme.max_deposits();
    let net_loss: Vec<f64> = (0..lambda.rows()).map(|i| lambda[(i, symbol)]).collect();
    let repayments: Vec<f64> = deposits.iter().zip(&net_loss).map(|(d, l)| d - l).collect();
    let utilities = payoff.iter().zip(&net_loss).map(|(u, l)| u - l).collect();
    let surplus = deposits.iter().sum::<f64>() - repayments.iter().sum::<f64>();
    Episode {
        seed,
        leaf,
        symbol,
        deposits,
        repayments,
        net_loss,
        utilities,
        surplus,
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of trial `index` under `master`; independent of the trial order.
pub fn trial_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index))
}

#[derive(Clone, Debug, PartialEq)]
pub struct MonteCarlo {
    pub trials: usize,
    pub mean: Vec<f64>,
    pub std_err: Vec<f64>,
    pub symbol_freq: Vec<f64>,
    pub leaf_freq: Vec<f64>,
    pub min_surplus: f64,
    pub max_surplus: f64,
}

pub fn monte_carlo(
    tree: &GameTree,
    info: &InfoStructure,
    scheme: &PaymentScheme,
    profile: &StrategyProfile,
    trials: usize,
    seed: u64,
) -> Result<MonteCarlo> {
    if trials == 0 {
        return Err(Error::BadParameters("need at least one trial".into()));
    }
    check_dims(tree, info, scheme)?;
    let choices = tree.resolve(profile)?;
    let n = tree.num_players();
    let mut sum = vec![0.0; n];
    let mut sum_sq = vec![0.0; n];
    let mut symbols = vec![0usize; info.num_symbols()];
    let mut leaves = vec![0usize; tree.num_leaves()];
    let mut min_surplus = f64::INFINITY;
    let mut max_surplus = f64::NEG_INFINITY;
    for t in 0..trials {
        let ep = play(tree, info, scheme, &choices, trial_seed(seed, t as u64));
        for (i, u) in ep.utilities.iter().enumerate() {
            sum[i] += u;
            sum_sq[i] += u * u;
        }
        symbols[ep.symbol] += 1;
        leaves[ep.leaf] += 1;
        min_surplus = min_surplus.min(ep.surplus);
        max_surplus = max_surplus.max(ep.surplus);
    }
    let nt = trials as f64;
    let mean: Vec<f64> = sum.iter().map(|s| s / nt).collect();
    let std_err = if trials < 2 {
        vec![0.0; n]
    } else {
        mean.iter()
            .zip(&sum_sq)
            .map(|(m, sq)| {
                let var = ((sq - nt * m * m) / (nt - 1.0)).max(0.0);
                sqrt(var / nt)
            })
            .collect()
    };
    Ok(MonteCarlo {
        trials,
        mean,
        std_err,
        symbol_freq: symbols.iter().map(|&c| c as f64 / nt).collect(),
        leaf_freq: leaves.iter().map(|&c| c as f64 / nt).collect(),
        min_surplus,
        max_surplus,
    })
}
