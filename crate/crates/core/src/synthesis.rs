//! Payment-scheme synthesis as a linear program.
//!
//! With `A`, `e` from [`build_constraints`] and `R` the lifting matrix, the
//! scheme `lambda = vec(Lambda)` must satisfy `-A R lambda >= e - A vec(U)`.
//! Self-containment adds `sum_i lambda_ik >= 0` per symbol (`= 0` under zero
//! inflation), infinite costs pin entries to zero, and honest invariance
//! keeps the payments on the honest outcome at zero.

use alloc::boxed::Box;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::game::{GameTree, StrategyProfile};
use crate::info::{implemented_utilities, InfoStructure, PaymentScheme};
use crate::linalg::{dot, Matrix};
use crate::lp::{solve, LinearProgram, LpOutcome, CHECK_TOL};
use crate::security::{build_constraints, check_system, ConstraintSystem, SecurityParams, VerifyReport};

/// Per-entry costs over `(player, symbol)`, row-major. `None` is an
/// infinite cost, which forces the payment to zero.
#[derive(Clone, Debug, PartialEq)]
pub struct CostVector {
    players: usize,
    symbols: usize,
    entries: Vec<Option<f64>>,
}

impl CostVector {
    pub fn new(players: usize, symbols: usize, entries: Vec<Option<f64>>) -> Result<Self> {
        if entries.len() != players * symbols {
            return Err(Error::DimensionMismatch {
                what: "cost vector length",
                expected: players * symbols,
                found: entries.len(),
            });
        }
        if entries.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::BadParameters(
                "finite costs must be finite numbers; use inf to forbid a payment".into(),
            ));
        }
        Ok(CostVector {
            players,
            symbols,
            entries,
        })
    }

    pub fn uniform(players: usize, symbols: usize, cost: f64) -> Self {
        CostVector {
            players,
            symbols,
            entries: vec![Some(cost); players * symbols],
        }
    }

    pub fn unit(players: usize, symbols: usize) -> Self {
        Self::uniform(players, symbols, 1.0)
    }

    pub fn players(&self) -> usize {
        self.players
    }

    pub fn symbols(&self) -> usize {
        self.symbols
    }

    pub fn get(&self, player: usize, symbol: usize) -> Option<f64> {
        self.entries[player * self.symbols + symbol]
    }

    pub fn entries(&self) -> &[Option<f64>] {
        &self.entries
    }

    pub fn set_infinite(&mut self, player: usize, symbol: usize) {
        self.entries[player * self.symbols + symbol] = None;
    }

    /// `c . vec(Lambda)` over the finite entries.
    pub fn evaluate(&self, scheme: &PaymentScheme) -> f64 {
        self.entries
            .iter()
            .zip(scheme.matrix().as_slice())
            .filter_map(|(c, l)| c.map(|c| c * l))
            .sum()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Objective {
    #[default]
    WeightedCost,
    /// Minimize the largest entry of `Lambda`, i.e. the largest deposit.
    MinMaxDeposit,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum HonestInvariance {
    #[default]
    Off,
    /// Every honest-support leaf of the whole game keeps its utilities.
    PerLeaf,
    /// Only the expected honest utilities are kept.
    Expected,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SynthesisOptions {
    pub objective: Objective,
    pub zero_inflation: bool,
    pub honest_invariance: HonestInvariance,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Synthesis {
    pub scheme: PaymentScheme,
    /// Optimal LP value: the weighted cost, or the largest entry under
    /// [`Objective::MinMaxDeposit`].
    pub value: f64,
    pub report: VerifyReport,
}

/// The program together with the security system it was built from.
#[derive(Clone, Debug, PartialEq)]
pub struct SchemeProgram {
    pub lp: LinearProgram,
    pub system: ConstraintSystem,
    /// Number of payment variables `n * s`; a trailing variable is the
    /// max-deposit bound when the objective asks for it.
    pub payment_vars: usize,
}

pub fn build_program(
    tree: &GameTree,
    info: &InfoStructure,
    profile: &StrategyProfile,
    params: SecurityParams,
    cost: &CostVector,
    opts: SynthesisOptions,
) -> Result<SchemeProgram> {
    let n = tree.num_players();
    let s = info.num_symbols();
    let m = tree.num_leaves();
    params.check_players(n)?;
    if info.num_leaves() != m {
        return Err(Error::DimensionMismatch {
            what: "emission matrix leaves",
            expected: m,
            found: info.num_leaves(),
        });
    }
    if cost.players() != n || cost.symbols() != s {
        return Err(Error::DimensionMismatch {
            what: "cost vector length",
            expected: n * s,
            found: cost.players() * cost.symbols(),
        });
    }
    let system = build_constraints(tree, profile, params)?;
    let u = tree.utility_matrix();
    let phi = info.phi();
    let minmax = opts.objective == Objective::MinMaxDeposit;
    let vars = n * s + usize::from(minmax);

    let mut objective = vec![0.0; vars];
    if minmax {
        objective[n * s] = 1.0;
    } else {
        for (o, c) in objective.iter_mut().zip(cost.entries()) {
            *o = c.unwrap_or(0.0);
        }
    }
    let mut lp = LinearProgram::minimize(objective);

    // -A R lambda >= e - A vec(U)
    let vec_u = u.as_slice();
    for row in &system.rows {
        let mut coef = vec![0.0; vars];
        for &(k, a) in &row.coefficients {
            let (i, j) = (k / m, k % m);
            for q in 0..s {
                coef[i * s + q] -= a * phi[(q, j)];
            }
        }
        lp.add_ge(coef, system.delta - row.apply(vec_u))?;
    }

    for q in 0..s {
        let mut coef = vec![0.0; vars];
        for i in 0..n {
            coef[i * s + q] = 1.0;
        }
        if opts.zero_inflation {
            lp.add_eq(coef, 0.0)?;
        } else {
            lp.add_ge(coef, 0.0)?;
        }
    }

    for (idx, c) in cost.entries().iter().enumerate() {
        if c.is_none() {
            let mut coef = vec![0.0; vars];
            coef[idx] = 1.0;
            lp.add_eq(coef, 0.0)?;
        }
    }

    if opts.honest_invariance != HonestInvariance::Off {
        let honest = tree.honest_outcome(&tree.node(tree.root()).id, profile)?;
        let support = honest.support();
        for i in 0..n {
            match opts.honest_invariance {
                HonestInvariance::PerLeaf => {
                    for &h in &support {
                        let mut coef = vec![0.0; vars];
                        for q in 0..s {
                            coef[i * s + q] = phi[(q, h)];
                        }
                        lp.add_eq(coef, 0.0)?;
                    }
                }
                HonestInvariance::Expected => {
                    let mut coef = vec![0.0; vars];
                    for &h in &support {
                        for q in 0..s {
                            coef[i * s + q] += honest.weights[h] * phi[(q, h)];
                        }
                    }
                    lp.add_eq(coef, 0.0)?;
                }
                HonestInvariance::Off => {}
            }
        }
    }

    if minmax {
        for idx in 0..n * s {
            let mut coef = vec![0.0; vars];
            coef[n * s] = 1.0;
            coef[idx] = -1.0;
            lp.add_ge(coef, 0.0)?;
        }
    }

    Ok(SchemeProgram {
        lp,
        system,
        payment_vars: n * s,
    })
}

/// Solves for an optimal scheme and re-verifies it.
pub fn synthesize(
    tree: &GameTree,
    info: &InfoStructure,
    profile: &StrategyProfile,
    params: SecurityParams,
    cost: &CostVector,
    opts: SynthesisOptions,
) -> Result<Synthesis> {
    let program = build_program(tree, info, profile, params, cost, opts)?;
    let solution = match solve(&program.lp)? {
        LpOutcome::Optimal(sol) => sol,
        LpOutcome::Infeasible => return Err(Error::Infeasible(Box::new(program.system))),
        LpOutcome::Unbounded => return Err(Error::Unbounded),
    };
    let n = tree.num_players();
    let s = info.num_symbols();
    let lambda = Matrix::from_vec(n, s, solution.x[..program.payment_vars].to_vec())?;
    let scheme = PaymentScheme::new(lambda)?;

    let implemented = implemented_utilities(&tree.utility_matrix(), &scheme, info)?;
    let report = check_system(&program.system, implemented);
    if !report.pass {
        return Err(Error::NumericalBreakdown(format!(
            "solver output violates {} security constraints (min slack {:e})",
            report.violations.len(),
            report.min_slack
        )));
    }
    check_flags(tree, info, profile, &scheme, cost, opts)?;
    let value = dot(program.lp.objective(), &solution.x);
    Ok(Synthesis {
        scheme,
        value,
        report,
    })
}

fn check_flags(
    tree: &GameTree,
    info: &InfoStructure,
    profile: &StrategyProfile,
    scheme: &PaymentScheme,
    cost: &CostVector,
    opts: SynthesisOptions,
) -> Result<()> {
    let lambda = scheme.matrix();
    for (q, sum) in lambda.column_sums().into_iter().enumerate() {
        let bad = if opts.zero_inflation {
            sum.abs() > CHECK_TOL
        } else {
            sum < -CHECK_TOL
        };
        if bad {
            return Err(Error::NumericalBreakdown(format!(
                "symbol {q} column sum {sum:e} breaks self-containment"
            )));
        }
    }
    for (idx, c) in cost.entries().iter().enumerate() {
        if c.is_none() && lambda.as_slice()[idx].abs() > CHECK_TOL {
            return Err(Error::NumericalBreakdown(format!(
                "payment {idx} should be forced to zero"
            )));
        }
    }
    if opts.honest_invariance != HonestInvariance::Off {
        let honest = tree.honest_outcome(&tree.node(tree.root()).id, profile)?;
        let charged = lambda.mul(info.phi())?;
        for i in 0..lambda.rows() {
            let per_leaf: Vec<f64> = honest.support().iter().map(|&h| charged[(i, h)]).collect();
            let worst = match opts.honest_invariance {
                HonestInvariance::PerLeaf => per_leaf.iter().fold(0.0f64, |m, v| m.max(v.abs())),
                _ => honest
                    .support()
                    .iter()
                    .map(|&h| honest.weights[h] * charged[(i, h)])
                    .sum::<f64>()
                    .abs(),
            };
            if worst > CHECK_TOL {
                return Err(Error::NumericalBreakdown(format!(
                    "honest payments of player {i} are {worst:e}, expected 0"
                )));
            }
        }
    }
    Ok(())
}

/// Smallest achievable largest deposit for 0-strong t-robust security;
/// `+inf` when no self-contained scheme exists.
pub fn minmax_deposit(
    tree: &GameTree,
    info: &InfoStructure,
    profile: &StrategyProfile,
    t: usize,
) -> Result<f64> {
    let params = SecurityParams::new(0.0, t)?;
    let cost = CostVector::unit(tree.num_players(), info.num_symbols());
    let opts = SynthesisOptions {
        objective: Objective::MinMaxDeposit,
        ..SynthesisOptions::default()
    };
    match synthesize(tree, info, profile, params, &cost, opts) {
        Ok(s) => Ok(s.value),
        Err(Error::Infeasible(_)) => Ok(f64::INFINITY),
        Err(e) => Err(e),
    }
}
