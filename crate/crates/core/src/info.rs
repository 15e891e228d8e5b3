//! Information structures, payment schemes and the utilities they implement.
//!
//! Playing a game under a scheme `Lambda` (n x s) with emission matrix
//! `Phi` (s x m) changes the expected utility of player `i` at leaf `j` to
//! `u_ij - sum_k lambda_ik * phi_kj`, i.e. `E = U - Lambda * Phi`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::game::{check_pdf, GameTree};
use crate::linalg::{Matrix, Svd};
use crate::tol;

/// An ordered alphabet and a column-stochastic `s x m` emission matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct InfoStructure {
    alphabet: Vec<String>,
    phi: Matrix,
}

impl InfoStructure {
    pub fn new(alphabet: Vec<String>, phi: Matrix) -> Result<Self> {
        if alphabet.is_empty() {
            return Err(Error::DimensionMismatch {
                what: "alphabet size",
                expected: 1,
                found: 0,
            });
        }
        if phi.rows() != alphabet.len() {
            return Err(Error::DimensionMismatch {
                what: "emission matrix rows",
                expected: alphabet.len(),
                found: phi.rows(),
            });
        }
        for j in 0..phi.cols() {
            check_pdf(&format!("column {j}"), &phi.column(j), phi.rows(), "emission column")?;
        }
        Ok(InfoStructure { alphabet, phi })
    }

    /// Collects the leaf emission pdfs of `tree` under the given symbol names.
    pub fn from_tree(tree: &GameTree, alphabet: Vec<String>) -> Result<Self> {
        if alphabet.len() != tree.num_symbols() {
            return Err(Error::DimensionMismatch {
                what: "alphabet size",
                expected: tree.num_symbols(),
                found: alphabet.len(),
            });
        }
        InfoStructure::new(alphabet, tree.emission_matrix())
    }

    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    pub fn phi(&self) -> &Matrix {
        &self.phi
    }

    pub fn num_symbols(&self) -> usize {
        self.phi.rows()
    }

    pub fn num_leaves(&self) -> usize {
        self.phi.cols()
    }
}

/// `lambda[i][k]`: utility player `i` loses when symbol `k` is observed.
#[derive(Clone, Debug, PartialEq)]
pub struct PaymentScheme {
    lambda: Matrix,
}

impl PaymentScheme {
    pub fn new(lambda: Matrix) -> Result<Self> {
        if !lambda.is_finite() {
            return Err(Error::BadParameters("payment scheme has non-finite entries".into()));
        }
        Ok(PaymentScheme { lambda })
    }

    pub fn zeros(players: usize, symbols: usize) -> Self {
        PaymentScheme {
            lambda: Matrix::zeros(players, symbols),
        }
    }

    pub fn matrix(&self) -> &Matrix {
        &self.lambda
    }

    pub fn into_matrix(self) -> Matrix {
        self.lambda
    }

    pub fn num_players(&self) -> usize {
        self.lambda.rows()
    }

    pub fn num_symbols(&self) -> usize {
        self.lambda.cols()
    }

    /// Per-player deposit `max_k lambda_ik`, enough to cover every outcome.
    pub fn max_deposits(&self) -> Vec<f64> {
        (0..self.lambda.rows())
            .map(|i| {
                self.lambda
                    .row(i)
                    .iter()
                    .copied()
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect()
    }

    pub fn diagnostics(&self) -> SchemeDiagnostics {
        let column_sums = self.lambda.column_sums();
        let self_contained = column_sums.iter().all(|&c| c >= -tol::COLUMN_SUM);
        let zero_inflation = column_sums.iter().all(|&c| c.abs() <= tol::COLUMN_SUM);
        SchemeDiagnostics {
            column_sums,
            self_contained,
            zero_inflation,
            max_deposits: self.max_deposits(),
            max_abs: self.lambda.max_abs(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SchemeDiagnostics {
    /// Total forfeited per symbol; negative means the scheme would mint money.
    pub column_sums: Vec<f64>,
    pub self_contained: bool,
    pub zero_inflation: bool,
    pub max_deposits: Vec<f64>,
    pub max_abs: f64,
}

/// `U - Lambda * Phi`.
pub fn implemented_utilities(
    utilities: &Matrix,
    scheme: &PaymentScheme,
    info: &InfoStructure,
) -> Result<Matrix> {
    if scheme.num_players() != utilities.rows() {
        return Err(Error::DimensionMismatch {
            what: "payment scheme players",
            expected: utilities.rows(),
            found: scheme.num_players(),
        });
    }
    if info.num_leaves() != utilities.cols() {
        return Err(Error::DimensionMismatch {
            what: "emission matrix leaves",
            expected: utilities.cols(),
            found: info.num_leaves(),
        });
    }
    let charged = scheme.matrix().mul(info.phi())?;
    utilities.sub(&charged)
}

#[derive(Clone, Debug, PartialEq)]
pub struct LeftInverse {
    /// `m x s` matrix `M` with `M * Phi = I`.
    pub matrix: Matrix,
    pub rank: usize,
}

/// Minimum-norm left inverse of the emission matrix, if it has full column rank.
pub fn left_inverse(info: &InfoStructure) -> Result<LeftInverse> {
    let svd = Svd::new(info.phi());
    let rank = svd.rank(tol::RANK_RELATIVE);
    let required = info.num_leaves();
    if rank < required {
        return Err(Error::NotLeftInvertible { rank, required });
    }
    Ok(LeftInverse {
        matrix: svd.pseudo_inverse(tol::RANK_RELATIVE),
        rank,
    })
}

/// Finds the minimum-norm `Lambda` with `U - Lambda * Phi = target`.
///
/// Each row of `U - target` must lie in the row space of `Phi`; this works
/// whether or not `Phi` is left-invertible as long as the target is
/// representable. Fails with the worst row residual otherwise.
pub fn scheme_for_target(
    utilities: &Matrix,
    target: &Matrix,
    info: &InfoStructure,
) -> Result<PaymentScheme> {
    if target.shape() != utilities.shape() {
        return Err(Error::DimensionMismatch {
            what: "target utility matrix",
            expected: utilities.rows() * utilities.cols(),
            found: target.rows() * target.cols(),
        });
    }
    if info.num_leaves() != utilities.cols() {
        return Err(Error::DimensionMismatch {
            what: "emission matrix leaves",
            expected: utilities.cols(),
            found: info.num_leaves(),
        });
    }
    let diff = utilities.sub(target)?;
    let pinv = Svd::new(info.phi()).pseudo_inverse(tol::RANK_RELATIVE);
    // lambda_row * Phi = diff_row  =>  lambda_row = diff_row * Phi^+
    let lambda = diff.mul(&pinv)?;
    let back = lambda.mul(info.phi())?;
    let mut worst = (0, 0.0f64);
    for i in 0..diff.rows() {
        let r = back
            .row(i)
            .iter()
            .zip(diff.row(i))
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        if r > worst.1 {
            worst = (i, r);
        }
    }
    if worst.1 >= tol::RESIDUAL {
        return Err(Error::TargetNotImplementable {
            worst_row: worst.0,
            residual: worst.1,
        });
    }
    PaymentScheme::new(lambda)
}

/// Necessary condition for a zero-inflation implementation of `target`:
/// every column of `U - target` sums to zero.
pub fn zero_inflation_precondition(utilities: &Matrix, target: &Matrix) -> Result<bool> {
    let diff = utilities.sub(target)?;
    Ok(diff
        .column_sums()
        .iter()
        .all(|c| c.abs() <= tol::ZERO_INFLATION_PRECONDITION))
}
