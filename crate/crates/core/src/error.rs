use alloc::boxed::Box;
use alloc::string::String;
use core::fmt;

use crate::security::ConstraintSystem;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Clone, Debug, PartialEq)]
pub enum Error {
    DuplicateNodeId(String),
    BadProbabilitySum {
        node: String,
        sum: f64,
    },
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    /// A node or move is malformed (empty branch, negative probability, unknown owner, ...).
    InvalidNode {
        node: String,
        reason: String,
    },
    MissingBranchChoice(String),
    UnknownMove {
        node: String,
        action: String,
    },
    UnknownNodeId(String),
    NotLeftInvertible {
        rank: usize,
        required: usize,
    },
    TargetNotImplementable {
        worst_row: usize,
        residual: f64,
    },
    /// A pivot fell below the breakdown threshold or the iteration limit was hit.
    NumericalBreakdown(String),
    /// The payment-scheme program has no feasible point. Carries the constraint system.
    Infeasible(Box<ConstraintSystem>),
    /// The objective is unbounded below, which signals a modelling error in the costs.
    Unbounded,
    NoConstraints,
    PreconditionViolated(String),
    NegativeComponent {
        index: usize,
        value: f64,
    },
    PatternViolated {
        player: usize,
        symbol: usize,
        value: f64,
    },
    BadParameters(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DuplicateNodeId(id) => write!(f, "duplicate node id `{id}`"),
            Error::BadProbabilitySum { node, sum } => {
                write!(f, "probabilities at `{node}` sum to {sum}, expected 1")
            }
            Error::DimensionMismatch {
                what,
                expected,
                found,
            } => write!(f, "{what}: expected dimension {expected}, found {found}"),
            Error::InvalidNode { node, reason } => write!(f, "invalid node `{node}`: {reason}"),
            Error::MissingBranchChoice(id) => write!(f, "profile has no move for branch `{id}`"),
            Error::UnknownMove { node, action } => {
                write!(f, "branch `{node}` has no move `{action}`")
            }
            Error::UnknownNodeId(id) => write!(f, "unknown node id `{id}`"),
            Error::NotLeftInvertible { rank, required } => write!(
                f,
                "emission matrix has rank {rank}, needs rank {required} to be left-invertible"
            ),
            Error::TargetNotImplementable {
                worst_row,
                residual,
            } => write!(
                f,
                "target utilities are not implementable: row {worst_row} leaves residual {residual:e}"
            ),
            Error::NumericalBreakdown(msg) => write!(f, "numerical breakdown: {msg}"),
            Error::Infeasible(system) => write!(
                f,
                "no self-contained payment scheme satisfies the {} security constraints",
                system.len()
            ),
            Error::Unbounded => write!(f, "objective is unbounded below; check the cost vector"),
            Error::NoConstraints => write!(f, "the game yields no security constraints"),
            Error::PreconditionViolated(msg) => write!(f, "precondition violated: {msg}"),
            Error::NegativeComponent { index, value } => {
                write!(f, "component {index} is negative ({value})")
            }
            Error::PatternViolated {
                player,
                symbol,
                value,
            } => write!(
                f,
                "payment [{player}][{symbol}] = {value} should be forced to zero"
            ),
            Error::BadParameters(msg) => write!(f, "bad parameters: {msg}"),
        }
    }
}

impl core::error::Error for Error {}
