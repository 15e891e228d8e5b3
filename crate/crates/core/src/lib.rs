//! Payment (deposit) schemes for finite extensive-form games of perfect
//! information whose outcome is only observed through a noisy signal.
//!
//! A game is a [`GameTree`] together with an [`InfoStructure`], i.e. an
//! alphabet of symbols and a column-stochastic emission matrix giving, for
//! every leaf, the distribution of the symbol an outside observer sees. A
//! [`PaymentScheme`] charges player `i` the amount `lambda[i][k]` whenever
//! symbol `k` is observed, which turns the utility matrix `U` into the
//! implemented matrix `E = U - Lambda * Phi`.
//!
//! The crate can
//!
//! * check whether an intended profile is a delta-strong t-robust equilibrium
//!   of the augmented game ([`security`]),
//! * synthesize cheapest or min-max-deposit schemes through a dense simplex
//!   solver ([`synthesis`], [`lp`]),
//! * compute closed-form schemes from a target matrix ([`info`]),
//! * bound the largest deposit from below ([`bounds`]),
//! * simulate the deposit/refund lifecycle ([`escrow`]), and
//! * build the worked examples and reduction gadgets ([`cases`],
//!   [`reductions`]).
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod bounds;
pub mod cases;
pub mod error;
pub mod escrow;
pub mod game;
pub mod info;
pub mod linalg;
pub mod lp;
pub mod reductions;
pub mod security;
pub mod synthesis;
pub mod tol;

pub use error::{Error, Result};
pub use game::{GameTree, NodeId, NodeKind, NodeSpec, StrategyProfile};
pub use info::{InfoStructure, PaymentScheme};
pub use linalg::Matrix;
pub use security::{ConstraintSystem, SecurityParams};
