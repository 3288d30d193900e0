//! Geometric stick-breaking and its negative-binomial extension: frequency
//! sequences, priors on the success probability, tail counts, expected
//! numbers of distinct values (exact, Poissonized, simulated), and the
//! asymptotic expansions of that expectation as evaluable comparators.

// `!(x > a)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod expansions;
pub mod montecarlo;
pub mod occupancy;
pub mod priors;
pub mod quadrature;
pub mod specialfn;
pub mod tail_measure;
pub mod weights;

pub use error::{Error, Result};
pub use priors::SuccessPrior;
pub use specialfn::{FractionalIntegralOrder, LambertBranch, EULER_GAMMA};
pub use weights::{SuccessProbability, WeightFamily};
