//! Rank aggregation built around a two-stage inference scheme: sort candidates
//! by pointwise scores, then refine the prefix with right-to-left (RTL) passes
//! of adjacent pairwise comparisons.
//!
//! Alongside the inference strategies themselves, the crate carries the
//! analytical machinery that predicts when refinement helps:
//!
//! - [`markov`]: the swap-probability transition matrix over single-relevant
//!   states, expected-metric and gain computation, and the sufficient
//!   positive-gain condition with its order-graded polynomial decomposition;
//! - [`priors`]: class-conditional beta score distributions and the state
//!   distribution they induce over the rank of the relevant item;
//! - [`sim`]: a seeded, reproducible Monte Carlo harness that validates the
//!   analytical results and covers regimes the theory does not.

pub mod comparators;
pub mod error;
pub mod impression;
pub mod markov;
pub mod metrics;
pub mod priors;
pub mod quadrature;
pub mod seeding;
pub mod sim;
pub mod strategies;

pub use error::{Error, Result};
