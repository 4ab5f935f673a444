//! Discrete-probability inference over finite domains with an explicit causal
//! reading of "insufficient reason".
//!
//! The crate provides two families of probability assignment rules and the
//! machinery to compare them:
//!
//! - **Uniform priors** ([`pir`]): assign a uniform prior over the admissible
//!   cause values of a relation, then a uniform conditional over the remaining
//!   effect options per cause — versus the symmetric rule that spreads mass
//!   uniformly over all admissible pairs. Likelihood comparison between the two
//!   orientations yields a causal direction call.
//! - **Entropy maximization** ([`maxent`], [`causal`]): classical maximum
//!   entropy under linear expectation constraints (exponential-family dual,
//!   damped Newton), and the sequential variant that maximizes the cause's
//!   marginal entropy first and conditional entropies afterwards, including
//!   the generalization to arbitrary DAGs with infeasibility and
//!   order-sensitivity reporting.
//!
//! Supporting modules:
//!
//! - [`dist`]: finite domains, joint/conditional tables in exact-rational or
//!   floating arithmetic, relations, linear constraints, entropy functionals.
//! - [`counting`]: exact big-integer multinomial counts and exhaustive
//!   censuses of empirical distributions over constrained tuple spaces.
//! - [`igci`]: fat-pen grid relations around monotone functions, option-count
//!   scores, and the slope-based direction score they approximate.
//! - [`scenario`]: JSON scenario files, bundled fixtures, and the report
//!   emission backing the `causal-entropy` binary.
//!
//! Everything is deterministic: fixed seeds, stable orderings, and exact
//! arithmetic wherever a result is a ratio of counts.

pub mod causal;
pub mod counting;
pub mod dist;
pub mod error;
pub mod igci;
pub mod maxent;
mod opt;
pub mod pir;
pub mod scenario;

pub use dist::{ConditionalTable, FiniteDomain, LinearConstraint, ProbTable, Relation};
pub use error::Error;
