//! Greedy approximation with initial segments of the Haar basis in `L_p`.
//!
//! The X-Greedy and Dual Greedy algorithms (and their weak variants) run on
//! exact piecewise-constant representations of Haar expansions. Alongside the
//! algorithms the crate provides the combinatorics used to bound their
//! termination time: interval partitions of basis positions, Property P
//! ratios and the step bounds built from them.
//!
//! Module map:
//! - [`haar`]: Haar functions, dyadic grids, analysis and synthesis.
//! - [`lp`]: norming functionals, the one-dimensional line search, sampled
//!   smoothness and contraction constants.
//! - [`greedy`]: selection rules, the residual update and run traces.
//! - [`partition`]: interval partitions, bounds and trace replay checks.
//! - [`experiments`]: seeded campaigns, the Euclidean counterexample and
//!   trace serialization used by the `haar-greedy` binary.

pub mod error;
pub mod experiments;
pub mod exponent;
pub mod greedy;
pub mod haar;
pub mod lp;
pub mod numeric;
pub mod partition;

pub use error::{Error, Result};
pub use exponent::Exponent;
pub use greedy::{AlgorithmConfig, AlgorithmKind, GreedyEngine, GreedyTrace, TraceStatus};
pub use haar::{DyadicFunction, HaarCoefficients, HaarDictionary, IndexSet};
pub use partition::IntervalPartition;
