//! Combinatorial bandits with a regret/inference trade-off.
//!
//! The crate implements two mixture-based algorithms that balance cumulative
//! regret against the accuracy of adaptive gap estimates:
//!
//! - [`mixcombkl`]: online stochastic mirror descent with KL projection for
//!   full-bandit feedback (only `f(M, w) = sum w(e)` is observed), mixed with
//!   uniform exploration at rate `1 / (2 t^alpha)`.
//! - [`mixcombucb`]: UCB with forced sampling of covering super arms for
//!   semi-bandit feedback, with inverse-propensity gap estimators.
//!
//! Supporting modules: [`instance`] (families, reward laws, oracle, true
//! gaps), [`geometry`] (covariances, pseudo-inverses, problem constants,
//! decomposition, KL projection), [`metrics`] and [`harness`] (seeded
//! experiments, CSV/JSON output).
//!
//! Runnable walkthroughs live in this crate's `examples/` directory.

pub mod error;
pub mod geometry;
pub mod harness;
pub mod instance;
pub mod metrics;
pub mod mixcombkl;
pub mod mixcombucb;

pub use error::{Error, Result};
pub use instance::{BanditInstance, GapTable, GapTables, NoiseLaw, SuperArmFamily};
