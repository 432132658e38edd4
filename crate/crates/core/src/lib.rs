//! Path budgets for simulating two correlated Brownian motions.
//!
//! Given `n` simulated paths of a pair `(W, Z)` with `Z = ρW + √(1−ρ²)B`,
//! only `ñ ≤ n` paths of the independent driver `B` are needed to keep the
//! mean squared grid error below a tolerance `ε`:
//!
//! ```text
//! ñ = 1{ε < n(m+1)(1−ρ²)/(2m)} · ⌈n − 2mε/((m+1)(1−ρ²))⌉
//! ```
//!
//! The crate provides the closed form ([`budget`]), the simulation stack that
//! checks it empirically ([`grid`], [`correlator`], [`error_metrics`]) and the
//! ρ-sweep used for plotting ([`sweep`]).

pub mod budget;
pub mod correlator;
pub mod error;
pub mod error_metrics;
pub mod grid;
mod summation;
pub mod sweep;

pub use budget::{expected_error, n_tilde_formula, n_tilde_oracle, BudgetParams, BudgetResult};
pub use correlator::{cholesky_factor, correlate, truncate_budget, CorrelatedPair, Correlation};
pub use error::{Error, Result};
pub use error_metrics::{
    empirical_error, empirical_error_reduced, monte_carlo_mean_error, verify_expectation,
    ErrorSample, VerificationReport, Z_THRESHOLD,
};
pub use grid::{make_grid, simulate_paths, PathMatrix, Seed, TimeGrid};
pub use sweep::{SweepConfig, SweepRow};
