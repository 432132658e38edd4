//! Closed-form path budget and the expected truncation error.
//!
//! Truncating the driver `B` to its first `ñ` paths (zero guess for the rest)
//! has expected error
//!
//! ```text
//! E[ε̂] = (1 − ρ²)(n − ñ)(m + 1)/(2m)
//! ```
//!
//! and the smallest `ñ` keeping this strictly below `ε` is given in closed
//! form by [`n_tilde_formula`]. [`n_tilde_oracle`] finds the same number by
//! exhaustive scan and exists to cross-check the closed form.
//!
//! When `2mε/((m+1)(1−ρ²))` is an integer `k ≤ n` the closed form returns
//! `n − k`, where the expected error equals `ε` exactly, while the scan
//! returns `n − k + 1`. The closed form is what the public API reports.

use crate::correlator::Correlation;
use crate::error::{Error, Result};

/// Inputs of the budget formula.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BudgetParams {
    n: usize,
    m: usize,
    rho: Correlation,
    eps: f64,
}

impl BudgetParams {
    pub fn new(n: usize, m: usize, rho: f64, eps: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::param("n", "path count must be at least 1"));
        }
        if m == 0 {
            return Err(Error::param("m", "grid needs at least one step"));
        }
        let rho = Correlation::new(rho)?;
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::param("eps", format!("{eps} is not a positive finite tolerance")));
        }
        Ok(BudgetParams { n, m, rho, eps })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn rho(&self) -> Correlation {
        self.rho
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// `n(m+1)(1−ρ²)/(2m)`: tolerances at or above this need no `B` paths.
    pub fn threshold(&self) -> f64 {
        unchecked_expected_error(self.n, self.m, self.rho, 0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BudgetResult {
    pub n_tilde: usize,
    pub threshold: f64,
    pub expected_error: f64,
}

/// Closed-form budget `1{ε < threshold} · ⌈n − 2mε/((m+1)(1−ρ²))⌉`.
///
/// The indicator is tested first, so `|ρ| = 1` (threshold 0) never reaches
/// the division. The ceiling is clamped into `[0, n]`.
pub fn n_tilde_formula(p: &BudgetParams) -> BudgetResult {
    let threshold = p.threshold();
    let n_tilde = if p.eps < threshold {
        let (n, m) = (p.n as f64, p.m as f64);
        let saved = 2.0 * m * p.eps / ((m + 1.0) * p.rho.one_minus_rho_sq());
        (n - saved).ceil().clamp(0.0, n) as usize
    } else {
        0
    };
    BudgetResult {
        n_tilde,
        threshold,
        expected_error: unchecked_expected_error(p.n, p.m, p.rho, n_tilde),
    }
}

/// `E[ε̂] = (1−ρ²)(n−ñ)(m+1)/(2m)` for a budget of `n_tilde` driver paths.
pub fn expected_error(n: usize, m: usize, rho: Correlation, n_tilde: usize) -> Result<f64> {
    if m == 0 {
        return Err(Error::param("m", "grid needs at least one step"));
    }
    if n_tilde > n {
        return Err(Error::param("n_tilde", format!("{n_tilde} exceeds the path count {n}")));
    }
    Ok(unchecked_expected_error(n, m, rho, n_tilde))
}

fn unchecked_expected_error(n: usize, m: usize, rho: Correlation, n_tilde: usize) -> f64 {
    let dropped = (n - n_tilde) as f64;
    let m = m as f64;
    rho.one_minus_rho_sq() * dropped * (m + 1.0) / (2.0 * m)
}

/// Smallest `ñ ∈ {0, …, n}` with `E[ε̂] < ε`, by linear scan.
pub fn n_tilde_oracle(p: &BudgetParams) -> usize {
    (0..=p.n)
        .find(|&k| unchecked_expected_error(p.n, p.m, p.rho, k) < p.eps)
        .expect("expected error vanishes at n_tilde = n")
}
