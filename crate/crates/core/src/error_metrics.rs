//! Empirical L²-type truncation error and its Monte Carlo mean.
//!
//! For full and truncated correlated paths,
//!
//! ```text
//! ε̂ = (1/m) Σ_i Σ_{j=1..m} (Z_full[i][j] − Z_trunc[i][j])²
//! ```
//!
//! With the zero guess for the dropped driver paths this collapses to
//! `((1−ρ²)/m) Σ_{i>ñ} Σ_j B[i][j]²`. Both forms are provided; they agree
//! path by path.

use std::fmt;

use rayon::prelude::*;

use crate::budget::{expected_error, BudgetParams};
use crate::correlator::{correlate, truncate_budget, Correlation};
use crate::error::{Error, Result};
use crate::grid::{make_grid, simulate_paths, PathMatrix, Seed};
use crate::summation::ordered_sum;

/// Verdict cutoff on `|z|`, in standard errors.
pub const Z_THRESHOLD: f64 = 3.0;

/// One realisation of `ε̂`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorSample {
    pub value: f64,
    /// Number of squared differences summed.
    pub n_terms: usize,
}

/// Defining form of `ε̂`. Column `j = 0` is skipped; `m` is the grid's step
/// count.
pub fn empirical_error(z_full: &PathMatrix, z_trunc: &PathMatrix) -> Result<ErrorSample> {
    z_full.check_same_shape(z_trunc)?;
    let m = z_full.steps();
    let n_terms = z_full.n() * m;
    let terms = z_full.rows().zip(z_trunc.rows()).flat_map(|(a, b)| {
        a[1..].iter().zip(&b[1..]).map(|(x, y)| {
            let d = x - y;
            d * d
        })
    });
    let value = ordered_sum(terms, n_terms) / m as f64;
    Ok(ErrorSample { value, n_terms })
}

/// Reduced form of `ε̂` computed from the driver alone: only rows past
/// `n_tilde` contribute. Returns exactly zero when `n_tilde = n`.
pub fn empirical_error_reduced(b: &PathMatrix, rho: Correlation, n_tilde: usize) -> Result<ErrorSample> {
    if n_tilde > b.n() {
        return Err(Error::param(
            "n_tilde",
            format!("{n_tilde} exceeds the path count {}", b.n()),
        ));
    }
    if n_tilde == b.n() {
        return Ok(ErrorSample { value: 0.0, n_terms: 0 });
    }
    let m = b.steps();
    let n_terms = (b.n() - n_tilde) * m;
    let terms = b.rows().skip(n_tilde).flat_map(|r| r[1..].iter().map(|v| v * v));
    let sum = ordered_sum(terms, n_terms);
    Ok(ErrorSample {
        value: rho.one_minus_rho_sq() / m as f64 * sum,
        n_terms,
    })
}

/// Monte Carlo estimate of `E[ε̂]` against the closed-form value.
#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub params: BudgetParams,
    pub n_tilde: usize,
    pub seed: Seed,
    pub replications: usize,
    pub empirical_mean: f64,
    pub empirical_stderr: f64,
    pub analytic_mean: f64,
    pub z_score: f64,
    pub pass: bool,
}

impl VerificationReport {
    /// Single-line `key=value` form for scripts.
    pub fn machine_line(&self) -> String {
        format!(
            "n={} m={} rho={:?} eps={:?} n_tilde={} seed={} stream={} replications={} \
             empirical_mean={:?} empirical_stderr={:?} analytic_mean={:?} z_score={:?} pass={}",
            self.params.n(),
            self.params.m(),
            self.params.rho().rho(),
            self.params.eps(),
            self.n_tilde,
            self.seed.master,
            self.seed.stream,
            self.replications,
            self.empirical_mean,
            self.empirical_stderr,
            self.analytic_mean,
            self.z_score,
            self.pass
        )
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "verification  n={} m={} rho={} eps={}",
            self.params.n(),
            self.params.m(),
            self.params.rho().rho(),
            self.params.eps()
        )?;
        writeln!(f, "  n_tilde          {}", self.n_tilde)?;
        writeln!(f, "  seed             {} (stream {})", self.seed.master, self.seed.stream)?;
        writeln!(f, "  replications     {}", self.replications)?;
        writeln!(f, "  empirical mean   {:.10}", self.empirical_mean)?;
        writeln!(f, "  standard error   {:.10}", self.empirical_stderr)?;
        writeln!(f, "  analytic mean    {:.10}", self.analytic_mean)?;
        writeln!(f, "  z-score          {:.4}", self.z_score)?;
        write!(f, "  verdict          {}", if self.pass { "PASS" } else { "FAIL" })
    }
}

/// Runs `replications` independent copies of: simulate `W` and `B`,
/// correlate, truncate `B` to `n_tilde` paths, measure `ε̂`.
///
/// Replication `r` draws `W` from `seed.substream(r).substream(0)` and `B`
/// from `seed.substream(r).substream(1)`. Per-replication values are stored
/// by index and reduced in order, so the report does not depend on the
/// thread count.
pub fn monte_carlo_mean_error(
    p: &BudgetParams,
    n_tilde: usize,
    replications: usize,
    seed: Seed,
) -> Result<VerificationReport> {
    if replications < 2 {
        return Err(Error::param("replications", "at least 2 replications are needed"));
    }
    let analytic_mean = expected_error(p.n(), p.m(), p.rho(), n_tilde)?;
    let grid = make_grid(p.m())?;
    let samples = (0..replications as u64)
        .into_par_iter()
        .map(|r| {
            let rep = seed.substream(r);
            let w = simulate_paths(p.n(), &grid, rep.substream(0));
            let b = simulate_paths(p.n(), &grid, rep.substream(1));
            let full = correlate(&w, &b, p.rho())?;
            let trunc = correlate(&w, &truncate_budget(&b, n_tilde)?, p.rho())?;
            Ok(empirical_error(full.z(), trunc.z())?.value)
        })
        .collect::<Result<Vec<f64>>>()?;

    let (empirical_mean, empirical_stderr) = mean_and_stderr(&samples);
    let z_score = if empirical_stderr > 0.0 {
        (empirical_mean - analytic_mean) / empirical_stderr
    } else if empirical_mean == analytic_mean {
        0.0
    } else {
        f64::INFINITY.copysign(empirical_mean - analytic_mean)
    };
    let pass = z_score.abs() <= Z_THRESHOLD || (empirical_mean == 0.0 && analytic_mean == 0.0);
    Ok(VerificationReport {
        params: *p,
        n_tilde,
        seed,
        replications,
        empirical_mean,
        empirical_stderr,
        analytic_mean,
        z_score,
        pass,
    })
}

/// [`monte_carlo_mean_error`] with one retry under [`Seed::reseed`] if the
/// first run fails. Returns the last report and the number of attempts.
pub fn verify_expectation(
    p: &BudgetParams,
    n_tilde: usize,
    replications: usize,
    seed: Seed,
) -> Result<(VerificationReport, usize)> {
    let first = monte_carlo_mean_error(p, n_tilde, replications, seed)?;
    if first.pass {
        return Ok((first, 1));
    }
    Ok((monte_carlo_mean_error(p, n_tilde, replications, seed.reseed())?, 2))
}

/// Sample mean and `stdev/√R`, both in index order.
fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let len = xs.len() as f64;
    let mean = ordered_sum(xs.iter().copied(), xs.len()) / len;
    let ss = ordered_sum(xs.iter().map(|x| (x - mean) * (x - mean)), xs.len());
    let var = ss / (len - 1.0);
    (mean, (var / len).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn corr(r: f64) -> Correlation {
        Correlation::new(r).unwrap()
    }

    #[test]
    fn identical_matrices_have_zero_error() {
        let g = make_grid(4).unwrap();
        let z = simulate_paths(5, &g, Seed::new(1, 2));
        assert_eq!(empirical_error(&z, &z).unwrap().value, 0.0);
    }

    #[test]
    fn single_term() {
        let g = make_grid(1).unwrap();
        let full = PathMatrix::from_rows(&g, &[vec![0.0, 1.7]]).unwrap();
        let trunc = PathMatrix::zeros(1, &g);
        let e = empirical_error(&full, &trunc).unwrap();
        assert_eq!(e.value, 1.7 * 1.7);
        assert_eq!(e.n_terms, 1);
    }

    #[test]
    fn two_by_two_hand_sum() {
        let g = make_grid(2).unwrap();
        let full = PathMatrix::from_rows(&g, &[vec![0.0, 0.3, -0.2], vec![0.0, 1.0, 2.0]]).unwrap();
        let trunc = PathMatrix::from_rows(&g, &[vec![0.0, 0.3, -0.2], vec![0.0, 0.5, 2.5]]).unwrap();
        assert_eq!(empirical_error(&full, &trunc).unwrap().value, 0.25);
    }

    #[test]
    fn shape_mismatch() {
        let a = PathMatrix::zeros(2, &make_grid(2).unwrap());
        let b = PathMatrix::zeros(3, &make_grid(2).unwrap());
        assert!(matches!(empirical_error(&a, &b), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn reduced_examples() {
        let g = make_grid(1).unwrap();
        let b = PathMatrix::from_rows(&g, &[vec![0.0, 2.0]]).unwrap();
        assert_eq!(empirical_error_reduced(&b, corr(0.0), 0).unwrap().value, 4.0);
        assert_eq!(empirical_error_reduced(&b, corr(0.0), 1).unwrap(), ErrorSample { value: 0.0, n_terms: 0 });
        let b = simulate_paths(6, &make_grid(3).unwrap(), Seed::new(4, 4));
        assert_eq!(empirical_error_reduced(&b, corr(1.0), 2).unwrap().value, 0.0);
        assert_eq!(empirical_error_reduced(&b, corr(-1.0), 0).unwrap().value, 0.0);
        assert!(matches!(
            empirical_error_reduced(&b, corr(0.0), 7),
            Err(Error::InvalidParameter { name: "n_tilde", .. })
        ));
    }

    #[test]
    fn replication_count_validated() {
        let p = BudgetParams::new(4, 4, 0.0, 1.0).unwrap();
        assert!(matches!(
            monte_carlo_mean_error(&p, 2, 1, Seed::new(0, 0)),
            Err(Error::InvalidParameter { name: "replications", .. })
        ));
    }

    #[test]
    fn degenerate_runs_are_exact_zeros() {
        let p = BudgetParams::new(10, 10, 1.0, 0.5).unwrap();
        let r = monte_carlo_mean_error(&p, 3, 20, Seed::new(7, 0)).unwrap();
        assert_eq!((r.empirical_mean, r.analytic_mean), (0.0, 0.0));
        assert!(r.pass);

        let p = BudgetParams::new(10, 10, 0.0, 0.001).unwrap();
        let r = monte_carlo_mean_error(&p, 10, 20, Seed::new(7, 0)).unwrap();
        assert_eq!(r.empirical_mean, 0.0);
        assert_eq!(r.empirical_stderr, 0.0);
        assert!(r.pass);
    }

    #[test]
    fn report_is_thread_count_invariant() {
        let p = BudgetParams::new(20, 8, -0.4, 2.0).unwrap();
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| monte_carlo_mean_error(&p, 9, 50, Seed::new(123, 0)).unwrap())
        };
        let a = run(1);
        let b = run(3);
        assert_eq!(a.empirical_mean.to_bits(), b.empirical_mean.to_bits());
        assert_eq!(a.machine_line(), b.machine_line());
    }

    #[test]
    fn unbiased_over_test_grid() {
        let p = BudgetParams::new(10, 10, 0.0, 1.0).unwrap();
        let (r, _) = verify_expectation(&p, 5, 1000, Seed::new(31, 0)).unwrap();
        assert!((r.analytic_mean - 2.75).abs() < 1e-12);
        assert!(r.pass, "{r}");

        let p = BudgetParams::new(100, 100, 0.5, 10.0).unwrap();
        let (r, _) = verify_expectation(&p, 74, 1000, Seed::new(31, 0)).unwrap();
        assert!(r.pass, "{r}");

        let p = BudgetParams::new(50, 20, -0.8, 4.0).unwrap();
        let n_tilde = crate::budget::n_tilde_formula(&p).n_tilde;
        let (r, _) = verify_expectation(&p, n_tilde, 1000, Seed::new(31, 0)).unwrap();
        assert!(r.pass, "{r}");
    }

    #[test]
    fn per_step_second_moment_matches_time() {
        // Average of B_{t_j}² over paths and replications against t_j.
        let (n, m, reps) = (200, 8, 50);
        let g = make_grid(m).unwrap();
        let mut sq = vec![Vec::with_capacity(n * reps); m + 1];
        for r in 0..reps {
            let b = simulate_paths(n, &g, Seed::new(77, r as u64));
            for row in b.rows() {
                for j in 1..=m {
                    sq[j].push(row[j] * row[j]);
                }
            }
        }
        for (j, col) in sq.iter().enumerate().skip(1) {
            let (mean, se) = mean_and_stderr(col);
            let t = j as f64 / m as f64;
            assert!((mean - t).abs() <= 3.0 * se, "j={j}: {mean} vs {t} (se {se})");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn error_nonincreasing_in_budget(n in 1usize..10, m in 1usize..8, r in -1.0f64..=1.0, s in any::<u64>()) {
            let b = simulate_paths(n, &make_grid(m).unwrap(), Seed::new(s, 3));
            let vals: Vec<f64> = (0..=n).map(|k| empirical_error_reduced(&b, corr(r), k).unwrap().value).collect();
            prop_assert!(vals.iter().all(|v| *v >= 0.0));
            prop_assert!(vals.windows(2).all(|w| w[0] >= w[1]));
        }
    }
}
