//! 2×2 Cholesky correlation of independent drivers and driver truncation.
//!
//! Path indices in this module are 0-indexed in code. "Keeping `ñ` paths"
//! means keeping rows `0..ñ`, i.e. paths `1..=ñ` in 1-indexed counting.

use crate::error::{Error, Result};
use crate::grid::PathMatrix;

/// A correlation coefficient in `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correlation(f64);

impl Correlation {
    pub fn new(rho: f64) -> Result<Self> {
        if !(-1.0..=1.0).contains(&rho) {
            return Err(Error::param("rho", format!("{rho} is outside [-1, 1]")));
        }
        Ok(Correlation(rho))
    }

    pub fn rho(self) -> f64 {
        self.0
    }

    /// `1 − ρ²`, evaluated as `(1 − ρ)(1 + ρ)`; exactly zero at `|ρ| = 1` and
    /// identical for `ρ` and `−ρ`.
    pub fn one_minus_rho_sq(self) -> f64 {
        (1.0 - self.0) * (1.0 + self.0)
    }

    /// `√(1 − ρ²)`.
    pub fn rho_bar(self) -> f64 {
        self.one_minus_rho_sq().sqrt()
    }
}

/// Lower Cholesky factor `[[1, 0], [ρ, √(1−ρ²)]]` of `[[1, ρ], [ρ, 1]]`.
pub fn cholesky_factor(rho: Correlation) -> [[f64; 2]; 2] {
    [[1.0, 0.0], [rho.rho(), rho.rho_bar()]]
}

/// The pair `(W, Z)` with `Z = ρW + ρ̄B` for some driver `B`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelatedPair {
    w: PathMatrix,
    z: PathMatrix,
    rho: Correlation,
}

impl CorrelatedPair {
    pub fn w(&self) -> &PathMatrix {
        &self.w
    }

    pub fn z(&self) -> &PathMatrix {
        &self.z
    }

    pub fn rho(&self) -> Correlation {
        self.rho
    }

    pub fn into_parts(self) -> (PathMatrix, PathMatrix) {
        (self.w, self.z)
    }
}

/// Computes `z[i][j] = ρ·w[i][j] + ρ̄·b[i][j]` entrywise; `w` is passed through.
pub fn correlate(w: &PathMatrix, b: &PathMatrix, rho: Correlation) -> Result<CorrelatedPair> {
    w.check_same_shape(b)?;
    let (r, r_bar) = (rho.rho(), rho.rho_bar());
    let values = w
        .values()
        .iter()
        .zip(b.values())
        .map(|(wv, bv)| r * wv + r_bar * bv)
        .collect();
    Ok(CorrelatedPair {
        w: w.clone(),
        z: PathMatrix::from_raw(w.grid(), w.n(), values),
        rho,
    })
}

/// Keeps the first `n_tilde` paths of `b` and replaces the rest with the
/// zero path. The shape is unchanged.
pub fn truncate_budget(b: &PathMatrix, n_tilde: usize) -> Result<PathMatrix> {
    if n_tilde > b.n() {
        return Err(Error::param(
            "n_tilde",
            format!("{n_tilde} exceeds the path count {}", b.n()),
        ));
    }
    let keep = n_tilde * b.cols();
    let mut values = b.values().to_vec();
    values[keep..].fill(0.0);
    Ok(PathMatrix::from_raw(b.grid(), b.n(), values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_grid, simulate_paths, Seed};
    use proptest::prelude::*;

    fn corr(r: f64) -> Correlation {
        Correlation::new(r).unwrap()
    }

    #[test]
    fn factor_examples() {
        assert_eq!(cholesky_factor(corr(0.0)), [[1.0, 0.0], [0.0, 1.0]]);
        assert_eq!(cholesky_factor(corr(1.0)), [[1.0, 0.0], [1.0, 0.0]]);
        assert_eq!(cholesky_factor(corr(-1.0)), [[1.0, 0.0], [-1.0, 0.0]]);
        assert_eq!(cholesky_factor(corr(0.5)), [[1.0, 0.0], [0.5, 0.8660254037844386]]);
    }

    #[test]
    fn out_of_range_rejected() {
        for bad in [1.0 + 1e-12, -1.5, f64::NAN, f64::INFINITY] {
            assert!(matches!(
                Correlation::new(bad),
                Err(Error::InvalidParameter { name: "rho", .. })
            ));
        }
    }

    #[test]
    fn factor_reproduces_correlation_matrix() {
        for k in -100..=100 {
            let r = corr(k as f64 / 100.0);
            let l = cholesky_factor(r);
            // L·Lᵀ
            let a00 = l[0][0] * l[0][0] + l[0][1] * l[0][1];
            let a10 = l[1][0] * l[0][0] + l[1][1] * l[0][1];
            let a11 = l[1][0] * l[1][0] + l[1][1] * l[1][1];
            assert_eq!(a00, 1.0);
            assert_eq!(a10, r.rho());
            assert!((a11 - 1.0).abs() <= 4.0 * f64::EPSILON, "rho = {}", r.rho());
        }
    }

    fn drivers(n: usize, m: usize) -> (PathMatrix, PathMatrix) {
        let g = make_grid(m).unwrap();
        (
            simulate_paths(n, &g, Seed::new(17, 0)),
            simulate_paths(n, &g, Seed::new(17, 1)),
        )
    }

    #[test]
    fn degenerate_correlations() {
        let (w, b) = drivers(6, 5);
        assert_eq!(correlate(&w, &b, corr(1.0)).unwrap().z(), &w);
        assert_eq!(correlate(&w, &b, corr(0.0)).unwrap().z(), &b);
        assert_eq!(correlate(&w, &b, corr(-1.0)).unwrap().z(), &w.scaled(-1.0));
        assert_eq!(correlate(&w, &b, corr(0.3)).unwrap().w(), &w);
    }

    #[test]
    fn shape_mismatch() {
        let (w, _) = drivers(4, 5);
        let (_, b) = drivers(3, 5);
        assert!(matches!(correlate(&w, &b, corr(0.1)), Err(Error::InvalidArgument(_))));
        let (_, b) = drivers(4, 6);
        assert!(matches!(correlate(&w, &b, corr(0.1)), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn truncation_examples() {
        let (_, b) = drivers(2, 3);
        assert_eq!(truncate_budget(&b, 2).unwrap(), b);
        let t0 = truncate_budget(&b, 0).unwrap();
        assert!(t0.values().iter().all(|v| *v == 0.0));
        let t1 = truncate_budget(&b, 1).unwrap();
        assert_eq!(t1.row(0), b.row(0));
        assert!(t1.row(1).iter().all(|v| *v == 0.0));
        assert!(matches!(
            truncate_budget(&b, 3),
            Err(Error::InvalidParameter { name: "n_tilde", .. })
        ));
    }

    #[test]
    fn increment_correlation_matches_rho() {
        let g = make_grid(10).unwrap();
        let n = 10_000;
        let w = simulate_paths(n, &g, Seed::new(8, 0));
        let b = simulate_paths(n, &g, Seed::new(8, 1));
        for r in [-0.9, -0.5, 0.0, 0.5, 0.9] {
            let pair = correlate(&w, &b, corr(r)).unwrap();
            let (mut sxy, mut sxx, mut syy, mut k) = (0.0, 0.0, 0.0, 0usize);
            for (rw, rz) in pair.w().rows().zip(pair.z().rows()) {
                for j in 1..rw.len() {
                    let (dx, dy) = (rw[j] - rw[j - 1], rz[j] - rz[j - 1]);
                    sxy += dx * dy;
                    sxx += dx * dx;
                    syy += dy * dy;
                    k += 1;
                }
            }
            // Increments have mean zero, so uncentred moments are unbiased.
            let est = sxy / (sxx * syy).sqrt();
            let se = (1.0 - r * r) / (k as f64).sqrt();
            assert!((est - r).abs() <= 3.0 * se.max(1e-12), "rho {r}: {est}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn correlate_is_linear_in_driver(
            n in 0usize..6, m in 1usize..6, r in -1.0f64..=1.0, c in -3.0f64..3.0, s in any::<u64>()
        ) {
            let g = make_grid(m).unwrap();
            let w = simulate_paths(n, &g, Seed::new(s, 0));
            let b = simulate_paths(n, &g, Seed::new(s, 1));
            let rho = corr(r);
            let base = correlate(&w, &b, rho).unwrap();
            let scaled = correlate(&w, &b.scaled(c), rho).unwrap();
            for ((zb, zs), wv) in base.z().values().iter().zip(scaled.z().values()).zip(w.values()) {
                let lhs = zs - r * wv;
                let rhs = c * (zb - r * wv);
                prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + wv.abs() + zb.abs()) * (1.0 + c.abs()));
            }
        }

        #[test]
        fn truncation_is_idempotent(n in 0usize..8, m in 1usize..6, k in 0usize..8, s in any::<u64>()) {
            let g = make_grid(m).unwrap();
            let b = simulate_paths(n, &g, Seed::new(s, 0));
            let k = k.min(n);
            let once = truncate_budget(&b, k).unwrap();
            prop_assert_eq!(truncate_budget(&once, k).unwrap(), once);
        }

        #[test]
        fn truncation_only_moves_tail_rows(
            n in 1usize..8, m in 1usize..6, k in 0usize..8, r in -1.0f64..=1.0, s in any::<u64>()
        ) {
            let g = make_grid(m).unwrap();
            let w = simulate_paths(n, &g, Seed::new(s, 0));
            let b = simulate_paths(n, &g, Seed::new(s, 1));
            let k = k.min(n);
            let rho = corr(r);
            let full = correlate(&w, &b, rho).unwrap();
            let trunc = correlate(&w, &truncate_budget(&b, k).unwrap(), rho).unwrap();
            for i in 0..n {
                for j in 0..=m {
                    let d = trunc.z().get(i, j) - full.z().get(i, j);
                    if i < k {
                        prop_assert_eq!(d, 0.0);
                    } else {
                        let want = -rho.rho_bar() * b.get(i, j);
                        prop_assert!((d - want).abs() <= 1e-13 * (1.0 + w.get(i, j).abs() + b.get(i, j).abs()));
                    }
                }
            }
        }
    }
}
