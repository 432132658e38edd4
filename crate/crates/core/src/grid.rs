//! Uniform time grid on `[0, 1]` and seeded standard Brownian paths on it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};

/// The partition `{j/m : j = 0..m}` of the unit interval.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    steps: usize,
    times: Vec<f64>,
}

impl TimeGrid {
    /// Number of steps `m`; the grid has `m + 1` points.
    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.steps as f64
    }
}

/// Builds the uniform grid with `m` steps. `times[j]` is the correctly
/// rounded value of `j/m`, so both endpoints are exact.
pub fn make_grid(m: usize) -> Result<TimeGrid> {
    if m == 0 {
        return Err(Error::param("m", "grid needs at least one step"));
    }
    let times = (0..=m).map(|j| j as f64 / m as f64).collect();
    Ok(TimeGrid { steps: m, times })
}

/// Seed for every random draw in the crate.
///
/// `(master, stream)` selects a ChaCha8 key; path `i` of a matrix is drawn
/// from ChaCha stream `i` under that key, so any row can be generated without
/// touching the others. Child seeds for nested experiments come from
/// [`Seed::substream`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Seed {
    pub master: u64,
    pub stream: u64,
}

impl Seed {
    pub fn new(master: u64, stream: u64) -> Self {
        Seed { master, stream }
    }

    /// Child seed number `index`. The child's master is a hash of this
    /// seed's `(master, stream)`, and its stream is `index`.
    pub fn substream(self, index: u64) -> Seed {
        let key = splitmix64(self.master ^ splitmix64(self.stream.wrapping_add(0x5851_F42D_4C95_7F2D)));
        Seed {
            master: key,
            stream: index,
        }
    }

    /// A fresh seed unrelated to this one, used to rerun a failed check.
    pub fn reseed(self) -> Seed {
        Seed {
            master: splitmix64(self.master.wrapping_add(0xD1B5_4A32_D192_ED03)),
            stream: self.stream,
        }
    }

    /// Generator for row `row` of a path matrix drawn under this seed.
    pub fn row_rng(self, row: u64) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.master.to_le_bytes());
        key[8..16].copy_from_slice(&self.stream.to_le_bytes());
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(row);
        rng
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// `n` discrete paths on a shared grid, stored row-major: row `i` holds the
/// `m + 1` values of path `i` (0-indexed) at `t_0, ..., t_m`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathMatrix {
    grid: TimeGrid,
    n: usize,
    values: Vec<f64>,
}

impl PathMatrix {
    /// `n` paths that are identically zero.
    pub fn zeros(n: usize, grid: &TimeGrid) -> Self {
        PathMatrix {
            grid: grid.clone(),
            n,
            values: vec![0.0; n * (grid.steps + 1)],
        }
    }

    /// Builds a matrix from explicit rows. Every row must have `m + 1` entries
    /// and start at zero.
    pub fn from_rows(grid: &TimeGrid, rows: &[Vec<f64>]) -> Result<Self> {
        let cols = grid.steps + 1;
        let mut values = Vec::with_capacity(rows.len() * cols);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != cols {
                return Err(Error::InvalidArgument(format!(
                    "row {i} has {} values, grid has {cols} points",
                    row.len()
                )));
            }
            if row[0] != 0.0 {
                return Err(Error::InvalidArgument(format!("row {i} does not start at zero")));
            }
            values.extend_from_slice(row);
        }
        Ok(PathMatrix {
            grid: grid.clone(),
            n: rows.len(),
            values,
        })
    }

    pub(crate) fn from_raw(grid: &TimeGrid, n: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), n * (grid.steps + 1));
        PathMatrix {
            grid: grid.clone(),
            n,
            values,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn steps(&self) -> usize {
        self.grid.steps
    }

    pub fn cols(&self) -> usize {
        self.grid.steps + 1
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    /// Row `i`, 0-indexed.
    pub fn row(&self, i: usize) -> &[f64] {
        let cols = self.cols();
        &self.values[i * cols..(i + 1) * cols]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.cols())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols() + j]
    }

    /// All entries, path-major.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Every entry multiplied by `c`.
    pub fn scaled(&self, c: f64) -> PathMatrix {
        PathMatrix {
            grid: self.grid.clone(),
            n: self.n,
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }

    /// True when both matrices have the same path count and grid.
    pub fn same_shape(&self, other: &PathMatrix) -> bool {
        self.n == other.n && self.grid == other.grid
    }

    pub(crate) fn check_same_shape(&self, other: &PathMatrix) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "shape mismatch: {}x{} vs {}x{}",
                self.n,
                self.cols(),
                other.n,
                other.cols()
            )))
        }
    }
}

/// Simulates `n` independent standard Brownian paths on `grid`.
///
/// Each row is the running sum of `m` i.i.d. `N(0, 1/m)` increments drawn
/// from `seed.row_rng(i)`. Rows are filled in parallel; the result does not
/// depend on the number of worker threads.
pub fn simulate_paths(n: usize, grid: &TimeGrid, seed: Seed) -> PathMatrix {
    let cols = grid.steps + 1;
    let sd = grid.dt().sqrt();
    let mut values = vec![0.0; n * cols];
    values
        .par_chunks_mut(cols)
        .enumerate()
        .for_each(|(i, row)| fill_row(row, sd, seed.row_rng(i as u64)));
    PathMatrix::from_raw(grid, n, values)
}

fn fill_row(row: &mut [f64], sd: f64, mut rng: ChaCha8Rng) {
    let mut level = 0.0;
    row[0] = 0.0;
    for v in &mut row[1..] {
        let z: f64 = StandardNormal.sample(&mut rng);
        level += sd * z;
        *v = level;
    }
}
