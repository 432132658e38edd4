//! ρ-sweeps of the budget formula, CSV persistence and SVG step plots.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::budget::{n_tilde_formula, BudgetParams};
use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 5] = ["rho", "eps", "n_tilde", "expected_error", "threshold"];

/// Number of points in the default ρ grid.
pub const DEFAULT_RHO_POINTS: usize = 401;

/// Default tolerances for the standard sweep.
pub const DEFAULT_EPS: [f64; 4] = [1.0, 5.0, 10.0, 25.0];

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub n: usize,
    pub m: usize,
    pub eps_list: Vec<f64>,
    pub rho_grid: Vec<f64>,
    pub output_path: PathBuf,
}

impl SweepConfig {
    /// Standard plot configuration: `n = m = 100`, default tolerances and ρ grid.
    pub fn standard(output_path: impl Into<PathBuf>) -> Self {
        SweepConfig {
            n: 100,
            m: 100,
            eps_list: DEFAULT_EPS.to_vec(),
            rho_grid: rho_grid(DEFAULT_RHO_POINTS).expect("default grid is valid"),
            output_path: output_path.into(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.eps_list.is_empty() {
            return Err(Error::param("eps", "at least one tolerance is required"));
        }
        if self.rho_grid.is_empty() {
            return Err(Error::param("rho-points", "the rho grid is empty"));
        }
        if !self.rho_grid.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::param("rho-points", "rho grid must be strictly increasing"));
        }
        // Field-level checks are delegated to BudgetParams.
        for &eps in &self.eps_list {
            for &rho in &self.rho_grid {
                BudgetParams::new(self.n, self.m, rho, eps)?;
            }
        }
        Ok(())
    }
}

/// `points` uniformly spaced values from −1 to 1. For odd `points` the grid
/// contains 0 exactly and is exactly symmetric: value `k` is
/// `(2k − (points−1)) / (points−1)`.
pub fn rho_grid(points: usize) -> Result<Vec<f64>> {
    if points < 2 {
        return Err(Error::param("rho-points", "need at least 2 grid points"));
    }
    let half = (points - 1) as f64;
    Ok((0..points).map(|k| (2.0 * k as f64 - half) / half).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub rho: f64,
    pub eps: f64,
    pub n_tilde: usize,
    pub expected_error: f64,
    pub threshold: f64,
}

/// Evaluates the formula on every `(eps, rho)` cell, ordered by eps (in
/// list order) then rho.
pub fn run_sweep(config: &SweepConfig) -> Result<Vec<SweepRow>> {
    config.validate()?;
    let cells: Vec<(f64, f64)> = config
        .eps_list
        .iter()
        .flat_map(|&eps| config.rho_grid.iter().map(move |&rho| (eps, rho)))
        .collect();
    cells
        .par_iter()
        .map(|&(eps, rho)| {
            let p = BudgetParams::new(config.n, config.m, rho, eps)?;
            let r = n_tilde_formula(&p);
            Ok(SweepRow {
                rho,
                eps,
                n_tilde: r.n_tilde,
                expected_error: r.expected_error,
                threshold: r.threshold,
            })
        })
        .collect()
}

/// 17 significant digits, enough to round-trip any `f64`.
fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn to_csv(rows: &[SweepRow]) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([
            fmt_real(r.rho),
            fmt_real(r.eps),
            r.n_tilde.to_string(),
            fmt_real(r.expected_error),
            fmt_real(r.threshold),
        ])?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

pub fn from_csv<R: std::io::Read>(reader: R) -> Result<Vec<SweepRow>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::InvalidArgument(format!("unexpected CSV header {header:?}")));
    }
    let parse_f = |s: &str, col: &str| {
        s.parse::<f64>()
            .map_err(|e| Error::InvalidArgument(format!("bad {col} value {s:?}: {e}")))
    };
    rdr.records()
        .map(|rec| {
            let rec = rec?;
            Ok(SweepRow {
                rho: parse_f(&rec[0], "rho")?,
                eps: parse_f(&rec[1], "eps")?,
                n_tilde: rec[2]
                    .parse()
                    .map_err(|e| Error::InvalidArgument(format!("bad n_tilde {:?}: {e}", &rec[2])))?,
                expected_error: parse_f(&rec[3], "expected_error")?,
                threshold: parse_f(&rec[4], "threshold")?,
            })
        })
        .collect()
}

pub fn read_csv(path: &Path) -> Result<Vec<SweepRow>> {
    from_csv(fs::File::open(path)?)
}

/// Writes `bytes` to `path` through a temporary file in the same directory,
/// renamed into place on success.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

pub fn write_csv(rows: &[SweepRow], path: &Path) -> Result<()> {
    write_atomic(path, &to_csv(rows)?)
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

/// Step plot of `ñ` against ρ, one series per tolerance, as standalone SVG.
/// `n` fixes the top of the y axis (raised if a row exceeds it).
pub fn render_svg(rows: &[SweepRow], n: usize) -> String {
    let (w, h) = (720.0, 460.0);
    let (left, right, top, bottom) = (70.0, 150.0, 40.0, 60.0);
    let (pw, ph) = (w - left - right, h - top - bottom);
    let y_max = rows.iter().map(|r| r.n_tilde).max().unwrap_or(0).max(n).max(1) as f64;
    let x_of = |rho: f64| left + (rho + 1.0) / 2.0 * pw;
    let y_of = |nt: f64| top + ph - nt / y_max * ph;

    let mut eps_values: Vec<f64> = Vec::new();
    for r in rows {
        if !eps_values.contains(&r.eps) {
            eps_values.push(r.eps);
        }
    }

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for k in 0..=4 {
        let rho = -1.0 + 0.5 * k as f64;
        let x = x_of(rho);
        let _ = writeln!(
            s,
            r#"<line x1="{x}" y1="{}" x2="{x}" y2="{}" stroke="black"/><text x="{x}" y="{}" text-anchor="middle">{rho}</text>"#,
            top + ph,
            top + ph + 5.0,
            top + ph + 20.0
        );
    }
    for k in 0..=4 {
        let v = y_max * k as f64 / 4.0;
        let y = y_of(v);
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{y}" x2="{left}" y2="{y}" stroke="black"/><text x="{}" y="{}" text-anchor="end">{}</text>"#,
            left - 5.0,
            left - 8.0,
            y + 4.0,
            v.round()
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">correlation ρ</text>"#,
        left + pw / 2.0,
        h - 15.0
    );
    let _ = writeln!(
        s,
        r#"<text x="20" y="{}" text-anchor="middle" transform="rotate(-90 20 {})">paths ñ</text>"#,
        top + ph / 2.0,
        top + ph / 2.0
    );

    for (k, &eps) in eps_values.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let mut pts: Vec<(f64, f64)> = rows
            .iter()
            .filter(|r| r.eps == eps)
            .map(|r| (r.rho, r.n_tilde as f64))
            .collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut path = String::new();
        for (i, &(rho, nt)) in pts.iter().enumerate() {
            let (x, y) = (x_of(rho), y_of(nt));
            if i == 0 {
                let _ = write!(path, "M{x:.2},{y:.2}");
            } else {
                let _ = write!(path, " H{x:.2} V{y:.2}");
            }
        }
        let _ = writeln!(
            s,
            r#"<path d="{path}" fill="none" stroke="{color}" stroke-width="1.5" data-eps="{eps}"/>"#
        );
        let ly = top + 20.0 + 20.0 * k as f64;
        let lx = left + pw + 15.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">ε = {eps}</text>"#,
            lx + 25.0,
            lx + 32.0,
            ly + 4.0
        );
    }
    s.push_str("</svg>\n");
    s
}
