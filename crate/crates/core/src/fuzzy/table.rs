//! Precomputed inference on a `loss × iter` grid with bilinear lookup.

use std::fmt::Write as _;
use std::path::Path;

use super::{FuzzyHyper, FuzzySystem};
use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "loss,iter_frac,lr,beta1,beta3";

#[derive(Debug, Clone, PartialEq)]
pub struct LookupTable {
    loss_grid: Vec<f64>,
    iter_grid: Vec<f64>,
    /// Loss-major: entry `(i, j)` sits at `i * iter_grid.len() + j`.
    values: Vec<FuzzyHyper>,
}

fn nodes(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let span = hi - lo;
    (0..n).map(|i| lo + span * i as f64 / (n - 1) as f64).collect()
}

/// Runs [`FuzzySystem::infer_hyper`] at every node of a uniform
/// `loss_n × iter_n` grid spanning both input universes.
pub fn build_lookup_table(system: &FuzzySystem, loss_n: usize, iter_n: usize) -> Result<LookupTable> {
    if loss_n < 2 || iter_n < 2 {
        return Err(Error::invalid(format!("lookup table needs at least 2x2 nodes, got {loss_n}x{iter_n}")));
    }
    let (llo, lhi) = system.input("loss")?.bounds();
    let (ilo, ihi) = system.input("iter")?.bounds();
    let loss_grid = nodes(llo, lhi, loss_n);
    let iter_grid = nodes(ilo, ihi, iter_n);
    let mut values = Vec::with_capacity(loss_n * iter_n);
    for &l in &loss_grid {
        for &it in &iter_grid {
            values.push(system.infer_hyper(l, it)?);
        }
    }
    Ok(LookupTable { loss_grid, iter_grid, values })
}

/// Cell index and fractional offset of `x` on an ascending grid, with `x`
/// clamped to the grid's ends.
fn locate(grid: &[f64], x: f64) -> (usize, f64) {
    let n = grid.len();
    let x = x.clamp(grid[0], grid[n - 1]);
    let i = grid.partition_point(|&g| g <= x).saturating_sub(1).min(n - 2);
    (i, (x - grid[i]) / (grid[i + 1] - grid[i]))
}

impl LookupTable {
    /// Builds a table from explicit grids and loss-major values.
    pub fn new(loss_grid: Vec<f64>, iter_grid: Vec<f64>, values: Vec<FuzzyHyper>) -> Result<Self> {
        for (name, g) in [("loss", &loss_grid), ("iter", &iter_grid)] {
            if g.len() < 2 {
                return Err(Error::invalid(format!("{name} grid needs at least 2 nodes")));
            }
            if !g.iter().all(|v| v.is_finite()) || g.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::invalid(format!("{name} grid must be finite and strictly ascending")));
            }
        }
        if values.len() != loss_grid.len() * iter_grid.len() {
            return Err(Error::DimensionMismatch { expected: loss_grid.len() * iter_grid.len(), got: values.len() });
        }
        Ok(Self { loss_grid, iter_grid, values })
    }

    pub fn loss_grid(&self) -> &[f64] {
        &self.loss_grid
    }

    pub fn iter_grid(&self) -> &[f64] {
        &self.iter_grid
    }

    pub fn values(&self) -> &[FuzzyHyper] {
        &self.values
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.loss_grid.len(), self.iter_grid.len())
    }

    pub fn at(&self, i: usize, j: usize) -> FuzzyHyper {
        self.values[i * self.iter_grid.len() + j]
    }

    /// Bilinear interpolation; queries outside the grid are clamped to it.
    /// Exact at nodes.
    pub fn lookup(&self, loss: f64, iter_frac: f64) -> FuzzyHyper {
        let (i, tx) = locate(&self.loss_grid, loss);
        let (j, ty) = locate(&self.iter_grid, iter_frac);
        let (v00, v01, v10, v11) = (self.at(i, j), self.at(i, j + 1), self.at(i + 1, j), self.at(i + 1, j + 1));
        let mix = |f: fn(&FuzzyHyper) -> f64| {
            let lo = f(&v00) * (1.0 - ty) + f(&v01) * ty;
            let hi = f(&v10) * (1.0 - ty) + f(&v11) * ty;
            lo * (1.0 - tx) + hi * tx
        };
        FuzzyHyper { lr: mix(|v| v.lr), beta1: mix(|v| v.beta1), beta3: mix(|v| v.beta3) }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(100 * (self.values.len() + 1));
        out.push_str(CSV_HEADER);
        out.push('\n');
        for (i, l) in self.loss_grid.iter().enumerate() {
            for (j, it) in self.iter_grid.iter().enumerate() {
                let v = self.at(i, j);
                let _ = writeln!(out, "{l:.16e},{it:.16e},{:.16e},{:.16e},{:.16e}", v.lr, v.beta1, v.beta3);
            }
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    /// Parses the format written by [`LookupTable::to_csv`]. Rows must be
    /// loss-major, as written.
    pub fn from_csv(text: &str) -> Result<Self> {
        let perr = |line: usize, msg: String| Error::Parse { path: "<lookup table>".into(), line, msg };
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some(CSV_HEADER) {
            return Err(perr(1, format!("expected header `{CSV_HEADER}`")));
        }
        let mut rows = Vec::new();
        for (k, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let fields = line
                .split(',')
                .map(|f| f.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| perr(k + 2, e.to_string()))?;
            let [l, it, lr, beta1, beta3] = fields[..] else {
                return Err(perr(k + 2, format!("expected 5 fields, found {}", fields.len())));
            };
            rows.push((l, it, FuzzyHyper { lr, beta1, beta3 }));
        }
        let mut loss_grid: Vec<f64> = Vec::new();
        for &(l, _, _) in &rows {
            if loss_grid.last() != Some(&l) {
                loss_grid.push(l);
            }
        }
        let iter_n = rows.len() / loss_grid.len().max(1);
        let iter_grid: Vec<f64> = rows.iter().take(iter_n).map(|r| r.1).collect();
        for (k, &(l, it, _)) in rows.iter().enumerate() {
            if loss_grid.get(k / iter_n.max(1)) != Some(&l) || iter_grid.get(k % iter_n.max(1)) != Some(&it) {
                return Err(perr(k + 2, "rows do not form a loss-major grid".into()));
            }
        }
        Self::new(loss_grid, iter_grid, rows.into_iter().map(|r| r.2).collect())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv(&text).map_err(|e| match e {
            Error::Parse { line, msg, .. } => Error::Parse { path: path.to_path_buf(), line, msg },
            other => other,
        })
    }
}

/// Relative slack for rounding noise in [`check_monotonicity`].
pub const MONOTONE_TOL: f64 = 1e-12;

/// Node pairs where `lr` rises along the iteration axis or falls along the
/// loss axis by more than rounding noise (`MONOTONE_TOL` times the largest
/// `lr` in the table). Each entry is `((i, j), (i2, j2), change)`.
pub fn monotonicity_violations(table: &LookupTable) -> Vec<((usize, usize), (usize, usize), f64)> {
    let (nl, ni) = table.dims();
    let tol = MONOTONE_TOL * table.values.iter().map(|v| v.lr.abs()).fold(0.0, f64::max);
    let mut out = Vec::new();
    for i in 0..nl {
        for j in 0..ni {
            let here = table.at(i, j).lr;
            if j + 1 < ni && table.at(i, j + 1).lr - here > tol {
                out.push(((i, j), (i, j + 1), table.at(i, j + 1).lr - here));
            }
            if i + 1 < nl && here - table.at(i + 1, j).lr > tol {
                out.push(((i, j), (i + 1, j), table.at(i + 1, j).lr - here));
            }
        }
    }
    out
}

/// `lr` must not increase along the iteration axis, nor decrease along the
/// loss axis. Reports the first offending pair of nodes.
pub fn check_monotonicity(table: &LookupTable) -> Result<()> {
    let violations = monotonicity_violations(table);
    let Some(&((i, j), (i2, j2), change)) = violations.first() else {
        return Ok(());
    };
    let axis = if i == i2 { "iter" } else { "loss" };
    Err(Error::invalid(format!(
        "lr not monotone along {axis} between (loss={}, iter={}) and (loss={}, iter={}): change {change:e}; {} violating pairs",
        table.loss_grid[i],
        table.iter_grid[j],
        table.loss_grid[i2],
        table.iter_grid[j2],
        violations.len()
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fuzzy::default_system;

    fn constant(v: f64) -> LookupTable {
        let h = FuzzyHyper { lr: v, beta1: v, beta3: v };
        LookupTable::new(vec![0.0, 1.0], vec![0.0, 1.0], vec![h; 4]).unwrap()
    }

    #[test]
    fn midpoint_is_mean_of_corners() {
        let mk = |lr| FuzzyHyper { lr, beta1: 0.0, beta3: 0.0 };
        let t = LookupTable::new(vec![0.0, 2.0], vec![0.0, 1.0], vec![mk(1.0), mk(2.0), mk(3.0), mk(6.0)]).unwrap();
        assert_eq!(t.lookup(1.0, 0.5).lr, 3.0);
        assert_eq!(constant(0.25).lookup(0.5, 0.5).lr, 0.25);
    }

    #[test]
    fn clamps_outside_the_grid() {
        let mk = |lr| FuzzyHyper { lr, beta1: 0.0, beta3: 0.0 };
        let t = LookupTable::new(vec![0.0, 2.0], vec![0.0, 1.0], vec![mk(1.0), mk(2.0), mk(3.0), mk(6.0)]).unwrap();
        assert_eq!(t.lookup(-5.0, -1.0).lr, 1.0);
        assert_eq!(t.lookup(9.0, 4.0).lr, 6.0);
        assert_eq!(t.lookup(9.0, 0.0).lr, 3.0);
    }

    #[test]
    fn nodes_are_exact() {
        let sys = default_system(1000).unwrap();
        let t = build_lookup_table(&sys, 7, 5).unwrap();
        for (i, &l) in t.loss_grid().iter().enumerate() {
            for (j, &it) in t.iter_grid().iter().enumerate() {
                assert_eq!(t.lookup(l, it), t.at(i, j));
                assert_eq!(t.at(i, j), sys.infer_hyper(l, it).unwrap());
            }
        }
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let t = build_lookup_table(&default_system(1000).unwrap(), 5, 4).unwrap();
        let csv = t.to_csv();
        assert_eq!(csv.lines().count(), 21);
        let back = LookupTable::from_csv(&csv).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.to_csv(), csv);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(build_lookup_table(&default_system(10).unwrap(), 1, 5).is_err());
        assert!(LookupTable::new(vec![0.0, 0.0], vec![0.0, 1.0], vec![constant(0.0).at(0, 0); 4]).is_err());
        assert!(LookupTable::from_csv("loss,iter_frac,lr,beta1,beta3\n0,0,1,1\n").is_err());
        assert!(LookupTable::from_csv("nope\n").is_err());
    }

    #[test]
    fn monotonicity_detects_violation() {
        let mk = |lr| FuzzyHyper { lr, beta1: 0.0, beta3: 0.0 };
        let rising_iter = LookupTable::new(vec![0.0, 1.0], vec![0.0, 1.0], vec![mk(1.0), mk(2.0), mk(3.0), mk(3.0)]).unwrap();
        assert!(check_monotonicity(&rising_iter).is_err());
        let falling_loss = LookupTable::new(vec![0.0, 1.0], vec![0.0, 1.0], vec![mk(3.0), mk(3.0), mk(2.0), mk(2.0)]).unwrap();
        assert!(check_monotonicity(&falling_loss).is_err());
        assert!(check_monotonicity(&constant(1.0)).is_ok());
    }
}
