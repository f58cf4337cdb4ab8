//! Grid-based falsification checks for function-class properties.
//!
//! A verdict of `holds` means no violation was found at the grid
//! resolution. Every failing verdict carries the lexicographically smallest
//! violating grid point, independent of how the scan was scheduled.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::function::EntrywiseFunction;

/// Relative slack separating genuine violations from rounding.
pub const SLACK: f64 = 1e-12;

/// Uniform grid `{0, h, 2h, ...}` truncated at `bound` (and below the
/// function's domain bound).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub step: f64,
    pub bound: f64,
    pub exec: Execution,
}

impl Default for Grid {
    fn default() -> Self {
        Grid {
            step: 1.0 / 64.0,
            bound: 8.0,
            exec: Execution::default(),
        }
    }
}

impl Grid {
    pub fn new(step: f64, bound: f64) -> Result<Self> {
        if !(step > 0.0) || !step.is_finite() || !(bound > 0.0) || !bound.is_finite() {
            return Err(Error::Domain(format!("grid step {step} and bound {bound} must be finite and > 0")));
        }
        Ok(Grid {
            step,
            bound,
            exec: Execution::default(),
        })
    }

    pub fn with_exec(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    /// Largest `N` with `N h <= bound` and `N h` inside the domain.
    fn last_index(&self, f: &EntrywiseFunction) -> usize {
        let mut n = (self.bound / self.step * (1.0 + 1e-12)).floor() as usize;
        while n > 0 && (n as f64 * self.step > self.bound * (1.0 + 1e-12) || !f.in_domain(n as f64 * self.step)) {
            n -= 1;
        }
        n
    }

    fn point(&self, i: usize) -> f64 {
        i as f64 * self.step
    }
}

/// Outcome of a grid check. `margin` is the smallest normalized slack seen
/// over the grid (negative on failure).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub check: &'static str,
    pub holds: bool,
    pub witness: Option<Vec<f64>>,
    pub margin: f64,
}

/// `f(x+y) - f(x) - f(y)` normalized by `1 + |f(x+y)|`.
pub fn superadditivity_gap(f: &EntrywiseFunction, x: f64, y: f64) -> Result<f64> {
    let s = f.eval(x + y)?;
    Ok((s - f.eval(x)? - f.eval(y)?) / (1.0 + s.abs()))
}

/// `f(x) f(y) - f(√(xy))²` normalized by `1 + |f(x) f(y)|`.
pub fn mult_convexity_gap(f: &EntrywiseFunction, x: f64, y: f64) -> Result<f64> {
    let rhs = f.eval(x)? * f.eval(y)?;
    let mid = f.eval((x * y).sqrt())?;
    Ok((rhs - mid * mid) / (1.0 + rhs.abs()))
}

/// Row scan result: first violating column and the row's minimum gap.
type Row = (Option<Vec<f64>>, f64);

fn scan_rows<F>(grid: &Grid, rows: usize, row: F) -> Result<(Option<Vec<f64>>, f64)>
where
    F: Fn(usize) -> Result<Row> + Sync + Send,
{
    let results = grid.exec.map(rows, row);
    let mut witness = None;
    let mut margin = f64::INFINITY;
    for r in results {
        let (w, m) = r?;
        if witness.is_none() {
            witness = w;
        }
        margin = margin.min(m);
    }
    Ok((witness, margin))
}

fn empty_grid() -> Error {
    Error::Domain("grid contains no admissible points".into())
}

/// Checks `f(x+y) >= f(x) + f(y)` on `{h, 2h, ...}` with `x <= y`,
/// `x + y <= bound`.
pub fn check_superadditive(f: &EntrywiseFunction, grid: &Grid) -> Result<Verdict> {
    let n = grid.last_index(f);
    if n < 2 {
        return Err(empty_grid());
    }
    let (witness, margin) = scan_rows(grid, n / 2, |r| {
        let i = r + 1;
        let x = grid.point(i);
        let mut first = None;
        let mut min = f64::INFINITY;
        for j in i..=n - i {
            let y = grid.point(j);
            let gap = superadditivity_gap(f, x, y)?;
            if gap < -SLACK && first.is_none() {
                first = Some(vec![x, y]);
            }
            min = min.min(gap);
        }
        Ok((first, min))
    })?;
    Ok(Verdict {
        check: "superadditive",
        holds: witness.is_none(),
        witness,
        margin,
    })
}

/// Checks `f(√(xy))² <= f(x) f(y)` on `{0, h, ...}` with `x <= y`.
pub fn check_mult_midpoint_convex(f: &EntrywiseFunction, grid: &Grid) -> Result<Verdict> {
    let n = grid.last_index(f);
    if n < 1 {
        return Err(empty_grid());
    }
    let (witness, margin) = scan_rows(grid, n + 1, |i| {
        let x = grid.point(i);
        let mut first = None;
        let mut min = f64::INFINITY;
        for j in i..=n {
            let y = grid.point(j);
            let gap = mult_convexity_gap(f, x, y)?;
            if gap < -SLACK && first.is_none() {
                first = Some(vec![x, y]);
            }
            min = min.min(gap);
        }
        Ok((first, min))
    })?;
    Ok(Verdict {
        check: "mult_midpoint_convex",
        holds: witness.is_none(),
        witness,
        margin,
    })
}

/// `Ψ_f(x)` together with the sum of absolute pair contributions.
pub fn psi_with_scale(f: &EntrywiseFunction, x: f64) -> (f64, f64) {
    let t = f.terms();
    let mut val = 0.0;
    let mut scale = 0.0;
    for (a, s) in t.iter().enumerate() {
        for u in &t[a + 1..] {
            let d = u.exp - s.exp;
            let v = s.coef * u.coef * d * d * x.powf(s.exp + u.exp - 1.0);
            val += v;
            scale += v.abs();
        }
    }
    (val, scale)
}

/// Checks `Ψ_f >= 0` on `{h, 2h, ...}`. Margin is `Ψ / scale`.
pub fn check_psi_nonnegative(f: &EntrywiseFunction, grid: &Grid) -> Result<Verdict> {
    let n = grid.last_index(f);
    if n < 1 {
        return Err(empty_grid());
    }
    let (witness, margin) = scan_rows(grid, n, |r| {
        let x = grid.point(r + 1);
        let (v, scale) = psi_with_scale(f, x);
        let rel = if scale > 0.0 { v / scale } else { 0.0 };
        Ok(((rel < -SLACK).then(|| vec![x]), rel))
    })?;
    Ok(Verdict {
        check: "psi_nonnegative",
        holds: witness.is_none(),
        witness,
        margin,
    })
}

/// Number of step refinements `h / 2^j` used by [`check_abs_monotonic`].
pub const ABS_MON_REFINEMENTS: u32 = 6;

/// Checks `Δⁿ_s f(x) >= 0` for `n = 0..=n_max`, `x` on the grid and steps
/// `s = h / 2^j`, `j = 0..=6`, with `x + n s <= bound`. Witness is
/// `[n, x, s]`, the first violation in `(n, x, s)` order with `s`
/// ascending.
pub fn check_abs_monotonic(f: &EntrywiseFunction, n_max: u32, grid: &Grid) -> Result<Verdict> {
    let n_pts = grid.last_index(f);
    if n_pts < 1 {
        return Err(empty_grid());
    }
    let steps: Vec<f64> = (0..=ABS_MON_REFINEMENTS)
        .rev()
        .map(|j| grid.step / f64::from(1u32 << j))
        .collect();
    let mut margin = f64::INFINITY;
    for order in 0..=n_max {
        let (witness, m) = scan_rows(grid, n_pts + 1, |i| {
            let x = grid.point(i);
            let mut first = None;
            let mut min = f64::INFINITY;
            for &s in &steps {
                let top = x + order as f64 * s;
                if top > grid.bound * (1.0 + 1e-12) || !f.in_domain(top) {
                    continue;
                }
                let (d, scale) = f.forward_difference_with_scale(x, s, order)?;
                let rel = if scale > 0.0 { d / scale } else { 0.0 };
                if rel < -SLACK && first.is_none() {
                    first = Some(vec![order as f64, x, s]);
                }
                min = min.min(rel);
            }
            Ok((first, min))
        })?;
        margin = margin.min(m);
        if witness.is_some() {
            return Ok(Verdict {
                check: "abs_monotonic",
                holds: false,
                witness,
                margin,
            });
        }
    }
    Ok(Verdict {
        check: "abs_monotonic",
        holds: true,
        witness: None,
        margin,
    })
}

/// The two 2×2 preservation conditions on `[0, bound]`: `|f(x)| <= f(y)`
/// for `x <= y` (checked first) and multiplicative midpoint convexity.
pub fn check_vasudeva_2x2(f: &EntrywiseFunction, grid: &Grid) -> Result<Verdict> {
    let n = grid.last_index(f);
    if n < 1 {
        return Err(empty_grid());
    }
    let vals: Vec<f64> = (0..=n).map(|i| f.eval(grid.point(i))).collect::<Result<_>>()?;
    let (witness, margin) = scan_rows(grid, n + 1, |i| {
        let lhs = vals[i].abs();
        let mut first = None;
        let mut min = f64::INFINITY;
        for (j, &v) in vals.iter().enumerate().skip(i) {
            let gap = (v - lhs) / (1.0 + lhs);
            if gap < -SLACK && first.is_none() {
                first = Some(vec![grid.point(i), grid.point(j)]);
            }
            min = min.min(gap);
        }
        Ok((first, min))
    })?;
    if witness.is_some() {
        return Ok(Verdict {
            check: "vasudeva_monotone",
            holds: false,
            witness,
            margin,
        });
    }
    let mc = check_mult_midpoint_convex(f, grid)?;
    Ok(Verdict {
        check: if mc.holds { "vasudeva_2x2" } else { "vasudeva_mult_convex" },
        holds: mc.holds,
        witness: mc.witness,
        margin: margin.min(mc.margin),
    })
}
