//! Dense symmetric matrices carrying a sparsity pattern.

use std::fmt;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::function::EntrywiseFunction;
use crate::graph::Graph;

/// Default relative tolerance for PSD verdicts.
pub const DEFAULT_PSD_TOL: f64 = 1e-9;

/// Dense real symmetric matrix. Writes are mirrored, so `get(i, j)` and
/// `get(j, i)` are always bit-identical.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        SymMatrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Every entry equal to `value`.
    pub fn filled(n: usize, value: f64) -> Self {
        SymMatrix {
            n,
            data: vec![value; n * n],
        }
    }

    pub fn diagonal(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len());
        for (i, &v) in d.iter().enumerate() {
            m.data[i * d.len() + i] = v;
        }
        m
    }

    /// Builds from rows; the rows must be square, finite and exactly
    /// symmetric.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let n = rows.len();
        let mut m = Self::zeros(n);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::Domain(format!("entry ({i}, {j}) is not finite")));
                }
                m.data[i * n + j] = v;
            }
        }
        for i in 0..n {
            for j in 0..i {
                if m.data[i * n + j] != m.data[j * n + i] {
                    return Err(Error::Domain(format!("entries ({i}, {j}) and ({j}, {i}) differ")));
                }
            }
        }
        Ok(m)
    }

    /// Rank-one `v vᵀ`.
    pub fn outer(v: &[f64]) -> Self {
        let n = v.len();
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.data[i * n + j] = v[i] * v[j];
            }
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    /// Sets `(i, j)` and `(j, i)`. Panics on non-finite values.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        assert!(value.is_finite(), "SymMatrix entries must be finite");
        self.data[i * self.n + j] = value;
        self.data[j * self.n + i] = value;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    /// Upper-triangle entries `(i, j, value)` with `i <= j`, row-major.
    pub fn upper_entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| (i..self.n).map(move |j| (i, j, self.get(i, j))))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn scale(&self, c: f64) -> SymMatrix {
        let mut m = self.clone();
        m.data.iter_mut().for_each(|v| *v *= c);
        m
    }

    /// Principal submatrix on `idx` (in the given order).
    pub fn principal(&self, idx: &[usize]) -> SymMatrix {
        let k = idx.len();
        let mut m = SymMatrix::zeros(k);
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                m.data[a * k + b] = self.get(i, j);
            }
        }
        m
    }

    /// Places `block` at rows/columns `idx` of an `n x n` zero matrix.
    pub fn embed(block: &SymMatrix, idx: &[usize], n: usize) -> SymMatrix {
        assert_eq!(block.n, idx.len());
        let mut m = SymMatrix::zeros(n);
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                m.data[i * n + j] = block.get(a, b);
            }
        }
        m
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n, self.n, &self.data)
    }

    /// Graph with edge `(i, j)`, `i != j`, exactly where the entry is
    /// nonzero.
    pub fn pattern(&self) -> Graph {
        let edges = (0..self.n)
            .flat_map(|i| (i + 1..self.n).map(move |j| (i, j)))
            .filter(|&(i, j)| self.get(i, j) != 0.0);
        Graph::from_edges(self.n, edges).expect("pattern edges are valid")
    }

    /// Entrywise power. Exponent `0` yields the 0/1 support matrix
    /// (`1 - δ(a_ij, 0)`), not the all-ones matrix.
    pub fn hadamard_power(&self, exponent: f64) -> Result<SymMatrix> {
        if !(exponent >= 0.0) || !exponent.is_finite() {
            return Err(Error::Domain(format!("exponent {exponent} must be finite and >= 0")));
        }
        let integer = exponent.fract() == 0.0 && exponent <= i32::MAX as f64;
        let mut out = self.clone();
        for v in out.data.iter_mut() {
            *v = if exponent == 0.0 {
                if *v != 0.0 {
                    1.0
                } else {
                    0.0
                }
            } else if integer {
                v.powi(exponent as i32)
            } else if *v >= 0.0 {
                v.powf(exponent)
            } else {
                return Err(Error::Domain(format!(
                    "negative entry {v} raised to non-integer power {exponent}"
                )));
            };
            if !v.is_finite() {
                return Err(Error::Range(format!("entry overflows at power {exponent}")));
            }
        }
        Ok(out)
    }

    /// `βᵀ A β`.
    pub fn quadratic_form(&self, beta: &[f64]) -> Result<f64> {
        if beta.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: beta.len(),
            });
        }
        Ok(self.quadratic_form_unchecked(beta))
    }

    pub(crate) fn quadratic_form_unchecked(&self, beta: &[f64]) -> f64 {
        let mut total = 0.0;
        for i in 0..self.n {
            let bi = beta[i];
            if bi == 0.0 {
                continue;
            }
            let row = self.row(i);
            let s: f64 = row.iter().zip(beta).map(|(a, b)| a * b).sum();
            total += bi * s;
        }
        total
    }

    /// Ascending eigenvalues from a full symmetric decomposition.
    pub fn eigenvalues(&self) -> Vec<f64> {
        if self.n == 0 {
            return Vec::new();
        }
        let mut ev: Vec<f64> = SymmetricEigen::new(self.to_dmatrix())
            .eigenvalues
            .iter()
            .copied()
            .collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    /// Determinant by LU with partial pivoting.
    pub fn determinant(&self) -> f64 {
        self.to_dmatrix().lu().determinant()
    }

    /// Spectral PSD test: PSD iff `λ_min >= -tol * max(1, λ_max)`.
    pub fn is_psd(&self, tol: f64) -> PsdVerdict {
        let ev = self.eigenvalues();
        let (min, max) = match (ev.first(), ev.last()) {
            (Some(&a), Some(&b)) => (a, b),
            _ => (0.0, 0.0),
        };
        PsdVerdict {
            is_psd: min >= -tol * max.max(1.0),
            min_eigenvalue: min,
            max_eigenvalue: max,
            tolerance_used: tol,
        }
    }

    /// Parses the text format: a line `n`, then lines `i j value` with
    /// `i <= j`. Omitted entries are zero.
    pub fn parse(text: &str) -> Result<SymMatrix> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (hl, header) = lines.next().ok_or(Error::Parse {
            line: 0,
            msg: "missing dimension line".into(),
        })?;
        let n: usize = header.parse().map_err(|_| Error::Parse {
            line: hl,
            msg: format!("expected dimension, got '{header}'"),
        })?;
        let mut m = SymMatrix::zeros(n);
        let mut seen = std::collections::HashSet::new();
        for (ln, line) in lines {
            let toks: Vec<&str> = line.split_whitespace().collect();
            let bad = |msg: String| Error::Parse { line: ln, msg };
            if toks.len() != 3 {
                return Err(bad("entry line must be 'i j value'".into()));
            }
            let i: usize = toks[0].parse().map_err(|_| bad(format!("bad row '{}'", toks[0])))?;
            let j: usize = toks[1].parse().map_err(|_| bad(format!("bad column '{}'", toks[1])))?;
            let v: f64 = toks[2].parse().map_err(|_| bad(format!("bad value '{}'", toks[2])))?;
            if i > j {
                return Err(bad(format!("entry ({i}, {j}) is below the diagonal")));
            }
            if j >= n {
                return Err(bad(format!("index {j} out of range for n = {n}")));
            }
            if !v.is_finite() {
                return Err(bad("value is not finite".into()));
            }
            if !seen.insert((i, j)) {
                return Err(bad(format!("duplicate entry ({i}, {j})")));
            }
            m.set(i, j, v);
        }
        Ok(m)
    }

    /// Text format, nonzero upper-triangle entries sorted by `(i, j)`.
    /// Values use the shortest round-tripping decimal form.
    pub fn to_text(&self) -> String {
        let mut s = format!("{}\n", self.n);
        for (i, j, v) in self.upper_entries() {
            if v != 0.0 {
                s.push_str(&format!("{i} {j} {v:?}\n"));
            }
        }
        s
    }
}

impl fmt::Display for SymMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.n {
            let row: Vec<String> = self.row(i).iter().map(|v| format!("{v:>10.4}")).collect();
            writeln!(f, "[{}]", row.join(" "))?;
        }
        Ok(())
    }
}

/// Outcome of the spectral PSD test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PsdVerdict {
    pub is_psd: bool,
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
    pub tolerance_used: f64,
}

impl PsdVerdict {
    /// `λ_min` lies within the tolerance band around zero, where
    /// floating-point verdicts cannot be trusted to match exact ones.
    pub fn in_boundary_band(&self) -> bool {
        self.min_eigenvalue.abs() <= self.tolerance_used * self.max_eigenvalue.abs().max(1.0)
    }
}

/// `f_G[A]`: `f` on the diagonal and on edges of `g`, zero elsewhere.
pub fn apply_entrywise(f: &EntrywiseFunction, a: &SymMatrix, g: &Graph) -> Result<SymMatrix> {
    if g.n() != a.n() {
        return Err(Error::DimensionMismatch {
            expected: a.n(),
            got: g.n(),
        });
    }
    let mut out = SymMatrix::zeros(a.n());
    for i in 0..a.n() {
        out.set(i, i, f.eval(a.get(i, i))?);
    }
    for (i, j) in g.edges() {
        out.set(i, j, f.eval(a.get(i, j))?);
    }
    Ok(out)
}

/// Order in which the vertices of a forest can be eliminated leaf-first,
/// together with the later-eliminated neighbour of each vertex (`None` for
/// the last vertex of each component).
pub(crate) fn leaf_first_order(g: &Graph) -> Result<(Vec<usize>, Vec<Option<usize>>)> {
    if !g.is_forest() {
        return Err(Error::UnsupportedPattern(
            "leaf-first elimination needs a forest".into(),
        ));
    }
    let n = g.n();
    let mut degree: Vec<usize> = (0..n).map(|v| g.degree(v)).collect();
    let mut removed = vec![false; n];
    let mut heap: std::collections::BinaryHeap<std::cmp::Reverse<usize>> =
        (0..n).filter(|&v| degree[v] <= 1).map(std::cmp::Reverse).collect();
    let mut order = Vec::with_capacity(n);
    let mut parent = vec![None; n];
    while let Some(std::cmp::Reverse(v)) = heap.pop() {
        if removed[v] {
            continue;
        }
        removed[v] = true;
        order.push(v);
        if let Some(&u) = g.neighbors(v).iter().find(|&&u| !removed[u]) {
            parent[v] = Some(u);
            degree[u] -= 1;
            if degree[u] == 1 || degree[u] == 0 {
                heap.push(std::cmp::Reverse(u));
            }
        }
    }
    Ok((order, parent))
}

/// Samples `A ∈ ℙ_G([0, R))` for a forest `g`.
///
/// `A = L Lᵀ` where column `v` of `L` is nonzero only at `v` and at the
/// neighbour of `v` eliminated after it. Trees admit this no-fill order, so
/// the product is PSD with pattern inside `g`. Some pivots are drawn as zero
/// to land on the singular boundary of the cone.
pub fn random_psd_with_pattern(g: &Graph, range_max: f64, seed: u64) -> Result<SymMatrix> {
    if !(range_max > 0.0) {
        return Err(Error::Domain(format!("range_max = {range_max} must be > 0")));
    }
    let (order, parent) = leaf_first_order(g)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = g.n();
    let mut a = SymMatrix::zeros(n);
    for &v in &order {
        let d = match parent[v] {
            None if rng.random_bool(0.3) => 0.0,
            _ if rng.random_bool(0.05) => 0.0,
            _ => rng.random_range(0.05..1.0),
        };
        let l = match parent[v] {
            Some(_) if rng.random_bool(0.9) => rng.random_range(0.0..1.0),
            _ => 0.0,
        };
        a.data[v * n + v] += d * d;
        if let Some(p) = parent[v] {
            a.data[p * n + p] += l * l;
            let x = d * l;
            a.data[v * n + p] = x;
            a.data[p * n + v] = x;
        }
    }
    let max = a.max_abs();
    if max > 0.0 && range_max.is_finite() {
        let target = range_max * rng.random_range(0.05..0.95);
        a.data.iter_mut().for_each(|x| *x *= target / max);
    }
    Ok(a)
}
