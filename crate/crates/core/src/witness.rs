//! Witness vectors for quadratic forms of Hadamard powers.
//!
//! `β ∈ N_k(A)` when `Q_{A∘m}(β) = 0` for every `m < k` and
//! `Q_{A∘k}(β) > 0`, where `A∘0` is the 0/1 support matrix. Numerically,
//! "zero" means a relative residual of at most `1e-10` and "positive" a
//! normalized value above `1e-8`.

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::function::EntrywiseFunction;
use crate::graph::Graph;
use crate::matrix::{apply_entrywise, SymMatrix};
use crate::star::{star_factor, star_psd_check, StarMatrix};

/// Thresholds for [`certify`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertTol {
    /// Bound on `|Q_{A∘m}(β)| / (‖β‖² ‖A∘m‖_F)` for `m < k`.
    pub kernel: f64,
    /// Strict lower bound on `Q_{A∘k}(β) / ‖β‖²`.
    pub positivity: f64,
}

impl Default for CertTol {
    fn default() -> Self {
        CertTol {
            kernel: 1e-10,
            positivity: 1e-8,
        }
    }
}

/// Residuals of a candidate `β` for `N_k(A)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Certificate {
    pub kernel_residual: f64,
    pub positivity_margin: f64,
    pub certified: bool,
}

fn norm_sq(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

/// Evaluates the residuals of `β` for `N_k(A)`. The zero vector is never
/// certified.
pub fn certify(a: &SymMatrix, beta: &[f64], k: u32, tol: CertTol) -> Result<Certificate> {
    if beta.len() != a.n() {
        return Err(Error::DimensionMismatch {
            expected: a.n(),
            got: beta.len(),
        });
    }
    let nb = norm_sq(beta);
    if nb == 0.0 {
        return Ok(Certificate {
            kernel_residual: 0.0,
            positivity_margin: 0.0,
            certified: false,
        });
    }
    let mut kernel_residual: f64 = 0.0;
    for m in 0..k {
        let am = a.hadamard_power(f64::from(m))?;
        let q = am.quadratic_form_unchecked(beta).abs();
        let scale = nb * am.frobenius_norm();
        let r = if scale > 0.0 { q / scale } else { q };
        kernel_residual = kernel_residual.max(r);
    }
    let positivity_margin = a.hadamard_power(f64::from(k))?.quadratic_form_unchecked(beta) / nb;
    Ok(Certificate {
        kernel_residual,
        positivity_margin,
        certified: kernel_residual <= tol.kernel && positivity_margin > tol.positivity,
    })
}

/// Membership test for `N_k(A)`. For `k = 0` only strict positivity of
/// `Q_{A∘0}` is tested.
pub fn nk_membership(a: &SymMatrix, beta: &[f64], k: u32, tol: CertTol) -> Result<bool> {
    Ok(certify(a, beta, k, tol)?.certified)
}

/// `η(A)`: number of distinct nonzero entries. `N_k(A)` is empty for every
/// `k >= η(A)`.
pub fn eta_bound(a: &SymMatrix) -> usize {
    a.upper_entries()
        .filter(|&(_, _, v)| v != 0.0)
        .map(|(_, _, v)| v.to_bits())
        .collect::<BTreeSet<_>>()
        .len()
}

/// One certified witness.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub k: u32,
    pub beta: Vec<f64>,
    pub kernel_residual: f64,
    pub positivity_margin: f64,
}

/// A matrix with witnesses `β ∈ N_k(A)` for several `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct WitnessSet {
    pub matrix: SymMatrix,
    pub witnesses: Vec<Witness>,
}

impl Serialize for WitnessSet {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("WitnessSet", 2)?;
        st.serialize_field("matrix", &self.matrix.to_text())?;
        st.serialize_field("witnesses", &self.witnesses)?;
        st.end()
    }
}

impl WitnessSet {
    /// Certifies each `(k, β)` and fails on the first that does not pass.
    fn certified(matrix: SymMatrix, betas: Vec<(u32, Vec<f64>)>) -> Result<Self> {
        let mut witnesses = Vec::with_capacity(betas.len());
        for (k, beta) in betas {
            let c = certify(&matrix, &beta, k, CertTol::default())?;
            if !c.certified {
                return Err(Error::Certification(format!(
                    "k = {k}: kernel residual {:.3e}, positivity margin {:.3e}",
                    c.kernel_residual, c.positivity_margin
                )));
            }
            witnesses.push(Witness {
                k,
                beta,
                kernel_residual: c.kernel_residual,
                positivity_margin: c.positivity_margin,
            });
        }
        Ok(WitnessSet { matrix, witnesses })
    }

    /// Re-runs certification on every stored witness.
    pub fn verify(&self) -> Result<bool> {
        for w in &self.witnesses {
            if !nk_membership(&self.matrix, &w.beta, w.k, CertTol::default())? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Places the set at rows/columns `idx` of an `n`-dimensional space.
    pub fn embed(&self, idx: &[usize], n: usize) -> Result<WitnessSet> {
        let matrix = SymMatrix::embed(&self.matrix, idx, n);
        let betas = self
            .witnesses
            .iter()
            .map(|w| {
                let mut b = vec![0.0; n];
                for (&i, &v) in idx.iter().zip(&w.beta) {
                    b[i] = v;
                }
                (w.k, b)
            })
            .collect();
        WitnessSet::certified(matrix, betas)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("witness sets serialize")
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Removes the components along an orthonormal `basis`, twice.
fn project_out(v: &[f64], basis: &[Vec<f64>]) -> Vec<f64> {
    let mut w = v.to_vec();
    for _ in 0..2 {
        for q in basis {
            let c = dot(&w, q);
            w.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
        }
    }
    w
}

/// Modified Gram–Schmidt with re-orthogonalization. Errors when a vector
/// is numerically dependent on its predecessors.
fn orthonormalize(vectors: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(vectors.len());
    for (i, v) in vectors.iter().enumerate() {
        let w = project_out(v, &basis);
        let n = norm_sq(&w).sqrt();
        if !(n > 1e-12 * norm_sq(v).sqrt()) {
            return Err(Error::Certification(format!("spanning vector {i} is linearly dependent")));
        }
        basis.push(w.into_iter().map(|x| x / n).collect());
    }
    Ok(basis)
}

/// Rescales so the first entry is 1 when it is not negligible, otherwise
/// so the largest entry has magnitude 1.
fn normalize_witness(mut b: Vec<f64>) -> Vec<f64> {
    let inf = b.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let s = if b[0].abs() >= 1e-3 * inf { b[0] } else { inf };
    b.iter_mut().for_each(|x| *x /= s);
    b
}

fn check_alphas(alphas: &[f64]) -> Result<()> {
    if alphas.iter().any(|&a| a == 0.0 || !a.is_finite()) {
        return Err(Error::Precondition("alphas must be finite and nonzero".into()));
    }
    let distinct: BTreeSet<u64> = alphas.iter().map(|a| a.to_bits()).collect();
    if distinct.len() != alphas.len() {
        return Err(Error::Precondition("alphas must be pairwise distinct".into()));
    }
    Ok(())
}

/// Witnesses for `A = α αᵀ`: `β_k` is the component of `α∘k` orthogonal
/// to `α∘0, ..., α∘(k-1)`, for `k = 1..n-1`.
pub fn vandermonde_witnesses(alphas: &[f64]) -> Result<WitnessSet> {
    check_alphas(alphas)?;
    let n = alphas.len();
    let a = SymMatrix::outer(alphas);
    let powers: Vec<Vec<f64>> = (0..n as i32)
        .map(|m| alphas.iter().map(|x| x.powi(m)).collect())
        .collect();
    let mut betas = Vec::new();
    for k in 1..n {
        let basis = orthonormalize(&powers[..k])?;
        betas.push((k as u32, normalize_witness(project_out(&powers[k], &basis))));
    }
    WitnessSet::certified(a, betas)
}

/// Witnesses `β_1..β_d` for `A = e₁ α⁽¹⁾ᵀ + α⁽¹⁾ e₁ᵀ` with
/// `α⁽ᵏ⁾ = (α₁ᵏ/2, α₂ᵏ, ..., α_{d+1}ᵏ, 0, ...)`.
///
/// For `k < d`, `β_k` bisects the projections of `α⁽ᵏ⁾` and `e₁` onto
/// `V_k^⊥`, `V_k = span(α⁽⁰⁾, ..., α⁽ᵏ⁻¹⁾)`. For `k = d` the projection of
/// `α⁽ᵈ⁾` onto the line `V_d^⊥` is used, which needs `α₁` to dominate the
/// other `α_i`. Witnesses are scaled so `β₁ = 1`.
pub fn star_witnesses(d: usize, alphas: &[f64], ambient_n: usize) -> Result<WitnessSet> {
    star_witnesses_up_to(d, alphas, ambient_n, d)
}

/// Witnesses `β_1..β_{k_max}` of [`star_witnesses`]. With `k_max < d` no
/// dominance of `α₁` is needed.
pub fn star_witnesses_up_to(d: usize, alphas: &[f64], ambient_n: usize, k_max: usize) -> Result<WitnessSet> {
    if k_max > d {
        return Err(Error::Precondition(format!("k_max = {k_max} exceeds d = {d}")));
    }
    if d == 0 {
        return Err(Error::Precondition("star witnesses need d >= 1".into()));
    }
    if alphas.len() != d + 1 {
        return Err(Error::DimensionMismatch {
            expected: d + 1,
            got: alphas.len(),
        });
    }
    if ambient_n < d + 1 {
        return Err(Error::InvalidSize(format!("ambient dimension {ambient_n} < d + 1 = {}", d + 1)));
    }
    check_alphas(alphas)?;
    let alpha_k = |k: i32| -> Vec<f64> {
        let mut v = vec![0.0; ambient_n];
        v[0] = alphas[0].powi(k) / 2.0;
        for i in 1..=d {
            v[i] = alphas[i].powi(k);
        }
        v
    };
    let a1 = alpha_k(1);
    let mut a = SymMatrix::zeros(ambient_n);
    a.set(0, 0, 2.0 * a1[0]);
    for (i, &v) in a1.iter().enumerate().take(d + 1).skip(1) {
        a.set(0, i, v);
    }
    let powers: Vec<Vec<f64>> = (0..=d as i32).map(alpha_k).collect();
    let mut e1 = vec![0.0; ambient_n];
    e1[0] = 1.0;
    let mut betas = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        let basis = orthonormalize(&powers[..k])?;
        let u = project_out(&powers[k], &basis);
        let beta = if k < d {
            let w = project_out(&e1, &basis);
            let (nu, nw) = (norm_sq(&u).sqrt(), norm_sq(&w).sqrt());
            u.iter().zip(&w).map(|(x, y)| x / nu + y / nw).collect::<Vec<_>>()
        } else {
            if !(u[0] > 1e-12 * norm_sq(&u).sqrt()) {
                return Err(Error::Certification(format!(
                    "k = d = {d}: the projection onto V_d^perp has first coordinate {:.3e} <= 0; \
                     Step 4 needs alpha_1 > max(alpha_2, ..., alpha_(d+1))",
                    u[0]
                )));
            }
            u
        };
        let s = beta[0];
        betas.push((k as u32, beta.into_iter().map(|x| x / s).collect()));
    }
    WitnessSet::certified(a, betas)
}

/// Bounds `lower <= k_G < upper` with certifying witness sets.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KBounds {
    pub lower: usize,
    /// Strict upper bound `|V| + |E|`.
    pub upper: usize,
    pub witness_sets: Vec<LabelledWitnessSet>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabelledWitnessSet {
    pub label: String,
    pub set: WitnessSet,
}

/// `A_j = [[a, (a+b)/(2(3-j))], [.., b]]` with `β = (1, -1) ∈ N_j(A_j)`.
pub fn k2_pair(a: f64, b: f64, j: u32) -> Result<WitnessSet> {
    if !(a > 0.0 && b > 0.0 && a != b) || !(j == 1 || j == 2) {
        return Err(Error::Precondition("need a != b > 0 and j in {1, 2}".into()));
    }
    let off = (a + b) / (2.0 * (3.0 - f64::from(j)));
    let m = SymMatrix::from_rows(&[[a, off], [off, b]])?;
    WitnessSet::certified(m, vec![(j, vec![1.0, -1.0])])
}

/// Certified lower bound `max(2, Δ(G))` on `k_G` and the upper bound
/// `|V| + |E|`. Complete graphs additionally get Vandermonde witnesses.
pub fn k_lower_bound(g: &Graph) -> Result<KBounds> {
    let (i, j) = g
        .edges()
        .next()
        .ok_or_else(|| Error::Precondition("graph has no edges".into()))?;
    let n = g.n();
    let mut sets = Vec::new();
    for jj in 1..=2 {
        sets.push(LabelledWitnessSet {
            label: format!("k2_pair_j{jj}_edge_{i}_{j}"),
            set: k2_pair(1.0, 2.0, jj)?.embed(&[i, j], n)?,
        });
    }
    let d = g.max_degree();
    if d >= 2 {
        let v = g.max_degree_vertex().expect("nonempty graph");
        let mut alphas = vec![(2 * d + 1) as f64];
        alphas.extend((1..=d).map(|x| x as f64));
        let mut idx = vec![v];
        idx.extend_from_slice(g.neighbors(v));
        sets.push(LabelledWitnessSet {
            label: format!("star_center_{v}_degree_{d}"),
            set: star_witnesses(d, &alphas, d + 1)?.embed(&idx, n)?,
        });
    }
    if n >= 2 && g.edge_count() == n * (n - 1) / 2 {
        let alphas: Vec<f64> = (1..=n).map(|x| x as f64).collect();
        sets.push(LabelledWitnessSet {
            label: format!("vandermonde_{n}"),
            set: vandermonde_witnesses(&alphas)?,
        });
    }
    let lower = sets
        .iter()
        .flat_map(|s| s.set.witnesses.iter().map(|w| w.k as usize))
        .max()
        .unwrap_or(0)
        .max(2);
    Ok(KBounds {
        lower,
        upper: n + g.edge_count(),
        witness_sets: sets,
    })
}

/// Random search for `β ∈ N_k(A)` over `trials` Gaussian-free uniform
/// vectors; trial `i` uses seed `seed + i` and the smallest hit is returned.
pub fn random_witness_search(
    a: &SymMatrix,
    k: u32,
    trials: usize,
    seed: u64,
    exec: Execution,
) -> Result<Option<(usize, Vec<f64>)>> {
    let powers: Vec<SymMatrix> = (0..=k).map(|m| a.hadamard_power(f64::from(m))).collect::<Result<_>>()?;
    let norms: Vec<f64> = powers.iter().map(SymMatrix::frobenius_norm).collect();
    let tol = CertTol::default();
    Ok(exec.find_first(trials, |t| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(t as u64));
        let beta: Vec<f64> = (0..a.n()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let nb = norm_sq(&beta);
        let in_kernel = (0..k as usize).all(|m| {
            let q = powers[m].quadratic_form_unchecked(&beta).abs();
            q <= tol.kernel * nb * norms[m].max(f64::MIN_POSITIVE)
        });
        (in_kernel && powers[k as usize].quadratic_form_unchecked(&beta) > tol.positivity * nb).then_some(beta)
    }))
}

/// `A∘0` is a permutation of `0 ⊕ I`: every row of the support is zero or
/// the matching standard basis vector.
pub fn pattern_psd_check(a: &SymMatrix) -> bool {
    (0..a.n()).all(|i| a.row(i).iter().enumerate().all(|(j, &v)| j == i || v == 0.0))
}

/// Outcome of [`star_kernel_stability`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelStability {
    pub holds: bool,
    pub kernel_dim: usize,
    /// Largest `|Q_{A∘m}(v)| / ‖A∘m‖_F` over basis vectors `v`, `3 <= m <= m_max`.
    pub max_residual: f64,
}

/// Checks that `ker Q_A ∩ ker Q_{A∘2}` is annihilated by every higher
/// Hadamard power up to `m_max`. The joint kernel is the null space of
/// `[L₁ᵀ; L₂ᵀ]`, read off an SVD with cutoff `1e-9 σ_max`.
pub fn star_kernel_stability(s: &StarMatrix, m_max: u32) -> Result<KernelStability> {
    if !star_psd_check(s).is_psd {
        return Err(Error::Precondition("kernel stability needs a PSD star".into()));
    }
    let n = s.d() + 1;
    let l1 = star_factor(s, 1)?.l;
    let l2 = star_factor(s, 2)?.l;
    let mut stacked = DMatrix::zeros(2 * n, n);
    stacked.view_mut((0, 0), (n, n)).copy_from(&l1.transpose());
    stacked.view_mut((n, 0), (n, n)).copy_from(&l2.transpose());
    let svd = stacked.svd(false, true);
    let v_t = svd.v_t.expect("requested V");
    let smax = svd.singular_values.max();
    let cutoff = 1e-9 * smax.max(f64::MIN_POSITIVE);
    let kernel: Vec<Vec<f64>> = (0..n)
        .filter(|&i| svd.singular_values[i] <= cutoff)
        .map(|i| v_t.row(i).iter().copied().collect())
        .collect();
    let a = s.to_sym();
    let mut max_residual: f64 = 0.0;
    for m in 3..=m_max {
        let am = a.hadamard_power(f64::from(m))?;
        let scale = am.frobenius_norm().max(f64::MIN_POSITIVE);
        for v in &kernel {
            max_residual = max_residual.max(am.quadratic_form_unchecked(v).abs() / scale);
        }
    }
    Ok(KernelStability {
        holds: max_residual <= 1e-9,
        kernel_dim: kernel.len(),
        max_residual,
    })
}

/// Result of [`derivative_sign_estimate`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DerivativeEstimate {
    pub limit_estimate: f64,
    pub analytic_value: f64,
    /// `(t, g(t))` samples.
    pub samples: Vec<(f64, f64)>,
}

impl DerivativeEstimate {
    pub fn relative_error(&self) -> f64 {
        (self.limit_estimate - self.analytic_value).abs() / self.analytic_value.abs().max(f64::MIN_POSITIVE)
    }
}

/// Geometric steps `t₀ 2^{-j}`, `j = 0..6`. Every entry `a + t a_ij` stays
/// in `[0, R)`; for non-integer exponents it also stays within `a/4` of
/// `a`, inside the Taylor radius around `a`. Polynomials admit larger steps,
/// which keeps `g(t)` clear of cancellation; up to degree 6, `g` is a
/// polynomial of degree at most 5 in `t` and the six-point extrapolation is
/// exact for any step, so large steps are used.
pub fn default_t_steps(f: &EntrywiseFunction, a: f64, w: &SymMatrix) -> Vec<f64> {
    let max_abs = w.max_abs().max(f64::MIN_POSITIVE);
    let (min_entry, max_entry) = w
        .upper_entries()
        .fold((0.0f64, 0.0f64), |(lo, hi), (_, _, v)| (lo.min(v), hi.max(v)));
    let polynomial = f.terms().iter().all(|t| t.exp.fract() == 0.0);
    let low_degree = f.terms().iter().all(|t| t.exp <= 6.0);
    let mut t0: f64 = match (polynomial, low_degree) {
        (true, true) => 4.0 * a.max(1.0) / max_abs,
        (true, false) => 0.25 * a.max(1.0) / max_abs,
        _ => 0.25 * a / max_abs,
    };
    if min_entry < 0.0 {
        t0 = t0.min(0.5 * a / -min_entry);
    }
    if f.domain_max().is_finite() && max_entry > 0.0 {
        t0 = t0.min(0.5 * (f.domain_max() - a) / max_entry);
    }
    (0..6).map(|j| t0 / f64::from(1u32 << j)).collect()
}

/// Neville extrapolation of the interpolating polynomial to `t = 0`.
pub fn extrapolate_to_zero(points: &[(f64, f64)]) -> f64 {
    let mut p: Vec<f64> = points.iter().map(|&(_, y)| y).collect();
    let t: Vec<f64> = points.iter().map(|&(x, _)| x).collect();
    for level in 1..p.len() {
        for i in 0..p.len() - level {
            let (ti, tj) = (t[i], t[i + level]);
            p[i] = (tj * p[i] - ti * p[i + 1]) / (tj - ti);
        }
    }
    p[0]
}

/// Estimates `lim_{t→0⁺} βᵀ f_G[a A∘0 + t A] β · k!/tᵏ` and compares it
/// with `f^{(k)}(a) Q_{A∘k}(β)`. Entries of `A∘0` on zero diagonals make
/// `f(0)` appear, so `f(0) = 0` is assumed whenever `A` has such entries.
pub fn derivative_sign_estimate(
    f: &EntrywiseFunction,
    a: f64,
    k: u32,
    w: &SymMatrix,
    beta: &[f64],
    t_steps: &[f64],
) -> Result<DerivativeEstimate> {
    let cert = certify(w, beta, k, CertTol::default())?;
    if !cert.certified {
        return Err(Error::Certification(format!(
            "beta is not in N_{k}(A): kernel residual {:.3e}, positivity margin {:.3e}",
            cert.kernel_residual, cert.positivity_margin
        )));
    }
    if t_steps.is_empty() || t_steps.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::Precondition("t_steps must be positive and nonempty".into()));
    }
    let support = w.hadamard_power(0.0)?;
    let kfact: f64 = (1..=k).map(f64::from).product();
    let mut samples = Vec::with_capacity(t_steps.len());
    for &t in t_steps {
        let mut m = support.scale(a);
        for i in 0..w.n() {
            for j in i..w.n() {
                if w.get(i, j) != 0.0 {
                    m.set(i, j, a + t * w.get(i, j));
                }
            }
        }
        let image = apply_entrywise(f, &m, &m.pattern())?;
        let q = image.quadratic_form_unchecked(beta);
        samples.push((t, q * kfact / t.powi(k as i32)));
    }
    let analytic_value = f.derivative(a, k)? * w.hadamard_power(f64::from(k))?.quadratic_form_unchecked(beta);
    Ok(DerivativeEstimate {
        limit_estimate: extrapolate_to_zero(&samples),
        analytic_value,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{complete, path, star};
    use crate::matrix::DEFAULT_PSD_TOL;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn m2(a: f64, b: f64, c: f64) -> SymMatrix {
        SymMatrix::from_rows(&[[a, b], [b, c]]).unwrap()
    }

    #[test]
    fn membership_examples() {
        let t = CertTol::default();
        assert!(nk_membership(&m2(1.0, 1.5, 2.0), &[1.0, -1.0], 2, t).unwrap());
        let c = certify(&m2(1.0, 1.5, 2.0), &[1.0, -1.0], 2, t).unwrap();
        assert_abs_diff_eq!(c.positivity_margin, 0.25);
        assert!(nk_membership(&m2(1.0, 1.25, 4.0), &[1.0, -1.0], 1, t).unwrap());
        assert_abs_diff_eq!(m2(1.0, 1.25, 4.0).quadratic_form(&[1.0, -1.0]).unwrap(), 2.5);
        for k in 0..4 {
            assert!(!nk_membership(&m2(1.0, 1.5, 2.0), &[0.0, 0.0], k, t).unwrap());
        }
        // k = 0 is strict positivity only
        assert!(nk_membership(&SymMatrix::identity(2), &[1.0, 0.0], 0, t).unwrap());
        assert!(nk_membership(&SymMatrix::identity(2), &[1.0], 0, t).is_err());
    }

    #[test]
    fn eta_examples() {
        assert_eq!(eta_bound(&crate::constructors::b3(2.0, 1.0, 1.0)), 2);
        assert_eq!(eta_bound(&SymMatrix::zeros(3)), 0);
        assert_eq!(eta_bound(&m2(1.0, 2.0, 3.0)), 3);
    }

    #[test]
    fn vandermonde_examples() {
        let w = vandermonde_witnesses(&[1.0, 2.0]).unwrap();
        assert_eq!(w.witnesses[0].beta, vec![1.0, -1.0]);
        assert_abs_diff_eq!(w.matrix.quadratic_form(&w.witnesses[0].beta).unwrap(), 1.0, epsilon = 1e-12);
        let w = vandermonde_witnesses(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(w.witnesses.len(), 2);
        let b2 = &w.witnesses[1].beta;
        for (x, y) in b2.iter().zip([1.0, -2.0, 1.0]) {
            assert_abs_diff_eq!(*x, y, epsilon = 1e-12);
        }
        let q = w.matrix.hadamard_power(2.0).unwrap().quadratic_form(b2).unwrap();
        assert_abs_diff_eq!(q, 4.0, epsilon = 1e-10);
        // R³ leaves no room for a vector orthogonal to three independent powers
        assert!(random_witness_search(&w.matrix, 3, 10_000, 0, Execution::Parallel).unwrap().is_none());
        assert!(vandermonde_witnesses(&[1.0, 1.0]).is_err());
        assert!(vandermonde_witnesses(&[0.0, 1.0]).is_err());
    }

    #[test]
    fn star_examples() {
        let w = star_witnesses(2, &[5.0, 1.0, 2.0], 3).unwrap();
        assert_eq!(w.matrix, SymMatrix::from_rows(&[[5.0, 1.0, 2.0], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0]]).unwrap());
        let b = &w.witnesses[1].beta;
        for (x, y) in b.iter().zip([1.0, 1.5, -2.0]) {
            assert_abs_diff_eq!(*x, y, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(w.matrix.hadamard_power(2.0).unwrap().quadratic_form(b).unwrap(), 12.0, epsilon = 1e-10);
        assert_eq!(w.witnesses[0].k, 1);
        assert!(w.verify().unwrap());
        let w5 = star_witnesses(5, &[9.0, 1.0, 2.0, 3.0, 4.0, 5.0], 6).unwrap();
        assert_eq!(w5.witnesses.len(), 5);
        // no dominance: the last witness cannot be certified
        let err = star_witnesses(2, &[2.0, 1.0, 3.0], 3).unwrap_err();
        assert!(matches!(err, Error::Certification(ref m) if m.contains("Step 4")));
        // but lower orders work with any distinct nonzero alphas
        assert!(star_witnesses(3, &[1.0, 5.0, 3.0, 4.0], 4).is_err());
        let ws = star_witnesses_up_to(3, &[1.0, 5.0, 3.0, 4.0], 5, 2).unwrap();
        assert_eq!(ws.witnesses.len(), 2);
    }

    #[test]
    fn json_shape() {
        let w = star_witnesses(2, &[5.0, 1.0, 2.0], 3).unwrap();
        let v: serde_json::Value = serde_json::from_str(&w.to_json()).unwrap();
        assert_eq!(v["matrix"], "3\n0 0 5.0\n0 1 1.0\n0 2 2.0\n");
        assert_eq!(v["witnesses"].as_array().unwrap().len(), 2);
        assert!(v["witnesses"][0]["kernel_residual"].is_number());
    }

    #[test]
    fn k_bounds() {
        let k2 = k_lower_bound(&path(2)).unwrap();
        assert_eq!((k2.lower, k2.upper), (2, 3));
        assert_eq!(k_lower_bound(&star(7)).unwrap().lower, 6);
        let p4 = k_lower_bound(&path(4)).unwrap();
        assert_eq!(p4.lower, 2);
        assert!(p4.witness_sets.iter().any(|s| s.label.starts_with("star_center_1")));
        assert_eq!(k_lower_bound(&complete(4)).unwrap().lower, 3);
        assert!(k_lower_bound(&Graph::empty(3)).is_err());
        for s in k_lower_bound(&star(6)).unwrap().witness_sets {
            assert!(s.set.verify().unwrap());
        }
    }

    #[test]
    fn pattern_psd_examples() {
        assert!(pattern_psd_check(&SymMatrix::identity(4)));
        let b = crate::constructors::b3(1.0, 1.0, 1.0);
        assert!(!pattern_psd_check(&b));
        assert!(!b.hadamard_power(0.0).unwrap().is_psd(DEFAULT_PSD_TOL).is_psd);
        assert!(pattern_psd_check(&SymMatrix::diagonal(&[0.0, 0.0, 5.0])));
    }

    #[test]
    fn kernel_stability_examples() {
        let s = StarMatrix::new(vec![2.0, 1.0, 1.0], vec![1.0, 1.0]).unwrap();
        let r = star_kernel_stability(&s, 8).unwrap();
        assert!(r.holds);
        assert_eq!(r.kernel_dim, 0);
        let a = s.to_sym();
        assert_eq!(a.quadratic_form(&[1.0, -1.0, -1.0]).unwrap(), 0.0);
        assert_eq!(a.hadamard_power(2.0).unwrap().quadratic_form(&[1.0, -1.0, -1.0]).unwrap(), 2.0);
        let s = StarMatrix::new(vec![1.0, 1.0, 1.0], vec![1.0, 0.0]).unwrap();
        let r = star_kernel_stability(&s, 8).unwrap();
        assert!(r.holds);
        assert_eq!(r.kernel_dim, 1);
        let bad = StarMatrix::new(vec![1.0, 1.0], vec![2.0]).unwrap();
        assert!(star_kernel_stability(&bad, 8).is_err());
    }

    #[test]
    fn derivative_exact_case() {
        let w = m2(1.0, 1.5, 2.0);
        let f = EntrywiseFunction::power(2.0);
        let steps = default_t_steps(&f, 1.0, &w);
        let est = derivative_sign_estimate(&f, 1.0, 2, &w, &[1.0, -1.0], &steps).unwrap();
        assert!(est.samples.iter().all(|&(_, g)| g == 1.0));
        assert_eq!(est.analytic_value, 1.0);
        assert_eq!(est.limit_estimate, 1.0);
        let cube = EntrywiseFunction::power(3.0);
        let est = derivative_sign_estimate(&cube, 1.0, 2, &w, &[1.0, -1.0], &steps).unwrap();
        assert_relative_eq!(est.analytic_value, 3.0);
        assert!(est.relative_error() < 1e-6);
    }

    #[test]
    fn derivative_negative_case() {
        let f = crate::constructors::build_tree_preserver_poly(1).unwrap();
        let f = EntrywiseFunction::from_pairs(
            &f.terms().iter().map(|t| (if t.coef < 0.0 { -0.1 } else { t.coef }, t.exp)).collect::<Vec<_>>(),
        )
        .unwrap();
        let ws = star_witnesses(3, &[7.0, 1.0, 2.0, 3.0], 4).unwrap();
        let b3 = &ws.witnesses[2];
        assert_eq!(b3.k, 3);
        let steps = default_t_steps(&f, 0.01, &ws.matrix);
        let est = derivative_sign_estimate(&f, 0.01, 3, &ws.matrix, &b3.beta, &steps).unwrap();
        assert!(est.analytic_value < 0.0);
        assert!(est.limit_estimate < 0.0);
        assert!(est.relative_error() < 1e-6, "{est:?}");
    }

    #[test]
    fn neville_is_exact_on_polynomials() {
        let pts: Vec<(f64, f64)> = (0..5).map(|j| {
            let t = 0.5f64.powi(j);
            (t, 3.0 - 2.0 * t + t.powi(4))
        }).collect();
        assert_abs_diff_eq!(extrapolate_to_zero(&pts), 3.0, epsilon = 1e-12);
    }
}
