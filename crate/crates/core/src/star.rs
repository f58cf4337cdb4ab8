//! Star-patterned matrices: closed-form PSD criterion, factorization of
//! Hadamard powers, determinant and eigenvalues.

use nalgebra::DMatrix;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::SymMatrix;

/// Symmetric matrix supported on a star centred at index 0: diagonal `p`
/// (length `d + 1`) and centre-to-leaf entries `alpha` (length `d`).
#[derive(Debug, Clone, PartialEq)]
pub struct StarMatrix {
    p: Vec<f64>,
    alpha: Vec<f64>,
}

/// Which part of the star criterion failed. Leaf indices are matrix indices
/// (`1..=d`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum StarCondition {
    /// Condition 1: a diagonal entry is negative.
    NegativeDiagonal { index: usize },
    /// Condition 2: a zero leaf diagonal with a nonzero edge entry.
    ZeroLeafNonzeroEdge { index: usize },
    /// Condition 3: `p₁ < Σ α_i² / p_i`.
    CenterDeficit { deficit: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StarVerdict {
    pub is_psd: bool,
    pub failed: Option<StarCondition>,
}

/// `L_m` with `L_m L_mᵀ = A^∘m`, and the corner value `a_m`.
#[derive(Debug, Clone, PartialEq)]
pub struct StarFactor {
    pub a_m: f64,
    pub l: DMatrix<f64>,
}

impl StarMatrix {
    pub fn new(p: Vec<f64>, alpha: Vec<f64>) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::InvalidSize("star needs a centre".into()));
        }
        if alpha.len() + 1 != p.len() {
            return Err(Error::DimensionMismatch {
                expected: p.len() - 1,
                got: alpha.len(),
            });
        }
        if p.iter().chain(&alpha).any(|v| !v.is_finite()) {
            return Err(Error::Domain("star entries must be finite".into()));
        }
        Ok(StarMatrix { p, alpha })
    }

    /// Reads a star from a dense matrix whose pattern lies in the star
    /// centred at 0.
    pub fn from_sym(a: &SymMatrix) -> Result<Self> {
        let n = a.n();
        for i in 1..n {
            for j in i + 1..n {
                let v = a.get(i, j);
                if v != 0.0 {
                    return Err(Error::PatternViolation { i, j, value: v });
                }
            }
        }
        let p = (0..n).map(|i| a.get(i, i)).collect();
        let alpha = (1..n).map(|i| a.get(0, i)).collect();
        Self::new(p, alpha)
    }

    /// Leaf count.
    pub fn d(&self) -> usize {
        self.alpha.len()
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn to_sym(&self) -> SymMatrix {
        let mut m = SymMatrix::diagonal(&self.p);
        for (i, &a) in self.alpha.iter().enumerate() {
            m.set(0, i + 1, a);
        }
        m
    }

    /// Uniform entries in `[-r, r]`.
    pub fn random_uniform<R: Rng + ?Sized>(d: usize, r: f64, rng: &mut R) -> Self {
        let p = (0..=d).map(|_| rng.random_range(-r..=r)).collect();
        let alpha = (0..d).map(|_| rng.random_range(-r..=r)).collect();
        StarMatrix { p, alpha }
    }

    /// PSD star with dyadic entries so that exact zeros and ties occur:
    /// some leaves are fully zero, some leaf diagonals equal their edge
    /// entry, and half the samples sit on the boundary `p₁ = Σ α²/p`.
    pub fn random_psd<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Self {
        const P: [f64; 4] = [0.5, 1.0, 2.0, 4.0];
        const A: [f64; 6] = [-2.0, -1.0, -0.5, 0.5, 1.0, 2.0];
        let mut p = vec![0.0; d + 1];
        let mut alpha = vec![0.0; d];
        for i in 0..d {
            match rng.random_range(0..6) {
                0 => {}
                1 => {
                    let v = P[rng.random_range(0..P.len())];
                    p[i + 1] = v;
                    alpha[i] = if rng.random_bool(0.5) { v } else { -v };
                }
                2 => p[i + 1] = P[rng.random_range(0..P.len())],
                _ => {
                    p[i + 1] = P[rng.random_range(0..P.len())];
                    alpha[i] = A[rng.random_range(0..A.len())];
                }
            }
        }
        let need: f64 = p[1..]
            .iter()
            .zip(&alpha)
            .filter(|(pi, _)| **pi != 0.0)
            .map(|(pi, a)| a * a / pi)
            .sum();
        let slack = if rng.random_bool(0.5) {
            0.0
        } else {
            P[rng.random_range(0..P.len())]
        };
        p[0] = need + slack;
        StarMatrix { p, alpha }
    }
}

/// The three-condition star criterion, with exact comparisons.
pub fn star_psd_check(s: &StarMatrix) -> StarVerdict {
    let fail = |c| StarVerdict {
        is_psd: false,
        failed: Some(c),
    };
    if let Some(index) = s.p.iter().position(|&v| v < 0.0) {
        return fail(StarCondition::NegativeDiagonal { index });
    }
    if let Some(i) = (0..s.d()).find(|&i| s.p[i + 1] == 0.0 && s.alpha[i] != 0.0) {
        return fail(StarCondition::ZeroLeafNonzeroEdge { index: i + 1 });
    }
    let need = leaf_load(s);
    if s.p[0] < need {
        return fail(StarCondition::CenterDeficit {
            deficit: need - s.p[0],
        });
    }
    StarVerdict {
        is_psd: true,
        failed: None,
    }
}

/// `Σ_{p_i ≠ 0} α_i² / p_i` over leaves.
fn leaf_load(s: &StarMatrix) -> f64 {
    s.p[1..]
        .iter()
        .zip(&s.alpha)
        .filter(|(p, _)| **p != 0.0)
        .map(|(p, a)| a * a / p)
        .sum()
}

/// Factor of the `m`-th Hadamard power: first row `(√a_m, α_i^m p_i^{-m/2})`,
/// diagonal `p_i^{m/2}`, zero elsewhere, so that `L Lᵀ = A^∘m`.
pub fn star_factor(s: &StarMatrix, m: u32) -> Result<StarFactor> {
    if m == 0 {
        return Err(Error::Precondition("factor order must be >= 1".into()));
    }
    if !star_psd_check(s).is_psd {
        return Err(Error::Precondition("star_factor needs a PSD star".into()));
    }
    let mi = m as i32;
    let p1m = s.p[0].powi(mi);
    let mut a_m = p1m
        - s.p[1..]
            .iter()
            .zip(&s.alpha)
            .filter(|(p, _)| **p != 0.0)
            .map(|(p, a)| a.powi(2 * mi) / p.powi(mi))
            .sum::<f64>();
    if a_m < 0.0 {
        if a_m >= -1e-12 * p1m.max(1.0) {
            a_m = 0.0;
        } else {
            return Err(Error::FactorizationUndefined { m, value: a_m });
        }
    }
    let n = s.p.len();
    let half = m as f64 / 2.0;
    let mut l = DMatrix::zeros(n, n);
    l[(0, 0)] = a_m.sqrt();
    for i in 1..n {
        let p = s.p[i];
        l[(i, i)] = p.powf(half);
        if p != 0.0 {
            l[(0, i)] = s.alpha[i - 1].powi(mi) / p.powf(half);
        }
    }
    Ok(StarFactor { a_m, l })
}

/// `Π p_i - Σ_{i>1} α_i² Π_{j>1, j≠i} p_j`, using prefix and suffix
/// products over the leaves.
pub fn star_det(s: &StarMatrix) -> f64 {
    let leaves = &s.p[1..];
    let d = leaves.len();
    let mut prefix = vec![1.0; d + 1];
    for i in 0..d {
        prefix[i + 1] = prefix[i] * leaves[i];
    }
    let mut suffix = 1.0;
    let mut correction = 0.0;
    for i in (0..d).rev() {
        correction += s.alpha[i] * s.alpha[i] * prefix[i] * suffix;
        suffix *= leaves[i];
    }
    s.p[0] * prefix[d] - correction
}

/// Ascending eigenvalues when all leaf diagonals are equal: `p₂` with
/// multiplicity `d - 1` and `(p₁ + p₂ ± √((p₁ - p₂)² + 4 Σ α²)) / 2`.
pub fn star_eigenvalues_equal_p(s: &StarMatrix) -> Result<Vec<f64>> {
    let d = s.d();
    if d == 0 {
        return Ok(vec![s.p[0]]);
    }
    let p2 = s.p[1];
    if s.p[1..].iter().any(|&v| v != p2) {
        return Err(Error::Precondition("leaf diagonal entries must be equal".into()));
    }
    let p1 = s.p[0];
    let sa: f64 = s.alpha.iter().map(|a| a * a).sum();
    let root = ((p1 - p2).powi(2) + 4.0 * sa).sqrt();
    let mut ev = vec![p2; d - 1];
    ev.push((p1 + p2 - root) / 2.0);
    ev.push((p1 + p2 + root) / 2.0);
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::DEFAULT_PSD_TOL;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn st(p: &[f64], a: &[f64]) -> StarMatrix {
        StarMatrix::new(p.to_vec(), a.to_vec()).unwrap()
    }

    #[test]
    fn criterion_examples() {
        assert!(star_psd_check(&st(&[2.0, 1.0, 1.0], &[1.0, 1.0])).is_psd);
        let v = star_psd_check(&st(&[1.9, 1.0, 1.0], &[1.0, 1.0]));
        assert!(matches!(v.failed, Some(StarCondition::CenterDeficit { .. })));
        assert!(!st(&[1.9, 1.0, 1.0], &[1.0, 1.0]).to_sym().is_psd(DEFAULT_PSD_TOL).is_psd);
        let v = star_psd_check(&st(&[1.0, 0.0, 1.0], &[0.5, 0.0]));
        assert_eq!(v.failed, Some(StarCondition::ZeroLeafNonzeroEdge { index: 1 }));
        let v = star_psd_check(&st(&[1.0, -1.0], &[0.0]));
        assert_eq!(v.failed, Some(StarCondition::NegativeDiagonal { index: 1 }));
    }

    #[test]
    fn factor_examples() {
        let s = st(&[2.0, 1.0, 1.0], &[1.0, 1.0]);
        let f = star_factor(&s, 1).unwrap();
        assert_eq!(f.a_m, 0.0);
        assert_eq!(f.l.row(0).iter().copied().collect::<Vec<_>>(), vec![0.0, 1.0, 1.0]);
        let prod = &f.l * f.l.transpose();
        assert_eq!(prod, s.to_sym().to_dmatrix());
        assert_eq!(star_factor(&st(&[4.0, 1.0, 1.0], &[1.0, 1.0]), 2).unwrap().a_m, 14.0);
        let z = star_factor(&st(&[1.0, 0.0, 1.0], &[0.0, 1.0]), 1).unwrap();
        assert_eq!(z.a_m, 0.0);
        assert_eq!(z.l[(0, 1)], 0.0);
        assert!(matches!(
            star_factor(&st(&[1.0, 1.0], &[2.0]), 1),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn factor_reproduces_powers() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..500 {
            let d = rng.random_range(1..=8);
            let s = StarMatrix::random_psd(d, &mut rng);
            for m in 1..=5 {
                let f = star_factor(&s, m).unwrap();
                let prod = &f.l * f.l.transpose();
                let target = s.to_sym().hadamard_power(m as f64).unwrap().to_dmatrix();
                let scale = target.amax().max(1.0);
                assert!((prod - target).amax() <= 1e-12 * scale);
            }
        }
    }

    #[test]
    fn determinant_examples() {
        assert_eq!(star_det(&st(&[2.0, 1.0, 1.0], &[1.0, 1.0])), 0.0);
        assert_eq!(star_det(&st(&[3.0, 1.0, 2.0], &[1.0, 1.0])), 3.0);
        assert_eq!(star_det(&st(&[3.0, 5.0, 2.0], &[0.0, 0.0])), 30.0);
        let s = st(&[3.0, 1.0, 2.0], &[1.0, 1.0]);
        assert_abs_diff_eq!(s.to_sym().determinant(), 3.0, epsilon = 1e-12);
    }

    #[test]
    fn eigenvalue_examples() {
        let ev = star_eigenvalues_equal_p(&st(&[2.0, 1.0, 1.0], &[1.0, 1.0])).unwrap();
        assert_eq!(ev, vec![0.0, 1.0, 3.0]);
        assert_eq!(
            star_eigenvalues_equal_p(&st(&[1.0, 1.0, 1.0], &[0.0, 0.0])).unwrap(),
            vec![1.0; 3]
        );
        let s = st(&[5.0, 1.0, 1.0, 1.0], &[1.0, 1.0, 1.0]);
        let ev = star_eigenvalues_equal_p(&s).unwrap();
        let oracle = s.to_sym().eigenvalues();
        let r = 28f64.sqrt();
        assert_abs_diff_eq!(ev[0], (6.0 - r) / 2.0, epsilon = 1e-14);
        for (a, b) in ev.iter().zip(&oracle) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-9);
        }
        assert!(star_eigenvalues_equal_p(&st(&[1.0, 1.0, 2.0], &[0.0, 0.0])).is_err());
    }

    #[test]
    fn dense_round_trip() {
        let s = st(&[2.0, 1.0, 1.0], &[1.0, -1.0]);
        assert_eq!(StarMatrix::from_sym(&s.to_sym()).unwrap(), s);
        let mut bad = s.to_sym();
        bad.set(1, 2, 0.5);
        assert!(matches!(StarMatrix::from_sym(&bad), Err(Error::PatternViolation { i: 1, j: 2, .. })));
    }
}
