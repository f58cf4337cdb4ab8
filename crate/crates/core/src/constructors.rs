//! Explicit tree preservers that are not absolutely monotonic, the
//! coefficient thresholds behind them, and counterexample matrices.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::function::{EntrywiseFunction, Term};
use crate::graph::Graph;
use crate::matrix::{apply_entrywise, SymMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdKind {
    Superadditive,
    MultConvex,
}

/// A coefficient threshold together with the inputs it was computed from.
/// Any single middle coefficient `c > -threshold` keeps the property.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdReport {
    pub kind: ThresholdKind,
    pub threshold: f64,
    pub exponents: Vec<f64>,
    pub coefficients: Vec<f64>,
}

fn require_positive(cs: &[f64]) -> Result<()> {
    if cs.iter().all(|&c| c > 0.0 && c.is_finite()) {
        Ok(())
    } else {
        Err(Error::Precondition("flank coefficients must be finite and > 0".into()))
    }
}

/// `ν' = r(r-1) / (s(s-1)) · min(c_r, c_s)` for `1 < r < s`.
///
/// With one middle term `c_β x^β`, `r < β < s`, `c_β > -ν'`, the second
/// derivative stays nonnegative, so `c_r x^r + c_β x^β + c_s x^s` is convex
/// with `f(0) = 0` and hence superadditive.
pub fn superadditivity_threshold(r: f64, s: f64, c_r: f64, c_s: f64) -> Result<ThresholdReport> {
    if !(r > 1.0) {
        return Err(Error::Precondition(format!("need r > 1, got r = {r}")));
    }
    if !(s > r) || !s.is_finite() {
        return Err(Error::Precondition(format!("need s > r, got r = {r}, s = {s}")));
    }
    require_positive(&[c_r, c_s])?;
    Ok(ThresholdReport {
        kind: ThresholdKind::Superadditive,
        threshold: r * (r - 1.0) / (s * (s - 1.0)) * c_r.min(c_s),
        exponents: vec![r, s],
        coefficients: vec![c_r, c_s],
    })
}

/// `λ = ν'' / (max(c) · (s' - r')²)` with
/// `ν'' = min(c_{r'} c_r (r - r')², c_s c_{s'} (s' - s)²) / 4`.
///
/// A middle term `c_β x^β` contributes four negative pair terms to `Ψ`,
/// each bounded by `|c_β| max(c) (s' - r')² (x^{r+r'-1} + x^{s+s'-1})`,
/// while the outermost positive pairs contribute the two terms in `ν''`.
pub fn mult_convexity_threshold(exps: [f64; 4], coefs: [f64; 4]) -> Result<ThresholdReport> {
    let [rp, r, s, sp] = exps;
    if !(0.0 <= rp && rp < r && r < s && s < sp && sp.is_finite()) {
        return Err(Error::Precondition(format!(
            "need 0 <= r' < r < s < s', got {exps:?}"
        )));
    }
    require_positive(&coefs)?;
    let [c_rp, c_r, c_s, c_sp] = coefs;
    let nu2 = (c_rp * c_r * (r - rp).powi(2)).min(c_s * c_sp * (sp - s).powi(2)) / 4.0;
    let cmax = coefs.iter().copied().fold(0.0, f64::max);
    Ok(ThresholdReport {
        kind: ThresholdKind::MultConvex,
        threshold: nu2 / (cmax * (sp - rp).powi(2)),
        exponents: exps.to_vec(),
        coefficients: coefs.to_vec(),
    })
}

/// Terms `x^b (1 + x - c x² - ... - c x^{n+1} + x^{n+2} + x^{n+3})` where
/// `c` is half the smaller of the two thresholds split over the `n` negative
/// terms. Requires `b + 1 > 1`.
fn preserver_block(base: f64, n_neg: usize) -> Result<Vec<Term>> {
    let top = base + n_neg as f64 + 3.0;
    let (r, s) = (base + 1.0, top - 1.0);
    let nu1 = superadditivity_threshold(r, s, 1.0, 1.0)?.threshold;
    let lambda = mult_convexity_threshold([base, r, s, top], [1.0; 4])?.threshold;
    let c = -nu1.min(lambda) / n_neg as f64 / 2.0;
    let mut terms = vec![Term { coef: 1.0, exp: base }, Term { coef: 1.0, exp: r }];
    terms.extend((0..n_neg).map(|k| Term {
        coef: c,
        exp: r + 1.0 + k as f64,
    }));
    terms.push(Term { coef: 1.0, exp: s });
    terms.push(Term { coef: 1.0, exp: top });
    Ok(terms)
}

/// Polynomial `x Σ a_k x^k` with exactly `n_neg` negative interior
/// coefficients that is superadditive and multiplicatively convex on
/// `[0, ∞)` but not absolutely monotonic.
pub fn build_tree_preserver_poly(n_neg: usize) -> Result<EntrywiseFunction> {
    if n_neg == 0 {
        return Err(Error::Precondition("need at least one negative coefficient".into()));
    }
    EntrywiseFunction::new(preserver_block(1.0, n_neg)?)
}

/// Block sizes `q_n = n + 4` and offsets `r_n = q_1 + ... + q_n`.
fn block_offset(n: usize) -> usize {
    (1..=n).map(|k| k + 4).sum()
}

fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// Largest block count whose scaling factor `1/(r_N + N + 3)!` is a normal
/// `f64`.
pub fn max_entire_blocks() -> usize {
    let limit = -f64::MIN_POSITIVE.ln();
    (1..).take_while(|&n| ln_factorial(block_offset(n) + n + 3) < limit).last().unwrap_or(0)
}

/// Partial sum `Σ_{n=1}^{N} p_n(x) / (r_n + n + 3)!` where block `p_n` has
/// lowest exponent `r_n` and negative coefficients at offsets `2..=n+1`.
/// Blocks occupy disjoint exponent ranges, so the coefficient sequence
/// contains a run of `N` consecutive negatives.
pub fn build_entire_function_partial(n_blocks: usize) -> Result<EntrywiseFunction> {
    if n_blocks == 0 {
        return Err(Error::Precondition("need at least one block".into()));
    }
    let max = max_entire_blocks();
    if n_blocks > max {
        return Err(Error::Range(format!(
            "N = {n_blocks} underflows the factorial scaling; the largest supported N is {max}"
        )));
    }
    let mut terms = Vec::new();
    for n in 1..=n_blocks {
        let base = block_offset(n);
        let scale = (-ln_factorial(base + n + 3)).exp();
        terms.extend(preserver_block(base as f64, n)?.into_iter().map(|t| Term {
            coef: t.coef * scale,
            exp: t.exp,
        }));
    }
    EntrywiseFunction::new(terms)
}

/// Longest run of consecutive negative coefficients in exponent order.
pub fn longest_negative_run(f: &EntrywiseFunction) -> usize {
    f.terms()
        .iter()
        .fold((0, 0), |(best, cur), t| {
            let cur = if t.coef < 0.0 { cur + 1 } else { 0 };
            (best.max(cur), cur)
        })
        .0
}

/// `B(μ, a, b) = [[μ, a, b], [a, a, 0], [b, 0, b]]`.
pub fn b3(mu: f64, a: f64, b: f64) -> SymMatrix {
    SymMatrix::from_rows(&[[mu, a, b], [a, a, 0.0], [b, 0.0, b]]).expect("finite entries")
}

/// `c B(2, 1, 1)` with `c = R/4`, placed on the first open triangle of `t`
/// (centre first) and zero elsewhere. PSD with entries in `[0, R)`, while
/// its `α`-th Hadamard power is not PSD for `0 < α < 1`.
pub fn fractional_power_counterexample(t: &Graph, alpha: f64, range_max: f64) -> Result<SymMatrix> {
    if alpha >= 1.0 {
        return Err(Error::NoCounterexample(format!(
            "x^{alpha} preserves positivity on trees for alpha >= 1"
        )));
    }
    if !(alpha > 0.0) {
        return Err(Error::Precondition(format!("need 0 < alpha < 1, got {alpha}")));
    }
    if !(range_max > 0.0) || !range_max.is_finite() {
        return Err(Error::Precondition(format!("need finite R > 0, got {range_max}")));
    }
    let (i, j, k) = t
        .find_open_triangle()
        .ok_or_else(|| Error::NoCounterexample("graph has no open triangle".into()))?;
    let c = range_max / 4.0;
    Ok(SymMatrix::embed(&b3(2.0 * c, c, c), &[i, j, k], t.n()))
}

/// Output of [`thresholding_counterexample`].
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdingCounterexample {
    pub a: SymMatrix,
    pub image: SymMatrix,
    pub triangle: (usize, usize, usize),
    pub block_det: f64,
}

/// The rank-one PSD matrix `a · 1 1ᵀ` and its restriction to `g`; on an open
/// triangle the restriction is `a B(1, 1, 1)` with determinant `-a³`.
pub fn thresholding_counterexample(g: &Graph, a: f64) -> Result<ThresholdingCounterexample> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::Precondition(format!("need finite a > 0, got {a}")));
    }
    let triangle = g.find_open_triangle().ok_or_else(|| {
        Error::NoCounterexample("every component is complete; restriction preserves positivity".into())
    })?;
    let m = SymMatrix::filled(g.n(), a);
    let image = apply_entrywise(&EntrywiseFunction::power(1.0), &m, g)?;
    let (i, j, k) = triangle;
    let block_det = image.principal(&[i, j, k]).determinant();
    Ok(ThresholdingCounterexample {
        a: m,
        image,
        triangle,
        block_det,
    })
}
