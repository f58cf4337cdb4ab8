//! Finite power sums `f(x) = Σ cᵢ x^{eᵢ}` on `[0, R)`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One term `coef * x^exp`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub coef: f64,
    pub exp: f64,
}

/// A finite sum of real powers with nonnegative exponents. Terms are kept
/// sorted by exponent with distinct exponents and nonzero coefficients.
/// `0⁰ = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct EntrywiseFunction {
    terms: Vec<Term>,
    domain_max: f64,
}

impl EntrywiseFunction {
    /// Normalizes the terms: merges equal exponents, drops zero
    /// coefficients, sorts by exponent.
    pub fn new(terms: impl IntoIterator<Item = Term>) -> Result<Self> {
        let mut ts: Vec<Term> = Vec::new();
        for t in terms {
            if !t.coef.is_finite() || !t.exp.is_finite() {
                return Err(Error::Domain("term with non-finite coefficient or exponent".into()));
            }
            if t.exp < 0.0 {
                return Err(Error::Domain(format!("negative exponent {}", t.exp)));
            }
            ts.push(t);
        }
        ts.sort_by(|a, b| a.exp.total_cmp(&b.exp));
        let mut merged: Vec<Term> = Vec::with_capacity(ts.len());
        for t in ts {
            match merged.last_mut() {
                Some(last) if last.exp == t.exp => last.coef += t.coef,
                _ => merged.push(t),
            }
        }
        merged.retain(|t| t.coef != 0.0);
        Ok(EntrywiseFunction {
            terms: merged,
            domain_max: f64::INFINITY,
        })
    }

    /// Convenience constructor from `(coef, exp)` pairs.
    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        Self::new(pairs.iter().map(|&(coef, exp)| Term { coef, exp }))
    }

    /// `x^e`.
    pub fn power(e: f64) -> Self {
        Self::from_pairs(&[(1.0, e)]).expect("valid exponent")
    }

    /// The zero function.
    pub fn zero() -> Self {
        EntrywiseFunction {
            terms: Vec::new(),
            domain_max: f64::INFINITY,
        }
    }

    /// Restricts the domain to `[0, r)`.
    pub fn with_domain(mut self, r: f64) -> Result<Self> {
        if !(r > 0.0) {
            return Err(Error::Domain(format!("domain bound {r} must be > 0")));
        }
        self.domain_max = r;
        Ok(self)
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn domain_max(&self) -> f64 {
        self.domain_max
    }

    pub fn in_domain(&self, x: f64) -> bool {
        x >= 0.0 && x < self.domain_max
    }

    /// All coefficients nonnegative.
    pub fn has_nonnegative_coefficients(&self) -> bool {
        self.terms.iter().all(|t| t.coef >= 0.0)
    }

    /// `f(x)`.
    pub fn eval(&self, x: f64) -> Result<f64> {
        self.derivative(x, 0)
    }

    /// `f^{(k)}(x)` evaluated term by term.
    pub fn derivative(&self, x: f64, k: u32) -> Result<f64> {
        if !self.in_domain(x) {
            return Err(Error::Domain(format!(
                "x = {x} outside [0, {})",
                self.domain_max
            )));
        }
        let mut total = 0.0;
        for t in &self.terms {
            let ff = falling_factorial(t.exp, k);
            if ff == 0.0 {
                continue;
            }
            let p = t.exp - k as f64;
            let xp = if x == 0.0 {
                if p > 0.0 {
                    0.0
                } else if p == 0.0 {
                    1.0
                } else {
                    return Err(Error::Domain(format!(
                        "derivative of order {k} of x^{} is singular at 0",
                        t.exp
                    )));
                }
            } else if p.fract() == 0.0 && p.abs() <= 1024.0 {
                x.powi(p as i32)
            } else {
                x.powf(p)
            };
            total += t.coef * ff * xp;
        }
        Ok(total)
    }

    /// Derivative as a new power sum (exponents that would go negative are
    /// only valid when their coefficient vanishes).
    pub fn differentiate(&self) -> Result<Self> {
        Self::new(self.terms.iter().filter(|t| t.exp != 0.0).map(|t| Term {
            coef: t.coef * t.exp,
            exp: t.exp - 1.0,
        }))
    }

    /// Ψ_f(x) by the unordered-pair expansion
    /// `Σ_{t<t'} c_t c_{t'} (t - t')² x^{t+t'-1}`.
    pub fn psi(&self, x: f64) -> f64 {
        let mut total = 0.0;
        for (a, s) in self.terms.iter().enumerate() {
            for t in &self.terms[a + 1..] {
                let d = t.exp - s.exp;
                total += s.coef * t.coef * d * d * x.powf(s.exp + t.exp - 1.0);
            }
        }
        total
    }

    /// Ψ_f(x) from its definition `x (f'' f - f'²) + f f'`. Returns the
    /// value and the sum of absolute values of the three summands, which is
    /// the natural scale for comparing against [`EntrywiseFunction::psi`].
    pub fn psi_direct(&self, x: f64) -> Result<(f64, f64)> {
        let f0 = self.derivative(x, 0)?;
        let f1 = self.derivative(x, 1)?;
        let f2 = self.derivative(x, 2)?;
        let a = x * f2 * f0;
        let b = x * f1 * f1;
        let c = f0 * f1;
        Ok((a - b + c, a.abs() + b.abs() + c.abs()))
    }

    /// `Δⁿ_h[f](x) = Σ_{i=0}^{n} (-1)^i C(n, i) f(x + (n - i) h)`.
    pub fn forward_difference(&self, x: f64, h: f64, n: u32) -> Result<f64> {
        Ok(self.forward_difference_with_scale(x, h, n)?.0)
    }

    /// Forward difference together with `Σ C(n, i) |f(x + (n - i) h)|`, the
    /// magnitude rounding errors scale with.
    pub fn forward_difference_with_scale(&self, x: f64, h: f64, n: u32) -> Result<(f64, f64)> {
        if !(h > 0.0) {
            return Err(Error::Domain(format!("step {h} must be > 0")));
        }
        let top = x + n as f64 * h;
        if !self.in_domain(x) || !self.in_domain(top) {
            return Err(Error::Domain(format!(
                "forward difference reaches {top}, outside [0, {})",
                self.domain_max
            )));
        }
        let mut binom = 1.0;
        let mut total = 0.0;
        let mut scale = 0.0;
        for i in 0..=n {
            let v = self.eval(x + (n - i) as f64 * h)?;
            let term = binom * v;
            total += if i % 2 == 0 { term } else { -term };
            scale += term.abs();
            binom = binom * (n - i) as f64 / (i + 1) as f64;
        }
        Ok((total, scale))
    }
}

/// `e (e - 1) ... (e - k + 1)` as a running product.
pub(crate) fn falling_factorial(e: f64, k: u32) -> f64 {
    let mut p = 1.0;
    for j in 0..k {
        p *= e - j as f64;
    }
    p
}

impl fmt::Display for EntrywiseFunction {
    /// Literal syntax: `1*x^1, 1*x^2, -0.1*x^3`. The zero function prints
    /// as `0*x^0`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0*x^0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|t| format!("{}*x^{}", fmt_num(t.coef), fmt_num(t.exp)))
            .collect();
        f.write_str(&parts.join(", "))
    }
}

/// Plain decimal for moderate magnitudes, scientific otherwise; both forms
/// round-trip through `f64::from_str`.
fn fmt_num(v: f64) -> String {
    if v != 0.0 && (v.abs() < 1e-4 || v.abs() >= 1e16) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

impl FromStr for EntrywiseFunction {
    type Err = Error;

    /// Accepts comma-separated terms of the form `c*x^e`, and the
    /// shorthands `x^e`, `-x^e`, `c*x`, `x` and a bare constant `c`.
    fn from_str(s: &str) -> Result<Self> {
        let mut terms = Vec::new();
        for (idx, raw) in s.split(',').enumerate() {
            let tok: String = raw.chars().filter(|c| !c.is_whitespace()).collect();
            let bad = |msg: &str| Error::Parse {
                line: idx + 1,
                msg: format!("term '{}': {msg}", raw.trim()),
            };
            if tok.is_empty() {
                return Err(bad("empty term"));
            }
            let (coef_part, pow_part) = match tok.find('x') {
                Some(p) => (&tok[..p], Some(&tok[p + 1..])),
                None => (tok.as_str(), None),
            };
            let coef = match coef_part.strip_suffix('*').unwrap_or(coef_part) {
                "" | "+" => 1.0,
                "-" => -1.0,
                c => c.parse::<f64>().map_err(|_| bad("bad coefficient"))?,
            };
            let exp = match pow_part {
                None => 0.0,
                Some("") => 1.0,
                Some(p) => p
                    .strip_prefix('^')
                    .ok_or_else(|| bad("expected '^' after x"))?
                    .parse::<f64>()
                    .map_err(|_| bad("bad exponent"))?,
            };
            if pow_part.is_some() && !coef_part.is_empty() && !coef_part.ends_with('*')
                && coef_part != "-" && coef_part != "+"
            {
                return Err(bad("expected '*' between coefficient and x"));
            }
            if !(exp >= 0.0) {
                return Err(bad("exponent must be >= 0"));
            }
            terms.push(Term { coef, exp });
        }
        EntrywiseFunction::new(terms)
    }
}

impl Serialize for EntrywiseFunction {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn neg_cubic_preserver() -> EntrywiseFunction {
        "1*x^1, 1*x^2, -0.1*x^3, 1*x^4, 1*x^5".parse().unwrap()
    }

    #[test]
    fn evaluation_examples() {
        assert_eq!(EntrywiseFunction::power(2.0).eval(3.0).unwrap(), 9.0);
        assert_relative_eq!(neg_cubic_preserver().derivative(0.0, 3).unwrap(), -0.6, epsilon = 1e-15);
        assert_relative_eq!(EntrywiseFunction::power(1.5).derivative(4.0, 1).unwrap(), 3.0);
        // 0^0 = 1
        assert_eq!(EntrywiseFunction::power(0.0).eval(0.0).unwrap(), 1.0);
    }

    #[test]
    fn evaluation_errors() {
        let f = EntrywiseFunction::power(2.0).with_domain(1.0).unwrap();
        assert!(matches!(f.eval(1.0), Err(Error::Domain(_))));
        assert!(matches!(f.eval(-0.5), Err(Error::Domain(_))));
        let g = EntrywiseFunction::power(1.5);
        assert!(matches!(g.derivative(0.0, 2), Err(Error::Domain(_))));
        // integer exponents below k vanish identically, even at 0
        assert_eq!(EntrywiseFunction::power(2.0).derivative(0.0, 3).unwrap(), 0.0);
    }

    #[test]
    fn normalization() {
        let f = EntrywiseFunction::from_pairs(&[(1.0, 3.0), (2.0, 1.0), (-1.0, 3.0), (0.0, 5.0)]).unwrap();
        assert_eq!(f.terms(), &[Term { coef: 2.0, exp: 1.0 }]);
        assert!(EntrywiseFunction::from_pairs(&[(1.0, -1.0)]).is_err());
    }

    #[test]
    fn literal_syntax() {
        let f = neg_cubic_preserver();
        assert_eq!(f.to_string(), "1*x^1, 1*x^2, -0.1*x^3, 1*x^4, 1*x^5");
        let g: EntrywiseFunction = "x^2, -x^3, 2*x, 3, 1*x^0.5".parse().unwrap();
        assert_eq!(g.to_string(), "3*x^0, 1*x^0.5, 2*x^1, 1*x^2, -1*x^3");
        assert!("1*x^-1".parse::<EntrywiseFunction>().is_err());
        assert!("abc".parse::<EntrywiseFunction>().is_err());
        assert!("2x^2".parse::<EntrywiseFunction>().is_err());
        assert!("1*x^2,".parse::<EntrywiseFunction>().is_err());
        assert_eq!(EntrywiseFunction::zero().to_string(), "0*x^0");
    }

    #[test]
    fn psi_examples() {
        let single = EntrywiseFunction::power(2.7);
        for x in [0.3, 1.0, 4.0] {
            assert_eq!(single.psi(x), 0.0);
        }
        let f = EntrywiseFunction::from_pairs(&[(1.0, 1.0), (1.0, 3.0)]).unwrap();
        assert_relative_eq!(f.psi(1.0), 4.0);
        assert_relative_eq!(f.psi_direct(1.0).unwrap().0, 4.0);
        // closed form of Ψ for the degree-5 example
        let p = neg_cubic_preserver();
        for i in 1..=100 {
            let x = i as f64 * 0.1;
            let closed = x.powi(2) - 0.4 * x.powi(3) + 8.9 * x.powi(4) + 20.0 * x.powi(5)
                + 8.9 * x.powi(6) - 0.4 * x.powi(7) + x.powi(8);
            assert_relative_eq!(p.psi(x), closed, max_relative = 1e-12);
            assert!(closed > 0.0);
        }
    }

    #[test]
    fn forward_difference_examples() {
        let sq = EntrywiseFunction::power(2.0);
        assert_relative_eq!(sq.forward_difference(0.0, 1.0, 2).unwrap(), 2.0);
        let cube = EntrywiseFunction::power(3.0);
        assert_relative_eq!(cube.forward_difference(0.0, 1.0, 3).unwrap(), 6.0);
        // Δ³ of x^k at 0 with step h is h^k (3^k - 3·2^k + 3); integer oracle
        let h: f64 = 0.01;
        let exact: f64 = [(1, 1.0), (2, 1.0), (3, -0.1), (4, 1.0), (5, 1.0)]
            .iter()
            .map(|&(k, c): &(i32, f64)| {
                let d = 3i64.pow(k as u32) - 3 * 2i64.pow(k as u32) + 3;
                c * d as f64 * h.powi(k)
            })
            .sum();
        assert_relative_eq!(exact, -2.25e-7, max_relative = 1e-12);
        assert_relative_eq!(
            neg_cubic_preserver().forward_difference(0.0, h, 3).unwrap(),
            exact,
            max_relative = 1e-6
        );
        let f = EntrywiseFunction::power(2.0).with_domain(1.0).unwrap();
        assert!(f.forward_difference(0.5, 0.2, 3).is_err());
    }

    fn power_sum() -> impl Strategy<Value = EntrywiseFunction> {
        proptest::collection::vec((-1.0f64..1.0, 0.0f64..6.0), 1..=6)
            .prop_map(|v| EntrywiseFunction::from_pairs(&v).unwrap())
    }

    proptest! {
        #[test]
        fn literal_round_trip(f in power_sum()) {
            let g: EntrywiseFunction = f.to_string().parse().unwrap();
            prop_assert_eq!(g, f);
        }

        #[test]
        fn psi_pair_formula_matches_definition(f in power_sum(), x in 0.001f64..5.0) {
            let (direct, scale) = f.psi_direct(x).unwrap();
            let pair = f.psi(x);
            prop_assert!((pair - direct).abs() <= 1e-10 * scale.max(pair.abs()).max(f64::MIN_POSITIVE));
        }

        #[test]
        fn derivatives_match_central_differences(f in power_sum(), x in 0.1f64..5.0, k in 1u32..=3) {
            let h = 1e-3;
            let lo = f.derivative(x - h, k - 1).unwrap();
            let hi = f.derivative(x + h, k - 1).unwrap();
            let fd = (hi - lo) / (2.0 * h);
            let exact = f.derivative(x, k).unwrap();
            let scale = 1.0 + f.terms().iter().map(|t| t.coef.abs() * x.powf(t.exp) * (t.exp + 1.0).powi(3 + k as i32) / x.powi(k as i32 + 2)).sum::<f64>();
            prop_assert!((fd - exact).abs() <= 1e-6 * scale, "fd {} exact {}", fd, exact);
        }
    }
}
