//! Randomized drivers and machine-readable reports.
//!
//! Trial `i` of a run with base seed `s` draws all of its randomness from
//! `ChaCha8Rng::seed_from_u64(s + i)`, and a failing run reports the
//! smallest failing trial, so reports do not depend on scheduling.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::classes::{check_abs_monotonic, check_mult_midpoint_convex, check_superadditive, Grid, Verdict, SLACK};
use crate::constructors::{
    b3, build_entire_function_partial, build_tree_preserver_poly, fractional_power_counterexample,
    mult_convexity_threshold, superadditivity_threshold, thresholding_counterexample,
};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::function::EntrywiseFunction;
use crate::graph::{path, random_tree, Graph};
use crate::matrix::{apply_entrywise, random_psd_with_pattern, SymMatrix};
use crate::star::{star_det, star_psd_check, StarMatrix};
use crate::tree::tree_psd_check;
use crate::witness::{k_lower_bound, star_kernel_stability};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Pass,
    Fail,
}

impl Outcome {
    pub fn from_bool(pass: bool) -> Self {
        if pass {
            Outcome::Pass
        } else {
            Outcome::Fail
        }
    }
}

/// Re-checkable evidence attached to a report.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Certificate {
    /// `matrix` (text format) with pattern inside `graph` (text format)
    /// whose image fails the tree PSD test.
    Matrix {
        matrix: String,
        graph: String,
        image: String,
        min_pivot: f64,
    },
    /// A violating grid point of a function-class check.
    GridPoint { check: String, point: Vec<f64>, margin: f64 },
    /// A negative forward difference `Δⁿ_h f(x)`.
    ForwardDifference { n: u32, x: f64, h: f64, value: f64 },
    /// A constructed function in literal syntax.
    Function { literal: String },
    /// A randomized trial that disagreed with its oracle.
    Trial { index: usize, seed: u64, detail: String },
}

/// Verdict record shared by every command. Field order is the JSON key
/// order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub command: String,
    pub seed: u64,
    pub tolerance: f64,
    pub trials: usize,
    pub verdict: Outcome,
    pub certificate: Option<Certificate>,
    pub elapsed_ms: u64,
    pub details: Value,
}

impl Report {
    fn new(command: &str, seed: u64, tolerance: f64, trials: usize) -> Self {
        Report {
            command: command.to_string(),
            seed,
            tolerance,
            trials,
            verdict: Outcome::Pass,
            certificate: None,
            elapsed_ms: 0,
            details: Value::Null,
        }
    }

    fn finish(mut self, start: Instant) -> Self {
        self.elapsed_ms = start.elapsed().as_millis() as u64;
        self
    }

    pub fn passed(&self) -> bool {
        self.verdict == Outcome::Pass
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }
}

fn trial_rng(seed: u64, index: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.wrapping_add(index as u64))
}

/// Settings for the randomized tree-preservation route.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeTrials {
    pub trials: usize,
    pub seed: u64,
    pub tol: f64,
    pub max_n: usize,
    pub matrices_per_tree: usize,
    /// Entries are sampled in `[0, range_max)`.
    pub range_max: f64,
    pub exec: Execution,
}

impl Default for TreeTrials {
    fn default() -> Self {
        TreeTrials {
            trials: 1000,
            seed: 0,
            tol: crate::matrix::DEFAULT_PSD_TOL,
            max_n: 12,
            matrices_per_tree: 10,
            range_max: 8.0,
            exec: Execution::default(),
        }
    }
}

/// A sampled `(T, A)` whose image under the map is not PSD.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeFailure {
    pub trial: usize,
    pub tree: Graph,
    pub matrix: SymMatrix,
    pub image: SymMatrix,
    pub min_pivot: f64,
}

impl TreeFailure {
    fn certificate(&self) -> Certificate {
        Certificate::Matrix {
            matrix: self.matrix.to_text(),
            graph: self.tree.to_text(),
            image: self.image.to_text(),
            min_pivot: self.min_pivot,
        }
    }
}

/// Samples random trees and matrices in `ℙ_T([0, R))`, applies `map` and
/// runs the tree PSD test on the image. Returns the first failure.
pub fn tree_preservation_trials<F>(cfg: &TreeTrials, map: F) -> Result<Option<TreeFailure>>
where
    F: Fn(&SymMatrix, &Graph) -> Result<SymMatrix> + Sync + Send,
{
    let hit = cfg.exec.find_first(cfg.trials, |i| {
        let mut rng = trial_rng(cfg.seed, i);
        let n = rng.random_range(1..=cfg.max_n.max(1));
        let tree = random_tree(n, &mut rng);
        for _ in 0..cfg.matrices_per_tree {
            let mut run = || -> Result<Option<TreeFailure>> {
                let a = random_psd_with_pattern(&tree, cfg.range_max, rng.random())?;
                let image = map(&a, &tree)?;
                let v = tree_psd_check(&image, &tree, cfg.tol)?;
                Ok((!v.is_psd).then(|| TreeFailure {
                    trial: i,
                    tree: tree.clone(),
                    matrix: a,
                    image,
                    min_pivot: v.min_pivot,
                }))
            };
            match run() {
                Ok(None) => {}
                other => return Some(other),
            }
        }
        None
    });
    hit.map(|(_, r)| r).transpose().map(Option::flatten)
}

/// Turns a failing superadditivity or multiplicative-convexity grid point
/// into a PSD matrix on a tree whose image is not PSD.
pub fn directed_counterexample(f: &EntrywiseFunction, v: &Verdict, tol: f64) -> Result<Option<TreeFailure>> {
    let Some(w) = v.witness.as_deref() else {
        return Ok(None);
    };
    let (x, y) = (w[0], w[1]);
    let (tree, a) = match v.check {
        "superadditive" => (path(3), SymMatrix::embed(&b3(x + y, x, y), &[1, 0, 2], 3)),
        "mult_midpoint_convex" => {
            let g = (x * y).sqrt();
            (path(2), SymMatrix::from_rows(&[[x, g], [g, y]])?)
        }
        _ => return Ok(None),
    };
    let image = apply_entrywise(f, &a, &tree)?;
    let verdict = tree_psd_check(&image, &tree, tol)?;
    Ok((!verdict.is_psd).then_some(TreeFailure {
        trial: 0,
        tree,
        matrix: a,
        image,
        min_pivot: verdict.min_pivot,
    }))
}

fn grid_certificate(v: &Verdict) -> Option<Certificate> {
    v.witness.as_ref().map(|w| Certificate::GridPoint {
        check: v.check.to_string(),
        point: w.clone(),
        margin: v.margin,
    })
}

/// Both routes of the tree-preservation characterization: grid checks of
/// superadditivity and multiplicative midpoint convexity, and randomized
/// tree trials. Fails if either route finds a violation.
pub fn cmd_preserver_test(f: &EntrywiseFunction, grid: &Grid, cfg: &TreeTrials) -> Result<Report> {
    let start = Instant::now();
    let mut report = Report::new("preserver-test", cfg.seed, cfg.tol, cfg.trials);
    let sup = check_superadditive(f, grid)?;
    let mc = check_mult_midpoint_convex(f, grid)?;
    let range_max = cfg.range_max.min(f.domain_max());
    let trial_cfg = TreeTrials { range_max, ..*cfg };
    let failure = tree_preservation_trials(&trial_cfg, |a, t| apply_entrywise(f, a, t))?;
    let grid_ok = sup.holds && mc.holds;
    let directed = if sup.holds {
        directed_counterexample(f, &mc, cfg.tol)?
    } else {
        directed_counterexample(f, &sup, cfg.tol)?
    };
    report.verdict = Outcome::from_bool(grid_ok && failure.is_none());
    report.certificate = directed
        .as_ref()
        .or(failure.as_ref())
        .map(TreeFailure::certificate)
        .or_else(|| if sup.holds { grid_certificate(&mc) } else { grid_certificate(&sup) });
    report.details = json!({
        "function": f.to_string(),
        "grid": { "step": grid.step, "bound": grid.bound },
        "superadditive": sup,
        "mult_midpoint_convex": mc,
        "tree_trials": {
            "max_n": cfg.max_n,
            "matrices_per_tree": cfg.matrices_per_tree,
            "range_max": range_max,
            "first_failure": failure.as_ref().map(|x| x.trial),
        },
        "routes_agree": grid_ok == failure.is_none(),
    });
    Ok(report.finish(start))
}

/// Forward-difference test of absolute monotonicity.
pub fn cmd_absmon_test(f: &EntrywiseFunction, n_max: u32, grid: &Grid) -> Result<Report> {
    let start = Instant::now();
    let mut report = Report::new("absmon-test", 0, SLACK, 0);
    let v = check_abs_monotonic(f, n_max, grid)?;
    report.verdict = Outcome::from_bool(v.holds);
    if let Some(w) = &v.witness {
        let (n, x, h) = (w[0] as u32, w[1], w[2]);
        report.certificate = Some(Certificate::ForwardDifference {
            n,
            x,
            h,
            value: f.forward_difference(x, h, n)?,
        });
    }
    report.details = json!({
        "function": f.to_string(),
        "n_max": n_max,
        "grid": { "step": grid.step, "bound": grid.bound },
        "margin": v.margin,
    });
    Ok(report.finish(start))
}

/// Certified bounds on `k_G`.
pub fn cmd_witness(g: &Graph) -> Result<Report> {
    let start = Instant::now();
    let mut report = Report::new("witness", 0, 1e-10, 0);
    let bounds = k_lower_bound(g)?;
    let mut ok = true;
    for s in &bounds.witness_sets {
        ok &= s.set.verify()?;
    }
    report.verdict = Outcome::from_bool(ok);
    report.details = serde_json::to_value(&bounds).expect("bounds serialize");
    Ok(report.finish(start))
}

/// One row of the critical-exponent table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentRow {
    pub alpha: f64,
    pub preserved: bool,
    pub certificate: String,
}

/// `x^α` on a fixed tree: for `α < 1` the embedded `B(2, 1, 1)` is checked
/// to be a counterexample, for `α >= 1` randomized trials must all pass.
pub fn cmd_critical_exponent(t: &Graph, alphas: &[f64], cfg: &TreeTrials) -> Result<(Report, Vec<ExponentRow>)> {
    let start = Instant::now();
    let mut report = Report::new("critical-exponent", cfg.seed, cfg.tol, cfg.trials);
    let mut rows = Vec::with_capacity(alphas.len());
    let mut consistent = true;
    for &alpha in alphas {
        if !(alpha > 0.0) {
            return Err(Error::Domain(format!("alpha = {alpha} must be > 0")));
        }
        let row = if alpha < 1.0 {
            let a = fractional_power_counterexample(t, alpha, cfg.range_max)?;
            let base_ok = tree_psd_check(&a, t, cfg.tol)?.is_psd;
            let v = tree_psd_check(&a.hadamard_power(alpha)?, t, cfg.tol)?;
            consistent &= base_ok && !v.is_psd;
            ExponentRow {
                alpha,
                preserved: v.is_psd,
                certificate: format!("B(2,1,1)*{} min_pivot={}", cfg.range_max / 4.0, v.min_pivot),
            }
        } else {
            let hit = cfg.exec.find_first(cfg.trials, |i| {
                let r = random_psd_with_pattern(t, cfg.range_max, cfg.seed.wrapping_add(i as u64))
                    .and_then(|a| a.hadamard_power(alpha))
                    .and_then(|p| tree_psd_check(&p, t, cfg.tol));
                match r {
                    Ok(v) if v.is_psd => None,
                    other => Some(other),
                }
            });
            let row = match hit {
                None => ExponentRow {
                    alpha,
                    preserved: true,
                    certificate: format!("{} trials", cfg.trials),
                },
                Some((i, r)) => {
                    r?;
                    ExponentRow {
                        alpha,
                        preserved: false,
                        certificate: format!("trial seed {}", cfg.seed.wrapping_add(i as u64)),
                    }
                }
            };
            consistent &= row.preserved;
            row
        };
        rows.push(row);
    }
    report.verdict = Outcome::from_bool(consistent);
    report.details = json!({ "tree": t.to_text(), "range_max": cfg.range_max, "rows": rows });
    Ok((report.finish(start), rows))
}

/// CSV with header `alpha,preserved,certificate`.
pub fn exponent_rows_csv(rows: &[ExponentRow]) -> String {
    let mut s = String::from("alpha,preserved,certificate\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{}\n",
            r.alpha,
            if r.preserved { "yes" } else { "no" },
            r.certificate
        ));
    }
    s
}

/// What [`cmd_construct`] builds.
#[derive(Debug, Clone, PartialEq)]
pub enum ConstructKind {
    Poly { n_neg: usize },
    Entire { n_blocks: usize },
    Superadditive { r: f64, s: f64, c_r: f64, c_s: f64 },
    MultConvex { exps: [f64; 4], coefs: [f64; 4] },
}

pub fn cmd_construct(kind: &ConstructKind) -> Result<Report> {
    let start = Instant::now();
    let mut report = Report::new("construct", 0, 0.0, 0);
    match kind {
        ConstructKind::Poly { n_neg } => {
            let f = build_tree_preserver_poly(*n_neg)?;
            report.details = json!({ "kind": "poly", "n_neg": n_neg, "function": f.to_string() });
            report.certificate = Some(Certificate::Function { literal: f.to_string() });
        }
        ConstructKind::Entire { n_blocks } => {
            let f = build_entire_function_partial(*n_blocks)?;
            report.details = json!({
                "kind": "entire",
                "n_blocks": n_blocks,
                "negative_run": crate::constructors::longest_negative_run(&f),
                "function": f.to_string(),
            });
            report.certificate = Some(Certificate::Function { literal: f.to_string() });
        }
        ConstructKind::Superadditive { r, s, c_r, c_s } => {
            report.details = serde_json::to_value(superadditivity_threshold(*r, *s, *c_r, *c_s)?).expect("serializes");
        }
        ConstructKind::MultConvex { exps, coefs } => {
            report.details = serde_json::to_value(mult_convexity_threshold(*exps, *coefs)?).expect("serializes");
        }
    }
    Ok(report.finish(start))
}

/// Per-trial outcome of the star suite.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct StarTrial {
    psd: bool,
    banded: bool,
    disagree: bool,
    det_bad: bool,
    kernel_bad: bool,
}

/// Star criterion against the spectral oracle, the determinant formula
/// against LU, and kernel stability on a PSD sample, per trial.
pub fn cmd_star_suite(trials: usize, seed: u64, tol: f64, exec: Execution) -> Result<Report> {
    if trials == 0 {
        return Err(Error::Usage("trials must be >= 1".into()));
    }
    let start = Instant::now();
    let mut report = Report::new("star-suite", seed, tol, trials);
    let results: Vec<Result<StarTrial>> = exec.map(trials, |i| {
        let mut rng = trial_rng(seed, i);
        let d = rng.random_range(1..=10);
        let s = StarMatrix::random_uniform(d, 2.0, &mut rng);
        let spectral = s.to_sym().is_psd(tol);
        let star = star_psd_check(&s);
        let banded = spectral.in_boundary_band();
        let lu = s.to_sym().determinant();
        let scale: f64 = s.p().iter().map(|p| p.abs()).product::<f64>()
            + s.alpha().iter().enumerate().map(|(k, a)| {
                a * a * s.p()[1..].iter().enumerate().filter(|&(j, _)| j != k).map(|(_, p)| p.abs()).product::<f64>()
            }).sum::<f64>();
        let det_bad = (star_det(&s) - lu).abs() > 1e-9 * scale.max(f64::MIN_POSITIVE);
        let psd_sample = StarMatrix::random_psd(rng.random_range(1..=8), &mut rng);
        let kernel_bad = !star_kernel_stability(&psd_sample, 8)?.holds;
        Ok(StarTrial {
            psd: spectral.is_psd,
            banded,
            disagree: !banded && spectral.is_psd != star.is_psd,
            det_bad,
            kernel_bad,
        })
    });
    let results: Vec<StarTrial> = results.into_iter().collect::<Result<_>>()?;
    let first_bad = results.iter().position(|t| t.disagree || t.det_bad || t.kernel_bad);
    report.verdict = Outcome::from_bool(first_bad.is_none());
    report.certificate = first_bad.map(|i| {
        let t = results[i];
        Certificate::Trial {
            index: i,
            seed: seed.wrapping_add(i as u64),
            detail: format!(
                "criterion_disagrees={} det_mismatch={} kernel_unstable={}",
                t.disagree, t.det_bad, t.kernel_bad
            ),
        }
    });
    let count = |p: fn(&StarTrial) -> bool| results.iter().filter(|t| p(t)).count();
    report.details = json!({
        "psd": count(|t| t.psd),
        "boundary_band_excluded": count(|t| t.banded),
        "criterion_disagreements": count(|t| t.disagree),
        "determinant_mismatches": count(|t| t.det_bad),
        "kernel_stability_failures": count(|t| t.kernel_bad),
    });
    Ok(report.finish(start))
}

/// Restriction of `a · 1 1ᵀ` to `g`. Fails (with the image as certificate)
/// whenever `g` has an open triangle; passes on disjoint unions of cliques.
pub fn cmd_thresholding(g: &Graph, a: f64, tol: f64) -> Result<Report> {
    let start = Instant::now();
    let mut report = Report::new("thresholding", 0, tol, 0);
    match thresholding_counterexample(g, a) {
        Ok(c) => {
            let (i, j, k) = c.triangle;
            let spectral = c.image.is_psd(tol);
            report.verdict = Outcome::from_bool(spectral.is_psd);
            report.certificate = Some(Certificate::Matrix {
                matrix: c.a.to_text(),
                graph: g.to_text(),
                image: c.image.to_text(),
                min_pivot: spectral.min_eigenvalue,
            });
            report.details = json!({
                "a": a,
                "triangle": [i, j, k],
                "block_det": c.block_det,
                "expected_block_det": -a * a * a,
                "image_min_eigenvalue": spectral.min_eigenvalue,
            });
        }
        Err(Error::NoCounterexample(msg)) => {
            report.details = json!({ "a": a, "note": msg });
        }
        Err(e) => return Err(e),
    }
    Ok(report.finish(start))
}

/// Dense PSD check, with the structured tests when a pattern is supplied.
pub fn cmd_psd_check(a: &SymMatrix, g: Option<&Graph>, tol: f64) -> Result<Report> {
    let start = Instant::now();
    let mut report = Report::new("psd-check", 0, tol, 0);
    let spectral = a.is_psd(tol);
    let mut details = json!({ "spectral": spectral });
    if let Some(g) = g {
        if g.is_forest() {
            details["tree"] = serde_json::to_value(tree_psd_check(a, g, tol)?).expect("serializes");
        }
    }
    if let Ok(s) = StarMatrix::from_sym(a) {
        details["star"] = serde_json::to_value(star_psd_check(&s)).expect("serializes");
    }
    report.verdict = Outcome::from_bool(spectral.is_psd);
    report.details = details;
    Ok(report.finish(start))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{complete, star};

    fn quick() -> TreeTrials {
        TreeTrials {
            trials: 50,
            ..TreeTrials::default()
        }
    }

    #[test]
    fn preserver_examples() {
        let g = Grid::default();
        let r = cmd_preserver_test(&EntrywiseFunction::power(2.0), &g, &quick()).unwrap();
        assert!(r.passed());
        let r = cmd_preserver_test(&EntrywiseFunction::power(0.5), &g, &quick()).unwrap();
        assert!(!r.passed());
        let Some(Certificate::Matrix { matrix, graph, .. }) = r.certificate else {
            panic!("expected a matrix certificate");
        };
        let a = SymMatrix::parse(&matrix).unwrap();
        let t = Graph::parse(&graph).unwrap();
        assert!(tree_psd_check(&a, &t, 1e-9).unwrap().is_psd);
        let img = apply_entrywise(&EntrywiseFunction::power(0.5), &a, &t).unwrap();
        assert!(!tree_psd_check(&img, &t, 1e-9).unwrap().is_psd);
    }

    #[test]
    fn determinism_across_schedules() {
        let f: EntrywiseFunction = "1*x^1, 1*x^2, -0.1*x^3, 1*x^4, 1*x^5".parse().unwrap();
        let seq = TreeTrials {
            exec: Execution::Sequential,
            ..quick()
        };
        let par = TreeTrials {
            exec: Execution::Parallel,
            ..quick()
        };
        let strip = |mut r: Report| {
            r.elapsed_ms = 0;
            r.to_json()
        };
        let a = cmd_preserver_test(&f, &Grid::default(), &seq).unwrap();
        let b = cmd_preserver_test(&f, &Grid::default(), &par).unwrap();
        assert_eq!(strip(a), strip(b));
        let a = cmd_star_suite(200, 5, 1e-9, Execution::Sequential).unwrap();
        let b = cmd_star_suite(200, 5, 1e-9, Execution::Parallel).unwrap();
        assert_eq!(strip(a), strip(b));
    }

    #[test]
    fn absmon_examples() {
        assert!(cmd_absmon_test(&"1*x^1, 0.5*x^2".parse().unwrap(), 5, &Grid::default()).unwrap().passed());
        let r = cmd_absmon_test(&"1*x^1.5".parse().unwrap(), 5, &Grid::default()).unwrap();
        assert!(matches!(r.certificate, Some(Certificate::ForwardDifference { n: 3, value, .. }) if value < 0.0));
    }

    #[test]
    fn critical_exponent_rows() {
        let cfg = TreeTrials {
            trials: 100,
            range_max: 4.0,
            ..TreeTrials::default()
        };
        let (r, rows) = cmd_critical_exponent(&path(5), &[0.5, 0.9, 1.0, 1.5, 3.0], &cfg).unwrap();
        assert!(r.passed());
        let flags: Vec<bool> = rows.iter().map(|r| r.preserved).collect();
        assert_eq!(flags, vec![false, false, true, true, true]);
        assert!(exponent_rows_csv(&rows).starts_with("alpha,preserved,certificate\n0.5,no,"));
    }

    #[test]
    fn star_suite_and_usage() {
        assert!(cmd_star_suite(300, 0, 1e-9, Execution::Parallel).unwrap().passed());
        assert!(matches!(cmd_star_suite(0, 0, 1e-9, Execution::Parallel), Err(Error::Usage(_))));
    }

    #[test]
    fn thresholding_reports() {
        let r = cmd_thresholding(&path(3), 1.0, 1e-9).unwrap();
        assert!(!r.passed());
        assert!((r.details["block_det"].as_f64().unwrap() + 1.0).abs() <= 1e-12);
        assert!(cmd_thresholding(&complete(3), 1.0, 1e-9).unwrap().passed());
        let r = cmd_thresholding(&star(4), 2.0, 1e-9).unwrap();
        assert!((r.details["block_det"].as_f64().unwrap() + 8.0).abs() <= 1e-11);
    }

    #[test]
    fn witness_and_construct() {
        let r = cmd_witness(&star(6)).unwrap();
        assert!(r.passed());
        assert_eq!(r.details["lower"], 5);
        let r = cmd_construct(&ConstructKind::Poly { n_neg: 1 }).unwrap();
        assert!(matches!(r.certificate, Some(Certificate::Function { .. })));
        let keys: Vec<String> = serde_json::from_str::<serde_json::Map<String, Value>>(&r.to_json())
            .unwrap()
            .keys()
            .cloned()
            .collect();
        assert_eq!(keys.len(), 8);
    }
}
