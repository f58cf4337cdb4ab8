//! PSD test for forest-patterned matrices by leaf elimination.
//!
//! Eliminating a leaf `v` with neighbour `u` replaces `a_uu` by the Schur
//! complement `a_uu - a_uv² / a_vv`; no other entry changes, so the whole
//! test is linear in the number of vertices (plus a heap for the leaf
//! order).

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::matrix::{leaf_first_order, SymMatrix};

/// Sparse storage for a matrix whose pattern lies in a forest. Edge values
/// are aligned with the graph's sorted adjacency lists.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeMatrix {
    graph: Graph,
    diag: Vec<f64>,
    edge_vals: Vec<Vec<f64>>,
}

/// Outcome of [`tree_psd_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TreeVerdict {
    pub is_psd: bool,
    /// Smallest elimination pivot with the tolerance shift removed. Negative
    /// exactly when a pivot test failed.
    pub min_pivot: f64,
    /// Vertex whose pivot test failed first.
    pub failed_vertex: Option<usize>,
    /// Diagonal shift `tol * max(1, max_i a_ii)` applied before elimination.
    pub shift: f64,
}

impl TreeMatrix {
    /// Builds from a forest, its diagonal and a value for every edge.
    pub fn new<F>(graph: Graph, diag: Vec<f64>, mut edge_value: F) -> Result<Self>
    where
        F: FnMut(usize, usize) -> f64,
    {
        if !graph.is_forest() {
            return Err(Error::UnsupportedPattern("tree PSD test needs a forest".into()));
        }
        if diag.len() != graph.n() {
            return Err(Error::DimensionMismatch {
                expected: graph.n(),
                got: diag.len(),
            });
        }
        let edge_vals = (0..graph.n())
            .map(|v| graph.neighbors(v).iter().map(|&u| edge_value(v.min(u), v.max(u))).collect())
            .collect();
        Ok(TreeMatrix {
            graph,
            diag,
            edge_vals,
        })
    }

    /// Sparse copy of `a`, rejecting nonzero entries off the forest `t`.
    pub fn from_dense(a: &SymMatrix, t: &Graph) -> Result<Self> {
        if a.n() != t.n() {
            return Err(Error::DimensionMismatch {
                expected: a.n(),
                got: t.n(),
            });
        }
        for (i, j, v) in a.upper_entries() {
            if i != j && v != 0.0 && !t.has_edge(i, j) {
                return Err(Error::PatternViolation { i, j, value: v });
            }
        }
        let diag = (0..a.n()).map(|i| a.get(i, i)).collect();
        TreeMatrix::new(t.clone(), diag, |i, j| a.get(i, j))
    }

    pub fn n(&self) -> usize {
        self.diag.len()
    }

    fn edge(&self, v: usize, u: usize) -> f64 {
        let nb = self.graph.neighbors(v);
        let k = nb.binary_search(&u).expect("u is a neighbour of v");
        self.edge_vals[v][k]
    }

    /// Leaf elimination on `A + εI`, `ε = tol * max(1, max_i a_ii)`.
    /// Leaves are taken smallest label first.
    pub fn psd_check(&self, tol: f64) -> Result<TreeVerdict> {
        let (order, parent) = leaf_first_order(&self.graph)?;
        let max_diag = self.diag.iter().fold(1.0f64, |m, &v| m.max(v));
        let shift = tol * max_diag;
        let mut work: Vec<f64> = self.diag.iter().map(|d| d + shift).collect();
        let mut min_pivot = f64::INFINITY;
        let mut failed_vertex = None;
        for &v in &order {
            let pivot = work[v];
            min_pivot = min_pivot.min(pivot - shift);
            if pivot < 0.0 {
                failed_vertex = Some(v);
                break;
            }
            let Some(u) = parent[v] else { continue };
            let a_uv = self.edge(v, u);
            if pivot == 0.0 {
                if a_uv != 0.0 {
                    failed_vertex = Some(v);
                    min_pivot = min_pivot.min(-a_uv.abs());
                    break;
                }
                continue;
            }
            work[u] -= a_uv * a_uv / pivot;
        }
        if order.is_empty() {
            min_pivot = 0.0;
        }
        Ok(TreeVerdict {
            is_psd: failed_vertex.is_none(),
            min_pivot,
            failed_vertex,
            shift,
        })
    }
}

/// Leaf-elimination PSD test for `a` with pattern inside the forest `t`.
/// Agrees with [`SymMatrix::is_psd`] outside the boundary band.
pub fn tree_psd_check(a: &SymMatrix, t: &Graph, tol: f64) -> Result<TreeVerdict> {
    TreeMatrix::from_dense(a, t)?.psd_check(tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{path, random_tree, star};
    use crate::matrix::{random_psd_with_pattern, DEFAULT_PSD_TOL};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn m(rows: &[[f64; 3]]) -> SymMatrix {
        SymMatrix::from_rows(rows).unwrap()
    }

    #[test]
    fn examples() {
        let a = m(&[[1.0, 1.0, 0.0], [1.0, 2.0, 1.0], [0.0, 1.0, 1.0]]);
        let v = tree_psd_check(&a, &path(3), DEFAULT_PSD_TOL).unwrap();
        assert!(v.is_psd);
        assert!(v.min_pivot.abs() < 1e-8);
        let b = m(&[[2.0, 1.0, 1.0], [1.0, 1.0, 0.0], [1.0, 0.0, 1.0]]);
        assert!(tree_psd_check(&b, &star(3), DEFAULT_PSD_TOL).unwrap().is_psd);
        let c = m(&[[1.0, 1.0, 0.0], [1.0, 1.9, 1.0], [0.0, 1.0, 1.0]]);
        let v = tree_psd_check(&c, &path(3), DEFAULT_PSD_TOL).unwrap();
        assert!(!v.is_psd);
        // leaves 0 then 1: pivots 1, 0.9, then 1 - 1/0.9
        assert!((v.min_pivot + 1.0 / 9.0).abs() < 1e-8);
    }

    #[test]
    fn zero_pivot_branch() {
        // a_00 = 0 with a nonzero edge fails even with the shift
        let a = m(&[[0.0, 1.0, 0.0], [1.0, 5.0, 0.0], [0.0, 0.0, 1.0]]);
        assert!(!tree_psd_check(&a, &path(3), DEFAULT_PSD_TOL).unwrap().is_psd);
        let z = SymMatrix::zeros(4);
        assert!(tree_psd_check(&z, &path(4), DEFAULT_PSD_TOL).unwrap().is_psd);
    }

    #[test]
    fn errors() {
        let a = SymMatrix::filled(3, 1.0);
        assert!(matches!(
            tree_psd_check(&a, &path(3), DEFAULT_PSD_TOL),
            Err(Error::PatternViolation { i: 0, j: 2, .. })
        ));
        assert!(matches!(
            tree_psd_check(&a, &crate::graph::complete(3), DEFAULT_PSD_TOL),
            Err(Error::UnsupportedPattern(_))
        ));
    }

    #[test]
    fn input_is_not_mutated() {
        let a = m(&[[1.0, 1.0, 0.0], [1.0, 2.0, 1.0], [0.0, 1.0, 1.0]]);
        let copy = a.clone();
        tree_psd_check(&a, &path(3), DEFAULT_PSD_TOL).unwrap();
        assert_eq!(a, copy);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(256))]

        #[test]
        fn agrees_with_spectral_oracle(n in 1usize..=15, seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let t = random_tree(n, &mut rng);
            let mut a = SymMatrix::zeros(n);
            for i in 0..n { a.set(i, i, rng.random_range(-0.5..3.0)); }
            for (i, j) in t.edges() { a.set(i, j, rng.random_range(-1.5..1.5)); }
            let spec = a.is_psd(DEFAULT_PSD_TOL);
            let tree = tree_psd_check(&a, &t, DEFAULT_PSD_TOL).unwrap();
            prop_assert!(spec.in_boundary_band() || spec.is_psd == tree.is_psd);
        }

        #[test]
        fn sampled_psd_matrices_pass(n in 1usize..=15, seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let t = random_tree(n, &mut rng);
            let a = random_psd_with_pattern(&t, 3.0, seed).unwrap();
            prop_assert!(tree_psd_check(&a, &t, DEFAULT_PSD_TOL).unwrap().is_psd);
        }
    }
}
