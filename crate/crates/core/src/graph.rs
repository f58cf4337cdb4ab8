//! Sparsity-pattern graphs.
//!
//! Vertices are `0..n`. Edges are unordered and stored once as `(i, j)` with
//! `i < j`; adjacency lists are kept sorted so every traversal is
//! deterministic.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Families accepted by [`build_graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphKind {
    Path,
    Star,
    Complete,
    RandomTree,
}

impl FromStr for GraphKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "path" => Ok(GraphKind::Path),
            "star" => Ok(GraphKind::Star),
            "complete" => Ok(GraphKind::Complete),
            "random_tree" | "random-tree" => Ok(GraphKind::RandomTree),
            other => Err(Error::Usage(format!("unknown graph kind '{other}'"))),
        }
    }
}

/// Undirected simple graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: BTreeSet<(usize, usize)>,
    adj: Vec<Vec<usize>>,
}

impl Graph {
    /// Graph on `n` vertices with no edges.
    pub fn empty(n: usize) -> Self {
        Graph {
            n,
            edges: BTreeSet::new(),
            adj: vec![Vec::new(); n],
        }
    }

    /// Builds a graph from an edge list, rejecting self-loops, duplicates
    /// and out-of-range endpoints.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut g = Graph::empty(n);
        for (i, j) in edges {
            g.add_edge(i, j)?;
        }
        Ok(g)
    }

    fn add_edge(&mut self, i: usize, j: usize) -> Result<()> {
        if i == j {
            return Err(Error::InvalidSize(format!("self-loop at vertex {i}")));
        }
        if i >= self.n || j >= self.n {
            return Err(Error::InvalidSize(format!(
                "edge ({i}, {j}) has an endpoint >= n = {}",
                self.n
            )));
        }
        let e = (i.min(j), i.max(j));
        if !self.edges.insert(e) {
            return Err(Error::InvalidSize(format!(
                "duplicate edge ({}, {})",
                e.0, e.1
            )));
        }
        insert_sorted(&mut self.adj[i], j);
        insert_sorted(&mut self.adj[j], i);
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges as `(i, j)` with `i < j`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        i != j && self.edges.contains(&(i.min(j), i.max(j)))
    }

    /// Sorted neighbours of `v`.
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    /// Δ(G). Zero for the empty graph.
    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Vertex of maximum degree, smallest label on ties.
    pub fn max_degree_vertex(&self) -> Option<usize> {
        let d = self.max_degree();
        (0..self.n).find(|&v| self.degree(v) == d)
    }

    /// Number of connected components.
    pub fn component_count(&self) -> usize {
        let mut seen = vec![false; self.n];
        let mut count = 0;
        let mut stack = Vec::new();
        for s in 0..self.n {
            if seen[s] {
                continue;
            }
            count += 1;
            seen[s] = true;
            stack.push(s);
            while let Some(v) = stack.pop() {
                for &w in &self.adj[v] {
                    if !seen[w] {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
        }
        count
    }

    pub fn is_connected(&self) -> bool {
        self.n > 0 && self.component_count() == 1
    }

    /// Connected with exactly `n - 1` edges.
    pub fn is_tree(&self) -> bool {
        self.n > 0 && self.edges.len() + 1 == self.n && self.is_connected()
    }

    /// Acyclic (every component is a tree).
    pub fn is_forest(&self) -> bool {
        self.edges.len() + self.component_count() == self.n
    }

    /// `true` when every edge of `self` is an edge of `other` (same `n`).
    pub fn is_subgraph_of(&self, other: &Graph) -> bool {
        self.n == other.n && self.edges.iter().all(|e| other.edges.contains(e))
    }

    /// First `(i, j, k)` in lexicographic order with `(i,j), (i,k)` edges and
    /// `(j,k)` not an edge, `j < k`. `None` iff every component is complete.
    pub fn find_open_triangle(&self) -> Option<(usize, usize, usize)> {
        for i in 0..self.n {
            let nb = &self.adj[i];
            for (a, &j) in nb.iter().enumerate() {
                for &k in &nb[a + 1..] {
                    if !self.has_edge(j, k) {
                        return Some((i, j, k));
                    }
                }
            }
        }
        None
    }

    /// Parses the text format: a header line `n m`, then `m` lines `i j`.
    /// Blank lines and lines starting with `#` are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (hl, header) = lines.next().ok_or(Error::Parse {
            line: 0,
            msg: "missing header".into(),
        })?;
        let nums = parse_usizes(header, hl)?;
        let [n, m] = nums[..] else {
            return Err(Error::Parse {
                line: hl,
                msg: "header must be 'n m'".into(),
            });
        };
        if n == 0 {
            return Err(Error::InvalidSize("n = 0".into()));
        }
        let mut g = Graph::empty(n);
        let mut read = 0;
        for (ln, line) in lines {
            let nums = parse_usizes(line, ln)?;
            let [i, j] = nums[..] else {
                return Err(Error::Parse {
                    line: ln,
                    msg: "edge line must be 'i j'".into(),
                });
            };
            g.add_edge(i, j).map_err(|e| Error::Parse {
                line: ln,
                msg: e.to_string(),
            })?;
            read += 1;
        }
        if read != m {
            return Err(Error::Parse {
                line: hl,
                msg: format!("header declares {m} edges, found {read}"),
            });
        }
        Ok(g)
    }

    /// Serializes to the text format accepted by [`Graph::parse`].
    pub fn to_text(&self) -> String {
        let mut s = format!("{} {}\n", self.n, self.edges.len());
        for (i, j) in &self.edges {
            s.push_str(&format!("{i} {j}\n"));
        }
        s
    }
}

impl fmt::Display for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

fn insert_sorted(v: &mut Vec<usize>, x: usize) {
    let pos = v.partition_point(|&y| y < x);
    v.insert(pos, x);
}

fn parse_usizes(line: &str, ln: usize) -> Result<Vec<usize>> {
    line.split_whitespace()
        .map(|t| {
            t.parse::<usize>().map_err(|_| Error::Parse {
                line: ln,
                msg: format!("expected a non-negative integer, got '{t}'"),
            })
        })
        .collect()
}

/// Builds one of the standard families on `n` vertices. `seed` is required
/// for (and only used by) [`GraphKind::RandomTree`].
pub fn build_graph(kind: GraphKind, n: usize, seed: Option<u64>) -> Result<Graph> {
    if n == 0 {
        return Err(Error::InvalidSize("graph needs at least one vertex".into()));
    }
    match kind {
        GraphKind::Path => Graph::from_edges(n, (1..n).map(|i| (i - 1, i))),
        GraphKind::Star => Graph::from_edges(n, (1..n).map(|i| (0, i))),
        GraphKind::Complete => {
            Graph::from_edges(n, (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))))
        }
        GraphKind::RandomTree => {
            let seed = seed.ok_or_else(|| Error::Usage("random_tree requires a seed".into()))?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            Ok(random_tree(n, &mut rng))
        }
    }
}

pub fn path(n: usize) -> Graph {
    build_graph(GraphKind::Path, n.max(1), None).expect("n >= 1")
}

pub fn star(n: usize) -> Graph {
    build_graph(GraphKind::Star, n.max(1), None).expect("n >= 1")
}

pub fn complete(n: usize) -> Graph {
    build_graph(GraphKind::Complete, n.max(1), None).expect("n >= 1")
}

/// Uniform labelled tree on `n >= 1` vertices, decoded from a random Prüfer
/// sequence.
pub fn random_tree<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Graph {
    assert!(n >= 1, "random_tree needs n >= 1");
    if n <= 2 {
        return Graph::from_edges(n, (1..n).map(|i| (0, i))).expect("valid");
    }
    let seq: Vec<usize> = (0..n - 2).map(|_| rng.random_range(0..n)).collect();
    Graph::from_edges(n, prufer_decode(n, &seq)).expect("Prüfer decoding yields a tree")
}

/// Linear-time Prüfer decoding.
pub fn prufer_decode(n: usize, seq: &[usize]) -> Vec<(usize, usize)> {
    debug_assert_eq!(seq.len() + 2, n);
    let mut degree = vec![1usize; n];
    for &v in seq {
        degree[v] += 1;
    }
    let mut edges = Vec::with_capacity(n - 1);
    let mut ptr = (0..n).find(|&v| degree[v] == 1).expect("a leaf exists");
    let mut leaf = ptr;
    for &v in seq {
        edges.push((leaf, v));
        degree[v] -= 1;
        if degree[v] == 1 && v < ptr {
            leaf = v;
        } else {
            ptr += 1;
            while degree[ptr] != 1 {
                ptr += 1;
            }
            leaf = ptr;
        }
    }
    edges.push((leaf, n - 1));
    edges
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn standard_families() {
        let p3 = build_graph(GraphKind::Path, 3, None).unwrap();
        assert_eq!(p3.edges().collect::<Vec<_>>(), vec![(0, 1), (1, 2)]);
        let s4 = build_graph(GraphKind::Star, 4, None).unwrap();
        assert_eq!(s4.edges().collect::<Vec<_>>(), vec![(0, 1), (0, 2), (0, 3)]);
        assert_eq!(s4.max_degree(), 3);
        assert_eq!(complete(5).edge_count(), 10);
    }

    #[test]
    fn zero_vertices_rejected() {
        for kind in [GraphKind::Path, GraphKind::Star, GraphKind::Complete] {
            assert!(matches!(build_graph(kind, 0, None), Err(Error::InvalidSize(_))));
        }
        assert!(build_graph(GraphKind::RandomTree, 0, Some(1)).is_err());
    }

    #[test]
    fn random_tree_needs_seed() {
        assert!(matches!(
            build_graph(GraphKind::RandomTree, 5, None),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn random_tree_seed_42() {
        let g = build_graph(GraphKind::RandomTree, 8, Some(42)).unwrap();
        assert_eq!(g.edge_count(), 7);
        // independent connectivity check by BFS from vertex 0
        let mut seen = [false; 8];
        let mut queue = std::collections::VecDeque::from([0]);
        seen[0] = true;
        while let Some(v) = queue.pop_front() {
            for &w in g.neighbors(v) {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        assert!(seen.iter().all(|&s| s));
        assert_eq!(g, build_graph(GraphKind::RandomTree, 8, Some(42)).unwrap());
    }

    #[test]
    fn degrees() {
        assert_eq!(star(5).max_degree(), 4);
        assert_eq!(path(5).max_degree(), 2);
        assert_eq!(complete(6).max_degree(), 5);
    }

    #[test]
    fn tree_predicate() {
        assert!(path(4).is_tree());
        assert!(!complete(3).is_tree());
        assert!(star(7).is_tree());
        assert!(!Graph::empty(3).is_tree());
        assert!(Graph::empty(3).is_forest());
        assert!(!complete(3).is_forest());
    }

    #[test]
    fn open_triangles() {
        assert_eq!(path(3).find_open_triangle(), Some((1, 0, 2)));
        assert_eq!(complete(4).find_open_triangle(), None);
        assert_eq!(star(3).find_open_triangle(), Some((0, 1, 2)));
        // two disjoint complete components
        let g = Graph::from_edges(5, [(0, 1), (2, 3), (2, 4), (3, 4)]).unwrap();
        assert_eq!(g.find_open_triangle(), None);
    }

    #[test]
    fn text_format() {
        let g = Graph::parse("3 2\n0 1\n1 2\n").unwrap();
        assert_eq!(g, path(3));
        assert_eq!(Graph::parse(&g.to_text()).unwrap(), g);
        assert!(Graph::parse("3 1\n1 1\n").is_err());
        assert!(Graph::parse("3 2\n0 1\n1 0\n").is_err());
        assert!(Graph::parse("3 2\n0 1\n").is_err());
        assert!(Graph::parse("2 1\n0 5\n").is_err());
        assert!(Graph::parse("").is_err());
    }

    #[test]
    fn prufer_known_sequence() {
        // sequence (3, 3, 3, 4) on 6 vertices: the classic textbook example
        let mut e = prufer_decode(6, &[3, 3, 3, 4]);
        e.iter_mut().for_each(|p| *p = (p.0.min(p.1), p.0.max(p.1)));
        e.sort();
        assert_eq!(e, vec![(0, 3), (1, 3), (2, 3), (3, 4), (4, 5)]);
    }

    proptest! {
        #[test]
        fn random_trees_are_trees(n in 1usize..60, seed in any::<u64>()) {
            let g = build_graph(GraphKind::RandomTree, n, Some(seed)).unwrap();
            prop_assert!(g.is_tree());
            if n >= 3 {
                prop_assert!(g.find_open_triangle().is_some());
            }
        }

        #[test]
        fn star_degree_exact(d in 0usize..40) {
            prop_assert_eq!(star(d + 1).max_degree(), d);
        }

        #[test]
        fn complete_has_no_open_triangle(n in 1usize..12) {
            prop_assert!(complete(n).find_open_triangle().is_none());
        }
    }
}
