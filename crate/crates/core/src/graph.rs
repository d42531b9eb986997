//! Simple undirected graphs, generators and exact combinatorial oracles.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::index;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("self-loop at line {line}")]
    SelfLoop { line: usize },
    #[error("vertex {vertex} out of range for n = {n}")]
    VertexOutOfRange { vertex: usize, n: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("exact arboricity needs n <= {limit}, got {n}")]
    TooLarge { n: usize, limit: usize },
    #[error("io: {0}")]
    Io(String),
}

/// Simple undirected graph on vertices `0..n`.
///
/// Adjacency lists are sorted, so a vertex's port `p` always names the same
/// neighbor.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "EdgeList", try_from = "EdgeList")]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    adj: Vec<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
struct EdgeList {
    n: usize,
    edges: Vec<(usize, usize)>,
}

impl From<Graph> for EdgeList {
    fn from(g: Graph) -> Self {
        EdgeList { n: g.n, edges: g.edges }
    }
}

impl TryFrom<EdgeList> for Graph {
    type Error = GraphError;
    fn try_from(e: EdgeList) -> Result<Self, GraphError> {
        Graph::new(e.n, e.edges)
    }
}

impl Graph {
    /// Builds a graph, collapsing duplicate edges. Self-loops are rejected.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self, GraphError> {
        let mut set = BTreeSet::new();
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(GraphError::VertexOutOfRange { vertex: u.max(v), n });
            }
            if u == v {
                return Err(GraphError::InvalidParameter(format!("self-loop on vertex {u}")));
            }
            set.insert((u.min(v), u.max(v)));
        }
        Ok(Self::from_sorted(n, set.into_iter().collect()))
    }

    fn from_sorted(n: usize, edges: Vec<(usize, usize)>) -> Self {
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in &edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        Graph { n, edges, adj }
    }

    pub fn empty(n: usize) -> Self {
        Self::from_sorted(n, Vec::new())
    }

    pub fn complete(n: usize) -> Self {
        let edges = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
        Self::from_sorted(n, edges)
    }

    pub fn path(n: usize) -> Self {
        Self::from_sorted(n, (1..n).map(|v| (v - 1, v)).collect())
    }

    /// Star with center 0 and `leaves` leaves.
    pub fn star(leaves: usize) -> Self {
        Self::from_sorted(leaves + 1, (1..=leaves).map(|v| (0, v)).collect())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    /// Edges as `(u, v)` with `u < v`, sorted.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.n && self.adj[u].binary_search(&v).is_ok()
    }

    /// Port of `u` in the adjacency list of `v`.
    pub fn port(&self, v: usize, u: usize) -> Option<usize> {
        self.adj[v].binary_search(&u).ok()
    }

    /// Position of edge `{u, v}` in [`Graph::edges`].
    pub fn edge_index(&self, u: usize, v: usize) -> Option<usize> {
        self.edges.binary_search(&(u.min(v), u.max(v))).ok()
    }

    /// Induced subgraph on `vertices`; returns it with the local-to-global map.
    pub fn induced(&self, vertices: &[usize]) -> (Graph, Vec<usize>) {
        let mut local = vec![usize::MAX; self.n];
        for (i, &v) in vertices.iter().enumerate() {
            local[v] = i;
        }
        let mut edges = Vec::new();
        for (i, &v) in vertices.iter().enumerate() {
            for &u in &self.adj[v] {
                let j = local[u];
                if j != usize::MAX && i < j {
                    edges.push((i, j));
                }
            }
        }
        edges.sort_unstable();
        (Graph::from_sorted(vertices.len(), edges), vertices.to_vec())
    }

    /// Line graph: one vertex per edge, in [`Graph::edges`] order.
    pub fn line_graph(&self) -> Graph {
        let mut edges = Vec::new();
        for v in 0..self.n {
            let inc: Vec<usize> = self.adj[v]
                .iter()
                .map(|&u| self.edge_index(u, v).expect("edge present"))
                .collect();
            for (i, &a) in inc.iter().enumerate() {
                for &b in &inc[i + 1..] {
                    edges.push((a.min(b), a.max(b)));
                }
            }
        }
        edges.sort_unstable();
        edges.dedup();
        Graph::from_sorted(self.m(), edges)
    }

    /// Writes the edge-list text format.
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("{} {}\n", self.n, self.m());
        for &(u, v) in &self.edges {
            let _ = writeln!(out, "{u} {v}");
        }
        out
    }
}

/// Distinct positive identifiers, one per vertex.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdAssignment {
    ids: Vec<u64>,
}

impl IdAssignment {
    pub fn new(ids: Vec<u64>) -> Result<Self, GraphError> {
        let distinct: BTreeSet<u64> = ids.iter().copied().collect();
        if distinct.len() != ids.len() {
            return Err(GraphError::InvalidParameter("ids are not distinct".into()));
        }
        if distinct.contains(&0) {
            return Err(GraphError::InvalidParameter("ids must be positive".into()));
        }
        Ok(IdAssignment { ids })
    }

    /// Vertex `v` gets id `v + 1`.
    pub fn identity(n: usize) -> Self {
        IdAssignment { ids: (1..=n as u64).collect() }
    }

    /// A uniformly random bijection onto `1..=n`.
    pub fn random_permutation(n: usize, seed: u64) -> Self {
        let mut ids: Vec<u64> = (1..=n as u64).collect();
        ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        IdAssignment { ids }
    }

    pub fn id(&self, v: usize) -> u64 {
        self.ids[v]
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn max_id(&self) -> u64 {
        self.ids.iter().copied().max().unwrap_or(0)
    }
}

/// Parses the edge-list text format.
pub fn parse_edge_list(text: &str) -> Result<Graph, GraphError> {
    let mut header: Option<(usize, usize)> = None;
    let mut edges = Vec::new();
    let mut seen = 0usize;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let nums = parse_pair(trimmed, line)?;
        match header {
            None => header = Some(nums),
            Some((n, _)) => {
                let (u, v) = nums;
                if u == v {
                    return Err(GraphError::SelfLoop { line });
                }
                if u >= n || v >= n {
                    return Err(GraphError::VertexOutOfRange { vertex: u.max(v), n });
                }
                edges.push((u, v));
                seen += 1;
            }
        }
    }
    let (n, m) = header.ok_or(GraphError::Parse { line: 1, msg: "missing header".into() })?;
    if seen != m {
        return Err(GraphError::Parse {
            line: text.lines().count(),
            msg: format!("header announces {m} edges, found {seen}"),
        });
    }
    Graph::new(n, edges)
}

fn parse_pair(s: &str, line: usize) -> Result<(usize, usize), GraphError> {
    let mut it = s.split_whitespace();
    let mut next = || -> Result<usize, GraphError> {
        let tok = it.next().ok_or(GraphError::Parse { line, msg: "expected two integers".into() })?;
        tok.parse().map_err(|_| GraphError::Parse { line, msg: format!("not an integer: {tok:?}") })
    };
    let a = next()?;
    let b = next()?;
    if it.next().is_some() {
        return Err(GraphError::Parse { line, msg: "trailing tokens".into() });
    }
    Ok((a, b))
}

pub fn load_edge_list(path: impl AsRef<Path>) -> Result<Graph, GraphError> {
    let text = std::fs::read_to_string(path).map_err(|e| GraphError::Io(e.to_string()))?;
    parse_edge_list(&text)
}

/// Cycle `C_n`.
pub fn gen_ring(n: usize) -> Result<Graph, GraphError> {
    if n < 3 {
        return Err(GraphError::InvalidParameter(format!("ring needs n >= 3, got {n}")));
    }
    let mut edges: Vec<(usize, usize)> = (1..n).map(|v| (v - 1, v)).collect();
    edges.push((0, n - 1));
    Graph::new(n, edges)
}

/// Union of `a` independent uniform random spanning trees on `n` labeled vertices.
pub fn gen_forest_union(n: usize, a: usize, seed: u64) -> Result<Graph, GraphError> {
    if n == 0 || a == 0 {
        return Err(GraphError::InvalidParameter("forest union needs n >= 1 and a >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::with_capacity(a * n.saturating_sub(1));
    for _ in 0..a {
        edges.extend(random_tree(n, &mut rng));
    }
    Graph::new(n, edges)
}

/// Uniform labeled tree via a random Prüfer sequence.
fn random_tree(n: usize, rng: &mut impl Rng) -> Vec<(usize, usize)> {
    if n < 2 {
        return Vec::new();
    }
    if n == 2 {
        return vec![(0, 1)];
    }
    let code: Vec<usize> = (0..n - 2).map(|_| rng.random_range(0..n)).collect();
    let mut degree = vec![1usize; n];
    for &c in &code {
        degree[c] += 1;
    }
    let mut leaves: std::collections::BinaryHeap<std::cmp::Reverse<usize>> =
        (0..n).filter(|&v| degree[v] == 1).map(std::cmp::Reverse).collect();
    let mut edges = Vec::with_capacity(n - 1);
    for &c in &code {
        let std::cmp::Reverse(leaf) = leaves.pop().expect("a leaf exists");
        edges.push((leaf, c));
        degree[c] -= 1;
        if degree[c] == 1 {
            leaves.push(std::cmp::Reverse(c));
        }
    }
    let std::cmp::Reverse(u) = leaves.pop().expect("two leaves remain");
    let std::cmp::Reverse(v) = leaves.pop().expect("two leaves remain");
    edges.push((u, v));
    edges
}

/// `m` distinct edges drawn uniformly from all `n(n-1)/2` pairs.
pub fn gen_random_graph(n: usize, m: usize, seed: u64) -> Result<Graph, GraphError> {
    let total = n * n.saturating_sub(1) / 2;
    if m > total {
        return Err(GraphError::InvalidParameter(format!("m = {m} exceeds {total} possible edges")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let edges = index::sample(&mut rng, total, m).into_iter().map(|k| unrank_pair(k, n));
    Graph::new(n, edges)
}

/// Maps `k` in `0..n(n-1)/2` to the k-th pair `(u, v)`, `u < v`, in row order.
fn unrank_pair(k: usize, n: usize) -> (usize, usize) {
    let mut u = 0;
    let mut rest = k;
    loop {
        let row = n - 1 - u;
        if rest < row {
            return (u, u + 1 + rest);
        }
        rest -= row;
        u += 1;
    }
}

pub const EXACT_ARBORICITY_LIMIT: usize = 16;

/// Nash-Williams arboricity by enumerating every vertex subset.
pub fn exact_arboricity(g: &Graph) -> Result<usize, GraphError> {
    if g.n() > EXACT_ARBORICITY_LIMIT {
        return Err(GraphError::TooLarge { n: g.n(), limit: EXACT_ARBORICITY_LIMIT });
    }
    let masks: Vec<u32> = (0..g.n())
        .map(|v| g.neighbors(v).iter().fold(0u32, |acc, &u| acc | (1 << u)))
        .collect();
    let mut best = 0usize;
    for s in 1u32..(1u32 << g.n()) {
        let size = s.count_ones() as usize;
        if size < 2 {
            continue;
        }
        let mut twice = 0usize;
        let mut rest = s;
        while rest != 0 {
            let v = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            twice += (masks[v] & s).count_ones() as usize;
        }
        best = best.max((twice / 2).div_ceil(size - 1));
    }
    Ok(best)
}

pub fn max_degree(g: &Graph) -> usize {
    (0..g.n()).map(|v| g.degree(v)).max().unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_path() {
        let g = parse_edge_list("3 2\n0 1\n1 2").unwrap();
        assert_eq!(g.edges(), &[(0, 1), (1, 2)]);
    }

    #[test]
    fn parses_isolated_vertex() {
        let g = parse_edge_list("1 0").unwrap();
        assert_eq!((g.n(), g.m()), (1, 0));
    }

    #[test]
    fn rejects_self_loop_with_line() {
        assert_eq!(parse_edge_list("2 1\n0 0"), Err(GraphError::SelfLoop { line: 2 }));
    }

    #[test]
    fn comments_and_duplicates() {
        let g = parse_edge_list("# c\n3 3\n0 1\n# mid\n1 0\n1 2\n").unwrap();
        assert_eq!(g.m(), 2);
    }

    #[test]
    fn parse_errors_report_line() {
        assert!(matches!(parse_edge_list("2 1\n0 x"), Err(GraphError::Parse { line: 2, .. })));
        assert!(matches!(
            parse_edge_list("2 1\n0 5"),
            Err(GraphError::VertexOutOfRange { vertex: 5, n: 2 })
        ));
    }

    #[test]
    fn edge_list_round_trip() {
        let g = gen_forest_union(20, 2, 3).unwrap();
        assert_eq!(parse_edge_list(&g.to_edge_list()).unwrap(), g);
    }

    #[test]
    fn rings() {
        let g = gen_ring(6).unwrap();
        assert_eq!((g.n(), g.m()), (6, 6));
        assert!((0..6).all(|v| g.degree(v) == 2));
        assert_eq!(gen_ring(3).unwrap(), Graph::complete(3));
        assert!(gen_ring(2).is_err());
        assert_eq!(exact_arboricity(&g).unwrap(), 2);
    }

    #[test]
    fn forest_union_small_cases() {
        let g = gen_forest_union(10, 1, 7).unwrap();
        assert_eq!(g.m(), 9);
        assert_eq!(exact_arboricity(&g).unwrap(), 1);
        assert!(exact_arboricity(&gen_forest_union(8, 3, 1).unwrap()).unwrap() <= 3);
        assert_eq!(gen_forest_union(1, 5, 0).unwrap().m(), 0);
    }

    #[test]
    fn random_graph_forced_cases() {
        assert_eq!(gen_random_graph(4, 6, 1).unwrap(), Graph::complete(4));
        assert_eq!(gen_random_graph(4, 0, 1).unwrap().m(), 0);
        let k5 = gen_random_graph(5, 10, 9).unwrap();
        assert_eq!(k5, Graph::complete(5));
        assert_eq!(exact_arboricity(&k5).unwrap(), 3);
        assert!(gen_random_graph(4, 7, 1).is_err());
    }

    #[test]
    fn unrank_covers_all_pairs() {
        let n = 7;
        let pairs: Vec<_> = (0..21).map(|k| unrank_pair(k, n)).collect();
        let expected: Vec<_> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
        assert_eq!(pairs, expected);
    }

    #[test]
    fn arboricity_hand_values() {
        assert_eq!(exact_arboricity(&Graph::path(7)).unwrap(), 1);
        assert_eq!(exact_arboricity(&Graph::complete(4)).unwrap(), 2);
        assert_eq!(exact_arboricity(&Graph::empty(5)).unwrap(), 0);
        assert!(exact_arboricity(&Graph::empty(17)).is_err());
    }

    #[test]
    fn degrees() {
        assert_eq!(max_degree(&Graph::complete(4)), 3);
        assert_eq!(max_degree(&Graph::star(5)), 5);
        assert_eq!(max_degree(&Graph::empty(3)), 0);
    }

    #[test]
    fn induced_and_line_graph() {
        let (h, map) = Graph::complete(4).induced(&[1, 3, 2]);
        assert_eq!(h, Graph::complete(3));
        assert_eq!(map, vec![1, 3, 2]);
        let l = Graph::star(3).line_graph();
        assert_eq!(l, Graph::complete(3));
        assert_eq!(Graph::path(4).line_graph(), Graph::path(3));
    }

    #[test]
    fn ids() {
        assert!(IdAssignment::new(vec![1, 1]).is_err());
        assert!(IdAssignment::new(vec![0, 1]).is_err());
        let p = IdAssignment::random_permutation(10, 4);
        let mut s = p.as_slice().to_vec();
        s.sort_unstable();
        assert_eq!(s, (1..=10).collect::<Vec<u64>>());
    }
}
