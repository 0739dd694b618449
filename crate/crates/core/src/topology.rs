//! Undirected graphs describing how NIDS modules are wired together.
//!
//! Every [`Graph`] is simple (no self-loops, no multi-edges) and connected;
//! both properties are checked on construction. Nodes are dense indices
//! `0..n`. When a node is removed the survivors are re-indexed, and each
//! graph keeps the original label of every node so callers can report
//! removals in terms of the initial topology.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Index of a node in the current graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(transparent)
)]
pub struct NodeId(pub usize);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TopologyError {
    InvalidSize(String),
    UnknownNode(usize),
    SelfLoop(usize),
    DuplicateEdge(usize, usize),
    NodeOutOfRange { node: usize, n: usize },
    Disconnected { components: usize },
    Parse { line: usize, reason: String },
}

impl fmt::Display for TopologyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::InvalidSize(msg) => write!(f, "invalid graph size: {msg}"),
            Self::UnknownNode(v) => write!(f, "node {v} is not in the graph"),
            Self::SelfLoop(v) => write!(f, "self-loop on node {v}"),
            Self::DuplicateEdge(u, v) => write!(f, "duplicate edge ({u}, {v})"),
            Self::NodeOutOfRange { node, n } => {
                write!(f, "node {node} out of range for a graph with {n} nodes")
            }
            Self::Disconnected { components } => {
                write!(f, "graph is disconnected ({components} components)")
            }
            Self::Parse { line, reason } => write!(f, "edge list line {line}: {reason}"),
        }
    }
}

impl core::error::Error for TopologyError {}

/// What is left of a graph after a removal that split it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DisconnectionReport {
    /// Label of the removed node.
    pub removed: usize,
    /// Connected components of the remainder, as original labels, largest first.
    pub components: Vec<Vec<usize>>,
}

/// Outcome of [`Graph::remove_node`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Removal {
    Connected(Graph),
    Disconnected(DisconnectionReport),
}

/// A connected, simple, undirected graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: BTreeSet<(usize, usize)>,
    adjacency: Vec<bool>,
    neighbors: Vec<Vec<usize>>,
    labels: Vec<usize>,
}

impl Graph {
    /// Builds a graph from an edge list; edges may be given in either orientation.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self, TopologyError> {
        let labels = (0..n).collect();
        Self::with_labels(n, edges, labels)
    }

    fn with_labels(
        n: usize,
        edges: &[(usize, usize)],
        labels: Vec<usize>,
    ) -> Result<Self, TopologyError> {
        if n == 0 {
            return Err(TopologyError::InvalidSize("a graph needs at least one node".into()));
        }
        let mut set = BTreeSet::new();
        let mut adjacency = vec![false; n * n];
        for &(a, b) in edges {
            for node in [a, b] {
                if node >= n {
                    return Err(TopologyError::NodeOutOfRange { node, n });
                }
            }
            if a == b {
                return Err(TopologyError::SelfLoop(a));
            }
            let (u, v) = if a < b { (a, b) } else { (b, a) };
            if !set.insert((u, v)) {
                return Err(TopologyError::DuplicateEdge(u, v));
            }
            adjacency[u * n + v] = true;
            adjacency[v * n + u] = true;
        }
        let neighbors = (0..n)
            .map(|i| (0..n).filter(|&j| adjacency[i * n + j]).collect())
            .collect();
        let graph = Self {
            n,
            edges: set,
            adjacency,
            neighbors,
            labels,
        };
        let components = graph.components().len();
        if components != 1 {
            return Err(TopologyError::Disconnected { components });
        }
        Ok(graph)
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges as `(u, v)` pairs with `u < v`, in ascending order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn is_adjacent(&self, u: usize, v: usize) -> bool {
        u < self.n && v < self.n && self.adjacency[u * self.n + v]
    }

    /// Row-major `n × n` adjacency matrix.
    pub fn adjacency(&self) -> &[bool] {
        &self.adjacency
    }

    /// Neighbors of `i` in ascending order.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.neighbors.iter().map(Vec::len).collect()
    }

    pub fn max_degree(&self) -> usize {
        self.neighbors.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Original label of the node currently at index `i`.
    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn index_of_label(&self, label: usize) -> Option<usize> {
        self.labels.iter().position(|&l| l == label)
    }

    /// Connected components as sorted index lists.
    fn components(&self) -> Vec<Vec<usize>> {
        components_of(self.n, |v| self.neighbors[v].iter().copied())
    }

    /// Removes `v` and its incident edges.
    ///
    /// Survivors are re-indexed in ascending order of their current index and
    /// keep their labels. A disconnected remainder is reported rather than
    /// returned as a graph.
    pub fn remove_node(&self, v: NodeId) -> Result<Removal, TopologyError> {
        let v = v.0;
        if v >= self.n {
            return Err(TopologyError::UnknownNode(v));
        }
        if self.n == 1 {
            return Err(TopologyError::InvalidSize(
                "cannot remove the last node of a graph".into(),
            ));
        }
        let remap = |i: usize| if i < v { i } else { i - 1 };
        let edges: Vec<(usize, usize)> = self
            .edges
            .iter()
            .filter(|&&(a, b)| a != v && b != v)
            .map(|&(a, b)| (remap(a), remap(b)))
            .collect();
        let labels: Vec<usize> = self
            .labels
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != v)
            .map(|(_, &l)| l)
            .collect();
        let n = self.n - 1;
        let mut lists = vec![Vec::new(); n];
        for &(a, b) in &edges {
            lists[a].push(b);
            lists[b].push(a);
        }
        let mut components = components_of(n, |i| lists[i].iter().copied());
        if components.len() == 1 {
            return Self::with_labels(n, &edges, labels).map(Removal::Connected);
        }
        components.sort_by(|a, b| b.len().cmp(&a.len()).then(a[0].cmp(&b[0])));
        let components = components
            .into_iter()
            .map(|c| c.into_iter().map(|i| labels[i]).collect())
            .collect();
        Ok(Removal::Disconnected(DisconnectionReport {
            removed: self.labels[v],
            components,
        }))
    }

    /// Induced subgraph on `keep` (current indices), re-indexed in the order given.
    pub fn induced(&self, keep: &[usize]) -> Result<Self, TopologyError> {
        let mut position = vec![usize::MAX; self.n];
        for (new, &old) in keep.iter().enumerate() {
            if old >= self.n {
                return Err(TopologyError::UnknownNode(old));
            }
            position[old] = new;
        }
        let edges: Vec<(usize, usize)> = self
            .edges
            .iter()
            .filter(|&&(a, b)| position[a] != usize::MAX && position[b] != usize::MAX)
            .map(|&(a, b)| (position[a], position[b]))
            .collect();
        let labels = keep.iter().map(|&i| self.labels[i]).collect();
        Self::with_labels(keep.len(), &edges, labels)
    }

    /// One `u v` pair per line, 0-based indices, ascending.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        for (u, v) in self.edges() {
            out.push_str(&format!("{u} {v}\n"));
        }
        out
    }

    /// Parses the format written by [`Graph::to_edge_list`]. The node count is
    /// one past the largest index mentioned. Blank lines and `#` comments are skipped.
    pub fn parse_edge_list(text: &str) -> Result<Self, TopologyError> {
        let mut edges = Vec::new();
        let mut n = 0;
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            let mut next = || -> Result<usize, TopologyError> {
                let tok = parts.next().ok_or_else(|| TopologyError::Parse {
                    line: idx + 1,
                    reason: "expected two node indices".into(),
                })?;
                tok.parse().map_err(|_| TopologyError::Parse {
                    line: idx + 1,
                    reason: format!("not a node index: {tok:?}"),
                })
            };
            let (u, v) = (next()?, next()?);
            if parts.next().is_some() {
                return Err(TopologyError::Parse {
                    line: idx + 1,
                    reason: "trailing fields".into(),
                });
            }
            n = n.max(u + 1).max(v + 1);
            edges.push((u, v));
        }
        Self::from_edges(n, &edges)
    }
}

fn components_of<I, F>(n: usize, neighbors: F) -> Vec<Vec<usize>>
where
    F: Fn(usize) -> I,
    I: Iterator<Item = usize>,
{
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut stack = vec![start];
        let mut comp = Vec::new();
        while let Some(v) = stack.pop() {
            comp.push(v);
            for w in neighbors(v) {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

/// Cycle on `n ≥ 3` nodes.
pub fn build_ring(n: usize) -> Result<Graph, TopologyError> {
    if n < 3 {
        return Err(TopologyError::InvalidSize(format!("ring needs n >= 3, got {n}")));
    }
    let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
    Graph::from_edges(n, &edges)
}

/// `rows × cols` grid with wrap-around in both directions. Node `(r, c)` has
/// index `r * cols + c`.
pub fn build_torus(rows: usize, cols: usize) -> Result<Graph, TopologyError> {
    if rows < 3 || cols < 3 {
        return Err(TopologyError::InvalidSize(format!(
            "torus needs both dimensions >= 3, got {rows}x{cols}"
        )));
    }
    let mut edges = Vec::with_capacity(2 * rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            let here = r * cols + c;
            edges.push((here, r * cols + (c + 1) % cols));
            edges.push((here, ((r + 1) % rows) * cols + c));
        }
    }
    Graph::from_edges(rows * cols, &edges)
}

/// The Petersen graph: outer 5-cycle `0..5`, inner pentagram `5..10`, spokes `i - i+5`.
pub fn build_petersen() -> Graph {
    let mut edges = Vec::with_capacity(15);
    for i in 0..5 {
        edges.push((i, (i + 1) % 5));
        edges.push((5 + i, 5 + (i + 2) % 5));
        edges.push((i, i + 5));
    }
    Graph::from_edges(10, &edges).expect("petersen graph is valid")
}

/// Star with one hub (node 0) and `n - 1` leaves.
pub fn build_star(n: usize) -> Result<Graph, TopologyError> {
    if n < 2 {
        return Err(TopologyError::InvalidSize(format!("star needs n >= 2, got {n}")));
    }
    let edges: Vec<_> = (1..n).map(|leaf| (0, leaf)).collect();
    Graph::from_edges(n, &edges)
}

/// Path `0 - 1 - ... - n-1`.
pub fn build_path(n: usize) -> Result<Graph, TopologyError> {
    if n < 1 {
        return Err(TopologyError::InvalidSize("path needs at least one node".into()));
    }
    let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
    Graph::from_edges(n, &edges)
}

/// Connected simple graph with exactly `n` nodes and `m` edges.
///
/// Draws `m` distinct edges uniformly from all `n(n-1)/2` pairs and retries
/// until the draw is connected, so the result is uniform over connected
/// graphs with `m` edges. Deterministic for a given seed.
pub fn build_random(n: usize, m: usize, seed: u64) -> Result<Graph, TopologyError> {
    let pairs = n * n.saturating_sub(1) / 2;
    if n == 0 || m + 1 < n || m > pairs {
        return Err(TopologyError::InvalidSize(format!(
            "no connected simple graph has {n} nodes and {m} edges"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let mut chosen: Vec<usize> = rand::seq::index::sample(&mut rng, pairs, m).into_vec();
        chosen.sort_unstable();
        let edges: Vec<(usize, usize)> = chosen.into_iter().map(|k| pair_at(n, k)).collect();
        match Graph::from_edges(n, &edges) {
            Ok(g) => return Ok(g),
            Err(TopologyError::Disconnected { .. }) => continue,
            Err(other) => return Err(other),
        }
    }
}

/// The `k`-th pair `(u, v)`, `u < v`, in row-major upper-triangle order.
fn pair_at(n: usize, mut k: usize) -> (usize, usize) {
    let mut u = 0;
    loop {
        let row = n - 1 - u;
        if k < row {
            return (u, u + 1 + k);
        }
        k -= row;
        u += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_well_formed(g: &Graph) {
        let n = g.node_count();
        for i in 0..n {
            assert!(!g.is_adjacent(i, i));
            for j in 0..n {
                assert_eq!(g.is_adjacent(i, j), g.is_adjacent(j, i));
            }
            let row_sum = (0..n).filter(|&j| g.adjacency()[i * n + j]).count();
            assert_eq!(row_sum, g.degree(i));
        }
        assert_eq!(g.components().len(), 1);
    }

    #[test]
    fn ring_sizes() {
        for n in [3, 9, 25] {
            let g = build_ring(n).unwrap();
            assert_well_formed(&g);
            assert_eq!(g.node_count(), n);
            assert_eq!(g.edge_count(), n);
            assert!(g.degrees().iter().all(|&d| d == 2));
        }
        let tri = build_ring(3).unwrap();
        assert_eq!(tri.neighbors(0), &[1, 2]);
        assert!(matches!(build_ring(2), Err(TopologyError::InvalidSize(_))));
    }

    #[test]
    fn torus_sizes_and_wraparound() {
        let g = build_torus(3, 3).unwrap();
        assert_well_formed(&g);
        assert_eq!((g.node_count(), g.edge_count()), (9, 18));
        assert!(g.degrees().iter().all(|&d| d == 4));
        // (0,0) touches (0,1), (0,2), (1,0), (2,0)
        assert_eq!(g.neighbors(0), &[1, 2, 3, 6]);

        let g = build_torus(5, 5).unwrap();
        assert_well_formed(&g);
        assert_eq!((g.node_count(), g.edge_count()), (25, 50));
        assert!(g.degrees().iter().all(|&d| d == 4));
        assert!(build_torus(2, 5).is_err());
    }

    #[test]
    fn petersen_shape() {
        let g = build_petersen();
        assert_well_formed(&g);
        assert_eq!((g.node_count(), g.edge_count()), (10, 15));
        assert!(g.degrees().iter().all(|&d| d == 3));
        // exhaustive 3-subset check: no triangles
        for a in 0..10 {
            for b in a + 1..10 {
                for c in b + 1..10 {
                    let tri = g.is_adjacent(a, b) && g.is_adjacent(b, c) && g.is_adjacent(a, c);
                    assert!(!tri, "triangle {a} {b} {c}");
                }
            }
        }
    }

    #[test]
    fn random_graph_counts_and_determinism() {
        let g = build_random(10, 15, 1).unwrap();
        assert_well_formed(&g);
        assert_eq!((g.node_count(), g.edge_count()), (10, 15));
        assert_eq!(g, build_random(10, 15, 1).unwrap());

        let forced = build_random(2, 1, 99).unwrap();
        assert_eq!(forced.edges().collect::<Vec<_>>(), vec![(0, 1)]);

        let distinct: BTreeSet<Vec<(usize, usize)>> = (0..10)
            .map(|s| build_random(10, 15, s).unwrap().edges().collect())
            .collect();
        assert!(distinct.len() >= 2);
    }

    #[test]
    fn random_graph_rejects_infeasible_counts() {
        assert!(build_random(10, 8, 0).is_err());
        assert!(build_random(4, 7, 0).is_err());
        assert!(build_random(4, 6, 0).is_ok());
    }

    #[test]
    fn pair_enumeration_covers_upper_triangle() {
        let n = 6;
        let all: Vec<_> = (0..n * (n - 1) / 2).map(|k| pair_at(n, k)).collect();
        let expected: Vec<_> = (0..n)
            .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
            .collect();
        assert_eq!(all, expected);
    }

    #[test]
    fn remove_from_ring_leaves_path() {
        let g = build_ring(4).unwrap();
        let Removal::Connected(p) = g.remove_node(NodeId(0)).unwrap() else {
            panic!("ring minus one node stays connected");
        };
        assert_eq!(p.node_count(), 3);
        assert_eq!(p.edge_count(), 2);
        assert_eq!(p.labels(), &[1, 2, 3]);
        assert_eq!(p.index_of_label(3), Some(2));
    }

    #[test]
    fn remove_star_hub_reports_disconnection() {
        let g = build_star(4).unwrap();
        match g.remove_node(NodeId(0)).unwrap() {
            Removal::Disconnected(report) => {
                assert_eq!(report.removed, 0);
                assert_eq!(report.components, vec![vec![1], vec![2], vec![3]]);
            }
            Removal::Connected(_) => panic!("star without hub is disconnected"),
        }
        assert_eq!(
            g.remove_node(NodeId(7)),
            Err(TopologyError::UnknownNode(7))
        );
    }

    #[test]
    fn petersen_survives_any_single_removal() {
        let g = build_petersen();
        for v in 0..10 {
            let Removal::Connected(rest) = g.remove_node(NodeId(v)).unwrap() else {
                panic!("removing {v} disconnected petersen");
            };
            assert_eq!(rest.node_count(), 9);
            assert_eq!(rest.edge_count(), 12);
            assert_eq!(rest.components().len(), 1);
        }
    }

    #[test]
    fn construction_rejects_bad_edges() {
        assert_eq!(
            Graph::from_edges(3, &[(0, 0)]),
            Err(TopologyError::SelfLoop(0))
        );
        assert_eq!(
            Graph::from_edges(3, &[(0, 1), (1, 0), (1, 2)]),
            Err(TopologyError::DuplicateEdge(0, 1))
        );
        assert_eq!(
            Graph::from_edges(3, &[(0, 1)]),
            Err(TopologyError::Disconnected { components: 2 })
        );
        assert!(matches!(
            Graph::from_edges(2, &[(0, 5)]),
            Err(TopologyError::NodeOutOfRange { node: 5, n: 2 })
        ));
    }

    #[test]
    fn edge_list_text() {
        let g = build_ring(4).unwrap();
        let text = g.to_edge_list();
        assert_eq!(text, "0 1\n0 3\n1 2\n2 3\n");
        assert_eq!(Graph::parse_edge_list(&text).unwrap(), g);
        assert!(matches!(
            Graph::parse_edge_list("0 1\n1 x\n"),
            Err(TopologyError::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn induced_subgraph_keeps_labels() {
        let g = build_ring(6).unwrap();
        let Removal::Connected(g) = g.remove_node(NodeId(2)).unwrap() else {
            unreachable!()
        };
        let h = g.induced(&[0, 1]).unwrap();
        assert_eq!(h.labels(), &[0, 1]);
        assert_eq!(h.edge_count(), 1);
    }
}
