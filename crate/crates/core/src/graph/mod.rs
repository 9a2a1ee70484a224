//! Finite simple connected graphs.

mod chain;
mod io;

pub use chain::{
    chain_cover, check_chain, is_chain, longest_chain, ChainCover, ChainPath, ChainSearch,
    ChainViolation, SearchMode, DEFAULT_CHAIN_BUDGET,
};
pub use io::{parse_edge_list, write_edge_list, GraphSpec};

use std::collections::VecDeque;

use rand::seq::SliceRandom;

use crate::{Error, Result};

/// A finite, simple, connected, undirected graph.
///
/// Adjacency lists are sorted; closed neighbourhoods (`{x}` together with the
/// neighbours of `x`) are cached in sorted order because every update of the
/// process acts on one of them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adjacency: Vec<Vec<usize>>,
    closed: Vec<Vec<usize>>,
    max_degree: usize,
}

impl Graph {
    /// Builds and validates a graph from an edge list.
    pub fn from_edges(num_vertices: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if num_vertices == 0 {
            return Err(Error::EmptyGraph);
        }
        let mut adjacency = vec![Vec::new(); num_vertices];
        for &(u, v) in edges {
            for w in [u, v] {
                if w >= num_vertices {
                    return Err(Error::VertexOutOfRange { vertex: w, num_vertices });
                }
            }
            if u == v {
                return Err(Error::SelfLoop(u));
            }
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for (u, list) in adjacency.iter_mut().enumerate() {
            list.sort_unstable();
            if let Some(w) = list.windows(2).find(|w| w[0] == w[1]) {
                return Err(Error::DuplicateEdge(u.min(w[0]), u.max(w[0])));
            }
        }
        let components = count_components(&adjacency);
        if components > 1 {
            return Err(Error::Disconnected { components });
        }
        let closed = adjacency
            .iter()
            .enumerate()
            .map(|(x, list)| {
                let mut c = list.clone();
                let pos = c.partition_point(|&y| y < x);
                c.insert(pos, x);
                c
            })
            .collect();
        let max_degree = adjacency.iter().map(Vec::len).max().unwrap_or(0);
        Ok(Self { adjacency, closed, max_degree })
    }

    pub fn num_vertices(&self) -> usize {
        self.adjacency.len()
    }

    pub fn num_edges(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn degree(&self, x: usize) -> usize {
        self.adjacency[x].len()
    }

    /// Sorted neighbours of `x`. Panics if `x` is out of range.
    pub fn neighbours(&self, x: usize) -> &[usize] {
        &self.adjacency[x]
    }

    /// Sorted closed neighbourhood `{x} ∪ {y : y ~ x}`. Panics if `x` is out
    /// of range; see [`Graph::closed_neighbourhood`] for the checked form.
    pub fn closed(&self, x: usize) -> &[usize] {
        &self.closed[x]
    }

    pub fn closed_neighbourhood(&self, x: usize) -> Result<&[usize]> {
        self.check_vertex(x)?;
        Ok(&self.closed[x])
    }

    pub fn check_vertex(&self, x: usize) -> Result<()> {
        if x < self.num_vertices() {
            Ok(())
        } else {
            Err(Error::VertexOutOfRange { vertex: x, num_vertices: self.num_vertices() })
        }
    }

    pub fn adjacent(&self, x: usize, y: usize) -> bool {
        self.adjacency[x].binary_search(&y).is_ok()
    }

    /// The common degree if every vertex has the same degree.
    pub fn regular_degree(&self) -> Option<usize> {
        let d = self.degree(0);
        self.adjacency.iter().all(|a| a.len() == d).then_some(d)
    }

    /// Edges `(u, v)` with `u < v` in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(u, list)| list.iter().filter(move |&&v| v > u).map(move |&v| (u, v)))
    }

    /// Breadth-first distances from `source`.
    pub fn distances_from(&self, source: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.num_vertices()];
        dist[source] = 0;
        let mut queue = VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            for &v in &self.adjacency[u] {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// The lexicographically smallest shortest path from `from` to `to`.
    pub fn shortest_path(&self, from: usize, to: usize) -> Vec<usize> {
        let dist_to = self.distances_from(to);
        self.walk_down(from, &dist_to)
    }

    /// Greedy descent along `dist_to`, taking the smallest admissible
    /// neighbour at each step.
    fn walk_down(&self, from: usize, dist_to: &[usize]) -> Vec<usize> {
        let mut path = vec![from];
        let mut cur = from;
        while dist_to[cur] > 0 {
            cur = *self.adjacency[cur]
                .iter()
                .find(|&&v| dist_to[v] + 1 == dist_to[cur])
                .expect("bfs distances are consistent");
            path.push(cur);
        }
        path
    }
}

fn count_components(adjacency: &[Vec<usize>]) -> usize {
    let n = adjacency.len();
    let mut seen = vec![false; n];
    let mut components = 0;
    for s in 0..n {
        if seen[s] {
            continue;
        }
        components += 1;
        seen[s] = true;
        let mut stack = vec![s];
        while let Some(u) = stack.pop() {
            for &v in &adjacency[u] {
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
    }
    components
}

/// Standard graph families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Cycle(usize),
    Path(usize),
    /// `a x b` discrete torus; vertex `(i, j)` has id `i * b + j`.
    Torus2d(usize, usize),
    Complete(usize),
    RandomRegular { n: usize, d: usize },
}

const PAIRING_ATTEMPTS: usize = 10_000;

/// Generates a graph of the given family. `seed` is used by the random
/// families only and defaults to 0.
pub fn generate(family: Family, seed: Option<u64>) -> Result<Graph> {
    match family {
        Family::Cycle(n) => {
            if n < 3 {
                return Err(Error::InfeasibleParams(format!("cycle needs N >= 3, got {n}")));
            }
            let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
            Graph::from_edges(n, &edges)
        }
        Family::Path(n) => {
            if n < 3 {
                return Err(Error::InfeasibleParams(format!("path needs N >= 3, got {n}")));
            }
            let edges: Vec<_> = (0..n - 1).map(|i| (i, i + 1)).collect();
            Graph::from_edges(n, &edges)
        }
        Family::Torus2d(a, b) => {
            if a < 3 || b < 3 {
                return Err(Error::InfeasibleParams(format!("torus sides must be >= 3, got {a}x{b}")));
            }
            let id = |i: usize, j: usize| (i % a) * b + (j % b);
            let mut edges = Vec::with_capacity(2 * a * b);
            for i in 0..a {
                for j in 0..b {
                    edges.push((id(i, j), id(i + 1, j)));
                    edges.push((id(i, j), id(i, j + 1)));
                }
            }
            Graph::from_edges(a * b, &edges)
        }
        Family::Complete(n) => {
            if n == 0 {
                return Err(Error::InfeasibleParams("complete graph needs N >= 1".into()));
            }
            let edges: Vec<_> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
            Graph::from_edges(n, &edges)
        }
        Family::RandomRegular { n, d } => random_regular(n, d, seed.unwrap_or(0)),
    }
}

/// Pairing model with rejection of loops, multi-edges and disconnected
/// outcomes.
fn random_regular(n: usize, d: usize, seed: u64) -> Result<Graph> {
    if d == 0 || d >= n || (n * d) % 2 != 0 {
        return Err(Error::InfeasibleParams(format!(
            "random regular graph needs 0 < d < N and d*N even, got N={n}, d={d}"
        )));
    }
    let mut rng = crate::rng::stream(seed, 0, crate::rng::LANE_INIT);
    let mut points: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat_n(v, d)).collect();
    'attempt: for _ in 0..PAIRING_ATTEMPTS {
        points.shuffle(&mut rng);
        let mut edges = Vec::with_capacity(points.len() / 2);
        let mut seen = std::collections::HashSet::new();
        for pair in points.chunks_exact(2) {
            let (u, v) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
            if u == v || !seen.insert((u, v)) {
                continue 'attempt;
            }
            edges.push((u, v));
        }
        match Graph::from_edges(n, &edges) {
            Ok(g) => return Ok(g),
            Err(Error::Disconnected { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::InfeasibleParams(format!(
        "no simple connected {d}-regular graph on {n} vertices found in {PAIRING_ATTEMPTS} pairings"
    )))
}
