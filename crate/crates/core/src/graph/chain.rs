//! Chains: self-avoiding paths `(x_1, ..., x_n)` such that the closed
//! neighbourhoods of `x_i` and `x_j` are disjoint whenever `j - i >= 3`.
//!
//! Lengths are counted in vertices throughout.

use std::fmt;

use serde::Serialize;

use super::Graph;
use crate::{Error, Result};

/// Default number of path extensions an exact search may perform.
pub const DEFAULT_CHAIN_BUDGET: u64 = 10_000_000;

/// Why a vertex sequence is not a chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChainViolation {
    Empty,
    OutOfRange { index: usize, vertex: usize },
    Repeated { index: usize, vertex: usize },
    NotAdjacent { index: usize },
    NeighbourhoodsIntersect { i: usize, j: usize },
}

impl fmt::Display for ChainViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            ChainViolation::Empty => write!(f, "empty vertex list"),
            ChainViolation::OutOfRange { index, vertex } => {
                write!(f, "vertex {vertex} at position {index} is out of range")
            }
            ChainViolation::Repeated { index, vertex } => {
                write!(f, "vertex {vertex} repeats at position {index}")
            }
            ChainViolation::NotAdjacent { index } => {
                write!(f, "positions {} and {index} are not adjacent", index - 1)
            }
            ChainViolation::NeighbourhoodsIntersect { i, j } => {
                write!(f, "closed neighbourhoods of positions {i} and {j} intersect")
            }
        }
    }
}

/// Checks the chain property, reporting the first violation found.
///
/// For a neighbourhood violation the reported pair has the smallest `j`, and
/// for that `j` the smallest `i`.
pub fn check_chain(g: &Graph, vertices: &[usize]) -> Result<(), ChainViolation> {
    if vertices.is_empty() {
        return Err(ChainViolation::Empty);
    }
    let n = g.num_vertices();
    let mut seen = vec![false; n];
    for (index, &v) in vertices.iter().enumerate() {
        if v >= n {
            return Err(ChainViolation::OutOfRange { index, vertex: v });
        }
        if std::mem::replace(&mut seen[v], true) {
            return Err(ChainViolation::Repeated { index, vertex: v });
        }
        if index > 0 && !g.adjacent(vertices[index - 1], v) {
            return Err(ChainViolation::NotAdjacent { index });
        }
    }
    // owner[u] = smallest position i <= j - 3 whose closed neighbourhood holds u
    let mut owner = vec![usize::MAX; n];
    for j in 3..vertices.len() {
        for &u in g.closed(vertices[j - 3]) {
            if owner[u] == usize::MAX {
                owner[u] = j - 3;
            }
        }
        if let Some(i) = g.closed(vertices[j]).iter().map(|&u| owner[u]).min() {
            if i != usize::MAX {
                return Err(ChainViolation::NeighbourhoodsIntersect { i, j });
            }
        }
    }
    Ok(())
}

pub fn is_chain(g: &Graph, vertices: &[usize]) -> bool {
    check_chain(g, vertices).is_ok()
}

/// A validated chain.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct ChainPath(Vec<usize>);

impl ChainPath {
    pub fn new(g: &Graph, vertices: Vec<usize>) -> Result<Self> {
        check_chain(g, &vertices).map_err(Error::NotAChain)?;
        Ok(Self(vertices))
    }

    pub fn vertices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, v: usize) -> bool {
        self.0.contains(&v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchMode {
    Exact,
    Heuristic,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ChainSearch {
    pub chain: ChainPath,
    /// Certified lower bound on the longest (anchored) chain length; equals
    /// the maximum when `exact` is set.
    pub lower_bound: usize,
    pub exact: bool,
    pub extensions: u64,
}

/// Incremental state of a depth-first chain construction.
struct Builder<'g> {
    g: &'g Graph,
    path: Vec<usize>,
    on_path: Vec<bool>,
    /// `blocked[u]` counts positions `i <= path.len() - 3` with `u` in the
    /// closed neighbourhood of `path[i]`.
    blocked: Vec<u32>,
    extensions: u64,
    budget: u64,
}

impl<'g> Builder<'g> {
    fn new(g: &'g Graph, budget: u64) -> Self {
        let n = g.num_vertices();
        Self { g, path: Vec::new(), on_path: vec![false; n], blocked: vec![0; n], extensions: 0, budget }
    }

    fn is_free(&self, v: usize) -> bool {
        !self.on_path[v] && self.g.closed(v).iter().all(|&u| self.blocked[u] == 0)
    }

    fn can_push(&self, v: usize) -> bool {
        self.is_free(v) && self.path.last().is_none_or(|&last| self.g.adjacent(last, v))
    }

    fn push(&mut self, v: usize) -> Result<()> {
        self.extensions += 1;
        if self.extensions > self.budget {
            return Err(Error::BudgetExceeded { budget: self.budget });
        }
        let old = self.path.len();
        self.path.push(v);
        self.on_path[v] = true;
        if old >= 2 {
            for &u in self.g.closed(self.path[old - 2]) {
                self.blocked[u] += 1;
            }
        }
        Ok(())
    }

    fn pop(&mut self) {
        let v = self.path.pop().expect("pop on empty path");
        self.on_path[v] = false;
        let old = self.path.len();
        if old >= 2 {
            for &u in self.g.closed(self.path[old - 2]) {
                self.blocked[u] -= 1;
            }
        }
    }

    /// Vertices that could still appear at a later position.
    fn free_count(&self) -> usize {
        (0..self.g.num_vertices()).filter(|&v| self.is_free(v)).count()
    }
}

/// Longest chain (optionally through `anchor`).
///
/// Exact mode is a depth-first branch and bound in lexicographic order, so
/// among maximum chains the lexicographically smallest vertex sequence is
/// returned. Heuristic mode returns the longest BFS shortest path (from
/// `anchor` when given); shortest paths are always chains, so its length is
/// a certified lower bound.
pub fn longest_chain(
    g: &Graph,
    mode: SearchMode,
    anchor: Option<usize>,
    budget: u64,
) -> Result<ChainSearch> {
    if let Some(a) = anchor {
        g.check_vertex(a)?;
    }
    match mode {
        SearchMode::Exact => exact_longest(g, anchor, budget),
        SearchMode::Heuristic => Ok(heuristic_longest(g, anchor)),
    }
}

fn exact_longest(g: &Graph, anchor: Option<usize>, budget: u64) -> Result<ChainSearch> {
    fn dfs(b: &mut Builder<'_>, anchor: Option<usize>, best: &mut Vec<usize>) -> Result<()> {
        let has_anchor = anchor.is_none_or(|a| b.on_path[a]);
        if has_anchor && b.path.len() > best.len() {
            best.clone_from(&b.path);
        }
        if let Some(a) = anchor {
            if !b.on_path[a] && !b.is_free(a) {
                return Ok(());
            }
        }
        if b.path.len() + b.free_count() <= best.len() {
            return Ok(());
        }
        let g = b.g;
        let last = *b.path.last().expect("dfs starts from a vertex");
        for &v in g.neighbours(last) {
            if b.can_push(v) {
                b.push(v)?;
                dfs(b, anchor, best)?;
                b.pop();
            }
        }
        Ok(())
    }

    let mut b = Builder::new(g, budget);
    let mut best = Vec::new();
    for s in 0..g.num_vertices() {
        b.push(s)?;
        dfs(&mut b, anchor, &mut best)?;
        b.pop();
    }
    let lower_bound = best.len();
    Ok(ChainSearch { chain: ChainPath(best), lower_bound, exact: true, extensions: b.extensions })
}

fn heuristic_longest(g: &Graph, anchor: Option<usize>) -> ChainSearch {
    let sources: Vec<usize> = match anchor {
        Some(a) => vec![a],
        None => (0..g.num_vertices()).collect(),
    };
    // Smallest source attaining the largest eccentricity, then the
    // lexicographically smallest shortest path to one of its farthest targets.
    let mut best: Option<(usize, usize, Vec<usize>)> = None;
    for &s in &sources {
        let dist = g.distances_from(s);
        let ecc = *dist.iter().max().expect("graph is nonempty");
        if best.as_ref().is_none_or(|(e, _, _)| ecc > *e) {
            best = Some((ecc, s, dist));
        }
    }
    let (ecc, s, dist) = best.expect("at least one source");
    let path = dist
        .iter()
        .enumerate()
        .filter(|&(_, &d)| d == ecc)
        .map(|(t, _)| g.shortest_path(s, t))
        .min()
        .expect("farthest target exists");
    debug_assert!(is_chain(g, &path));
    ChainSearch { lower_bound: path.len(), chain: ChainPath(path), exact: false, extensions: 0 }
}

/// A set of chains whose union should be the whole vertex set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ChainCover {
    pub chains: Vec<ChainPath>,
    /// Vertices no chain of the requested length passes through (or that
    /// were not reached before the budget ran out).
    pub uncovered: Vec<usize>,
    pub complete: bool,
    pub budget_exhausted: bool,
}

impl ChainCover {
    pub fn k(&self) -> usize {
        self.chains.len()
    }
}

/// Greedy cover by chains of exactly `min_len` vertices.
///
/// Vertices are processed in increasing order; for each uncovered vertex the
/// chain through it that covers the most new vertices is taken
/// (lexicographically smallest on ties). Failure is reported through
/// `complete = false` together with the best partial cover.
pub fn chain_cover(g: &Graph, min_len: usize, budget: u64) -> Result<ChainCover> {
    if min_len == 0 {
        return Err(Error::InvalidParameter("min_len must be at least 1".into()));
    }
    let n = g.num_vertices();
    let mut covered = vec![false; n];
    let mut cover = ChainCover { chains: Vec::new(), uncovered: Vec::new(), complete: true, budget_exhausted: false };
    let mut b = Builder::new(g, budget);
    for u in 0..n {
        if covered[u] {
            continue;
        }
        if cover.budget_exhausted {
            cover.uncovered.push(u);
            continue;
        }
        match best_chain_through(&mut b, u, min_len, &covered) {
            Ok(Some(chain)) => {
                for &v in &chain {
                    covered[v] = true;
                }
                cover.chains.push(ChainPath(chain));
            }
            Ok(None) => cover.uncovered.push(u),
            Err(Error::BudgetExceeded { .. }) => {
                cover.budget_exhausted = true;
                cover.uncovered.push(u);
                // builder state is mid-search; restart clean for bookkeeping
                b = Builder::new(g, 0);
            }
            Err(e) => return Err(e),
        }
    }
    cover.uncovered.sort_unstable();
    cover.complete = cover.uncovered.is_empty();
    Ok(cover)
}

fn best_chain_through(
    b: &mut Builder<'_>,
    target: usize,
    len: usize,
    covered: &[bool],
) -> Result<Option<Vec<usize>>> {
    struct Best {
        score: usize,
        path: Option<Vec<usize>>,
    }

    fn dfs(b: &mut Builder<'_>, target: usize, len: usize, covered: &[bool], best: &mut Best) -> Result<bool> {
        if !b.on_path[target] && !b.is_free(target) {
            return Ok(false);
        }
        if b.path.len() == len {
            if b.on_path[target] {
                let score = b.path.iter().filter(|&&v| !covered[v]).count();
                if best.path.is_none() || score > best.score {
                    best.score = score;
                    best.path = Some(b.path.clone());
                }
                // a chain covering only new vertices cannot be beaten
                return Ok(score == len);
            }
            return Ok(false);
        }
        let g = b.g;
        let last = *b.path.last().expect("nonempty");
        for &v in g.neighbours(last) {
            if b.can_push(v) {
                b.push(v)?;
                let done = dfs(b, target, len, covered, best);
                b.pop();
                if done? {
                    return Ok(true);
                }
            }
        }
        Ok(false)
    }

    let dist = b.g.distances_from(target);
    let mut best = Best { score: 0, path: None };
    for s in 0..b.g.num_vertices() {
        if dist[s] >= len {
            continue;
        }
        b.push(s)?;
        let done = dfs(b, target, len, covered, &mut best);
        b.pop();
        if done? {
            break;
        }
    }
    Ok(best.path)
}
