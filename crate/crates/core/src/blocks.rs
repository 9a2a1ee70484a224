//! Sticks, 2-blocks and 4-blocks measured on a graphical construction, and
//! the oriented percolation field they induce along a chain.
//!
//! Stick windows are half-open `(start, end]`, matching
//! [`GraphicalConstruction::rings_in`].

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::bounds;
use crate::dynamics::{
    replay_snapshots, sample_graphical, AllOnesRule, Configuration, GraphicalConstruction, ModelParams,
};
use crate::graph::{check_chain, Graph};
use crate::percolation::{level_sites, StripField};
use crate::rng::{StreamKey, LANE_INIT};
use crate::stats::{correlation, Estimate};
use crate::{Error, Result};

/// `{base} x ((level-1) L, level L]`, with `level >= 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stick {
    pub base: usize,
    pub level: usize,
    pub l: f64,
}

impl Stick {
    pub fn window(&self) -> (f64, f64) {
        ((self.level as f64 - 1.0) * self.l, self.level as f64 * self.l)
    }
}

fn check_window(gc: &GraphicalConstruction, start: f64, end: f64) -> Result<()> {
    if start >= 0.0 && end > start && end <= gc.horizon() * (1.0 + 1e-12) {
        Ok(())
    } else {
        Err(Error::WindowOutOfRange { start, end, horizon: gc.horizon() })
    }
}

/// Bit mask of `a` over the sorted closed neighbourhood of `x`.
fn mark_mask(g: &Graph, x: usize, a: &[usize]) -> Result<u64> {
    let closed = g.closed_neighbourhood(x)?;
    a.iter().try_fold(0u64, |m, v| match closed.binary_search(v) {
        Ok(i) => Ok(m | 1 << i),
        Err(_) => Err(Error::InvalidParameter(format!("vertex {v} is not in the closed neighbourhood of {x}"))),
    })
}

fn good_in(gc: &GraphicalConstruction, x: usize, start: f64, end: f64, mask: u64) -> bool {
    gc.rings_in(x, start, end).iter().all(|r| r.marks & mask == 0)
}

fn rang_in(gc: &GraphicalConstruction, x: usize, start: f64, end: f64) -> bool {
    !gc.rings_in(x, start, end).is_empty()
}

/// Whether every ring of `x` in `(start, end]` proposed 0 on all of `a`.
pub fn window_is_good(g: &Graph, gc: &GraphicalConstruction, x: usize, start: f64, end: f64, a: &[usize]) -> Result<bool> {
    check_window(gc, start, end)?;
    Ok(good_in(gc, x, start, end, mark_mask(g, x, a)?))
}

pub fn stick_is_good(g: &Graph, gc: &GraphicalConstruction, stick: &Stick, a: &[usize]) -> Result<bool> {
    let (s, e) = stick.window();
    window_is_good(g, gc, stick.base, s, e, a)
}

/// Vertices whose sticks a block's niceness depends on, each with the block
/// sites it is adjacent to (outside vertices only).
fn outside_neighbours(g: &Graph, sites: &[usize]) -> Vec<(usize, Vec<usize>)> {
    let mut out: Vec<(usize, Vec<usize>)> = Vec::new();
    for &s in sites {
        for &w in g.neighbours(s) {
            if sites.contains(&w) {
                continue;
            }
            match out.iter_mut().find(|(v, _)| *v == w) {
                Some((_, a)) => a.push(s),
                None => out.push((w, vec![s])),
            }
        }
    }
    out
}

/// The pair `{x, y}` over `(start, end]` is nice: both sticks ring and are
/// `{x, y}`-good, and each outside neighbour `w` is `(N(w) ∩ {x, y})`-good.
pub fn block2_nice_in(g: &Graph, gc: &GraphicalConstruction, x: usize, y: usize, start: f64, end: f64) -> Result<bool> {
    check_window(gc, start, end)?;
    if !g.adjacent(x, y) {
        return Err(Error::InvalidParameter(format!("block sites {x} and {y} are not adjacent")));
    }
    let pair = [x, y];
    for &s in &pair {
        if !rang_in(gc, s, start, end) || !good_in(gc, s, start, end, mark_mask(g, s, &pair)?) {
            return Ok(false);
        }
    }
    for (w, a) in outside_neighbours(g, &pair) {
        if !good_in(gc, w, start, end, mark_mask(g, w, &a)?) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Level-`level` 2-block on the edge `x ~ y`.
pub fn block2_is_nice(g: &Graph, gc: &GraphicalConstruction, x: usize, y: usize, level: usize, l: f64) -> Result<bool> {
    let (s, e) = Stick { base: x, level, l }.window();
    block2_nice_in(g, gc, x, y, s, e)
}

/// Time-increasing rings at `seq[0]`, then `seq[1]`, ... within
/// `(start, end]`; checked greedily on earliest rings.
pub fn increasing_rings(gc: &GraphicalConstruction, seq: &[usize], start: f64, end: f64) -> bool {
    let mut t = start;
    for &x in seq {
        match gc.rings_in(x, t, end).first() {
            Some(r) => t = r.time,
            None => return false,
        }
    }
    true
}

/// The 4-block on consecutive chain sites `s` over `(start, end]`.
pub fn block4_nice_in(g: &Graph, gc: &GraphicalConstruction, s: [usize; 4], start: f64, end: f64) -> Result<bool> {
    check_window(gc, start, end)?;
    for w in s.windows(2) {
        if !g.adjacent(w[0], w[1]) {
            return Err(Error::InvalidParameter(format!("block sites {} and {} are not adjacent", w[0], w[1])));
        }
    }
    if !s.iter().all(|&x| rang_in(gc, x, start, end)) {
        return Ok(false);
    }
    let sets: [&[usize]; 4] = [&[s[0], s[1]], &[s[0], s[1], s[2]], &[s[1], s[2], s[3]], &[s[2], s[3]]];
    for (x, a) in s.iter().zip(sets) {
        if !good_in(gc, *x, start, end, mark_mask(g, *x, a)?) {
            return Ok(false);
        }
    }
    for (w, a) in outside_neighbours(g, &s) {
        if !good_in(gc, w, start, end, mark_mask(g, w, &a)?) {
            return Ok(false);
        }
    }
    Ok(increasing_rings(gc, &[s[0], s[1], s[2]], start, end) && increasing_rings(gc, &[s[3], s[2], s[1]], start, end))
}

/// Outcome of checking a deterministic block claim on one block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Check {
    /// Hypotheses not met; nothing asserted.
    Vacuous,
    Pass,
    Counterexample,
}

/// A nice 2-block with a zero at its bottom has two zeros at its top.
pub fn block2_proposition_check(nice: bool, bottom: [u8; 2], top: [u8; 2]) -> Check {
    if !nice || !bottom.contains(&0) {
        Check::Vacuous
    } else if top == [0, 0] {
        Check::Pass
    } else {
        Check::Counterexample
    }
}

/// A nice 4-block with a zero at an extreme site at its bottom has zeros at
/// both extreme sites at its top.
pub fn block4_propagation_check(nice: bool, bottom: [u8; 4], top: [u8; 4]) -> Check {
    if !nice || (bottom[0] != 0 && bottom[3] != 0) {
        Check::Vacuous
    } else if top[0] == 0 && top[3] == 0 {
        Check::Pass
    } else {
        Check::Counterexample
    }
}

/// `{z : z ~ x or z ~ y}` for each block is disjoint.
pub fn separated(g: &Graph, a: &[usize], b: &[usize]) -> bool {
    let na = outside_and_inside(g, a);
    let nb = outside_and_inside(g, b);
    na.iter().all(|z| !nb.contains(z))
}

fn outside_and_inside(g: &Graph, sites: &[usize]) -> Vec<usize> {
    let mut v: Vec<usize> = sites.iter().flat_map(|&s| g.neighbours(s).iter().copied()).collect();
    v.sort_unstable();
    v.dedup();
    v
}

/// Sticks a block's niceness depends on: the block sites and all their
/// neighbours.
fn footprint(g: &Graph, sites: &[usize]) -> Vec<usize> {
    let mut v: Vec<usize> = sites.iter().flat_map(|&s| g.closed(s).iter().copied()).collect();
    v.sort_unstable();
    v.dedup();
    v
}

/// Greedily picks windows of `size` consecutive vertices along each chain
/// whose footprints are pairwise disjoint, so that their niceness
/// indicators are independent.
pub fn independent_blocks(g: &Graph, chains: &[Vec<usize>], size: usize) -> Result<Vec<Vec<usize>>> {
    let mut used = vec![false; g.num_vertices()];
    let mut out = Vec::new();
    for chain in chains {
        check_chain(g, chain).map_err(Error::NotAChain)?;
        for w in chain.windows(size) {
            let fp = footprint(g, w);
            if fp.iter().all(|&v| !used[v]) {
                fp.iter().for_each(|&v| used[v] = true);
                out.push(w.to_vec());
            }
        }
    }
    if out.is_empty() {
        return Err(Error::InsufficientData(format!("no chain has {size} consecutive vertices")));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockFlavor {
    TwoBlock,
    FourBlock,
}

impl fmt::Display for BlockFlavor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BlockFlavor::TwoBlock => "two_block",
            BlockFlavor::FourBlock => "four_block",
        })
    }
}

impl FromStr for BlockFlavor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "two_block" | "two-block" | "2" => Ok(BlockFlavor::TwoBlock),
            "four_block" | "four-block" | "4" => Ok(BlockFlavor::FourBlock),
            other => Err(Error::Parse(format!("unknown block flavor `{other}`"))),
        }
    }
}

impl BlockFlavor {
    pub fn size(self) -> usize {
        match self {
            BlockFlavor::TwoBlock => 2,
            BlockFlavor::FourBlock => 4,
        }
    }
}

/// Space-time tiling of a chain by blocks, indexed by strip coordinates.
///
/// Cell `(m, n)` with `m + n` even covers the window `(nL, (n+1)L]`. For
/// 2-blocks it sits on chain indices `{m, m+1}`; for 4-blocks on
/// `3m..=3m+3`, so that a cell's extreme sites are shared with its two
/// descendants `(m - 1, n + 1)` and `(m + 1, n + 1)`. Cells that would run
/// off the chain are dropped, which leaves the strip `0 <= m <= 2N`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockGrid {
    chain: Vec<usize>,
    flavor: BlockFlavor,
    l: f64,
    width: usize,
}

impl BlockGrid {
    pub fn new(g: &Graph, chain: &[usize], flavor: BlockFlavor, l: f64) -> Result<Self> {
        check_chain(g, chain).map_err(Error::NotAChain)?;
        if !(l > 0.0) {
            return Err(Error::InvalidParameter(format!("window length L = {l} must be positive")));
        }
        let len = chain.len();
        let width = match flavor {
            BlockFlavor::TwoBlock => len.saturating_sub(2) / 2,
            BlockFlavor::FourBlock => len.saturating_sub(4) / 6,
        };
        if width == 0 {
            let need = if flavor == BlockFlavor::TwoBlock { 4 } else { 10 };
            return Err(Error::InvalidParameter(format!("chain of length {len} too short; {flavor} grid needs {need}")));
        }
        Ok(Self { chain: chain.to_vec(), flavor, l, width })
    }

    /// Strip width parameter `N`.
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn flavor(&self) -> BlockFlavor {
        self.flavor
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    /// Chain indices covered by cell `m`.
    pub fn cell_indices(&self, m: usize) -> std::ops::RangeInclusive<usize> {
        match self.flavor {
            BlockFlavor::TwoBlock => m..=m + 1,
            BlockFlavor::FourBlock => 3 * m..=3 * m + 3,
        }
    }

    pub fn cell_sites(&self, m: usize) -> &[usize] {
        &self.chain[self.cell_indices(m)]
    }

    /// Strip coordinates of the cells on level `n`.
    pub fn cells(&self, n: usize) -> impl Iterator<Item = usize> {
        level_sites(self.width, n)
    }

    pub fn window(&self, n: usize) -> (f64, f64) {
        (n as f64 * self.l, (n + 1) as f64 * self.l)
    }

    /// Same-level neighbours of cell `m`.
    pub fn neighbours(&self, m: usize) -> Vec<usize> {
        [m.checked_sub(2), Some(m + 2)].into_iter().flatten().filter(|&k| k <= 2 * self.width).collect()
    }

    /// Next-level cells sharing a site with cell `m`.
    pub fn descendants(&self, m: usize) -> Vec<usize> {
        [m.checked_sub(1), Some(m + 1)].into_iter().flatten().filter(|&k| k <= 2 * self.width).collect()
    }

    pub fn is_nice(&self, g: &Graph, gc: &GraphicalConstruction, m: usize, n: usize) -> Result<bool> {
        let (s, e) = self.window(n);
        let sites = self.cell_sites(m);
        match self.flavor {
            BlockFlavor::TwoBlock => block2_nice_in(g, gc, sites[0], sites[1], s, e),
            BlockFlavor::FourBlock => block4_nice_in(g, gc, [sites[0], sites[1], sites[2], sites[3]], s, e),
        }
    }

    /// Checks the block claim of cell `(m, n)` against configurations at
    /// the bottom and top of its window.
    pub fn check(&self, nice: bool, m: usize, bottom: &Configuration, top: &Configuration) -> Check {
        let bits = |c: &Configuration| self.cell_sites(m).iter().map(|&x| c.get(x)).collect::<Vec<u8>>();
        let (b, t) = (bits(bottom), bits(top));
        match self.flavor {
            BlockFlavor::TwoBlock => block2_proposition_check(nice, [b[0], b[1]], [t[0], t[1]]),
            BlockFlavor::FourBlock => block4_propagation_check(nice, [b[0], b[1], b[2], b[3]], [t[0], t[1], t[2], t[3]]),
        }
    }
}

/// The percolation field of nice cells: both bonds leaving a cell are open
/// iff the cell is nice.
pub fn chain_to_percolation(grid: &BlockGrid, g: &Graph, gc: &GraphicalConstruction, levels: usize) -> Result<StripField> {
    let needed = levels as f64 * grid.l;
    if needed > gc.horizon() * (1.0 + 1e-12) {
        return Err(Error::WindowOutOfRange { start: 0.0, end: needed, horizon: gc.horizon() });
    }
    let nice: Vec<Vec<bool>> = (0..levels)
        .map(|n| grid.cells(n).map(|m| grid.is_nice(g, gc, m, n)).collect::<Result<_>>())
        .collect::<Result<_>>()?;
    StripField::from_fn(grid.width, levels, |m, n, _| nice[n][m / 2])
}

/// Counts from scanning every grid cell for the deterministic block claim.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ClaimScan {
    pub cells: u64,
    pub nice: u64,
    /// Nice cells whose hypothesis held (a zero where required at the bottom).
    pub checked: u64,
    pub counterexamples: u64,
}

impl ClaimScan {
    fn merge(self, o: ClaimScan) -> ClaimScan {
        ClaimScan {
            cells: self.cells + o.cells,
            nice: self.nice + o.nice,
            checked: self.checked + o.checked,
            counterexamples: self.counterexamples + o.counterexamples,
        }
    }
}

/// Replays `replicas` independent realisations of `levels` windows from
/// product-Bernoulli starts and checks every cell of the grid.
pub fn scan_block_claims(
    g: &Graph,
    grid: &BlockGrid,
    params: ModelParams,
    rule: AllOnesRule,
    levels: usize,
    replicas: usize,
    seed: u64,
) -> Result<ClaimScan> {
    let per: Vec<ClaimScan> = (0..replicas as u64)
        .into_par_iter()
        .map(|r| {
            let key = StreamKey::new(seed, r);
            let gc = sample_graphical(g, params, levels as f64 * grid.l, key)?;
            let c0 = Configuration::random(g.num_vertices(), params, &mut key.lane(LANE_INIT));
            let times: Vec<f64> = (0..=levels).map(|n| n as f64 * grid.l).collect();
            let snaps = replay_snapshots(g, &c0, &gc, rule, &times)?;
            let mut scan = ClaimScan::default();
            for n in 0..levels {
                for m in grid.cells(n) {
                    let nice = grid.is_nice(g, &gc, m, n)?;
                    scan.cells += 1;
                    scan.nice += u64::from(nice);
                    match grid.check(nice, m, &snaps[n], &snaps[n + 1]) {
                        Check::Vacuous => {}
                        Check::Pass => scan.checked += 1,
                        Check::Counterexample => {
                            scan.checked += 1;
                            scan.counterexamples += 1;
                        }
                    }
                }
            }
            Ok(scan)
        })
        .collect::<Result<_>>()?;
    Ok(per.into_iter().fold(ClaimScan::default(), ClaimScan::merge))
}

/// Which event a rate experiment counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RateKind {
    /// `A`-good sticks with `A` the base and its first `a - 1` neighbours.
    Stick { a: usize },
    Block2,
    Block4,
}

impl fmt::Display for RateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RateKind::Stick { a } => write!(f, "stick_a{a}"),
            RateKind::Block2 => f.write_str("two_block"),
            RateKind::Block4 => f.write_str("four_block"),
        }
    }
}

/// An empirical rate next to its analytic lower bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockStats {
    pub flavor: String,
    pub p: f64,
    pub d: usize,
    pub l: f64,
    pub blocks_sampled: u64,
    pub nice: u64,
    pub nice_rate: f64,
    pub stderr: f64,
    pub analytic_lb: f64,
}

impl BlockStats {
    /// `nice_rate >= analytic_lb - k * stderr`.
    pub fn respects_bound(&self, k: f64) -> bool {
        self.nice_rate >= self.analytic_lb - k * self.stderr
    }
}

/// Samples at least `n_samples` independent indicators of `kind` on the
/// given independent blocks (see [`independent_blocks`]), one per block and
/// level of `levels_per_replica`-window realisations. `d` is the degree used
/// for the analytic bound.
#[allow(clippy::too_many_arguments)]
pub fn sample_rate(
    g: &Graph,
    blocks: &[Vec<usize>],
    kind: RateKind,
    params: ModelParams,
    d: usize,
    l: f64,
    n_samples: u64,
    seed: u64,
) -> Result<BlockStats> {
    let levels = 64usize;
    let per_replica = (blocks.len() * levels) as u64;
    let replicas = n_samples.div_ceil(per_replica);
    let counts: Vec<(u64, u64)> = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let gc = sample_graphical(g, params, levels as f64 * l, StreamKey::new(seed, r))?;
            let mut hits = 0u64;
            for n in 0..levels {
                let (s, e) = (n as f64 * l, (n + 1) as f64 * l);
                for b in blocks {
                    let ok = match kind {
                        RateKind::Stick { a } => {
                            let x = b[0];
                            let mut set = vec![x];
                            set.extend(g.neighbours(x).iter().take(a - 1));
                            window_is_good(g, &gc, x, s, e, &set)?
                        }
                        RateKind::Block2 => block2_nice_in(g, &gc, b[0], b[1], s, e)?,
                        RateKind::Block4 => block4_nice_in(g, &gc, [b[0], b[1], b[2], b[3]], s, e)?,
                    };
                    hits += u64::from(ok);
                }
            }
            Ok((hits, per_replica))
        })
        .collect::<Result<_>>()?;
    let (hits, total) = counts.into_iter().fold((0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    let est = Estimate::bernoulli(hits, total)?;
    let p = params.p();
    let analytic_lb = match kind {
        RateKind::Stick { a } => bounds::stick_good_lb(l, params.q(), a as u32),
        RateKind::Block2 => bounds::block2_nice_lb(l, p, d),
        RateKind::Block4 => bounds::theta_4block(l, p, d).clamp(0.0, 1.0),
    };
    Ok(BlockStats {
        flavor: kind.to_string(),
        p,
        d,
        l,
        blocks_sampled: total,
        nice: hits,
        nice_rate: est.mean,
        stderr: est.stderr,
        analytic_lb,
    })
}

/// Pairwise correlation of niceness indicators of two blocks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationReport {
    pub pairs: u64,
    pub correlation: f64,
    pub stderr: f64,
    pub rate_a: f64,
    pub rate_b: f64,
}

impl CorrelationReport {
    pub fn within(&self, k: f64) -> bool {
        self.correlation.abs() <= k * self.stderr
    }
}

/// Correlation between the niceness of cell `(m, n)` and that of each cell
/// in `partners` (given as `(dm, dn)` offsets), over `n_pairs` pairs
/// collected across the whole grid.
pub fn grid_correlation(
    g: &Graph,
    grid: &BlockGrid,
    params: ModelParams,
    offset: (isize, usize),
    n_pairs: u64,
    seed: u64,
) -> Result<CorrelationReport> {
    let levels = 32usize;
    let run = |r: u64| -> Result<(Vec<f64>, Vec<f64>)> {
        let gc = sample_graphical(g, params, (levels + offset.1) as f64 * grid.l, StreamKey::new(seed, r))?;
        let (mut xs, mut ys) = (Vec::new(), Vec::new());
        for n in 0..levels {
            for m in grid.cells(n) {
                let m2 = m as isize + offset.0;
                let n2 = n + offset.1;
                if m2 < 0 || m2 as usize > 2 * grid.width || (m2 as usize + n2) % 2 != 0 {
                    continue;
                }
                xs.push(f64::from(u8::from(grid.is_nice(g, &gc, m, n)?)));
                ys.push(f64::from(u8::from(grid.is_nice(g, &gc, m2 as usize, n2)?)));
            }
        }
        Ok((xs, ys))
    };
    let (probe_x, _) = run(0)?;
    if probe_x.is_empty() {
        return Err(Error::InsufficientData(format!("grid of width {} has no pairs at offset {offset:?}", grid.width)));
    }
    let replicas = n_pairs.div_ceil(probe_x.len() as u64);
    let parts: Vec<(Vec<f64>, Vec<f64>)> = (0..replicas).into_par_iter().map(run).collect::<Result<_>>()?;
    let (xs, ys): (Vec<f64>, Vec<f64>) =
        parts.into_iter().fold((Vec::new(), Vec::new()), |(mut a, mut b), (x, y)| {
            a.extend(x);
            b.extend(y);
            (a, b)
        });
    let n = xs.len();
    let (corr, stderr) = correlation(&xs, &ys)
        .ok_or_else(|| Error::InsufficientData("constant niceness indicators".into()))?;
    Ok(CorrelationReport {
        pairs: n as u64,
        correlation: corr,
        stderr,
        rate_a: xs.iter().sum::<f64>() / n as f64,
        rate_b: ys.iter().sum::<f64>() / n as f64,
    })
}

pub const BLOCK_CSV_HEADER: &str = "flavor,p,d,L,blocks_sampled,nice_rate,stderr,analytic_lb";

pub fn write_block_csv<W: Write>(mut w: W, rows: &[BlockStats]) -> Result<()> {
    writeln!(w, "{BLOCK_CSV_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            r.flavor, r.p, r.d, r.l, r.blocks_sampled, r.nice_rate, r.stderr, r.analytic_lb
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::Ring;
    use crate::graph::{generate, Family};

    fn cycle(n: usize) -> Graph {
        generate(Family::Cycle(n), None).unwrap()
    }

    /// Rings given as `(vertex, time, marks)`.
    fn gc_from(g: &Graph, horizon: f64, rings: &[(usize, f64, u64)]) -> GraphicalConstruction {
        let mut lists = vec![Vec::new(); g.num_vertices()];
        for &(x, time, marks) in rings {
            lists[x].push(Ring { time, marks });
        }
        GraphicalConstruction::from_rings(g, horizon, lists).unwrap()
    }

    #[test]
    fn stick_goodness() {
        let g = cycle(6);
        let empty = gc_from(&g, 2.0, &[]);
        let s = Stick { base: 1, level: 1, l: 1.0 };
        assert!(stick_is_good(&g, &empty, &s, &[0, 1, 2]).unwrap());
        // closed(1) = [0, 1, 2]; mark bit 2 is vertex 2
        let one = gc_from(&g, 2.0, &[(1, 0.5, 0b100)]);
        assert!(!stick_is_good(&g, &one, &s, &[2]).unwrap());
        assert!(stick_is_good(&g, &one, &s, &[0, 1]).unwrap());
        assert!(stick_is_good(&g, &one, &Stick { base: 1, level: 2, l: 1.0 }, &[2]).unwrap());
        assert!(stick_is_good(&g, &one, &Stick { base: 1, level: 3, l: 1.0 }, &[2]).is_err());
        assert!(stick_is_good(&g, &one, &s, &[4]).is_err());
    }

    #[test]
    fn block2_needs_rings() {
        let g = cycle(6);
        let empty = gc_from(&g, 1.0, &[]);
        assert!(!block2_is_nice(&g, &empty, 1, 2, 1, 1.0).unwrap());
        let both = gc_from(&g, 1.0, &[(1, 0.2, 0), (2, 0.4, 0)]);
        assert!(block2_is_nice(&g, &both, 1, 2, 1, 1.0).unwrap());
        // outside neighbour 0 proposing a one on vertex 1 spoils it
        let spoiled = gc_from(&g, 1.0, &[(1, 0.2, 0), (2, 0.4, 0), (0, 0.6, 0b10)]);
        assert!(!block2_is_nice(&g, &spoiled, 1, 2, 1, 1.0).unwrap());
        // ... but a one proposed on vertex 5 does not
        let harmless = gc_from(&g, 1.0, &[(1, 0.2, 0), (2, 0.4, 0), (0, 0.6, 0b100)]);
        assert!(block2_is_nice(&g, &harmless, 1, 2, 1, 1.0).unwrap());
    }

    #[test]
    fn block4_conditions() {
        let g = cycle(10);
        let s = [2, 3, 4, 5];
        let only_first = gc_from(&g, 3.0, &[(2, 0.5, 0)]);
        assert!(!block4_nice_in(&g, &only_first, s, 0.0, 3.0).unwrap());
        // extremes ring in [0, 1], middles in both (1, 2] and (2, 3]
        let sufficient = gc_from(
            &g,
            3.0,
            &[(2, 0.5, 0), (5, 0.7, 0), (3, 1.5, 0), (3, 2.5, 0), (4, 1.2, 0), (4, 2.2, 0)],
        );
        assert!(block4_nice_in(&g, &sufficient, s, 0.0, 3.0).unwrap());
        // order 4 before 3 only: no 2 -> 3 -> 4 sequence
        let wrong_order = gc_from(&g, 3.0, &[(2, 0.5, 0), (5, 0.7, 0), (4, 1.0, 0), (3, 2.0, 0)]);
        assert!(!block4_nice_in(&g, &wrong_order, s, 0.0, 3.0).unwrap());
    }

    #[test]
    fn claim_checks() {
        assert_eq!(block2_proposition_check(false, [0, 1], [1, 1]), Check::Vacuous);
        assert_eq!(block2_proposition_check(true, [1, 1], [1, 1]), Check::Vacuous);
        assert_eq!(block2_proposition_check(true, [0, 1], [0, 0]), Check::Pass);
        assert_eq!(block2_proposition_check(true, [0, 1], [0, 1]), Check::Counterexample);
        assert_eq!(block4_propagation_check(true, [1, 0, 1, 1], [1, 1, 1, 1]), Check::Vacuous);
        assert_eq!(block4_propagation_check(true, [1, 1, 1, 0], [0, 1, 1, 0]), Check::Pass);
    }

    #[test]
    fn grid_layout() {
        let g = cycle(14);
        let chain: Vec<usize> = (0..12).collect();
        let two = BlockGrid::new(&g, &chain, BlockFlavor::TwoBlock, 1.0).unwrap();
        assert_eq!(two.width(), 5);
        assert_eq!(two.cell_sites(3), &[3, 4]);
        assert_eq!(two.cells(1).collect::<Vec<_>>(), vec![1, 3, 5, 7, 9]);
        assert_eq!(two.descendants(0), vec![1]);
        assert_eq!(two.neighbours(4), vec![2, 6]);
        let four = BlockGrid::new(&g, &chain, BlockFlavor::FourBlock, 1.0).unwrap();
        assert_eq!(four.width(), 1);
        assert_eq!(four.cell_sites(0), &[0, 1, 2, 3]);
        assert_eq!(four.cell_sites(1), &[3, 4, 5, 6]);
        assert_eq!(four.cell_sites(2), &[6, 7, 8, 9]);
        assert!(BlockGrid::new(&g, &chain[..9], BlockFlavor::FourBlock, 1.0).is_err());
    }

    #[test]
    fn all_nice_gives_open_field() {
        let g = cycle(8);
        let chain: Vec<usize> = (0..6).collect();
        let grid = BlockGrid::new(&g, &chain, BlockFlavor::TwoBlock, 1.0).unwrap();
        // every vertex rings once per window with all-zero marks
        let rings: Vec<(usize, f64, u64)> =
            (0..8).flat_map(|x| (0..3).map(move |n| (x, n as f64 + 0.1 + 0.01 * x as f64, 0))).collect();
        let gc = gc_from(&g, 3.0, &rings);
        let f = chain_to_percolation(&grid, &g, &gc, 3).unwrap();
        assert_eq!(f.open_fraction(), 1.0);
        assert!(chain_to_percolation(&grid, &g, &gc, 4).is_err());
    }

    #[test]
    fn separated_blocks_on_a_cycle() {
        let g = cycle(12);
        assert!(separated(&g, &[0, 1], &[4, 5]));
        assert!(!separated(&g, &[0, 1], &[3, 4]));
        let chain: Vec<usize> = (0..10).collect();
        let b = independent_blocks(&g, &[chain], 2).unwrap();
        assert_eq!(b, vec![vec![0, 1], vec![4, 5], vec![8, 9]]);
        for i in 0..b.len() {
            for j in i + 1..b.len() {
                assert!(separated(&g, &b[i], &b[j]));
            }
        }
    }

    #[test]
    fn small_claim_scan_has_no_counterexamples() {
        let g = cycle(12);
        let chain: Vec<usize> = (0..10).collect();
        let p = ModelParams::new(0.05).unwrap();
        for (flavor, l) in [(BlockFlavor::TwoBlock, bounds::hat_l(0.05, 2)), (BlockFlavor::FourBlock, bounds::tilde_l(0.05, 2))] {
            let grid = BlockGrid::new(&g, &chain, flavor, l).unwrap();
            let s = scan_block_claims(&g, &grid, p, AllOnesRule::RingAnywhere, 20, 4, 1).unwrap();
            assert!(s.checked > 0, "{flavor}: {s:?}");
            assert_eq!(s.counterexamples, 0);
        }
    }
}
