//! Exact analysis on the full `2^N` state space.
//!
//! States are bit patterns with bit `x` equal to the fitness of vertex `x`.
//! The kernel is applied matrix-free: a state's row is generated on demand
//! from per-vertex tables of neighbourhood resampling patterns, so memory
//! stays at a few vectors of length `2^N`.

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{AllOnesRule, Configuration, ModelParams};
use crate::graph::Graph;
use crate::stats::{fit_line, LineFit};
use crate::{Error, Flavor, Result};

/// Default vertex budget (`2^20` states).
pub const DEFAULT_BUDGET: usize = 20;
const HARD_LIMIT: usize = 30;

#[derive(Debug, Clone)]
struct VertexTable {
    mask: u32,
    /// Every resampling of the closed neighbourhood, scattered to vertex
    /// bits, with its product-Bernoulli probability.
    patterns: Vec<(u32, f64)>,
}

/// The embedded transition kernel and exit rates of the model on one graph.
#[derive(Debug, Clone)]
pub struct TransitionModel {
    n: usize,
    params: ModelParams,
    rule: AllOnesRule,
    tables: Vec<VertexTable>,
}

impl TransitionModel {
    pub fn build(g: &Graph, params: ModelParams, rule: AllOnesRule) -> Result<Self> {
        Self::with_budget(g, params, rule, DEFAULT_BUDGET)
    }

    pub fn with_budget(g: &Graph, params: ModelParams, rule: AllOnesRule, budget: usize) -> Result<Self> {
        let n = g.num_vertices();
        let limit = budget.min(HARD_LIMIT);
        if n > limit {
            return Err(Error::StateSpaceTooLarge { num_vertices: n, limit });
        }
        let (p, q) = (params.p(), params.q());
        let tables = (0..n)
            .map(|v| {
                let closed = g.closed(v);
                let mask = closed.iter().fold(0u32, |m, &u| m | (1 << u));
                let patterns = (0u32..1 << closed.len())
                    .map(|m| {
                        let mut bits = 0u32;
                        let mut w = 1.0;
                        for (i, &u) in closed.iter().enumerate() {
                            if (m >> i) & 1 == 1 {
                                bits |= 1 << u;
                                w *= p;
                            } else {
                                w *= q;
                            }
                        }
                        (bits, w)
                    })
                    .collect();
                VertexTable { mask, patterns }
            })
            .collect();
        Ok(Self { n, params, rule, tables })
    }

    pub fn num_vertices(&self) -> usize {
        self.n
    }

    pub fn num_states(&self) -> usize {
        1 << self.n
    }

    pub fn params(&self) -> ModelParams {
        self.params
    }

    pub fn rule(&self) -> AllOnesRule {
        self.rule
    }

    fn full(&self) -> u32 {
        ((1u64 << self.n) - 1) as u32
    }

    /// Continuous-time exit rate: the number of zeros, or at all-ones `N`
    /// (ring anywhere) or `0` (absorbing).
    pub fn exit_rate(&self, state: u32) -> f64 {
        let zeros = (!state & self.full()).count_ones();
        match (zeros, self.rule) {
            (0, AllOnesRule::RingAnywhere) => self.n as f64,
            (0, AllOnesRule::Absorbing) => 0.0,
            (z, _) => z as f64,
        }
    }

    /// Calls `f(target, probability)` for every term of the row of `state`.
    /// Targets may repeat; self-loops are kept.
    #[inline]
    pub fn for_each_transition(&self, state: u32, mut f: impl FnMut(u32, f64)) {
        let zeros = !state & self.full();
        let choices = match (zeros, self.rule) {
            (0, AllOnesRule::Absorbing) => return f(state, 1.0),
            (0, AllOnesRule::RingAnywhere) => self.full(),
            (z, _) => z,
        };
        let share = 1.0 / choices.count_ones() as f64;
        let mut rest = choices;
        while rest != 0 {
            let v = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            let t = &self.tables[v];
            let kept = state & !t.mask;
            for &(bits, w) in &t.patterns {
                f(kept | bits, w * share);
            }
        }
    }

    /// The row of `state` with repeated targets merged, sorted by target.
    pub fn row(&self, state: u32) -> Vec<(u32, f64)> {
        let mut m = BTreeMap::new();
        self.for_each_transition(state, |t, w| *m.entry(t).or_insert(0.0) += w);
        m.into_iter().collect()
    }

    /// `out = pi P`.
    pub fn left_apply(&self, pi: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for (s, &mass) in pi.iter().enumerate() {
            if mass != 0.0 {
                self.for_each_transition(s as u32, |t, w| out[t as usize] += mass * w);
            }
        }
    }

    /// `out = P u`.
    pub fn right_apply(&self, u: &[f64], out: &mut [f64]) {
        out.par_iter_mut().enumerate().with_min_len(1024).for_each(|(s, o)| {
            let mut acc = 0.0;
            self.for_each_transition(s as u32, |t, w| acc += w * u[t as usize]);
            *o = acc;
        });
    }

    /// `out = K u` for the uniformised kernel `K = I + (R/N)(P - I)`.
    fn uniformised_right_apply(&self, u: &[f64], out: &mut [f64]) {
        self.right_apply(u, out);
        let lambda = self.n as f64;
        out.par_iter_mut().enumerate().with_min_len(1024).for_each(|(s, o)| {
            let r = self.exit_rate(s as u32) / lambda;
            *o = u[s] + r * (*o - u[s]);
        });
    }

    /// `P^(t) u`: the `t`-step embedded kernel (integer `t`) or the
    /// continuous-time semigroup `exp(tQ)` by uniformisation.
    pub fn propagate_right(&self, u: &[f64], t: f64, flavor: Flavor) -> Result<Vec<f64>> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::InvalidParameter(format!("time t = {t} must be positive")));
        }
        let mut cur = u.to_vec();
        let mut next = vec![0.0; u.len()];
        match flavor {
            Flavor::Embedded => {
                if t.fract() != 0.0 {
                    return Err(Error::InvalidParameter(format!("embedded time t = {t} must be an integer")));
                }
                for _ in 0..t as u64 {
                    self.right_apply(&cur, &mut next);
                    std::mem::swap(&mut cur, &mut next);
                }
                Ok(cur)
            }
            Flavor::Continuous => {
                let weights = poisson_weights(self.n as f64 * t, 1e-12);
                let mut acc = vec![0.0; u.len()];
                for (k, &w) in weights.iter().enumerate() {
                    if k > 0 {
                        self.uniformised_right_apply(&cur, &mut next);
                        std::mem::swap(&mut cur, &mut next);
                    }
                    if w > 0.0 {
                        acc.iter_mut().zip(&cur).for_each(|(a, c)| *a += w * c);
                    }
                }
                Ok(acc)
            }
        }
    }

    /// Largest row-sum deviation from one (a kernel self-check).
    pub fn max_row_sum_error(&self) -> f64 {
        (0..self.num_states() as u32)
            .into_par_iter()
            .map(|s| {
                let mut sum = 0.0;
                self.for_each_transition(s, |_, w| sum += w);
                (sum - 1.0).abs()
            })
            .reduce(|| 0.0, f64::max)
    }
}

/// Poisson(`mean`) probabilities for `k = 0..K`, with `K` the first index at
/// which the remaining mass drops below `tol`. Computed in log space.
fn poisson_weights(mean: f64, tol: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut log_w = -mean;
    let mut total = 0.0;
    let mut k = 0usize;
    loop {
        let w = log_w.exp();
        out.push(w);
        total += w;
        // past the mode the remaining tail is below w * mean / (k + 1 - mean)
        if k as f64 > mean && (1.0 - total < tol || w < tol * 1e-3) {
            break;
        }
        k += 1;
        log_w += mean.ln() - (k as f64).ln();
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// Target `||pi P - pi||_1` for the embedded solve.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { tolerance: 1e-13, max_iterations: 1_000_000 }
    }
}

/// A stationary distribution over all `2^N` states.
#[derive(Debug, Clone, Serialize)]
pub struct StationaryDist {
    pub flavor: Flavor,
    pub num_vertices: usize,
    pub probs: Vec<f64>,
    /// Fixed-point residual: `||pi P - pi||_1` (embedded) or `||pi Q||_1`
    /// with `Q = R (P - I)` (continuous).
    pub residual: f64,
    pub iterations: usize,
}

pub fn stationary(tm: &TransitionModel, flavor: Flavor) -> Result<StationaryDist> {
    stationary_with(tm, flavor, SolveOptions::default())
}

pub fn stationary_with(tm: &TransitionModel, flavor: Flavor, opts: SolveOptions) -> Result<StationaryDist> {
    let ns = tm.num_states();
    let mut pi = vec![1.0 / ns as f64; ns];
    let mut next = vec![0.0; ns];
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    while iterations < opts.max_iterations {
        tm.left_apply(&pi, &mut next);
        iterations += 1;
        residual = l1_diff(&pi, &next);
        if residual < opts.tolerance {
            break;
        }
        let total: f64 = next.iter().sum();
        pi.iter_mut().zip(&next).for_each(|(a, b)| *a = b / total);
    }
    if residual >= opts.tolerance {
        return Err(Error::NotConverged { iterations, residual });
    }
    let embedded = StationaryDist { flavor: Flavor::Embedded, num_vertices: tm.n, probs: pi, residual, iterations };
    match flavor {
        Flavor::Embedded => Ok(embedded),
        Flavor::Continuous => Ok(to_continuous(tm, &embedded)),
    }
}

/// Reweights an embedded law by mean holding times `1/r(eta)`.
pub fn to_continuous(tm: &TransitionModel, emb: &StationaryDist) -> StationaryDist {
    let ns = tm.num_states();
    let mut probs: Vec<f64> = (0..ns)
        .map(|s| {
            let r = tm.exit_rate(s as u32);
            if r > 0.0 {
                emb.probs[s] / r
            } else if emb.probs[s] > 0.0 {
                f64::INFINITY
            } else {
                0.0
            }
        })
        .collect();
    if probs.iter().any(|p| p.is_infinite()) {
        // an absorbing state carrying mass holds it forever
        probs.iter_mut().for_each(|p| *p = if p.is_infinite() { 1.0 } else { 0.0 });
    }
    let total: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= total);
    let residual = generator_residual(tm, &probs);
    StationaryDist { flavor: Flavor::Continuous, num_vertices: tm.n, probs, residual, iterations: emb.iterations }
}

/// `||pi P - pi||_1` for the embedded flavour.
pub fn embedded_residual(tm: &TransitionModel, pi: &[f64]) -> f64 {
    let mut next = vec![0.0; pi.len()];
    tm.left_apply(pi, &mut next);
    l1_diff(pi, &next)
}

/// `||pi Q||_1` with `Q = R (P - I)`.
pub fn generator_residual(tm: &TransitionModel, pi: &[f64]) -> f64 {
    let flux: Vec<f64> = pi.iter().enumerate().map(|(s, p)| p * tm.exit_rate(s as u32)).collect();
    embedded_residual(tm, &flux)
}

fn l1_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

impl StationaryDist {
    pub fn num_states(&self) -> usize {
        self.probs.len()
    }

    /// Probability of the states satisfying `pred`.
    pub fn prob(&self, pred: impl Fn(u32) -> bool) -> f64 {
        self.probs.iter().enumerate().filter(|(s, _)| pred(*s as u32)).map(|(_, p)| p).sum()
    }

    pub fn marginals(&self) -> Marginals {
        let n = self.num_vertices;
        let mut vertex_ones = vec![0.0; n];
        let mut zero_count = vec![0.0; n + 1];
        for (s, &p) in self.probs.iter().enumerate() {
            let s = s as u32;
            for (x, m) in vertex_ones.iter_mut().enumerate() {
                if (s >> x) & 1 == 1 {
                    *m += p;
                }
            }
            zero_count[n - s.count_ones() as usize] += p;
        }
        // zeros_above[k] = pi(#zeros > k), summed from the top for accuracy
        let mut zeros_above = vec![0.0; n + 1];
        for k in (0..n).rev() {
            zeros_above[k] = zeros_above[k + 1] + zero_count[k + 1];
        }
        let mean_zeros = zero_count.iter().enumerate().map(|(k, p)| k as f64 * p).sum();
        Marginals { vertex_ones, zeros_above, mean_zeros }
    }

    /// `pi(eta_bar >= a)`.
    pub fn proportion_at_least(&self, a: f64) -> f64 {
        let n = self.num_vertices as f64;
        self.prob(|s| s.count_ones() as f64 >= a * n - 1e-9)
    }

    /// Writes `state_bits,probability` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "state_bits,probability")?;
        for (s, p) in self.probs.iter().enumerate() {
            let c = Configuration::from_index(self.num_vertices, s as u64);
            writeln!(w, "{c},{p}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Marginals {
    /// `pi(eta_x = 1)` per vertex.
    pub vertex_ones: Vec<f64>,
    /// `pi(#zeros > k)` for `k = 0..=N`.
    pub zeros_above: Vec<f64>,
    pub mean_zeros: f64,
}

/// Flow out of and into `A` over time `t` in stationarity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Balance {
    pub flow_out: f64,
    pub flow_in: f64,
    pub residual: f64,
}

/// Escape probabilities `u(x) = P^(t)(x, A^c)` for every state.
fn escape(tm: &TransitionModel, in_a: &[bool], t: f64, flavor: Flavor) -> Result<Vec<f64>> {
    let indicator: Vec<f64> = in_a.iter().map(|&a| if a { 0.0 } else { 1.0 }).collect();
    tm.propagate_right(&indicator, t, flavor)
}

/// Flux balance across the boundary of `A` over time `t`, using the law's
/// own flavour for `P^(t)`.
pub fn balance_residual(
    tm: &TransitionModel,
    sd: &StationaryDist,
    a: impl Fn(u32) -> bool,
    t: f64,
) -> Result<Balance> {
    let in_a: Vec<bool> = (0..tm.num_states() as u32).map(&a).collect();
    let u = escape(tm, &in_a, t, sd.flavor)?;
    let (mut flow_out, mut flow_in) = (0.0, 0.0);
    for (s, &p) in sd.probs.iter().enumerate() {
        if in_a[s] {
            flow_out += p * u[s];
        } else {
            flow_in += p * (1.0 - u[s]);
        }
    }
    Ok(Balance { flow_out, flow_in, residual: (flow_out - flow_in).abs() })
}

/// Escape/entry bound on `pi(A)`: with `c` the least escape mass from `A`
/// and `epsilon` the largest entry mass from outside, `pi(A) <= epsilon/c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EscapeEntryReport {
    /// `None` when `A` is empty.
    pub c: Option<f64>,
    pub epsilon: f64,
    /// `None` when the bound is vacuous (`A` empty or `c = 0`).
    pub bound: Option<f64>,
    #[serde(rename = "pi_A")]
    pub pi_a: f64,
    pub holds: bool,
}

pub fn escape_entry_check(
    tm: &TransitionModel,
    sd: &StationaryDist,
    a: impl Fn(u32) -> bool,
    t: f64,
) -> Result<EscapeEntryReport> {
    let in_a: Vec<bool> = (0..tm.num_states() as u32).map(&a).collect();
    let u = escape(tm, &in_a, t, sd.flavor)?;
    let mut c: Option<f64> = None;
    let mut epsilon: f64 = 0.0;
    let mut pi_a = 0.0;
    for (s, &ua) in u.iter().enumerate() {
        if in_a[s] {
            c = Some(c.map_or(ua, |m| m.min(ua)));
            pi_a += sd.probs[s];
        } else {
            epsilon = epsilon.max(1.0 - ua);
        }
    }
    let bound = c.filter(|&c| c > 0.0).map(|c| epsilon / c);
    let holds = bound.is_none_or(|b| pi_a <= b);
    Ok(EscapeEntryReport { c, epsilon, bound, pi_a, holds })
}

/// Geometric fit `pi(#zeros > k) ~ c1 exp(-c2 k)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailFit {
    pub c1: f64,
    pub c2: f64,
    pub max_k: usize,
    pub residual: f64,
    pub points: usize,
}

/// Values below this are treated as numerical noise.
pub const TAIL_FLOOR: f64 = 1e-14;

/// Least-squares fit of `ln pi(#zeros > k)` against `k` over all `k` with
/// tail mass in `[TAIL_FLOOR, 1)`.
pub fn tail_geometric_fit(sd: &StationaryDist) -> Result<TailFit> {
    let tail = sd.marginals().zeros_above;
    fit_tail(&tail)
}

pub(crate) fn fit_tail(tail: &[f64]) -> Result<TailFit> {
    let (ks, ys): (Vec<f64>, Vec<f64>) = tail
        .iter()
        .enumerate()
        .filter(|(_, &v)| (TAIL_FLOOR..1.0).contains(&v))
        .map(|(k, v)| (k as f64, v.ln()))
        .unzip();
    if ks.len() < 3 {
        return Err(Error::InsufficientData(format!("{} usable tail points, need 3", ks.len())));
    }
    let LineFit { slope, intercept, rms_residual, points } = fit_line(&ks, &ys)?;
    Ok(TailFit { c1: intercept.exp(), c2: -slope, max_k: *ks.last().unwrap() as usize, residual: rms_residual, points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate, Family};

    fn model(f: Family, p: f64) -> TransitionModel {
        let g = generate(f, None).unwrap();
        TransitionModel::build(&g, ModelParams::new(p).unwrap(), AllOnesRule::RingAnywhere).unwrap()
    }

    #[test]
    fn triangle_rows_are_product_measure() {
        let tm = model(Family::Complete(3), 0.3);
        for s in 0..7u32 {
            let row = tm.row(s);
            assert_eq!(row.len(), 8);
            for (t, w) in row {
                let ones = t.count_ones() as i32;
                assert!((w - 0.3f64.powi(ones) * 0.7f64.powi(3 - ones)).abs() < 1e-15);
            }
        }
        let sd = stationary(&tm, Flavor::Embedded).unwrap();
        for m in sd.marginals().vertex_ones {
            assert!((m - 0.3).abs() < 1e-12);
        }
    }

    #[test]
    fn rows_sum_to_one_and_respect_neighbourhoods() {
        let g = generate(Family::Cycle(6), None).unwrap();
        let tm = TransitionModel::build(&g, ModelParams::new(0.3).unwrap(), AllOnesRule::RingAnywhere).unwrap();
        assert!(tm.max_row_sum_error() < 1e-12);
        for s in 0..64u32 {
            for (t, _) in tm.row(s) {
                let diff = s ^ t;
                assert!((0..6).any(|v| {
                    let mask = g.closed(v).iter().fold(0u32, |m, &u| m | 1 << u);
                    diff & !mask == 0
                }));
            }
        }
    }

    #[test]
    fn budget_is_enforced() {
        let g = generate(Family::Cycle(21), None).unwrap();
        let err = TransitionModel::build(&g, ModelParams::new(0.3).unwrap(), AllOnesRule::RingAnywhere);
        assert!(matches!(err, Err(Error::StateSpaceTooLarge { num_vertices: 21, limit: 20 })));
    }

    #[test]
    fn both_flavours_are_fixed_points() {
        let tm = model(Family::Cycle(8), 0.3);
        let e = stationary(&tm, Flavor::Embedded).unwrap();
        let c = stationary(&tm, Flavor::Continuous).unwrap();
        assert!(e.residual < 1e-10 && c.residual < 1e-10);
        assert!((e.probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((c.probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(l1_diff(&e.probs, &c.probs) > 1e-3);
        let hi = stationary(&model(Family::Cycle(8), 0.7), Flavor::Embedded).unwrap();
        assert!(hi.marginals().vertex_ones[0] > e.marginals().vertex_ones[0]);
    }

    #[test]
    fn marginal_identities() {
        let tm = model(Family::Cycle(6), 0.4);
        let sd = stationary(&tm, Flavor::Continuous).unwrap();
        let m = sd.marginals();
        for x in 1..6 {
            assert!((m.vertex_ones[x] - m.vertex_ones[0]).abs() < 1e-10);
        }
        assert_eq!(m.zeros_above[6], 0.0);
        let by_tail: f64 = (1..=6).map(|k| k as f64 * (m.zeros_above[k - 1] - m.zeros_above[k])).sum();
        assert!((by_tail - m.mean_zeros).abs() < 1e-10);
        assert!((sd.proportion_at_least(0.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn absorbing_rule_collapses_onto_all_ones() {
        let g = generate(Family::Cycle(4), None).unwrap();
        let tm = TransitionModel::build(&g, ModelParams::new(0.5).unwrap(), AllOnesRule::Absorbing).unwrap();
        let sd = stationary(&tm, Flavor::Continuous).unwrap();
        assert!((sd.probs[15] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn balance_and_trivial_sets() {
        let tm = model(Family::Cycle(5), 0.3);
        for flavor in [Flavor::Embedded, Flavor::Continuous] {
            let sd = stationary(&tm, flavor).unwrap();
            let b = balance_residual(&tm, &sd, |s| s & 1 == 1, 1.0).unwrap();
            assert!(b.residual < 1e-8, "{flavor}: {b:?}");
            assert!(b.flow_out > 0.0);
            let all = balance_residual(&tm, &sd, |_| true, 1.0).unwrap();
            assert!(all.flow_out.abs() < 1e-12 && all.flow_in == 0.0);
            let none = balance_residual(&tm, &sd, |_| false, 1.0).unwrap();
            assert!(none.flow_out == 0.0 && none.flow_in.abs() < 1e-12);
        }
        let sd = stationary(&tm, Flavor::Embedded).unwrap();
        assert!(balance_residual(&tm, &sd, |_| true, 0.0).is_err());
        assert!(balance_residual(&tm, &sd, |_| true, 1.5).is_err());
    }

    #[test]
    fn escape_entry_bound() {
        let tm = model(Family::Cycle(5), 0.05);
        let sd = stationary(&tm, Flavor::Continuous).unwrap();
        // t = 9 hat_L(p, d) l(G) + 1 with l(cycle(5)) = 3
        let t = 9.0 * crate::bounds::hat_l(0.05, 2) * 3.0 + 1.0;
        let r = escape_entry_check(&tm, &sd, |s| s & 1 == 1, t).unwrap();
        assert!(r.holds && r.bound.unwrap() >= r.pi_a, "{r:?}");
        let empty = escape_entry_check(&tm, &sd, |_| false, 1.0).unwrap();
        assert!(empty.c.is_none() && empty.pi_a == 0.0 && empty.holds);
        // A = {some one}: entered easily from all-zeros, so the bound is loose
        let r = escape_entry_check(&tm, &sd, |s| s.count_ones() >= 1, 0.5).unwrap();
        assert!(r.holds);
    }

    #[test]
    fn tail_fit_slope_is_positive() {
        let tm = model(Family::Cycle(10), 0.75);
        let sd = stationary(&tm, Flavor::Continuous).unwrap();
        let tail = sd.marginals().zeros_above;
        assert!(tail.windows(2).all(|w| w[1] <= w[0]));
        let fit = tail_geometric_fit(&sd).unwrap();
        assert!(fit.c2 > 0.0, "{fit:?}");
        let near_one = tail_geometric_fit(&stationary(&model(Family::Cycle(10), 0.97), Flavor::Continuous).unwrap()).unwrap();
        assert!(near_one.c2 > fit.c2);
    }

    #[test]
    fn poisson_weights_sum_to_one() {
        for mean in [0.5, 5.0, 260.0, 2000.0] {
            let w = poisson_weights(mean, 1e-12);
            let total: f64 = w.iter().sum();
            assert!((total - 1.0).abs() < 1e-11, "{mean}: {total}");
        }
    }

    #[test]
    fn csv_dump() {
        let tm = model(Family::Complete(3), 0.5);
        let sd = stationary(&tm, Flavor::Embedded).unwrap();
        let mut buf = Vec::new();
        sd.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s.lines().count(), 9);
        assert!(s.lines().nth(2).unwrap().starts_with("100,"));
    }
}
