//! Batch-means Monte Carlo estimates of stationary functionals.
//!
//! Each replica runs one long trajectory from its own streams, discards a
//! burn-in and splits the rest into equal batches. Per batch it records the
//! occupation of every zero count and of the ones at a few tracked vertices,
//! which is enough to evaluate every supported functional afterwards.
//! Continuous-time runs weight states by holding time; embedded runs count
//! the state after each step.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{check_mark_capacity, AllOnesRule, BsState, Configuration, ModelParams};
use crate::exact::{StationaryDist, TAIL_FLOOR};
use crate::graph::Graph;
use crate::rng::{StreamKey, LANE_INIT};
use crate::stats::{fit_line, Estimate, Z95};
use crate::{Error, Flavor, Result};

/// Starting configuration of every replica.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum Start {
    /// Product Bernoulli(p), drawn from the replica's init stream.
    #[default]
    Product,
    AllOnes,
    AllZeros,
    Given(Configuration),
}

#[derive(Debug, Clone, PartialEq)]
pub struct McConfig {
    pub flavor: Flavor,
    /// Time (continuous) or steps (embedded) per replica, burn-in included.
    pub budget: f64,
    /// Defaults to 10% of the budget.
    pub burn_in: Option<f64>,
    pub batches_per_replica: usize,
    pub replicas: usize,
    pub seed: u64,
    pub rule: AllOnesRule,
    pub start: Start,
}

impl McConfig {
    pub fn new(flavor: Flavor, budget: f64, replicas: usize, seed: u64) -> Self {
        Self {
            flavor,
            budget,
            burn_in: None,
            batches_per_replica: 16,
            replicas,
            seed,
            rule: AllOnesRule::RingAnywhere,
            start: Start::Product,
        }
    }

    pub fn burn_in(&self) -> f64 {
        self.burn_in.unwrap_or(0.1 * self.budget)
    }

    fn validate(&self) -> Result<()> {
        let burn = self.burn_in();
        if !(self.budget > burn && burn >= 0.0 && self.budget.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "budget {} must exceed the burn-in {burn}",
                self.budget
            )));
        }
        if self.flavor == Flavor::Embedded && (self.budget.fract() != 0.0 || burn.fract() != 0.0) {
            return Err(Error::InvalidParameter("embedded budget and burn-in are step counts".into()));
        }
        let total = self.replicas * self.batches_per_replica;
        if total < 16 {
            return Err(Error::InsufficientData(format!("{total} batches in total, need at least 16")));
        }
        Ok(())
    }
}

/// Occupation measures accumulated over one batch.
#[derive(Debug, Clone, PartialEq)]
struct Batch {
    weight: f64,
    /// Weight spent with exactly `z` zeros.
    zeros: Vec<f64>,
    /// Weight spent with a one at each tracked vertex.
    ones: Vec<f64>,
}

impl Batch {
    fn new(n: usize, tracked: usize) -> Self {
        Self { weight: 0.0, zeros: vec![0.0; n + 1], ones: vec![0.0; tracked] }
    }

    fn add(&mut self, state: &BsState, tracked: &[usize], w: f64) {
        self.weight += w;
        self.zeros[state.num_zeros()] += w;
        for (acc, &x) in self.ones.iter_mut().zip(tracked) {
            if state.get(x) == 1 {
                *acc += w;
            }
        }
    }
}

/// A stationary functional.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Functional {
    /// `pi(eta_x = 1)`; `x` must be tracked.
    Marginal(usize),
    /// `E[eta_bar]`, the expected density of ones.
    Density,
    /// `pi(eta_bar >= a)`.
    ProportionAtLeast(f64),
    /// `pi(#zeros > k)`.
    ZerosAbove(usize),
}

impl fmt::Display for Functional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Functional::Marginal(x) => write!(f, "marginal:{x}"),
            Functional::Density => f.write_str("density"),
            Functional::ProportionAtLeast(a) => write!(f, "proportion:{a}"),
            Functional::ZerosAbove(k) => write!(f, "zeros_above:{k}"),
        }
    }
}

impl FromStr for Functional {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("bad functional `{s}`"));
        let (head, arg) = s.split_once(':').map_or((s, None), |(h, a)| (h, Some(a)));
        match (head, arg) {
            ("density", None) => Ok(Functional::Density),
            ("marginal", Some(a)) => Ok(Functional::Marginal(a.parse().map_err(|_| bad())?)),
            ("proportion", Some(a)) => Ok(Functional::ProportionAtLeast(a.parse().map_err(|_| bad())?)),
            ("zeros_above", Some(a)) => Ok(Functional::ZerosAbove(a.parse().map_err(|_| bad())?)),
            _ => Err(bad()),
        }
    }
}

impl Functional {
    /// Exact value under a stationary law of the same flavour.
    pub fn exact(&self, sd: &StationaryDist) -> f64 {
        let n = sd.num_vertices;
        match *self {
            Functional::Marginal(x) => sd.prob(|s| (s >> x) & 1 == 1),
            Functional::Density => {
                sd.probs.iter().enumerate().map(|(s, p)| p * (s as u32).count_ones() as f64 / n as f64).sum()
            }
            Functional::ProportionAtLeast(a) => sd.proportion_at_least(a),
            Functional::ZerosAbove(k) => sd.prob(|s| n - s.count_ones() as usize > k),
        }
    }
}

/// All batches of a Monte Carlo run.
#[derive(Debug, Clone)]
pub struct McRun {
    pub num_vertices: usize,
    pub tracked: Vec<usize>,
    pub config: McConfig,
    batches: Vec<Batch>,
}

/// Runs `cfg.replicas` independent replicas (in parallel on the current
/// rayon pool; results are independent of the pool size).
pub fn run(g: &Graph, params: ModelParams, cfg: &McConfig, tracked: &[usize]) -> Result<McRun> {
    cfg.validate()?;
    check_mark_capacity(g)?;
    for &x in tracked {
        g.check_vertex(x)?;
    }
    if let Start::Given(c) = &cfg.start {
        c.check_graph(g)?;
    }
    let per_replica: Vec<Vec<Batch>> = (0..cfg.replicas as u64)
        .into_par_iter()
        .map(|r| run_replica(g, params, cfg, tracked, StreamKey::new(cfg.seed, r)))
        .collect();
    Ok(McRun {
        num_vertices: g.num_vertices(),
        tracked: tracked.to_vec(),
        config: cfg.clone(),
        batches: per_replica.into_iter().flatten().collect(),
    })
}

fn run_replica(g: &Graph, params: ModelParams, cfg: &McConfig, tracked: &[usize], key: StreamKey) -> Vec<Batch> {
    let n = g.num_vertices();
    let start = match &cfg.start {
        Start::Product => Configuration::random(n, params, &mut key.lane(LANE_INIT)),
        Start::AllOnes => Configuration::all_ones(n),
        Start::AllZeros => Configuration::all_zeros(n),
        Start::Given(c) => c.clone(),
    };
    let mut state = BsState::new(start);
    let mut rng = key.driver();
    let nb = cfg.batches_per_replica;
    let burn = cfg.burn_in();
    let len = (cfg.budget - burn) / nb as f64;
    let mut batches = vec![Batch::new(n, tracked.len()); nb];
    match cfg.flavor {
        Flavor::Embedded => {
            let (burn, len) = (burn as u64, len.floor() as u64);
            for _ in 0..burn {
                state.step_embedded(g, params, cfg.rule, &mut rng);
            }
            for b in &mut batches {
                for _ in 0..len {
                    state.step_embedded(g, params, cfg.rule, &mut rng);
                    b.add(&state, tracked, 1.0);
                }
            }
        }
        Flavor::Continuous => {
            let mut t = 0.0;
            while t < burn {
                let Some((dt, _)) = state.step_jump(g, params, cfg.rule, &mut rng) else { break };
                t += dt;
            }
            // `state` now holds from `burn` until the first event after it;
            // that holding time is memoryless, so the clock restarts here
            let mut t = 0.0;
            let mut bi = 0;
            let mut end = len;
            loop {
                let rate = state.exit_rate(cfg.rule);
                let dt = if rate == 0.0 {
                    f64::INFINITY
                } else {
                    let e: f64 = Exp1.sample(&mut rng);
                    e / rate
                };
                let next = t + dt;
                // spread the holding interval over the batches it covers
                while next >= end && bi < nb {
                    batches[bi].add(&state, tracked, end - t);
                    t = end;
                    bi += 1;
                    end = len * (bi + 1) as f64;
                }
                if bi == nb {
                    break;
                }
                batches[bi].add(&state, tracked, next - t);
                t = next;
                state.step_embedded(g, params, cfg.rule, &mut rng);
            }
        }
    }
    batches
}

/// A fitted geometric tail with a jackknife interval on the slope.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McTailFit {
    pub c1: f64,
    pub c2: f64,
    pub c2_stderr: f64,
    pub c2_ci_lo: f64,
    pub c2_ci_hi: f64,
    pub k_min: usize,
    pub k_max: usize,
    pub rms_residual: f64,
}

impl McRun {
    pub fn num_batches(&self) -> usize {
        self.batches.len()
    }

    fn batch_value(&self, b: &Batch, f: Functional) -> Result<f64> {
        let n = self.num_vertices;
        Ok(match f {
            Functional::Marginal(x) => {
                let i = self.tracked.iter().position(|&t| t == x).ok_or_else(|| {
                    Error::InvalidParameter(format!("vertex {x} was not tracked"))
                })?;
                b.ones[i] / b.weight
            }
            Functional::Density => {
                b.zeros.iter().enumerate().map(|(z, w)| w * (n - z) as f64).sum::<f64>() / (n as f64 * b.weight)
            }
            Functional::ProportionAtLeast(a) => {
                let ones_needed = a * n as f64 - 1e-9;
                b.zeros.iter().enumerate().filter(|(z, _)| (n - z) as f64 >= ones_needed).map(|(_, w)| w).sum::<f64>()
                    / b.weight
            }
            Functional::ZerosAbove(k) => b.zeros.iter().skip(k + 1).sum::<f64>() / b.weight,
        })
    }

    pub fn batch_values(&self, f: Functional) -> Result<Vec<f64>> {
        self.batches.iter().map(|b| self.batch_value(b, f)).collect()
    }

    pub fn estimate(&self, f: Functional) -> Result<Estimate> {
        Estimate::from_batches(&self.batch_values(f)?, self.config.burn_in(), self.config.budget)
    }

    /// `pi(#zeros > k)` for `k = 0..=k_max`.
    pub fn zeros_tail(&self, k_max: usize) -> Result<Vec<Estimate>> {
        (0..=k_max.min(self.num_vertices)).map(|k| self.estimate(Functional::ZerosAbove(k))).collect()
    }

    /// Geometric fit of the zero-count tail over the leading range of `k`
    /// where the estimate is positive, below one and at least two standard
    /// errors, with a delete-one-batch jackknife for the slope.
    pub fn tail_fit(&self) -> Result<McTailFit> {
        let tail = self.zeros_tail(self.num_vertices)?;
        let ks: Vec<usize> = tail
            .iter()
            .enumerate()
            .skip_while(|(_, e)| e.mean >= 1.0)
            .take_while(|(_, e)| e.mean >= TAIL_FLOOR && e.mean >= 2.0 * e.stderr)
            .map(|(k, _)| k)
            .collect();
        if ks.len() < 3 {
            return Err(Error::InsufficientData(format!("{} usable tail points, need 3", ks.len())));
        }
        // per-batch tail values, k in ks
        let values: Vec<Vec<f64>> = self
            .batches
            .iter()
            .map(|b| ks.iter().map(|&k| b.zeros.iter().skip(k + 1).sum::<f64>() / b.weight).collect())
            .collect();
        let nb = values.len();
        let xs: Vec<f64> = ks.iter().map(|&k| k as f64).collect();
        let fit_excluding = |skip: Option<usize>| -> Result<crate::stats::LineFit> {
            let m = nb - usize::from(skip.is_some());
            let ys: Vec<f64> = (0..ks.len())
                .map(|j| {
                    let s: f64 = values.iter().enumerate().filter(|(i, _)| Some(*i) != skip).map(|(_, v)| v[j]).sum();
                    (s / m as f64).ln()
                })
                .collect();
            if ys.iter().any(|y| !y.is_finite()) {
                return Err(Error::InsufficientData("empty tail bin after deleting a batch".into()));
            }
            fit_line(&xs, &ys)
        };
        let full = fit_excluding(None)?;
        let slopes: Vec<f64> = (0..nb).map(|i| fit_excluding(Some(i)).map(|f| -f.slope)).collect::<Result<_>>()?;
        let mean = slopes.iter().sum::<f64>() / nb as f64;
        let var = slopes.iter().map(|s| (s - mean).powi(2)).sum::<f64>() * (nb - 1) as f64 / nb as f64;
        let se = var.sqrt();
        let c2 = -full.slope;
        Ok(McTailFit {
            c1: full.intercept.exp(),
            c2,
            c2_stderr: se,
            c2_ci_lo: c2 - Z95 * se,
            c2_ci_hi: c2 + Z95 * se,
            k_min: ks[0],
            k_max: *ks.last().unwrap(),
            rms_residual: full.rms_residual,
        })
    }
}

/// `pi(eta_x = 1)` for one vertex.
pub fn mc_marginal_one(g: &Graph, params: ModelParams, x: usize, cfg: &McConfig) -> Result<Estimate> {
    run(g, params, cfg, &[x])?.estimate(Functional::Marginal(x))
}

/// `pi(eta_bar >= a)`.
pub fn mc_proportion_tail(g: &Graph, params: ModelParams, a: f64, cfg: &McConfig) -> Result<Estimate> {
    run(g, params, cfg, &[])?.estimate(Functional::ProportionAtLeast(a))
}

/// `pi(#zeros > k)` for `k = 0..=k_max`, with the geometric fit when one is
/// possible.
pub fn mc_zeros_tail(
    g: &Graph,
    params: ModelParams,
    k_max: usize,
    cfg: &McConfig,
) -> Result<(Vec<Estimate>, Option<McTailFit>)> {
    let r = run(g, params, cfg, &[])?;
    Ok((r.zeros_tail(k_max)?, r.tail_fit().ok()))
}

/// One row of the estimate CSV.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateRow {
    pub functional: String,
    pub param_p: f64,
    pub graph: String,
    pub estimate: f64,
    pub stderr: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub batches: usize,
    pub seed: u64,
}

impl EstimateRow {
    pub fn new(f: Functional, p: f64, graph: &str, e: &Estimate, seed: u64) -> Self {
        Self {
            functional: f.to_string(),
            param_p: p,
            graph: graph.to_string(),
            estimate: e.mean,
            stderr: e.stderr,
            ci_lo: e.ci_lo,
            ci_hi: e.ci_hi,
            batches: e.n_batches,
            seed,
        }
    }
}

pub const ESTIMATE_CSV_HEADER: &str = "functional,param_p,graph,estimate,stderr,ci_lo,ci_hi,batches,seed";

pub fn write_estimates_csv<W: Write>(mut w: W, rows: &[EstimateRow]) -> Result<()> {
    writeln!(w, "{ESTIMATE_CSV_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            r.functional, r.param_p, r.graph, r.estimate, r.stderr, r.ci_lo, r.ci_hi, r.batches, r.seed
        )?;
    }
    Ok(())
}
