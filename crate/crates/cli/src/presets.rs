//! Named experiment sets. Every budget is multiplied by a scale factor so
//! the same code serves quick smoke runs and full-size runs.

use std::fmt::Write as _;

use bslab_core::blocks::{
    grid_correlation, independent_blocks, sample_rate, scan_block_claims, write_block_csv, BlockFlavor, BlockGrid,
    BlockStats, ClaimScan, CorrelationReport, RateKind,
};
use bslab_core::bounds;
use bslab_core::drift::{choose_h, verify_all_bounds, ScanReport};
use bslab_core::dynamics::{classical_step, AllOnesRule, FitnessVector, ModelParams};
use bslab_core::graph::{generate, longest_chain, Family, Graph, SearchMode};
use bslab_core::mc::{self, write_estimates_csv, EstimateRow, Functional, McConfig, McTailFit};
use bslab_core::percolation::{connect_indicators, contour_bounds, prob_good_level, write_perc_csv, LevelSet, PercRow};
use bslab_core::rng::StreamKey;
use bslab_core::stats::Estimate;
use bslab_core::Flavor;
use serde::Serialize;

use crate::cli::PresetName;
use crate::error::{CliError, CliResult};
use crate::output::{csv_bytes, Artifacts};

fn scaled(base: f64, scale: f64) -> u64 {
    (base * scale).round().max(1.0) as u64
}

fn cycle(n: usize) -> CliResult<Graph> {
    Ok(generate(Family::Cycle(n), None)?)
}

/// Ones-marginal and density on a cycle, embedded law.
fn cycle_estimates(n: usize, p: f64, steps: f64, seed: u64) -> CliResult<Vec<EstimateRow>> {
    let g = cycle(n)?;
    let params = ModelParams::new(p)?;
    let cfg = McConfig::new(Flavor::Embedded, steps / 4.0, 4, seed);
    let run = mc::run(&g, params, &cfg, &[0])?;
    let label = format!("cycle:{n}");
    [Functional::Marginal(0), Functional::Density, Functional::ProportionAtLeast(0.9)]
        .into_iter()
        .map(|f| Ok(EstimateRow::new(f, p, &label, &run.estimate(f)?, seed)))
        .collect()
}

/// Low `p` on cycle(200): zeros persist and ones stay a minority.
pub fn survival(seed: u64, scale: f64) -> CliResult<Vec<EstimateRow>> {
    let steps = scaled(1e6, scale).max(64) as f64;
    let mut rows = Vec::new();
    for p in [0.001, 0.01] {
        rows.extend(cycle_estimates(200, p, steps, seed)?);
    }
    Ok(rows)
}

/// `p = 0.7` on cycles of growing length: the ones take over.
pub fn proportion(seed: u64, scale: f64) -> CliResult<Vec<EstimateRow>> {
    let steps = scaled(4e6, scale).max(64) as f64;
    let mut rows = Vec::new();
    for n in [50, 100, 200] {
        rows.extend(cycle_estimates(n, 0.7, steps, seed)?);
    }
    Ok(rows)
}

#[derive(Debug, Serialize)]
pub struct Extinction {
    pub tail: Vec<Estimate>,
    pub fit: Option<McTailFit>,
    pub scans: Vec<(String, ScanReport)>,
}

/// Zero-count tail on cycle(50) at `q = 0.3`, and exhaustive drift scans.
pub fn extinction(seed: u64, scale: f64) -> CliResult<Extinction> {
    let g = cycle(50)?;
    let params = ModelParams::from_q(0.3)?;
    let cfg = McConfig::new(Flavor::Embedded, scaled(1e6, scale).max(64) as f64, 4, seed);
    let run = mc::run(&g, params, &cfg, &[])?;
    let tail = run.zeros_tail(50)?;
    let fit = run.tail_fit().ok();
    let mut scans = Vec::new();
    for (family, label, q) in [(Family::Cycle(8), "cycle:8", 0.3), (Family::Torus2d(3, 3), "torus2d:3x3", 0.15)] {
        let g = generate(family, None)?;
        let h = choose_h(q, g.max_degree())?;
        scans.push((label.to_string(), verify_all_bounds(&g, ModelParams::from_q(q)?, h)?));
    }
    Ok(Extinction { tail, fit, scans })
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassicalSummary {
    pub n: usize,
    pub burn_in_steps: u64,
    pub sample_steps: u64,
    pub snapshots: usize,
    pub mass_below_055: f64,
    /// Kolmogorov-Smirnov distance of the values in `[0.7, 1]` from the
    /// uniform law there.
    pub ks_upper: f64,
    /// 5% quantile of all sampled values.
    pub q05: f64,
    #[serde(skip)]
    pub histogram: Vec<f64>,
}

pub const HISTOGRAM_BINS: usize = 50;

/// Long-run fitness values of the classical model on cycle(1000).
pub fn classical(seed: u64, scale: f64) -> CliResult<ClassicalSummary> {
    let n = 1000;
    let g = cycle(n)?;
    let burn = scaled(2e6, scale);
    let sample = scaled(2e6, scale);
    let every = 10_000u64.min(sample);
    let mut rng = StreamKey::new(seed, 0).driver();
    let mut fv = FitnessVector::random(n, &mut rng);
    for _ in 0..burn {
        classical_step(&g, &mut fv, &mut rng);
    }
    let mut values = Vec::new();
    for s in 1..=sample {
        classical_step(&g, &mut fv, &mut rng);
        if s % every == 0 {
            values.extend_from_slice(fv.values());
        }
    }
    let total = values.len() as f64;
    let mut histogram = vec![0.0; HISTOGRAM_BINS];
    for &v in &values {
        histogram[((v * HISTOGRAM_BINS as f64) as usize).min(HISTOGRAM_BINS - 1)] += 1.0 / total;
    }
    let mass_below_055 = values.iter().filter(|&&v| v < 0.55).count() as f64 / total;
    values.sort_by(f64::total_cmp);
    let q05 = values[((0.05 * total) as usize).min(values.len() - 1)];
    let mut upper: Vec<f64> = values.iter().copied().filter(|&v| v >= 0.7).collect();
    upper.sort_by(f64::total_cmp);
    let m = upper.len() as f64;
    let ks_upper = upper
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let f = (v - 0.7) / 0.3;
            (f - i as f64 / m).abs().max(((i + 1) as f64 / m - f).abs())
        })
        .fold(0.0, f64::max);
    Ok(ClassicalSummary {
        n,
        burn_in_steps: burn,
        sample_steps: sample,
        snapshots: (sample / every) as usize,
        mass_below_055,
        ks_upper,
        q05,
        histogram,
    })
}

pub const BLOCK_PS: [f64; 4] = [0.02, 0.01, 0.005, 0.0015];

/// Graph, degree and the chains blocks are packed along.
fn block_setting(d: usize) -> CliResult<(Graph, Vec<Vec<usize>>)> {
    match d {
        2 => {
            let g = cycle(120)?;
            let chain = longest_chain(&g, SearchMode::Heuristic, None, 0)?.chain.vertices().to_vec();
            Ok((g, vec![chain]))
        }
        4 => {
            let side = 12;
            let g = generate(Family::Torus2d(side, side), None)?;
            // rows with the wrap-around edge left out are chains
            let rows = (0..side).map(|i| (0..side - 2).map(|j| i * side + j).collect()).collect();
            Ok((g, rows))
        }
        _ => Err(CliError::Usage(format!("no block setting for d = {d}"))),
    }
}

/// Empirical stick, 2-block and 4-block rates next to their lower bounds.
pub fn block_rates(seed: u64, scale: f64) -> CliResult<Vec<BlockStats>> {
    let n = scaled(2e4, scale);
    let mut out = Vec::new();
    for d in [2, 4] {
        let (g, chains) = block_setting(d)?;
        for p in BLOCK_PS {
            let params = ModelParams::new(p)?;
            let (lh, lt) = (bounds::hat_l(p, d), bounds::tilde_l(p, d));
            for (kind, size, l) in [
                (RateKind::Stick { a: 1 }, 1, lh),
                (RateKind::Stick { a: d + 1 }, 1, lh),
                (RateKind::Block2, 2, lh),
                (RateKind::Block4, 4, lt),
            ] {
                let blocks = independent_blocks(&g, &chains, size)?;
                out.push(sample_rate(&g, &blocks, kind, params, d, l, n, seed)?);
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct ClaimRow {
    pub flavor: String,
    pub l: f64,
    pub scan: ClaimScan,
}

fn claim_grid(flavor: BlockFlavor, l: f64) -> CliResult<(Graph, BlockGrid)> {
    let g = cycle(200)?;
    let chain = longest_chain(&g, SearchMode::Heuristic, None, 0)?.chain.vertices().to_vec();
    let grid = BlockGrid::new(&g, &chain, flavor, l)?;
    Ok((g, grid))
}

/// Deterministic block claims on cycle(200) at `p = 0.01`.
pub fn block_claims(seed: u64, scale: f64) -> CliResult<Vec<ClaimRow>> {
    let (p, d) = (0.01, 2);
    let params = ModelParams::new(p)?;
    let mut out = Vec::new();
    for (flavor, l, replicas) in
        [(BlockFlavor::TwoBlock, bounds::hat_l(p, d), 8.0), (BlockFlavor::FourBlock, bounds::tilde_l(p, d), 48.0)]
    {
        let (g, grid) = claim_grid(flavor, l)?;
        let scan =
            scan_block_claims(&g, &grid, params, AllOnesRule::RingAnywhere, 64, scaled(replicas, scale) as usize, seed)?;
        out.push(ClaimRow { flavor: flavor.to_string(), l, scan });
    }
    Ok(out)
}

pub const CORRELATION_OFFSETS: [(isize, usize); 3] = [(2, 0), (1, 1), (0, 2)];

/// Niceness correlations of grid-disjoint 4-blocks on cycle(200).
pub fn block_correlations(seed: u64, scale: f64) -> CliResult<Vec<((isize, usize), CorrelationReport)>> {
    let (p, d) = (0.01, 2);
    let (g, grid) = claim_grid(BlockFlavor::FourBlock, bounds::tilde_l(p, d))?;
    let params = ModelParams::new(p)?;
    CORRELATION_OFFSETS
        .iter()
        .map(|&off| Ok((off, grid_correlation(&g, &grid, params, off, scaled(1e5, scale), seed)?)))
        .collect()
}

pub const PERC_THETAS: [f64; 8] = [0.5, 0.6, 0.7, 0.8, 0.85, 0.9, 0.95, 0.99];

#[derive(Debug, Clone, Serialize)]
pub struct PercSweep {
    pub rows: Vec<PercRow>,
    /// Samples where a larger theta lost a connection (must be zero).
    pub monotonicity_violations: usize,
}

/// Connection and goodness probabilities over a theta sweep.
pub fn percolation_sweep(seed: u64, scale: f64) -> CliResult<PercSweep> {
    let samples = scaled(2e4, scale) as usize;
    let (k, h) = (3, 0.5);
    let mut rows = Vec::new();
    let mut violations = 0;
    for w in [4, 8] {
        let x = 2 * (w / 2);
        let ind = connect_indicators(w, &PERC_THETAS, k, x, x, samples, seed)?;
        violations += ind.iter().filter(|s| s.windows(2).any(|p| p[0] && !p[1])).count();
        let b = LevelSet::full(w, 0).sites();
        for (i, &theta) in PERC_THETAS.iter().enumerate() {
            let e = Estimate::bernoulli(ind.iter().filter(|s| s[i]).count() as u64, samples as u64)?;
            let good = prob_good_level(w, theta, k, h, &b, samples, seed)?.estimate;
            for (functional, e) in [(format!("connect:{x}->{x}"), e), ("good_level".to_string(), good)] {
                rows.push(PercRow {
                    width: w,
                    theta,
                    k,
                    h,
                    functional,
                    estimate: e.mean,
                    stderr: e.stderr,
                    n_samples: samples,
                    seed,
                });
            }
        }
    }
    Ok(PercSweep { rows, monotonicity_violations: violations })
}

/// Runs a preset, writing its artifacts.
pub fn run(name: PresetName, seed: u64, scale: f64, art: &mut Artifacts) -> CliResult<()> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(CliError::Usage(format!("scale must be positive, got {scale}")));
    }
    match name {
        PresetName::Thm1Survival => {
            let rows = survival(seed, scale)?;
            art.write("estimates.csv", &csv_bytes(|w| write_estimates_csv(w, &rows))?)?;
        }
        PresetName::Thm2Proportion => {
            let rows = proportion(seed, scale)?;
            art.write("estimates.csv", &csv_bytes(|w| write_estimates_csv(w, &rows))?)?;
        }
        PresetName::Thm3Extinction => {
            let ex = extinction(seed, scale)?;
            let mut csv = String::from("k,estimate,stderr,ci_lo,ci_hi\n");
            for (k, e) in ex.tail.iter().enumerate() {
                let _ = writeln!(csv, "{k},{},{},{},{}", e.mean, e.stderr, e.ci_lo, e.ci_hi);
            }
            art.write("tail.csv", csv.as_bytes())?;
            art.write_json("tail_fit.json", &ex.fit)?;
            for (label, s) in &ex.scans {
                let file = format!("drift_{}.csv", label.replace([':', 'x'], "_"));
                art.write(&file, &csv_bytes(|w| s.write_csv(w, label))?)?;
            }
            let summary: Vec<_> = ex.scans.iter().map(|(l, s)| (l, s)).collect();
            art.write_json("drift_summary.json", &summary)?;
        }
        PresetName::ClassicEtaC => {
            let s = classical(seed, scale)?;
            let mut csv = String::from("bin_lo,bin_hi,mass\n");
            for (i, m) in s.histogram.iter().enumerate() {
                let lo = i as f64 / HISTOGRAM_BINS as f64;
                let hi = (i + 1) as f64 / HISTOGRAM_BINS as f64;
                let _ = writeln!(csv, "{lo},{hi},{m}");
            }
            art.write("histogram.csv", csv.as_bytes())?;
            art.write_json("summary.json", &s)?;
        }
        PresetName::BlockBounds => {
            let rates = block_rates(seed, scale)?;
            art.write("blocks.csv", &csv_bytes(|w| write_block_csv(w, &rates))?)?;
            let mut csv = String::from("flavor,L,cells,nice,checked,counterexamples\n");
            for c in block_claims(seed, scale)? {
                let s = c.scan;
                let _ = writeln!(csv, "{},{},{},{},{},{}", c.flavor, c.l, s.cells, s.nice, s.checked, s.counterexamples);
            }
            art.write("claims.csv", csv.as_bytes())?;
            let mut csv = String::from("dm,dn,pairs,correlation,stderr,rate_a,rate_b\n");
            for ((dm, dn), r) in block_correlations(seed, scale)? {
                let _ = writeln!(csv, "{dm},{dn},{},{},{},{},{}", r.pairs, r.correlation, r.stderr, r.rate_a, r.rate_b);
            }
            art.write("correlation.csv", csv.as_bytes())?;
        }
        PresetName::PercolationSweep => {
            let s = percolation_sweep(seed, scale)?;
            art.write("perc.csv", &csv_bytes(|w| write_perc_csv(w, &s.rows))?)?;
            let contours = PERC_THETAS
                .iter()
                .filter(|&&t| t > 8.0 / 9.0)
                .map(|&t| Ok((t, contour_bounds(8, t, 0.5, 3)?)))
                .collect::<CliResult<Vec<_>>>()?;
            art.write_json("contour.json", &contours)?;
            if s.monotonicity_violations > 0 {
                return Err(CliError::Usage(format!(
                    "{} samples violate monotonicity in theta",
                    s.monotonicity_violations
                )));
            }
        }
    }
    Ok(())
}
