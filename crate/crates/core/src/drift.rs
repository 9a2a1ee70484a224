//! Exact one-step drift of the typed-particle Lyapunov function.
//!
//! Zeros are particles: type 1 when no neighbour is a zero, type 2
//! otherwise. With `f(n1, n2) = n1 + (1 - h) n2`, the expected change of `f`
//! after one step of the discrete model is computed exactly by enumerating
//! every resampling of the chosen site's closed neighbourhood, and compared
//! with the closed-form bounds in [`crate::bounds`].

use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bounds;
use crate::dynamics::{check_mark_capacity, sample_marks, Configuration, ModelParams};
use crate::graph::Graph;
use crate::rng::StreamKey;
use crate::stats::Estimate;
use crate::{Error, Result};

/// Largest closed neighbourhood enumerated exhaustively.
pub const MAX_ENUMERATED_NEIGHBOURHOOD: usize = 16;
/// Largest graph scanned over all configurations.
pub const MAX_SCAN_VERTICES: usize = 16;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize)]
pub struct TypedCensus {
    pub n1: usize,
    pub n2: usize,
}

impl TypedCensus {
    pub fn total(&self) -> usize {
        self.n1 + self.n2
    }
}

/// Particle type of `x`: 0 for a one, 1 for a lonely zero, 2 for a zero
/// with a zero neighbour.
fn site_type(g: &Graph, bits: &[u8], x: usize) -> u8 {
    if bits[x] == 1 {
        0
    } else if g.neighbours(x).iter().any(|&y| bits[y] == 0) {
        2
    } else {
        1
    }
}

/// Census and per-vertex labels (0 = one, 1 or 2 = particle type).
pub fn classify_zeros(g: &Graph, config: &Configuration) -> Result<(TypedCensus, Vec<u8>)> {
    config.check_graph(g)?;
    let labels: Vec<u8> = (0..g.num_vertices()).map(|x| site_type(g, config.bits(), x)).collect();
    let census = TypedCensus {
        n1: labels.iter().filter(|&&t| t == 1).count(),
        n2: labels.iter().filter(|&&t| t == 2).count(),
    };
    Ok((census, labels))
}

pub fn lyapunov_f(census: TypedCensus, h: f64) -> f64 {
    census.n1 as f64 + (1.0 - h) * census.n2 as f64
}

/// Midpoint of the admissible window for `h`.
pub fn choose_h(q: f64, d: usize) -> Result<f64> {
    bounds::h_window(q, d).map(|(lo, hi)| 0.5 * (lo + hi)).ok_or(Error::EmptyWindow { q, d })
}

/// Bound on `|f(next) - f(current)|`: `(d + 1) + h d (d - 1) + 1`.
pub fn increment_bound(d: usize, h: f64) -> f64 {
    let d = d as f64;
    (d + 1.0) + h * d * (d - 1.0) + 1.0
}

/// Terms of one update at `v`, for one resampling outcome or in
/// expectation over all of them.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct UpdateDecomposition {
    /// Particles among the neighbours of `v` before the update.
    pub m: usize,
    /// Weight of the updated particle: 1 (type 1) or `1 - h` (type 2).
    pub w: f64,
    /// New type-1 / type-2 particles in the closed neighbourhood of `v`.
    pub x1: f64,
    pub x2: f64,
    /// Outside particles turned from type 2 to type 1, and back.
    pub z: f64,
    pub z_rev: f64,
    pub d_n: f64,
    pub d_n2: f64,
}

impl UpdateDecomposition {
    pub fn d_f(&self, h: f64) -> f64 {
        self.d_n - h * self.d_n2
    }
}

/// Precomputed neighbourhoods for repeated drift evaluation.
struct Local<'g> {
    g: &'g Graph,
    /// Vertices within distance two of each vertex.
    ball2: Vec<Vec<usize>>,
}

impl<'g> Local<'g> {
    fn new(g: &'g Graph) -> Result<Self> {
        check_mark_capacity(g)?;
        if g.max_degree() + 1 > MAX_ENUMERATED_NEIGHBOURHOOD {
            return Err(Error::InvalidParameter(format!(
                "closed neighbourhoods of size {} exceed the enumeration limit {MAX_ENUMERATED_NEIGHBOURHOOD}",
                g.max_degree() + 1
            )));
        }
        let ball2 = (0..g.num_vertices())
            .map(|v| {
                let mut b: Vec<usize> = g.closed(v).iter().flat_map(|&u| g.closed(u).iter().copied()).collect();
                b.sort_unstable();
                b.dedup();
                b
            })
            .collect();
        Ok(Self { g, ball2 })
    }

    /// Expected decomposition of an update at zero `v`, plus the largest
    /// `|delta f|` over outcomes.
    fn expected(&self, bits: &[u8], v: usize, params: ModelParams, h: f64) -> (UpdateDecomposition, f64) {
        let g = self.g;
        let closed = g.closed(v);
        let ball = &self.ball2[v];
        let before: Vec<u8> = ball.iter().map(|&u| site_type(g, bits, u)).collect();
        let m = g.neighbours(v).iter().filter(|&&u| bits[u] == 0).count();
        let w = if m == 0 { 1.0 } else { 1.0 - h };
        let mut after_bits = bits.to_vec();
        let mut acc = UpdateDecomposition { m, w, ..Default::default() };
        let mut max_abs = 0.0f64;
        let (p, q) = (params.p(), params.q());
        for pattern in 0u32..1 << closed.len() {
            let mut prob = 1.0;
            for (i, &u) in closed.iter().enumerate() {
                let bit = ((pattern >> i) & 1) as u8;
                after_bits[u] = bit;
                prob *= if bit == 1 { p } else { q };
            }
            let mut o = UpdateDecomposition { m, w, ..Default::default() };
            for (&u, &tb) in ball.iter().zip(&before) {
                let ta = site_type(g, &after_bits, u);
                let inside = closed.binary_search(&u).is_ok();
                if inside {
                    o.d_n += f64::from(u8::from(ta != 0)) - f64::from(u8::from(tb != 0));
                    match ta {
                        1 => o.x1 += 1.0,
                        2 => o.x2 += 1.0,
                        _ => {}
                    }
                } else if tb == 2 && ta == 1 {
                    o.z += 1.0;
                } else if tb == 1 && ta == 2 {
                    o.z_rev += 1.0;
                }
                o.d_n2 += f64::from(u8::from(ta == 2)) - f64::from(u8::from(tb == 2));
            }
            max_abs = max_abs.max(o.d_f(h).abs());
            acc.x1 += prob * o.x1;
            acc.x2 += prob * o.x2;
            acc.z += prob * o.z;
            acc.z_rev += prob * o.z_rev;
            acc.d_n += prob * o.d_n;
            acc.d_n2 += prob * o.d_n2;
        }
        (acc, max_abs)
    }
}

/// Exact drift conditional on updating one particular zero.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SiteDrift {
    pub v: usize,
    pub site_type: u8,
    pub expected: UpdateDecomposition,
    pub drift: f64,
    /// The type-1 bound, or the type-2 bound for this site's `m`.
    pub bound: f64,
    /// Largest `|delta f|` over all resampling outcomes.
    pub max_abs_increment: f64,
}

impl SiteDrift {
    pub fn margin(&self) -> f64 {
        self.bound - self.drift
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DriftReport {
    pub census: TypedCensus,
    pub q: f64,
    pub h: f64,
    /// `E[f(next) - f(current)]`, uniform over zeros.
    pub drift: f64,
    /// `E[N(next) - N(current)]` and the same for type-2 particles.
    pub drift_n: f64,
    pub drift_n2: f64,
    pub sites: Vec<SiteDrift>,
    /// `(d + 1) q - 1 - n2 / (n1 + n2)`.
    pub n_drift_bound: f64,
}

/// Exact drift from `config`, which must contain a zero. `d` is the
/// graph's maximum degree.
pub fn exact_drift(g: &Graph, config: &Configuration, params: ModelParams, h: f64) -> Result<DriftReport> {
    let local = Local::new(g)?;
    exact_drift_with(&local, config, params, h)
}

fn exact_drift_with(local: &Local, config: &Configuration, params: ModelParams, h: f64) -> Result<DriftReport> {
    let g = local.g;
    let (census, labels) = classify_zeros(g, config)?;
    if census.total() == 0 {
        return Err(Error::InvalidParameter("drift needs a configuration with at least one zero".into()));
    }
    let (q, d) = (params.q(), g.max_degree());
    let sites: Vec<SiteDrift> = config
        .zeros()
        .map(|v| {
            let (e, max_abs) = local.expected(config.bits(), v, params, h);
            let bound = if labels[v] == 1 {
                bounds::type1_bound(q, d, h)
            } else {
                bounds::type2_bound_m(q, d, h, e.m as f64)
            };
            SiteDrift { v, site_type: labels[v], drift: e.d_f(h), expected: e, bound, max_abs_increment: max_abs }
        })
        .collect();
    let k = sites.len() as f64;
    Ok(DriftReport {
        census,
        q,
        h,
        drift: sites.iter().map(|s| s.drift).sum::<f64>() / k,
        drift_n: sites.iter().map(|s| s.expected.d_n).sum::<f64>() / k,
        drift_n2: sites.iter().map(|s| s.expected.d_n2).sum::<f64>() / k,
        sites,
        n_drift_bound: bounds::n_drift_bound(q, d, census.n1, census.n2),
    })
}

/// One displayed inequality, aggregated over a scan.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InequalityCheck {
    pub name: &'static str,
    pub checked: u64,
    pub violations: u64,
    /// Smallest slack (bound side minus exact side) seen.
    pub min_margin: f64,
}

impl InequalityCheck {
    fn new(name: &'static str) -> Self {
        Self { name, checked: 0, violations: 0, min_margin: f64::INFINITY }
    }

    /// Records `slack >= 0` with a small rounding tolerance.
    fn record(&mut self, slack: f64) {
        self.checked += 1;
        if slack < -1e-12 {
            self.violations += 1;
        }
        self.min_margin = self.min_margin.min(slack);
    }

    fn merge(&mut self, o: &InequalityCheck) {
        self.checked += o.checked;
        self.violations += o.violations;
        self.min_margin = self.min_margin.min(o.min_margin);
    }

    pub fn holds(&self) -> bool {
        self.violations == 0
    }
}

/// One row of the drift-scan CSV.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanRow {
    pub config_bits: String,
    pub cond_type: u8,
    pub m: usize,
    pub exact_drift: f64,
    pub bound: f64,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanReport {
    pub q: f64,
    pub h: f64,
    pub d: usize,
    pub regular: bool,
    pub configurations: u64,
    pub checks: Vec<InequalityCheck>,
    /// Largest unconditional drift (negative means `-epsilon` holds with
    /// `epsilon` = its absolute value).
    pub max_drift: f64,
    /// Largest conditional drift over all chosen sites.
    pub max_conditional_drift: f64,
    pub max_abs_increment: f64,
    pub increment_bound: f64,
    pub warning: Option<String>,
    #[serde(skip)]
    pub rows: Vec<ScanRow>,
}

impl ScanReport {
    pub fn all_hold(&self) -> bool {
        self.checks.iter().all(InequalityCheck::holds) && self.max_abs_increment <= self.increment_bound
    }

    pub fn check(&self, name: &str) -> Option<&InequalityCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn write_csv<W: Write>(&self, mut w: W, graph: &str) -> Result<()> {
        writeln!(w, "graph,q,h,config_bits,cond_type,m,exact_drift,bound,margin")?;
        for r in &self.rows {
            writeln!(
                w,
                "{graph},{},{},{},{},{},{},{},{}",
                self.q, self.h, r.config_bits, r.cond_type, r.m, r.exact_drift, r.bound, r.margin
            )?;
        }
        Ok(())
    }
}

const CHECK_NAMES: [&str; 10] = [
    "type1_bound",
    "type2_bound_m",
    "type2_bound",
    "n_drift",
    "n2_type1_lower",
    "n2_type2_lower",
    "progeny_total",
    "progeny_type2_lower",
    "transitions_upper",
    "increment_identity",
];

/// Exhaustive check of every displayed drift inequality over all
/// configurations with at least one zero. On graphs without constant degree
/// only the degree-free inequalities are checked.
pub fn verify_all_bounds(g: &Graph, params: ModelParams, h: f64) -> Result<ScanReport> {
    let n = g.num_vertices();
    if n > MAX_SCAN_VERTICES {
        return Err(Error::StateSpaceTooLarge { num_vertices: n, limit: MAX_SCAN_VERTICES });
    }
    let local = Local::new(g)?;
    let regular = g.regular_degree().is_some();
    let d = g.max_degree();
    let (q, df) = (params.q(), d as f64);
    let side_ok = h < bounds::side_condition(q, d);
    let empty = || CHECK_NAMES.iter().map(|&c| InequalityCheck::new(c)).collect::<Vec<_>>();
    type Part = (Vec<InequalityCheck>, f64, f64, f64, Vec<ScanRow>);
    let parts: Vec<Part> = (0..(1u32 << n) - 1)
        .into_par_iter()
        .map(|s| -> Result<Part> {
            let config = Configuration::from_index(n, u64::from(s));
            let r = exact_drift_with(&local, &config, params, h)?;
            let mut checks = empty();
            let mut rows = Vec::with_capacity(r.sites.len());
            let mut max_cond = f64::NEG_INFINITY;
            let mut max_abs = 0.0f64;
            for site in &r.sites {
                let e = &site.expected;
                max_cond = max_cond.max(site.drift);
                max_abs = max_abs.max(site.max_abs_increment);
                let identity = e.x1 + (1.0 - h) * e.x2 + h * (e.z - e.z_rev) - (1.0 - h) * e.m as f64 - e.w;
                checks[9].record(-(identity - site.drift).abs());
                if site.site_type == 1 {
                    checks[4].record(e.d_n2 - 2.0 * q * q);
                } else {
                    checks[5].record(e.d_n2 + (1.0 + df * df));
                }
                if regular {
                    if site.site_type == 1 {
                        checks[0].record(site.margin());
                    } else {
                        checks[1].record(site.margin());
                        if side_ok {
                            checks[2].record(bounds::type2_bound(q, d, h) - site.drift);
                        }
                        checks[8].record(e.m as f64 * (1.0 - q) * (df - 1.0) - e.z);
                    }
                    checks[6].record(-((e.x1 + e.x2) - q * (df + 1.0)).abs());
                    checks[7].record(e.x2 - (df * q * q + q * (1.0 - (1.0 - q).powi(d as i32))));
                }
                rows.push(ScanRow {
                    config_bits: config.to_string(),
                    cond_type: site.site_type,
                    m: e.m,
                    exact_drift: site.drift,
                    bound: site.bound,
                    margin: site.margin(),
                });
            }
            checks[3].record(r.n_drift_bound - r.drift_n);
            Ok((checks, r.drift, max_cond, max_abs, rows))
        })
        .collect::<Result<_>>()?;
    let mut checks = empty();
    let (mut max_drift, mut max_cond, mut max_abs) = (f64::NEG_INFINITY, f64::NEG_INFINITY, 0.0f64);
    let mut rows = Vec::new();
    for (c, dr, mc, ma, rs) in parts {
        checks.iter_mut().zip(&c).for_each(|(a, b)| a.merge(b));
        max_drift = max_drift.max(dr);
        max_cond = max_cond.max(mc);
        max_abs = max_abs.max(ma);
        rows.extend(rs);
    }
    // drop inequalities never exercised (e.g. degree-specific ones on
    // irregular graphs)
    checks.retain(|c| c.checked > 0);
    Ok(ScanReport {
        q,
        h,
        d,
        regular,
        configurations: (1u64 << n) - 1,
        checks,
        max_drift,
        max_conditional_drift: max_cond,
        max_abs_increment: max_abs,
        increment_bound: increment_bound(d, h),
        warning: (!regular).then(|| format!("graph is not regular; degree-specific bounds skipped (d = max degree {d})")),
        rows,
    })
}

/// Monte Carlo mean of `f(next) - f(current)` over `n_steps` independent
/// single steps from `config`, in 1000 batches.
pub fn mc_drift(g: &Graph, config: &Configuration, params: ModelParams, h: f64, n_steps: usize, seed: u64) -> Result<Estimate> {
    let (census, _) = classify_zeros(g, config)?;
    if census.total() == 0 {
        return Err(Error::InvalidParameter("drift needs a configuration with at least one zero".into()));
    }
    check_mark_capacity(g)?;
    let f0 = lyapunov_f(census, h);
    let zeros: Vec<usize> = config.zeros().collect();
    let batches = 1000usize;
    let per = n_steps.div_ceil(batches);
    let means: Vec<f64> = (0..batches as u64)
        .into_par_iter()
        .map(|b| {
            let mut rng = StreamKey::new(seed, b).driver();
            let mut sum = 0.0;
            for _ in 0..per {
                let v = zeros[rng.random_range(0..zeros.len())];
                let mut c = config.clone();
                c.apply_marks(g, v, sample_marks(g, v, params, &mut rng));
                let (after, _) = classify_zeros(g, &c).expect("same graph");
                sum += lyapunov_f(after, h) - f0;
            }
            sum / per as f64
        })
        .collect();
    Estimate::from_batches(&means, 0.0, (per * batches) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate, Family};

    fn cycle(n: usize) -> Graph {
        generate(Family::Cycle(n), None).unwrap()
    }

    #[test]
    fn census_examples() {
        let g = cycle(6);
        let c = |s: &str| classify_zeros(&g, &s.parse().unwrap()).unwrap().0;
        assert_eq!(c("111111"), TypedCensus { n1: 0, n2: 0 });
        assert_eq!(c("011011"), TypedCensus { n1: 2, n2: 0 });
        assert_eq!(c("001111"), TypedCensus { n1: 0, n2: 2 });
    }

    #[test]
    fn lyapunov_values() {
        assert_eq!(lyapunov_f(TypedCensus { n1: 0, n2: 0 }, 0.3), 0.0);
        assert_eq!(lyapunov_f(TypedCensus { n1: 3, n2: 0 }, 0.7), 3.0);
        assert_eq!(lyapunov_f(TypedCensus { n1: 0, n2: 2 }, 0.25), 1.5);
    }

    #[test]
    fn lonely_zero_progeny() {
        let g = cycle(8);
        let q = 0.3;
        let p = ModelParams::from_q(q).unwrap();
        let c: Configuration = "01111111".parse().unwrap();
        let r = exact_drift(&g, &c, p, 0.2).unwrap();
        assert!((r.drift_n - (3.0 * q - 1.0)).abs() < 1e-12);
        let e = r.sites[0].expected;
        assert!(e.x2 >= 2.0 * q * q + q * (1.0 - (1.0 - q).powi(2)) - 1e-12);
    }

    #[test]
    fn drift_is_linear_in_h() {
        let g = cycle(7);
        let p = ModelParams::from_q(0.3).unwrap();
        let c: Configuration = "0010110".parse().unwrap();
        let a = exact_drift(&g, &c, p, 0.0).unwrap();
        let b = exact_drift(&g, &c, p, 0.37).unwrap();
        assert!((a.drift - a.drift_n).abs() < 1e-12);
        assert!(((a.drift - b.drift) / 0.37 - b.drift_n2).abs() < 1e-12);
    }

    #[test]
    fn window_choice() {
        let h = choose_h(1.0 / 3.0, 2).unwrap();
        assert!(h > 0.0 && h < bounds::side_condition(1.0 / 3.0, 2));
        assert!(matches!(choose_h(bounds::q0(2) + 0.01, 2), Err(Error::EmptyWindow { .. })));
    }

    #[test]
    fn extinction_regime_scan_on_cycle() {
        let g = cycle(8);
        let q = 0.3;
        let h = choose_h(q, 2).unwrap();
        let s = verify_all_bounds(&g, ModelParams::from_q(q).unwrap(), h).unwrap();
        for c in &s.checks {
            assert!(c.holds(), "{c:?}");
        }
        assert!(s.all_hold());
        assert!(s.max_drift < 0.0 && s.max_conditional_drift < 0.0, "{s:?}");
        assert_eq!(s.configurations, 255);
    }

    #[test]
    fn survival_regime_has_nonnegative_drift() {
        let s = verify_all_bounds(&cycle(8), ModelParams::from_q(0.6).unwrap(), 0.5).unwrap();
        assert!(s.max_drift >= 0.0);
    }

    #[test]
    fn irregular_graphs_run_in_restricted_mode() {
        let g = generate(Family::Path(5), None).unwrap();
        let s = verify_all_bounds(&g, ModelParams::from_q(0.3).unwrap(), 0.2).unwrap();
        assert!(s.warning.is_some() && s.check("type1_bound").is_none());
        assert!(s.check("n2_type1_lower").unwrap().holds());
    }
}
