//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Seeds are fixed constants chosen before the first run.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use bslab::cli::PresetName;
use bslab::presets;
use bslab_core::bounds;
use bslab_core::drift::{choose_h, exact_drift, mc_drift, verify_all_bounds};
use bslab_core::dynamics::{AllOnesRule, Configuration, ModelParams};
use bslab_core::exact::{stationary, TransitionModel};
use bslab_core::graph::{generate, Family};
use bslab_core::mc::{self, Functional, McConfig};
use bslab_core::percolation::{connects, contour_bounds, evolve, Dir, LevelSet, StripField, StripUniforms};
use bslab_core::rng::StreamKey;
use bslab_core::Flavor;

const SEED: u64 = 0x5eed_2024;

type Outcome = Result<String, String>;

struct Criterion {
    id: &'static str,
    name: &'static str,
    limit: Option<Duration>,
    run: fn() -> Outcome,
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn bslab(args: &[&str]) -> Result<String, String> {
    let o = Command::new(env!("CARGO_BIN_EXE_bslab")).args(args).output().map_err(|e| e.to_string())?;
    if !o.status.success() {
        return Err(format!("bslab {args:?}: {}", String::from_utf8_lossy(&o.stderr)));
    }
    Ok(String::from_utf8_lossy(&o.stdout).trim().to_string())
}

fn bslab_value(args: &[&str]) -> Result<f64, String> {
    let s = bslab(args)?;
    s.parse().map_err(|_| format!("not a number: {s:?}"))
}

fn ac1() -> Outcome {
    let q2 = bslab_value(&["q0", "--d", "2"])?;
    let q4 = bslab_value(&["q0", "--d", "4"])?;
    let closed = bounds::q0_closed_form_d2();
    check(
        (q2 - 0.412).abs() <= 5e-4 && (q2 - closed).abs() <= 1e-9 && (q4 - 0.2145549758).abs() <= 1e-9,
        format!("q0(2) = {q2} (closed form {closed}), q0(4) = {q4}"),
    )
}

fn ac2() -> Outcome {
    let t = bslab_value(&["theta", "--L", "14", "--p", "0.0015", "--d", "2"])?;
    check(t > 0.726 && t < 0.74, format!("theta = {t}"))
}

fn ac3() -> Outcome {
    let ps: [f64; 4] = [1e-3, 1e-4, 1e-5, 1e-6];
    let mut lines = Vec::new();
    let mut ok = true;
    for d in [2, 4] {
        let mut r1 = Vec::new();
        let mut r2 = Vec::new();
        for p in ps {
            let lp = p * (1.0 / p).ln();
            let b2 = bounds::block2_nice_lb(bounds::hat_l(p, d), p, d);
            r1.push((b2 - (1.0 - 2.0 * (d as f64 + 1.0) * lp)).abs() / p);
            let th = bounds::theta_4block_dd(bounds::tilde_l(p, d), p, d).to_f64();
            r2.push((th - (1.0 - 12.0 * (d as f64 + 1.0) * lp)).abs() / p);
        }
        for r in [&r1, &r2] {
            ok &= r.iter().all(|x| x.is_finite()) && r[3] <= 2.0 * r[0];
        }
        lines.push(format!("d={d}: 2-block {r1:.3?}, 4-block {r2:.3?}"));
    }
    check(ok, lines.join("; "))
}

fn ac4() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut failures = Vec::new();
    let mut compared = 0;
    for (label, family) in [("cycle:6", Family::Cycle(6)), ("torus2d:3x3", Family::Torus2d(3, 3))] {
        let g = generate(family, None).map_err(|e| e.to_string())?;
        for p in [0.1, 0.3, 0.7] {
            let params = ModelParams::new(p).map_err(|e| e.to_string())?;
            let tm = TransitionModel::build(&g, params, AllOnesRule::RingAnywhere).map_err(|e| e.to_string())?;
            let sd = stationary(&tm, Flavor::Embedded).map_err(|e| e.to_string())?;
            let mut cfg = McConfig::new(Flavor::Embedded, 1_000_000.0, 4, SEED);
            cfg.batches_per_replica = 64;
            let run = mc::run(&g, params, &cfg, &[0]).map_err(|e| e.to_string())?;
            for f in [
                Functional::Marginal(0),
                Functional::ProportionAtLeast(0.5),
                Functional::ZerosAbove(1),
                Functional::ZerosAbove(3),
            ] {
                let exact = f.exact(&sd);
                let e = run.estimate(f).map_err(|e| e.to_string())?;
                compared += 1;
                // A tail too rare to be visited reliably gets an absolute check.
                let ok = if exact < 1e-4 {
                    e.mean <= 1e-3
                } else {
                    let z = (e.mean - exact).abs() / e.stderr;
                    worst = worst.max(z);
                    z <= 3.0
                };
                if !ok {
                    failures.push(format!("{label} p={p} {f}: mc {} +- {} vs {exact}", e.mean, e.stderr));
                }
            }
        }
    }
    check(failures.is_empty(), format!("{compared} comparisons, worst |z| = {worst:.2}; {}", failures.join("; ")))
}

fn ac5() -> Outcome {
    let rows = presets::block_claims(SEED, 1.0).map_err(|e| e.to_string())?;
    let ok = rows.len() == 2 && rows.iter().all(|r| r.scan.counterexamples == 0 && r.scan.checked >= 10_000);
    let detail = rows
        .iter()
        .map(|r| format!("{} (L = {:.2}): {} checked, {} counterexamples", r.flavor, r.l, r.scan.checked, r.scan.counterexamples))
        .collect::<Vec<_>>()
        .join("; ");
    check(ok, detail)
}

fn ac6() -> Outcome {
    let rows = presets::block_rates(SEED, 1.0).map_err(|e| e.to_string())?;
    let bad: Vec<String> = rows
        .iter()
        .filter(|r| !r.respects_bound(3.0))
        .map(|r| format!("{} d={} p={}: {} +- {} < {}", r.flavor, r.d, r.p, r.nice_rate, r.stderr, r.analytic_lb))
        .collect();
    let worst = rows
        .iter()
        .filter(|r| r.stderr > 0.0)
        .map(|r| (r.analytic_lb - r.nice_rate) / r.stderr)
        .fold(f64::NEG_INFINITY, f64::max);
    check(bad.is_empty() && rows.len() == 32, format!("{} rates, worst shortfall {worst:.2} stderr; {}", rows.len(), bad.join("; ")))
}

fn ac7() -> Outcome {
    let rows = presets::block_correlations(SEED, 1.0).map_err(|e| e.to_string())?;
    let ok = rows.iter().all(|(_, r)| r.within(4.0) && r.pairs >= 100_000);
    let detail =
        rows.iter().map(|(o, r)| format!("{o:?}: {:.4} +- {:.4}", r.correlation, r.stderr)).collect::<Vec<_>>().join("; ");
    check(ok, detail)
}

fn paths_reach(f: &StripField, m: usize, n: usize, y: usize, level: usize) -> bool {
    if n == level {
        return m == y;
    }
    (f.is_open(m, n, Dir::Left) && paths_reach(f, m - 1, n + 1, y, level))
        || (f.is_open(m, n, Dir::Right) && paths_reach(f, m + 1, n + 1, y, level))
}

fn ac8() -> Outcome {
    let mut fields = 0u64;
    for width in 1..=2 {
        for levels in 1..=4 {
            let bonds = StripField::bonds(width, levels);
            for mask in 0u64..1 << bonds.len() {
                let f = StripField::from_fn(width, levels, |m, n, dir| {
                    mask >> bonds.iter().position(|&b| b == (m, n, dir)).unwrap() & 1 == 1
                })
                .map_err(|e| e.to_string())?;
                fields += 1;
                for x in (0..=2 * width).step_by(2) {
                    let b = LevelSet::from_sites(width, 0, &[x]).map_err(|e| e.to_string())?;
                    for level in 1..=levels {
                        let reach = evolve(&f, &b, level).map_err(|e| e.to_string())?;
                        for y in (level % 2..=2 * width).step_by(2) {
                            let expect = paths_reach(&f, x, 0, y, level);
                            if reach.contains(y) != expect || connects(&f, x, y, level).map_err(|e| e.to_string())? != expect
                            {
                                return Err(format!("width {width} levels {levels} mask {mask:#x}: {x} -> {y}"));
                            }
                        }
                    }
                }
            }
        }
    }

    let thetas: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
    let mut samples = 0;
    for width in [2, 4, 8] {
        for s in 0..2000u64 {
            let levels = 12;
            let u = StripUniforms::sample(width, levels, &mut StreamKey::new(SEED, s).lane(width as u64));
            let b = LevelSet::full(width, 0);
            let mut prev: Option<LevelSet> = None;
            for &t in &thetas {
                let reach = evolve(&u.threshold(t).map_err(|e| e.to_string())?, &b, levels).map_err(|e| e.to_string())?;
                if prev.as_ref().is_some_and(|p| !p.is_subset(&reach)) {
                    return Err(format!("monotonicity fails: width {width} sample {s} theta {t}"));
                }
                prev = Some(reach);
            }
            samples += 1;
        }
    }
    let sweep = presets::percolation_sweep(SEED, 1.0).map_err(|e| e.to_string())?;

    let flagged = [0.5, 0.8, 8.0 / 9.0].iter().all(|&t| contour_bounds(16, t, 0.5, 3).is_err());
    let accepted = contour_bounds(16, 0.95, 0.5, 3).map(|r| r.side_condition_ok).unwrap_or(false);
    check(
        sweep.monotonicity_violations == 0 && flagged && accepted,
        format!(
            "{fields} exhaustive fields agree; {samples} shared-uniform samples monotone; sweep violations {}; \
             theta <= 8/9 rejected: {flagged}",
            sweep.monotonicity_violations
        ),
    )
}

fn ac9() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for (family, q) in [(Family::Cycle(8), 0.3), (Family::Torus2d(3, 3), 0.15)] {
        let g = generate(family, None).map_err(|e| e.to_string())?;
        let h = choose_h(q, g.max_degree()).map_err(|e| e.to_string())?;
        let r = verify_all_bounds(&g, ModelParams::from_q(q).map_err(|e| e.to_string())?, h).map_err(|e| e.to_string())?;
        ok &= r.all_hold() && r.max_conditional_drift < 0.0 && r.max_drift < 0.0;
        let failed: Vec<&str> = r.checks.iter().filter(|c| !c.holds()).map(|c| c.name).collect();
        lines.push(format!(
            "{family:?} q={q} h={h:.4}: {} configurations, max conditional drift {:.4}, failed {failed:?}",
            r.configurations, r.max_conditional_drift
        ));
    }
    let g = generate(Family::Torus2d(3, 3), None).map_err(|e| e.to_string())?;
    let q = 0.15;
    let h = choose_h(q, 4).map_err(|e| e.to_string())?;
    let params = ModelParams::from_q(q).map_err(|e| e.to_string())?;
    let c: Configuration = "011010110".parse().map_err(|e: bslab_core::Error| e.to_string())?;
    let exact = exact_drift(&g, &c, params, h).map_err(|e| e.to_string())?;
    let est = mc_drift(&g, &c, params, h, 1_000_000, SEED).map_err(|e| e.to_string())?;
    ok &= est.agrees_with(exact.drift, 4.0);
    lines.push(format!("spot check 011010110: mc {:.5} +- {:.5} vs exact {:.5}", est.mean, est.stderr, exact.drift));
    check(ok, lines.join("; "))
}

fn ac10() -> Outcome {
    let ext = presets::extinction(SEED, 1.0).map_err(|e| e.to_string())?;
    let fit = ext.fit.ok_or("no tail fit")?;
    let a = fit.c2 > 0.0 && fit.c2_ci_lo > 0.0;

    let find = |rows: &[bslab_core::mc::EstimateRow], graph: &str, p: f64| {
        rows.iter().find(|r| r.functional == "marginal:0" && r.graph == graph && r.param_p == p).map(|r| r.estimate)
    };
    let surv = presets::survival(SEED, 1.0).map_err(|e| e.to_string())?;
    let low = find(&surv, "cycle:200", 0.001).ok_or("missing survival row")?;
    let b = low < 0.9;

    let prop = presets::proportion(SEED, 1.0).map_err(|e| e.to_string())?;
    let m: Vec<f64> =
        ["cycle:50", "cycle:100", "cycle:200"].iter().map(|g| find(&prop, g, 0.7).ok_or("missing row")).collect::<Result<_, _>>()?;
    let c = m[0] < m[1] && m[1] < m[2] && m[2] > 0.95;
    check(
        a && b && c,
        format!(
            "(a) c2 = {:.3} CI [{:.3}, {:.3}]; (b) pi(eta_0 = 1) = {low:.4}; (c) {m:.5?}",
            fit.c2, fit.c2_ci_lo, fit.c2_ci_hi
        ),
    )
}

fn ac11() -> Outcome {
    let s = presets::classical(SEED, 1.0).map_err(|e| e.to_string())?;
    check(
        s.mass_below_055 < 0.05 && s.ks_upper < 0.05,
        format!("mass below 0.55 = {:.4}, KS on [0.7, 1] = {:.4}, 5% quantile {:.3}", s.mass_below_055, s.ks_upper, s.q05),
    )
}

fn read_dir(dir: &Path) -> Result<BTreeMap<String, Vec<u8>>, String> {
    let mut out = BTreeMap::new();
    for e in std::fs::read_dir(dir).map_err(|e| e.to_string())? {
        let e = e.map_err(|e| e.to_string())?;
        let name = e.file_name().to_string_lossy().into_owned();
        if name != "manifest.json" {
            out.insert(name, std::fs::read(e.path()).map_err(|e| e.to_string())?);
        }
    }
    Ok(out)
}

fn ac12() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let seed = SEED.to_string();
    let mut files = 0;
    for name in PresetName::ALL {
        let mut outputs = Vec::new();
        for threads in ["1", "2"] {
            let dir = tmp.path().join(format!("{}-{threads}", name.as_str()));
            let d = dir.to_str().ok_or("non-utf8 path")?;
            bslab(&["--threads", threads, "preset", name.as_str(), "--seed", &seed, "--scale", "0.25", "--out", d])?;
            outputs.push(read_dir(&dir)?);
        }
        if outputs[0].is_empty() || outputs[0] != outputs[1] {
            let diff: Vec<&String> =
                outputs[0].keys().filter(|k| outputs[0].get(*k) != outputs[1].get(*k)).collect();
            return Err(format!("{}: outputs differ between thread counts: {diff:?}", name.as_str()));
        }
        files += outputs[0].len();
    }
    check(true, format!("{} presets, {files} files byte-identical at 1 and 2 threads", PresetName::ALL.len()))
}

fn main() -> ExitCode {
    let secs = |s: u64| Some(Duration::from_secs(s));
    let criteria = [
        Criterion { id: "AC1", name: "q0 reproduction", limit: secs(1), run: ac1 },
        Criterion { id: "AC2", name: "theta reproduction", limit: secs(1), run: ac2 },
        Criterion { id: "AC3", name: "asymptotic expansions", limit: secs(1), run: ac3 },
        Criterion { id: "AC4", name: "exact vs Monte Carlo", limit: secs(300), run: ac4 },
        Criterion { id: "AC5", name: "deterministic block claims", limit: secs(600), run: ac5 },
        Criterion { id: "AC6", name: "block rate lower bounds", limit: secs(1200), run: ac6 },
        Criterion { id: "AC7", name: "4-block independence", limit: secs(600), run: ac7 },
        Criterion { id: "AC8", name: "percolation oracle and monotonicity", limit: secs(120), run: ac8 },
        Criterion { id: "AC9", name: "drift verification", limit: secs(600), run: ac9 },
        Criterion { id: "AC10", name: "extinction and survival picture", limit: secs(1800), run: ac10 },
        Criterion { id: "AC11", name: "classical model", limit: secs(600), run: ac11 },
        Criterion { id: "AC12", name: "reproducibility across thread counts", limit: None, run: ac12 },
    ];
    let mut failed = 0;
    for c in criteria {
        let start = Instant::now();
        let outcome = (c.run)();
        let elapsed = start.elapsed();
        let over = c.limit.is_some_and(|l| elapsed > l);
        let (pass, detail) = match outcome {
            Ok(d) if !over => (true, d),
            Ok(d) => (false, format!("{d}; over the {:?} limit", c.limit.unwrap())),
            Err(d) => (false, d),
        };
        failed += usize::from(!pass);
        println!(
            "{:<5} {} {} ({:.2} s): {detail}",
            c.id,
            if pass { "PASS" } else { "FAIL" },
            c.name,
            elapsed.as_secs_f64()
        );
    }
    println!("{} of 12 criteria passed", 12 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
