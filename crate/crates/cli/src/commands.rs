//! One function per subcommand. Each returns the seed it used, if any.

use std::fmt::Write as _;

use bslab_core::blocks::{
    grid_correlation, independent_blocks, sample_rate, scan_block_claims, write_block_csv, BlockGrid, RateKind,
};
use bslab_core::bounds;
use bslab_core::drift::{choose_h, exact_drift, mc_drift, verify_all_bounds};
use bslab_core::dynamics::{event_log_csv, replay_snapshots, sample_graphical, AllOnesRule, BsState, Configuration};
use bslab_core::exact::{stationary_with, tail_geometric_fit, SolveOptions, TransitionModel};
use bslab_core::graph::{chain_cover, check_chain, longest_chain, Graph, SearchMode};
use bslab_core::mc::{self, write_estimates_csv, EstimateRow, Functional, McConfig, Start};
use bslab_core::percolation::{
    connect_indicators, contour_bounds, prob_good_level, write_perc_csv, PercRow, LevelSet,
};
use bslab_core::rng::{StreamKey, LANE_INIT};
use bslab_core::stats::Estimate;
use bslab_core::Flavor;
use rand_distr::{Distribution, Exp1};

use crate::cli::*;
use crate::error::{CliError, CliResult};
use crate::output::{csv_bytes, Artifacts};

pub fn parse_start(s: &str) -> CliResult<Start> {
    Ok(match s {
        "product" => Start::Product,
        "ones" | "all_ones" => Start::AllOnes,
        "zeros" | "all_zeros" => Start::AllZeros,
        bits => Start::Given(bits.parse()?),
    })
}

fn initial(g: &Graph, start: &Start, params: bslab_core::dynamics::ModelParams, key: StreamKey) -> CliResult<Configuration> {
    let n = g.num_vertices();
    let c = match start {
        Start::Product => Configuration::random(n, params, &mut key.lane(LANE_INIT)),
        Start::AllOnes => Configuration::all_ones(n),
        Start::AllZeros => Configuration::all_zeros(n),
        Start::Given(c) => c.clone(),
    };
    c.check_graph(g)?;
    Ok(c)
}

fn push_record(csv: &mut String, t: f64, zeros: usize, n: usize) {
    let _ = writeln!(csv, "{t},{zeros},{}", (n - zeros) as f64 / n as f64);
}

pub fn simulate(a: &SimulateArgs, art: &mut Artifacts) -> CliResult<Option<u64>> {
    let g = a.graph.build()?;
    let params = a.model.params()?;
    let n = g.num_vertices();
    if !(a.horizon > 0.0 && a.horizon.is_finite()) {
        return Err(CliError::Usage(format!("horizon must be positive, got {}", a.horizon)));
    }
    let key = StreamKey::new(a.seed.seed, 0);
    let c0 = initial(&g, &parse_start(&a.start)?, params, key)?;
    let every = a.record_every.unwrap_or(a.horizon / 100.0);
    if !(every > 0.0) {
        return Err(CliError::Usage("record spacing must be positive".into()));
    }
    let grid: Vec<f64> = {
        let k = (a.horizon / every).floor() as usize;
        let mut v: Vec<f64> = (0..=k).map(|i| i as f64 * every).collect();
        if *v.last().unwrap() < a.horizon {
            v.push(a.horizon);
        }
        v
    };
    let mut csv = String::from("time,zeros,density\n");
    let final_config = if a.event_log {
        if a.flavor != Flavor::Continuous {
            return Err(CliError::Usage("--event-log needs the continuous flavor".into()));
        }
        let gc = sample_graphical(&g, params, a.horizon, key)?;
        let snaps = replay_snapshots(&g, &c0, &gc, a.rule, &grid)?;
        for (t, c) in grid.iter().zip(&snaps) {
            push_record(&mut csv, *t, c.num_zeros(), n);
        }
        let rep = bslab_core::dynamics::replay(&g, &c0, &gc, a.rule)?;
        art.write("events.csv", event_log_csv(&g, &rep.log).as_bytes())?;
        rep.final_config
    } else {
        let mut rng = key.driver();
        let mut state = BsState::new(c0);
        let mut next = 0;
        match a.flavor {
            Flavor::Continuous => {
                let mut t = 0.0;
                loop {
                    let rate = state.exit_rate(a.rule);
                    let e: f64 = Exp1.sample(&mut rng);
                    let hold = if rate > 0.0 { e / rate } else { f64::INFINITY };
                    while next < grid.len() && grid[next] < t + hold {
                        push_record(&mut csv, grid[next], state.num_zeros(), n);
                        next += 1;
                    }
                    if next == grid.len() {
                        break;
                    }
                    t += hold;
                    state.step_embedded(&g, params, a.rule, &mut rng);
                }
            }
            Flavor::Embedded => {
                let steps = a.horizon.floor() as u64;
                for s in 0..=steps {
                    while next < grid.len() && grid[next] <= s as f64 {
                        push_record(&mut csv, grid[next], state.num_zeros(), n);
                        next += 1;
                    }
                    if s < steps && state.step_embedded(&g, params, a.rule, &mut rng).is_none() {
                        // absorbed: the rest of the trajectory is constant
                        for &t in &grid[next..] {
                            push_record(&mut csv, t, state.num_zeros(), n);
                        }
                        break;
                    }
                }
            }
        }
        state.into_config()
    };
    art.table("trajectory.csv", csv.as_bytes())?;
    art.write("final_config.txt", format!("{final_config}\n").as_bytes())?;
    eprintln!("final: {} zeros of {n}", final_config.num_zeros());
    Ok(Some(a.seed.seed))
}

pub fn exact(a: &ExactArgs, art: &mut Artifacts) -> CliResult<Option<u64>> {
    let g = a.graph.build()?;
    let params = a.model.params()?;
    let tm = TransitionModel::with_budget(&g, params, a.rule, a.max_vertices)?;
    let opts = SolveOptions { tolerance: a.tolerance, ..SolveOptions::default() };
    let sd = stationary_with(&tm, a.flavor, opts)?;
    let m = sd.marginals();
    let mut marg = String::from("vertex,prob_one\n");
    for (x, v) in m.vertex_ones.iter().enumerate() {
        let _ = writeln!(marg, "{x},{v}");
    }
    let mut tail = String::from("k,zeros_above\n");
    for (k, v) in m.zeros_above.iter().enumerate() {
        let _ = writeln!(tail, "{k},{v}");
    }
    art.write("stationary.csv", &csv_bytes(|w| sd.write_csv(w))?)?;
    art.table("marginals.csv", marg.as_bytes())?;
    art.write("tail.csv", tail.as_bytes())?;
    eprintln!(
        "{} law on {} states: residual {:e} after {} iterations, mean zeros {}",
        a.flavor,
        sd.probs.len(),
        sd.residual,
        sd.iterations,
        m.mean_zeros
    );
    if let Ok(fit) = tail_geometric_fit(&sd) {
        eprintln!("tail fit: c1 = {}, c2 = {} (k <= {})", fit.c1, fit.c2, fit.max_k);
        art.write_json("tail_fit.json", &fit)?;
    }
    Ok(None)
}

pub fn mc(a: &McArgs, art: &mut Artifacts) -> CliResult<Option<u64>> {
    let g = a.graph.build()?;
    let params = a.model.params()?;
    let functionals: Vec<Functional> = a.functionals.split(',').map(str::parse).collect::<Result<_, _>>()?;
    let mut tracked: Vec<usize> =
        functionals.iter().filter_map(|f| if let Functional::Marginal(x) = f { Some(*x) } else { None }).collect();
    tracked.sort_unstable();
    tracked.dedup();
    let cfg = McConfig {
        burn_in: a.burn_in,
        batches_per_replica: a.batches,
        rule: a.rule,
        start: parse_start(&a.start)?,
        ..McConfig::new(a.flavor, a.budget, a.replicas, a.seed.seed)
    };
    let run = mc::run(&g, params, &cfg, &tracked)?;
    let label = a.graph.graph.to_string();
    let estimates: Vec<(Functional, Estimate)> =
        functionals.iter().map(|&f| Ok((f, run.estimate(f)?))).collect::<CliResult<_>>()?;
    let rows: Vec<EstimateRow> =
        estimates.iter().map(|(f, e)| EstimateRow::new(*f, params.p(), &label, e, a.seed.seed)).collect();
    art.table("estimates.csv", &csv_bytes(|w| write_estimates_csv(w, &rows))?)?;
    if a.tail {
        let tail = run.zeros_tail(g.num_vertices())?;
        let mut csv = String::from("k,estimate,stderr,ci_lo,ci_hi\n");
        for (k, e) in tail.iter().enumerate() {
            let _ = writeln!(csv, "{k},{},{},{},{}", e.mean, e.stderr, e.ci_lo, e.ci_hi);
        }
        art.write("tail.csv", csv.as_bytes())?;
        match run.tail_fit() {
            Ok(fit) => {
                eprintln!("tail fit: c2 = {} [{}, {}]", fit.c2, fit.c2_ci_lo, fit.c2_ci_hi);
                art.write_json("tail_fit.json", &fit)?;
            }
            Err(e) => eprintln!("tail fit unavailable: {e}"),
        }
    }
    if a.compare_exact {
        let tm = TransitionModel::build(&g, params, a.rule)?;
        let sd = bslab_core::exact::stationary(&tm, a.flavor)?;
        let mut csv = String::from("functional,estimate,stderr,exact,z\n");
        for (f, e) in &estimates {
            let x = f.exact(&sd);
            let z = if e.stderr > 0.0 { (e.mean - x) / e.stderr } else { 0.0 };
            let _ = writeln!(csv, "{f},{},{},{x},{z}", e.mean, e.stderr);
            eprintln!("{f}: mc {} +- {} exact {x} (z = {z:.2})", e.mean, e.stderr);
        }
        art.write("comparison.csv", csv.as_bytes())?;
    }
    Ok(Some(a.seed.seed))
}

pub fn blocks(a: &BlocksArgs, art: &mut Artifacts) -> CliResult<Option<u64>> {
    let g = a.graph.build()?;
    let params = a.model.params()?;
    let p = params.p();
    let d = a.d.unwrap_or(g.max_degree());
    let l = a.l.unwrap_or(match a.kind {
        BlockKind::Stick | BlockKind::TwoBlock => bounds::hat_l(p, d),
        BlockKind::FourBlock => bounds::tilde_l(p, d),
    });
    let (kind, size) = match a.kind {
        BlockKind::Stick => {
            if a.a == 0 || a.a > g.max_degree() + 1 {
                return Err(CliError::Usage(format!("protected set size {} must lie in 1..={}", a.a, g.max_degree() + 1)));
            }
            (RateKind::Stick { a: a.a }, 1)
        }
        BlockKind::TwoBlock => (RateKind::Block2, 2),
        BlockKind::FourBlock => (RateKind::Block4, 4),
    };
    let chain = longest_chain(&g, SearchMode::Heuristic, None, 0)?.chain.vertices().to_vec();
    let blocks = independent_blocks(&g, std::slice::from_ref(&chain), size)?;
    if blocks.is_empty() {
        return Err(CliError::Usage(format!("chain of length {} holds no {size}-block", chain.len())));
    }
    let stats = sample_rate(&g, &blocks, kind, params, d, l, a.samples, a.seed.seed)?;
    eprintln!(
        "{}: rate {} +- {} over {} samples, analytic bound {}",
        stats.flavor, stats.nice_rate, stats.stderr, stats.blocks_sampled, stats.analytic_lb
    );
    art.table("blocks.csv", &csv_bytes(|w| write_block_csv(w, std::slice::from_ref(&stats)))?)?;
    if a.scan || a.correlation.is_some() {
        let flavor = a.grid_flavor().ok_or_else(|| CliError::Usage("grid options need a block kind".into()))?;
        let grid = BlockGrid::new(&g, &chain, flavor, l)?;
        if a.scan {
            let s = scan_block_claims(&g, &grid, params, AllOnesRule::RingAnywhere, a.levels, a.replicas, a.seed.seed)?;
            eprintln!(
                "claim scan: {} cells, {} nice, {} checked, {} counterexamples",
                s.cells, s.nice, s.checked, s.counterexamples
            );
            art.write_json("claims.json", &s)?;
        }
        if let Some(off) = &a.correlation {
            let v: Vec<i64> = parse_list(off, "offset")?;
            let [dm, dn] = v[..] else {
                return Err(CliError::Usage("offset must be `dm,dn`".into()));
            };
            if dn < 0 {
                return Err(CliError::Usage("level offset must be nonnegative".into()));
            }
            let r = grid_correlation(&g, &grid, params, (dm as isize, dn as usize), a.samples, a.seed.seed)?;
            eprintln!("correlation {} +- {} over {} pairs", r.correlation, r.stderr, r.pairs);
            art.write_json("correlation.json", &r)?;
        }
    }
    Ok(Some(a.seed.seed))
}

pub fn percolate(a: &PercolateArgs, art: &mut Artifacts) -> CliResult<Option<u64>> {
    let thetas: Vec<f64> = parse_list(&a.thetas, "theta")?;
    if thetas.is_empty() {
        return Err(CliError::Usage("no theta given".into()));
    }
    let w = a.width;
    let levels = a.k * w;
    let x = a.x.unwrap_or(2 * (w / 2));
    let y = a.y.unwrap_or(if (x + levels) % 2 == 0 { x } else { x + 1 });
    let ind = connect_indicators(w, &thetas, a.k, x, y, a.samples, a.seed.seed)?;
    // each sample uses one set of uniforms, so larger theta can only add paths
    let mut order: Vec<usize> = (0..thetas.len()).collect();
    order.sort_by(|&i, &j| thetas[i].total_cmp(&thetas[j]));
    let violations = ind.iter().filter(|s| order.windows(2).any(|p| s[p[0]] && !s[p[1]])).count();
    let b: Vec<usize> = match &a.b {
        Some(s) => parse_list(s, "site")?,
        None => LevelSet::full(w, 0).sites(),
    };
    let mut rows = Vec::new();
    for (i, &theta) in thetas.iter().enumerate() {
        let hits = ind.iter().filter(|s| s[i]).count() as u64;
        let e = Estimate::bernoulli(hits, a.samples as u64)?;
        rows.push(PercRow {
            width: w,
            theta,
            k: a.k,
            h: a.h,
            functional: format!("connect:{x}->{y}"),
            estimate: e.mean,
            stderr: e.stderr,
            n_samples: a.samples,
            seed: a.seed.seed,
        });
        let good = prob_good_level(w, theta, a.k, a.h, &b, a.samples, a.seed.seed)?;
        rows.push(PercRow {
            width: w,
            theta,
            k: a.k,
            h: a.h,
            functional: "good_level".into(),
            estimate: good.estimate.mean,
            stderr: good.estimate.stderr,
            n_samples: a.samples,
            seed: a.seed.seed,
        });
        if let Some(note) = good.note {
            eprintln!("theta {theta}: {note}");
        }
        if theta > 8.0 / 9.0 && theta < 1.0 && a.h > 0.0 && a.h < 1.0 && a.k >= 3 {
            let c = contour_bounds(w, theta, a.h, a.k)?;
            art.write_json(&format!("contour_theta_{theta}.json"), &c)?;
        } else {
            eprintln!("theta {theta}: contour bounds not evaluated (need theta in (8/9, 1), K >= 3)");
        }
    }
    eprintln!("monotonicity violations across shared uniforms: {violations}");
    art.table("perc.csv", &csv_bytes(|w| write_perc_csv(w, &rows))?)?;
    if violations > 0 {
        return Err(CliError::Usage(format!("{violations} samples violate monotonicity in theta")));
    }
    Ok(Some(a.seed.seed))
}

pub fn formulas(a: &FormulasArgs, art: &mut Artifacts) -> CliResult<Option<u64>> {
    bounds::check_pd(a.p, a.d)?;
    let rows = bounds::formula_table(a.p, a.d, !a.irregular);
    art.table("formulas.csv", &csv_bytes(|w| bounds::write_formula_csv(w, &rows))?)?;
    Ok(None)
}

pub fn q0(a: &Q0Args) -> CliResult<Option<u64>> {
    if a.d == 0 {
        return Err(CliError::Usage("d must be at least 1".into()));
    }
    let v = if a.precise { bounds::q0_dd(a.d).hi } else { bounds::q0(a.d) };
    println!("{v}");
    Ok(None)
}

pub fn theta(a: &ThetaArgs) -> CliResult<Option<u64>> {
    bounds::check_pd(a.p, a.d)?;
    if !(a.l > 0.0) {
        return Err(CliError::Usage(format!("L must be positive, got {}", a.l)));
    }
    println!("{}", bounds::theta_4block(a.l, a.p, a.d));
    Ok(None)
}

pub fn drift(a: &DriftArgs, art: &mut Artifacts) -> CliResult<Option<u64>> {
    let g = a.graph.build()?;
    let params = a.model.params()?;
    let q = params.q();
    let h = match a.h {
        Some(h) => h,
        None => choose_h(q, g.max_degree())?,
    };
    eprintln!("q = {q}, h = {h}");
    if let Some(bits) = &a.configuration {
        let c: Configuration = bits.parse()?;
        let r = exact_drift(&g, &c, params, h)?;
        println!("exact drift {} (n1 = {}, n2 = {})", r.drift, r.census.n1, r.census.n2);
        art.write_json("drift.json", &r)?;
        if let Some(steps) = a.mc_steps {
            let seed = a.seed.ok_or_else(|| CliError::Usage("--mc-steps needs --seed or BSLAB_SEED".into()))?;
            let e = mc_drift(&g, &c, params, h, steps, seed)?;
            println!("mc drift {} +- {}", e.mean, e.stderr);
            art.write_json("mc_drift.json", &e)?;
            return Ok(Some(seed));
        }
        return Ok(None);
    }
    let s = verify_all_bounds(&g, params, h)?;
    if let Some(w) = &s.warning {
        eprintln!("warning: {w}");
    }
    for c in &s.checks {
        println!(
            "{:<22} {:>8} checked {:>4} violations, min margin {}",
            c.name, c.checked, c.violations, c.min_margin
        );
    }
    println!("max drift {}, max conditional drift {}", s.max_drift, s.max_conditional_drift);
    println!("max |increment| {} (bound {})", s.max_abs_increment, s.increment_bound);
    let label = a.graph.graph.to_string();
    art.write("drift_scan.csv", &csv_bytes(|w| s.write_csv(w, &label))?)?;
    art.write_json("drift_summary.json", &s)?;
    Ok(None)
}

pub fn chains(a: &ChainsArgs) -> CliResult<Option<u64>> {
    let g = a.graph.build()?;
    if let Some(list) = &a.check {
        let v: Vec<usize> = parse_list(list, "vertex")?;
        check_chain(&g, &v).map_err(bslab_core::Error::NotAChain)?;
        println!("chain of {} vertices", v.len());
        return Ok(None);
    }
    let fmt = |c: &[usize]| c.iter().map(ToString::to_string).collect::<Vec<_>>().join(",");
    if let Some(len) = a.cover {
        let cover = chain_cover(&g, len, a.budget)?;
        for c in &cover.chains {
            println!("{}", fmt(c.vertices()));
        }
        eprintln!(
            "{} chains, complete: {}, uncovered: [{}]{}",
            cover.k(),
            cover.complete,
            fmt(&cover.uncovered),
            if cover.budget_exhausted { " (budget exhausted)" } else { "" }
        );
        return Ok(None);
    }
    let mode = match a.mode {
        ChainMode::Exact => SearchMode::Exact,
        ChainMode::Heuristic => SearchMode::Heuristic,
    };
    let s = longest_chain(&g, mode, a.anchor, a.budget)?;
    println!("{}", fmt(s.chain.vertices()));
    eprintln!("length {} ({})", s.chain.len(), if s.exact { "exact" } else { "lower bound" });
    Ok(None)
}
