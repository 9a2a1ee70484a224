use bslab_core::dynamics::{AllOnesRule, BsState, Configuration, ModelParams};
use bslab_core::exact::{balance_residual, stationary, TransitionModel};
use bslab_core::graph::{generate, Family};
use bslab_core::mc::{run, Functional, McConfig};
use bslab_core::rng::StreamKey;
use bslab_core::Flavor;
use rand::Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

#[test]
fn simulated_steps_follow_the_transition_rows() {
    let g = generate(Family::Cycle(4), None).unwrap();
    let params = ModelParams::new(0.4).unwrap();
    let tm = TransitionModel::build(&g, params, AllOnesRule::RingAnywhere).unwrap();
    let n_draws = 40_000usize;
    for s in 0..16u32 {
        let row = tm.row(s);
        let mut counts = [0usize; 16];
        let mut rng = StreamKey::new(11, u64::from(s)).driver();
        for _ in 0..n_draws {
            let mut st = BsState::new(Configuration::from_index(4, u64::from(s)));
            st.step_embedded(&g, params, AllOnesRule::RingAnywhere, &mut rng).unwrap();
            counts[st.config().to_index() as usize] += 1;
        }
        let mut chi2 = 0.0;
        let mut cells = 0;
        for (t, c) in counts.iter().enumerate() {
            let p: f64 = row.iter().filter(|(u, _)| *u as usize == t).map(|(_, w)| w).sum();
            if p == 0.0 {
                assert_eq!(*c, 0, "state {s} reached impossible state {t}");
                continue;
            }
            let e = p * n_draws as f64;
            chi2 += (*c as f64 - e).powi(2) / e;
            cells += 1;
        }
        let pval = 1.0 - ChiSquared::new((cells - 1) as f64).unwrap().cdf(chi2);
        assert!(pval > 1e-4, "state {s}: chi2 {chi2:.2} over {cells} cells, p-value {pval:.2e}");
    }
}

#[test]
fn both_flavours_match_their_exact_laws() {
    let g = generate(Family::Cycle(6), None).unwrap();
    let params = ModelParams::new(0.5).unwrap();
    let tm = TransitionModel::build(&g, params, AllOnesRule::RingAnywhere).unwrap();
    for (flavor, budget) in [(Flavor::Embedded, 400_000.0), (Flavor::Continuous, 70_000.0)] {
        let sd = stationary(&tm, flavor).unwrap();
        let cfg = McConfig::new(flavor, budget, 4, 5);
        let mc = run(&g, params, &cfg, &[0, 3]).unwrap();
        for f in [Functional::Density, Functional::Marginal(0), Functional::Marginal(3), Functional::ZerosAbove(1)] {
            let e = mc.estimate(f).unwrap();
            let exact = f.exact(&sd);
            assert!(e.agrees_with(exact, 4.0), "{flavor:?} {f}: mc {} +- {} vs exact {exact}", e.mean, e.stderr);
        }
    }
}

#[test]
fn stationary_flux_balances_across_random_cuts() {
    let g = generate(Family::Cycle(5), None).unwrap();
    let params = ModelParams::new(0.45).unwrap();
    let tm = TransitionModel::build(&g, params, AllOnesRule::RingAnywhere).unwrap();
    let emb = stationary(&tm, Flavor::Embedded).unwrap();
    let cont = stationary(&tm, Flavor::Continuous).unwrap();
    let mut rng = StreamKey::new(3, 0).driver();
    for i in 0..100 {
        let mask: u32 = rng.random();
        let a = |s: u32| mask >> s & 1 == 1;
        let (sd, t) = if i % 2 == 0 {
            (&emb, f64::from(rng.random_range(1..6u32)))
        } else {
            (&cont, rng.random_range(0.05..4.0))
        };
        let b = balance_residual(&tm, sd, a, t).unwrap();
        assert!(b.residual < 1e-10, "cut {mask:#x}, t {t}: {b:?}");
    }
}
