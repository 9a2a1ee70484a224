use bslab_core::bounds;
use bslab_core::drift::{choose_h, exact_drift, mc_drift, verify_all_bounds};
use bslab_core::dynamics::{Configuration, ModelParams};
use bslab_core::graph::{generate, Family};
use proptest::prelude::*;

#[test]
fn torus_extinction_regime_passes_every_bound() {
    let g = generate(Family::Torus2d(3, 3), None).unwrap();
    let q = 0.15;
    let h = choose_h(q, 4).unwrap();
    let s = verify_all_bounds(&g, ModelParams::from_q(q).unwrap(), h).unwrap();
    assert!(s.regular && s.warning.is_none());
    for c in &s.checks {
        assert!(c.holds(), "{c:?}");
    }
    assert!(s.max_drift < 0.0 && s.max_conditional_drift < 0.0);
    assert!(s.max_abs_increment <= s.increment_bound);
    assert_eq!(s.rows.len(), (0..511u32).map(|i| 9 - i.count_ones() as usize).sum::<usize>());
}

#[test]
fn cycle_scan_up_to_the_critical_value() {
    let g = generate(Family::Cycle(8), None).unwrap();
    let q0 = bounds::q0(2);
    for q in [0.2, 0.34, 0.38, q0 - 1e-3] {
        let h = choose_h(q, 2).unwrap();
        let s = verify_all_bounds(&g, ModelParams::from_q(q).unwrap(), h).unwrap();
        assert!(s.all_hold(), "q {q}: {:?}", s.checks);
        assert!(s.max_drift < 0.0, "q {q}: drift {}", s.max_drift);
    }
}

#[test]
fn monte_carlo_spot_check() {
    let g = generate(Family::Cycle(8), None).unwrap();
    let q = 0.3;
    let h = choose_h(q, 2).unwrap();
    let p = ModelParams::from_q(q).unwrap();
    let c: Configuration = "00101101".parse().unwrap();
    let exact = exact_drift(&g, &c, p, h).unwrap();
    let mc = mc_drift(&g, &c, p, h, 1_000_000, 17).unwrap();
    assert!(mc.agrees_with(exact.drift, 4.0), "mc {} +- {} vs {}", mc.mean, mc.stderr, exact.drift);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn drift_is_affine_in_h(bits in 1u64..127, q in 0.05f64..0.95, h in 0.0f64..1.0) {
        let g = generate(Family::Cycle(7), None).unwrap();
        let p = ModelParams::from_q(q).unwrap();
        let c = Configuration::from_index(7, bits);
        let r = exact_drift(&g, &c, p, h).unwrap();
        prop_assert!((r.drift - (r.drift_n - h * r.drift_n2)).abs() < 1e-12);
        for s in &r.sites {
            let e = s.expected;
            let identity = e.x1 + (1.0 - h) * e.x2 + h * (e.z - e.z_rev) - (1.0 - h) * e.m as f64 - e.w;
            prop_assert!((identity - s.drift).abs() < 1e-12);
            prop_assert!((e.x1 + e.x2 - 3.0 * q).abs() < 1e-12);
        }
        prop_assert!(r.drift_n <= r.n_drift_bound + 1e-12);
    }
}
