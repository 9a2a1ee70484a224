use bslab_core::blocks::{stick_is_good, window_is_good, Stick};
use bslab_core::dynamics::{sample_graphical, ModelParams};
use bslab_core::graph::{generate, Family};
use bslab_core::rng::StreamKey;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn goodness_is_monotone_in_the_protected_set(
        seed in any::<u64>(), x in 0usize..6, a in 0u8..8, b in 0u8..8, p in 0.05f64..0.95, l in 0.2f64..3.0,
    ) {
        let g = generate(Family::Cycle(6), None).unwrap();
        let gc = sample_graphical(&g, ModelParams::new(p).unwrap(), 3.0 * l, StreamKey::new(seed, 0)).unwrap();
        let closed = g.closed(x);
        let pick = |m: u8| closed.iter().enumerate().filter(|(i, _)| m >> i & 1 == 1).map(|(_, &v)| v).collect::<Vec<_>>();
        let (small, big) = (pick(a & b), pick(a));
        for level in 1..=3 {
            let stick = Stick { base: x, level, l };
            if stick_is_good(&g, &gc, &stick, &big).unwrap() {
                prop_assert!(stick_is_good(&g, &gc, &stick, &small).unwrap());
            }
        }
        prop_assert!(window_is_good(&g, &gc, x, 0.0, 3.0 * l, &[]).unwrap());
    }
}
