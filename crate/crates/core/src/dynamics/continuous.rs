//! Event-driven continuous-time simulation.
//!
//! The superposition of the `N` rate-one clocks is a rate-`N` Poisson
//! process whose rings land on uniformly chosen vertices, so the process can
//! be run without materialising the whole graphical construction.

use rand::Rng;
use rand_distr::{Distribution, Exp1};

use super::graphical::EventRecord;
use super::{check_mark_capacity, sample_marks, AllOnesRule, BsState, Configuration, ModelParams};
use crate::graph::Graph;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EventStats {
    pub rings: u64,
    pub applied: u64,
    pub muted: u64,
    /// Time spent with exactly `z` zeros, indexed by `z`.
    pub time_by_zeros: Vec<f64>,
    /// Applied events fired from a configuration with `z` zeros.
    pub applied_by_zeros: Vec<u64>,
}

impl EventStats {
    /// Empirical rate of applied events out of configurations with `z` zeros.
    pub fn jump_rate(&self, z: usize) -> Option<f64> {
        let t = *self.time_by_zeros.get(z)?;
        (t > 0.0).then(|| self.applied_by_zeros[z] as f64 / t)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousRun {
    pub final_config: Configuration,
    pub stats: EventStats,
}

pub fn simulate_continuous<R: Rng + ?Sized>(
    g: &Graph,
    config0: &Configuration,
    params: ModelParams,
    horizon: f64,
    rule: AllOnesRule,
    rng: &mut R,
) -> Result<ContinuousRun> {
    simulate_continuous_observed(g, config0, params, horizon, rule, rng, |_, _| {})
}

/// As [`simulate_continuous`], calling `observe` after every ring with the
/// ring and the configuration it left behind.
pub fn simulate_continuous_observed<R: Rng + ?Sized>(
    g: &Graph,
    config0: &Configuration,
    params: ModelParams,
    horizon: f64,
    rule: AllOnesRule,
    rng: &mut R,
    mut observe: impl FnMut(&EventRecord, &Configuration),
) -> Result<ContinuousRun> {
    config0.check_graph(g)?;
    check_mark_capacity(g)?;
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidParameter(format!("horizon must be nonnegative, got {horizon}")));
    }
    let n = g.num_vertices();
    let mut state = BsState::new(config0.clone());
    let mut stats = EventStats {
        time_by_zeros: vec![0.0; n + 1],
        applied_by_zeros: vec![0; n + 1],
        ..EventStats::default()
    };
    let ring_rate = n as f64;
    let mut t = 0.0;
    loop {
        let e: f64 = Exp1.sample(rng);
        let dt = e / ring_rate;
        let z = state.num_zeros();
        if t + dt > horizon {
            stats.time_by_zeros[z] += horizon - t;
            break;
        }
        t += dt;
        stats.time_by_zeros[z] += dt;
        stats.rings += 1;
        let x = rng.random_range(0..n);
        let applies = state.get(x) == 0 || (z == 0 && rule == AllOnesRule::RingAnywhere);
        let mut record = EventRecord { time: t, vertex: x, applied: applies, marks: 0 };
        if applies {
            record.marks = sample_marks(g, x, params, rng);
            state.apply_marks(g, x, record.marks);
            stats.applied += 1;
            stats.applied_by_zeros[z] += 1;
        } else {
            stats.muted += 1;
        }
        observe(&record, state.config());
    }
    Ok(ContinuousRun { final_config: state.into_config(), stats })
}
