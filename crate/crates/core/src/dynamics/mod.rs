//! Bak-Sneppen dynamics with 0/1 fitness.
//!
//! In the discrete model a zero is chosen uniformly (any vertex when there
//! are no zeros) and its closed neighbourhood is resampled i.i.d.
//! Bernoulli(p). In continuous time every vertex carries a rate-one clock;
//! a ring at a zero resamples the neighbourhood and a ring at a one is muted.

mod classical;
mod continuous;
mod graphical;

pub use classical::{apply_classical_update, classical_step, FitnessVector};
pub use continuous::{simulate_continuous, simulate_continuous_observed, ContinuousRun, EventStats};
pub use graphical::{
    event_log_csv, replay, replay_snapshots, sample_graphical, EventRecord, GraphicalConstruction,
    Replay, Ring,
};

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::graph::Graph;
use crate::{Error, Result};

/// Largest closed neighbourhood whose marks fit in a `u64` mask.
pub const MAX_CLOSED_NEIGHBOURHOOD: usize = 64;

/// Bernoulli parameter of the resampled fitness; `q = 1 - p` is the
/// probability of a zero.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ModelParams {
    p: f64,
}

impl ModelParams {
    pub fn new(p: f64) -> Result<Self> {
        if p > 0.0 && p < 1.0 {
            Ok(Self { p })
        } else {
            Err(Error::InvalidParameter(format!("p must lie in (0, 1), got {p}")))
        }
    }

    pub fn from_q(q: f64) -> Result<Self> {
        Self::new(1.0 - q)
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        1.0 - self.p
    }
}

/// What a continuous-time ring does when the configuration is all ones.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AllOnesRule {
    /// Any ring resamples the ringing vertex's neighbourhood, so the jump
    /// chain picks a uniform vertex exactly as the discrete model does.
    #[default]
    RingAnywhere,
    /// Every ring at a one is muted; all-ones is absorbing.
    Absorbing,
}

impl FromStr for AllOnesRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ring_anywhere" | "ring-anywhere" => Ok(Self::RingAnywhere),
            "absorbing" => Ok(Self::Absorbing),
            other => Err(Error::Parse(format!("unknown all-ones rule `{other}`"))),
        }
    }
}

impl fmt::Display for AllOnesRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::RingAnywhere => "ring_anywhere",
            Self::Absorbing => "absorbing",
        })
    }
}

/// One fitness bit per vertex.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Configuration(Vec<u8>);

impl Configuration {
    pub fn all_ones(n: usize) -> Self {
        Self(vec![1; n])
    }

    pub fn all_zeros(n: usize) -> Self {
        Self(vec![0; n])
    }

    pub fn from_bits(bits: Vec<u8>) -> Result<Self> {
        if let Some(b) = bits.iter().find(|&&b| b > 1) {
            return Err(Error::InvalidParameter(format!("fitness bit must be 0 or 1, got {b}")));
        }
        Ok(Self(bits))
    }

    /// Product Bernoulli(p) configuration.
    pub fn random<R: Rng + ?Sized>(n: usize, params: ModelParams, rng: &mut R) -> Self {
        Self((0..n).map(|_| rng.random_bool(params.p()) as u8).collect())
    }

    /// Configuration whose bit `x` is bit `x` of `index`.
    pub fn from_index(n: usize, index: u64) -> Self {
        Self((0..n).map(|x| ((index >> x) & 1) as u8).collect())
    }

    pub fn to_index(&self) -> u64 {
        assert!(self.0.len() <= 64, "index form needs at most 64 vertices");
        self.0.iter().enumerate().fold(0, |acc, (x, &b)| acc | (u64::from(b) << x))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[u8] {
        &self.0
    }

    pub fn get(&self, x: usize) -> u8 {
        self.0[x]
    }

    pub fn set(&mut self, x: usize, bit: u8) {
        debug_assert!(bit <= 1);
        self.0[x] = bit;
    }

    pub fn num_ones(&self) -> usize {
        self.0.iter().filter(|&&b| b == 1).count()
    }

    pub fn num_zeros(&self) -> usize {
        self.len() - self.num_ones()
    }

    /// Proportion of ones.
    pub fn density(&self) -> f64 {
        self.num_ones() as f64 / self.len() as f64
    }

    pub fn zeros(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().filter(|(_, &b)| b == 0).map(|(x, _)| x)
    }

    pub fn check_graph(&self, g: &Graph) -> Result<()> {
        if self.len() == g.num_vertices() {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "configuration has {} sites but the graph has {} vertices",
                self.len(),
                g.num_vertices()
            )))
        }
    }

    /// Overwrites the closed neighbourhood of `v` with `marks` (bit `i` of
    /// the mask goes to the `i`-th vertex of the sorted neighbourhood).
    pub fn apply_marks(&mut self, g: &Graph, v: usize, marks: u64) {
        for (i, &u) in g.closed(v).iter().enumerate() {
            self.0[u] = ((marks >> i) & 1) as u8;
        }
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b == 1 { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for Configuration {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.trim_end_matches(['\n', '\r'])
            .chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                other => Err(Error::Parse(format!("unexpected character `{other}` in configuration"))),
            })
            .collect::<Result<Vec<u8>>>()
            .map(Self)
    }
}

/// Draws Bernoulli(p) proposals for the closed neighbourhood of `v`.
pub fn sample_marks<R: Rng + ?Sized>(g: &Graph, v: usize, params: ModelParams, rng: &mut R) -> u64 {
    (0..g.closed(v).len()).fold(0, |acc, i| acc | (u64::from(rng.random_bool(params.p())) << i))
}

pub(crate) fn check_mark_capacity(g: &Graph) -> Result<()> {
    if g.max_degree() < MAX_CLOSED_NEIGHBOURHOOD {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "max degree {} exceeds the supported {}",
            g.max_degree(),
            MAX_CLOSED_NEIGHBOURHOOD - 1
        )))
    }
}

/// One step of the discrete model; returns the updated vertex.
pub fn step_discrete<R: Rng + ?Sized>(
    g: &Graph,
    config: &mut Configuration,
    params: ModelParams,
    rng: &mut R,
) -> usize {
    let zeros: Vec<usize> = config.zeros().collect();
    let v = if zeros.is_empty() {
        rng.random_range(0..g.num_vertices())
    } else {
        zeros[rng.random_range(0..zeros.len())]
    };
    let marks = sample_marks(g, v, params, rng);
    config.apply_marks(g, v, marks);
    v
}

/// A configuration together with an index of its zeros, for O(1) uniform
/// choice of the updated site.
#[derive(Debug, Clone)]
pub struct BsState {
    config: Configuration,
    zeros: Vec<usize>,
    slot: Vec<usize>,
}

const NO_SLOT: usize = usize::MAX;

impl BsState {
    pub fn new(config: Configuration) -> Self {
        let mut slot = vec![NO_SLOT; config.len()];
        let zeros: Vec<usize> = config.zeros().collect();
        for (i, &x) in zeros.iter().enumerate() {
            slot[x] = i;
        }
        Self { config, zeros, slot }
    }

    pub fn config(&self) -> &Configuration {
        &self.config
    }

    pub fn into_config(self) -> Configuration {
        self.config
    }

    pub fn num_zeros(&self) -> usize {
        self.zeros.len()
    }

    pub fn get(&self, x: usize) -> u8 {
        self.config.get(x)
    }

    fn set(&mut self, x: usize, bit: u8) {
        let old = self.config.get(x);
        if old == bit {
            return;
        }
        self.config.set(x, bit);
        if bit == 0 {
            self.slot[x] = self.zeros.len();
            self.zeros.push(x);
        } else {
            let i = std::mem::replace(&mut self.slot[x], NO_SLOT);
            self.zeros.swap_remove(i);
            if let Some(&moved) = self.zeros.get(i) {
                self.slot[moved] = i;
            }
        }
    }

    pub fn apply_marks(&mut self, g: &Graph, v: usize, marks: u64) {
        for (i, &u) in g.closed(v).iter().enumerate() {
            self.set(u, ((marks >> i) & 1) as u8);
        }
    }

    /// Total rate of applied rings in continuous time.
    pub fn exit_rate(&self, rule: AllOnesRule) -> f64 {
        match (self.zeros.len(), rule) {
            (0, AllOnesRule::RingAnywhere) => self.config.len() as f64,
            (0, AllOnesRule::Absorbing) => 0.0,
            (z, _) => z as f64,
        }
    }

    /// The vertex whose neighbourhood the next applied event resamples.
    pub fn choose_site<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        if self.zeros.is_empty() {
            rng.random_range(0..self.config.len())
        } else {
            self.zeros[rng.random_range(0..self.zeros.len())]
        }
    }

    /// One step of the discrete (embedded) chain. Returns `None` when the
    /// all-ones state is absorbing.
    pub fn step_embedded<R: Rng + ?Sized>(
        &mut self,
        g: &Graph,
        params: ModelParams,
        rule: AllOnesRule,
        rng: &mut R,
    ) -> Option<usize> {
        if self.zeros.is_empty() && rule == AllOnesRule::Absorbing {
            return None;
        }
        let v = self.choose_site(rng);
        let marks = sample_marks(g, v, params, rng);
        self.apply_marks(g, v, marks);
        Some(v)
    }

    /// Holding time and next applied event of the continuous-time process,
    /// skipping muted rings. `None` when absorbed.
    pub fn step_jump<R: Rng + ?Sized>(
        &mut self,
        g: &Graph,
        params: ModelParams,
        rule: AllOnesRule,
        rng: &mut R,
    ) -> Option<(f64, usize)> {
        let rate = self.exit_rate(rule);
        if rate == 0.0 {
            return None;
        }
        let e: f64 = Exp1.sample(rng);
        let v = self.step_embedded(g, params, rule, rng)?;
        Some((e / rate, v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate, Family};
    use crate::rng::stream;

    #[test]
    fn params_validate() {
        assert!(ModelParams::new(0.0).is_err());
        assert!(ModelParams::new(1.0).is_err());
        let m = ModelParams::new(0.3).unwrap();
        assert_eq!(m.q(), 1.0 - 0.3);
    }

    #[test]
    fn configuration_text_format() {
        let c: Configuration = "01101\n".parse().unwrap();
        assert_eq!(c.bits(), &[0, 1, 1, 0, 1]);
        assert_eq!(c.to_string(), "01101");
        assert_eq!(c.num_zeros(), 2);
        assert!("01a".parse::<Configuration>().is_err());
        assert_eq!(Configuration::from_index(5, c.to_index()), c);
    }

    #[test]
    fn triangle_step_resamples_everything_from_the_unique_zero() {
        let g = Graph::from_edges(3, &[(0, 1), (1, 2), (2, 0)]).unwrap();
        let params = ModelParams::new(0.5).unwrap();
        let mut rng = stream(1, 0, 0);
        let mut counts = [0usize; 8];
        for _ in 0..8000 {
            let mut c: Configuration = "011".parse().unwrap();
            assert_eq!(step_discrete(&g, &mut c, params, &mut rng), 0);
            counts[c.to_index() as usize] += 1;
        }
        // every one of the 8 outcomes is reachable with probability 1/8
        assert!(counts.iter().all(|&n| (800..1200).contains(&n)), "{counts:?}");
    }

    #[test]
    fn all_ones_picks_uniform_vertex() {
        let g = generate(Family::Cycle(5), None).unwrap();
        let params = ModelParams::new(0.5).unwrap();
        let mut rng = stream(2, 0, 0);
        let mut hits = [0usize; 5];
        for _ in 0..5000 {
            let mut c = Configuration::all_ones(5);
            let v = step_discrete(&g, &mut c, params, &mut rng);
            hits[v] += 1;
            assert!(c.zeros().all(|x| g.closed(v).contains(&x)));
        }
        assert!(hits.iter().all(|&h| (850..1150).contains(&h)), "{hits:?}");
    }

    #[test]
    fn forced_one_marks_drive_to_all_ones() {
        let g = generate(Family::Cycle(6), None).unwrap();
        let mut state = BsState::new("010010".parse().unwrap());
        let mut rng = stream(3, 0, 0);
        while state.num_zeros() > 0 {
            let v = state.choose_site(&mut rng);
            state.apply_marks(&g, v, u64::MAX);
        }
        assert_eq!(state.config(), &Configuration::all_ones(6));
    }

    #[test]
    fn zero_index_tracks_configuration() {
        let g = generate(Family::Torus2d(3, 4), None).unwrap();
        let params = ModelParams::new(0.4).unwrap();
        let mut rng = stream(4, 0, 0);
        let mut state = BsState::new(Configuration::random(12, params, &mut rng));
        for _ in 0..2000 {
            state.step_embedded(&g, params, AllOnesRule::RingAnywhere, &mut rng);
            let mut zs: Vec<usize> = state.zeros.clone();
            zs.sort_unstable();
            assert_eq!(zs, state.config().zeros().collect::<Vec<_>>());
            for (i, &x) in state.zeros.iter().enumerate() {
                assert_eq!(state.slot[x], i);
            }
        }
    }

    #[test]
    fn absorbing_rule_stops_at_all_ones() {
        let g = generate(Family::Cycle(4), None).unwrap();
        let params = ModelParams::new(0.5).unwrap();
        let mut rng = stream(5, 0, 0);
        let mut state = BsState::new(Configuration::all_ones(4));
        assert_eq!(state.exit_rate(AllOnesRule::Absorbing), 0.0);
        assert!(state.step_jump(&g, params, AllOnesRule::Absorbing, &mut rng).is_none());
        assert_eq!(state.exit_rate(AllOnesRule::RingAnywhere), 4.0);
        assert!(state.step_jump(&g, params, AllOnesRule::RingAnywhere, &mut rng).is_some());
    }
}
