//! Graphical construction: per-vertex marked Poisson clocks and the
//! deterministic replay of the process from them.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use rand_distr::{Distribution, Exp1};

use super::{check_mark_capacity, sample_marks, AllOnesRule, Configuration, ModelParams};
use crate::graph::Graph;
use crate::rng::StreamKey;
use crate::{Error, Result};

/// One clock ring: its time and the proposed bits for the ringing vertex's
/// closed neighbourhood (bit `i` for the `i`-th vertex in sorted order).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ring {
    pub time: f64,
    pub marks: u64,
}

/// Marked Poisson clocks on `(0, horizon]`, one list per vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphicalConstruction {
    horizon: f64,
    rings: Vec<Vec<Ring>>,
}

impl GraphicalConstruction {
    /// Validates hand-built clocks: times strictly increasing within
    /// `(0, horizon]`, marks confined to the closed neighbourhood.
    pub fn from_rings(g: &Graph, horizon: f64, rings: Vec<Vec<Ring>>) -> Result<Self> {
        check_horizon(horizon)?;
        check_mark_capacity(g)?;
        if rings.len() != g.num_vertices() {
            return Err(Error::InvalidParameter(format!(
                "{} ring lists for {} vertices",
                rings.len(),
                g.num_vertices()
            )));
        }
        for (x, list) in rings.iter().enumerate() {
            let width = g.closed(x).len();
            let mut prev = 0.0;
            for r in list {
                if !(r.time > prev && r.time <= horizon) {
                    return Err(Error::InvalidParameter(format!(
                        "ring times at vertex {x} must increase within (0, {horizon}]"
                    )));
                }
                if width < 64 && r.marks >> width != 0 {
                    return Err(Error::InvalidParameter(format!(
                        "marks at vertex {x} exceed its closed neighbourhood"
                    )));
                }
                prev = r.time;
            }
        }
        Ok(Self { horizon, rings })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn rings(&self, x: usize) -> &[Ring] {
        &self.rings[x]
    }

    /// Rings of vertex `x` with time in `(start, end]`.
    pub fn rings_in(&self, x: usize, start: f64, end: f64) -> &[Ring] {
        let list = &self.rings[x];
        let lo = list.partition_point(|r| r.time <= start);
        let hi = list.partition_point(|r| r.time <= end);
        &list[lo..hi.max(lo)]
    }

    pub fn total_rings(&self) -> usize {
        self.rings.iter().map(Vec::len).sum()
    }

    pub fn num_vertices(&self) -> usize {
        self.rings.len()
    }

    /// Visits every ring in global time order, failing on tied times.
    fn for_each_in_order(&self, mut visit: impl FnMut(usize, &Ring)) -> Result<()> {
        let mut heap: BinaryHeap<Reverse<(TimeKey, usize)>> = self
            .rings
            .iter()
            .enumerate()
            .filter_map(|(x, l)| l.first().map(|r| Reverse((TimeKey(r.time), x))))
            .collect();
        let mut next = vec![0usize; self.rings.len()];
        let mut last: Option<f64> = None;
        while let Some(Reverse((TimeKey(t), x))) = heap.pop() {
            if last == Some(t) {
                return Err(Error::TiedEvents(t));
            }
            last = Some(t);
            let ring = &self.rings[x][next[x]];
            visit(x, ring);
            next[x] += 1;
            if let Some(r) = self.rings[x].get(next[x]) {
                heap.push(Reverse((TimeKey(r.time), x)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct TimeKey(f64);

impl Eq for TimeKey {}

impl PartialOrd for TimeKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for TimeKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

fn check_horizon(horizon: f64) -> Result<()> {
    if horizon > 0.0 && horizon.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("horizon must be positive and finite, got {horizon}")))
    }
}

/// Samples rate-one marked clocks on `(0, horizon]`. The clock of vertex `x`
/// is drawn from stream lane `x` of `key`.
pub fn sample_graphical(
    g: &Graph,
    params: ModelParams,
    horizon: f64,
    key: StreamKey,
) -> Result<GraphicalConstruction> {
    check_horizon(horizon)?;
    check_mark_capacity(g)?;
    let rings = (0..g.num_vertices())
        .map(|x| {
            let mut rng = key.lane(x as u64);
            let mut list = Vec::new();
            let mut t = 0.0;
            loop {
                let e: f64 = Exp1.sample(&mut rng);
                t += e;
                if t > horizon {
                    break;
                }
                list.push(Ring { time: t, marks: sample_marks(g, x, params, &mut rng) });
            }
            list
        })
        .collect();
    let gc = GraphicalConstruction { horizon, rings };
    // ties have probability zero; reject rather than break them silently
    gc.for_each_in_order(|_, _| {})?;
    Ok(gc)
}

/// One ring as seen during replay.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventRecord {
    pub time: f64,
    pub vertex: usize,
    pub applied: bool,
    pub marks: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Replay {
    pub final_config: Configuration,
    pub log: Vec<EventRecord>,
}

impl Replay {
    pub fn applied_events(&self) -> usize {
        self.log.iter().filter(|e| e.applied).count()
    }
}

fn ring_applies(config: &Configuration, zeros: usize, x: usize, rule: AllOnesRule) -> bool {
    config.get(x) == 0 || (zeros == 0 && rule == AllOnesRule::RingAnywhere)
}

fn check_inputs(g: &Graph, config0: &Configuration, gc: &GraphicalConstruction) -> Result<()> {
    config0.check_graph(g)?;
    if gc.num_vertices() != g.num_vertices() {
        return Err(Error::InvalidParameter("graphical construction built on another graph".into()));
    }
    Ok(())
}

/// Replays the process from `config0` through every ring of `gc`.
pub fn replay(
    g: &Graph,
    config0: &Configuration,
    gc: &GraphicalConstruction,
    rule: AllOnesRule,
) -> Result<Replay> {
    check_inputs(g, config0, gc)?;
    let mut config = config0.clone();
    let mut zeros = config.num_zeros();
    let mut log = Vec::with_capacity(gc.total_rings());
    gc.for_each_in_order(|x, ring| {
        let applied = ring_applies(&config, zeros, x, rule);
        if applied {
            for (i, &u) in g.closed(x).iter().enumerate() {
                let bit = ((ring.marks >> i) & 1) as u8;
                if config.get(u) != bit {
                    if bit == 0 {
                        zeros += 1;
                    } else {
                        zeros -= 1;
                    }
                    config.set(u, bit);
                }
            }
        }
        log.push(EventRecord { time: ring.time, vertex: x, applied, marks: ring.marks });
    })?;
    Ok(Replay { final_config: config, log })
}

/// Configurations at each of the nondecreasing `times` (events at exactly
/// time `t` are included in the snapshot at `t`).
pub fn replay_snapshots(
    g: &Graph,
    config0: &Configuration,
    gc: &GraphicalConstruction,
    rule: AllOnesRule,
    times: &[f64],
) -> Result<Vec<Configuration>> {
    check_inputs(g, config0, gc)?;
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParameter("snapshot times must be nondecreasing".into()));
    }
    let mut config = config0.clone();
    let mut zeros = config.num_zeros();
    let mut snaps = Vec::with_capacity(times.len());
    let mut pending = times.iter().peekable();
    gc.for_each_in_order(|x, ring| {
        while let Some(&&t) = pending.peek() {
            if t < ring.time {
                snaps.push(config.clone());
                pending.next();
            } else {
                break;
            }
        }
        if ring_applies(&config, zeros, x, rule) {
            config.apply_marks(g, x, ring.marks);
            zeros = config.num_zeros();
        }
    })?;
    snaps.extend(pending.map(|_| config.clone()));
    Ok(snaps)
}

/// Event log as CSV: `time,vertex,applied,marks`, marks as a bitstring over
/// the closed neighbourhood in sorted-id order.
pub fn event_log_csv(g: &Graph, log: &[EventRecord]) -> String {
    let mut out = String::from("time,vertex,applied,marks\n");
    for e in log {
        let marks: String = (0..g.closed(e.vertex).len())
            .map(|i| if (e.marks >> i) & 1 == 1 { '1' } else { '0' })
            .collect();
        out.push_str(&format!("{},{},{},{}\n", e.time, e.vertex, u8::from(e.applied), marks));
    }
    out
}
