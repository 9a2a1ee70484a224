//! Simulation and verification tools for the discrete Bak-Sneppen model on
//! finite graphs.
//!
//! The crate is organised around the objects the model is analysed with:
//!
//! * [`graph`]: finite simple graphs, standard families and chains
//!   (self-avoiding paths whose far-apart neighbourhoods are disjoint).
//! * [`dynamics`]: the discrete chain, the continuous-time Poisson-clock
//!   process with its graphical construction, and the classical
//!   continuous-fitness model.
//! * [`exact`]: the full `2^N` transition kernel, stationary distributions,
//!   flux balance and the escape/entry bound on `pi(A)`.
//! * [`mc`]: batch-means Monte Carlo estimates of stationary functionals.
//! * [`blocks`]: sticks, 2-blocks, 4-blocks and the induced oriented
//!   percolation field.
//! * [`percolation`]: oriented bond percolation on a strip.
//! * [`bounds`]: closed-form lower bounds, optimal window lengths and the
//!   extinction threshold `q0(d)`.
//! * [`drift`]: exact one-step Lyapunov drift of the typed-particle census.
//!
//! Randomness is drawn from counter-based streams ([`rng`]) so that every
//! replica and every vertex clock is a pure function of the master seed.

pub mod blocks;
pub mod bounds;
pub mod drift;
pub mod dynamics;
pub mod error;
pub mod exact;
pub mod graph;
pub mod mc;
pub mod percolation;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};

/// Which stationary law a quantity refers to.
///
/// `Embedded` is the jump chain (the discrete-time model), `Continuous` the
/// Poisson-clock process, whose law weights each state by its mean holding
/// time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Flavor {
    Embedded,
    Continuous,
}

impl std::fmt::Display for Flavor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Flavor::Embedded => f.write_str("embedded"),
            Flavor::Continuous => f.write_str("continuous"),
        }
    }
}

impl std::str::FromStr for Flavor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "embedded" | "discrete" => Ok(Flavor::Embedded),
            "continuous" => Ok(Flavor::Continuous),
            other => Err(Error::Parse(format!("unknown flavor `{other}`"))),
        }
    }
}
