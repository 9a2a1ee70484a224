//! Oriented bond percolation on the strip `0 <= m <= 2N`.
//!
//! Sites are the points `(m, n)` with `m + n` even. Site `(m, n)` has bonds
//! to `(m - 1, n + 1)` and `(m + 1, n + 1)`; bonds that would leave the strip
//! do not exist. Within level `n` the sites are indexed by
//! `i = (m - n mod 2) / 2`.

use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::rng::StreamKey;
use crate::stats::Estimate;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Dir {
    Left,
    Right,
}

/// Horizontal coordinates of level `n` in a strip of width parameter `n_w`.
pub fn level_sites(n_w: usize, level: usize) -> impl Iterator<Item = usize> {
    ((level % 2)..=2 * n_w).step_by(2)
}

/// `|H_n|`: `N + 1` on even levels, `N` on odd ones.
pub fn level_size(n_w: usize, level: usize) -> usize {
    if level % 2 == 0 {
        n_w + 1
    } else {
        n_w
    }
}

fn bond_exists(n_w: usize, m: usize, dir: Dir) -> bool {
    match dir {
        Dir::Left => m >= 1,
        Dir::Right => m < 2 * n_w,
    }
}

/// Open/closed state of every bond between levels `0..=levels`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StripField {
    width: usize,
    levels: usize,
    /// `open[n][i]`: bit 0 = left bond, bit 1 = right bond of site `i` at
    /// level `n`, for `n < levels`.
    open: Vec<Vec<u8>>,
}

impl StripField {
    /// Field whose bond `(m, n, dir)` is open iff `is_open(m, n, dir)`;
    /// only existing bonds are queried.
    pub fn from_fn(width: usize, levels: usize, mut is_open: impl FnMut(usize, usize, Dir) -> bool) -> Result<Self> {
        if width == 0 || levels == 0 {
            return Err(Error::InvalidParameter("strip needs N >= 1 and at least one level".into()));
        }
        let open = (0..levels)
            .map(|n| {
                level_sites(width, n)
                    .map(|m| {
                        let mut bits = 0u8;
                        for (b, dir) in [(1u8, Dir::Left), (2u8, Dir::Right)] {
                            if bond_exists(width, m, dir) && is_open(m, n, dir) {
                                bits |= b;
                            }
                        }
                        bits
                    })
                    .collect()
            })
            .collect();
        Ok(Self { width, levels, open })
    }

    /// Every existing bond as `(m, n, dir)`, level by level, left to right.
    pub fn bonds(width: usize, levels: usize) -> Vec<(usize, usize, Dir)> {
        (0..levels)
            .flat_map(|n| {
                level_sites(width, n).flat_map(move |m| {
                    [Dir::Left, Dir::Right].into_iter().filter(move |&d| bond_exists(width, m, d)).map(move |d| (m, n, d))
                })
            })
            .collect()
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn is_open(&self, m: usize, n: usize, dir: Dir) -> bool {
        let bit = match dir {
            Dir::Left => 1,
            Dir::Right => 2,
        };
        self.open[n][m / 2] & bit != 0
    }

    /// Fraction of existing bonds that are open.
    pub fn open_fraction(&self) -> f64 {
        let all = Self::bonds(self.width, self.levels);
        let open = all.iter().filter(|&&(m, n, d)| self.is_open(m, n, d)).count();
        open as f64 / all.len() as f64
    }
}

/// One uniform per bond slot, so that thresholding at increasing `theta`
/// gives monotonically coupled fields.
#[derive(Debug, Clone)]
pub struct StripUniforms {
    width: usize,
    levels: usize,
    u: Vec<Vec<[f64; 2]>>,
}

impl StripUniforms {
    pub fn sample<R: Rng + ?Sized>(width: usize, levels: usize, rng: &mut R) -> Self {
        let u = (0..levels)
            .map(|n| (0..level_size(width, n)).map(|_| [rng.random::<f64>(), rng.random::<f64>()]).collect())
            .collect();
        Self { width, levels, u }
    }

    /// Bond open iff its uniform is below `theta`.
    pub fn threshold(&self, theta: f64) -> Result<StripField> {
        StripField::from_fn(self.width, self.levels, |m, n, d| self.u[n][m / 2][d as usize] < theta)
    }
}

pub fn sample_strip<R: Rng + ?Sized>(width: usize, theta: f64, levels: usize, rng: &mut R) -> Result<StripField> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::InvalidParameter(format!("theta = {theta} must lie in [0, 1]")));
    }
    StripUniforms::sample(width, levels, rng).threshold(theta)
}

/// A subset of one level, indexed by position within the level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelSet {
    pub level: usize,
    members: Vec<bool>,
}

impl LevelSet {
    pub fn empty(width: usize, level: usize) -> Self {
        Self { level, members: vec![false; level_size(width, level)] }
    }

    pub fn full(width: usize, level: usize) -> Self {
        Self { level, members: vec![true; level_size(width, level)] }
    }

    /// From horizontal coordinates; each must be a site of the level.
    pub fn from_sites(width: usize, level: usize, sites: &[usize]) -> Result<Self> {
        let mut s = Self::empty(width, level);
        for &m in sites {
            if m > 2 * width || (m + level) % 2 != 0 {
                return Err(Error::InvalidParameter(format!("({m}, {level}) is not a strip site")));
            }
            s.members[m / 2] = true;
        }
        Ok(s)
    }

    pub fn contains(&self, m: usize) -> bool {
        (m + self.level) % 2 == 0 && self.members.get(m / 2).copied().unwrap_or(false)
    }

    pub fn len(&self) -> usize {
        self.members.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Horizontal coordinates of the members.
    pub fn sites(&self) -> Vec<usize> {
        let off = self.level % 2;
        self.members.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| 2 * i + off).collect()
    }

    pub fn is_subset(&self, other: &LevelSet) -> bool {
        self.level == other.level && self.members.iter().zip(&other.members).all(|(a, b)| !a || *b)
    }
}

/// `|S| / |H_n| >= h`.
pub fn is_h_good(s: &LevelSet, h: f64) -> bool {
    s.len() as f64 >= h * s.members.len() as f64
}

/// Sites of level `upto` reachable from `b` (at level 0) by open paths.
pub fn evolve(field: &StripField, b: &LevelSet, upto: usize) -> Result<LevelSet> {
    if b.level != 0 {
        return Err(Error::InvalidParameter("the initial set must lie on level 0".into()));
    }
    if upto > field.levels {
        return Err(Error::InvalidParameter(format!("level {upto} beyond the field's {} levels", field.levels)));
    }
    let w = field.width;
    let mut cur = b.clone();
    for n in 0..upto {
        let mut next = LevelSet::empty(w, n + 1);
        for m in cur.sites() {
            if field.is_open(m, n, Dir::Left) {
                next.members[(m - 1) / 2] = true;
            }
            if field.is_open(m, n, Dir::Right) {
                next.members[(m + 1) / 2] = true;
            }
        }
        cur = next;
    }
    Ok(cur)
}

/// Whether `(x, 0)` is joined to `(y, level)` by an open path.
pub fn connects(field: &StripField, x: usize, y: usize, level: usize) -> Result<bool> {
    let b = LevelSet::from_sites(field.width, 0, &[x])?;
    Ok(evolve(field, &b, level)?.contains(y))
}

/// Indicator samples of `x -> y` for each `theta`, all evaluated on the same
/// uniforms per sample.
pub fn connect_indicators(
    width: usize,
    thetas: &[f64],
    k: usize,
    x: usize,
    y: usize,
    n_samples: usize,
    seed: u64,
) -> Result<Vec<Vec<bool>>> {
    let levels = k * width;
    LevelSet::from_sites(width, 0, &[x])?;
    LevelSet::from_sites(width, levels, &[y])?;
    (0..n_samples as u64)
        .into_par_iter()
        .map(|s| {
            let u = StripUniforms::sample(width, levels, &mut StreamKey::new(seed, s).lane(0));
            thetas.iter().map(|&t| connects(&u.threshold(t)?, x, y, levels)).collect()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PercEstimate {
    pub estimate: Estimate,
    pub note: Option<String>,
}

/// Monte Carlo estimate of `P[(x, 0) -> (y, KN)]`.
pub fn prob_connect(
    width: usize,
    theta: f64,
    k: usize,
    x: usize,
    y: usize,
    n_samples: usize,
    seed: u64,
) -> Result<PercEstimate> {
    let levels = k * width;
    let reachable = x <= 2 * width && y <= 2 * width && x % 2 == 0 && (y + levels) % 2 == 0 && x.abs_diff(y) <= levels;
    if !reachable {
        return Ok(PercEstimate {
            estimate: Estimate::bernoulli(0, n_samples as u64)?,
            note: Some(format!("({y}, {levels}) is not reachable from ({x}, 0)")),
        });
    }
    let hits = connect_indicators(width, &[theta], k, x, y, n_samples, seed)?.iter().filter(|v| v[0]).count();
    Ok(PercEstimate { estimate: Estimate::bernoulli(hits as u64, n_samples as u64)?, note: None })
}

/// `(h/2) ln(1/(1-theta)) > (1-h) ln 3`.
pub fn h_condition(theta: f64, h: f64) -> bool {
    h / 2.0 * (1.0 / (1.0 - theta)).ln() > (1.0 - h) * 3f64.ln()
}

/// Monte Carlo estimate of `P[xi_{KN}^B is (1-h)-good]`.
pub fn prob_good_level(
    width: usize,
    theta: f64,
    k: usize,
    h: f64,
    b: &[usize],
    n_samples: usize,
    seed: u64,
) -> Result<PercEstimate> {
    let levels = k * width;
    let start = LevelSet::from_sites(width, 0, b)?;
    let hits = (0..n_samples as u64)
        .into_par_iter()
        .map(|s| {
            let f = sample_strip(width, theta, levels, &mut StreamKey::new(seed, s).lane(0))?;
            Ok(is_h_good(&evolve(&f, &start, levels)?, 1.0 - h))
        })
        .collect::<Result<Vec<bool>>>()?
        .into_iter()
        .filter(|&g| g)
        .count();
    let note = (!h_condition(theta, h)).then(|| "side condition on h fails; bound not asserted".to_string());
    Ok(PercEstimate { estimate: Estimate::bernoulli(hits as u64, n_samples as u64)?, note })
}

/// Numeric shape of the contour bounds behind the strip estimates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContourReport {
    /// `(1-theta) + sum_{k=2}^{floor(hN)} k 3^k (1-theta)^{k/2}`.
    pub short_sum: f64,
    /// `N^2 exp((1-h) N ln 3 - (hN/2) ln(1/(1-theta)))`, unit constant.
    pub long_term: f64,
    /// Exponent coefficient `(1-h) ln 3 - (h/2) ln(1/(1-theta))`.
    pub exponent: f64,
    /// `3 sqrt(1-theta) < 1`.
    pub side_condition_ok: bool,
    pub h_condition_ok: bool,
    /// First `N` from which `long_term` decreases, if the exponent is
    /// negative.
    pub n0: Option<usize>,
}

pub fn contour_bounds(width: usize, theta: f64, h: f64, k: usize) -> Result<ContourReport> {
    if !(theta > 8.0 / 9.0 && theta < 1.0) {
        return Err(Error::InvalidParameter(format!("theta = {theta} must lie in (8/9, 1)")));
    }
    if !(h > 0.0 && h < 1.0) || k < 3 {
        return Err(Error::InvalidParameter(format!("need h in (0, 1) and K >= 3, got h = {h}, K = {k}")));
    }
    let eps = 1.0 - theta;
    let n = width as f64;
    let kmax = (h * n).floor() as i32;
    let short_sum = eps + (2..=kmax).map(|k| k as f64 * 3f64.powi(k) * eps.powf(k as f64 / 2.0)).sum::<f64>();
    let exponent = (1.0 - h) * 3f64.ln() - h / 2.0 * (1.0 / eps).ln();
    let long_term = n * n * (exponent * n).exp();
    let n0 = (exponent < 0.0).then(|| (1..).find(|&m: &usize| 2.0 * (1.0 / m as f64).ln_1p() + exponent < 0.0).unwrap());
    Ok(ContourReport {
        short_sum,
        long_term,
        exponent,
        side_condition_ok: 3.0 * eps.sqrt() < 1.0,
        h_condition_ok: h_condition(theta, h),
        n0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PercRow {
    pub width: usize,
    pub theta: f64,
    pub k: usize,
    pub h: f64,
    pub functional: String,
    pub estimate: f64,
    pub stderr: f64,
    pub n_samples: usize,
    pub seed: u64,
}

pub const PERC_CSV_HEADER: &str = "N,theta,K,h,functional,estimate,stderr,n_samples,seed";

pub fn write_perc_csv<W: Write>(mut w: W, rows: &[PercRow]) -> Result<()> {
    writeln!(w, "{PERC_CSV_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            r.width, r.theta, r.k, r.h, r.functional, r.estimate, r.stderr, r.n_samples, r.seed
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn level_sizes() {
        for w in 1..5 {
            assert_eq!(level_sites(w, 0).count(), w + 1);
            assert_eq!(level_sites(w, 1).count(), w);
            assert_eq!(level_size(w, 2), w + 1);
        }
        // N = 2, 4 levels: 16 bonds
        assert_eq!(StripField::bonds(2, 4).len(), 16);
    }

    #[test]
    fn extreme_thetas() {
        let f = sample_strip(5, 1.0, 6, &mut stream(1, 0, 0)).unwrap();
        assert_eq!(f.open_fraction(), 1.0);
        let f = sample_strip(5, 0.0, 6, &mut stream(1, 0, 0)).unwrap();
        assert_eq!(f.open_fraction(), 0.0);
        assert!(sample_strip(5, 1.5, 6, &mut stream(1, 0, 0)).is_err());
    }

    #[test]
    fn open_fraction_matches_theta() {
        let f = sample_strip(50, 0.7, 200, &mut stream(2, 0, 0)).unwrap();
        let n = StripField::bonds(50, 200).len() as f64;
        let se = (0.7f64 * 0.3 / n).sqrt();
        assert!((f.open_fraction() - 0.7).abs() < 3.0 * se);
    }

    #[test]
    fn full_field_gives_light_cone() {
        let f = StripField::from_fn(4, 6, |_, _, _| true).unwrap();
        let b = LevelSet::from_sites(4, 0, &[2]).unwrap();
        assert_eq!(evolve(&f, &b, 1).unwrap().sites(), vec![1, 3]);
        assert_eq!(evolve(&f, &b, 2).unwrap().sites(), vec![0, 2, 4]);
        assert_eq!(evolve(&f, &b, 3).unwrap().sites(), vec![1, 3, 5]);
        assert_eq!(evolve(&f, &b, 6).unwrap().len(), 5);
        let none = LevelSet::empty(4, 0);
        assert!(evolve(&f, &none, 6).unwrap().is_empty());
        assert!(evolve(&f, &b, 7).is_err());
    }

    #[test]
    fn goodness_ratio() {
        assert!(is_h_good(&LevelSet::full(4, 1), 1.0));
        assert!(!is_h_good(&LevelSet::empty(4, 1), 0.1));
        let half = LevelSet::from_sites(4, 1, &[1, 3]).unwrap();
        assert!(is_h_good(&half, 0.5));
    }

    #[test]
    fn connection_estimates() {
        assert_eq!(prob_connect(6, 1.0, 3, 4, 6, 50, 1).unwrap().estimate.mean, 1.0);
        let unreachable = prob_connect(6, 1.0, 3, 4, 5, 50, 1).unwrap();
        assert_eq!(unreachable.estimate.mean, 0.0);
        assert!(unreachable.note.is_some());
    }

    #[test]
    fn contour_shapes() {
        assert!(contour_bounds(10, 8.0 / 9.0, 0.5, 3).is_err());
        let r = contour_bounds(10, 0.9, 0.5, 3).unwrap();
        assert!(r.side_condition_ok);
        assert!((3.0 * 0.1f64.sqrt() - 0.9487).abs() < 1e-4);
        let r = contour_bounds(20, 0.95, 0.5, 3).unwrap();
        assert_eq!(r.n0, Some(10));
        let near_one = contour_bounds(20, 1.0 - 1e-12, 0.5, 3).unwrap();
        assert!(near_one.short_sum < 1e-10 && near_one.long_term < 1e-50);
    }
}
