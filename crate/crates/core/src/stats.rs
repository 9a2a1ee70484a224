//! Small statistical helpers: batch-means estimates, least-squares lines and
//! sample correlation.

use serde::Serialize;

use crate::{Error, Result};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Minimum number of batches behind an [`Estimate`].
pub const MIN_BATCHES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub n_batches: usize,
    /// Burn-in discarded per replica (time or steps).
    pub burn_in: f64,
    /// Total budget per replica (time or steps).
    pub total_budget: f64,
}

impl Estimate {
    /// Mean and standard error of equally weighted batch means.
    pub fn from_batches(batch_means: &[f64], burn_in: f64, total_budget: f64) -> Result<Self> {
        let n = batch_means.len();
        if n < MIN_BATCHES {
            return Err(Error::InsufficientData(format!("{n} batches, need at least {MIN_BATCHES}")));
        }
        let mean = batch_means.iter().sum::<f64>() / n as f64;
        let var = batch_means.iter().map(|b| (b - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        Ok(Self::new(mean, (var / n as f64).sqrt(), n, burn_in, total_budget))
    }

    /// Proportion estimate from `n` independent indicators.
    pub fn bernoulli(successes: u64, n: u64) -> Result<Self> {
        if (n as usize) < MIN_BATCHES {
            return Err(Error::InsufficientData(format!("{n} samples, need at least {MIN_BATCHES}")));
        }
        let mean = successes as f64 / n as f64;
        let stderr = (mean * (1.0 - mean) / n as f64).sqrt();
        Ok(Self::new(mean, stderr, n as usize, 0.0, n as f64))
    }

    fn new(mean: f64, stderr: f64, n_batches: usize, burn_in: f64, total_budget: f64) -> Self {
        Self {
            mean,
            stderr,
            ci_lo: mean - Z95 * stderr,
            ci_hi: mean + Z95 * stderr,
            n_batches,
            burn_in,
            total_budget,
        }
    }

    /// `|mean - target| <= k * stderr`.
    pub fn agrees_with(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.stderr
    }

    /// `mean >= bound - k * stderr`.
    pub fn at_least(&self, bound: f64, k: f64) -> bool {
        self.mean >= bound - k * self.stderr
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub rms_residual: f64,
    pub points: usize,
}

/// Ordinary least squares `y = intercept + slope * x`.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> Result<LineFit> {
    let n = xs.len();
    if n != ys.len() || n < 2 {
        return Err(Error::InsufficientData(format!("line fit needs >= 2 paired points, got {n}")));
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData("line fit needs distinct abscissae".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    Ok(LineFit { slope, intercept, rms_residual: (ss / n as f64).sqrt(), points: n })
}

/// Pearson correlation with its large-sample standard error
/// `(1 - r^2) / sqrt(n - 1)`; `None` when either sample is constant.
pub fn correlation(xs: &[f64], ys: &[f64]) -> Option<(f64, f64)> {
    let n = xs.len();
    if n < 3 || n != ys.len() {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    let r = sxy / (sxx * syy).sqrt();
    Some((r, (1.0 - r * r) / ((n - 1) as f64).sqrt()))
}
