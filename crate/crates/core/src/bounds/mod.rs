//! Closed-form bounds: stick goodness, block niceness, optimal window
//! lengths, the extinction threshold and the Lyapunov drift bounds.
//!
//! Every function here is pure. The `*_dd` variants repeat the threshold
//! solve and the 4-block bound in double-double arithmetic.

mod dd;

use std::fmt::Write as _;
use std::io::Write;

use serde::Serialize;

pub use dd::Dd;

use crate::{Error, Result};

/// Probability that a stick of length `l` is `A`-good with `|A| = a`.
pub fn stick_good_lb(l: f64, q: f64, a: u32) -> f64 {
    (-l * (1.0 - q.powi(a as i32))).exp()
}

/// Unclipped lower bound on the probability that a 2-block is nice.
pub fn block2_nice_raw(l: f64, p: f64, d: usize) -> f64 {
    let q = 1.0 - p;
    let d = d as f64;
    (-2.0 * l * (d - 1.0) * p).exp() * ((-l * (1.0 - q * q)).exp() - (-l).exp()).powi(2)
}

/// [`block2_nice_raw`] clipped to `[0, 1]`.
pub fn block2_nice_lb(l: f64, p: f64, d: usize) -> f64 {
    block2_nice_raw(l, p, d).clamp(0.0, 1.0)
}

/// Window length maximising the 2-block bound.
pub fn hat_l(p: f64, d: usize) -> f64 {
    let q = 1.0 - p;
    (q * q / ((q + d as f64) * p)).ln_1p() / (q * q)
}

/// Lower bound on the probability that a 4-block is nice.
pub fn theta_4block(l: f64, p: f64, d: usize) -> f64 {
    let q = 1.0 - p;
    let (q2, q3) = (q * q, q * q * q);
    let d = d as f64;
    let rate = 2.0 * q3 / 3.0 + 4.0 * q2 / 3.0 + (4.0 * d - 6.0) * q - (4.0 * d - 2.0);
    (rate * l).exp() * (l * q2 / 3.0).exp_m1().powi(2) * (l * q3 / 3.0).exp_m1().powi(4)
}

/// [`theta_4block`] in double-double arithmetic.
pub fn theta_4block_dd(l: f64, p: f64, d: usize) -> Dd {
    let one = Dd::ONE;
    let three = Dd::new(3.0);
    let l = Dd::new(l);
    let q = one - Dd::new(p);
    let (q2, q3) = (q * q, q * q * q);
    let d = Dd::new(d as f64);
    let rate = Dd::new(2.0) * q3 / three + Dd::new(4.0) * q2 / three
        + (Dd::new(4.0) * d - Dd::new(6.0)) * q
        - (Dd::new(4.0) * d - Dd::new(2.0));
    let a = (l * q2 / three).exp() - one;
    let b = (l * q3 / three).exp() - one;
    (rate * l).exp() * a.powi(2) * b.powi(4)
}

/// Window length used for 4-blocks.
pub fn tilde_l(p: f64, d: usize) -> f64 {
    3.0 * (1.0 / (2.0 * p * d as f64)).ln()
}

/// Small-`p` expansion `1 - 2(d+1) p ln(1/p)` of the optimised 2-block bound.
pub fn block2_asymptote(p: f64, d: usize) -> f64 {
    1.0 - 2.0 * (d as f64 + 1.0) * p * (1.0 / p).ln()
}

/// Small-`p` expansion `1 - 12(d+1) p ln(1/p)` of the optimised 4-block bound.
pub fn theta_asymptote(p: f64, d: usize) -> f64 {
    1.0 - 12.0 * (d as f64 + 1.0) * p * (1.0 / p).ln()
}

/// Density of the dominated Bernoulli field, `1 - 3 sqrt(2(d+1) p ln(1/p))`.
/// Carries an `out_of_range` flag when the expression leaves `[0, 1]`.
pub fn domination_density(p: f64, d: usize) -> BoundReport {
    let raw = 1.0 - 3.0 * (2.0 * (d as f64 + 1.0) * p * (1.0 / p).ln()).sqrt();
    BoundReport::probability("domination_density", vec![("p", p), ("d", d as f64)], raw)
}

pub fn t1(q: f64, d: usize) -> f64 {
    let df = d as f64;
    (q * (df + 1.0) - 1.0) / (df * q * q + q * (1.0 - (1.0 - q).powi(d as i32)))
}

pub fn t2(q: f64, d: usize) -> f64 {
    let df = d as f64;
    (2.0 - q * (df + 1.0)) / (1.0 + df * (1.0 - q - q * q) + q * (1.0 - q).powi(d as i32))
}

/// Upper limit on `h` for the single-line type-2 bound to be the worst case.
pub fn side_condition(q: f64, d: usize) -> f64 {
    1.0 / (q + d as f64 - d as f64 * q)
}

/// Admissible `h`: the open interval on which both typed drift bounds are
/// negative, `h < 1/(q+d-dq)` and `0 < h < 1`; `None` when empty.
///
/// For `q <= 2/(d+1)` this is `(max(0, T1), min(1, T2, S))`. Beyond that the
/// type-2 coefficient can change sign, turning `T2` into a lower limit.
pub fn h_window(q: f64, d: usize) -> Option<(f64, f64)> {
    let df = d as f64;
    let mut lo = t1(q, d).max(0.0);
    let mut hi = 1f64.min(side_condition(q, d));
    let num = 2.0 - q * (df + 1.0);
    let coef = 1.0 + df * (1.0 - q - q * q) + q * (1.0 - q).powi(d as i32);
    if coef > 0.0 {
        hi = hi.min(num / coef);
    } else if coef < 0.0 {
        lo = lo.max(num / coef);
    } else if num <= 0.0 {
        return None;
    }
    (lo < hi).then_some((lo, hi))
}

/// Extinction threshold: the supremum of `q > 1/(d+1)` with a non-empty
/// `h` window, by bisection to `1e-12`.
pub fn q0(d: usize) -> f64 {
    let df = d as f64;
    let (mut lo, mut hi) = (1.0 / (df + 1.0), 2.0 / (df + 1.0));
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if h_window(mid, d).is_some() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// [`q0`] in double-double arithmetic, bisected to `1e-25`.
pub fn q0_dd(d: usize) -> Dd {
    let one = Dd::ONE;
    let df = Dd::new(d as f64);
    let t1 = |q: Dd| {
        (q * (df + one) - one) / (df * q * q + q * (one - (one - q).powi(d as u32)))
    };
    let t2 = |q: Dd| {
        (Dd::new(2.0) - q * (df + one))
            / (one + df * (one - q - q * q) + q * (one - q).powi(d as u32))
    };
    let s = |q: Dd| one / (q + df - df * q);
    let mut lo = one / (df + one);
    let mut hi = Dd::new(2.0) / (df + one);
    while (hi - lo).hi > 1e-25 {
        let mid = (lo + hi) * Dd::new(0.5);
        let (a, b, c) = (t1(mid), t2(mid), s(mid));
        let m = if b < c { b } else { c };
        let m = if m < one { m } else { one };
        if a < m {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo + hi) * Dd::new(0.5)
}

/// Closed form of `q0(2)`:
/// `7/3 - (2 sqrt(19)/3) sin(arctan(9 sqrt(107)/137)/3 + pi/6)`.
pub fn q0_closed_form_d2() -> f64 {
    let phi = (9.0 * 107f64.sqrt() / 137.0).atan();
    7.0 / 3.0 - 2.0 * 19f64.sqrt() / 3.0 * (phi / 3.0 + std::f64::consts::FRAC_PI_6).sin()
}

/// Weaker threshold from the fixed choice `h = 1/(d^2 + 3)`.
pub fn q0_simple(d: usize) -> f64 {
    let df = d as f64;
    let h = 1.0 / (df * df + 3.0);
    2.0 / (df + 1.0 + ((df + 1.0).powi(2) - 8.0 * h).sqrt())
}

/// Drift bound for a type-1 (lonely) zero.
pub fn type1_bound(q: f64, d: usize, h: f64) -> f64 {
    let df = d as f64;
    q * (df + 1.0) - h * (df * q * q + q * (1.0 - (1.0 - q).powi(d as i32))) - 1.0
}

/// Drift bound for a type-2 zero lying on a chain of `m >= 1` type-2 zeros.
pub fn type2_bound_m(q: f64, d: usize, h: f64, m: f64) -> f64 {
    let df = d as f64;
    q * (df + 1.0) - h * (q * q * df + q * (1.0 - (1.0 - q).powi(d as i32)))
        - m * (1.0 - h * (df + q - df * q))
        - 1.0
        + h
}

/// Type-2 drift bound after maximising over `m >= 1` (valid when
/// `h < side_condition(q, d)`).
pub fn type2_bound(q: f64, d: usize, h: f64) -> f64 {
    let df = d as f64;
    q * (df + 1.0) - 2.0 + h * (1.0 + df * (1.0 - q - q * q) + q * (1.0 - q).powi(d as i32))
}

/// Drift of the zero count from a census with `n1` lonely and `n2`
/// neighboured zeros.
pub fn n_drift_bound(q: f64, d: usize, n1: usize, n2: usize) -> f64 {
    let frac = if n1 + n2 == 0 { 0.0 } else { n2 as f64 / (n1 + n2) as f64 };
    (d as f64 + 1.0) * q - 1.0 - frac
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DriftBounds {
    pub type1_bound: f64,
    /// `None` when `h` violates the side condition.
    pub type2_bound: Option<f64>,
    pub n_drift_bound: f64,
    pub note: Option<String>,
}

pub fn drift_bounds(q: f64, d: usize, h: f64, n1: usize, n2: usize) -> DriftBounds {
    let s = side_condition(q, d);
    let (type2_bound, note) = if h < s {
        (Some(type2_bound(q, d, h)), None)
    } else {
        (None, Some(format!("h = {h} violates h < 1/(q+d-dq) = {s}")))
    };
    DriftBounds {
        type1_bound: type1_bound(q, d, h),
        type2_bound,
        n_drift_bound: n_drift_bound(q, d, n1, n2),
        note,
    }
}

/// One evaluated formula with its inputs and any validity flags.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub formula: &'static str,
    pub inputs: Vec<(&'static str, f64)>,
    pub value: f64,
    pub flags: Vec<String>,
}

impl BoundReport {
    pub fn new(formula: &'static str, inputs: Vec<(&'static str, f64)>, value: f64) -> Self {
        Self { formula, inputs, value, flags: Vec::new() }
    }

    /// Clips to `[0, 1]`, flagging `out_of_range` if that changed the value.
    pub fn probability(formula: &'static str, inputs: Vec<(&'static str, f64)>, raw: f64) -> Self {
        let mut r = Self::new(formula, inputs, raw.clamp(0.0, 1.0));
        if !(0.0..=1.0).contains(&raw) {
            r.flags.push(format!("out_of_range(raw={raw})"));
        }
        r
    }

    pub fn flagged(&self) -> bool {
        !self.flags.is_empty()
    }

    pub fn inputs_string(&self) -> String {
        let mut s = String::new();
        for (i, (k, v)) in self.inputs.iter().enumerate() {
            if i > 0 {
                s.push(';');
            }
            let _ = write!(s, "{k}={v}");
        }
        s
    }
}

/// Every formula evaluated at one `(p, d)` grid point. `regular` records
/// whether `d` is the common degree; otherwise the 4-block bound is flagged
/// conservative.
pub fn formula_table(p: f64, d: usize, regular: bool) -> Vec<BoundReport> {
    let q = 1.0 - p;
    let pd = || vec![("p", p), ("d", d as f64)];
    let hl = hat_l(p, d);
    let tl = tilde_l(p, d);
    let mut rows = vec![
        BoundReport::new("hat_L", pd(), hl),
        BoundReport::new("tilde_L", pd(), tl),
        BoundReport::probability("stick_good_lb", vec![("L", hl), ("q", q), ("a", 1.0)], stick_good_lb(hl, q, 1)),
        BoundReport::probability("stick_good_lb", vec![("L", hl), ("q", q), ("a", 2.0)], stick_good_lb(hl, q, 2)),
        BoundReport::probability("block2_nice_lb", vec![("L", hl), ("p", p), ("d", d as f64)], block2_nice_raw(hl, p, d)),
        BoundReport::new("block2_asymptote", pd(), block2_asymptote(p, d)),
    ];
    let mut theta = BoundReport::probability("theta_4block", vec![("L", tl), ("p", p), ("d", d as f64)], theta_4block(tl, p, d));
    if !regular {
        theta.flags.push("conservative(non-regular graph, d = max degree)".into());
    }
    rows.push(theta);
    rows.push(BoundReport::new("theta_asymptote", pd(), theta_asymptote(p, d)));
    rows.push(domination_density(p, d));
    let mut q0r = BoundReport::new("q0", vec![("d", d as f64)], q0(d));
    if q < q0r.value {
        q0r.flags.push("q_below_threshold".into());
    }
    rows.push(q0r);
    rows.push(BoundReport::new("q0_simple", vec![("d", d as f64)], q0_simple(d)));
    rows.push(BoundReport::new("T1", vec![("q", q), ("d", d as f64)], t1(q, d)));
    rows.push(BoundReport::new("T2", vec![("q", q), ("d", d as f64)], t2(q, d)));
    rows
}

/// Writes `formula,inputs,value,flags` rows.
pub fn write_formula_csv<W: Write>(mut w: W, rows: &[BoundReport]) -> Result<()> {
    writeln!(w, "formula,inputs,value,flags")?;
    for r in rows {
        writeln!(w, "{},{},{},{}", r.formula, r.inputs_string(), r.value, r.flags.join(";"))?;
    }
    Ok(())
}

/// Validates a `(p, d)` pair for sweeps.
pub fn check_pd(p: f64, d: usize) -> Result<()> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidParameter(format!("p = {p} must lie in (0, 1)")));
    }
    if d < 2 {
        return Err(Error::InvalidParameter(format!("d = {d} must be at least 2")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stick_goodness_trivia() {
        assert_eq!(stick_good_lb(0.0, 0.3, 4), 1.0);
        assert_eq!(stick_good_lb(5.0, 1.0, 3), 1.0);
        let (l, p) = (3.0, 0.02);
        assert!((stick_good_lb(l, 1.0 - p, 1) - (-l * p).exp()).abs() < 1e-15);
    }

    #[test]
    fn threshold_values() {
        assert!((q0(2) - 0.412).abs() < 5e-4);
        assert!((q0(2) - q0_closed_form_d2()).abs() < 1e-9);
        assert!((q0(4) - 0.214_554_975_8).abs() < 1e-9);
        for d in 2..=10 {
            assert!(q0(d) > 1.0 / (d as f64 + 1.0));
            assert!(q0_simple(d) > 1.0 / (d as f64 + 1.0));
            assert!((q0_dd(d).to_f64() - q0(d)).abs() < 1e-12, "d={d}");
        }
        assert!(q0_simple(2) < q0(2));
    }

    #[test]
    fn window_edges() {
        for d in [2, 3, 4] {
            assert!(t1(1.0 / (d as f64 + 1.0), d).abs() < 1e-15);
        }
        for d in [2, 4] {
            assert!(h_window(1.0 / (d as f64 + 1.0), d).is_some());
        }
        assert!(h_window(0.9, 2).is_none());
    }

    #[test]
    fn theta_reference_point() {
        let t = theta_4block(14.0, 0.0015, 2);
        assert!(t > 0.726 && t < 0.74, "{t}");
        let tdd = theta_4block_dd(14.0, 0.0015, 2).to_f64();
        assert!((t - tdd).abs() < 1e-13);
        assert!(theta_4block(1e-9, 0.01, 2) < 1e-40);
    }

    #[test]
    fn hat_l_is_near_logarithm() {
        let p = 1e-6;
        let r = hat_l(p, 2) / (1.0 / (3.0 * p)).ln();
        assert!((r - 1.0).abs() < 0.05);
    }

    #[test]
    fn domination_flags() {
        // 1 - 3 sqrt(6e-6 ln 1e6) = 0.97268...
        let v = domination_density(1e-6, 2);
        assert!((v.value - 0.972_68).abs() < 1e-5 && !v.flagged());
        assert!(domination_density(0.1, 4).flagged());
    }

    #[test]
    fn drift_bound_shapes() {
        let q = 0.3;
        let d = 2;
        assert_eq!(n_drift_bound(q, d, 5, 0), 3.0 * q - 1.0);
        let (lo, hi) = h_window(q, d).unwrap();
        let h = 0.5 * (lo + hi);
        let b = drift_bounds(q, d, h, 1, 1);
        assert!(b.type1_bound < 0.0 && b.type2_bound.unwrap() < 0.0);
        // m = 1 line equals the maximised bound
        assert!((type2_bound_m(q, d, h, 1.0) - type2_bound(q, d, h)).abs() < 1e-15);
        assert!(drift_bounds(q, d, 0.99, 1, 0).type2_bound.is_none());
    }

    #[test]
    fn csv_has_header_and_rows() {
        let mut buf = Vec::new();
        write_formula_csv(&mut buf, &formula_table(0.01, 2, true)).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("formula,inputs,value,flags\n"));
        assert!(s.lines().any(|l| l.starts_with("theta_4block,L=")));
    }
}
