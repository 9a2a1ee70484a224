//! The classical model: real fitness in `[0, 1)`, the global minimum and its
//! neighbours are replaced by fresh uniforms.

use std::collections::BTreeSet;

use rand::Rng;

use crate::graph::Graph;
use crate::{Error, Result};

/// Distinct fitness values with an ordered index for O(log N) argmin.
///
/// Values are nonnegative, so their IEEE bit patterns sort like the values.
#[derive(Debug, Clone)]
pub struct FitnessVector {
    values: Vec<f64>,
    order: BTreeSet<(u64, usize)>,
}

impl FitnessVector {
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        let mut order = BTreeSet::new();
        for (x, &v) in values.iter().enumerate() {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidParameter(format!("fitness {v} outside [0, 1]")));
            }
            if order.range((v.to_bits(), 0)..=(v.to_bits(), usize::MAX)).next().is_some() {
                return Err(Error::InvalidParameter(format!("fitness value {v} is repeated")));
            }
            order.insert((v.to_bits(), x));
        }
        if values.is_empty() {
            return Err(Error::EmptyGraph);
        }
        Ok(Self { values, order })
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut fv = Self { values: vec![0.0; n], order: BTreeSet::new() };
        for x in 0..n {
            let v = fv.fresh_value(rng);
            fv.values[x] = v;
            fv.order.insert((v.to_bits(), x));
        }
        fv
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn argmin(&self) -> usize {
        self.order.first().expect("nonempty").1
    }

    pub fn min(&self) -> f64 {
        self.values[self.argmin()]
    }

    fn contains_value(&self, v: f64) -> bool {
        self.order.range((v.to_bits(), 0)..=(v.to_bits(), usize::MAX)).next().is_some()
    }

    /// A uniform draw not currently present (exact ties are redrawn).
    fn fresh_value<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        loop {
            let v: f64 = rng.random();
            if !self.contains_value(v) {
                return v;
            }
        }
    }

    fn set(&mut self, x: usize, v: f64) {
        self.order.remove(&(self.values[x].to_bits(), x));
        self.values[x] = v;
        self.order.insert((v.to_bits(), x));
    }
}

/// Replaces the minimum and its neighbours by fresh uniforms; returns the
/// argmin vertex.
pub fn classical_step<R: Rng + ?Sized>(g: &Graph, fv: &mut FitnessVector, rng: &mut R) -> usize {
    let j = fv.argmin();
    for &u in g.closed(j) {
        let v = fv.fresh_value(rng);
        fv.set(u, v);
    }
    j
}

/// Writes `new_values` (in sorted closed-neighbourhood order) around `v`.
pub fn apply_classical_update(g: &Graph, fv: &mut FitnessVector, v: usize, new_values: &[f64]) -> Result<()> {
    let hood = g.closed_neighbourhood(v)?;
    if hood.len() != new_values.len() {
        return Err(Error::InvalidParameter(format!(
            "{} values for a neighbourhood of size {}",
            new_values.len(),
            hood.len()
        )));
    }
    for (&u, &val) in hood.iter().zip(new_values) {
        fv.set(u, val);
    }
    let distinct: BTreeSet<u64> = fv.values.iter().map(|v| v.to_bits()).collect();
    if distinct.len() != fv.len() {
        return Err(Error::InvalidParameter("update creates a repeated fitness value".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate, Family};
    use crate::rng::stream;

    #[test]
    fn step_changes_exactly_the_minimum_neighbourhood() {
        let g = generate(Family::Cycle(6), None).unwrap();
        let mut fv = FitnessVector::from_values(vec![0.5, 0.9, 0.1, 0.7, 0.3, 0.8]).unwrap();
        let before = fv.values().to_vec();
        let j = classical_step(&g, &mut fv, &mut stream(1, 0, 0));
        assert_eq!(j, 2);
        let changed: Vec<usize> = (0..6).filter(|&x| fv.values()[x] != before[x]).collect();
        assert_eq!(changed, vec![1, 2, 3]);
    }

    #[test]
    fn repeated_values_are_rejected() {
        assert!(FitnessVector::from_values(vec![0.5, 0.5]).is_err());
        assert!(FitnessVector::from_values(vec![1.5]).is_err());
    }

    #[test]
    fn disjoint_updates_commute() {
        let g = generate(Family::Cycle(8), None).unwrap();
        let base = FitnessVector::random(8, &mut stream(2, 0, 0));
        // closed neighbourhoods of 1 and 5 are {0,1,2} and {4,5,6}
        let a = [0.11, 0.12, 0.13];
        let b = [0.21, 0.22, 0.23];
        let mut first = base.clone();
        apply_classical_update(&g, &mut first, 1, &a).unwrap();
        apply_classical_update(&g, &mut first, 5, &b).unwrap();
        let mut second = base;
        apply_classical_update(&g, &mut second, 5, &b).unwrap();
        apply_classical_update(&g, &mut second, 1, &a).unwrap();
        assert_eq!(first.values(), second.values());
        assert_eq!(first.argmin(), 0);
    }

    #[test]
    fn argmin_index_stays_consistent() {
        let g = generate(Family::Cycle(30), None).unwrap();
        let mut rng = stream(3, 0, 0);
        let mut fv = FitnessVector::random(30, &mut rng);
        for _ in 0..500 {
            let brute = (0..30).min_by(|&a, &b| fv.values()[a].total_cmp(&fv.values()[b])).unwrap();
            assert_eq!(fv.argmin(), brute);
            classical_step(&g, &mut fv, &mut rng);
        }
    }
}
