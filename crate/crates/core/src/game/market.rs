use num::rational::Rational64;
use num::ToPrimitive;
use serde::{Deserialize, Serialize};

use super::{ActionSet, NormalFormGame};
use crate::error::{Error, Result};

/// Strictly increasing grid of exact rationals from 0 to 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PriceGrid {
    values: Vec<Rational64>,
}

impl PriceGrid {
    /// `{0, 1/n, ..., 1}`.
    pub fn uniform(n: u32) -> Result<Self> {
        check_n(n)?;
        Self::from_values((0..=n).map(|k| Rational64::new(k as i64, n as i64)).collect())
    }

    /// `{0, (1/n)^2, (2/n)^2, ..., 1}`.
    pub fn squared(n: u32) -> Result<Self> {
        check_n(n)?;
        let n2 = (n as i64) * (n as i64);
        Self::from_values((0..=n as i64).map(|k| Rational64::new(k * k, n2)).collect())
    }

    pub fn from_values(values: Vec<Rational64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::Invalid("a grid needs at least two points".into()));
        }
        if values[0] != Rational64::from(0) || *values.last().unwrap() != Rational64::from(1) {
            return Err(Error::Invalid("grid must start at 0 and end at 1".into()));
        }
        if values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Invalid("grid must be strictly increasing".into()));
        }
        Ok(PriceGrid { values })
    }

    pub fn values(&self) -> &[Rational64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn action_set(&self) -> ActionSet {
        ActionSet {
            labels: self.values.iter().map(|v| v.to_string()).collect(),
            values: self.values.iter().map(|v| v.to_f64().unwrap()).collect(),
        }
    }
}

fn check_n(n: u32) -> Result<()> {
    if n == 0 {
        return Err(Error::Invalid("grid resolution n must be at least 1".into()));
    }
    Ok(())
}

/// Demand sampled at the prices `k/n`, `k = 0..=n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Demand {
    samples: Vec<f64>,
}

impl Demand {
    pub fn inelastic(n: u32) -> Self {
        Demand { samples: vec![1.0; n as usize + 1] }
    }

    /// `D(p) = 1 - p`.
    pub fn linear(n: u32) -> Self {
        Self::from_fn(n, |p| 1.0 - p)
    }

    pub fn from_fn(n: u32, f: impl Fn(f64) -> f64) -> Self {
        Demand { samples: (0..=n).map(|k| f(k as f64 / n as f64)).collect() }
    }

    pub fn from_samples(samples: Vec<f64>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::Invalid("demand needs samples at two or more prices".into()));
        }
        if let Some(v) = samples.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::Invalid(format!("demand sample {v} is negative or not finite")));
        }
        Ok(Demand { samples })
    }

    /// Grid resolution `n`.
    pub fn n(&self) -> u32 {
        (self.samples.len() - 1) as u32
    }

    /// Demand at price `k/n`.
    pub fn at(&self, k: usize) -> f64 {
        self.samples[k]
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }
}

/// Bertrand competition on the grid `k/n`: the firms posting the lowest price
/// split the demand at that price, earning `(p - c_i/n) D(p)` between them.
pub fn make_bertrand(n: u32, costs: &[u32], demand: &Demand) -> Result<NormalFormGame> {
    check_n(n)?;
    if costs.len() < 2 {
        return Err(Error::Invalid("Bertrand competition needs at least two firms".into()));
    }
    if let Some(c) = costs.iter().find(|&&c| c > n) {
        return Err(Error::Invalid(format!("cost index {c} exceeds n = {n}")));
    }
    if demand.n() != n {
        return Err(Error::Shape(format!("demand sampled for n = {}, game uses n = {n}", demand.n())));
    }
    Demand::from_samples(demand.samples.clone())?;
    let grid = PriceGrid::uniform(n)?;
    let actions = vec![grid.action_set(); costs.len()];
    NormalFormGame::from_fn(actions, |p| {
        let low = *p.iter().min().unwrap();
        let winners = p.iter().filter(|&&k| k == low).count() as i64;
        p.iter()
            .zip(costs)
            .map(|(&k, &c)| {
                if k != low {
                    return 0.0;
                }
                let margin = Rational64::new(k as i64 - c as i64, n as i64) / winners;
                margin.to_f64().unwrap() * demand.at(k)
            })
            .collect()
    })
}

/// First-price auction on `grid`: the highest bidders split the item, buyer `i`
/// valuing it at `v_i/n`.
pub fn make_first_price(n: u32, values: &[u32], grid: &PriceGrid) -> Result<NormalFormGame> {
    check_n(n)?;
    if values.len() < 2 {
        return Err(Error::Invalid("an auction needs at least two buyers".into()));
    }
    if let Some(v) = values.iter().find(|&&v| v > n) {
        return Err(Error::Invalid(format!("value index {v} exceeds n = {n}")));
    }
    let bids = grid.values();
    let actions = vec![grid.action_set(); values.len()];
    NormalFormGame::from_fn(actions, |b| {
        let high = *b.iter().max().unwrap();
        let winners = b.iter().filter(|&&k| k == high).count() as i64;
        b.iter()
            .zip(values)
            .map(|(&k, &v)| {
                if k != high {
                    return 0.0;
                }
                let surplus = (Rational64::new(v as i64, n as i64) - bids[k]) / winners;
                surplus.to_f64().unwrap()
            })
            .collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids_are_exact() {
        let g = PriceGrid::squared(10).unwrap();
        assert_eq!(g.values()[9], Rational64::new(81, 100));
        assert_eq!(g.len(), 11);
        assert!(PriceGrid::from_values(vec![Rational64::from(0), Rational64::new(1, 2)]).is_err());
        assert!(PriceGrid::uniform(0).is_err());
    }

    #[test]
    fn bertrand_tie_split() {
        let g = make_bertrand(4, &[0, 0, 1], &Demand::linear(4)).unwrap();
        let o = g.outcome_index(&[2, 2, 3]);
        // margin 1/2, demand 1/2, two winners
        assert!((g.utility(0, o) - 0.125).abs() < 1e-15);
        assert_eq!(g.utility(2, o), 0.0);
        let o = g.outcome_index(&[0, 4, 0]);
        assert_eq!(g.utility(0, o), 0.0);
        assert!((g.utility(2, o) - (-0.25 / 2.0)).abs() < 1e-15);
    }

    #[test]
    fn bertrand_input_checks() {
        assert!(make_bertrand(4, &[0], &Demand::inelastic(4)).is_err());
        assert!(make_bertrand(4, &[0, 5], &Demand::inelastic(4)).is_err());
        assert!(make_bertrand(5, &[0, 0], &Demand::inelastic(4)).is_err());
    }

    #[test]
    fn first_price_mirrors_bertrand() {
        let n = 6;
        let values = [6u32, 4, 5];
        let costs: Vec<u32> = values.iter().map(|v| n - v).collect();
        let fp = make_first_price(n, &values, &PriceGrid::uniform(n).unwrap()).unwrap();
        let be = make_bertrand(n, &costs, &Demand::inelastic(n)).unwrap();
        for o in 0..fp.num_outcomes() {
            let b = fp.outcome(o);
            let p: Vec<usize> = b.iter().map(|&k| n as usize - k).collect();
            let q = be.outcome_index(&p);
            for i in 0..3 {
                assert!((fp.utility(i, o) - be.utility(i, q)).abs() <= 1e-15);
            }
        }
    }
}
