//! Discretised Bertrand competition: equilibrium classification, explicit
//! dual certificates that rule out non-Nash play, the convergence bounds
//! they imply, and the price-distribution experiments.

mod bounds;
mod certificate;
mod experiments;

pub use bounds::{displayed_extra_rounds, displayed_horizon, finite_iterate_bound, time_avg_bound, ConvergenceBound, ScheduleFamily};
pub use certificate::{build_dual_certificate, certificate_generators, verify_pointwise, DualCertificate, PointwiseReport};
pub use experiments::{fig1_experiment, fig2_experiment, Fig1Result, Fig2Result, HeatmapSide, FIG_MAX_N};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{enumerate_pure_nash, make_bertrand, Demand, NormalFormGame};

/// Market data behind a Bertrand game: price grid `k/n`, firm costs as grid
/// indices and the sampled demand.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BertrandMarket {
    pub n: u32,
    pub costs: Vec<u32>,
    pub demand: Demand,
}

impl BertrandMarket {
    pub fn new(n: u32, costs: Vec<u32>, demand: Demand) -> Result<Self> {
        let market = BertrandMarket { n, costs, demand };
        market.game()?;
        Ok(market)
    }

    pub fn game(&self) -> Result<NormalFormGame> {
        make_bertrand(self.n, &self.costs, &self.demand)
    }

    pub fn num_firms(&self) -> usize {
        self.costs.len()
    }

    /// Smallest cost index `c`.
    pub fn min_cost(&self) -> u32 {
        *self.costs.iter().min().expect("markets have firms")
    }

    /// Firms with the smallest cost.
    pub fn low_cost_firms(&self) -> Vec<usize> {
        let c = self.min_cost();
        (0..self.costs.len()).filter(|&i| self.costs[i] == c).collect()
    }

    /// Profit `(k - c)/n D(k/n)` of a sole seller with cost index `c` at price `k/n`.
    pub fn profit(&self, c: u32, k: u32) -> f64 {
        (k as f64 - c as f64) / self.n as f64 * self.demand.at(k as usize)
    }
}

/// Smallest maximiser of `(k - c)/n D(k/n)` over `k = 0..=n`.
pub fn monopoly_index(demand: &Demand, c: u32, n: u32) -> u32 {
    let profit = |k: u32| (k as f64 - c as f64) / n as f64 * demand.at(k as usize);
    let mut best = 0;
    for k in 1..=n {
        if profit(k) > profit(best) {
            best = k;
        }
    }
    best
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Concavity {
    Strict,
    Weak,
    None,
}

/// Concavity of the profit `(p - c/n) D(p)` on the grid points `c/n..=1`,
/// judged by second differences.
pub fn profit_concavity(demand: &Demand, c: u32, n: u32) -> Concavity {
    let f = |k: u32| (k as f64 - c as f64) / n as f64 * demand.at(k as usize);
    let mut strict = true;
    for k in c + 1..n {
        let d2 = f(k - 1) - 2.0 * f(k) + f(k + 1);
        if d2 > 1e-12 {
            return Concavity::None;
        }
        if d2 >= -1e-12 {
            strict = false;
        }
    }
    if strict {
        Concavity::Strict
    } else {
        Concavity::Weak
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NashClass {
    /// Two or more low-cost firms price at cost, every other firm weakly
    /// above, firms with higher cost strictly above.
    LowestCostTie,
    /// Every low-cost firm prices one step above cost; the others do not
    /// undercut, and only firms whose cost is that price may match it.
    OneAboveCost,
    /// Two low-cost firms both two steps above cost, possible when demand is
    /// flat across the first two steps and no firm has cost one step above.
    TwoAboveCost,
    Unclassified,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifiedNash {
    pub outcome: usize,
    pub prices: Vec<u32>,
    pub class: NashClass,
}

/// Structural type of a price vector (as grid indices), if it has one.
pub fn nash_class_of(market: &BertrandMarket, prices: &[u32]) -> NashClass {
    let c = market.min_cost();
    let low = market.low_cost_firms();
    let is_low = |i: usize| market.costs[i] == c;
    let others_above = |floor: u32, strict: bool| {
        (0..prices.len()).filter(|&i| !is_low(i)).all(|i| if strict { prices[i] > floor } else { prices[i] >= floor })
    };

    let at_cost = low.iter().filter(|&&i| prices[i] == c).count();
    if at_cost >= 2 && low.iter().all(|&i| prices[i] >= c) && others_above(c, true) {
        return NashClass::LowestCostTie;
    }
    if c < market.n
        && low.iter().all(|&i| prices[i] == c + 1)
        && (0..prices.len())
            .filter(|&i| !is_low(i))
            .all(|i| prices[i] > c + 1 || (prices[i] == c + 1 && market.costs[i] == c + 1))
    {
        return NashClass::OneAboveCost;
    }
    let flat = c + 2 <= market.n && market.demand.at((c + 1) as usize) == market.demand.at((c + 2) as usize);
    if low.len() == 2
        && flat
        && !market.costs.contains(&(c + 1))
        && low.iter().all(|&i| prices[i] == c + 2)
        && others_above(c + 2, true)
    {
        return NashClass::TwoAboveCost;
    }
    NashClass::Unclassified
}

/// Pure Nash equilibria of the market's game, found by enumeration and
/// labelled by structural type.
pub fn classify_bertrand_pure_nash(market: &BertrandMarket) -> Result<Vec<ClassifiedNash>> {
    if market.low_cost_firms().len() < 2 {
        return Err(Error::Precondition("classification needs two firms at the lowest cost".into()));
    }
    let game = market.game()?;
    Ok(enumerate_pure_nash(&game)
        .into_iter()
        .map(|o| {
            let prices: Vec<u32> = game.outcome(o).into_iter().map(|k| k as u32).collect();
            ClassifiedNash { outcome: o, class: nash_class_of(market, &prices), prices }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monopoly_examples() {
        assert_eq!(monopoly_index(&Demand::inelastic(8), 0, 8), 8);
        assert_eq!(monopoly_index(&Demand::linear(10), 0, 10), 5);
        assert_eq!(monopoly_index(&Demand::inelastic(10), 9, 10), 10);
        for n in 2..12 {
            for c in 0..n {
                let d = Demand::from_fn(n, |p| (1.0 - p * p).max(0.05));
                let k = monopoly_index(&d, c, n);
                let f = |k: u32| (k as f64 - c as f64) * d.at(k as usize);
                assert!((0..=n).all(|j| f(j) <= f(k)));
                assert!((0..k).all(|j| f(j) < f(k)));
            }
        }
    }

    #[test]
    fn concavity_checks() {
        assert_eq!(profit_concavity(&Demand::linear(10), 0, 10), Concavity::Strict);
        assert_eq!(profit_concavity(&Demand::inelastic(10), 0, 10), Concavity::Weak);
        let bumpy = Demand::from_samples(vec![1.0, 1.0, 0.2, 0.2, 0.2]).unwrap();
        assert_eq!(profit_concavity(&bumpy, 0, 4), Concavity::None);
    }

    #[test]
    fn classification_matches_enumeration() {
        let cases: Vec<(u32, Vec<u32>, Demand)> = vec![
            (6, vec![0, 0], Demand::linear(6)),
            (8, vec![0, 0, 3], Demand::linear(8)),
            (6, vec![1, 1, 2], Demand::linear(6)),
            (5, vec![0, 0, 0], Demand::inelastic(5)),
            (6, vec![0, 0, 0, 2], Demand::inelastic(6)),
            (6, vec![0, 0], Demand::inelastic(6)),
            (7, vec![0, 0, 4], Demand::inelastic(7)),
            (6, vec![0, 0, 1], Demand::inelastic(6)),
        ];
        for (n, costs, demand) in cases {
            let market = BertrandMarket::new(n, costs.clone(), demand).unwrap();
            let found = classify_bertrand_pure_nash(&market).unwrap();
            assert!(!found.is_empty());
            for f in &found {
                assert_ne!(f.class, NashClass::Unclassified, "n={n} costs={costs:?} prices={:?}", f.prices);
            }
            // and every structurally typed vector is an equilibrium
            let game = market.game().unwrap();
            let typed = (0..game.num_outcomes())
                .filter(|&o| {
                    let p: Vec<u32> = game.outcome(o).into_iter().map(|k| k as u32).collect();
                    nash_class_of(&market, &p) != NashClass::Unclassified
                })
                .count();
            assert_eq!(typed, found.len(), "n={n} costs={costs:?}");
        }
    }

    #[test]
    fn flat_demand_duopoly_has_two_step_equilibria() {
        let market = BertrandMarket::new(6, vec![0, 0], Demand::inelastic(6)).unwrap();
        let found = classify_bertrand_pure_nash(&market).unwrap();
        assert!(found.iter().any(|f| f.class == NashClass::TwoAboveCost && f.prices == vec![2, 2]));
    }

    #[test]
    fn strictly_concave_markets_have_only_the_two_main_types() {
        for costs in [vec![0, 0], vec![0, 0, 0], vec![1, 1, 4]] {
            let market = BertrandMarket::new(8, costs, Demand::linear(8)).unwrap();
            for f in classify_bertrand_pure_nash(&market).unwrap() {
                assert!(matches!(f.class, NashClass::LowestCostTie | NashClass::OneAboveCost));
            }
        }
    }
}
