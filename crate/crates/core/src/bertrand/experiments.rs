use serde::{Deserialize, Serialize};

use crate::equilibria::{build_cce_lp, build_semicoarse_extension_lp, objective_from_values, solve_equilibrium, EquilibriumLp};
use crate::error::{Error, Result};
use crate::game::{make_bertrand, make_first_price, Demand, NormalFormGame, OutcomeDistribution, PriceGrid};

/// Largest grid the experiments accept.
pub const FIG_MAX_N: u32 = 15;

/// Optimal distribution of a two-player program laid out for plotting.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeatmapSide {
    pub value: f64,
    /// Action values of the first and second player.
    pub axis: [Vec<f64>; 2],
    pub sigma: OutcomeDistribution,
}

impl HeatmapSide {
    /// Outcomes carrying more than `tol` mass, as value pairs with their mass.
    pub fn support(&self, tol: f64) -> Vec<(f64, f64, f64)> {
        let cols = self.axis[1].len();
        self.sigma
            .support(tol)
            .into_iter()
            .map(|o| (self.axis[0][o / cols], self.axis[1][o % cols], self.sigma.0[o]))
            .collect()
    }
}

fn side(game: &NormalFormGame, b: &EquilibriumLp) -> Result<HeatmapSide> {
    let sol = solve_equilibrium(b)?;
    if !sol.raw.is_optimal() {
        return Err(Error::Precondition(format!("experiment program is {:?}", sol.status)));
    }
    Ok(HeatmapSide {
        value: sol.value,
        axis: [game.actions(0).values.clone(), game.actions(1).values.clone()],
        sigma: sol.sigma,
    })
}

fn check_n(n: u32) -> Result<()> {
    if !(2..=FIG_MAX_N).contains(&n) {
        return Err(Error::TooLarge(format!("grid size {n} outside 2..={FIG_MAX_N}")));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fig1Result {
    pub n: u32,
    pub cce: HeatmapSide,
    pub semicoarse: HeatmapSide,
}

/// Largest expected `p1^2 + p2^2` in a zero-cost duopoly with demand
/// `1 - p`, over coarse and over semicoarse correlated equilibria.
pub fn fig1_experiment(n: u32) -> Result<Fig1Result> {
    check_n(n)?;
    let game = make_bertrand(n, &[0, 0], &Demand::linear(n))?;
    let d = objective_from_values(&game, |p| p.iter().map(|x| x * x).sum());
    Ok(Fig1Result {
        n,
        cce: side(&game, &build_cce_lp(&game, &d)?)?,
        semicoarse: side(&game, &build_semicoarse_extension_lp(&game, &d)?)?,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fig2Result {
    pub n: u32,
    /// Bids on the uniform grid `k/n`.
    pub uniform: HeatmapSide,
    /// Bids on the grid `(k/n)^2`.
    pub squared: HeatmapSide,
}

/// Largest expected squared distance of the bids from `(1, 1)` over
/// semicoarse equilibria of a first-price auction between two buyers who
/// both value the item at one, on two bid grids.
pub fn fig2_experiment(n: u32) -> Result<Fig2Result> {
    check_n(n)?;
    let run = |grid: PriceGrid| -> Result<HeatmapSide> {
        let game = make_first_price(n, &[n, n], &grid)?;
        let d = objective_from_values(&game, |b| b.iter().map(|x| (1.0 - x) * (1.0 - x)).sum());
        side(&game, &build_semicoarse_extension_lp(&game, &d)?)
    };
    Ok(Fig2Result { n, uniform: run(PriceGrid::uniform(n)?)?, squared: run(PriceGrid::squared(n)?)? })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_fig1() {
        let r = fig1_experiment(6).unwrap();
        assert!((r.semicoarse.value - 2.0 / 36.0).abs() < 1e-9);
        assert!(r.cce.value >= r.semicoarse.value - 1e-9);
        assert!(fig1_experiment(16).is_err());
    }
}
