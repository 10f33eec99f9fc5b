//! Linear programs over outcome distributions: correlated, coarse correlated
//! and semicoarse correlated equilibria.
//!
//! Every builder returns an [`EquilibriumLp`] whose first `|A|` columns are the
//! outcome probabilities, so solutions of different formulations can be
//! compared directly.

mod lyapunov;
mod verify;
mod weighted;

pub use lyapunov::{build_dual_lyapunov_lp, check_lyapunov_certificate, extract_certificate, LyapunovCertificate, LyapunovLp};
pub use verify::{transform_gain, verify_distribution, verify_scaled_constraint, VerificationReport};
pub use weighted::{build_weighted_semicoarse_lp, expand_weighted_game, lift_objective, ExpandedGame};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{is_pure_nash, NormalFormGame, OutcomeDistribution};
use crate::lp::{self, LinearProgram, LpSolution, LpStatus, Relation, SolverOptions, VarBound};
use crate::transforms::{canonical_count, enumerate_canonical, CanonicalTransform};

/// Largest number of deviation rows the enumerated formulation will build.
pub const MAX_ENUMERATED_ROWS: u128 = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LpKind {
    CorrelatedEquilibrium,
    CoarseCorrelatedEquilibrium,
    SemicoarseEnumerated,
    SemicoarseExtension,
    WeightedSemicoarse,
}

#[derive(Clone, Debug)]
pub struct EquilibriumLp {
    pub kind: LpKind,
    pub lp: LinearProgram,
    pub num_outcomes: usize,
}

#[derive(Clone, Debug)]
pub struct EquilibriumSolution {
    pub status: LpStatus,
    pub value: f64,
    pub sigma: OutcomeDistribution,
    pub raw: LpSolution,
}

/// Per-outcome objective `d(a)`, maximised in expectation.
pub fn objective_from_values(game: &NormalFormGame, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    (0..game.num_outcomes()).map(|o| f(&game.outcome_values(o))).collect()
}

/// `d(a) = 1` on outcomes that are not pure Nash equilibria.
pub fn objective_not_nash(game: &NormalFormGame) -> Vec<f64> {
    (0..game.num_outcomes())
        .map(|o| if is_pure_nash(game, o, 1e-12) { 0.0 } else { 1.0 })
        .collect()
}

/// `d(a) = 1` when `player` plays `action`.
pub fn objective_indicator(game: &NormalFormGame, player: usize, action: usize) -> Vec<f64> {
    (0..game.num_outcomes())
        .map(|o| if game.action_of(o, player) == action { 1.0 } else { 0.0 })
        .collect()
}

fn check_objective(game: &NormalFormGame, d: &[f64]) -> Result<()> {
    if d.len() != game.num_outcomes() {
        return Err(Error::Shape(format!("objective has {} entries for {} outcomes", d.len(), game.num_outcomes())));
    }
    if d.iter().any(|v| !v.is_finite()) {
        return Err(Error::Invalid("objective must be finite".into()));
    }
    Ok(())
}

/// Starts a program with one probability column per outcome and the
/// normalisation row.
fn simplex_lp(game: &NormalFormGame, d: &[f64]) -> Result<LinearProgram> {
    check_objective(game, d)?;
    let mut lp = LinearProgram::new();
    for (o, &v) in d.iter().enumerate() {
        lp.add_var(format!("sigma_{o}"), VarBound::NonNegative, v);
    }
    lp.add_constraint("prob", (0..game.num_outcomes()).map(|o| (o, 1.0)), Relation::Eq, 1.0);
    Ok(lp)
}

pub fn build_cce_lp(game: &NormalFormGame, d: &[f64]) -> Result<EquilibriumLp> {
    let mut lp = simplex_lp(game, d)?;
    for i in 0..game.num_players() {
        for dev in 0..game.num_actions(i) {
            let coeffs = (0..game.num_outcomes())
                .map(|o| (o, game.utility(i, game.deviate(o, i, dev)) - game.utility(i, o)));
            lp.add_constraint(format!("cce_{i}_{dev}"), coeffs, Relation::Le, 0.0);
        }
    }
    Ok(EquilibriumLp { kind: LpKind::CoarseCorrelatedEquilibrium, lp, num_outcomes: game.num_outcomes() })
}

pub fn build_ce_lp(game: &NormalFormGame, d: &[f64]) -> Result<EquilibriumLp> {
    let mut lp = simplex_lp(game, d)?;
    for i in 0..game.num_players() {
        let m = game.num_actions(i);
        for from in 0..m {
            for to in (0..m).filter(|&to| to != from) {
                let coeffs = (0..game.num_outcomes())
                    .filter(|&o| game.action_of(o, i) == from)
                    .map(|o| (o, game.utility(i, game.deviate(o, i, to)) - game.utility(i, o)));
                lp.add_constraint(format!("ce_{i}_{from}_{to}"), coeffs, Relation::Le, 0.0);
            }
        }
    }
    Ok(EquilibriumLp { kind: LpKind::CorrelatedEquilibrium, lp, num_outcomes: game.num_outcomes() })
}

/// One `<= 0` row per player and transform in `families[i]`.
pub fn build_transform_lp(game: &NormalFormGame, d: &[f64], families: &[Vec<CanonicalTransform>]) -> Result<LinearProgram> {
    if families.len() != game.num_players() {
        return Err(Error::Shape(format!("{} transform families for {} players", families.len(), game.num_players())));
    }
    let mut lp = simplex_lp(game, d)?;
    for (i, family) in families.iter().enumerate() {
        for (k, t) in family.iter().enumerate() {
            if t.matrix.dim() != game.num_actions(i) {
                return Err(Error::Shape(format!("transform {} does not act on player {i}'s actions", t.name())));
            }
            let coeffs = (0..game.num_outcomes()).map(|o| (o, transform_gain(game, i, &t.matrix, o)));
            lp.add_constraint(format!("dev_{i}_{k}"), coeffs, Relation::Le, 0.0);
        }
    }
    Ok(lp)
}

pub(crate) fn guard_rows(counts: impl Iterator<Item = u128>) -> Result<()> {
    let total: u128 = counts.sum();
    if total > MAX_ENUMERATED_ROWS {
        return Err(Error::TooLarge(format!(
            "{total} deviation rows exceed the limit of {MAX_ENUMERATED_ROWS}; use the extension formulation"
        )));
    }
    Ok(())
}

/// Semicoarse program with one row per canonical transform of each player.
pub fn build_semicoarse_enumerated_lp(game: &NormalFormGame, d: &[f64]) -> Result<EquilibriumLp> {
    let sizes = game.sizes();
    guard_rows(sizes.iter().map(|&m| canonical_count(m)))?;
    let families = sizes
        .iter()
        .map(|&m| enumerate_canonical(m, None))
        .collect::<Result<Vec<_>>>()?;
    let lp = build_transform_lp(game, d, &families)?;
    Ok(EquilibriumLp { kind: LpKind::SemicoarseEnumerated, lp, num_outcomes: game.num_outcomes() })
}

/// Polynomial-size semicoarse program in which the deviation generators are
/// dualised away: per player, non-negative `gamma(a', a)` for each ordered
/// pair of distinct actions and one free antisymmetric `rho` per unordered
/// pair.
pub fn build_semicoarse_extension_lp(game: &NormalFormGame, d: &[f64]) -> Result<EquilibriumLp> {
    let mut lp = simplex_lp(game, d)?;
    for i in 0..game.num_players() {
        let m = game.num_actions(i);
        let mut gamma = vec![vec![usize::MAX; m]; m];
        for a2 in 0..m {
            for a in (0..m).filter(|&a| a != a2) {
                gamma[a2][a] = lp.add_var(format!("gamma_{i}_{a2}_{a}"), VarBound::NonNegative, 0.0);
            }
        }
        let mut rho = vec![vec![usize::MAX; m]; m];
        for u in 0..m {
            for v in u + 1..m {
                rho[u][v] = lp.add_var(format!("rho_{i}_{u}_{v}"), VarBound::Free, 0.0);
            }
        }
        // rho(a, a') - rho(a', a) = 2 rho(a, a') for the antisymmetric rho
        let rho_diff = |a: usize, a2: usize| {
            if a < a2 {
                (rho[a][a2], 2.0)
            } else {
                (rho[a2][a], -2.0)
            }
        };
        for a2 in 0..m {
            for a in (0..m).filter(|&a| a != a2) {
                let mut coeffs = vec![(gamma[a2][a], 1.0), rho_diff(a, a2)];
                for o in (0..game.num_outcomes()).filter(|&o| game.action_of(o, i) == a) {
                    coeffs.push((o, game.utility(i, game.deviate(o, i, a2)) - game.utility(i, o)));
                }
                lp.add_constraint(format!("gen_{i}_{a2}_{a}"), coeffs, Relation::Eq, 0.0);
            }
        }
        for a2 in 0..m {
            let mut coeffs: Vec<(usize, f64)> = (0..m).filter(|&a| a != a2).map(|a| (gamma[a2][a], 1.0)).collect();
            for o in 0..game.num_outcomes() {
                coeffs.push((o, game.utility(i, game.deviate(o, i, a2)) - game.utility(i, o)));
            }
            lp.add_constraint(format!("drift_{i}_{a2}"), coeffs, Relation::Eq, 0.0);
        }
    }
    Ok(EquilibriumLp { kind: LpKind::SemicoarseExtension, lp, num_outcomes: game.num_outcomes() })
}

pub fn solve_equilibrium(b: &EquilibriumLp) -> Result<EquilibriumSolution> {
    solve_equilibrium_with(b, &SolverOptions::default())
}

pub fn solve_equilibrium_with(b: &EquilibriumLp, opts: &SolverOptions) -> Result<EquilibriumSolution> {
    let raw = lp::solve_with(&b.lp, opts)?;
    let mut sigma: Vec<f64> = raw.primal[..b.num_outcomes].iter().map(|&p| p.max(0.0)).collect();
    let total: f64 = sigma.iter().sum();
    if raw.is_optimal() && total > 0.0 {
        sigma.iter_mut().for_each(|p| *p /= total);
    }
    Ok(EquilibriumSolution { status: raw.status, value: raw.value, sigma: OutcomeDistribution(sigma), raw })
}
