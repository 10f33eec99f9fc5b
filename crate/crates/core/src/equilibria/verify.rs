use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{ConstraintSlack, NormalFormGame, OutcomeDistribution};
use crate::transforms::{CanonicalTransform, GeneratorPair, TransformMatrix};

/// Utility change for `player` at a pure outcome when their action is
/// replaced by its image under `p`.
pub fn transform_gain(game: &NormalFormGame, player: usize, p: &TransformMatrix, outcome: usize) -> f64 {
    let a = game.action_of(outcome, player);
    let moved: f64 = (0..game.num_actions(player))
        .map(|a2| p.get(a2, a) * game.utility(player, game.deviate(outcome, player, a2)))
        .sum();
    moved - game.utility(player, outcome)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub tol: f64,
    /// Expected gain under every transform checked; each must be `<= tol`.
    pub constraints: Vec<ConstraintSlack>,
    pub max_violation: f64,
    pub passed: bool,
}

/// Checks `sigma` against every transform in `families[i]` for each player `i`.
pub fn verify_distribution(
    game: &NormalFormGame,
    sigma: &OutcomeDistribution,
    families: &[Vec<CanonicalTransform>],
    tol: f64,
) -> Result<VerificationReport> {
    sigma.validate(game)?;
    if families.len() != game.num_players() {
        return Err(Error::Shape(format!("{} transform families for {} players", families.len(), game.num_players())));
    }
    let support: Vec<usize> = (0..game.num_outcomes()).filter(|&o| sigma.0[o] != 0.0).collect();
    let mut constraints = Vec::new();
    for (i, family) in families.iter().enumerate() {
        for t in family {
            if t.matrix.dim() != game.num_actions(i) {
                return Err(Error::Shape(format!("transform {} does not act on player {i}", t.name())));
            }
            let value = support
                .iter()
                .map(|&o| sigma.0[o] * transform_gain(game, i, &t.matrix, o))
                .sum();
            constraints.push(ConstraintSlack { name: format!("player{i}:{}", t.name()), player: i, value });
        }
    }
    let max_violation = constraints.iter().map(|c| c.value).fold(f64::NEG_INFINITY, f64::max);
    Ok(VerificationReport { tol, passed: max_violation <= tol, max_violation, constraints })
}

/// Expected first-order gain of `player` along the generator `Z (Q, q)`.
///
/// `Z (Q + q 1')` must conserve mass and be non-negative off the diagonal;
/// the returned value is `<= 0` when `sigma` respects the scaled deviation.
pub fn verify_scaled_constraint(
    game: &NormalFormGame,
    sigma: &OutcomeDistribution,
    player: usize,
    z: &Array2<f64>,
    pair: &GeneratorPair,
) -> Result<f64> {
    sigma.validate(game)?;
    let m = game.num_actions(player);
    if z.dim() != (m, m) || pair.dim() != m {
        return Err(Error::Shape(format!("scaling and generator must be {m}x{m}")));
    }
    let g = z.dot(&pair.column_matrix());
    for a in 0..m {
        let s: f64 = g.column(a).sum();
        if s.abs() > 1e-9 {
            return Err(Error::Precondition(format!("scaled generator column {a} sums to {s}")));
        }
        if let Some(a2) = (0..m).find(|&a2| a2 != a && g[(a2, a)] < -1e-9) {
            return Err(Error::Precondition(format!("scaled generator entry ({a2},{a}) is negative")));
        }
    }
    let mut total = 0.0;
    for o in (0..game.num_outcomes()).filter(|&o| sigma.0[o] != 0.0) {
        let a = game.action_of(o, player);
        let gain: f64 = (0..m)
            .map(|a2| g[(a2, a)] * game.utility(player, game.deviate(o, player, a2)))
            .sum();
        total += sigma.0[o] * gain;
    }
    Ok(total)
}
