use super::{build_transform_lp, guard_rows, EquilibriumLp, LpKind};
use crate::error::{Error, Result};
use crate::game::{ActionSet, NormalFormGame, OutcomeDistribution};
use crate::transforms::{canonical_count, enumerate_weighted_canonical};

/// Semicoarse program for the weighted canonical family: player `i`'s subset
/// and cycle transforms are taken with respect to the weights `weights[i]`.
pub fn build_weighted_semicoarse_lp(game: &NormalFormGame, weights: &[Vec<f64>], d: &[f64]) -> Result<EquilibriumLp> {
    if weights.len() != game.num_players() {
        return Err(Error::Shape(format!("{} weight vectors for {} players", weights.len(), game.num_players())));
    }
    for (i, w) in weights.iter().enumerate() {
        if w.len() != game.num_actions(i) {
            return Err(Error::Shape(format!("player {i}: {} weights for {} actions", w.len(), game.num_actions(i))));
        }
    }
    guard_rows(weights.iter().map(|w| canonical_count(w.len())))?;
    let families = weights
        .iter()
        .map(|w| enumerate_weighted_canonical(w, None))
        .collect::<Result<Vec<_>>>()?;
    let lp = build_transform_lp(game, d, &families)?;
    Ok(EquilibriumLp { kind: LpKind::WeightedSemicoarse, lp, num_outcomes: game.num_outcomes() })
}

/// A game in which every action `a` of player `i` is split into `w_i(a)`
/// payoff-identical copies.
#[derive(Clone, Debug)]
pub struct ExpandedGame {
    pub game: NormalFormGame,
    /// `origin[i][k]` is the original action behind copy `k` of player `i`.
    pub origin: Vec<Vec<usize>>,
}

pub fn expand_weighted_game(game: &NormalFormGame, weights: &[Vec<u32>]) -> Result<ExpandedGame> {
    if weights.len() != game.num_players() {
        return Err(Error::Shape(format!("{} weight vectors for {} players", weights.len(), game.num_players())));
    }
    let mut origin = Vec::new();
    let mut actions = Vec::new();
    for (i, w) in weights.iter().enumerate() {
        let base = game.actions(i);
        if w.len() != base.len() {
            return Err(Error::Shape(format!("player {i}: {} weights for {} actions", w.len(), base.len())));
        }
        if w.contains(&0) {
            return Err(Error::Invalid("copy counts must be positive".into()));
        }
        let mut o = Vec::new();
        let mut set = ActionSet { labels: Vec::new(), values: Vec::new() };
        for (a, &k) in w.iter().enumerate() {
            for c in 0..k {
                o.push(a);
                set.labels.push(format!("{}#{c}", base.labels[a]));
                set.values.push(base.values[a]);
            }
        }
        origin.push(o);
        actions.push(set);
    }
    let expanded = NormalFormGame::from_fn(actions, |prof| {
        let orig: Vec<usize> = prof.iter().enumerate().map(|(i, &k)| origin[i][k]).collect();
        let o = game.outcome_index(&orig);
        (0..game.num_players()).map(|i| game.utility(i, o)).collect()
    })?;
    Ok(ExpandedGame { game: expanded, origin })
}

impl ExpandedGame {
    /// Original outcome behind an outcome of the expanded game.
    pub fn project_outcome(&self, original: &NormalFormGame, outcome: usize) -> usize {
        let prof: Vec<usize> = self
            .game
            .outcome(outcome)
            .iter()
            .enumerate()
            .map(|(i, &k)| self.origin[i][k])
            .collect();
        original.outcome_index(&prof)
    }

    pub fn project_distribution(&self, original: &NormalFormGame, sigma: &OutcomeDistribution) -> OutcomeDistribution {
        let mut out = vec![0.0; original.num_outcomes()];
        for (o, &p) in sigma.0.iter().enumerate() {
            out[self.project_outcome(original, o)] += p;
        }
        OutcomeDistribution(out)
    }
}

/// Objective on the expanded game that scores each copy like its original.
pub fn lift_objective(exp: &ExpandedGame, original: &NormalFormGame, d: &[f64]) -> Vec<f64> {
    (0..exp.game.num_outcomes())
        .map(|o| d[exp.project_outcome(original, o)])
        .collect()
}
