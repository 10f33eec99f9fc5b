//! Finite normal-form games stored as dense utility tensors.
//!
//! Outcomes are indexed row-major with the last player varying fastest, so
//! `outcome_index(&[a0, a1, ..])` matches the layout of every per-player
//! utility vector.

mod build;
mod market;

pub use build::{make_bad_game, make_rps_embedded, random_game, rps_pattern};
pub use market::{make_bertrand, make_first_price, Demand, PriceGrid};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActionSet {
    pub labels: Vec<String>,
    /// Numeric value attached to each action (price, bid, or just the index).
    pub values: Vec<f64>,
}

impl ActionSet {
    pub fn indexed(n: usize) -> Self {
        ActionSet {
            labels: (0..n).map(|k| k.to_string()).collect(),
            values: (0..n).map(|k| k as f64).collect(),
        }
    }

    pub fn labelled(labels: &[&str]) -> Self {
        ActionSet {
            labels: labels.iter().map(|s| s.to_string()).collect(),
            values: (0..labels.len()).map(|k| k as f64).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GameJson", into = "GameJson")]
pub struct NormalFormGame {
    actions: Vec<ActionSet>,
    utilities: Vec<Vec<f64>>,
    strides: Vec<usize>,
    num_outcomes: usize,
}

impl NormalFormGame {
    pub fn new(actions: Vec<ActionSet>, utilities: Vec<Vec<f64>>) -> Result<Self> {
        if actions.is_empty() {
            return Err(Error::Empty("game has no players".into()));
        }
        for (i, a) in actions.iter().enumerate() {
            if a.is_empty() {
                return Err(Error::Empty(format!("player {i} has no actions")));
            }
            if a.values.len() != a.labels.len() {
                return Err(Error::Shape(format!(
                    "player {i}: {} labels but {} values",
                    a.labels.len(),
                    a.values.len()
                )));
            }
        }
        if utilities.len() != actions.len() {
            return Err(Error::Shape(format!(
                "{} players but {} utility tensors",
                actions.len(),
                utilities.len()
            )));
        }
        let n = actions.len();
        let mut strides = vec![1usize; n];
        for i in (0..n.saturating_sub(1)).rev() {
            strides[i] = strides[i + 1]
                .checked_mul(actions[i + 1].len())
                .ok_or_else(|| Error::TooLarge("outcome space overflows usize".into()))?;
        }
        let num_outcomes = strides[0]
            .checked_mul(actions[0].len())
            .ok_or_else(|| Error::TooLarge("outcome space overflows usize".into()))?;
        for (i, u) in utilities.iter().enumerate() {
            if u.len() != num_outcomes {
                return Err(Error::Shape(format!(
                    "player {i}: utility tensor has {} entries, expected {num_outcomes}",
                    u.len()
                )));
            }
            if let Some(k) = u.iter().position(|x| !x.is_finite()) {
                return Err(Error::Invalid(format!("player {i}: non-finite utility at outcome {k}")));
            }
        }
        Ok(NormalFormGame { actions, utilities, strides, num_outcomes })
    }

    /// Builds a game by evaluating `f` on every pure outcome; `f` returns one
    /// utility per player.
    pub fn from_fn<F>(actions: Vec<ActionSet>, mut f: F) -> Result<Self>
    where
        F: FnMut(&[usize]) -> Vec<f64>,
    {
        let n = actions.len();
        let total: usize = actions.iter().map(|a| a.len()).product();
        let mut utilities = vec![Vec::with_capacity(total); n];
        let sizes: Vec<usize> = actions.iter().map(|a| a.len()).collect();
        let mut profile = vec![0usize; n];
        for _ in 0..total {
            let u = f(&profile);
            if u.len() != n {
                return Err(Error::Shape(format!("utility function returned {} values for {n} players", u.len())));
            }
            for (i, x) in u.into_iter().enumerate() {
                utilities[i].push(x);
            }
            advance(&mut profile, &sizes);
        }
        NormalFormGame::new(actions, utilities)
    }

    pub fn num_players(&self) -> usize {
        self.actions.len()
    }

    pub fn num_actions(&self, player: usize) -> usize {
        self.actions[player].len()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.actions.iter().map(|a| a.len()).collect()
    }

    pub fn num_outcomes(&self) -> usize {
        self.num_outcomes
    }

    pub fn actions(&self, player: usize) -> &ActionSet {
        &self.actions[player]
    }

    pub fn utilities(&self, player: usize) -> &[f64] {
        &self.utilities[player]
    }

    pub fn utility(&self, player: usize, outcome: usize) -> f64 {
        self.utilities[player][outcome]
    }

    pub fn stride(&self, player: usize) -> usize {
        self.strides[player]
    }

    pub fn outcome_index(&self, profile: &[usize]) -> usize {
        profile.iter().zip(&self.strides).map(|(a, s)| a * s).sum()
    }

    pub fn outcome(&self, index: usize) -> Vec<usize> {
        (0..self.num_players()).map(|i| self.action_of(index, i)).collect()
    }

    pub fn action_of(&self, outcome: usize, player: usize) -> usize {
        (outcome / self.strides[player]) % self.actions[player].len()
    }

    /// Outcome reached when `player` switches to `action` and everyone else stays.
    pub fn deviate(&self, outcome: usize, player: usize, action: usize) -> usize {
        let current = self.action_of(outcome, player);
        outcome + action * self.strides[player] - current * self.strides[player]
    }

    /// Numeric values of the actions played at an outcome.
    pub fn outcome_values(&self, outcome: usize) -> Vec<f64> {
        (0..self.num_players())
            .map(|i| self.actions[i].values[self.action_of(outcome, i)])
            .collect()
    }

    pub fn outcome_label(&self, outcome: usize) -> String {
        let parts: Vec<&str> = (0..self.num_players())
            .map(|i| self.actions[i].labels[self.action_of(outcome, i)].as_str())
            .collect();
        format!("({})", parts.join(","))
    }
}

/// Steps a mixed-radix counter (last digit fastest).
pub(crate) fn advance(profile: &mut [usize], sizes: &[usize]) {
    for i in (0..profile.len()).rev() {
        profile[i] += 1;
        if profile[i] < sizes[i] {
            return;
        }
        profile[i] = 0;
    }
}

#[derive(Serialize, Deserialize)]
struct GameJson {
    players: usize,
    actions: Vec<ActionSet>,
    utilities: Vec<Value>,
}

impl From<NormalFormGame> for GameJson {
    fn from(g: NormalFormGame) -> Self {
        let sizes = g.sizes();
        let utilities = g.utilities.iter().map(|u| nest(u, &sizes)).collect();
        GameJson { players: g.num_players(), actions: g.actions, utilities }
    }
}

impl TryFrom<GameJson> for NormalFormGame {
    type Error = Error;

    fn try_from(j: GameJson) -> Result<Self> {
        if j.players != j.actions.len() {
            return Err(Error::Shape(format!("players = {} but {} action sets", j.players, j.actions.len())));
        }
        let sizes: Vec<usize> = j.actions.iter().map(|a| a.len()).collect();
        let mut utilities = Vec::with_capacity(j.players);
        for v in &j.utilities {
            let mut flat = Vec::new();
            flatten(v, &sizes, &mut flat)?;
            utilities.push(flat);
        }
        NormalFormGame::new(j.actions, utilities)
    }
}

fn nest(flat: &[f64], sizes: &[usize]) -> Value {
    if sizes.len() == 1 {
        return Value::Array(flat.iter().map(|&x| Value::from(x)).collect());
    }
    let chunk = flat.len() / sizes[0];
    Value::Array(flat.chunks(chunk).map(|c| nest(c, &sizes[1..])).collect())
}

fn flatten(v: &Value, sizes: &[usize], out: &mut Vec<f64>) -> Result<()> {
    let arr = v
        .as_array()
        .ok_or_else(|| Error::Shape("utility tensor must be a nested array".into()))?;
    if arr.len() != sizes[0] {
        return Err(Error::Shape(format!("expected {} entries, found {}", sizes[0], arr.len())));
    }
    for item in arr {
        if sizes.len() == 1 {
            let x = item
                .as_f64()
                .ok_or_else(|| Error::Shape("utility entries must be numbers".into()))?;
            out.push(x);
        } else {
            flatten(item, &sizes[1..], out)?;
        }
    }
    Ok(())
}

/// One probability vector per player.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixedProfile(pub Vec<Vec<f64>>);

impl MixedProfile {
    pub fn uniform(game: &NormalFormGame) -> Self {
        MixedProfile(
            game.sizes()
                .into_iter()
                .map(|m| vec![1.0 / m as f64; m])
                .collect(),
        )
    }

    pub fn pure(game: &NormalFormGame, profile: &[usize]) -> Self {
        MixedProfile(
            game.sizes()
                .into_iter()
                .zip(profile)
                .map(|(m, &a)| {
                    let mut x = vec![0.0; m];
                    x[a] = 1.0;
                    x
                })
                .collect(),
        )
    }

    pub fn validate(&self, game: &NormalFormGame, tol: f64) -> Result<()> {
        if self.0.len() != game.num_players() {
            return Err(Error::Shape(format!(
                "profile has {} players, game has {}",
                self.0.len(),
                game.num_players()
            )));
        }
        for (i, x) in self.0.iter().enumerate() {
            if x.len() != game.num_actions(i) {
                return Err(Error::Shape(format!("player {i}: {} probabilities for {} actions", x.len(), game.num_actions(i))));
            }
            check_simplex(x, tol).map_err(|e| Error::Invalid(format!("player {i}: {e}")))?;
        }
        Ok(())
    }
}

fn check_simplex(x: &[f64], tol: f64) -> std::result::Result<(), String> {
    if let Some(v) = x.iter().find(|v| !v.is_finite() || **v < -tol) {
        return Err(format!("entry {v} is negative or not finite"));
    }
    let s: f64 = x.iter().sum();
    if (s - 1.0).abs() > tol {
        return Err(format!("probabilities sum to {s}"));
    }
    Ok(())
}

/// A probability distribution over pure outcomes, indexed like the utility tensors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutcomeDistribution(pub Vec<f64>);

impl OutcomeDistribution {
    pub fn point_mass(game: &NormalFormGame, outcome: usize) -> Self {
        let mut p = vec![0.0; game.num_outcomes()];
        p[outcome] = 1.0;
        OutcomeDistribution(p)
    }

    pub fn validate(&self, game: &NormalFormGame) -> Result<()> {
        if self.0.len() != game.num_outcomes() {
            return Err(Error::Shape(format!(
                "distribution has {} entries, game has {} outcomes",
                self.0.len(),
                game.num_outcomes()
            )));
        }
        if let Some(v) = self.0.iter().find(|v| !v.is_finite() || **v < -1e-12) {
            return Err(Error::Invalid(format!("negative or non-finite mass {v}")));
        }
        let s: f64 = self.0.iter().sum();
        if (s - 1.0).abs() > 1e-9 {
            return Err(Error::Invalid(format!("masses sum to {s}")));
        }
        Ok(())
    }

    /// Outcomes carrying more than `tol` mass.
    pub fn support(&self, tol: f64) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > tol)
            .map(|(k, _)| k)
            .collect()
    }

    pub fn expectation(&self, values: &[f64]) -> f64 {
        self.0.iter().zip(values).map(|(p, v)| p * v).sum()
    }
}

/// Product distribution induced by a mixed profile.
pub fn product_distribution(game: &NormalFormGame, profile: &MixedProfile) -> Vec<f64> {
    let sizes = game.sizes();
    let mut out = Vec::with_capacity(game.num_outcomes());
    let mut a = vec![0usize; sizes.len()];
    for _ in 0..game.num_outcomes() {
        out.push(a.iter().enumerate().map(|(j, &aj)| profile.0[j][aj]).product());
        advance(&mut a, &sizes);
    }
    out
}

pub fn expected_utility(game: &NormalFormGame, profile: &MixedProfile, player: usize) -> Result<f64> {
    profile.validate(game, 1e-9)?;
    let p = product_distribution(game, profile);
    Ok(p.iter().zip(game.utilities(player)).map(|(w, u)| w * u).sum())
}

/// Gradient of `player`'s expected utility with respect to their own mixed strategy.
pub fn utility_gradient(game: &NormalFormGame, profile: &MixedProfile, player: usize) -> Result<Vec<f64>> {
    profile.validate(game, 1e-9)?;
    Ok(gradient_unchecked(game, profile, player))
}

pub(crate) fn gradient_unchecked(game: &NormalFormGame, profile: &MixedProfile, player: usize) -> Vec<f64> {
    let sizes = game.sizes();
    let mut grad = vec![0.0; sizes[player]];
    let u = game.utilities(player);
    let mut a = vec![0usize; sizes.len()];
    for &ui in u.iter() {
        let mut w = 1.0;
        for (j, &aj) in a.iter().enumerate() {
            if j != player {
                w *= profile.0[j][aj];
            }
        }
        grad[a[player]] += ui * w;
        advance(&mut a, &sizes);
    }
    grad
}

/// Average over rounds of the product distributions of a sequence of profiles.
pub fn time_avg_outcome_distribution(game: &NormalFormGame, profiles: &[MixedProfile]) -> Result<OutcomeDistribution> {
    if profiles.is_empty() {
        return Err(Error::Empty("trajectory has no rounds".into()));
    }
    let mut acc = vec![0.0; game.num_outcomes()];
    for x in profiles {
        for (s, p) in acc.iter_mut().zip(product_distribution(game, x)) {
            *s += p;
        }
    }
    let t = profiles.len() as f64;
    acc.iter_mut().for_each(|s| *s /= t);
    Ok(OutcomeDistribution(acc))
}

/// Largest gain any player obtains from a unilateral switch at a pure outcome.
pub fn best_deviation_gain(game: &NormalFormGame, outcome: usize) -> f64 {
    let mut best: f64 = 0.0;
    for i in 0..game.num_players() {
        let here = game.utility(i, outcome);
        for a in 0..game.num_actions(i) {
            best = best.max(game.utility(i, game.deviate(outcome, i, a)) - here);
        }
    }
    best
}

pub fn is_pure_nash(game: &NormalFormGame, outcome: usize, tol: f64) -> bool {
    best_deviation_gain(game, outcome) <= tol
}

/// All pure Nash equilibria, as outcome indices in increasing order.
pub fn enumerate_pure_nash(game: &NormalFormGame) -> Vec<usize> {
    (0..game.num_outcomes())
        .filter(|&o| is_pure_nash(game, o, 1e-12))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstraintSlack {
    pub name: String,
    pub player: usize,
    /// Left-hand side of the `<= eps` constraint.
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub eps: f64,
    pub constraints: usize,
    /// Largest left-hand side over all constraints.
    pub max_violation: f64,
    pub violations: Vec<ConstraintSlack>,
    pub passed: bool,
}

impl CheckReport {
    pub(crate) fn from_constraints(eps: f64, all: Vec<ConstraintSlack>) -> Self {
        let max_violation = all.iter().map(|c| c.value).fold(f64::NEG_INFINITY, f64::max);
        let constraints = all.len();
        let violations: Vec<_> = all.into_iter().filter(|c| c.value > eps).collect();
        CheckReport { eps, constraints, max_violation, passed: violations.is_empty(), violations }
    }
}

/// Coarse correlated equilibrium check: no fixed action beats following the recommendation by more than `eps`.
pub fn check_epsilon_cce(game: &NormalFormGame, sigma: &OutcomeDistribution, eps: f64) -> Result<CheckReport> {
    sigma.validate(game)?;
    let mut all = Vec::new();
    for i in 0..game.num_players() {
        for dev in 0..game.num_actions(i) {
            let value: f64 = (0..game.num_outcomes())
                .filter(|&o| sigma.0[o] != 0.0)
                .map(|o| sigma.0[o] * (game.utility(i, game.deviate(o, i, dev)) - game.utility(i, o)))
                .sum();
            all.push(ConstraintSlack {
                name: format!("cce[{i}][{}]", game.actions(i).labels[dev]),
                player: i,
                value,
            });
        }
    }
    Ok(CheckReport::from_constraints(eps, all))
}

/// Correlated equilibrium check: for every recommendation `a` and swap `a -> b`.
pub fn check_epsilon_ce(game: &NormalFormGame, sigma: &OutcomeDistribution, eps: f64) -> Result<CheckReport> {
    sigma.validate(game)?;
    let mut all = Vec::new();
    for i in 0..game.num_players() {
        let m = game.num_actions(i);
        for from in 0..m {
            for to in 0..m {
                if from == to {
                    continue;
                }
                let value: f64 = (0..game.num_outcomes())
                    .filter(|&o| game.action_of(o, i) == from && sigma.0[o] != 0.0)
                    .map(|o| sigma.0[o] * (game.utility(i, game.deviate(o, i, to)) - game.utility(i, o)))
                    .sum();
                let labels = &game.actions(i).labels;
                all.push(ConstraintSlack {
                    name: format!("ce[{i}][{}->{}]", labels[from], labels[to]),
                    player: i,
                    value,
                });
            }
        }
    }
    Ok(CheckReport::from_constraints(eps, all))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indexing_round_trip() {
        let g = random_game(&[2, 3, 4], 7).unwrap();
        for o in 0..g.num_outcomes() {
            assert_eq!(g.outcome_index(&g.outcome(o)), o);
        }
        assert_eq!(g.outcome_index(&[1, 2, 3]), 23);
        assert_eq!(g.deviate(g.outcome_index(&[1, 0, 2]), 1, 2), g.outcome_index(&[1, 2, 2]));
    }

    #[test]
    fn json_round_trip_is_exact() {
        let g = random_game(&[3, 2], 11).unwrap();
        let s = serde_json::to_string(&g).unwrap();
        let back: NormalFormGame = serde_json::from_str(&s).unwrap();
        assert_eq!(g, back);
    }

    #[test]
    fn rejects_short_tensor() {
        let r = NormalFormGame::new(vec![ActionSet::indexed(2), ActionSet::indexed(2)], vec![vec![0.0; 4], vec![0.0; 3]]);
        assert!(matches!(r, Err(Error::Shape(_))));
    }

    #[test]
    fn bad_game_gradient_at_uniform() {
        let g = make_bad_game();
        let x = MixedProfile::uniform(&g);
        assert_eq!(utility_gradient(&g, &x, 1).unwrap(), vec![0.5, 0.0, 0.5]);
        assert_eq!(utility_gradient(&g, &x, 0).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn bad_game_nash_and_checks() {
        let g = make_bad_game();
        // (T,L) and (B,R) are strict for player 2; player 1 is indifferent everywhere
        let ne = enumerate_pure_nash(&g);
        assert_eq!(ne, vec![g.outcome_index(&[0, 0]), g.outcome_index(&[1, 2])]);
        let tm = g.outcome_index(&[0, 1]);
        let rep = check_epsilon_cce(&g, &OutcomeDistribution::point_mass(&g, tm), 0.0).unwrap();
        assert!(!rep.passed);
        assert_eq!(rep.max_violation, best_deviation_gain(&g, tm));
        assert_eq!(rep.max_violation, 1.0);
    }

    #[test]
    fn time_average_of_pure_profiles() {
        let g = make_bad_game();
        let a = MixedProfile::pure(&g, &[0, 0]);
        let b = MixedProfile::pure(&g, &[1, 2]);
        let s = time_avg_outcome_distribution(&g, &[a.clone(), a, b]).unwrap();
        assert!((s.0[g.outcome_index(&[0, 0])] - 2.0 / 3.0).abs() < 1e-15);
        assert!((s.0[g.outcome_index(&[1, 2])] - 1.0 / 3.0).abs() < 1e-15);
    }
}
