use serde::{Deserialize, Serialize};

use super::StepSchedule;
use crate::error::{Error, Result};
use crate::game::NormalFormGame;

/// Constants of the regret bound for gradient ascent against a tangential
/// function `h`: `|h| <= m_bound`, `|grad h| <= g_h`, `grad h` is
/// `l_h`-Lipschitz, and player `i`'s utility gradient is bounded by `g[i]`
/// and `l[i]`-Lipschitz.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegretBoundParams {
    pub m_bound: f64,
    pub g_h: f64,
    pub l_h: f64,
    pub g: Vec<f64>,
    pub l: Vec<f64>,
}

impl RegretBoundParams {
    pub fn validate(&self) -> Result<()> {
        let all = [self.m_bound, self.g_h, self.l_h].into_iter().chain(self.g.iter().copied()).chain(self.l.iter().copied());
        for v in all {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Invalid(format!("bound constant {v} must be positive")));
            }
        }
        if self.g.len() != self.l.len() {
            return Err(Error::Shape("need one gradient bound and one modulus per player".into()));
        }
        Ok(())
    }
}

/// Coefficient of the first-order term in the average regret after `rounds`
/// rounds, all players sharing `schedule`:
///
/// `2M/T (1/eta_T + 1/eta_1) + (sum_t eta_t / T) sum_i (G_i^2 L_h / 2 + G_i L_h sum_j G_j)`.
pub fn regret_bound(params: &RegretBoundParams, schedule: &StepSchedule, rounds: usize, num_players: usize) -> Result<f64> {
    params.validate()?;
    if params.g.len() != num_players {
        return Err(Error::Shape(format!("constants for {} players, expected {num_players}", params.g.len())));
    }
    if rounds == 0 {
        return Err(Error::Invalid("at least one round is required".into()));
    }
    let t = rounds as f64;
    let g_sum: f64 = params.g.iter().sum();
    let per_player: f64 = params.g.iter().map(|g| g * g * params.l_h / 2.0 + g * params.l_h * g_sum).sum();
    let steps = 2.0 * params.m_bound / t * (1.0 / schedule.eta(rounds) + 1.0 / schedule.eta(1));
    Ok(steps + schedule.total(rounds) / t * per_player)
}

/// `(4M/C + 2 max(1, C)) / sqrt(T)`, the bound for steps `C/sqrt(t)` when the
/// gradient constants contribute at most one.
pub fn simplified_epsilon(m_bound: f64, c: f64, rounds: usize) -> f64 {
    (4.0 * m_bound / c + 2.0 * c.max(1.0)) / (rounds as f64).sqrt()
}

/// Per-player bounds `(G_i, L_i)` on the norm and Lipschitz modulus of
/// `grad_i u_i` over the product of simplices.
///
/// `G_i = sqrt(|A_i|) max |u_i|`; `L_i = sqrt(N - 1) ||u_i||_F`, which
/// dominates the operator norm of every partial derivative block.
pub fn gradient_constants(game: &NormalFormGame) -> (Vec<f64>, Vec<f64>) {
    let n = game.num_players();
    (0..n)
        .map(|i| {
            let u = game.utilities(i);
            let max = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let fro = u.iter().map(|v| v * v).sum::<f64>().sqrt();
            ((game.num_actions(i) as f64).sqrt() * max, ((n - 1) as f64).sqrt() * fro)
        })
        .unzip()
}
