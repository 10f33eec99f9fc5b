//! Projected gradient ascent in the mixed extension of a game, and regret
//! measurements against linear strategy modifications.

mod bound;
mod scenarios;

pub use bound::{gradient_constants, regret_bound, simplified_epsilon, RegretBoundParams};
pub use scenarios::{mean_based_counterexample, rps_cycle_regret, MeanBasedReport, RpsCycleRegret};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{gradient_unchecked, MixedProfile, NormalFormGame};
use crate::transforms::{enumerate_canonical, TransformMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScheduleKind {
    Constant,
    InverseSqrt,
    Power,
}

/// Step sizes `eta_t = c * t^(-alpha)` for `t = 1, 2, ...`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepSchedule {
    pub kind: ScheduleKind,
    pub c: f64,
    pub alpha: f64,
}

impl StepSchedule {
    pub fn constant(c: f64) -> Result<Self> {
        Self::checked(ScheduleKind::Constant, c, 0.0)
    }

    pub fn inverse_sqrt(c: f64) -> Result<Self> {
        Self::checked(ScheduleKind::InverseSqrt, c, 0.5)
    }

    pub fn power(c: f64, alpha: f64) -> Result<Self> {
        Self::checked(ScheduleKind::Power, c, alpha)
    }

    fn checked(kind: ScheduleKind, c: f64, alpha: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::Invalid(format!("step scale {c} must be positive")));
        }
        if !(0.0..1.0).contains(&alpha) {
            return Err(Error::Invalid(format!("step exponent {alpha} must lie in [0, 1)")));
        }
        Ok(StepSchedule { kind, c, alpha })
    }

    /// Step size at round `t >= 1`.
    pub fn eta(&self, t: usize) -> f64 {
        match self.kind {
            ScheduleKind::Constant => self.c,
            ScheduleKind::InverseSqrt => self.c / (t as f64).sqrt(),
            ScheduleKind::Power => self.c * (t as f64).powf(-self.alpha),
        }
    }

    /// Step size at a real-valued round, for horizons beyond `usize`.
    pub fn eta_at(&self, t: f64) -> f64 {
        self.c * t.powf(-self.alpha)
    }

    /// `sum_{t=1}^{T} eta_t`.
    pub fn total(&self, rounds: usize) -> f64 {
        self.total_f(rounds as f64)
    }

    /// `sum_{t=1}^{floor(T)} eta_t`, summed exactly over the first million
    /// rounds and by the midpoint integral beyond.
    pub fn total_f(&self, rounds: f64) -> f64 {
        const EXACT: f64 = 1e6;
        let rounds = rounds.floor();
        let head = rounds.min(EXACT) as usize;
        let mut sum: f64 = (1..=head).map(|t| self.eta(t)).sum();
        if rounds > EXACT {
            // integral of c t^-alpha over [EXACT + 1/2, rounds + 1/2]
            let e = 1.0 - self.alpha;
            let prim = |t: f64| self.c * t.powf(e) / e;
            sum += prim(rounds + 0.5) - prim(EXACT + 0.5);
        }
        sum
    }
}

/// Euclidean projection onto the probability simplex.
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    project_weighted_simplex(v, &vec![1.0; v.len()])
}

/// Euclidean projection onto `{y >= 0 : sum_a s_a y_a = 1}` for positive `s`.
///
/// The minimiser is `y_a = max(0, v_a - tau s_a)`; `tau` is found by sorting
/// the ratios `v_a / s_a`.
pub fn project_weighted_simplex(v: &[f64], s: &[f64]) -> Vec<f64> {
    assert_eq!(v.len(), s.len());
    if v.is_empty() {
        return Vec::new();
    }
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| (v[b] / s[b]).total_cmp(&(v[a] / s[a])));
    let (mut sv, mut ss) = (0.0, 0.0);
    let mut tau = 0.0;
    for (k, &a) in order.iter().enumerate() {
        sv += s[a] * v[a];
        ss += s[a] * s[a];
        let t = (sv - 1.0) / ss;
        if k == 0 || v[a] / s[a] > t {
            tau = t;
        } else {
            break;
        }
    }
    v.iter().zip(s).map(|(&x, &w)| (x - tau * w).max(0.0)).collect()
}

/// Largest violation of the optimality conditions for `y` being the
/// projection of `v` onto the weighted simplex with coefficients `s`.
pub fn weighted_projection_residual(v: &[f64], s: &[f64], y: &[f64]) -> f64 {
    let mass: f64 = y.iter().zip(s).map(|(a, b)| a * b).sum();
    let mut worst = (mass - 1.0).abs();
    // on the support, (v - y)_a / s_a is a common multiplier tau
    let support: Vec<usize> = (0..y.len()).filter(|&a| y[a] > 0.0).collect();
    let Some(&first) = support.first() else {
        return f64::INFINITY;
    };
    let tau = (v[first] - y[first]) / s[first];
    for a in 0..y.len() {
        worst = worst.max((-y[a]).max(0.0));
        let r = (v[a] - y[a]) / s[a] - tau;
        if y[a] > 0.0 {
            worst = worst.max(r.abs());
        } else {
            worst = worst.max(r.max(0.0));
        }
    }
    worst
}

/// Profiles `x^1, ..., x^T` of a run together with the step schedules used.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub profiles: Vec<MixedProfile>,
    pub schedules: Vec<StepSchedule>,
}

impl Trajectory {
    pub fn rounds(&self) -> usize {
        self.profiles.len()
    }
}

fn check_run(game: &NormalFormGame, init: &MixedProfile, schedules: &[StepSchedule], rounds: usize) -> Result<()> {
    init.validate(game, 1e-9)?;
    if schedules.len() != game.num_players() {
        return Err(Error::Shape(format!("{} schedules for {} players", schedules.len(), game.num_players())));
    }
    if rounds == 0 {
        return Err(Error::Invalid("at least one round is required".into()));
    }
    Ok(())
}

/// Simultaneous projected gradient ascent with full feedback, starting at
/// `init` and recording `rounds` profiles.
pub fn pga_run(game: &NormalFormGame, init: &MixedProfile, schedules: &[StepSchedule], rounds: usize) -> Result<Trajectory> {
    check_run(game, init, schedules, rounds)?;
    let mut profiles = Vec::with_capacity(rounds);
    let mut x = init.clone();
    for t in 1..=rounds {
        if t == rounds {
            profiles.push(x);
            break;
        }
        let next = MixedProfile(
            (0..game.num_players())
                .map(|i| {
                    let g = gradient_unchecked(game, &x, i);
                    let eta = schedules[i].eta(t);
                    let v: Vec<f64> = x.0[i].iter().zip(&g).map(|(a, b)| a + eta * b).collect();
                    project_simplex(&v)
                })
                .collect(),
        );
        profiles.push(std::mem::replace(&mut x, next));
    }
    Ok(Trajectory { profiles, schedules: schedules.to_vec() })
}

/// Gradient ascent on the rescaled strategy sets `y_i` with `x_i = P_i y_i`,
/// `P_i = diag(sqrt(w_i))`. The returned profiles are in `x` coordinates.
pub fn scaled_pga_run(
    game: &NormalFormGame,
    init: &MixedProfile,
    weights: &[Vec<f64>],
    schedules: &[StepSchedule],
    rounds: usize,
) -> Result<Trajectory> {
    check_run(game, init, schedules, rounds)?;
    if weights.len() != game.num_players() {
        return Err(Error::Shape(format!("{} weight vectors for {} players", weights.len(), game.num_players())));
    }
    let mut scale = Vec::new();
    for (i, w) in weights.iter().enumerate() {
        if w.len() != game.num_actions(i) {
            return Err(Error::Shape(format!("player {i}: {} weights for {} actions", w.len(), game.num_actions(i))));
        }
        if w.iter().any(|&v| !(v.is_finite() && v > 0.0)) {
            return Err(Error::Invalid(format!("player {i}: weights must be positive")));
        }
        scale.push(w.iter().map(|v| v.sqrt()).collect::<Vec<f64>>());
    }
    let mut y: Vec<Vec<f64>> = init.0.iter().zip(&scale).map(|(x, s)| x.iter().zip(s).map(|(a, b)| a / b).collect()).collect();
    let to_x = |y: &[Vec<f64>]| MixedProfile(y.iter().zip(&scale).map(|(v, s)| v.iter().zip(s).map(|(a, b)| a * b).collect()).collect());
    let mut profiles = Vec::with_capacity(rounds);
    for t in 1..=rounds {
        let x = to_x(&y);
        if t < rounds {
            y = (0..game.num_players())
                .map(|i| {
                    let g = gradient_unchecked(game, &x, i);
                    let eta = schedules[i].eta(t);
                    let v: Vec<f64> = (0..g.len()).map(|a| y[i][a] + eta * scale[i][a] * g[a]).collect();
                    project_weighted_simplex(&v, &scale[i])
                })
                .collect();
        }
        profiles.push(x);
    }
    Ok(Trajectory { profiles, schedules: schedules.to_vec() })
}

fn check_transform(game: &NormalFormGame, traj: &Trajectory, player: usize, p: &TransformMatrix) -> Result<()> {
    if player >= game.num_players() {
        return Err(Error::Invalid(format!("no player {player}")));
    }
    if p.dim() != game.num_actions(player) {
        return Err(Error::Shape(format!("transform is {0}x{0}, player {player} has {1} actions", p.dim(), game.num_actions(player))));
    }
    if traj.profiles.is_empty() {
        return Err(Error::Empty("trajectory has no rounds".into()));
    }
    Ok(())
}

/// Average utility gain of `player` from replacing `x_i^t` by `P x_i^t` in
/// every round, computed from expected utilities.
pub fn regret_vs_transform(game: &NormalFormGame, traj: &Trajectory, player: usize, p: &TransformMatrix) -> Result<f64> {
    check_transform(game, traj, player, p)?;
    let mut total = 0.0;
    for x in &traj.profiles {
        x.validate(game, 1e-9)?;
        let mut moved = x.clone();
        moved.0[player] = p.apply(&x.0[player]);
        total += expected(game, &moved, player) - expected(game, x, player);
    }
    Ok(total / traj.rounds() as f64)
}

fn expected(game: &NormalFormGame, x: &MixedProfile, player: usize) -> f64 {
    crate::game::product_distribution(game, x)
        .iter()
        .zip(game.utilities(player))
        .map(|(a, b)| a * b)
        .sum()
}

/// Same quantity as [`regret_vs_transform`], via `<(P - I) x_i, grad_i u_i(x)>`.
pub fn regret_vs_transform_gradient(game: &NormalFormGame, traj: &Trajectory, player: usize, p: &TransformMatrix) -> Result<f64> {
    check_transform(game, traj, player, p)?;
    let mut total = 0.0;
    for x in &traj.profiles {
        x.validate(game, 1e-9)?;
        let g = gradient_unchecked(game, x, player);
        let px = p.apply(&x.0[player]);
        total += px.iter().zip(&x.0[player]).zip(&g).map(|((a, b), c)| (a - b) * c).sum::<f64>();
    }
    Ok(total / traj.rounds() as f64)
}

/// Average of `grad_i u_i(x^t) x_i^t'`; the regret against `P` is
/// `<P, S> - tr S` for this matrix `S`.
fn regret_moments(game: &NormalFormGame, traj: &Trajectory, player: usize) -> Vec<Vec<f64>> {
    let m = game.num_actions(player);
    let mut s = vec![vec![0.0; m]; m];
    for x in &traj.profiles {
        let g = gradient_unchecked(game, x, player);
        for (row, gv) in s.iter_mut().zip(&g) {
            for (cell, xv) in row.iter_mut().zip(&x.0[player]) {
                *cell += gv * xv;
            }
        }
    }
    let t = traj.rounds() as f64;
    s.iter_mut().flatten().for_each(|v| *v /= t);
    s
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlayerRegret {
    pub player: usize,
    pub external: f64,
    pub max_canonical: f64,
    /// Name of the canonical transform attaining `max_canonical`.
    pub worst_transform: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegretReport {
    pub rounds: usize,
    pub players: Vec<PlayerRegret>,
}

/// External regret and the largest regret against a canonical transform for
/// every player. Cycles longer than `max_cycle_len` are skipped.
pub fn regret_report(game: &NormalFormGame, traj: &Trajectory, max_cycle_len: Option<usize>) -> Result<RegretReport> {
    if traj.profiles.is_empty() {
        return Err(Error::Empty("trajectory has no rounds".into()));
    }
    let mut players = Vec::new();
    for i in 0..game.num_players() {
        let s = regret_moments(game, traj, i);
        let m = s.len();
        let stay: f64 = (0..m).map(|a| s[a][a]).sum();
        let external = (0..m)
            .map(|a2| (0..m).map(|a| s[a2][a]).sum::<f64>() - stay)
            .fold(f64::NEG_INFINITY, f64::max);
        let mut max_canonical = 0.0;
        let mut worst_transform = String::from("identity");
        for t in enumerate_canonical(m, max_cycle_len)? {
            let mut v = -stay;
            for (a2, row) in s.iter().enumerate() {
                for (a, val) in row.iter().enumerate() {
                    v += t.matrix.get(a2, a) * val;
                }
            }
            if v > max_canonical {
                max_canonical = v;
                worst_transform = t.name();
            }
        }
        players.push(PlayerRegret { player: i, external, max_canonical, worst_transform });
    }
    Ok(RegretReport { rounds: traj.rounds(), players })
}
