use serde::{Deserialize, Serialize};

use super::{build_dual_certificate, BertrandMarket, DualCertificate};
use crate::dynamics::StepSchedule;
use crate::error::{Error, Result};

/// Step sizes used by a firm over a horizon of `T` rounds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum ScheduleFamily {
    /// The same schedule whatever the horizon.
    Fixed { schedule: StepSchedule },
    /// Constant steps `c / sqrt(T)` chosen for the horizon `T`.
    HorizonScaled { c: f64 },
}

impl ScheduleFamily {
    /// `1/eta_T + 1/eta_1 + sum_{t<=T} eta_t`.
    pub fn step_term(&self, rounds: f64) -> f64 {
        match self {
            ScheduleFamily::Fixed { schedule } => {
                1.0 / schedule.eta_at(rounds.floor()) + 1.0 / schedule.eta(1) + schedule.total_f(rounds)
            }
            ScheduleFamily::HorizonScaled { c } => {
                let root = rounds.sqrt();
                2.0 * root / c + c * root
            }
        }
    }

    /// Sum of the steps in rounds `T+1..=T+K`.
    fn window(&self, rounds: f64, extra: f64) -> f64 {
        match self {
            ScheduleFamily::Fixed { schedule } => schedule.total_f(rounds + extra) - schedule.total_f(rounds),
            ScheduleFamily::HorizonScaled { c } => extra * c / rounds.sqrt(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceBound {
    pub rounds: f64,
    pub schedules: Vec<ScheduleFamily>,
    pub n: u32,
    pub num_firms: usize,
    pub m: usize,
    pub utility_bound: f64,
    /// Bound on the time-averaged probability of non-Nash play.
    pub bound: f64,
    /// Further rounds after which play sits on an equilibrium.
    pub extra_rounds: Option<f64>,
}

/// Time-averaged probability of non-Nash prices after `rounds` rounds, for
/// firms using `schedules` and utility gradients bounded by `(n+1) U`.
pub fn time_avg_bound(cert: &DualCertificate, schedules: &[ScheduleFamily], rounds: f64, utility_bound: f64) -> Result<ConvergenceBound> {
    if schedules.len() != cert.costs.len() {
        return Err(Error::Shape(format!("{} schedules for {} firms", schedules.len(), cert.costs.len())));
    }
    if !(rounds >= 1.0) {
        return Err(Error::Invalid("at least one round is required".into()));
    }
    let factor = 4.0 + 1.5 * ((cert.n + 1) as f64 * utility_bound).powi(2);
    let eps_sum: f64 = cert.epsilon.iter().sum();
    let bound: f64 = cert
        .costs
        .iter()
        .enumerate()
        .map(|(i, &ci)| {
            let weight = if ci == cert.min_cost { eps_sum } else { cert.delta[i] };
            schedules[i].step_term(rounds) * weight * factor / rounds
        })
        .sum();
    Ok(ConvergenceBound {
        rounds,
        schedules: schedules.to_vec(),
        n: cert.n,
        num_firms: cert.costs.len(),
        m: cert.m,
        utility_bound,
        bound,
        extra_rounds: None,
    })
}

/// Smallest integer in `[lo, hi]` where `ok` holds, for monotone `ok` with `ok(hi)`.
fn first_true(mut lo: f64, mut hi: f64, ok: impl Fn(f64) -> bool) -> f64 {
    while hi - lo > 1.0 && hi - lo > hi * 1e-15 {
        let mid = ((lo + hi) / 2.0).floor();
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Horizon `T` after which the time-averaged bound drops below `eps`, and
/// the number `K` of further rounds whose steps sum to `4 N eps / D(1/n)`.
pub fn finite_iterate_bound(market: &BertrandMarket, eps: f64, schedule: ScheduleFamily, utility_bound: f64) -> Result<ConvergenceBound> {
    let big_n = market.num_firms() as f64;
    let d1 = market.demand.at(1);
    let limit = d1 / (2.0 * (big_n + d1));
    if !(eps > 0.0 && eps < limit) {
        return Err(Error::Precondition(format!("target {eps} must lie in (0, {limit})")));
    }
    let cert = build_dual_certificate(market)?;
    let schedules = vec![schedule; market.num_firms()];
    let bound_at = |t: f64| time_avg_bound(&cert, &schedules, t, utility_bound).map(|b| b.bound);
    let mut hi = 1.0;
    while bound_at(hi)? > eps {
        hi *= 2.0;
        if hi > 1e300 {
            return Err(Error::Precondition("the bound does not reach the target".into()));
        }
    }
    let rounds = first_true(hi / 2.0, hi, |t| bound_at(t).map_or(false, |b| b <= eps));
    let need = 4.0 * big_n * eps / d1;
    let mut khi = 1.0;
    while schedule.window(rounds, khi) < need {
        khi *= 2.0;
        if khi > 1e300 {
            return Err(Error::Precondition("steps never accumulate to the required mass".into()));
        }
    }
    let extra = first_true(0.0, khi, |k| schedule.window(rounds, k) >= need);
    let mut out = time_avg_bound(&cert, &schedules, rounds, utility_bound)?;
    out.extra_rounds = Some(extra);
    Ok(out)
}

/// Horizon `9 m^2 N^2 n^10 / eps^2` of the simplified inelastic bound.
pub fn displayed_horizon(m: usize, num_firms: usize, n: u32, eps: f64) -> f64 {
    9.0 * (m * m * num_firms * num_firms) as f64 * (n as f64).powi(10) / (eps * eps)
}

/// The lax choice `ceil((4 N eps)^2)` for the extra rounds.
pub fn displayed_extra_rounds(num_firms: usize, eps: f64) -> f64 {
    (4.0 * num_firms as f64 * eps).powi(2).ceil()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::Demand;

    fn inelastic(n: u32, costs: &[u32]) -> (BertrandMarket, DualCertificate) {
        let mk = BertrandMarket::new(n, costs.to_vec(), Demand::inelastic(n)).unwrap();
        let cert = build_dual_certificate(&mk).unwrap();
        (mk, cert)
    }

    #[test]
    fn simplified_inelastic_constant() {
        let (_, cert) = inelastic(21, &[0, 0, 0]);
        let fam = vec![ScheduleFamily::HorizonScaled { c: 1.0 }; 3];
        for t in [1e4, 1e8] {
            let b = time_avg_bound(&cert, &fam, t, 2.0).unwrap().bound;
            assert!(b <= 3.0 * 3.0 * 3.0 * 21f64.powi(5) / t.sqrt(), "{b}");
        }
    }

    #[test]
    fn scaling_in_rounds_and_multipliers() {
        let (_, cert) = inelastic(8, &[0, 0, 0]);
        let fam = vec![ScheduleFamily::HorizonScaled { c: 1.0 }; 3];
        let a = time_avg_bound(&cert, &fam, 1e6, 2.0).unwrap().bound;
        let b = time_avg_bound(&cert, &fam, 4e6, 2.0).unwrap().bound;
        assert!((b / a - 0.5).abs() < 1e-12);
        let mut doubled = cert.clone();
        doubled.epsilon.iter_mut().for_each(|e| *e *= 2.0);
        let c = time_avg_bound(&doubled, &fam, 1e6, 2.0).unwrap().bound;
        assert!((c / a - 2.0).abs() < 1e-12);
        let fixed = vec![ScheduleFamily::Fixed { schedule: StepSchedule::inverse_sqrt(1.0).unwrap() }; 3];
        let a = time_avg_bound(&cert, &fixed, 1e8, 2.0).unwrap().bound;
        let b = time_avg_bound(&cert, &fixed, 4e8, 2.0).unwrap().bound;
        assert!((b / a - 0.5).abs() < 1e-3);
    }

    #[test]
    fn horizon_within_displayed_value() {
        let (mk, _) = inelastic(21, &[0, 0, 0]);
        let eps = 0.1;
        let fam = ScheduleFamily::HorizonScaled { c: 1.0 };
        let b = finite_iterate_bound(&mk, eps, fam, 2.0).unwrap();
        assert!(b.bound <= eps);
        assert!(b.rounds <= displayed_horizon(3, 3, 21, eps));
        let half = finite_iterate_bound(&mk, eps / 2.0, fam, 2.0).unwrap();
        assert!((half.rounds / b.rounds - 4.0).abs() < 1e-9);
        assert_eq!(displayed_extra_rounds(3, eps), 2.0);
        assert!(finite_iterate_bound(&mk, 0.2, fam, 2.0).is_err());
    }

    #[test]
    fn extra_rounds_grow_with_firms() {
        let fam = ScheduleFamily::Fixed { schedule: StepSchedule::inverse_sqrt(1.0).unwrap() };
        let (a, _) = inelastic(6, &[0, 0, 0]);
        let (b, _) = inelastic(6, &[0, 0, 0, 0]);
        let ka = finite_iterate_bound(&a, 0.05, fam, 2.0).unwrap().extra_rounds.unwrap();
        let kb = finite_iterate_bound(&b, 0.05, fam, 2.0).unwrap().extra_rounds.unwrap();
        assert!(kb > ka, "{ka} {kb}");
    }
}
