use serde::{Deserialize, Serialize};

use super::{project_simplex, StepSchedule};
use crate::error::{Error, Result};
use crate::game::{gradient_unchecked, make_rps_embedded, MixedProfile};
use crate::transforms::TransformMatrix;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanBasedReport {
    pub rounds: usize,
    /// Length of the second phase, in which only `a*` is rewarded.
    pub extra_rounds: usize,
    pub final_x_star: f64,
    /// Mean reward of any other action minus that of `a*` after both phases.
    pub mean_gap: f64,
    /// Smallest per-round increase of `x(a*)` in the second phase, relative to
    /// `eta_t / 2`, over the rounds before `x(a*)` reaches one.
    pub min_growth_ratio: f64,
    /// True when the final strategy puts more than 1/2 on an action trailing
    /// by more than 1/2 in mean reward.
    pub violates_mean_based: bool,
}

/// Experts-setting gradient ascent against the two-phase reward sequence:
/// every action except `a*` earns 1 for `rounds` rounds, then only `a*`
/// earns 1 for just enough rounds to move all mass onto it.
pub fn mean_based_counterexample(num_actions: usize, c: f64, alpha: f64, rounds: usize) -> Result<MeanBasedReport> {
    if num_actions < 2 {
        return Err(Error::Invalid("need at least two actions".into()));
    }
    let schedule = StepSchedule::power(c, alpha)?;
    let mut acc = 0.0;
    let mut extra = 0;
    while acc < 1.0 {
        extra += 1;
        acc += schedule.eta(rounds + extra) / 2.0;
        if 4 * extra > rounds {
            return Err(Error::Precondition(format!("{rounds} rounds are too few: the second phase would exceed a quarter of them")));
        }
    }
    let star = 0;
    let mut x = vec![1.0 / num_actions as f64; num_actions];
    let mut reward = vec![0.0; num_actions];
    let mut min_growth_ratio = f64::INFINITY;
    for t in 1..=rounds + extra {
        let second = t > rounds;
        let u: Vec<f64> = (0..num_actions).map(|a| if (a == star) == second { 1.0 } else { 0.0 }).collect();
        reward.iter_mut().zip(&u).for_each(|(r, v)| *r += v);
        let eta = schedule.eta(t);
        let v: Vec<f64> = x.iter().zip(&u).map(|(p, r)| p + eta * r).collect();
        let next = project_simplex(&v);
        if second && next[star] < 1.0 {
            min_growth_ratio = min_growth_ratio.min((next[star] - x[star]) / (eta / 2.0));
        }
        x = next;
    }
    let total = (rounds + extra) as f64;
    let mean_gap = (reward[1] - reward[star]) / total;
    Ok(MeanBasedReport {
        rounds,
        extra_rounds: extra,
        final_x_star: x[star],
        mean_gap,
        min_growth_ratio,
        violates_mean_based: mean_gap > 0.5 && x[star] > 0.5,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RpsCycleRegret {
    pub numeric: f64,
    pub closed_form: f64,
    /// `2 closed_form / eps^2`.
    pub defect: f64,
}

/// Orthonormal basis of the triplet plane: `v1`, `v2` span the zero-sum
/// directions and `v3` is the normalised all-ones vector.
fn triplet_basis() -> [[f64; 3]; 3] {
    let a = 1.0 / 2f64.sqrt();
    let b = 1.0 / 6f64.sqrt();
    let c = 1.0 / 3f64.sqrt();
    [[a, -a, 0.0], [b, b, -2.0 * b], [c, c, c]]
}

/// Average regret of a player against `p` along the closed orbit of
/// rock-paper-scissors at radius `eps` around the uniform profile.
///
/// The player's first three actions carry the game; `p` may act on more.
/// The numeric value uses composite Simpson over one period with at least
/// `quadrature_points` intervals.
pub fn rps_cycle_regret(eps: f64, p: &TransformMatrix, quadrature_points: usize) -> Result<RpsCycleRegret> {
    if !(eps > 0.0 && eps <= 0.2) {
        return Err(Error::Invalid(format!("radius {eps} must lie in (0, 0.2]")));
    }
    let m = p.dim();
    if m < 3 {
        return Err(Error::Invalid("transform must act on at least three actions".into()));
    }
    let game = make_rps_embedded(&[m, 3], 0, 1, [0, 1, 2], [0, 1, 2])?;
    let [v1, v2, v3] = triplet_basis();
    let s3 = 3f64.sqrt();
    let at = |t: f64| -> [f64; 3] { std::array::from_fn(|k| v3[k] / s3 + eps * ((s3 * t).cos() * v1[k] + (s3 * t).sin() * v2[k])) };
    let integrand = |t: f64| {
        let xj = at(t).to_vec();
        let mut xi = vec![0.0; m];
        xi[..3].copy_from_slice(&xj);
        let profile = MixedProfile(vec![xi.clone(), xj]);
        let g = gradient_unchecked(&game, &profile, 0);
        let px = p.apply(&xi);
        (0..m).map(|a| (px[a] - xi[a]) * g[a]).sum::<f64>()
    };
    let n = quadrature_points.max(256).next_multiple_of(2);
    let period = 2.0 * std::f64::consts::PI / s3;
    let h = period / n as f64;
    let mut sum = integrand(0.0) + integrand(period);
    for k in 1..n {
        sum += if k % 2 == 1 { 4.0 } else { 2.0 } * integrand(k as f64 * h);
    }
    let numeric = sum * h / 3.0 / period;

    // tr[(v1 v2' - v2 v1')(P - I)] restricted to the triplet
    let mut tr = 0.0;
    for r in 0..3 {
        for c in 0..3 {
            let a = v1[r] * v2[c] - v2[r] * v1[c];
            let b = p.get(c, r) - if c == r { 1.0 } else { 0.0 };
            tr += a * b;
        }
    }
    let closed_form = eps * eps * s3 / 2.0 * tr;
    Ok(RpsCycleRegret { numeric, closed_form, defect: 2.0 * closed_form / (eps * eps) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transforms::enumerate_canonical;

    #[test]
    fn three_cycle_regret() {
        // action k moves to k + 1
        let p = TransformMatrix::from_map(&[1, 2, 0]).unwrap();
        let r = rps_cycle_regret(0.1, &p, 256).unwrap();
        assert!((r.closed_form - 0.015).abs() < 1e-15, "{r:?}");
        assert!((r.numeric - r.closed_form).abs() < 1e-6, "{r:?}");
        let half = rps_cycle_regret(0.05, &p, 256).unwrap();
        assert!((half.closed_form * 4.0 - r.closed_form).abs() < 1e-15);
        assert!((half.numeric * 4.0 - r.numeric).abs() < 1e-9);
    }

    #[test]
    fn canonical_transforms_have_no_cyclic_regret() {
        for m in [3, 4] {
            for t in enumerate_canonical(m, None).unwrap() {
                let r = rps_cycle_regret(0.1, &t.matrix, 256).unwrap();
                assert!(r.numeric.abs() < 1e-9 && r.closed_form.abs() < 1e-9, "{} {r:?}", t.name());
            }
        }
    }

    #[test]
    fn counterexample_saturates() {
        let r = mean_based_counterexample(2, 1.0, 0.5, 10_000).unwrap();
        assert_eq!(r.final_x_star, 1.0);
        let k = r.extra_rounds as f64;
        assert!((r.mean_gap - (1e4 - k) / (1e4 + k)).abs() < 1e-12);
        assert!(r.min_growth_ratio >= 1.0 - 1e-9);
        assert!(r.violates_mean_based);
        assert!(mean_based_counterexample(2, 1.0, 0.5, 10).is_err());
    }
}
