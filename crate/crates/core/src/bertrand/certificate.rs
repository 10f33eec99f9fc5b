use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{monopoly_index, profit_concavity, BertrandMarket, Concavity};
use crate::equilibria::{objective_not_nash, LyapunovCertificate};
use crate::error::{Error, Result};
use crate::game::NormalFormGame;
use crate::transforms::{generator_from_transform, subset_transform, GeneratorPair, TransformMatrix};

/// Multipliers on named subset transforms whose weighted gains dominate the
/// indicator of non-Nash play at every price vector.
///
/// Low-cost firms use `phi_k`, which sends every price outside
/// `c/n + {1/n, .., k/n}` to the uniform distribution on that band, with
/// weight `epsilon[k - 1]`. A firm `i` with higher cost uses the transform
/// lifting prices below `c_i/n` to the uniform distribution on the rest,
/// with weight `delta[i]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualCertificate {
    pub n: u32,
    pub costs: Vec<u32>,
    pub demand: Vec<f64>,
    pub min_cost: u32,
    /// Number of firms at the minimum cost.
    pub m: usize,
    pub ell_star: u32,
    pub epsilon: Vec<f64>,
    /// Zero for low-cost firms.
    pub delta: Vec<f64>,
    /// Common factor applied to the constructed multipliers.
    pub scale: f64,
}

fn unavailable(msg: impl Into<String>) -> Error {
    Error::CertificateUnavailable(msg.into())
}

/// Builds the explicit multipliers for `market`, then rescales them (only
/// upwards) so that the smallest positive left-hand side over non-Nash
/// price vectors is at least one.
pub fn build_dual_certificate(market: &BertrandMarket) -> Result<DualCertificate> {
    let (n, c) = (market.n, market.min_cost());
    let big_n = market.num_firms() as f64;
    let nf = n as f64;
    let m = market.low_cost_firms().len();
    if m < 2 {
        return Err(unavailable("needs at least two firms at the minimum cost"));
    }
    if c >= n {
        return Err(unavailable("the minimum cost must lie below the top price"));
    }
    match (profit_concavity(&market.demand, c, n), m) {
        (Concavity::Strict, _) | (Concavity::Weak, 3..) => {}
        (Concavity::Weak, _) => return Err(unavailable("two low-cost firms need strictly concave profit")),
        (Concavity::None, _) => return Err(unavailable("profit is not concave above the minimum cost")),
    }
    let d = |k: u32| market.demand.at(k as usize);
    if d(c + 1) <= 0.0 {
        return Err(unavailable("demand vanishes one step above the minimum cost"));
    }

    let mut eps1 = nf * big_n / d(c + 1);
    if c + 2 <= n {
        let base = m as f64 / nf * d(c + 1) - 2.0 / nf * d(c + 2);
        if base <= 0.0 {
            return Err(unavailable(format!("base coefficient {base} is not positive")));
        }
        eps1 = eps1.max(1.0 / base);
    }
    let ell_star = monopoly_index(&market.demand, c, n);
    let bands = (n - c) as usize;
    let mut epsilon = vec![0.0; bands];
    epsilon[0] = eps1;
    let mut acc = eps1;
    for ell in 2..bands as u32 {
        if c + ell >= ell_star {
            break;
        }
        let lf = ell as f64;
        let num = acc * ((lf + 1.0) / nf * d(c + ell + 1) - lf / nf * d(c + ell));
        let mean: f64 = (1..=ell).map(|k| k as f64 / nf * d(c + k)).sum::<f64>() / lf;
        let den = m as f64 * mean - (lf + 1.0) / nf * d(c + ell + 1);
        if den <= 0.0 {
            return Err(unavailable(format!("recursion denominator {den} at step {ell} is not positive")));
        }
        epsilon[ell as usize - 1] = (num / den).max(0.0);
        acc += epsilon[ell as usize - 1];
    }

    let mut delta = vec![0.0; market.num_firms()];
    for (i, &ci) in market.costs.iter().enumerate() {
        if ci > c {
            let dv = d(ci - 1);
            if dv <= 0.0 {
                return Err(unavailable(format!("demand vanishes just below the cost of firm {i}")));
            }
            delta[i] = nf * big_n / dv;
        }
    }

    let mut cert = DualCertificate {
        n,
        costs: market.costs.clone(),
        demand: market.demand.samples().to_vec(),
        min_cost: c,
        m,
        ell_star,
        epsilon,
        delta,
        scale: 1.0,
    };
    let game = market.game()?;
    let lhs = pointwise_lhs(&game, &cert)?;
    let d = objective_not_nash(&game);
    let smallest = lhs
        .iter()
        .zip(&d)
        .filter(|(l, t)| **t > 0.0 && **l > 1e-12)
        .map(|(l, _)| *l)
        .fold(f64::INFINITY, f64::min);
    if smallest < 1.0 {
        cert.scale = 1.0 / smallest;
        cert.epsilon.iter_mut().chain(cert.delta.iter_mut()).for_each(|v| *v *= cert.scale);
    }
    Ok(cert)
}

impl DualCertificate {
    fn low_cost(&self, i: usize) -> bool {
        self.costs[i] == self.min_cost
    }

    /// Transform `phi_k` for low-cost firms.
    pub fn band_transform(&self, k: usize) -> Result<TransformMatrix> {
        let (c, n) = (self.min_cost as usize, self.n as usize);
        let subset: Vec<usize> = (0..=n).filter(|&p| p <= c || p > c + k).collect();
        subset_transform(n + 1, &subset)
    }

    /// Transform lifting firm `i` off prices below its cost.
    pub fn floor_transform(&self, i: usize) -> Result<TransformMatrix> {
        let below: Vec<usize> = (0..self.costs[i] as usize).collect();
        subset_transform(self.n as usize + 1, &below)
    }

    /// `sum of multiplier * (P - I)` for firm `i`.
    fn combined(&self, i: usize) -> Result<Array2<f64>> {
        let dim = self.n as usize + 1;
        let eye = Array2::<f64>::eye(dim);
        let mut g = Array2::zeros((dim, dim));
        if self.low_cost(i) {
            for (k, &e) in self.epsilon.iter().enumerate() {
                if e != 0.0 {
                    g = g + (self.band_transform(k + 1)?.matrix() - &eye) * e;
                }
            }
        } else if self.delta[i] != 0.0 {
            g = g + (self.floor_transform(i)?.matrix() - &eye) * self.delta[i];
        }
        Ok(g)
    }
}

fn pointwise_lhs(game: &NormalFormGame, cert: &DualCertificate) -> Result<Vec<f64>> {
    let dim = cert.n as usize + 1;
    if game.num_players() != cert.costs.len() || (0..game.num_players()).any(|i| game.num_actions(i) != dim) {
        return Err(Error::Shape("certificate does not match the game".into()));
    }
    let mats = (0..cert.costs.len()).map(|i| cert.combined(i)).collect::<Result<Vec<_>>>()?;
    Ok((0..game.num_outcomes())
        .map(|o| {
            let mut total = 0.0;
            for (i, g) in mats.iter().enumerate() {
                let a = game.action_of(o, i);
                for a2 in 0..dim {
                    let w = g[(a2, a)];
                    if w != 0.0 {
                        total += w * game.utility(i, game.deviate(o, i, a2));
                    }
                }
            }
            total
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointwiseReport {
    /// Smallest `LHS(p) - d(p)` over all price vectors.
    pub min_slack: f64,
    pub argmin: usize,
    pub argmin_label: String,
    pub outcomes_checked: usize,
}

/// Evaluates the certificate's left-hand side at every price vector against
/// the target `d`.
pub fn verify_pointwise(game: &NormalFormGame, cert: &DualCertificate, d: &[f64]) -> Result<PointwiseReport> {
    if d.len() != game.num_outcomes() {
        return Err(Error::Shape(format!("{} targets for {} outcomes", d.len(), game.num_outcomes())));
    }
    let lhs = pointwise_lhs(game, cert)?;
    let (argmin, min_slack) = lhs
        .iter()
        .zip(d)
        .map(|(l, t)| l - t)
        .enumerate()
        .fold((0, f64::INFINITY), |best, (o, s)| if s < best.1 { (o, s) } else { best });
    Ok(PointwiseReport { min_slack, argmin, argmin_label: game.outcome_label(argmin), outcomes_checked: lhs.len() })
}

/// The certificate as a point of the Lyapunov program with `gamma = 0`.
pub fn certificate_generators(cert: &DualCertificate) -> Result<LyapunovCertificate> {
    let dim = cert.n as usize + 1;
    let mut generators = Vec::new();
    for i in 0..cert.costs.len() {
        let mut g = GeneratorPair::zero(dim);
        if cert.low_cost(i) {
            for (k, &e) in cert.epsilon.iter().enumerate() {
                if e != 0.0 {
                    g = g.add(&generator_from_transform(&cert.band_transform(k + 1)?).scaled(e))?;
                }
            }
        } else if cert.delta[i] != 0.0 {
            g = generator_from_transform(&cert.floor_transform(i)?).scaled(cert.delta[i]);
        }
        generators.push(g);
    }
    Ok(LyapunovCertificate { gamma: 0.0, generators })
}
