use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::check_objective;
use crate::error::{Error, Result};
use crate::game::NormalFormGame;
use crate::lp::{LinearProgram, LpSolution, Relation, VarBound};
use crate::transforms::{validate_generator, GeneratorPair};

/// Program searching for generator pairs `(Q_i, q_i)` and the smallest `gamma`
/// with `gamma + sum_i h_i(a) >= d(a)` at every outcome, where `h_i(a)` is the
/// first-order utility change of player `i` along their generator.
///
/// Its optimal `gamma` equals the largest expected objective over semicoarse
/// equilibria, and an optimal point certifies that bound.
#[derive(Clone, Debug)]
pub struct LyapunovLp {
    pub lp: LinearProgram,
    gamma: usize,
    /// Column of `Q_i[u][v]`; symmetric, one variable per unordered pair.
    quad: Vec<Vec<Vec<usize>>>,
    lin: Vec<Vec<usize>>,
}

impl LyapunovLp {
    /// Optimal `gamma` from a solution of [`LyapunovLp::lp`].
    pub fn value(&self, sol: &LpSolution) -> f64 {
        -sol.value
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LyapunovCertificate {
    pub gamma: f64,
    pub generators: Vec<GeneratorPair>,
}

pub fn build_dual_lyapunov_lp(game: &NormalFormGame, d: &[f64]) -> Result<LyapunovLp> {
    check_objective(game, d)?;
    let mut lp = LinearProgram::new();
    let gamma = lp.add_var("gamma", VarBound::Free, -1.0);
    let mut quad = Vec::new();
    let mut lin = Vec::new();
    for i in 0..game.num_players() {
        let m = game.num_actions(i);
        let mut qi = vec![vec![0usize; m]; m];
        for u in 0..m {
            for v in u..m {
                let c = lp.add_var(format!("Q_{i}_{u}_{v}"), VarBound::Free, 0.0);
                qi[u][v] = c;
                qi[v][u] = c;
            }
        }
        let li: Vec<usize> = (0..m).map(|a| lp.add_var(format!("q_{i}_{a}"), VarBound::Free, 0.0)).collect();
        for a in 0..m {
            let coeffs = (0..m).flat_map(|a2| [(qi[a2][a], 1.0), (li[a2], 1.0)]);
            lp.add_constraint(format!("conserve_{i}_{a}"), coeffs, Relation::Eq, 0.0);
        }
        for a in 0..m {
            for a2 in (0..m).filter(|&a2| a2 != a) {
                lp.add_constraint(
                    format!("tangent_{i}_{a2}_{a}"),
                    [(qi[a2][a], 1.0), (li[a2], 1.0)],
                    Relation::Ge,
                    0.0,
                );
            }
        }
        quad.push(qi);
        lin.push(li);
    }
    for (o, &target) in d.iter().enumerate() {
        let mut coeffs = vec![(gamma, 1.0)];
        for i in 0..game.num_players() {
            let a = game.action_of(o, i);
            for a2 in 0..game.num_actions(i) {
                let u = game.utility(i, game.deviate(o, i, a2));
                coeffs.push((quad[i][a2][a], u));
                coeffs.push((lin[i][a2], u));
            }
        }
        lp.add_constraint(format!("bound_{o}"), coeffs, Relation::Ge, target);
    }
    Ok(LyapunovLp { lp, gamma, quad, lin })
}

pub fn extract_certificate(l: &LyapunovLp, sol: &LpSolution) -> Result<LyapunovCertificate> {
    if !sol.is_optimal() {
        return Err(Error::Precondition(format!("Lyapunov program is {:?}", sol.status)));
    }
    let x = &sol.primal;
    let generators = l
        .quad
        .iter()
        .zip(&l.lin)
        .map(|(qi, li)| {
            let m = li.len();
            let q = Array2::from_shape_fn((m, m), |(u, v)| x[qi[u][v]]);
            GeneratorPair::new(q, Array1::from_iter(li.iter().map(|&c| x[c])))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LyapunovCertificate { gamma: x[l.gamma], generators })
}

/// Smallest slack `gamma + sum_i h_i(a) - d(a)` over all outcomes. Fails if a
/// generator breaks symmetry, conservation or tangency by more than `tol`.
pub fn check_lyapunov_certificate(game: &NormalFormGame, cert: &LyapunovCertificate, d: &[f64], tol: f64) -> Result<f64> {
    check_objective(game, d)?;
    if cert.generators.len() != game.num_players() {
        return Err(Error::Shape("one generator per player required".into()));
    }
    for (i, g) in cert.generators.iter().enumerate() {
        if g.dim() != game.num_actions(i) {
            return Err(Error::Shape(format!("generator {i} has the wrong dimension")));
        }
        let r = validate_generator(g, tol);
        if !r.passed() {
            return Err(Error::Precondition(format!("generator {i}: {:?}", r.violations[0])));
        }
    }
    let cols: Vec<Array2<f64>> = cert.generators.iter().map(|g| g.column_matrix()).collect();
    let mut worst = f64::INFINITY;
    for (o, &target) in d.iter().enumerate() {
        let mut lhs = cert.gamma;
        for (i, g) in cols.iter().enumerate() {
            let a = game.action_of(o, i);
            for a2 in 0..game.num_actions(i) {
                lhs += g[(a2, a)] * game.utility(i, game.deviate(o, i, a2));
            }
        }
        worst = worst.min(lhs - target);
    }
    Ok(worst)
}
