use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ActionSet, NormalFormGame};
use crate::error::{Error, Result};

/// Two-player game where only the column player has payoffs: 1 at (T,L) and (B,R).
///
/// Its coarse correlated equilibria can put weight on the column `M`, which
/// no semicoarse equilibrium does.
pub fn make_bad_game() -> NormalFormGame {
    let actions = vec![ActionSet::labelled(&["T", "B"]), ActionSet::labelled(&["L", "M", "R"])];
    let u2 = vec![1.0, 0.0, 0.0, 0.0, 0.0, 1.0];
    NormalFormGame::new(actions, vec![vec![0.0; 6], u2]).expect("static game is well formed")
}

/// Payoff of the row player on the embedded triplets, indexed by position in
/// the triplet.
///
/// This is `-sqrt(3) (v1 w2' - v2 w1')` for the orthonormal bases used by the
/// rotating trajectory in [`crate::dynamics::rps_cycle_regret`].
pub fn rps_pattern() -> [[f64; 3]; 3] {
    [[0.0, -1.0, 1.0], [1.0, 0.0, -1.0], [-1.0, 1.0, 0.0]]
}

/// Zero-sum rock-paper-scissors between players `i` and `j` played on the
/// given action triplets; every other payoff is zero.
pub fn make_rps_embedded(
    sizes: &[usize],
    i: usize,
    j: usize,
    triplet_i: [usize; 3],
    triplet_j: [usize; 3],
) -> Result<NormalFormGame> {
    if i == j || i >= sizes.len() || j >= sizes.len() {
        return Err(Error::Invalid(format!("players {i} and {j} must be distinct and below {}", sizes.len())));
    }
    for (p, t) in [(i, triplet_i), (j, triplet_j)] {
        if t.iter().any(|&a| a >= sizes[p]) || t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
            return Err(Error::Invalid(format!("triplet {t:?} is not three distinct actions of player {p}")));
        }
    }
    let pattern = rps_pattern();
    let actions = sizes.iter().map(|&m| ActionSet::indexed(m)).collect();
    NormalFormGame::from_fn(actions, |a| {
        let mut u = vec![0.0; sizes.len()];
        let pi = triplet_i.iter().position(|&x| x == a[i]);
        let pj = triplet_j.iter().position(|&x| x == a[j]);
        if let (Some(pi), Some(pj)) = (pi, pj) {
            u[i] = pattern[pi][pj];
            u[j] = -pattern[pi][pj];
        }
        u
    })
}

/// Game with utilities drawn uniformly from [-1, 1].
pub fn random_game(sizes: &[usize], seed: u64) -> Result<NormalFormGame> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let actions = sizes.iter().map(|&m| ActionSet::indexed(m)).collect();
    NormalFormGame::from_fn(actions, |_| (0..sizes.len()).map(|_| rng.gen_range(-1.0..=1.0)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rps_matches_bilinear_form() {
        let s6 = 6f64.sqrt();
        let s2 = 2f64.sqrt();
        let v1 = [1.0 / s6, -2.0 / s6, 1.0 / s6];
        let v2 = [1.0 / s2, 0.0, -1.0 / s2];
        let g = make_rps_embedded(&[4, 3], 0, 1, [0, 1, 2], [0, 1, 2]).unwrap();
        for a in 0..3 {
            for b in 0..3 {
                let bil = -3f64.sqrt() * (v1[a] * v2[b] - v2[a] * v1[b]);
                let o = g.outcome_index(&[a, b]);
                assert!((g.utility(0, o) - bil).abs() < 1e-12);
                assert_eq!(g.utility(1, o), -g.utility(0, o));
            }
        }
        for b in 0..3 {
            assert_eq!(g.utility(0, g.outcome_index(&[3, b])), 0.0);
        }
    }

    #[test]
    fn rps_pattern_is_rock_paper_scissors() {
        let p = rps_pattern();
        for (a, row) in p.iter().enumerate() {
            assert_eq!(row[a], 0.0);
            assert_eq!(row.iter().filter(|&&x| x == 1.0).count(), 1);
            assert_eq!(row.iter().filter(|&&x| x == -1.0).count(), 1);
        }
    }

    #[test]
    fn random_game_is_seeded() {
        assert_eq!(random_game(&[3, 3], 5).unwrap(), random_game(&[3, 3], 5).unwrap());
        assert_ne!(random_game(&[3, 3], 5).unwrap(), random_game(&[3, 3], 6).unwrap());
    }
}
