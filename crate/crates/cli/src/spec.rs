//! Parsers for the small textual specs accepted on the command line.

use semicoarse::dynamics::StepSchedule;
use semicoarse::equilibria::{objective_from_values, objective_indicator, objective_not_nash};
use semicoarse::game::{Demand, NormalFormGame};

pub fn list<T: std::str::FromStr>(s: &str) -> Result<Vec<T>, String> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| t.trim().parse().map_err(|_| format!("cannot parse {t:?} in list {s:?}")))
        .collect()
}

/// Semicolon-separated per-player lists, e.g. `1,2,3;1,1`.
pub fn nested(s: &str) -> Result<Vec<Vec<f64>>, String> {
    s.split(';').map(list).collect()
}

/// `inelastic`, `linear`, or `samples:d0,d1,...,dn`.
pub fn demand(s: &str, n: u32) -> Result<Demand, String> {
    match s {
        "inelastic" => Ok(Demand::inelastic(n)),
        "linear" => Ok(Demand::linear(n)),
        _ => {
            let body = s.strip_prefix("samples:").ok_or_else(|| format!("unknown demand {s:?}"))?;
            let samples: Vec<f64> = list(body)?;
            if samples.len() != n as usize + 1 {
                return Err(format!("{} demand samples given, {} needed", samples.len(), n + 1));
            }
            Demand::from_samples(samples).map_err(|e| e.to_string())
        }
    }
}

/// `constant:C`, `inverse-sqrt:C` or `power:C:ALPHA`.
pub fn schedule(s: &str) -> Result<StepSchedule, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let f = |t: &str| t.parse::<f64>().map_err(|_| format!("bad number {t:?} in schedule {s:?}"));
    let r = match parts.as_slice() {
        ["constant", c] => StepSchedule::constant(f(c)?),
        ["inverse-sqrt", c] => StepSchedule::inverse_sqrt(f(c)?),
        ["power", c, a] => StepSchedule::power(f(c)?, f(a)?),
        _ => return Err(format!("unknown schedule {s:?}")),
    };
    r.map_err(|e| e.to_string())
}

fn action(game: &NormalFormGame, player: usize, t: &str) -> Result<usize, String> {
    if let Ok(k) = t.parse::<usize>() {
        if k < game.num_actions(player) {
            return Ok(k);
        }
    }
    game.actions(player)
        .labels
        .iter()
        .position(|l| l == t)
        .ok_or_else(|| format!("player {player} has no action {t:?}"))
}

/// Objective over outcomes:
/// `ones`, `not-nash`, `indicator:PLAYER:ACTION`, `square` (sum of squared
/// action values) or `distance:x1,..,xN` (squared distance to a value vector).
pub fn objective(s: &str, game: &NormalFormGame) -> Result<Vec<f64>, String> {
    let (head, rest) = s.split_once(':').unwrap_or((s, ""));
    match head {
        "ones" => Ok(vec![1.0; game.num_outcomes()]),
        "not-nash" => Ok(objective_not_nash(game)),
        "square" => Ok(objective_from_values(game, |v| v.iter().map(|x| x * x).sum())),
        "indicator" => {
            let (p, a) = rest.split_once(':').ok_or("indicator needs PLAYER:ACTION")?;
            let p: usize = p.parse().map_err(|_| format!("bad player {p:?}"))?;
            if p >= game.num_players() {
                return Err(format!("no player {p}"));
            }
            Ok(objective_indicator(game, p, action(game, p, a)?))
        }
        "distance" => {
            let target: Vec<f64> = list(rest)?;
            if target.len() != game.num_players() {
                return Err(format!("distance target needs {} values", game.num_players()));
            }
            Ok(objective_from_values(game, |v| v.iter().zip(&target).map(|(x, t)| (x - t) * (x - t)).sum()))
        }
        _ => Err(format!("unknown objective {s:?}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use semicoarse::game::make_bad_game;

    #[test]
    fn parses_specs() {
        assert_eq!(list::<u32>("0,0,5").unwrap(), vec![0, 0, 5]);
        assert_eq!(nested("1,2;3").unwrap(), vec![vec![1.0, 2.0], vec![3.0]]);
        assert!(schedule("power:1:0.5").is_ok());
        assert!(schedule("power:1").is_err());
        assert_eq!(demand("samples:1,0.5,0", 2).unwrap().at(1), 0.5);
        let g = make_bad_game();
        assert_eq!(objective("indicator:1:M", &g).unwrap(), objective("indicator:1:1", &g).unwrap());
        assert!(objective("indicator:2:0", &g).is_err());
        assert!(objective("bogus", &g).is_err());
    }
}
