use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use semicoarse::bertrand::{build_dual_certificate, fig1_experiment, fig2_experiment, verify_pointwise, BertrandMarket, HeatmapSide};
use semicoarse::dynamics::{mean_based_counterexample, pga_run, regret_report, scaled_pga_run, StepSchedule};
use semicoarse::equilibria::{
    build_cce_lp, build_ce_lp, build_dual_lyapunov_lp, build_semicoarse_enumerated_lp, build_semicoarse_extension_lp,
    build_weighted_semicoarse_lp, check_lyapunov_certificate, extract_certificate, objective_not_nash, solve_equilibrium_with,
    EquilibriumLp,
};
use semicoarse::game::{
    make_bad_game, make_bertrand, make_first_price, make_rps_embedded, random_game, time_avg_outcome_distribution, Demand,
    MixedProfile, NormalFormGame, PriceGrid,
};
use semicoarse::lp::{self, export_lp_text, parse_lp_text, Arithmetic, LinearProgram, LpStatus, SolverOptions};

use crate::output::{num, stamped, to_json, OutDir};
use crate::{spec, CertifyArgs, DynamicsArgs, Exit, ExperimentArgs, Failure, Figure, GenArgs, GenKind, Gauge, Init, MarketKind, SolveArgs, SolveKind};

type Outcome = Result<(), Failure>;

/// Slack below which a certificate is rejected.
const SLACK_TOL: f64 = -1e-9;

/// Mass below which an outcome is left out of reported supports.
const SUPPORT_TOL: f64 = 1e-9;

fn load_game(path: &Path) -> Result<NormalFormGame, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| Failure::new(Exit::Usage, format!("bad game file {}: {e}", path.display())))
}

fn written(path: PathBuf) {
    eprintln!("wrote {}", path.display());
}

pub fn gen(a: &GenArgs, out: &OutDir, fp: &str) -> Outcome {
    let game = match a.kind {
        GenKind::Bertrand => {
            let costs: Vec<u32> = spec::list(&a.costs)?;
            make_bertrand(a.n, &costs, &spec::demand(&a.demand, a.n)?)?
        }
        GenKind::Firstprice => {
            let values: Vec<u32> = spec::list(&a.values)?;
            let grid = if a.gauge == Gauge::Square { PriceGrid::squared(a.n)? } else { PriceGrid::uniform(a.n)? };
            make_first_price(a.n, &values, &grid)?
        }
        GenKind::Badgame => make_bad_game(),
        GenKind::Rps => {
            let sizes: Vec<usize> = spec::list(&a.sizes)?;
            make_rps_embedded(&sizes, 0, 1, [0, 1, 2], [0, 1, 2])?
        }
        GenKind::Random => random_game(&spec::list::<usize>(&a.sizes)?, a.seed)?,
    };
    written(out.write(&a.output, &to_json(&stamped(&game, fp)))?);
    Ok(())
}

fn status_failure(status: LpStatus) -> Outcome {
    match status {
        LpStatus::Optimal => Ok(()),
        LpStatus::Infeasible => Err(Failure::new(Exit::Infeasible, "program is infeasible")),
        LpStatus::Unbounded => Err(Failure::new(Exit::Unbounded, "program is unbounded")),
    }
}

fn export(a: &SolveArgs, out: &OutDir, lp: &LinearProgram) -> Outcome {
    if let Some(p) = &a.export_lp {
        written(out.write(p, &export_lp_text(lp)?)?);
    }
    Ok(())
}

#[derive(Serialize)]
struct SupportEntry {
    outcome: usize,
    label: String,
    probability: f64,
}

fn support(game: &NormalFormGame, sigma: &[f64]) -> Vec<SupportEntry> {
    (0..sigma.len())
        .filter(|&o| sigma[o] > SUPPORT_TOL)
        .map(|o| SupportEntry { outcome: o, label: game.outcome_label(o), probability: sigma[o] })
        .collect()
}

pub fn solve(a: &SolveArgs, out: &OutDir, fp: &str) -> Outcome {
    let opts = SolverOptions { arithmetic: if a.exact { Arithmetic::Exact } else { Arithmetic::Float }, ..SolverOptions::default() };
    if let Some(path) = &a.lp {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        let program = parse_lp_text(&text)?;
        let sol = lp::solve_with(&program, &opts)?;
        let body = if sol.is_optimal() {
            json!({ "kind": "lp", "status": sol.status, "value": sol.value, "primal": sol.primal, "dual": sol.dual })
        } else {
            json!({ "kind": "lp", "status": sol.status })
        };
        written(out.write(&a.output, &to_json(&stamped(&body, fp)))?);
        return status_failure(sol.status);
    }
    let game = load_game(a.game.as_deref().expect("clap enforces --game"))?;
    let d = spec::objective(&a.objective, &game)?;

    if let SolveKind::Lyapunov = a.kind {
        let l = build_dual_lyapunov_lp(&game, &d)?;
        export(a, out, &l.lp)?;
        let sol = lp::solve_with(&l.lp, &opts)?;
        let body = if sol.is_optimal() {
            let cert = extract_certificate(&l, &sol)?;
            let slack = check_lyapunov_certificate(&game, &cert, &d, 1e-7)?;
            json!({ "kind": "lyapunov", "status": sol.status, "value": l.value(&sol) + 0.0, "min_slack": slack, "certificate": cert })
        } else {
            json!({ "kind": "lyapunov", "status": sol.status })
        };
        written(out.write(&a.output, &to_json(&stamped(&body, fp)))?);
        return status_failure(sol.status);
    }

    let b: EquilibriumLp = match a.kind {
        SolveKind::Cce => build_cce_lp(&game, &d)?,
        SolveKind::Ce => build_ce_lp(&game, &d)?,
        SolveKind::Semicoarse => build_semicoarse_enumerated_lp(&game, &d)?,
        SolveKind::SemicoarseExt => build_semicoarse_extension_lp(&game, &d)?,
        SolveKind::Weighted => {
            let w = a.weights.as_deref().ok_or_else(|| "the weighted program needs --weights".to_string())?;
            build_weighted_semicoarse_lp(&game, &spec::nested(w)?, &d)?
        }
        SolveKind::Lyapunov => unreachable!(),
    };
    export(a, out, &b.lp)?;
    let sol = solve_equilibrium_with(&b, &opts)?;
    let body = if sol.raw.is_optimal() {
        json!({ "kind": b.kind, "status": sol.status, "value": sol.value, "sigma": sol.sigma.0, "support": support(&game, &sol.sigma.0) })
    } else {
        json!({ "kind": b.kind, "status": sol.status })
    };
    written(out.write(&a.output, &to_json(&stamped(&body, fp)))?);
    status_failure(sol.status)
}

fn initial_profile(game: &NormalFormGame, init: Init, seed: u64) -> MixedProfile {
    match init {
        Init::Uniform => MixedProfile::uniform(game),
        Init::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            MixedProfile(
                (0..game.num_players())
                    .map(|i| {
                        let raw: Vec<f64> = (0..game.num_actions(i)).map(|_| rng.gen_range(0.01..1.0)).collect();
                        let s: f64 = raw.iter().sum();
                        raw.into_iter().map(|x| x / s).collect()
                    })
                    .collect(),
            )
        }
    }
}

pub fn dynamics(a: &DynamicsArgs, out: &OutDir, fp: &str) -> Outcome {
    if a.meanbased_demo {
        let report = mean_based_counterexample(a.actions, a.c, a.alpha, a.rounds)?;
        println!("final x(a*) = {}", num(report.final_x_star));
        println!("mean reward gap = {}", num(report.mean_gap));
        written(out.write(&a.regret, &to_json(&stamped(&report, fp)))?);
        return Ok(());
    }
    let game = load_game(a.game.as_deref().expect("clap enforces --game"))?;
    let schedule: StepSchedule = spec::schedule(&a.schedule)?;
    let schedules = vec![schedule; game.num_players()];
    let init = initial_profile(&game, a.init, a.seed);
    let traj = match &a.weights {
        Some(w) => scaled_pga_run(&game, &init, &spec::nested(w)?, &schedules, a.rounds)?,
        None => pga_run(&game, &init, &schedules, a.rounds)?,
    };
    let rows = traj.profiles.iter().enumerate().flat_map(|(t, x)| {
        x.0.iter().enumerate().flat_map(move |(i, xi)| {
            xi.iter().enumerate().map(move |(k, p)| vec![(t + 1).to_string(), i.to_string(), k.to_string(), num(*p)])
        })
    });
    written(out.write_csv(&a.trajectory, "trajectory v1", fp, &["t", "player", "action", "probability"], rows)?);

    let report = regret_report(&game, &traj, a.max_cycle_len)?;
    let sigma = time_avg_outcome_distribution(&game, &traj.profiles)?;
    let body = json!({
        "rounds": report.rounds,
        "schedule": schedule,
        "players": report.players,
        "time_avg_support": support(&game, &sigma.0),
    });
    written(out.write(&a.regret, &to_json(&stamped(&body, fp)))?);
    Ok(())
}

/// Market whose game is the requested one. A first-price auction with
/// values `v_i` on the grid `k/n` is the Bertrand market with costs
/// `n - v_i` and unit demand, read with prices `n - bid`.
fn certify_market(a: &CertifyArgs) -> Result<BertrandMarket, Failure> {
    match a.kind {
        MarketKind::Bertrand => Ok(BertrandMarket::new(a.n, spec::list(&a.costs)?, spec::demand(&a.demand, a.n)?)?),
        MarketKind::Firstprice => {
            let values: Vec<u32> = spec::list(&a.values)?;
            if let Some(v) = values.iter().find(|&&v| v > a.n) {
                return Err(format!("value {v} exceeds the grid size {}", a.n).into());
            }
            Ok(BertrandMarket::new(a.n, values.iter().map(|v| a.n - v).collect(), Demand::inelastic(a.n))?)
        }
    }
}

pub fn certify(a: &CertifyArgs, out: &OutDir, fp: &str) -> Outcome {
    let market = certify_market(a)?;
    let cert = build_dual_certificate(&market)?;
    written(out.write(&a.output, &to_json(&stamped(&cert, fp)))?);
    let game = market.game()?;
    let report = verify_pointwise(&game, &cert, &objective_not_nash(&game))?;
    let passed = report.min_slack >= SLACK_TOL;
    let body = json!({
        "market": a.kind,
        "costs": market.costs,
        "epsilon_1": cert.epsilon.first(),
        "min_slack": report.min_slack,
        "argmin": report.argmin,
        "argmin_label": report.argmin_label,
        "outcomes_checked": report.outcomes_checked,
        "tolerance": SLACK_TOL,
        "passed": passed,
    });
    written(out.write(&a.report, &to_json(&stamped(&body, fp)))?);
    println!("min slack {} over {} price vectors: {}", num(report.min_slack), report.outcomes_checked, if passed { "pass" } else { "FAIL" });
    if passed {
        Ok(())
    } else {
        Err(Failure::new(Exit::Rejected, "certificate has negative slack"))
    }
}

fn heatmap(out: &OutDir, name: String, side: &HeatmapSide, fp: &str) -> Result<serde_json::Value, Failure> {
    let cols = side.axis[1].len();
    let rows = side.sigma.0.iter().enumerate().map(|(o, p)| vec![num(side.axis[0][o / cols]), num(side.axis[1][o % cols]), num(*p)]);
    written(out.write_csv(Path::new(&name), "heatmap v1", fp, &["p1", "p2", "sigma"], rows)?);
    let support: Vec<_> = side.support(SUPPORT_TOL).into_iter().map(|(x, y, m)| json!({ "p1": x, "p2": y, "sigma": m })).collect();
    Ok(json!({ "objective_value": side.value, "support": support, "heatmap": name }))
}

pub fn experiment(a: &ExperimentArgs, out: &OutDir, fp: &str) -> Outcome {
    let ns: Vec<u32> = spec::list(&a.n)?;
    if ns.is_empty() {
        return Err("no grid sizes given".to_string().into());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(a.jobs.max(1))
        .build()
        .map_err(|e| e.to_string())?;
    let tag = match a.figure {
        Figure::Fig1 => "fig1",
        Figure::Fig2 => "fig2",
    };
    // Solve in parallel, write in input order.
    let results: Vec<Result<(u32, [(&str, HeatmapSide); 2]), semicoarse::Error>> = pool.install(|| {
        ns.par_iter()
            .map(|&n| match a.figure {
                Figure::Fig1 => fig1_experiment(n).map(|r| (n, [("cce", r.cce), ("semicoarse", r.semicoarse)])),
                Figure::Fig2 => fig2_experiment(n).map(|r| (n, [("uniform", r.uniform), ("squared", r.squared)])),
            })
            .collect()
    });
    for r in results {
        let (n, sides) = r?;
        let mut summary = serde_json::Map::new();
        summary.insert("n".into(), n.into());
        for (label, side) in &sides {
            summary.insert((*label).into(), heatmap(out, format!("{tag}_n{n}_{label}.csv"), side, fp)?);
        }
        let path = PathBuf::from(format!("{tag}_n{n}.json"));
        written(out.write(&path, &to_json(&stamped(&serde_json::Value::Object(summary), fp)))?);
    }
    Ok(())
}
