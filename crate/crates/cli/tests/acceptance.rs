//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits nonzero if any fails.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use bullwhip_core::engine::{
    run_game, team_cost, Conventions, DemandSchedule, Driver, GameConfig, GameState, ENTITY_COUNT, ENTITY_NAMES,
};
use bullwhip_core::experiments::{crossover_sigma, series, spearman, summarize, run_sweep, AgentKind, SweepConfig};
use bullwhip_core::neural::checks::{adam_first_step_error, dueling_identity_error, gradient_check};
use bullwhip_core::optimize::{minimize_box, OptProblem, OptResult};
use bullwhip_core::par::Execution;
use bullwhip_core::policies::{PolicyHandle, StermanParams};
use bullwhip_core::rl::{evaluate, train, AgentBundle, EnvConfig, TrainConfig};
use bullwhip_core::seed::splitmix64;

const PUBLISHED_BASELINE: f64 = 9978.44;

/// Published optimized seat parameters and team costs, retailer first.
const PUBLISHED_ROWS: [([f64; 4], f64); ENTITY_COUNT] = [
    ([0.002, 0.409, 0.975, 29.259], 1440.45),
    ([1.000, 0.495, 1.000, 36.405], 1911.77),
    ([0.747, 0.094, 0.784, 73.721], 3225.41),
    ([1.000, 1.000, 0.048, 21.581], 4799.45),
];

struct Verdict {
    id: &'static str,
    pass: bool,
    detail: String,
}

fn verdict(id: &'static str, pass: bool, detail: String) -> Verdict {
    println!("{id} {} {detail}", if pass { "PASS" } else { "FAIL" });
    Verdict { id, pass, detail }
}

fn exec() -> Execution {
    Execution::available()
}

fn general_team(config: &GameConfig) -> f64 {
    run_game([PolicyHandle::sterman(StermanParams::GENERAL); ENTITY_COUNT], config, 0)
        .unwrap()
        .total_cost
}

fn seat_cost(config: &GameConfig, position: usize, params: StermanParams) -> f64 {
    OptProblem::new(position, StermanParams::GENERAL, *config)
        .unwrap()
        .objective(&params)
        .unwrap()
}

fn a1() -> Verdict {
    let mut candidates = Vec::new();
    let grid = Conventions::calibration_grid();
    for &(conventions, step_period) in &grid {
        let config = GameConfig {
            schedule: DemandSchedule {
                step_period,
                ..DemandSchedule::default()
            },
            conventions,
            ..GameConfig::default()
        };
        let cost = general_team(&config);
        if ((cost - PUBLISHED_BASELINE) / PUBLISHED_BASELINE).abs() <= 0.005 {
            // secondary oracle: the published optimized rows
            let row_err: f64 = PUBLISHED_ROWS
                .iter()
                .enumerate()
                .map(|(p, (x, c))| ((seat_cost(&config, p, StermanParams::from_array(*x)) - c) / c).abs())
                .sum();
            candidates.push((row_err, conventions, step_period, cost));
        }
    }
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0));
    let default = GameConfig::default();
    let baseline = general_team(&default);
    let rel = (baseline - PUBLISHED_BASELINE) / PUBLISHED_BASELINE;
    // delaying customer orders by two rounds while stepping two rounds
    // earlier yields the very same game, so exact ties are expected
    let best = candidates.first().map_or(f64::NAN, |c| c.0);
    let tied = candidates.iter().filter(|c| (c.0 - best).abs() <= 1e-12).count();
    let best_is_default = candidates.iter().any(|c| {
        c.1 == default.conventions && c.2 == default.schedule.step_period && (c.0 - best).abs() <= 1e-12
    });
    verdict(
        "A1",
        rel.abs() <= 0.005 && best_is_default,
        format!(
            "default team cost {baseline:.2} vs {PUBLISHED_BASELINE} ({:+.2}%); {} of {} conventions within 0.5%, default among the {tied} best on the optimized rows: {best_is_default}",
            100.0 * rel,
            candidates.len(),
            grid.len()
        ),
    )
}

fn a2() -> (Verdict, Vec<OptResult>) {
    let config = GameConfig::default();
    let mut results = Vec::new();
    let mut pass = true;
    let mut parts = Vec::new();
    for position in 0..ENTITY_COUNT {
        let problem = OptProblem::new(position, StermanParams::GENERAL, config).unwrap();
        let t = Instant::now();
        let r = minimize_box(&problem, 32, 3, exec()).unwrap();
        let secs = t.elapsed().as_secs_f64();
        let target = PUBLISHED_ROWS[position].1;
        let x = r.best_params.to_array();
        let in_box = (0..4).all(|k| x[k] >= problem.lower[k] && x[k] <= problem.upper[k]);
        let ok = r.best_cost <= 1.15 * target && in_box && secs < 300.0;
        pass &= ok;
        parts.push(format!("{} {:.2} ({:.3}x, {secs:.1}s)", ENTITY_NAMES[position], r.best_cost, r.best_cost / target));
        results.push(r);
    }
    (verdict("A2", pass, format!("32 starts: {}", parts.join(", "))), results)
}

fn a3() -> (Verdict, AgentBundle) {
    let tc = TrainConfig {
        seed: 1,
        ..TrainConfig::default()
    };
    let mut reductions = [0.0; ENTITY_COUNT];
    let mut slowest: f64 = 0.0;
    let mut wholesaler = None;
    for position in 0..ENTITY_COUNT {
        let env = EnvConfig {
            agent_position: position,
            ..EnvConfig::default()
        };
        let t = Instant::now();
        let out = train(&env, &tc).unwrap();
        slowest = slowest.max(t.elapsed().as_secs_f64());
        let report = evaluate(&out.net, &env, 100, 999, exec()).unwrap();
        reductions[position] = report.mean_reduction_pct;
        if position == 1 {
            wholesaler = Some(AgentBundle::new(out.net, out.adam, env, &tc).unwrap());
        }
    }
    let strong = reductions.iter().filter(|r| **r <= -25.0).count();
    let pass = reductions[1] <= -35.0 && strong >= 2 && slowest < 1800.0;
    let listed: Vec<String> = (0..ENTITY_COUNT)
        .map(|p| format!("{} {:+.1}%", ENTITY_NAMES[p], reductions[p]))
        .collect();
    (
        verdict(
            "A3",
            pass,
            format!(
                "{} steps, 100 greedy episodes: {}; {strong} seats at <= -25%; slowest training {slowest:.0}s",
                tc.total_env_steps,
                listed.join(", ")
            ),
        ),
        wholesaler.unwrap(),
    )
}

fn a4_a5(optimized: &[OptResult], wholesaler: AgentBundle) -> (Verdict, Verdict) {
    let mut mb = SweepConfig::new(vec![StermanParams::GENERAL], 7);
    mb.positions = vec![1, 2];
    mb.kinds = vec![AgentKind::ModelBased];
    for p in [1, 2] {
        mb.model_based.insert(p, optimized[p].best_params);
    }
    let mut mf = mb.clone();
    mf.positions = vec![1];
    mf.kinds = vec![AgentKind::ModelFree];
    mf.model_free.insert(1, wholesaler);
    let mut records = run_sweep(&mb, exec()).unwrap();
    records.extend(run_sweep(&mf, exec()).unwrap());
    let summary = summarize(&records).unwrap();

    let (xs, ys): (Vec<f64>, Vec<f64>) = series(&summary, 2, AgentKind::ModelBased).into_iter().unzip();
    let rho = spearman(&xs, &ys);
    let v4 = verdict(
        "A4",
        rho >= 0.8,
        format!(
            "model-based distributor, {} sigmas x {} reps: reduction {:+.1}% at 0 to {:+.1}% at {}; spearman {rho:.3}",
            xs.len(),
            mb.reps_per_cell,
            ys[0],
            ys[ys.len() - 1],
            xs[xs.len() - 1]
        ),
    );
    let cross = crossover_sigma(&summary, 1);
    let at = |kind, s: f64| {
        series(&summary, 1, kind)
            .into_iter()
            .find(|p| p.0 == s)
            .map(|p| p.1)
            .unwrap_or(f64::NAN)
    };
    let top = xs[xs.len() - 1];
    let v5 = verdict(
        "A5",
        cross.is_some(),
        format!(
            "wholesaler crossover sigma {:?}; at sigma {top}: model-based {:+.1}%, model-free {:+.1}%",
            cross,
            at(AgentKind::ModelBased, top),
            at(AgentKind::ModelFree, top)
        ),
    );
    (v4, v5)
}

fn a6() -> Verdict {
    let grad = gradient_check(11, 20).unwrap();
    let dueling = dueling_identity_error(12, 50).unwrap();
    let adam = adam_first_step_error(13).unwrap();
    verdict(
        "A6",
        grad < 1e-4 && dueling <= 1e-12 && adam < 1e-6,
        format!("gradient rel err {grad:.2e}, dueling identity {dueling:.2e}, adam first step {adam:.2e}"),
    )
}

/// Deterministic pseudo-random orders in [0, 20).
fn order(k: u64) -> f64 {
    (splitmix64(k) >> 11) as f64 / (1u64 << 53) as f64 * 20.0
}

fn stock(state: &GameState) -> f64 {
    let mut total: f64 = state.production.iter().sum();
    for e in &state.entities {
        total += e.on_hand + e.inbound_shipping.iter().sum::<f64>();
    }
    total
}

fn a7() -> Verdict {
    // conservation and fill correctness over random order streams and every convention
    let mut conserved = true;
    let mut fills = true;
    let mut recomputed = true;
    let mut k = 0u64;
    for (c, &(conventions, step_period)) in Conventions::calibration_grid().iter().enumerate().step_by(7) {
        let schedule = DemandSchedule {
            step_period,
            ..DemandSchedule::default()
        };
        let mut state = GameState::new(schedule, Default::default(), conventions).unwrap();
        let mut prev = [(state.entities[0].on_hand, 0.0); ENTITY_COUNT];
        while !state.is_done() {
            let before = stock(&state);
            let orders: [f64; ENTITY_COUNT] = std::array::from_fn(|_| {
                k += 1;
                order(k ^ ((c as u64) << 32))
            });
            state.advance_round(orders).unwrap();
            let rec = state.trajectory.last().unwrap();
            let delta = stock(&state) - before;
            conserved &= (delta - (orders[ENTITY_COUNT - 1] - rec.entities[0].shipped)).abs() < 1e-9;
            for (i, e) in rec.entities.iter().enumerate() {
                let (on_hand, backlog) = prev[i];
                fills &= (e.shipped - (on_hand + e.arrival).min(backlog + e.incoming_order)).abs() < 1e-9;
                fills &= e.on_hand * e.backlog == 0.0;
                prev[i] = (e.on_hand, e.backlog);
            }
        }
        let t = state.trajectory.len();
        for s in 2..t {
            for i in 0..ENTITY_COUNT - 1 {
                conserved &= state.trajectory[s - 2].entities[i + 1].shipped == state.trajectory[s].entities[i].arrival;
            }
        }
        recomputed &= (team_cost(&state.trajectory) - state.cumulative_cost).abs() <= 1e-9 * state.cumulative_cost;
    }

    // equilibrium fixed point
    let flat = DemandSchedule {
        post_step_demand: 4.0,
        ..DemandSchedule::default()
    };
    let mut state = GameState::new(flat, Default::default(), Conventions::default()).unwrap();
    let start = state.entities.clone();
    let mut fixed = true;
    while !state.is_done() {
        let costs = state.advance_round([4.0; ENTITY_COUNT]).unwrap();
        fixed &= costs.iter().sum::<f64>() == 24.0 && state.entities == start;
    }

    // steady state after the step under a base-stock retailer
    let mut seats = [PolicyHandle::sterman(StermanParams::PASS_THROUGH); ENTITY_COUNT];
    seats[0] = PolicyHandle::base_stock(36.0);
    let mut state = GameConfig::default().new_state().unwrap();
    let mut driver = Driver::new(seats, 0).unwrap();
    while !state.is_done() {
        driver.play_round(&mut state, None).unwrap();
    }
    let pipeline: Vec<f64> = (1..ENTITY_COUNT - 1)
        .map(|i| state.on_order(i).unwrap() + state.in_transit(i).unwrap())
        .collect();
    let steady = pipeline.iter().all(|p| *p == 32.0);

    verdict(
        "A7",
        conserved && fills && recomputed && fixed && steady,
        format!(
            "conservation {conserved}, fill {fills}, cost recomputation {recomputed}, fixed point at 24/period {fixed}, interior on-order + in-transit {pipeline:?}"
        ),
    )
}

fn cli(dir: &Path, args: &[&str]) -> bool {
    Command::new(env!("CARGO_BIN_EXE_bullwhip"))
        .args(args)
        .current_dir(dir)
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

/// Runs a command, re-runs it from its echoed config into a sibling
/// directory and compares every output byte for byte.
fn rerun_matches(dir: &Path, command: &str, out: &str, extra: &[&str], files: &[&str]) -> bool {
    let mut args = vec![command, "--out", out];
    args.extend_from_slice(extra);
    if !cli(dir, &args) {
        return false;
    }
    let echo = format!("{out}/config.toml");
    let again = format!("{out}-again");
    if !cli(dir, &[command, "--config", &echo, "--out", &again]) {
        return false;
    }
    files.iter().all(|f| {
        let a = std::fs::read(dir.join(out).join(f));
        let b = std::fs::read(dir.join(&again).join(f));
        matches!((a, b), (Ok(a), Ok(b)) if a == b)
    })
}

fn a8() -> Verdict {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    std::fs::write(
        dir.join("run.toml"),
        "seed = 21\n\n[simulate]\nsigma = 2.0\n\n[optimize]\nstarts = 4\n\n[train]\neval_episodes = 5\n\n\
         [train.dqn]\ntotal_env_steps = 2000\nlearning_starts = 200\nhidden = [16, 16, 16]\n\n\
         [sweep]\nsigma_max = 4.0\nsigma_step = 2.0\nreps = 4\n",
    )
    .unwrap();
    let cfg = ["--config", "run.toml"];
    let mut checks = Vec::new();
    checks.push(("simulate", rerun_matches(dir, "simulate", "sim", &cfg, &["trajectory.csv"])));
    let mut opt = cfg.to_vec();
    opt.extend(["--position", "1"]);
    checks.push(("optimize", rerun_matches(dir, "optimize", "opt", &opt, &["optimized.csv"])));
    checks.push((
        "train",
        rerun_matches(dir, "train", "train", &opt, &["agent.json", "curve.csv", "evaluation.csv"]),
    ));
    checks.push((
        "evaluate",
        rerun_matches(dir, "evaluate", "eval", &["--weights", "train/agent.json"], &["evaluation.csv"]),
    ));
    let mut sweep = opt.clone();
    sweep.extend(["--weights", "train/agent.json", "--model-based", "opt/optimized.csv"]);
    checks.push((
        "sweep",
        rerun_matches(dir, "sweep", "sweep", &sweep, &["sweep.csv", "summary.csv", "advantage.csv", "sweep.svg"]),
    ));
    checks.push((
        "report",
        rerun_matches(dir, "report", "report", &["--input", "sweep/sweep.csv"], &["summary.csv", "advantage.csv", "report.svg"]),
    ));
    let failed: Vec<&str> = checks.iter().filter(|c| !c.1).map(|c| c.0).collect();
    verdict(
        "A8",
        failed.is_empty(),
        format!(
            "{} commands re-run from their echoed configs; mismatches: {:?}",
            checks.len(),
            failed
        ),
    )
}

fn main() {
    let started = Instant::now();
    let mut verdicts = vec![a1()];
    let (v2, optimized) = a2();
    verdicts.push(v2);
    let (v3, wholesaler) = a3();
    verdicts.push(v3);
    let (v4, v5) = a4_a5(&optimized, wholesaler);
    verdicts.extend([v4, v5, a6(), a7(), a8()]);
    let failed: Vec<&Verdict> = verdicts.iter().filter(|v| !v.pass).collect();
    println!(
        "acceptance: {} of {} criteria passed in {:.0}s",
        verdicts.len() - failed.len(),
        verdicts.len(),
        started.elapsed().as_secs_f64()
    );
    if !failed.is_empty() {
        for v in failed {
            eprintln!("{} failed: {}", v.id, v.detail);
        }
        std::process::exit(1);
    }
}
