use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use bullwhip_core::engine::{run_game, write_trajectory_csv, ENTITY_COUNT, ENTITY_NAMES};
use bullwhip_core::experiments::{
    crossover_sigma, read_summary_csv, read_sweep_csv, relative_advantage, render_lineplot, run_sweep,
    series, sigma_grid, spearman, summarize, write_advantage_csv, write_summary_csv, write_sweep_csv,
    AgentKind, SummaryRow, SweepConfig,
};
use bullwhip_core::optimize::{minimize_box, read_opt_rows, write_opt_rows, OptProblem};
use bullwhip_core::par::Execution;
use bullwhip_core::policies::{default_roster, load_roster, NoiseSpec, PolicyHandle, StermanParams};
use bullwhip_core::rl::{evaluate, train, write_curve_csv, AgentBundle, EvalReport};
use bullwhip_core::seed;

use crate::config::{CommandName, RunConfig, ECHO_FILE};

/// File names each command writes into the output directory.
pub fn outputs(command: CommandName) -> &'static [&'static str] {
    match command {
        CommandName::Simulate => &["trajectory.csv"],
        CommandName::Optimize => &["optimized.csv"],
        CommandName::Train => &["agent.json", "curve.csv", "evaluation.csv"],
        CommandName::Evaluate => &["evaluation.csv"],
        CommandName::Sweep => &["sweep.csv", "summary.csv", "advantage.csv", "sweep.svg"],
        CommandName::Report => &["summary.csv", "advantage.csv", "report.svg"],
    }
}

pub fn run(config: &RunConfig, exec: Execution) -> Result<()> {
    let command = config.command.context("command not set")?;
    guard_inputs(config, command)?;
    config.echo()?;
    match command {
        CommandName::Simulate => simulate(config),
        CommandName::Optimize => optimize(config, exec),
        CommandName::Train => train_agent(config, exec),
        CommandName::Evaluate => evaluate_agent(config, exec),
        CommandName::Sweep => sweep(config, exec),
        CommandName::Report => report(config),
    }
}

/// Refuses runs whose outputs would overwrite one of their inputs.
fn guard_inputs(config: &RunConfig, command: CommandName) -> Result<()> {
    let mut inputs: Vec<&PathBuf> = Vec::new();
    inputs.extend(config.roster.iter());
    match command {
        CommandName::Evaluate => inputs.extend(config.evaluate.weights.iter()),
        CommandName::Sweep => {
            inputs.extend(config.sweep.weights.iter());
            inputs.extend(config.sweep.model_based.iter());
        }
        CommandName::Report => inputs.extend(config.report.input.iter()),
        _ => {}
    }
    let written: Vec<PathBuf> = outputs(command)
        .iter()
        .chain(std::iter::once(&ECHO_FILE))
        .map(|n| normalize(&config.out.join(n)))
        .collect();
    for input in inputs {
        if written.contains(&normalize(input)) {
            bail!("{} is an input and would be overwritten; choose another --out", input.display());
        }
    }
    Ok(())
}

fn normalize(path: &Path) -> PathBuf {
    match (path.parent(), path.file_name()) {
        (Some(dir), Some(name)) => {
            let dir = if dir.as_os_str().is_empty() { Path::new(".") } else { dir };
            dir.canonicalize().unwrap_or_else(|_| dir.to_path_buf()).join(name)
        }
        _ => path.to_path_buf(),
    }
}

fn create(config: &RunConfig, name: &str) -> Result<BufWriter<File>> {
    let path = config.out_path(name);
    let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(BufReader::new(file))
}

fn roster(config: &RunConfig) -> Result<Vec<StermanParams>> {
    let entries = match &config.roster {
        Some(path) => load_roster(path)?,
        None => default_roster(),
    };
    Ok(entries.into_iter().map(|e| e.params).collect())
}

fn simulate(config: &RunConfig) -> Result<()> {
    let team = &config.simulate.team;
    let handles: [PolicyHandle; ENTITY_COUNT] = std::array::from_fn(|i| {
        let params = if team.len() == 1 { team[0] } else { team[i] };
        PolicyHandle::sterman(params)
    });
    let mut seats = handles;
    for (i, h) in seats.iter_mut().enumerate() {
        *h = h.with_noise(NoiseSpec::new(config.simulate.sigma, i as u64)?);
    }
    let outcome = run_game(seats, &config.game, config.seed)?;
    let mut w = create(config, "trajectory.csv")?;
    write_trajectory_csv(&outcome.trajectory, &mut w)?;
    w.flush()?;
    for (i, name) in ENTITY_NAMES.iter().enumerate() {
        let cost: f64 = outcome.trajectory.iter().map(|r| r.entities[i].period_cost).sum();
        println!("{name:<12} {cost:>12.2}");
    }
    println!("team cost    {:>12.2}", outcome.total_cost);
    Ok(())
}

fn optimize(config: &RunConfig, exec: Execution) -> Result<()> {
    let opt = &config.optimize;
    let mut rows = Vec::new();
    for &position in &opt.positions {
        let problem = OptProblem::new(position, opt.teammate, config.game)?;
        let result = minimize_box(&problem, opt.starts, config.seed, exec)?;
        let p = result.best_params;
        println!(
            "{:<12} theta {:.4} alpha {:.4} beta {:.4} s' {:.3}  cost {:.2} ({:+.2}%)",
            ENTITY_NAMES[position],
            p.theta,
            p.alpha,
            p.beta,
            p.s_prime,
            result.best_cost,
            result.reduction_pct()
        );
        rows.push(result.row());
    }
    let mut w = create(config, "optimized.csv")?;
    write_opt_rows(&rows, &mut w)?;
    w.flush()?;
    Ok(())
}

fn write_evaluation(config: &RunConfig, report: &EvalReport) -> Result<()> {
    let mut w = create(config, "evaluation.csv")?;
    writeln!(w, "episode,cost,baseline_cost,reduction_pct")?;
    for (k, (c, b)) in report.costs.iter().zip(&report.baseline_costs).enumerate() {
        writeln!(w, "{k},{c:.6},{b:.6},{:.6}", 100.0 * (c - b) / b)?;
    }
    w.flush()?;
    println!(
        "evaluation: mean cost {:.2} (std {:.2}), baseline {:.2}, mean reduction {:+.2}%",
        report.mean_cost, report.cost_std, report.baseline_mean, report.mean_reduction_pct
    );
    Ok(())
}

fn eval_seed(config: &RunConfig) -> u64 {
    seed::derive(config.seed, "evaluate", &[])
}

fn train_agent(config: &RunConfig, exec: Execution) -> Result<()> {
    let position = config.train.position;
    let env = config.env_config(position, roster(config)?);
    let tc = config.train.dqn.to_train_config(config.seed);
    let outcome = train(&env, &tc)?;
    let mut w = create(config, "curve.csv")?;
    write_curve_csv(&outcome.curve, &mut w)?;
    w.flush()?;
    println!(
        "trained {} agent: {} episodes, {} updates",
        ENTITY_NAMES[position],
        outcome.curve.len(),
        outcome.updates
    );
    if config.train.eval_episodes > 0 {
        let report = evaluate(&outcome.net, &env, config.train.eval_episodes, eval_seed(config), exec)?;
        write_evaluation(config, &report)?;
    }
    let bundle = AgentBundle::new(outcome.net, outcome.adam, env, &tc)?;
    bundle.save(&config.out_path("agent.json"))?;
    Ok(())
}

fn evaluate_agent(config: &RunConfig, exec: Execution) -> Result<()> {
    let path = config.evaluate.weights.as_ref().context("evaluate.weights not set")?;
    let bundle = AgentBundle::load(path).with_context(|| format!("loading {}", path.display()))?;
    let report = evaluate(bundle.net(), &bundle.env, config.evaluate.episodes, eval_seed(config), exec)?;
    write_evaluation(config, &report)
}

fn sweep(config: &RunConfig, exec: Execution) -> Result<()> {
    let s = &config.sweep;
    let mut sc = SweepConfig::new(roster(config)?, config.seed);
    sc.sigma_grid = sigma_grid(s.sigma_max, s.sigma_step);
    sc.reps_per_cell = s.reps;
    sc.positions = s.positions.clone();
    sc.kinds = s.kinds.clone();
    sc.baseline_seat = s.baseline_seat;
    sc.game = config.game;
    if s.kinds.contains(&AgentKind::ModelBased) {
        if let Some(path) = &s.model_based {
            for row in read_opt_rows(open(path)?)? {
                sc.model_based.insert(row.position, row.params());
            }
        }
    }
    if s.kinds.contains(&AgentKind::ModelFree) {
        for path in &s.weights {
            let bundle = AgentBundle::load(path).with_context(|| format!("loading {}", path.display()))?;
            sc.model_free.insert(bundle.env.agent_position, bundle);
        }
    }
    let records = run_sweep(&sc, exec)?;
    let mut w = create(config, "sweep.csv")?;
    write_sweep_csv(&records, &mut w)?;
    w.flush()?;
    let summary = summarize(&records)?;
    emit_summary(config, &summary, "sweep.svg")
}

fn report(config: &RunConfig) -> Result<()> {
    let path = config.report.input.as_ref().context("report.input not set")?;
    let header = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?
        .lines()
        .next()
        .unwrap_or_default()
        .to_string();
    let summary = if header.split(',').any(|c| c == "rep") {
        summarize(&read_sweep_csv(open(path)?)?)?
    } else {
        read_summary_csv(open(path)?)?
    };
    emit_summary(config, &summary, "report.svg")
}

/// Summary CSV, advantage table when both kinds are present, a plot and a
/// short trend digest.
fn emit_summary(config: &RunConfig, summary: &[SummaryRow], plot: &str) -> Result<()> {
    let mut w = create(config, "summary.csv")?;
    write_summary_csv(summary, &mut w)?;
    w.flush()?;
    let both = AgentKind::ALL
        .iter()
        .all(|k| summary.iter().any(|r| r.agent_kind == *k));
    if both {
        let adv = relative_advantage(summary)?;
        let mut w = create(config, "advantage.csv")?;
        write_advantage_csv(&adv, &mut w)?;
        w.flush()?;
    }
    render_lineplot(summary, &config.out_path(plot))?;
    let mut cells: Vec<(usize, AgentKind)> = summary.iter().map(|r| (r.position, r.agent_kind)).collect();
    cells.sort();
    cells.dedup();
    for (position, kind) in cells {
        let points = series(summary, position, kind);
        let (xs, ys): (Vec<f64>, Vec<f64>) = points.iter().copied().unzip();
        println!(
            "{:<12} {:<12} sigma {:>5.1}..{:<5.1} reduction {:+7.2}% .. {:+7.2}%  spearman {:.3}",
            ENTITY_NAMES[position],
            kind.label(),
            xs[0],
            xs[xs.len() - 1],
            ys[0],
            ys[ys.len() - 1],
            spearman(&xs, &ys)
        );
    }
    if both {
        let mut positions: Vec<usize> = summary.iter().map(|r| r.position).collect();
        positions.dedup();
        for p in positions {
            match crossover_sigma(summary, p) {
                Some(s) => println!("{:<12} model-free ahead from sigma {s}", ENTITY_NAMES[p]),
                None => println!("{:<12} no crossover", ENTITY_NAMES[p]),
            }
        }
    }
    Ok(())
}
