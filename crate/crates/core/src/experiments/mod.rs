//! Robustness protocol: bootstrapped heuristic teams, Gaussian order noise on
//! the non-agent seats, and paired with/without-agent repetitions across a
//! noise grid and seat positions.

mod plot;
mod stats;

pub use plot::{render_lineplot, render_lineplot_svg};
pub use stats::{mean_and_stderr, spearman};

use std::collections::BTreeMap;
use std::io::{Read, Write};

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::engine::{run_game, GameConfig, ENTITY_COUNT};
use crate::par::{map_indexed, Execution};
use crate::policies::{PolicyHandle, StermanParams};
use crate::rl::{draw_episode, episode_policies, rollout_baseline, rollout_greedy, AgentBundle, BaselineSeat, EnvConfig, EnvMode};
use crate::seed;
use crate::{Error, Result};

/// Three independent draws with replacement, one per non-agent seat.
pub fn bootstrap_team<R: Rng>(roster: &[StermanParams], rng: &mut R) -> Result<[StermanParams; 3]> {
    if roster.is_empty() {
        return Err(Error::EmptyRoster);
    }
    Ok(std::array::from_fn(|_| roster[rng.gen_range(0..roster.len())]))
}

/// `max(0, intended + N(0, sigma^2))`.
pub fn inject_noise<R: Rng>(intended: f64, sigma: f64, rng: &mut R) -> Result<f64> {
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(Error::param("sigma", format!("must be finite and >= 0, got {sigma}")));
    }
    if sigma == 0.0 {
        return Ok(intended);
    }
    let z: f64 = StandardNormal.sample(rng);
    Ok(crate::policies::perturb(intended, sigma * z))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentKind {
    ModelBased,
    ModelFree,
}

impl AgentKind {
    pub const ALL: [AgentKind; 2] = [AgentKind::ModelBased, AgentKind::ModelFree];

    pub fn label(self) -> &'static str {
        match self {
            AgentKind::ModelBased => "model_based",
            AgentKind::ModelFree => "model_free",
        }
    }

    fn index(self) -> u64 {
        match self {
            AgentKind::ModelBased => 0,
            AgentKind::ModelFree => 1,
        }
    }
}

/// `0, step, 2 * step, ..., max` (inclusive, up to rounding).
pub fn sigma_grid(max: f64, step: f64) -> Vec<f64> {
    let n = (max / step + 1e-9).floor() as usize;
    (0..=n).map(|k| k as f64 * step).collect()
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub sigma_grid: Vec<f64>,
    pub reps_per_cell: usize,
    pub positions: Vec<usize>,
    pub kinds: Vec<AgentKind>,
    pub roster: Vec<StermanParams>,
    /// Tuned heuristic parameters per seat.
    pub model_based: BTreeMap<usize, StermanParams>,
    /// Trained agents per seat.
    pub model_free: BTreeMap<usize, AgentBundle>,
    pub base_seed: u64,
    pub baseline_seat: BaselineSeat,
    pub game: GameConfig,
}

impl SweepConfig {
    pub fn new(roster: Vec<StermanParams>, base_seed: u64) -> Self {
        SweepConfig {
            sigma_grid: sigma_grid(15.0, 0.5),
            reps_per_cell: 100,
            positions: (0..ENTITY_COUNT).collect(),
            kinds: AgentKind::ALL.to_vec(),
            roster,
            model_based: BTreeMap::new(),
            model_free: BTreeMap::new(),
            base_seed,
            baseline_seat: BaselineSeat::RosterDraw,
            game: GameConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sigma_grid.is_empty()
            || self.sigma_grid.iter().any(|s| !(s.is_finite() && *s >= 0.0))
            || self.sigma_grid.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(Error::param("sigma_grid", "must be non-empty, non-negative and ascending"));
        }
        if self.reps_per_cell == 0 {
            return Err(Error::param("reps_per_cell", "must be >= 1"));
        }
        if self.roster.is_empty() {
            return Err(Error::EmptyRoster);
        }
        for &p in &self.positions {
            if p >= ENTITY_COUNT {
                return Err(Error::EntityIndex(p));
            }
            for &kind in &self.kinds {
                match kind {
                    AgentKind::ModelBased if !self.model_based.contains_key(&p) => {
                        return Err(Error::MissingArtifact(format!("model-based parameters for position {p}")))
                    }
                    AgentKind::ModelFree => match self.model_free.get(&p) {
                        None => return Err(Error::MissingArtifact(format!("trained agent for position {p}"))),
                        Some(b) if b.env.agent_position != p => {
                            return Err(Error::MissingArtifact(format!(
                                "trained agent for position {p} (bundle was trained at position {})",
                                b.env.agent_position
                            )))
                        }
                        _ => {}
                    },
                    _ => {}
                }
            }
        }
        Ok(())
    }

    /// Environment for one cell; model-free cells keep the agent's own
    /// observation and action layout.
    fn env_for(&self, position: usize, kind: AgentKind, sigma: f64) -> EnvConfig {
        let template = match kind {
            AgentKind::ModelFree => self.model_free.get(&position).map(|b| b.env.clone()),
            AgentKind::ModelBased => None,
        };
        EnvConfig {
            agent_position: position,
            teammate_roster: self.roster.clone(),
            eval_horizon: self.game.schedule.horizon,
            horizon_range: (self.game.schedule.horizon, self.game.schedule.horizon),
            teammate_sigma: sigma,
            baseline_seat: self.baseline_seat,
            game: self.game,
            ..template.unwrap_or_default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub sigma: f64,
    pub position: usize,
    pub agent_kind: AgentKind,
    pub rep: usize,
    pub seed: u64,
    pub cost_with_agent: f64,
    pub cost_baseline: f64,
    pub reduction_pct: f64,
}

/// One repetition together with the noise fingerprints of both arms.
#[derive(Debug, Clone, PartialEq)]
pub struct RepOutcome {
    pub record: SweepRecord,
    pub agent_fingerprints: [u64; ENTITY_COUNT],
    pub baseline_fingerprints: [u64; ENTITY_COUNT],
}

/// Runs the paired repetition `rep` of cell `(sigma_index, position, kind)`.
pub fn run_rep(config: &SweepConfig, sigma_index: usize, position: usize, kind: AgentKind, rep: usize) -> Result<RepOutcome> {
    let sigma = *config
        .sigma_grid
        .get(sigma_index)
        .ok_or_else(|| Error::param("sigma_index", "out of range"))?;
    let rep_seed = seed::derive(
        config.base_seed,
        "sweep",
        &[sigma_index as u64, position as u64, kind.index(), rep as u64],
    );
    let env = config.env_for(position, kind, sigma);
    let episode = draw_episode(&env, EnvMode::Eval, rep_seed)?;
    let (cost_with_agent, agent_fingerprints) = match kind {
        AgentKind::ModelBased => {
            let params = config
                .model_based
                .get(&position)
                .ok_or_else(|| Error::MissingArtifact(format!("model-based parameters for position {position}")))?;
            let mut policies = episode_policies(&env, &episode, false)?;
            policies[position] = PolicyHandle::sterman(*params);
            let out = run_game(policies, &env.game.with_horizon(episode.horizon), episode.noise_seed)?;
            (out.total_cost, out.noise_fingerprints)
        }
        AgentKind::ModelFree => {
            let bundle = config
                .model_free
                .get(&position)
                .ok_or_else(|| Error::MissingArtifact(format!("trained agent for position {position}")))?;
            rollout_greedy(bundle.net(), &env, &episode)?
        }
    };
    let (cost_baseline, baseline_fingerprints) = rollout_baseline(&env, &episode)?;
    Ok(RepOutcome {
        record: SweepRecord {
            sigma,
            position,
            agent_kind: kind,
            rep,
            seed: rep_seed,
            cost_with_agent,
            cost_baseline,
            reduction_pct: 100.0 * (cost_with_agent - cost_baseline) / cost_baseline,
        },
        agent_fingerprints,
        baseline_fingerprints,
    })
}

/// Every `(sigma, position, kind, rep)` record, in that nesting order.
pub fn run_sweep(config: &SweepConfig, exec: Execution) -> Result<Vec<SweepRecord>> {
    config.validate()?;
    let mut cells = Vec::new();
    for s in 0..config.sigma_grid.len() {
        for &p in &config.positions {
            for &k in &config.kinds {
                for r in 0..config.reps_per_cell {
                    cells.push((s, p, k, r));
                }
            }
        }
    }
    map_indexed(cells.len(), exec, |i| {
        let (s, p, k, r) = cells[i];
        run_rep(config, s, p, k, r).map(|o| o.record)
    })
    .into_iter()
    .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub sigma: f64,
    pub position: usize,
    pub agent_kind: AgentKind,
    pub mean_reduction_pct: f64,
    pub stderr: f64,
    pub n: usize,
}

/// Mean reduction and its standard error per `(sigma, position, kind)`,
/// sorted by sigma, then position, then kind.
pub fn summarize(records: &[SweepRecord]) -> Result<Vec<SummaryRow>> {
    if records.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut cells: BTreeMap<(u64, usize, AgentKind), (f64, Vec<f64>)> = BTreeMap::new();
    for r in records {
        // sigma >= 0, so its bit pattern orders like the value
        cells
            .entry((r.sigma.to_bits(), r.position, r.agent_kind))
            .or_insert_with(|| (r.sigma, Vec::new()))
            .1
            .push(r.reduction_pct);
    }
    Ok(cells
        .into_iter()
        .map(|((_, position, agent_kind), (sigma, values))| {
            let (mean, stderr) = mean_and_stderr(&values);
            SummaryRow {
                sigma,
                position,
                agent_kind,
                mean_reduction_pct: mean,
                stderr,
                n: values.len(),
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdvantageRow {
    pub sigma: f64,
    pub position: usize,
    /// Model-free minus model-based mean reduction; negative favours model-free.
    pub advantage_pct_points: f64,
}

pub fn relative_advantage(summary: &[SummaryRow]) -> Result<Vec<AdvantageRow>> {
    let mut cells: BTreeMap<(u64, usize), (f64, Option<f64>, Option<f64>)> = BTreeMap::new();
    for row in summary {
        let cell = cells
            .entry((row.sigma.to_bits(), row.position))
            .or_insert((row.sigma, None, None));
        match row.agent_kind {
            AgentKind::ModelBased => cell.1 = Some(row.mean_reduction_pct),
            AgentKind::ModelFree => cell.2 = Some(row.mean_reduction_pct),
        }
    }
    cells
        .into_iter()
        .map(|((_, position), (sigma, mb, mf))| match (mb, mf) {
            (Some(mb), Some(mf)) => Ok(AdvantageRow {
                sigma,
                position,
                advantage_pct_points: mf - mb,
            }),
            _ => Err(Error::UnmatchedCell(format!("sigma {sigma}, position {position}"))),
        })
        .collect()
}

/// Mean reduction series of one `(position, kind)` over sigma.
pub fn series(summary: &[SummaryRow], position: usize, kind: AgentKind) -> Vec<(f64, f64)> {
    let mut s: Vec<(f64, f64)> = summary
        .iter()
        .filter(|r| r.position == position && r.agent_kind == kind)
        .map(|r| (r.sigma, r.mean_reduction_pct))
        .collect();
    s.sort_by(|a, b| a.0.total_cmp(&b.0));
    s
}

/// Smallest grid sigma from which the model-free mean reduction stays below
/// the model-based one for every larger sigma, if any.
pub fn crossover_sigma(summary: &[SummaryRow], position: usize) -> Option<f64> {
    let mb = series(summary, position, AgentKind::ModelBased);
    let mf = series(summary, position, AgentKind::ModelFree);
    let paired: Vec<(f64, f64, f64)> = mb
        .iter()
        .filter_map(|&(s, b)| mf.iter().find(|m| m.0 == s).map(|m| (s, b, m.1)))
        .collect();
    let mut threshold = None;
    for &(s, b, f) in paired.iter().rev() {
        if f < b {
            threshold = Some(s);
        } else {
            break;
        }
    }
    threshold
}

fn write_rows<W: Write, T: Serialize>(rows: &[T], header: &[&str], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(!rows.is_empty()).from_writer(out);
    if rows.is_empty() {
        w.write_record(header)?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_sweep_csv<W: Write>(records: &[SweepRecord], out: W) -> Result<()> {
    write_rows(
        records,
        &["sigma", "position", "agent_kind", "rep", "seed", "cost_with_agent", "cost_baseline", "reduction_pct"],
        out,
    )
}

pub fn read_sweep_csv<R: Read>(input: R) -> Result<Vec<SweepRecord>> {
    Ok(csv::Reader::from_reader(input).deserialize().collect::<std::result::Result<_, _>>()?)
}

pub fn write_summary_csv<W: Write>(rows: &[SummaryRow], out: W) -> Result<()> {
    write_rows(rows, &["sigma", "position", "agent_kind", "mean_reduction_pct", "stderr", "n"], out)
}

pub fn read_summary_csv<R: Read>(input: R) -> Result<Vec<SummaryRow>> {
    Ok(csv::Reader::from_reader(input).deserialize().collect::<std::result::Result<_, _>>()?)
}

pub fn write_advantage_csv<W: Write>(rows: &[AdvantageRow], out: W) -> Result<()> {
    write_rows(rows, &["sigma", "position", "advantage_pct_points"], out)
}

#[cfg(test)]
mod tests;
