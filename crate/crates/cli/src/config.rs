//! Run configuration: a TOML file, overridden by flags, validated as a whole
//! and echoed into the output directory.

use std::fmt;
use std::path::PathBuf;

use anyhow::{bail, Context};
use bullwhip_core::engine::{FactoryLead, GameConfig, StockMeasure, SupplyLineScope, ENTITY_COUNT};
use bullwhip_core::experiments::AgentKind;
use bullwhip_core::policies::{NoiseSpec, StermanParams};
use bullwhip_core::rl::{BaselineSeat, EnvConfig, TrainConfig};
use serde::de::{DeserializeOwned, IntoDeserializer};
use serde::{Deserialize, Serialize};

/// Name of the echoed effective config inside every output directory.
pub const ECHO_FILE: &str = "config.toml";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum CommandName {
    Simulate,
    Optimize,
    Train,
    Evaluate,
    Sweep,
    Report,
}

impl fmt::Display for CommandName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CommandName::Simulate => "simulate",
            CommandName::Optimize => "optimize",
            CommandName::Train => "train",
            CommandName::Evaluate => "evaluate",
            CommandName::Sweep => "sweep",
            CommandName::Report => "report",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Set when echoed; a file written for one command is rejected by another.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub command: Option<CommandName>,
    pub seed: u64,
    pub out: PathBuf,
    /// Roster CSV; the built-in general roster when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub roster: Option<PathBuf>,
    pub game: GameConfig,
    pub simulate: SimulateSection,
    pub optimize: OptimizeSection,
    pub train: TrainSection,
    pub evaluate: EvaluateSection,
    pub sweep: SweepSection,
    pub report: ReportSection,
    /// File the config was read from.
    #[serde(skip)]
    pub source: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            command: None,
            seed: 1,
            out: PathBuf::from("out"),
            roster: None,
            game: GameConfig::default(),
            simulate: SimulateSection::default(),
            optimize: OptimizeSection::default(),
            train: TrainSection::default(),
            evaluate: EvaluateSection::default(),
            sweep: SweepSection::default(),
            report: ReportSection::default(),
            source: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateSection {
    /// One entry for a homogeneous team or one per seat, retailer first.
    pub team: Vec<StermanParams>,
    pub sigma: f64,
}

impl Default for SimulateSection {
    fn default() -> Self {
        SimulateSection {
            team: vec![StermanParams::GENERAL],
            sigma: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizeSection {
    pub positions: Vec<usize>,
    pub starts: usize,
    pub teammate: StermanParams,
}

impl Default for OptimizeSection {
    fn default() -> Self {
        OptimizeSection {
            positions: (0..ENTITY_COUNT).collect(),
            starts: 32,
            teammate: StermanParams::GENERAL,
        }
    }
}

/// Learning hyperparameters; the run seed drives every stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DqnSection {
    pub total_env_steps: u64,
    pub batch_size: usize,
    pub gamma: f64,
    pub target_sync_interval: u64,
    pub learning_rate: f64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    pub temperature_start: f64,
    pub temperature_end: f64,
    pub decay_fraction: f64,
    pub replay_capacity: usize,
    pub learning_starts: u64,
    pub update_every: u64,
    pub hidden: Vec<usize>,
}

impl Default for DqnSection {
    fn default() -> Self {
        let t = TrainConfig::default();
        DqnSection {
            total_env_steps: t.total_env_steps,
            batch_size: t.batch_size,
            gamma: t.gamma,
            target_sync_interval: t.target_sync_interval,
            learning_rate: t.learning_rate,
            epsilon_start: t.epsilon_start,
            epsilon_end: t.epsilon_end,
            temperature_start: t.temperature_start,
            temperature_end: t.temperature_end,
            decay_fraction: t.decay_fraction,
            replay_capacity: t.replay_capacity,
            learning_starts: t.learning_starts,
            update_every: t.update_every,
            hidden: t.hidden,
        }
    }
}

impl DqnSection {
    pub fn to_train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            total_env_steps: self.total_env_steps,
            batch_size: self.batch_size,
            gamma: self.gamma,
            target_sync_interval: self.target_sync_interval,
            learning_rate: self.learning_rate,
            epsilon_start: self.epsilon_start,
            epsilon_end: self.epsilon_end,
            temperature_start: self.temperature_start,
            temperature_end: self.temperature_end,
            decay_fraction: self.decay_fraction,
            replay_capacity: self.replay_capacity,
            learning_starts: self.learning_starts,
            update_every: self.update_every,
            hidden: self.hidden.clone(),
            seed,
        }
    }
}

/// Environment settings other than the seat, roster and game, which come
/// from the rest of the run config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnvSection {
    pub horizon_min: usize,
    pub horizon_max: usize,
    pub eval_horizon: usize,
    pub window: usize,
    pub action_offsets: Vec<f64>,
    pub obs_scale: f64,
    pub teammate_sigma: f64,
    pub reward_scale: f64,
    pub baseline_seat: BaselineSeat,
}

impl Default for EnvSection {
    fn default() -> Self {
        let e = EnvConfig::default();
        EnvSection {
            horizon_min: e.horizon_range.0,
            horizon_max: e.horizon_range.1,
            eval_horizon: e.eval_horizon,
            window: e.window,
            action_offsets: e.action_offsets,
            obs_scale: e.obs_scale,
            teammate_sigma: e.teammate_sigma,
            reward_scale: e.reward_scale,
            baseline_seat: e.baseline_seat,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSection {
    pub position: usize,
    /// Greedy evaluation episodes run after training; 0 skips evaluation.
    pub eval_episodes: usize,
    pub env: EnvSection,
    pub dqn: DqnSection,
}

impl Default for TrainSection {
    fn default() -> Self {
        TrainSection {
            position: 1,
            eval_episodes: 100,
            env: EnvSection::default(),
            dqn: DqnSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvaluateSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weights: Option<PathBuf>,
    pub episodes: usize,
}

impl Default for EvaluateSection {
    fn default() -> Self {
        EvaluateSection {
            weights: None,
            episodes: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub sigma_max: f64,
    pub sigma_step: f64,
    pub reps: usize,
    pub positions: Vec<usize>,
    pub kinds: Vec<AgentKind>,
    /// Optimizer results CSV supplying the model-based parameters.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model_based: Option<PathBuf>,
    /// Trained agent bundles; each bundle records its own seat.
    pub weights: Vec<PathBuf>,
    pub baseline_seat: BaselineSeat,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            sigma_max: 15.0,
            sigma_step: 0.5,
            reps: 100,
            positions: (0..ENTITY_COUNT).collect(),
            kinds: AgentKind::ALL.to_vec(),
            model_based: None,
            weights: Vec::new(),
            baseline_seat: BaselineSeat::RosterDraw,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReportSection {
    /// Sweep records or summary CSV.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
}

/// Flag values that override the file.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct Overrides {
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Agent seat: 0 retailer, 1 wholesaler, 2 distributor, 3 factory.
    #[arg(long, global = true)]
    pub position: Option<usize>,
    #[arg(long, global = true)]
    pub sigma_max: Option<f64>,
    #[arg(long, global = true)]
    pub reps: Option<usize>,
    #[arg(long, global = true)]
    pub roster: Option<PathBuf>,
    /// Agent bundle; repeat for several seats in a sweep.
    #[arg(long, global = true)]
    pub weights: Vec<PathBuf>,
    /// Optimizer results CSV for model-based sweep cells.
    #[arg(long, global = true)]
    pub model_based: Option<PathBuf>,
    /// Input CSV for `report`.
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
    /// board | pipeline
    #[arg(long, global = true)]
    pub factory_lead: Option<String>,
    /// 0 or 2
    #[arg(long, global = true)]
    pub customer_order_delay: Option<usize>,
    /// in_transit | orders_and_transit | full
    #[arg(long, global = true)]
    pub supply_line: Option<String>,
    /// net | on_hand
    #[arg(long, global = true)]
    pub stock_measure: Option<String>,
}

fn parse_name<T: DeserializeOwned>(flag: &str, value: &str) -> anyhow::Result<T> {
    T::deserialize(value.into_deserializer())
        .map_err(|e: serde::de::value::Error| anyhow::anyhow!("--{flag}: {e}"))
}

/// A validation failure tied to a dotted config key.
#[derive(Debug)]
struct Invalid {
    key: String,
    reason: String,
}

fn invalid(key: impl Into<String>, reason: impl fmt::Display) -> Invalid {
    Invalid {
        key: key.into(),
        reason: reason.to_string(),
    }
}

/// Maps a core error to the key it concerns, prefixing the section.
fn core_err(section: &str, err: bullwhip_core::Error) -> Invalid {
    match err {
        bullwhip_core::Error::InvalidParameter { name, reason } => invalid(format!("{section}.{name}"), reason),
        other => invalid(section, other),
    }
}

impl RunConfig {
    /// Reads the file (if any), applies flags and validates everything.
    pub fn load(command: CommandName, flags: &Overrides) -> anyhow::Result<Self> {
        let (mut config, source) = match &flags.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading config {}", path.display()))?;
                let config: RunConfig =
                    toml::from_str(&text).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
                (config, Some((path.clone(), text)))
            }
            None => (RunConfig::default(), None),
        };
        if let Some(c) = config.command {
            if c != command {
                bail!("config was written for `{c}`, not `{command}`");
            }
        }
        config.command = Some(command);
        config.source = flags.config.clone();
        let touched = config.apply(flags)?;
        if let Err(e) = config.validate(command) {
            let line = match &source {
                Some((_, text)) if !touched.contains(&e.key) => locate(text, &e.key),
                _ => None,
            };
            match (&source, line) {
                (Some((path, _)), Some(n)) => bail!("{}:{n}: {}: {}", path.display(), e.key, e.reason),
                _ => bail!("{}: {}", e.key, e.reason),
            }
        }
        Ok(config)
    }

    /// Applies flags; returns the keys they set.
    fn apply(&mut self, f: &Overrides) -> anyhow::Result<Vec<String>> {
        let mut touched = Vec::new();
        let mut mark = |k: &str| touched.push(k.to_string());
        if let Some(s) = f.seed {
            self.seed = s;
            mark("seed");
        }
        if let Some(o) = &f.out {
            self.out = o.clone();
            mark("out");
        }
        if let Some(r) = &f.roster {
            self.roster = Some(r.clone());
            mark("roster");
        }
        if let Some(p) = f.position {
            self.optimize.positions = vec![p];
            self.train.position = p;
            self.sweep.positions = vec![p];
            for k in ["optimize.positions", "train.position", "sweep.positions"] {
                mark(k);
            }
        }
        if let Some(s) = f.sigma_max {
            self.sweep.sigma_max = s;
            mark("sweep.sigma_max");
        }
        if let Some(r) = f.reps {
            self.sweep.reps = r;
            mark("sweep.reps");
        }
        if !f.weights.is_empty() {
            self.evaluate.weights = Some(f.weights[0].clone());
            self.sweep.weights = f.weights.clone();
            mark("evaluate.weights");
            mark("sweep.weights");
        }
        if let Some(m) = &f.model_based {
            self.sweep.model_based = Some(m.clone());
            mark("sweep.model_based");
        }
        if let Some(i) = &f.input {
            self.report.input = Some(i.clone());
            mark("report.input");
        }
        let conv = &mut self.game.conventions;
        if let Some(v) = &f.factory_lead {
            conv.factory_lead = parse_name::<FactoryLead>("factory-lead", v)?;
            mark("game.conventions.factory_lead");
        }
        if let Some(v) = f.customer_order_delay {
            conv.customer_order_delay = v;
            mark("game.conventions.customer_order_delay");
        }
        if let Some(v) = &f.supply_line {
            conv.supply_line = parse_name::<SupplyLineScope>("supply-line", v)?;
            mark("game.conventions.supply_line");
        }
        if let Some(v) = &f.stock_measure {
            conv.stock_measure = parse_name::<StockMeasure>("stock-measure", v)?;
            mark("game.conventions.stock_measure");
        }
        Ok(touched)
    }

    fn validate(&self, command: CommandName) -> Result<(), Invalid> {
        if i64::try_from(self.seed).is_err() {
            return Err(invalid("seed", "must fit in a signed 64-bit integer"));
        }
        self.game.schedule.validate().map_err(|e| core_err("game.schedule", e))?;
        self.game.costs.validate().map_err(|e| core_err("game.costs", e))?;
        self.game.conventions.validate().map_err(|e| core_err("game.conventions", e))?;
        match command {
            CommandName::Simulate => {
                let n = self.simulate.team.len();
                if n != 1 && n != ENTITY_COUNT {
                    return Err(invalid("simulate.team", format!("needs 1 or {ENTITY_COUNT} entries, got {n}")));
                }
                for p in &self.simulate.team {
                    p.validate().map_err(|e| core_err("simulate.team", e))?;
                }
                NoiseSpec::new(self.simulate.sigma, 0).map_err(|e| core_err("simulate", e))?;
            }
            CommandName::Optimize => {
                check_positions("optimize.positions", &self.optimize.positions)?;
                if self.optimize.starts == 0 {
                    return Err(invalid("optimize.starts", "must be >= 1"));
                }
                self.optimize.teammate.validate().map_err(|e| core_err("optimize.teammate", e))?;
            }
            CommandName::Train => {
                check_positions("train.position", &[self.train.position])?;
                let env = self.env_config(self.train.position, vec![StermanParams::GENERAL]);
                env.validate().map_err(|e| core_err("train.env", e))?;
                self.train.dqn.to_train_config(self.seed).validate().map_err(|e| core_err("train.dqn", e))?;
            }
            CommandName::Evaluate => {
                if self.evaluate.weights.is_none() {
                    return Err(invalid("evaluate.weights", "an agent bundle is required (--weights)"));
                }
                if self.evaluate.episodes == 0 {
                    return Err(invalid("evaluate.episodes", "must be >= 1"));
                }
            }
            CommandName::Sweep => {
                let s = &self.sweep;
                if !(s.sigma_max.is_finite() && s.sigma_max >= 0.0) {
                    return Err(invalid("sweep.sigma_max", "must be finite and >= 0"));
                }
                if !(s.sigma_step.is_finite() && s.sigma_step > 0.0) {
                    return Err(invalid("sweep.sigma_step", "must be finite and > 0"));
                }
                if s.reps == 0 {
                    return Err(invalid("sweep.reps", "must be >= 1"));
                }
                check_positions("sweep.positions", &s.positions)?;
                if s.kinds.is_empty() {
                    return Err(invalid("sweep.kinds", "must not be empty"));
                }
                if let BaselineSeat::Params(p) = s.baseline_seat {
                    p.validate().map_err(|e| core_err("sweep.baseline_seat", e))?;
                }
            }
            CommandName::Report => {
                if self.report.input.is_none() {
                    return Err(invalid("report.input", "a sweep or summary CSV is required (--input)"));
                }
            }
        }
        Ok(())
    }

    /// Environment for an agent seat under this run's game and sections.
    pub fn env_config(&self, position: usize, roster: Vec<StermanParams>) -> EnvConfig {
        let e = &self.train.env;
        EnvConfig {
            agent_position: position,
            teammate_roster: roster,
            horizon_range: (e.horizon_min, e.horizon_max),
            eval_horizon: e.eval_horizon,
            window: e.window,
            action_offsets: e.action_offsets.clone(),
            obs_scale: e.obs_scale,
            teammate_sigma: e.teammate_sigma,
            reward_scale: e.reward_scale,
            baseline_seat: e.baseline_seat,
            game: self.game,
        }
    }

    pub fn to_toml(&self) -> anyhow::Result<String> {
        Ok(toml::to_string(self)?)
    }

    /// Writes the effective config into the output directory.
    pub fn echo(&self) -> anyhow::Result<PathBuf> {
        std::fs::create_dir_all(&self.out)
            .with_context(|| format!("creating {}", self.out.display()))?;
        let path = self.out.join(ECHO_FILE);
        let text = self.to_toml()?;
        if std::fs::read_to_string(&path).is_ok_and(|old| old == text) {
            return Ok(path);
        }
        let is_source = self.source.as_ref().is_some_and(|src| {
            src.canonicalize().ok().zip(path.canonicalize().ok()).is_some_and(|(a, b)| a == b)
        });
        if is_source {
            bail!("{} is the input config and would change; choose another --out", path.display());
        }
        std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }

    pub fn out_path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }
}

fn check_positions(key: &str, positions: &[usize]) -> Result<(), Invalid> {
    if positions.is_empty() {
        return Err(invalid(key, "must not be empty"));
    }
    match positions.iter().find(|p| **p >= ENTITY_COUNT) {
        Some(p) => Err(invalid(key, format!("seat {p} out of range 0..{ENTITY_COUNT}"))),
        None => Ok(()),
    }
}

/// 1-based line on which the dotted `key` is assigned, if it can be found.
/// Falls back to the line of the innermost table header present.
fn locate(text: &str, key: &str) -> Option<usize> {
    let parts: Vec<&str> = key.split('.').collect();
    let mut best = None;
    let mut table: Vec<String> = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if let Some(header) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            table = header.trim_matches(['[', ']']).split('.').map(|s| s.trim().to_string()).collect();
            if parts.starts_with(&table.iter().map(String::as_str).collect::<Vec<_>>()) {
                best = Some(n + 1);
            }
            continue;
        }
        let Some((lhs, _)) = line.split_once('=') else { continue };
        let full: Vec<String> = table
            .iter()
            .cloned()
            .chain(lhs.trim().split('.').map(|s| s.trim().to_string()))
            .collect();
        if full.iter().map(String::as_str).eq(parts.iter().copied()) {
            return Some(n + 1);
        }
    }
    best
}
