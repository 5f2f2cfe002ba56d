use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::engine::{Driver, ExternalAgent, GameConfig, GameState, ENTITY_COUNT};
use crate::policies::{DecisionView, NoiseSpec, PolicyHandle, StermanParams};
use crate::seed;
use crate::{Error, Result};

/// Features recorded per period, in observation order.
pub const FEATURE_LABELS: [&str; 4] = ["net_inventory", "incoming_order", "arriving_shipment", "last_order"];

/// Who sits in the agent's seat when the same game is replayed without it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum BaselineSeat {
    /// A fresh draw from the roster, made from the episode's team stream.
    RosterDraw,
    Params(StermanParams),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvConfig {
    pub agent_position: usize,
    pub teammate_roster: Vec<StermanParams>,
    /// Inclusive range of training horizons.
    pub horizon_range: (usize, usize),
    pub eval_horizon: usize,
    pub window: usize,
    pub action_offsets: Vec<f64>,
    pub obs_scale: f64,
    pub teammate_sigma: f64,
    /// Divides the per-period team cost to form the reward.
    pub reward_scale: f64,
    pub baseline_seat: BaselineSeat,
    pub game: GameConfig,
}

impl Default for EnvConfig {
    fn default() -> Self {
        EnvConfig {
            agent_position: 1,
            teammate_roster: vec![StermanParams::GENERAL],
            horizon_range: (36, 68),
            eval_horizon: 52,
            window: 4,
            action_offsets: (-8..=8).map(f64::from).collect(),
            obs_scale: 20.0,
            teammate_sigma: 0.0,
            reward_scale: 200.0,
            baseline_seat: BaselineSeat::RosterDraw,
            game: GameConfig::default(),
        }
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<()> {
        if self.agent_position >= ENTITY_COUNT {
            return Err(Error::EntityIndex(self.agent_position));
        }
        if self.teammate_roster.is_empty() {
            return Err(Error::EmptyRoster);
        }
        for p in &self.teammate_roster {
            p.validate()?;
        }
        if self.window == 0 {
            return Err(Error::param("window", "must be >= 1"));
        }
        if self.action_offsets.is_empty() {
            return Err(Error::param("action_offsets", "must not be empty"));
        }
        if self.action_offsets.iter().any(|o| !o.is_finite())
            || self.action_offsets.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(Error::param("action_offsets", "must be finite and strictly ascending"));
        }
        let (lo, hi) = self.horizon_range;
        if lo > hi || lo < self.game.schedule.step_period {
            return Err(Error::param(
                "horizon_range",
                format!("need step_period <= min <= max, got [{lo}, {hi}]"),
            ));
        }
        if self.eval_horizon < self.game.schedule.step_period {
            return Err(Error::param("eval_horizon", "must be >= step_period"));
        }
        if !(self.obs_scale.is_finite() && self.obs_scale > 0.0) {
            return Err(Error::param("obs_scale", "must be finite and > 0"));
        }
        if !(self.reward_scale.is_finite() && self.reward_scale > 0.0) {
            return Err(Error::param("reward_scale", "must be finite and > 0"));
        }
        NoiseSpec::new(self.teammate_sigma, 0)?;
        if let BaselineSeat::Params(p) = self.baseline_seat {
            p.validate()?;
        }
        self.game.schedule.validate()?;
        self.game.costs.validate()?;
        self.game.conventions.validate()
    }

    pub fn obs_dim(&self) -> usize {
        FEATURE_LABELS.len() * self.window
    }

    pub fn n_actions(&self) -> usize {
        self.action_offsets.len()
    }

    pub fn descriptor(&self) -> crate::neural::SpaceDescriptor {
        crate::neural::SpaceDescriptor {
            obs_dim: self.obs_dim(),
            obs_labels: (0..self.window)
                .rev()
                .flat_map(|lag| FEATURE_LABELS.iter().map(move |f| format!("{f}[t-{lag}]")))
                .collect(),
            obs_scale: self.obs_scale,
            action_values: self.action_offsets.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnvMode {
    /// Random horizon drawn from `horizon_range`.
    Train,
    /// Fixed `eval_horizon`.
    Eval,
}

/// The non-agent seats and random streams of one episode.
#[derive(Debug, Clone, PartialEq)]
pub struct Episode {
    /// Parameters for every seat; the agent's entry is ignored.
    pub seats: [StermanParams; ENTITY_COUNT],
    /// Who replaces the agent in the paired baseline.
    pub baseline: StermanParams,
    pub horizon: usize,
    pub noise_seed: u64,
    pub sigma: f64,
}

/// Bootstraps teammates and the baseline seat and picks the horizon for an
/// episode, all from `seed`.
pub fn draw_episode(config: &EnvConfig, mode: EnvMode, seed_value: u64) -> Result<Episode> {
    config.validate()?;
    let mut rng = seed::stream(seed_value, "team", &[]);
    let team = crate::experiments::bootstrap_team(&config.teammate_roster, &mut rng)?;
    let extra = crate::experiments::bootstrap_team(&config.teammate_roster, &mut rng)?[0];
    let mut seats = [StermanParams::GENERAL; ENTITY_COUNT];
    let mut k = 0;
    for (i, seat) in seats.iter_mut().enumerate() {
        if i != config.agent_position {
            *seat = team[k];
            k += 1;
        }
    }
    let horizon = match mode {
        EnvMode::Eval => config.eval_horizon,
        EnvMode::Train => {
            use rand::Rng;
            let (lo, hi) = config.horizon_range;
            seed::stream(seed_value, "horizon", &[]).gen_range(lo..=hi)
        }
    };
    Ok(Episode {
        seats,
        baseline: match config.baseline_seat {
            BaselineSeat::RosterDraw => extra,
            BaselineSeat::Params(p) => p,
        },
        horizon,
        noise_seed: seed::derive(seed_value, "noise", &[]),
        sigma: config.teammate_sigma,
    })
}

/// Seat handles for an episode. With `agent` the agent seat is external and
/// noise-free; otherwise it holds the baseline player, noisy like the rest.
pub fn episode_policies(config: &EnvConfig, episode: &Episode, agent: bool) -> Result<[PolicyHandle; ENTITY_COUNT]> {
    let mut out = [PolicyHandle::external(); ENTITY_COUNT];
    for (i, slot) in out.iter_mut().enumerate() {
        let noise = NoiseSpec::new(episode.sigma, i as u64)?;
        *slot = if i == config.agent_position {
            if agent {
                PolicyHandle::external()
            } else {
                PolicyHandle::sterman(episode.baseline).with_noise(noise)
            }
        } else {
            PolicyHandle::sterman(episode.seats[i]).with_noise(noise)
        };
    }
    Ok(out)
}

/// `max(0, incoming + offset)`.
pub fn order_plus(incoming_order: f64, offset: f64) -> f64 {
    (incoming_order + offset).max(0.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub obs: Vec<f64>,
    pub reward: f64,
    pub done: bool,
}

struct FixedOrder(f64);

impl ExternalAgent for FixedOrder {
    fn order(&mut self, _: &GameState, _: &DecisionView) -> Result<f64> {
        Ok(self.0)
    }
}

/// One seat of the game exposed through reset/step. Between steps the game
/// sits just after the fill phase, where the agent decides.
pub struct BeerEnv {
    config: EnvConfig,
    state: GameState,
    driver: Driver,
    history: VecDeque<[f64; 4]>,
    round_cost: f64,
    done: bool,
}

impl BeerEnv {
    /// Fresh episode with bootstrapped teammates.
    pub fn reset(config: &EnvConfig, mode: EnvMode, seed_value: u64) -> Result<(Self, Vec<f64>)> {
        let episode = draw_episode(config, mode, seed_value)?;
        Self::start(config, &episode)
    }

    /// Fresh episode with the given seats and streams.
    pub fn start(config: &EnvConfig, episode: &Episode) -> Result<(Self, Vec<f64>)> {
        config.validate()?;
        let game = config.game.with_horizon(episode.horizon);
        let mut env = BeerEnv {
            config: config.clone(),
            state: game.new_state()?,
            driver: Driver::new(episode_policies(config, episode, true)?, episode.noise_seed)?,
            history: VecDeque::with_capacity(config.window),
            round_cost: 0.0,
            done: false,
        };
        env.open_round()?;
        let obs = env.observation();
        Ok((env, obs))
    }

    fn open_round(&mut self) -> Result<()> {
        let costs = self.state.begin_round()?;
        self.round_cost = costs.iter().sum();
        let e = &self.state.entities[self.config.agent_position];
        if self.history.len() == self.config.window {
            self.history.pop_front();
        }
        self.history
            .push_back([e.net_stock(), e.last_incoming_order, e.last_arrival, e.last_order_placed]);
        Ok(())
    }

    /// The agent's last `window` periods, oldest first, zero-padded, scaled.
    pub fn observation(&self) -> Vec<f64> {
        let mut obs = vec![0.0; self.config.obs_dim()];
        let pad = self.config.window - self.history.len();
        for (k, f) in self.history.iter().enumerate() {
            for (j, v) in f.iter().enumerate() {
                obs[(pad + k) * 4 + j] = v / self.config.obs_scale;
            }
        }
        obs
    }

    pub fn step(&mut self, action_index: usize) -> Result<StepOutcome> {
        if self.done {
            return Err(Error::EpisodeDone);
        }
        let offset = *self
            .config
            .action_offsets
            .get(action_index)
            .ok_or_else(|| Error::param("action_index", format!("{action_index} out of range")))?;
        let incoming = self.state.entities[self.config.agent_position].last_incoming_order;
        let mut agent = FixedOrder(order_plus(incoming, offset));
        self.driver.decide_and_place(&mut self.state, Some(&mut agent))?;
        let reward = -self.round_cost / self.config.reward_scale;
        self.done = self.state.is_done();
        if !self.done {
            self.open_round()?;
        }
        Ok(StepOutcome {
            obs: self.observation(),
            reward,
            done: self.done,
        })
    }

    pub fn state(&self) -> &GameState {
        &self.state
    }

    pub fn horizon(&self) -> usize {
        self.state.horizon()
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    /// Team cost so far, including the round the agent is deciding in.
    pub fn team_cost(&self) -> f64 {
        self.state.cumulative_cost
    }

    pub fn noise_fingerprints(&self) -> [u64; ENTITY_COUNT] {
        self.driver.fingerprints()
    }

    #[cfg(test)]
    pub(crate) fn state_mut(&mut self) -> &mut GameState {
        &mut self.state
    }
}
