use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::env::{draw_episode, episode_policies, BeerEnv, EnvConfig, EnvMode, Episode};
use super::explore::{argmax, select_action, LinearSchedule};
use super::replay::{ReplayBuffer, Transition};
use crate::engine::{run_game, ENTITY_COUNT};
use crate::neural::{adam_step, load_weights, save_weights, AdamState, DuelingNet, Sample, WeightsBundle};
use crate::par::{map_indexed, Execution};
use crate::seed;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub total_env_steps: u64,
    pub batch_size: usize,
    pub gamma: f64,
    /// Gradient updates between hard copies into the target network.
    pub target_sync_interval: u64,
    pub learning_rate: f64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    pub temperature_start: f64,
    pub temperature_end: f64,
    /// Share of the step budget over which both schedules decay.
    pub decay_fraction: f64,
    pub replay_capacity: usize,
    /// Steps collected before the first update.
    pub learning_starts: u64,
    /// Environment steps per gradient update.
    pub update_every: u64,
    pub hidden: Vec<usize>,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            total_env_steps: 50_000,
            batch_size: 64,
            gamma: 0.99,
            target_sync_interval: 1_000,
            learning_rate: 1e-3,
            epsilon_start: 1.0,
            epsilon_end: 0.05,
            temperature_start: 1.0,
            temperature_end: 0.1,
            decay_fraction: 0.6,
            replay_capacity: 50_000,
            learning_starts: 1_000,
            update_every: 1,
            hidden: crate::neural::DEFAULT_HIDDEN.to_vec(),
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("batch_size", self.batch_size as f64),
            ("target_sync_interval", self.target_sync_interval as f64),
            ("learning_rate", self.learning_rate),
            ("temperature_end", self.temperature_end),
            ("replay_capacity", self.replay_capacity as f64),
            ("update_every", self.update_every as f64),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::param(name, format!("must be > 0, got {v}")));
            }
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::param("gamma", "must lie in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.epsilon_end) || !(self.epsilon_end..=1.0).contains(&self.epsilon_start) {
            return Err(Error::param("epsilon", "need 0 <= end <= start <= 1"));
        }
        if !(self.temperature_start >= self.temperature_end) {
            return Err(Error::param("temperature", "need start >= end > 0"));
        }
        if !(self.decay_fraction > 0.0 && self.decay_fraction <= 1.0) {
            return Err(Error::param("decay_fraction", "must lie in (0, 1]"));
        }
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return Err(Error::param("hidden", "need at least one non-zero width"));
        }
        Ok(())
    }

    fn decay_steps(&self) -> u64 {
        ((self.total_env_steps as f64 * self.decay_fraction).round() as u64).max(1)
    }

    pub fn epsilon_schedule(&self) -> LinearSchedule {
        LinearSchedule {
            start: self.epsilon_start,
            end: self.epsilon_end,
            decay_steps: self.decay_steps(),
        }
    }

    pub fn temperature_schedule(&self) -> LinearSchedule {
        LinearSchedule {
            start: self.temperature_start,
            end: self.temperature_end,
            decay_steps: self.decay_steps(),
        }
    }
}

/// One line of the learning curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRecord {
    pub episode: u64,
    pub horizon: usize,
    pub team_cost: f64,
    pub epsilon: f64,
    pub temperature: f64,
    pub steps: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub net: DuelingNet,
    pub adam: AdamState,
    pub curve: Vec<CurveRecord>,
    pub updates: u64,
}

/// `r + gamma * max_a Q_target(next)`, or `r` for terminal transitions.
pub fn td_targets(batch: &[&Transition], target_net: &DuelingNet, gamma: f64) -> Result<Vec<f64>> {
    batch
        .iter()
        .map(|t| {
            if t.done || gamma == 0.0 {
                Ok(t.reward)
            } else {
                let q = target_net.q_values(&t.next_obs)?;
                Ok(t.reward + gamma * q.iter().copied().fold(f64::NEG_INFINITY, f64::max))
            }
        })
        .collect()
}

pub fn train(env_config: &EnvConfig, train_config: &TrainConfig) -> Result<TrainOutcome> {
    env_config.validate()?;
    train_config.validate()?;
    let tc = train_config;
    let mut init_rng = seed::stream(tc.seed, "net-init", &[]);
    let mut net = DuelingNet::new(env_config.obs_dim(), &tc.hidden, env_config.n_actions(), &mut init_rng)?;
    let mut target = net.clone();
    let mut adam = AdamState::new(&net, tc.learning_rate);
    let mut buffer = ReplayBuffer::new(tc.replay_capacity);
    let mut explore_rng = seed::stream(tc.seed, "explore", &[]);
    let mut sample_rng = seed::stream(tc.seed, "replay", &[]);
    let eps = tc.epsilon_schedule();
    let temp = tc.temperature_schedule();

    let mut curve = Vec::new();
    let mut steps = 0u64;
    let mut updates = 0u64;
    let mut episode = 0u64;
    while steps < tc.total_env_steps {
        let (mut env, mut obs) = BeerEnv::reset(env_config, EnvMode::Train, seed::derive(tc.seed, "train-episode", &[episode]))?;
        let mut finished = false;
        while steps < tc.total_env_steps {
            let (e, t) = (eps.value(steps), temp.value(steps));
            let q = net.q_values(&obs)?;
            let action = select_action(&q, e, t, &mut explore_rng)?;
            let out = env.step(action)?;
            buffer.push(Transition {
                obs: std::mem::replace(&mut obs, out.obs.clone()),
                action_index: action,
                reward: out.reward,
                next_obs: out.obs,
                done: out.done,
            });
            steps += 1;

            if steps >= tc.learning_starts && steps % tc.update_every == 0 && buffer.len() >= tc.batch_size {
                let batch = buffer.sample(tc.batch_size, &mut sample_rng);
                let targets = td_targets(&batch, &target, tc.gamma)?;
                let samples: Vec<Sample> = batch
                    .iter()
                    .zip(&targets)
                    .map(|(t, &y)| Sample {
                        obs: &t.obs,
                        action: t.action_index,
                        target: y,
                    })
                    .collect();
                let (_, grads) = net.loss_and_grads(&samples)?;
                adam_step(&mut net, &grads, &mut adam)?;
                updates += 1;
                if updates % tc.target_sync_interval == 0 {
                    target.copy_from(&net);
                }
            }
            if out.done {
                finished = true;
                break;
            }
        }
        if finished {
            curve.push(CurveRecord {
                episode,
                horizon: env.horizon(),
                team_cost: env.team_cost(),
                epsilon: eps.value(steps),
                temperature: temp.value(steps),
                steps,
            });
        }
        episode += 1;
    }
    Ok(TrainOutcome {
        net,
        adam,
        curve,
        updates,
    })
}

/// Plays one episode greedily and returns the team cost and the noise
/// fingerprints of every seat.
pub fn rollout_greedy(net: &DuelingNet, config: &EnvConfig, episode: &Episode) -> Result<(f64, [u64; ENTITY_COUNT])> {
    let (mut env, mut obs) = BeerEnv::start(config, episode)?;
    loop {
        let action = argmax(&net.q_values(&obs)?);
        let out = env.step(action)?;
        if out.done {
            return Ok((env.team_cost(), env.noise_fingerprints()));
        }
        obs = out.obs;
    }
}

/// Team cost of the same episode with the baseline player in the agent seat.
pub fn rollout_baseline(config: &EnvConfig, episode: &Episode) -> Result<(f64, [u64; ENTITY_COUNT])> {
    let policies = episode_policies(config, episode, false)?;
    let out = run_game(policies, &config.game.with_horizon(episode.horizon), episode.noise_seed)?;
    Ok((out.total_cost, out.noise_fingerprints))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub costs: Vec<f64>,
    pub baseline_costs: Vec<f64>,
    pub mean_cost: f64,
    pub cost_std: f64,
    pub baseline_mean: f64,
    /// Mean over episodes of `100 * (cost - baseline) / baseline`.
    pub mean_reduction_pct: f64,
}

/// Greedy evaluation over `n_episodes` fixed-horizon episodes, each paired
/// with a baseline run on the same teammates and noise streams.
pub fn evaluate(net: &DuelingNet, config: &EnvConfig, n_episodes: usize, seed_value: u64, exec: Execution) -> Result<EvalReport> {
    config.validate()?;
    if n_episodes == 0 {
        return Err(Error::param("n_episodes", "must be >= 1"));
    }
    let pairs = map_indexed(n_episodes, exec, |e| -> Result<(f64, f64)> {
        let episode = draw_episode(config, EnvMode::Eval, seed::derive(seed_value, "eval-episode", &[e as u64]))?;
        Ok((rollout_greedy(net, config, &episode)?.0, rollout_baseline(config, &episode)?.0))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let costs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let baseline_costs: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let n = n_episodes as f64;
    let mean_cost = costs.iter().sum::<f64>() / n;
    let var = costs.iter().map(|c| (c - mean_cost).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    Ok(EvalReport {
        mean_reduction_pct: pairs.iter().map(|(c, b)| 100.0 * (c - b) / b).sum::<f64>() / n,
        baseline_mean: baseline_costs.iter().sum::<f64>() / n,
        mean_cost,
        cost_std: var.sqrt(),
        costs,
        baseline_costs,
    })
}

pub fn write_curve_csv<W: Write>(curve: &[CurveRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if curve.is_empty() {
        w.write_record(["episode", "horizon", "team_cost", "epsilon", "temperature", "steps"])?;
    }
    for r in curve {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Trained network plus the environment it was trained in.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentBundle {
    pub weights: WeightsBundle,
    pub env: EnvConfig,
}

impl AgentBundle {
    pub fn new(net: DuelingNet, adam: AdamState, env: EnvConfig, train: &TrainConfig) -> Result<Self> {
        let weights = WeightsBundle {
            net,
            adam,
            space: env.descriptor(),
            extra: serde_json::json!({ "env": env, "train": train }),
        };
        weights.validate()?;
        Ok(AgentBundle { weights, env })
    }

    pub fn net(&self) -> &DuelingNet {
        &self.weights.net
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        save_weights(&self.weights, path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let weights = load_weights(path)?;
        let env: EnvConfig = serde_json::from_value(weights.extra.get("env").cloned().unwrap_or_default())
            .map_err(|e| Error::CorruptWeights(format!("agent environment: {e}")))?;
        env.validate()?;
        if env.descriptor() != weights.space {
            return Err(Error::Shape("environment descriptor does not match the weights".into()));
        }
        Ok(AgentBundle { weights, env })
    }
}
