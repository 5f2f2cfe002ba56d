use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{CostParams, DemandSchedule, GameState, PeriodRecord, ENTITY_COUNT};
use crate::engine::{ForecastInput, StockMeasure, Conventions};
use crate::policies::{DecisionView, PolicyHandle, PolicyKind};
use crate::seed::{self, StreamRng};
use crate::Result;

/// Everything that defines a game apart from the seats.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GameConfig {
    pub schedule: DemandSchedule,
    pub costs: CostParams,
    pub conventions: Conventions,
}

impl GameConfig {
    pub fn new_state(&self) -> Result<GameState> {
        GameState::new(self.schedule, self.costs, self.conventions)
    }

    pub fn with_horizon(mut self, horizon: usize) -> Self {
        self.schedule.horizon = horizon;
        self
    }
}

/// Supplies orders for seats of kind [`PolicyKind::ExternalAgent`].
pub trait ExternalAgent {
    fn order(&mut self, state: &GameState, view: &DecisionView) -> Result<f64>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct GameOutcome {
    pub trajectory: Vec<PeriodRecord>,
    pub total_cost: f64,
    /// Hash of every noise draw per seat; equal fingerprints mean equal draws.
    pub noise_fingerprints: [u64; ENTITY_COUNT],
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

#[derive(Debug, Clone)]
struct NoiseStream {
    rng: StreamRng,
    sigma: f64,
    fingerprint: u64,
}

impl NoiseStream {
    fn draw(&mut self) -> f64 {
        let z: f64 = StandardNormal.sample(&mut self.rng);
        let v = self.sigma * z;
        for b in v.to_bits().to_le_bytes() {
            self.fingerprint ^= u64::from(b);
            self.fingerprint = self.fingerprint.wrapping_mul(FNV_PRIME);
        }
        v
    }
}

/// Plays rounds for a fixed set of seats, owning their noise streams.
///
/// Each noisy seat draws exactly one normal per round, directed rounds
/// included, so paired runs stay aligned whatever the seats decide.
#[derive(Debug, Clone)]
pub struct Driver {
    policies: [PolicyHandle; ENTITY_COUNT],
    noise: [Option<NoiseStream>; ENTITY_COUNT],
}

impl Driver {
    pub fn new(policies: [PolicyHandle; ENTITY_COUNT], seed: u64) -> Result<Self> {
        for p in &policies {
            p.validate()?;
        }
        let noise = std::array::from_fn(|i| {
            let n = policies[i].noise;
            n.is_active().then(|| NoiseStream {
                rng: seed::stream(seed, "order-noise", &[n.stream]),
                sigma: n.sigma,
                fingerprint: FNV_OFFSET,
            })
        });
        Ok(Driver { policies, noise })
    }

    pub fn policies(&self) -> &[PolicyHandle; ENTITY_COUNT] {
        &self.policies
    }

    pub fn fingerprints(&self) -> [u64; ENTITY_COUNT] {
        std::array::from_fn(|i| self.noise[i].as_ref().map_or(FNV_OFFSET, |n| n.fingerprint))
    }

    /// Plays one full round and returns its four period costs.
    pub fn play_round<'a>(
        &mut self,
        state: &mut GameState,
        agent: Option<&mut (dyn ExternalAgent + 'a)>,
    ) -> Result<[f64; ENTITY_COUNT]> {
        let costs = state.begin_round()?;
        self.decide_and_place(state, agent)?;
        Ok(costs)
    }

    /// Completes a round opened with [`GameState::begin_round`]: every seat
    /// decides from its view and the orders are placed.
    pub fn decide_and_place<'a>(
        &mut self,
        state: &mut GameState,
        mut agent: Option<&mut (dyn ExternalAgent + 'a)>,
    ) -> Result<()> {
        let directed = state.is_directed_round();
        let forced = state.demand_schedule.pre_step_demand;
        let mut orders = [0.0; ENTITY_COUNT];
        for i in 0..ENTITY_COUNT {
            let view = decision_view(state, i)?;
            let draw = self.noise[i].as_mut().map_or(0.0, NoiseStream::draw);
            let draw = if directed { 0.0 } else { draw };
            let (order, forecast) = match self.policies[i].kind {
                PolicyKind::ExternalAgent => {
                    let agent = agent.as_deref_mut().ok_or(crate::Error::MissingAgent(i))?;
                    (agent.order(state, &view)?, view.prior_forecast)
                }
                _ => {
                    let d = self.policies[i].decide(&view, draw)?;
                    (d.order, d.forecast)
                }
            };
            orders[i] = if directed { forced } else { order };
            state.entities[i].demand_forecast = forecast;
        }
        state.finish_round(orders)
    }
}

/// The decision-time view of seat `entity`. Valid mid-round, after the fill.
pub fn decision_view(state: &GameState, entity: usize) -> Result<DecisionView> {
    let conv = &state.conventions;
    let e = state
        .entities
        .get(entity)
        .ok_or(crate::Error::EntityIndex(entity))?;
    let forecast_input = match conv.forecast_input {
        ForecastInput::Current => e.last_incoming_order,
        ForecastInput::Previous => e.previous_incoming_order,
    };
    let stock = match conv.stock_measure {
        StockMeasure::Net => e.net_stock(),
        StockMeasure::OnHand => e.on_hand,
    };
    Ok(DecisionView {
        entity,
        period: state.period,
        incoming_order: e.last_incoming_order,
        forecast_input,
        prior_forecast: e.demand_forecast,
        on_hand: e.on_hand,
        backlog: e.backlog,
        stock,
        supply_line: state.supply_line(entity, conv.supply_line)?,
        inventory_position: state.inventory_position(entity)?,
    })
}

/// Plays a full game with built-in seats only.
pub fn run_game(
    policies: [PolicyHandle; ENTITY_COUNT],
    config: &GameConfig,
    seed: u64,
) -> Result<GameOutcome> {
    play(policies, config, seed, None)
}

/// Plays a full game, asking `agent` for every external-agent seat.
pub fn run_game_with_agent(
    policies: [PolicyHandle; ENTITY_COUNT],
    config: &GameConfig,
    seed: u64,
    agent: &mut dyn ExternalAgent,
) -> Result<GameOutcome> {
    play(policies, config, seed, Some(agent))
}

fn play<'a>(
    policies: [PolicyHandle; ENTITY_COUNT],
    config: &GameConfig,
    seed: u64,
    mut agent: Option<&mut (dyn ExternalAgent + 'a)>,
) -> Result<GameOutcome> {
    let mut state = config.new_state()?;
    let mut driver = Driver::new(policies, seed)?;
    while !state.is_done() {
        driver.play_round(&mut state, agent.as_deref_mut())?;
    }
    Ok(GameOutcome {
        total_cost: state.cumulative_cost,
        noise_fingerprints: driver.fingerprints(),
        trajectory: state.trajectory,
    })
}

/// Team cost of four heuristic seats without noise.
pub fn sterman_team_cost(
    params: [crate::policies::StermanParams; ENTITY_COUNT],
    config: &GameConfig,
) -> Result<f64> {
    let policies = params.map(PolicyHandle::sterman);
    Ok(run_game(policies, config, 0)?.total_cost)
}
