//! Discrete-time simulation of the serial four-echelon chain.
//!
//! Index 0 is the retailer and index 3 the factory. Orders travel upstream
//! through two mail slots, shipments travel downstream through two shipping
//! slots, and the factory's own orders pass through a production pipeline
//! before entering its shipping slots. A round runs five phases in order:
//! receive, fill, record cost, advance order slips, place orders.

mod conventions;
mod export;
mod game;

pub use conventions::{Conventions, FactoryLead, ForecastInput, StockMeasure, SupplyLineScope};
pub use export::write_trajectory_csv;
pub use game::{
    decision_view, run_game, run_game_with_agent, sterman_team_cost, Driver, ExternalAgent, GameConfig,
    GameOutcome,
};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const ENTITY_COUNT: usize = 4;
pub const ENTITY_NAMES: [&str; ENTITY_COUNT] = ["retailer", "wholesaler", "distributor", "factory"];

pub const INITIAL_ON_HAND: f64 = 12.0;
pub const INITIAL_SLOT: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CostParams {
    pub holding_cost_per_unit_period: f64,
    pub backorder_cost_per_unit_period: f64,
}

impl Default for CostParams {
    fn default() -> Self {
        CostParams {
            holding_cost_per_unit_period: 0.5,
            backorder_cost_per_unit_period: 1.0,
        }
    }
}

impl CostParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("holding_cost_per_unit_period", self.holding_cost_per_unit_period),
            ("backorder_cost_per_unit_period", self.backorder_cost_per_unit_period),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::param(name, format!("must be finite and > 0, got {v}")));
            }
        }
        Ok(())
    }

    pub fn period_cost(&self, on_hand: f64, backlog: f64) -> f64 {
        self.holding_cost_per_unit_period * on_hand + self.backorder_cost_per_unit_period * backlog
    }
}

/// Customer demand: `pre_step_demand` until round `step_period` (1-based),
/// `post_step_demand` from that round on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DemandSchedule {
    pub pre_step_demand: f64,
    pub post_step_demand: f64,
    pub step_period: usize,
    pub horizon: usize,
}

impl Default for DemandSchedule {
    fn default() -> Self {
        DemandSchedule {
            pre_step_demand: 4.0,
            post_step_demand: 8.0,
            step_period: 4,
            horizon: 52,
        }
    }
}

impl DemandSchedule {
    pub fn validate(&self) -> Result<()> {
        if self.step_period < 1 {
            return Err(Error::param("step_period", "must be >= 1"));
        }
        if self.horizon < self.step_period {
            return Err(Error::param(
                "horizon",
                format!("must be >= step_period ({}), got {}", self.step_period, self.horizon),
            ));
        }
        for (name, v) in [
            ("pre_step_demand", self.pre_step_demand),
            ("post_step_demand", self.post_step_demand),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::param(name, format!("must be finite and >= 0, got {v}")));
            }
        }
        Ok(())
    }

    /// Demand in the round with 0-based index `period`.
    pub fn demand(&self, period: usize) -> f64 {
        if period + 1 >= self.step_period {
            self.post_step_demand
        } else {
            self.pre_step_demand
        }
    }

    pub fn with_horizon(mut self, horizon: usize) -> Self {
        self.horizon = horizon;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityState {
    pub on_hand: f64,
    pub backlog: f64,
    /// Slot 0 arrives at the next receive phase.
    pub inbound_shipping: [f64; 2],
    /// Orders travelling to this entity; slot 0 is read at the next fill.
    /// For the retailer this is the customer-order channel, used only when
    /// customer orders are delayed.
    pub inbound_orders: [f64; 2],
    /// L̂ after the most recent decision.
    pub demand_forecast: f64,
    /// L_t: the order observed in the latest fill phase.
    pub last_incoming_order: f64,
    /// L_{t-1}.
    pub previous_incoming_order: f64,
    pub last_order_placed: f64,
    pub last_arrival: f64,
}

impl EntityState {
    fn initial() -> Self {
        EntityState {
            on_hand: INITIAL_ON_HAND,
            backlog: 0.0,
            inbound_shipping: [INITIAL_SLOT; 2],
            inbound_orders: [INITIAL_SLOT; 2],
            demand_forecast: INITIAL_SLOT,
            last_incoming_order: INITIAL_SLOT,
            previous_incoming_order: INITIAL_SLOT,
            last_order_placed: INITIAL_SLOT,
            last_arrival: INITIAL_SLOT,
        }
    }

    pub fn net_stock(&self) -> f64 {
        self.on_hand - self.backlog
    }
}

/// One entity's row of a period record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntityPeriod {
    pub arrival: f64,
    pub incoming_order: f64,
    pub shipped: f64,
    pub on_hand: f64,
    pub backlog: f64,
    pub order_placed: f64,
    pub period_cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodRecord {
    pub period: usize,
    pub entities: [EntityPeriod; ENTITY_COUNT],
}

impl PeriodRecord {
    pub fn team_cost(&self) -> f64 {
        self.entities.iter().map(|e| e.period_cost).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameState {
    pub entities: [EntityState; ENTITY_COUNT],
    /// Factory production pipeline; front enters the factory's far shipping
    /// slot at the next receive phase.
    pub production: Vec<f64>,
    pub period: usize,
    pub demand_schedule: DemandSchedule,
    pub costs: CostParams,
    pub conventions: Conventions,
    pub cumulative_cost: f64,
    pub trajectory: Vec<PeriodRecord>,
    pending: Option<PendingRound>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct PendingRound {
    arrivals: [f64; ENTITY_COUNT],
    incoming: [f64; ENTITY_COUNT],
    shipped: [f64; ENTITY_COUNT],
    costs: [f64; ENTITY_COUNT],
}

/// Fresh game at the standard initial conditions.
pub fn init_state(schedule: DemandSchedule, costs: CostParams) -> Result<GameState> {
    GameState::new(schedule, costs, Conventions::default())
}

impl GameState {
    pub fn new(schedule: DemandSchedule, costs: CostParams, conventions: Conventions) -> Result<Self> {
        schedule.validate()?;
        costs.validate()?;
        conventions.validate()?;
        Ok(GameState {
            entities: std::array::from_fn(|_| EntityState::initial()),
            production: vec![INITIAL_SLOT; conventions.factory_lead.production_slots()],
            period: 0,
            demand_schedule: schedule,
            costs,
            conventions,
            cumulative_cost: 0.0,
            trajectory: Vec::with_capacity(schedule.horizon),
            pending: None,
        })
    }

    pub fn horizon(&self) -> usize {
        self.demand_schedule.horizon
    }

    pub fn is_done(&self) -> bool {
        self.period >= self.horizon()
    }

    /// True while orders are overridden to the pre-step demand.
    pub fn is_directed_round(&self) -> bool {
        self.period < self.conventions.directed_rounds
    }

    /// Runs one round with the given orders and returns the four period costs.
    pub fn advance_round(&mut self, orders: [f64; ENTITY_COUNT]) -> Result<[f64; ENTITY_COUNT]> {
        validate_orders(&orders)?;
        let costs = self.begin_round()?;
        self.finish_round(orders)?;
        Ok(costs)
    }

    /// Phases 1 to 4: receive, fill, record cost, advance order slips.
    ///
    /// Leaves the state mid-round; decision rules read it here and the round
    /// is completed by [`GameState::finish_round`].
    pub fn begin_round(&mut self) -> Result<[f64; ENTITY_COUNT]> {
        if self.is_done() {
            return Err(Error::HorizonReached { horizon: self.horizon() });
        }
        if let Some(p) = &self.pending {
            return Ok(p.costs);
        }
        let t = self.period;
        let demand = self.demand_schedule.demand(t);
        let customer_delayed = self.conventions.customer_order_delay > 0;

        // 1. receive and advance shipping
        let mut arrivals = [0.0; ENTITY_COUNT];
        for (i, e) in self.entities.iter_mut().enumerate() {
            arrivals[i] = e.inbound_shipping[0];
            e.on_hand += arrivals[i];
            e.inbound_shipping[0] = e.inbound_shipping[1];
            e.inbound_shipping[1] = 0.0;
            e.last_arrival = arrivals[i];
        }
        if !self.production.is_empty() {
            self.entities[ENTITY_COUNT - 1].inbound_shipping[1] = self.production.remove(0);
        }

        // 2. fill
        let mut incoming = [0.0; ENTITY_COUNT];
        let mut shipped = [0.0; ENTITY_COUNT];
        for i in 0..ENTITY_COUNT {
            let e = &mut self.entities[i];
            incoming[i] = if i == 0 && !customer_delayed {
                demand
            } else {
                e.inbound_orders[0]
            };
            let owed = e.backlog + incoming[i];
            shipped[i] = e.on_hand.min(owed);
            e.on_hand -= shipped[i];
            e.backlog = owed - shipped[i];
            // exact zero on the filled side keeps on_hand * backlog == 0
            if e.backlog <= 0.0 {
                e.backlog = 0.0;
            } else {
                e.on_hand = 0.0;
            }
            e.previous_incoming_order = e.last_incoming_order;
            e.last_incoming_order = incoming[i];
        }
        for i in 1..ENTITY_COUNT {
            self.entities[i - 1].inbound_shipping[1] = shipped[i];
        }

        // 3. record
        let mut costs = [0.0; ENTITY_COUNT];
        for (i, e) in self.entities.iter().enumerate() {
            costs[i] = self.costs.period_cost(e.on_hand, e.backlog);
        }
        self.cumulative_cost += costs.iter().sum::<f64>();

        // 4. advance order slips
        for e in self.entities.iter_mut() {
            e.inbound_orders[0] = e.inbound_orders[1];
            e.inbound_orders[1] = 0.0;
        }

        self.pending = Some(PendingRound {
            arrivals,
            incoming,
            shipped,
            costs,
        });
        Ok(costs)
    }

    /// Phase 5: place orders, then close the period.
    pub fn finish_round(&mut self, orders: [f64; ENTITY_COUNT]) -> Result<()> {
        validate_orders(&orders)?;
        let Some(p) = self.pending.take() else {
            return Err(Error::param("finish_round", "no round in progress"));
        };
        for i in 0..ENTITY_COUNT - 1 {
            self.entities[i + 1].inbound_orders[1] = orders[i];
        }
        // the retailer's slots always carry customer demand; they are read
        // only when customer orders are delayed
        self.entities[0].inbound_orders[1] = self.demand_schedule.demand(self.period);
        if self.conventions.factory_lead.production_slots() == 0 {
            self.entities[ENTITY_COUNT - 1].inbound_shipping[1] += orders[ENTITY_COUNT - 1];
        } else {
            self.production.push(orders[ENTITY_COUNT - 1]);
        }
        for (e, &o) in self.entities.iter_mut().zip(orders.iter()) {
            e.last_order_placed = o;
        }

        self.trajectory.push(PeriodRecord {
            period: self.period,
            entities: std::array::from_fn(|i| EntityPeriod {
                arrival: p.arrivals[i],
                incoming_order: p.incoming[i],
                shipped: p.shipped[i],
                on_hand: self.entities[i].on_hand,
                backlog: self.entities[i].backlog,
                order_placed: orders[i],
                period_cost: p.costs[i],
            }),
        });
        self.period += 1;
        Ok(())
    }

    /// True between [`GameState::begin_round`] and [`GameState::finish_round`].
    pub fn in_round(&self) -> bool {
        self.pending.is_some()
    }

    /// Units ordered by `entity` and still in the upstream mail slots.
    pub fn on_order(&self, entity: usize) -> Result<f64> {
        check_entity(entity)?;
        Ok(match entity {
            e if e + 1 < ENTITY_COUNT => self.entities[e + 1].inbound_orders.iter().sum(),
            _ => 0.0,
        })
    }

    /// Units shipped toward `entity` (including factory production) not yet received.
    pub fn in_transit(&self, entity: usize) -> Result<f64> {
        check_entity(entity)?;
        let mut total: f64 = self.entities[entity].inbound_shipping.iter().sum();
        if entity == ENTITY_COUNT - 1 {
            total += self.production.iter().sum::<f64>();
        }
        Ok(total)
    }

    /// Backlog the upstream neighbour owes to `entity`.
    pub fn supplier_backlog(&self, entity: usize) -> Result<f64> {
        check_entity(entity)?;
        Ok(if entity + 1 < ENTITY_COUNT {
            self.entities[entity + 1].backlog
        } else {
            0.0
        })
    }

    /// Supply line of `entity` as seen under the given scope.
    pub fn supply_line(&self, entity: usize, scope: SupplyLineScope) -> Result<f64> {
        let transit = self.in_transit(entity)?;
        Ok(match scope {
            SupplyLineScope::InTransit => transit,
            SupplyLineScope::OrdersAndTransit => transit + self.on_order(entity)?,
            SupplyLineScope::Full => {
                transit + self.on_order(entity)? + self.supplier_backlog(entity)?
            }
        })
    }

    /// Everything ordered and not yet received, regardless of conventions.
    pub fn inventory_position(&self, entity: usize) -> Result<f64> {
        Ok(self.entities[entity].net_stock() + self.supply_line(entity, SupplyLineScope::Full)?)
    }

    /// On-hand inventory, shipping slots and order slots summed over the
    /// chain. Factory production is excluded.
    pub fn units_in_system(&self) -> f64 {
        let mut total = 0.0;
        for e in &self.entities {
            total += e.on_hand
                + e.inbound_shipping.iter().sum::<f64>()
                + e.inbound_orders.iter().sum::<f64>();
        }
        total
    }
}

fn validate_orders(orders: &[f64; ENTITY_COUNT]) -> Result<()> {
    for (entity, &value) in orders.iter().enumerate() {
        if !(value.is_finite() && value >= 0.0) {
            return Err(Error::InvalidOrder { entity, value });
        }
    }
    Ok(())
}

fn check_entity(entity: usize) -> Result<()> {
    if entity < ENTITY_COUNT {
        Ok(())
    } else {
        Err(Error::EntityIndex(entity))
    }
}

/// Team cost summed over every period and entity of a trajectory.
pub fn team_cost(trajectory: &[PeriodRecord]) -> f64 {
    trajectory.iter().map(PeriodRecord::team_cost).sum()
}
