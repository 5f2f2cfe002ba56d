use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Board conventions the rules leave open. The defaults reproduce the
/// published baseline team cost; every alternative stays selectable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Conventions {
    pub factory_lead: FactoryLead,
    /// 0: the retailer sees customer demand in the round it occurs.
    /// 2: customer orders travel through the retailer's two mail slots.
    pub customer_order_delay: usize,
    pub supply_line: SupplyLineScope,
    pub stock_measure: StockMeasure,
    pub forecast_input: ForecastInput,
    /// Opening rounds in which every order is forced to the pre-step demand.
    pub directed_rounds: usize,
}

impl Default for Conventions {
    fn default() -> Self {
        Conventions {
            factory_lead: FactoryLead::Board,
            customer_order_delay: 0,
            supply_line: SupplyLineScope::InTransit,
            stock_measure: StockMeasure::Net,
            forecast_input: ForecastInput::Previous,
            directed_rounds: 1,
        }
    }
}

impl Conventions {
    pub fn validate(&self) -> Result<()> {
        if !matches!(self.customer_order_delay, 0 | 2) {
            return Err(Error::param(
                "customer_order_delay",
                format!("must be 0 or 2, got {}", self.customer_order_delay),
            ));
        }
        Ok(())
    }

    /// Every combination searched when calibrating against the baseline cost.
    /// Step rounds are part of the search but live on the demand schedule, so
    /// they are returned alongside.
    pub fn calibration_grid() -> Vec<(Conventions, usize)> {
        let mut grid = Vec::new();
        for step_period in 1..=6 {
            for factory_lead in [FactoryLead::Board, FactoryLead::Pipeline] {
                for customer_order_delay in [0, 2] {
                    for supply_line in SupplyLineScope::ALL {
                        for stock_measure in [StockMeasure::Net, StockMeasure::OnHand] {
                            for forecast_input in [ForecastInput::Current, ForecastInput::Previous] {
                                for directed_rounds in 0..=4 {
                                    grid.push((
                                        Conventions {
                                            factory_lead,
                                            customer_order_delay,
                                            supply_line,
                                            stock_measure,
                                            forecast_input,
                                            directed_rounds,
                                        },
                                        step_period,
                                    ));
                                }
                            }
                        }
                    }
                }
            }
        }
        grid
    }
}

/// Rounds between the factory placing an order and receiving the goods.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FactoryLead {
    /// Three rounds: one production round plus two shipping slots.
    Board,
    /// Four rounds: two production slots feeding two shipping slots.
    Pipeline,
}

impl FactoryLead {
    pub fn rounds(self) -> usize {
        match self {
            FactoryLead::Board => 3,
            FactoryLead::Pipeline => 4,
        }
    }

    pub(crate) fn production_slots(self) -> usize {
        self.rounds() - 2
    }
}

/// What a decision rule counts as its supply line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SupplyLineScope {
    /// Shipments heading to the entity (plus factory production).
    InTransit,
    /// In-transit plus orders still in the upstream mail slots.
    OrdersAndTransit,
    /// Orders, shipments and the upstream neighbour's backlog.
    Full,
}

impl SupplyLineScope {
    pub const ALL: [SupplyLineScope; 3] = [
        SupplyLineScope::InTransit,
        SupplyLineScope::OrdersAndTransit,
        SupplyLineScope::Full,
    ];
}

/// The stock level a decision rule compares against its target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StockMeasure {
    /// on_hand minus backlog.
    Net,
    OnHand,
}

/// Which observed order feeds the smoothing forecast.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForecastInput {
    /// The order received this round.
    Current,
    /// The order received in the previous round.
    Previous,
}
