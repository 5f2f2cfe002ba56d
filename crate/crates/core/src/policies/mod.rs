//! Ordering rules: the anchoring-and-adjustment heuristic, an order-up-to
//! base-stock rule and constant orders, plus the handle type that binds a
//! rule and its order noise to a seat.

mod roster;

pub use roster::{default_roster, load_roster, parse_roster, RosterEntry, DEFAULT_ROSTER_CSV};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Parameters of the heuristic: smoothing weight `theta`, stock adjustment
/// `alpha`, supply-line weight `beta` and desired stock `s_prime`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StermanParams {
    pub theta: f64,
    pub alpha: f64,
    pub beta: f64,
    pub s_prime: f64,
}

impl StermanParams {
    /// The "general" team member used as the baseline teammate.
    pub const GENERAL: StermanParams = StermanParams {
        theta: 0.36,
        alpha: 0.26,
        beta: 0.34,
        s_prime: 17.0,
    };

    /// Orders whatever the forecast input was (theta 1, no stock correction).
    pub const PASS_THROUGH: StermanParams = StermanParams {
        theta: 1.0,
        alpha: 0.0,
        beta: 0.0,
        s_prime: 0.0,
    };

    pub fn new(theta: f64, alpha: f64, beta: f64, s_prime: f64) -> Result<Self> {
        let p = StermanParams {
            theta,
            alpha,
            beta,
            s_prime,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("theta", self.theta), ("alpha", self.alpha), ("beta", self.beta)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::param(name, format!("must lie in [0, 1], got {v}")));
            }
        }
        if !(self.s_prime.is_finite() && self.s_prime >= 0.0) {
            return Err(Error::param(
                "s_prime",
                format!("must be finite and >= 0, got {}", self.s_prime),
            ));
        }
        Ok(())
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.theta, self.alpha, self.beta, self.s_prime]
    }

    pub fn from_array(x: [f64; 4]) -> Self {
        StermanParams {
            theta: x[0],
            alpha: x[1],
            beta: x[2],
            s_prime: x[3],
        }
    }
}

/// Exponential smoothing: `theta * observed + (1 - theta) * prev`.
pub fn update_forecast(prev_forecast: f64, observed_order: f64, theta: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::param("theta", format!("must lie in [0, 1], got {theta}")));
    }
    Ok(theta * observed_order + (1.0 - theta) * prev_forecast)
}

/// `max(0, forecast + alpha * (s_prime - stock - beta * supply_line) + noise)`.
pub fn sterman_order(
    params: &StermanParams,
    forecast: f64,
    stock: f64,
    supply_line: f64,
    noise_draw: f64,
) -> f64 {
    let adjustment = params.alpha * (params.s_prime - stock - params.beta * supply_line);
    (forecast + adjustment + noise_draw).max(0.0)
}

/// Order-up-to rule: `max(0, target - inventory_position)`.
pub fn base_stock_order(target: f64, inventory_position: f64) -> f64 {
    (target - inventory_position).max(0.0)
}

/// Additive Gaussian order noise: the standard deviation and the stream the
/// draws come from. Streams are derived from the game seed and `stream`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub sigma: f64,
    pub stream: u64,
}

impl NoiseSpec {
    pub fn none() -> Self {
        NoiseSpec {
            sigma: 0.0,
            stream: 0,
        }
    }

    pub fn new(sigma: f64, stream: u64) -> Result<Self> {
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(Error::param("sigma", format!("must be finite and >= 0, got {sigma}")));
        }
        Ok(NoiseSpec { sigma, stream })
    }

    pub fn is_active(&self) -> bool {
        self.sigma > 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PolicyKind {
    Sterman(StermanParams),
    BaseStock { target: f64 },
    Fixed { order: f64 },
    /// The order comes from a caller-supplied agent.
    ExternalAgent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicyHandle {
    pub kind: PolicyKind,
    pub noise: NoiseSpec,
}

/// What a seat sees when it decides, read after the fill phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecisionView {
    pub entity: usize,
    pub period: usize,
    pub incoming_order: f64,
    /// The order the forecast smooths, per the active convention.
    pub forecast_input: f64,
    pub prior_forecast: f64,
    pub on_hand: f64,
    pub backlog: f64,
    /// Stock per the active convention (net or on-hand).
    pub stock: f64,
    /// Supply line per the active convention.
    pub supply_line: f64,
    /// on_hand - backlog + every unit ordered and not yet received.
    pub inventory_position: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decision {
    pub order: f64,
    pub forecast: f64,
}

impl PolicyHandle {
    pub fn new(kind: PolicyKind, noise: NoiseSpec) -> Result<Self> {
        let h = PolicyHandle { kind, noise };
        h.validate()?;
        Ok(h)
    }

    pub fn sterman(params: StermanParams) -> Self {
        PolicyHandle {
            kind: PolicyKind::Sterman(params),
            noise: NoiseSpec::none(),
        }
    }

    pub fn base_stock(target: f64) -> Self {
        PolicyHandle {
            kind: PolicyKind::BaseStock { target },
            noise: NoiseSpec::none(),
        }
    }

    pub fn fixed(order: f64) -> Self {
        PolicyHandle {
            kind: PolicyKind::Fixed { order },
            noise: NoiseSpec::none(),
        }
    }

    pub fn external() -> Self {
        PolicyHandle {
            kind: PolicyKind::ExternalAgent,
            noise: NoiseSpec::none(),
        }
    }

    pub fn with_noise(mut self, noise: NoiseSpec) -> Self {
        self.noise = noise;
        self
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            PolicyKind::Sterman(p) => p.validate()?,
            PolicyKind::BaseStock { target } => {
                if !(target.is_finite() && target >= 0.0) {
                    return Err(Error::param("target", format!("must be finite and >= 0, got {target}")));
                }
            }
            PolicyKind::Fixed { order } => {
                if !(order.is_finite() && order >= 0.0) {
                    return Err(Error::param("order", format!("must be finite and >= 0, got {order}")));
                }
            }
            PolicyKind::ExternalAgent => {}
        }
        NoiseSpec::new(self.noise.sigma, self.noise.stream).map(|_| ())
    }

    /// Decides for the built-in kinds. The heuristic takes the noise draw
    /// inside its floor; the other kinds add it to the intended order and
    /// floor afterwards. External agents are resolved by the game driver.
    pub fn decide(&self, view: &DecisionView, noise_draw: f64) -> Result<Decision> {
        match self.kind {
            PolicyKind::Sterman(p) => {
                let forecast = update_forecast(view.prior_forecast, view.forecast_input, p.theta)?;
                Ok(Decision {
                    order: sterman_order(&p, forecast, view.stock, view.supply_line, noise_draw),
                    forecast,
                })
            }
            PolicyKind::BaseStock { target } => Ok(Decision {
                order: perturb(base_stock_order(target, view.inventory_position), noise_draw),
                forecast: view.prior_forecast,
            }),
            PolicyKind::Fixed { order } => Ok(Decision {
                order: perturb(order, noise_draw),
                forecast: view.prior_forecast,
            }),
            PolicyKind::ExternalAgent => Err(Error::MissingAgent(view.entity)),
        }
    }
}

/// `max(0, intended + draw)`.
pub fn perturb(intended: f64, draw: f64) -> f64 {
    (intended + draw).max(0.0)
}

#[cfg(test)]
mod tests;
