//! Single-seat parameter search: tune one seat's heuristic parameters to
//! minimize the team cost while the other three seats stay fixed.
//!
//! The search runs projected L-BFGS on a finite-difference gradient from a
//! set of quasi-random starts, then polishes each terminus with a clipped
//! simplex descent. The objective is piecewise smooth (max and min clips), so
//! the polish matters at kinks where the quasi-Newton step stalls.

mod fd;
mod halton;
mod lbfgs;
mod simplex;

pub use fd::finite_diff_gradient;
pub use halton::{halton_point, radical_inverse};
pub use lbfgs::{projected_lbfgs, LbfgsOptions, Terminus};
pub use simplex::{nelder_mead, SimplexOptions};

use std::cell::Cell;
use std::io::{Read, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::engine::{GameConfig, ENTITY_COUNT};
use crate::par::{map_indexed, Execution};
use crate::policies::StermanParams;
use crate::{Error, Result};

pub const S_PRIME_SEARCH_CAP: f64 = 150.0;
pub const GRID_POINT_CAP: u128 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptProblem {
    pub position: usize,
    /// Heuristic parameters of every seat; the entry at `position` is ignored.
    pub seats: [StermanParams; ENTITY_COUNT],
    pub config: GameConfig,
    pub lower: [f64; 4],
    pub upper: [f64; 4],
}

impl OptProblem {
    /// Three teammates with identical parameters and the default box.
    pub fn new(position: usize, teammate: StermanParams, config: GameConfig) -> Result<Self> {
        Self::with_seats(position, [teammate; ENTITY_COUNT], config)
    }

    pub fn with_seats(position: usize, seats: [StermanParams; ENTITY_COUNT], config: GameConfig) -> Result<Self> {
        let p = OptProblem {
            position,
            seats,
            config,
            lower: [0.0; 4],
            upper: [1.0, 1.0, 1.0, S_PRIME_SEARCH_CAP],
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.position >= ENTITY_COUNT {
            return Err(Error::EntityIndex(self.position));
        }
        for s in &self.seats {
            s.validate()?;
        }
        for i in 0..4 {
            if !(self.lower[i] <= self.upper[i]) {
                return Err(Error::param("bounds", format!("lower > upper on axis {i}")));
            }
        }
        StermanParams::from_array(self.lower).validate()?;
        StermanParams::from_array(self.upper).validate()?;
        if self.upper[3] < 100.0 {
            return Err(Error::param("s_prime_search_cap", "must be >= 100"));
        }
        Ok(())
    }

    pub fn seats_with(&self, candidate: StermanParams) -> [StermanParams; ENTITY_COUNT] {
        let mut seats = self.seats;
        seats[self.position] = candidate;
        seats
    }

    /// Team cost with `candidate` in the tuned seat; deterministic, no noise.
    pub fn objective(&self, candidate: &StermanParams) -> Result<f64> {
        candidate.validate()?;
        crate::engine::sterman_team_cost(self.seats_with(*candidate), &self.config)
    }

    fn objective_at(&self, x: &[f64]) -> Result<f64> {
        self.objective(&StermanParams::from_array([x[0], x[1], x[2], x[3]]))
    }

    /// Team cost with every seat as given, including the tuned one.
    pub fn baseline_cost(&self) -> Result<f64> {
        crate::engine::sterman_team_cost(self.seats, &self.config)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct MinimizeOptions {
    pub h_rel: f64,
    pub lbfgs: LbfgsOptions,
    pub simplex: SimplexOptions,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        MinimizeOptions {
            h_rel: 1e-3,
            lbfgs: LbfgsOptions::default(),
            simplex: SimplexOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StartLog {
    pub start: Vec<f64>,
    pub start_cost: Option<f64>,
    pub quasi_newton_cost: Option<f64>,
    pub final_x: Option<Vec<f64>>,
    pub final_cost: Option<f64>,
    pub evaluations: usize,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoxResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub evaluations: usize,
    pub starts: Vec<StartLog>,
}

/// Multi-start box minimization of `f` over `[lo, hi]` from explicit start
/// points. Returns the best terminus; ties go to the earliest start.
pub fn minimize_in_box<F>(
    f: F,
    lo: &[f64],
    hi: &[f64],
    starts: &[Vec<f64>],
    opts: &MinimizeOptions,
    exec: Execution,
) -> Result<BoxResult>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    if starts.is_empty() {
        return Err(Error::param("n_starts", "must be >= 1"));
    }
    let logs = map_indexed(starts.len(), exec, |k| run_start(&f, lo, hi, &starts[k], opts));
    let evaluations = logs.iter().map(|l| l.evaluations).sum();
    let best = logs
        .iter()
        .filter_map(|l| Some((l.final_x.as_ref()?, l.final_cost?)))
        .fold(None::<(&Vec<f64>, f64)>, |acc, (x, c)| match acc {
            Some((_, bc)) if bc <= c => acc,
            _ => Some((x, c)),
        });
    match best {
        Some((x, fx)) => Ok(BoxResult {
            x: x.clone(),
            f: fx,
            evaluations,
            starts: logs,
        }),
        None => Err(Error::AllStartsFailed {
            starts: logs.len(),
            diagnostics: logs
                .iter()
                .enumerate()
                .map(|(k, l)| format!("start {k}: {}", l.error.as_deref().unwrap_or("no result")))
                .collect::<Vec<_>>()
                .join("; "),
        }),
    }
}

fn run_start<F>(f: &F, lo: &[f64], hi: &[f64], start: &[f64], opts: &MinimizeOptions) -> StartLog
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let n = lo.len();
    let width: Vec<f64> = (0..n).map(|i| hi[i] - lo[i]).collect();
    // search in unit-cube coordinates so S' and the unit-interval axes share a scale
    let to_x = |u: &[f64]| -> Vec<f64> { (0..n).map(|i| (lo[i] + u[i] * width[i]).clamp(lo[i], hi[i])).collect() };
    let u0: Vec<f64> = (0..n)
        .map(|i| if width[i] > 0.0 { ((start[i] - lo[i]) / width[i]).clamp(0.0, 1.0) } else { 0.0 })
        .collect();
    let evals = Cell::new(0usize);
    let fx = |x: &[f64]| {
        evals.set(evals.get() + 1);
        f(x)
    };
    let fu = |u: &[f64]| fx(&to_x(u));
    let grad_u = |u: &[f64], _: f64| -> Result<Vec<f64>> {
        let g = finite_diff_gradient(fx, &to_x(u), opts.h_rel, Some((lo, hi)))?;
        Ok((0..n).map(|i| g[i] * width[i]).collect())
    };
    let unit_lo = vec![0.0; n];
    let unit_hi = vec![1.0; n];

    let mut log = StartLog {
        start: to_x(&u0),
        start_cost: None,
        quasi_newton_cost: None,
        final_x: None,
        final_cost: None,
        evaluations: 0,
        error: None,
    };
    let outcome = (|| -> Result<()> {
        log.start_cost = Some(fu(&u0)?);
        let t = projected_lbfgs(fu, grad_u, &u0, &unit_lo, &unit_hi, &opts.lbfgs)?;
        log.quasi_newton_cost = Some(t.f);
        let (u, cost) = nelder_mead(fu, &t.x, &unit_lo, &unit_hi, &opts.simplex)?;
        let (u, cost) = if cost <= t.f { (u, cost) } else { (t.x, t.f) };
        log.final_x = Some(to_x(&u));
        log.final_cost = Some(cost);
        Ok(())
    })();
    if let Err(e) = outcome {
        log.error = Some(e.to_string());
        log.final_x = None;
        log.final_cost = None;
    }
    log.evaluations = evals.get();
    log
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptResult {
    pub position: usize,
    pub best_params: StermanParams,
    pub best_cost: f64,
    pub baseline_cost: f64,
    pub start_count: usize,
    pub evaluations: usize,
    pub seed: u64,
    pub starts: Vec<StartLog>,
}

impl OptResult {
    pub fn reduction_pct(&self) -> f64 {
        100.0 * (self.best_cost - self.baseline_cost) / self.baseline_cost
    }

    pub fn row(&self) -> OptRow {
        OptRow {
            position: self.position,
            theta: self.best_params.theta,
            alpha: self.best_params.alpha,
            beta: self.best_params.beta,
            s_prime: self.best_params.s_prime,
            cost: self.best_cost,
            baseline_cost: self.baseline_cost,
            reduction_pct: self.reduction_pct(),
            starts: self.start_count,
            evals: self.evaluations,
            seed: self.seed,
        }
    }
}

/// Start points for `n_starts` starts: the tuned seat's current parameters
/// first, then Halton points rotated by a seed-derived shift. Growing
/// `n_starts` only appends points.
pub fn start_points(problem: &OptProblem, n_starts: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = crate::seed::stream(seed, "halton-shift", &[problem.position as u64]);
    let shift: Vec<f64> = (0..4).map(|_| rng.gen::<f64>()).collect();
    let mut starts = Vec::with_capacity(n_starts);
    if n_starts > 0 {
        let mut first = problem.seats[problem.position].to_array();
        lbfgs::project(&mut first, &problem.lower, &problem.upper);
        starts.push(first.to_vec());
    }
    for k in 1..n_starts {
        let u = halton_point(k as u64, &shift);
        starts.push((0..4).map(|i| problem.lower[i] + u[i] * (problem.upper[i] - problem.lower[i])).collect());
    }
    starts
}

pub fn minimize_box(problem: &OptProblem, n_starts: usize, seed: u64, exec: Execution) -> Result<OptResult> {
    minimize_box_with(problem, n_starts, seed, &MinimizeOptions::default(), exec)
}

pub fn minimize_box_with(
    problem: &OptProblem,
    n_starts: usize,
    seed: u64,
    opts: &MinimizeOptions,
    exec: Execution,
) -> Result<OptResult> {
    problem.validate()?;
    if n_starts == 0 {
        return Err(Error::param("n_starts", "must be >= 1"));
    }
    let starts = start_points(problem, n_starts, seed);
    let r = minimize_in_box(|x| problem.objective_at(x), &problem.lower, &problem.upper, &starts, opts, exec)?;
    Ok(OptResult {
        position: problem.position,
        best_params: StermanParams::from_array([r.x[0], r.x[1], r.x[2], r.x[3]]),
        best_cost: r.f,
        baseline_cost: problem.baseline_cost()?,
        start_count: n_starts,
        evaluations: r.evaluations,
        seed,
        starts: r.starts,
    })
}

/// Exhaustive search over a `resolution`-per-axis grid of `[lo, hi]`.
/// One point per axis means the axis midpoint. Returns the lowest-index argmin.
pub fn grid_search<F>(f: F, lo: &[f64], hi: &[f64], resolution: usize, exec: Execution) -> Result<(Vec<f64>, f64)>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    if resolution == 0 {
        return Err(Error::param("resolution", "must be >= 1"));
    }
    let n = lo.len();
    let points = (resolution as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if points > GRID_POINT_CAP {
        return Err(Error::GridTooLarge {
            points,
            cap: GRID_POINT_CAP,
        });
    }
    let axis = |i: usize, k: usize| {
        if resolution == 1 {
            0.5 * (lo[i] + hi[i])
        } else if k + 1 == resolution {
            hi[i]
        } else {
            lo[i] + (hi[i] - lo[i]) * k as f64 / (resolution - 1) as f64
        }
    };
    let point = |mut idx: usize| -> Vec<f64> {
        (0..n)
            .map(|i| {
                let k = idx % resolution;
                idx /= resolution;
                axis(i, k)
            })
            .collect()
    };
    let values = map_indexed(points as usize, exec, |idx| f(&point(idx)));
    let mut best: Option<(usize, f64)> = None;
    for (idx, v) in values.into_iter().enumerate() {
        let v = v?;
        if best.map_or(true, |(_, b)| v < b) {
            best = Some((idx, v));
        }
    }
    let (idx, v) = best.expect("grid has at least one point");
    Ok((point(idx), v))
}

/// Brute-force reference for [`minimize_box`].
pub fn grid_oracle(problem: &OptProblem, resolution: usize, exec: Execution) -> Result<(StermanParams, f64)> {
    problem.validate()?;
    let (x, v) = grid_search(|x| problem.objective_at(x), &problem.lower, &problem.upper, resolution, exec)?;
    Ok((StermanParams::from_array([x[0], x[1], x[2], x[3]]), v))
}

/// One line of the optimizer results file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptRow {
    pub position: usize,
    pub theta: f64,
    pub alpha: f64,
    pub beta: f64,
    pub s_prime: f64,
    pub cost: f64,
    pub baseline_cost: f64,
    pub reduction_pct: f64,
    pub starts: usize,
    pub evals: usize,
    pub seed: u64,
}

impl OptRow {
    pub fn params(&self) -> StermanParams {
        StermanParams::from_array([self.theta, self.alpha, self.beta, self.s_prime])
    }
}

pub fn write_opt_rows<W: Write>(rows: &[OptRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_opt_rows<R: Read>(input: R) -> Result<Vec<OptRow>> {
    let mut r = csv::Reader::from_reader(input);
    let rows = r.deserialize().collect::<std::result::Result<Vec<OptRow>, _>>()?;
    for row in &rows {
        row.params().validate()?;
        if row.position >= ENTITY_COUNT {
            return Err(Error::EntityIndex(row.position));
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests;
