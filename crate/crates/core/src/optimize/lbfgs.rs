//! Limited-memory BFGS with gradient projection onto a box.

use std::collections::VecDeque;

use crate::Result;

#[derive(Debug, Clone, Copy)]
pub struct LbfgsOptions {
    pub memory: usize,
    pub max_iter: usize,
    /// Stop when the projected gradient's max-norm falls below this.
    pub pg_tol: f64,
    /// Stop when an accepted step improves `f` by less than this, relative.
    pub f_rel_tol: f64,
    pub max_backtracks: usize,
    /// Max-norm of the first trial step after a memory reset.
    pub initial_step: f64,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        LbfgsOptions {
            memory: 6,
            max_iter: 100,
            pg_tol: 1e-8,
            f_rel_tol: 1e-12,
            max_backtracks: 30,
            initial_step: 0.25,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Terminus {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
}

pub(crate) fn project(x: &mut [f64], lo: &[f64], hi: &[f64]) {
    for i in 0..x.len() {
        x[i] = x[i].max(lo[i]).min(hi[i]);
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimizes `f` over `[lo, hi]` from `x0`. `grad(x, fx)` returns the
/// gradient at `x`. The returned value never exceeds `f` at the projected
/// start.
pub fn projected_lbfgs<F, G>(
    mut f: F,
    mut grad: G,
    x0: &[f64],
    lo: &[f64],
    hi: &[f64],
    opts: &LbfgsOptions,
) -> Result<Terminus>
where
    F: FnMut(&[f64]) -> Result<f64>,
    G: FnMut(&[f64], f64) -> Result<Vec<f64>>,
{
    let n = x0.len();
    let mut x = x0.to_vec();
    project(&mut x, lo, hi);
    let mut fx = f(&x)?;
    let mut g = grad(&x, fx)?;
    let mut memory: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut iterations = 0;

    while iterations < opts.max_iter {
        iterations += 1;
        // zero the components that push against an active bound
        let free: Vec<bool> = (0..n)
            .map(|i| !((x[i] <= lo[i] && g[i] > 0.0) || (x[i] >= hi[i] && g[i] < 0.0)))
            .collect();
        let pg: Vec<f64> = (0..n).map(|i| if free[i] { g[i] } else { 0.0 }).collect();
        if pg.iter().fold(0.0f64, |m, v| m.max(v.abs())) < opts.pg_tol {
            break;
        }

        let mut d = two_loop(&pg, &memory);
        for i in 0..n {
            if !free[i] {
                d[i] = 0.0;
            }
        }
        let fresh = memory.is_empty() || dot(&d, &pg) >= 0.0;
        if fresh {
            memory.clear();
            d = pg.iter().map(|v| -v).collect();
        }
        let dmax = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut t = if fresh { (opts.initial_step / dmax).min(1.0) } else { 1.0 };

        let mut accepted = None;
        for _ in 0..opts.max_backtracks {
            let mut xt: Vec<f64> = (0..n).map(|i| x[i] + t * d[i]).collect();
            project(&mut xt, lo, hi);
            let step: Vec<f64> = (0..n).map(|i| xt[i] - x[i]).collect();
            if step.iter().all(|s| *s == 0.0) {
                break;
            }
            let ft = f(&xt)?;
            if ft <= fx + 1e-4 * dot(&g, &step) && ft < fx {
                accepted = Some((xt, ft, step));
                break;
            }
            t *= 0.5;
        }
        let Some((xt, ft, s)) = accepted else {
            if fresh {
                break;
            }
            // stale curvature pairs; retry once along the projected gradient
            memory.clear();
            continue;
        };

        let improvement = fx - ft;
        let gt = grad(&xt, ft)?;
        let y: Vec<f64> = (0..n).map(|i| gt[i] - g[i]).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() && sy > 0.0 {
            if memory.len() == opts.memory {
                memory.pop_front();
            }
            memory.push_back((s, y, 1.0 / sy));
        }
        x = xt;
        fx = ft;
        g = gt;
        if improvement <= opts.f_rel_tol * fx.abs().max(1.0) {
            break;
        }
    }
    Ok(Terminus { x, f: fx, iterations })
}

fn two_loop(g: &[f64], memory: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(memory.len());
    for (s, y, rho) in memory.iter().rev() {
        let a = rho * dot(s, &q);
        for i in 0..q.len() {
            q[i] -= a * y[i];
        }
        alphas.push(a);
    }
    if let Some((s, y, _)) = memory.back() {
        let gamma = dot(s, y) / dot(y, y);
        q.iter_mut().for_each(|v| *v *= gamma);
    }
    for ((s, y, rho), a) in memory.iter().zip(alphas.into_iter().rev()) {
        let b = rho * dot(y, &q);
        for i in 0..q.len() {
            q[i] += s[i] * (a - b);
        }
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}
