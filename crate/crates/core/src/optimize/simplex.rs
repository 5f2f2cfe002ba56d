//! Nelder–Mead simplex descent clipped to a box.

use super::lbfgs::project;
use crate::Result;

#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions {
    /// Edge length of the initial simplex, per coordinate.
    pub initial_step: f64,
    pub max_evals: usize,
    /// Values count as flat when their spread falls below this, relative.
    pub f_tol: f64,
    /// Stop when every vertex lies within this distance of the best.
    pub x_tol: f64,
    /// Stop when values are flat and vertices lie within this distance.
    pub flat_x_tol: f64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions {
            initial_step: 0.05,
            max_evals: 600,
            f_tol: 1e-10,
            x_tol: 1e-9,
            flat_x_tol: 1e-4,
        }
    }
}

/// Minimizes `f` over `[lo, hi]` from `x0` and returns `(x, f(x))`. Trial
/// points are projected onto the box; the result never exceeds `f(x0)`.
pub fn nelder_mead<F>(mut f: F, x0: &[f64], lo: &[f64], hi: &[f64], opts: &SimplexOptions) -> Result<(Vec<f64>, f64)>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    let n = x0.len();
    let mut start = x0.to_vec();
    project(&mut start, lo, hi);
    let mut evals = 0;
    let mut eval = |x: &[f64], evals: &mut usize| -> Result<f64> {
        *evals += 1;
        f(x)
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let f0 = eval(&start, &mut evals)?;
    simplex.push((start.clone(), f0));
    for k in 0..n {
        let mut x = start.clone();
        let step = opts.initial_step * (hi[k] - lo[k]).min(1.0).max(1e-12);
        x[k] = if x[k] + step <= hi[k] { x[k] + step } else { x[k] - step };
        project(&mut x, lo, hi);
        let fx = eval(&x, &mut evals)?;
        simplex.push((x, fx));
    }

    while evals < opts.max_evals {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = &simplex[0];
        let spread = simplex[n].1 - best.1;
        let diameter = simplex[1..]
            .iter()
            .map(|(x, _)| x.iter().zip(&best.0).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())))
            .fold(0.0f64, f64::max);
        // a flat but wide simplex may be sitting on a plateau, so keep going
        let flat = spread <= opts.f_tol * best.1.abs().max(1.0);
        if diameter <= opts.x_tol || (flat && diameter <= opts.flat_x_tol) {
            break;
        }

        let mut centroid = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            for i in 0..n {
                centroid[i] += x[i] / n as f64;
            }
        }
        let worst = simplex[n].clone();
        let along = |t: f64| {
            let mut x: Vec<f64> = (0..n).map(|i| centroid[i] + t * (worst.0[i] - centroid[i])).collect();
            project(&mut x, lo, hi);
            x
        };

        let xr = along(-1.0);
        let fr = eval(&xr, &mut evals)?;
        if fr < simplex[0].1 {
            let xe = along(-2.0);
            let fe = eval(&xe, &mut evals)?;
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            let xc = if fr < worst.1 { along(-0.5) } else { along(0.5) };
            let fc = eval(&xc, &mut evals)?;
            if fc < worst.1.min(fr) {
                simplex[n] = (xc, fc);
            } else {
                let b = simplex[0].0.clone();
                for vertex in simplex.iter_mut().skip(1) {
                    let mut x: Vec<f64> = (0..n).map(|i| b[i] + 0.5 * (vertex.0[i] - b[i])).collect();
                    project(&mut x, lo, hi);
                    let fx = eval(&x, &mut evals)?;
                    *vertex = (x, fx);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, fx) = simplex.swap_remove(0);
    Ok((x, fx))
}
