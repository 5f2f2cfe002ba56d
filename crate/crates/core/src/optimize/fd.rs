use crate::{Error, Result};

/// Finite-difference gradient of `f` at `x`.
///
/// Coordinate `i` uses the step `h_rel * max(|x_i|, 1)`: central differences
/// where both neighbours lie inside `[lo, hi]`, one-sided at an active bound.
/// Without bounds every coordinate is central.
pub fn finite_diff_gradient<F>(
    f: F,
    x: &[f64],
    h_rel: f64,
    bounds: Option<(&[f64], &[f64])>,
) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    if !(h_rel.is_finite() && h_rel > 0.0) {
        return Err(Error::param("h_rel", format!("must be finite and > 0, got {h_rel}")));
    }
    let mut probe = x.to_vec();
    let eval = |probe: &[f64], coordinate: usize| -> Result<f64> {
        let value = f(probe)?;
        if value.is_finite() {
            Ok(value)
        } else {
            Err(Error::NonFiniteObjective { coordinate, value })
        }
    };
    let mut center = None;
    let mut grad = vec![0.0; x.len()];
    for i in 0..x.len() {
        let h = h_rel * x[i].abs().max(1.0);
        let (lo, hi) = bounds.map_or((f64::NEG_INFINITY, f64::INFINITY), |(l, u)| (l[i], u[i]));
        let up = x[i] + h <= hi;
        let down = x[i] - h >= lo;
        grad[i] = match (down, up) {
            (true, true) => {
                probe[i] = x[i] + h;
                let fp = eval(&probe, i)?;
                probe[i] = x[i] - h;
                let fm = eval(&probe, i)?;
                (fp - fm) / (2.0 * h)
            }
            (false, true) | (true, false) => {
                let f0 = match center {
                    Some(v) => v,
                    None => {
                        let v = eval(x, i)?;
                        center = Some(v);
                        v
                    }
                };
                let sign = if up { 1.0 } else { -1.0 };
                probe[i] = x[i] + sign * h;
                let f1 = eval(&probe, i)?;
                sign * (f1 - f0) / h
            }
            // the box is narrower than the step on this axis
            (false, false) => 0.0,
        };
        probe[i] = x[i];
    }
    Ok(grad)
}
