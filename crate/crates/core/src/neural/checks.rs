//! Numerical self-checks of the network: finite-difference gradients, the
//! dueling aggregation identity and the closed-form first Adam step.

use rand::Rng;

use super::{adam_step, AdamState, DuelingNet, Sample, DEFAULT_HIDDEN};
use crate::seed;
use crate::Result;

fn random_net(seed_value: u64, obs_dim: usize, n_actions: usize) -> Result<DuelingNet> {
    let mut rng = seed::stream(seed_value, "check-net", &[]);
    let mut net = DuelingNet::new(obs_dim, &DEFAULT_HIDDEN, n_actions, &mut rng)?;
    // non-zero biases so no path is trivially linear
    for t in net.tensors_mut() {
        if t.len() <= 64 {
            t.iter_mut().for_each(|b| *b = rng.gen_range(-0.1..0.1));
        }
    }
    Ok(net)
}

fn random_inputs<R: Rng>(rng: &mut R, n: usize, dim: usize) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect()
}

/// Largest `|analytic - central| / max(|analytic|, 1e-8)` over `n_weights`
/// randomly chosen weights of a random network on a random batch.
pub fn gradient_check(seed_value: u64, n_weights: usize) -> Result<f64> {
    let (obs_dim, n_actions) = (16, 17);
    let mut net = random_net(seed_value, obs_dim, n_actions)?;
    let mut rng = seed::stream(seed_value, "check-batch", &[]);
    let inputs = random_inputs(&mut rng, 8, obs_dim);
    let samples: Vec<(usize, f64)> = inputs
        .iter()
        .map(|x| -> Result<(usize, f64)> {
            let a = rng.gen_range(0..n_actions);
            // residuals inside and outside the Huber threshold
            let q = net.q_values(x)?[a];
            Ok((a, q + rng.gen_range(-2.0..2.0)))
        })
        .collect::<Result<_>>()?;
    let batch = |_: &DuelingNet| -> Vec<Sample<'_>> {
        inputs
            .iter()
            .zip(&samples)
            .map(|(x, &(action, target))| Sample { obs: x, action, target })
            .collect()
    };
    let (_, grads) = net.loss_and_grads(&batch(&net))?;
    let grad_tensors: Vec<Vec<f64>> = grads.tensors().iter().map(|t| t.to_vec()).collect();
    let sizes: Vec<usize> = grad_tensors.iter().map(Vec::len).collect();
    let total: usize = sizes.iter().sum();

    let h = 1e-6;
    let mut worst = 0.0f64;
    for _ in 0..n_weights {
        let mut flat = rng.gen_range(0..total);
        let mut k = 0;
        while flat >= sizes[k] {
            flat -= sizes[k];
            k += 1;
        }
        let original = net.tensors()[k][flat];
        net.tensors_mut()[k][flat] = original + h;
        let (up, _) = net.loss_and_grads(&batch(&net))?;
        net.tensors_mut()[k][flat] = original - h;
        let (down, _) = net.loss_and_grads(&batch(&net))?;
        net.tensors_mut()[k][flat] = original;
        let numeric = (up - down) / (2.0 * h);
        let analytic = grad_tensors[k][flat];
        worst = worst.max((analytic - numeric).abs() / analytic.abs().max(1e-8));
    }
    Ok(worst)
}

/// Largest `|mean(Q - V)|` over `n_inputs` random inputs to a random network.
pub fn dueling_identity_error(seed_value: u64, n_inputs: usize) -> Result<f64> {
    let net = random_net(seed_value, 16, 17)?;
    let mut rng = seed::stream(seed_value, "check-dueling", &[]);
    let mut worst = 0.0f64;
    for x in random_inputs(&mut rng, n_inputs, 16) {
        let out = net.forward(&x)?;
        let mean = out.q_values.iter().map(|q| q - out.state_value).sum::<f64>() / out.q_values.len() as f64;
        worst = worst.max(mean.abs());
    }
    Ok(worst)
}

/// Largest `|delta + lr * sign(g)|` over all weights after one Adam step
/// with a constant random gradient.
pub fn adam_first_step_error(seed_value: u64) -> Result<f64> {
    let mut net = random_net(seed_value, 16, 17)?;
    let before = net.clone();
    let mut rng = seed::stream(seed_value, "check-adam", &[]);
    let mut grads = net.zeros_like();
    for t in grads.tensors_mut() {
        t.iter_mut().for_each(|g| {
            let mag = rng.gen_range(1e-3..1.0);
            *g = if rng.gen_bool(0.5) { mag } else { -mag };
        });
    }
    let mut adam = AdamState::new(&net, 1e-3);
    adam_step(&mut net, &grads, &mut adam)?;
    let mut worst = 0.0f64;
    let (after, before, grads) = (net.tensors(), before.tensors(), grads.tensors());
    for k in 0..after.len() {
        for i in 0..after[k].len() {
            let delta = after[k][i] - before[k][i];
            worst = worst.max((delta + adam.learning_rate * grads[k][i].signum()).abs());
        }
    }
    Ok(worst)
}
