//! Dense dueling Q-network with hand-written backpropagation and Adam.
//!
//! A trunk of fully connected ReLU layers feeds two linear heads: a scalar
//! state value V and one advantage per action. Q = V + A - mean(A).

pub mod checks;
mod io;

pub use io::{load_weights, save_weights, SpaceDescriptor, WeightsBundle, WEIGHTS_VERSION};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const DEFAULT_HIDDEN: [usize; 3] = [64, 64, 64];
pub const HUBER_DELTA: f64 = 1.0;

/// Fully connected layer; `weights` is row-major, one row per output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    /// He-style uniform fan-in initialization, zero bias.
    pub fn he_uniform<R: Rng>(inputs: usize, outputs: usize, rng: &mut R) -> Self {
        let limit = (6.0 / inputs as f64).sqrt();
        Dense {
            inputs,
            outputs,
            weights: (0..inputs * outputs).map(|_| rng.gen_range(-limit..limit)).collect(),
            bias: vec![0.0; outputs],
        }
    }

    pub fn zeros_like(&self) -> Self {
        Dense {
            inputs: self.inputs,
            outputs: self.outputs,
            weights: vec![0.0; self.weights.len()],
            bias: vec![0.0; self.bias.len()],
        }
    }

    fn forward_into(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for o in 0..self.outputs {
            let row = &self.weights[o * self.inputs..(o + 1) * self.inputs];
            out.push(self.bias[o] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>());
        }
    }

    /// Accumulates parameter gradients into `grad` and writes `dx` if given.
    fn backward(&self, x: &[f64], dy: &[f64], grad: &mut Dense, dx: Option<&mut [f64]>) {
        for o in 0..self.outputs {
            let g = dy[o];
            if g == 0.0 {
                continue;
            }
            grad.bias[o] += g;
            let row = &mut grad.weights[o * self.inputs..(o + 1) * self.inputs];
            for (w, v) in row.iter_mut().zip(x) {
                *w += g * v;
            }
        }
        if let Some(dx) = dx {
            dx.iter_mut().for_each(|v| *v = 0.0);
            for o in 0..self.outputs {
                let g = dy[o];
                if g == 0.0 {
                    continue;
                }
                let row = &self.weights[o * self.inputs..(o + 1) * self.inputs];
                for (d, w) in dx.iter_mut().zip(row) {
                    *d += g * w;
                }
            }
        }
    }

    fn check(&self) -> Result<()> {
        if self.weights.len() != self.inputs * self.outputs || self.bias.len() != self.outputs {
            return Err(Error::Shape(format!(
                "dense {}x{} holds {} weights and {} biases",
                self.outputs,
                self.inputs,
                self.weights.len(),
                self.bias.len()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DuelingNet {
    pub trunk: Vec<Dense>,
    pub value_head: Dense,
    pub advantage_head: Dense,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardOutput {
    pub state_value: f64,
    pub advantages: Vec<f64>,
    pub q_values: Vec<f64>,
}

/// One regression sample: move Q(obs)[action] toward `target`.
#[derive(Debug, Clone, Copy)]
pub struct Sample<'a> {
    pub obs: &'a [f64],
    pub action: usize,
    pub target: f64,
}

/// Gradients share the network's layout.
pub type Grads = DuelingNet;

impl DuelingNet {
    pub fn new<R: Rng>(obs_dim: usize, hidden: &[usize], n_actions: usize, rng: &mut R) -> Result<Self> {
        if obs_dim == 0 || n_actions == 0 || hidden.is_empty() || hidden.contains(&0) {
            return Err(Error::Shape(format!(
                "obs_dim {obs_dim}, hidden {hidden:?}, actions {n_actions}: all must be non-empty"
            )));
        }
        let mut trunk = Vec::with_capacity(hidden.len());
        let mut width = obs_dim;
        for &h in hidden {
            trunk.push(Dense::he_uniform(width, h, rng));
            width = h;
        }
        Ok(DuelingNet {
            trunk,
            value_head: Dense::he_uniform(width, 1, rng),
            advantage_head: Dense::he_uniform(width, n_actions, rng),
        })
    }

    pub fn obs_dim(&self) -> usize {
        self.trunk[0].inputs
    }

    pub fn n_actions(&self) -> usize {
        self.advantage_head.outputs
    }

    pub fn hidden(&self) -> Vec<usize> {
        self.trunk.iter().map(|l| l.outputs).collect()
    }

    pub fn zeros_like(&self) -> Grads {
        DuelingNet {
            trunk: self.trunk.iter().map(Dense::zeros_like).collect(),
            value_head: self.value_head.zeros_like(),
            advantage_head: self.advantage_head.zeros_like(),
        }
    }

    pub fn layers(&self) -> impl Iterator<Item = &Dense> {
        self.trunk.iter().chain([&self.value_head, &self.advantage_head])
    }

    pub fn layers_mut(&mut self) -> impl Iterator<Item = &mut Dense> {
        self.trunk
            .iter_mut()
            .chain([&mut self.value_head, &mut self.advantage_head])
    }

    /// Every parameter tensor in a fixed order: per layer, weights then bias.
    pub fn tensors(&self) -> Vec<&[f64]> {
        self.layers().flat_map(|l| [&l.weights[..], &l.bias[..]]).collect()
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers_mut()
            .flat_map(|l| [&mut l.weights[..], &mut l.bias[..]])
            .collect()
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    /// Shapes chain and every weight is finite.
    pub fn validate(&self) -> Result<()> {
        if self.trunk.is_empty() {
            return Err(Error::Shape("empty trunk".into()));
        }
        let mut width = self.trunk[0].inputs;
        for (i, l) in self.trunk.iter().enumerate() {
            l.check()?;
            if l.inputs != width {
                return Err(Error::Shape(format!("trunk layer {i} expects {} inputs, gets {width}", l.inputs)));
            }
            width = l.outputs;
        }
        for (name, head) in [("value", &self.value_head), ("advantage", &self.advantage_head)] {
            head.check()?;
            if head.inputs != width {
                return Err(Error::Shape(format!("{name} head expects {} inputs, gets {width}", head.inputs)));
            }
        }
        if self.value_head.outputs != 1 {
            return Err(Error::Shape(format!("value head has {} outputs", self.value_head.outputs)));
        }
        if self.tensors().iter().any(|t| t.iter().any(|v| !v.is_finite())) {
            return Err(Error::NonFinite("network weight".into()));
        }
        Ok(())
    }

    fn check_obs(&self, obs: &[f64]) -> Result<()> {
        if obs.len() != self.obs_dim() {
            return Err(Error::Shape(format!(
                "observation has {} entries, network expects {}",
                obs.len(),
                self.obs_dim()
            )));
        }
        Ok(())
    }

    /// Trunk activations, input first.
    fn activations(&self, obs: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = Vec::with_capacity(self.trunk.len() + 1);
        acts.push(obs.to_vec());
        for layer in &self.trunk {
            let mut out = Vec::with_capacity(layer.outputs);
            layer.forward_into(acts.last().expect("input present"), &mut out);
            out.iter_mut().for_each(|v| *v = v.max(0.0));
            acts.push(out);
        }
        acts
    }

    /// Output of the last trunk layer.
    pub fn trunk_output(&self, obs: &[f64]) -> Result<Vec<f64>> {
        self.check_obs(obs)?;
        Ok(self.activations(obs).pop().expect("trunk output"))
    }

    pub fn forward(&self, obs: &[f64]) -> Result<ForwardOutput> {
        self.check_obs(obs)?;
        let acts = self.activations(obs);
        Ok(self.heads(acts.last().expect("trunk output")))
    }

    pub fn q_values(&self, obs: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward(obs)?.q_values)
    }

    fn heads(&self, h: &[f64]) -> ForwardOutput {
        let mut v = Vec::with_capacity(1);
        self.value_head.forward_into(h, &mut v);
        let mut advantages = Vec::with_capacity(self.n_actions());
        self.advantage_head.forward_into(h, &mut advantages);
        let mean = advantages.iter().sum::<f64>() / advantages.len() as f64;
        let q_values = advantages.iter().map(|a| v[0] + a - mean).collect();
        ForwardOutput {
            state_value: v[0],
            advantages,
            q_values,
        }
    }

    /// Mean Huber loss of Q(obs)[action] against the targets, with the full
    /// gradient of that mean.
    pub fn loss_and_grads(&self, batch: &[Sample<'_>]) -> Result<(f64, Grads)> {
        if batch.is_empty() {
            return Err(Error::param("batch", "must not be empty"));
        }
        let n_actions = self.n_actions();
        let scale = 1.0 / batch.len() as f64;
        let mut grads = self.zeros_like();
        let mut loss = 0.0;
        let mut d_adv = vec![0.0; n_actions];
        for s in batch {
            self.check_obs(s.obs)?;
            if !s.target.is_finite() {
                return Err(Error::NonFinite(format!("td target {}", s.target)));
            }
            if s.action >= n_actions {
                return Err(Error::Shape(format!("action {} out of {n_actions}", s.action)));
            }
            let acts = self.activations(s.obs);
            let h = acts.last().expect("trunk output");
            let out = self.heads(h);
            let r = out.q_values[s.action] - s.target;
            let (l, dl) = huber(r, HUBER_DELTA);
            loss += l * scale;
            let g = dl * scale;
            if g == 0.0 {
                continue;
            }

            // dQ_a/dV = 1, dQ_a/dA_j = [j == a] - 1/n
            let mean_share = g / n_actions as f64;
            d_adv.iter_mut().for_each(|v| *v = -mean_share);
            d_adv[s.action] += g;
            let mut dh = vec![0.0; h.len()];
            let mut tmp = vec![0.0; h.len()];
            self.value_head.backward(h, &[g], &mut grads.value_head, Some(&mut dh));
            self.advantage_head.backward(h, &d_adv, &mut grads.advantage_head, Some(&mut tmp));
            dh.iter_mut().zip(&tmp).for_each(|(a, b)| *a += b);

            for i in (0..self.trunk.len()).rev() {
                // ReLU gate: activation > 0 iff pre-activation > 0
                for (d, a) in dh.iter_mut().zip(&acts[i + 1]) {
                    if *a <= 0.0 {
                        *d = 0.0;
                    }
                }
                let x = &acts[i];
                if i == 0 {
                    self.trunk[0].backward(x, &dh, &mut grads.trunk[0], None);
                } else {
                    let mut dx = vec![0.0; x.len()];
                    self.trunk[i].backward(x, &dh, &mut grads.trunk[i], Some(&mut dx));
                    dh = dx;
                }
            }
        }
        Ok((loss, grads))
    }

    /// Copies every weight from `other`, which must have the same shapes.
    pub fn copy_from(&mut self, other: &DuelingNet) {
        self.clone_from(other);
    }
}

/// Huber loss and its derivative at residual `r`.
pub fn huber(r: f64, delta: f64) -> (f64, f64) {
    if r.abs() <= delta {
        (0.5 * r * r, r)
    } else {
        (delta * (r.abs() - 0.5 * delta), delta * r.signum())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub step: u64,
    pub first_moment: Vec<Vec<f64>>,
    pub second_moment: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(net: &DuelingNet, learning_rate: f64) -> Self {
        let zeros: Vec<Vec<f64>> = net.tensors().iter().map(|t| vec![0.0; t.len()]).collect();
        AdamState {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            step: 0,
            first_moment: zeros.clone(),
            second_moment: zeros,
        }
    }

    pub fn check_against(&self, net: &DuelingNet) -> Result<()> {
        let shapes: Vec<usize> = net.tensors().iter().map(|t| t.len()).collect();
        for (name, m) in [("first", &self.first_moment), ("second", &self.second_moment)] {
            let got: Vec<usize> = m.iter().map(Vec::len).collect();
            if got != shapes {
                return Err(Error::Shape(format!("{name}-moment shapes {got:?} do not mirror weights {shapes:?}")));
            }
        }
        Ok(())
    }
}

/// One bias-corrected Adam update of `net` with `grads`.
pub fn adam_step(net: &mut DuelingNet, grads: &Grads, adam: &mut AdamState) -> Result<()> {
    adam.check_against(net)?;
    let grad_tensors = grads.tensors();
    if grad_tensors.iter().map(|t| t.len()).ne(adam.first_moment.iter().map(Vec::len)) {
        return Err(Error::Shape("gradient shapes do not mirror weights".into()));
    }
    adam.step += 1;
    let t = adam.step as i32;
    let c1 = 1.0 - adam.beta1.powi(t);
    let c2 = 1.0 - adam.beta2.powi(t);
    for (k, w) in net.tensors_mut().into_iter().enumerate() {
        let g = grad_tensors[k];
        let m = &mut adam.first_moment[k];
        let v = &mut adam.second_moment[k];
        for i in 0..w.len() {
            m[i] = adam.beta1 * m[i] + (1.0 - adam.beta1) * g[i];
            v[i] = adam.beta2 * v[i] + (1.0 - adam.beta2) * g[i] * g[i];
            let m_hat = m[i] / c1;
            let v_hat = v[i] / c2;
            w[i] -= adam.learning_rate * m_hat / (v_hat.sqrt() + adam.epsilon);
        }
    }
    Ok(())
}
