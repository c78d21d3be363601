//! Proxy network training: mini-batch gradient descent with adaptive moments.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{MlpNet, NetGradients, Rng};
use crate::proxy::ProxyDataset;

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub hidden: [usize; 4],
    pub holdout_fraction: f64,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::arg("epochs and batch_size must be >= 1"));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::arg("learning_rate must be > 0"));
        }
        if !(self.holdout_fraction > 0.0 && self.holdout_fraction <= 0.5) {
            return Err(Error::arg(format!(
                "holdout_fraction must be in (0, 0.5], got {}",
                self.holdout_fraction
            )));
        }
        if self.hidden.contains(&0) {
            return Err(Error::arg("hidden widths must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Mean per-sample training loss (squared error summed over heads) for
    /// every epoch.
    pub epoch_losses: Vec<f64>,
    /// Final training MSE per head, in normalized target units.
    pub final_train_mse: [f64; 2],
    /// Held-out MSE per head, normalized units. The held-out samples come
    /// from the same perturbation ball, so this measures local fit only.
    pub holdout_mse: [f64; 2],
    /// Held-out coefficient of determination per head.
    pub holdout_r2: [f64; 2],
    pub train_samples: usize,
    pub holdout_samples: usize,
}

struct Adam {
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    step: u64,
}

impl Adam {
    fn new(net: &MlpNet) -> Adam {
        let shapes: Vec<usize> = net
            .layers()
            .iter()
            .flat_map(|l| [l.weights().len(), l.bias().len()])
            .collect();
        Adam {
            m: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            v: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            step: 0,
        }
    }

    fn update(&mut self, net: &mut MlpNet, grads: &NetGradients, lr: f64) {
        self.step += 1;
        let t = self.step as f64;
        let bias1 = 1.0 - ADAM_BETA1.powf(t);
        let bias2 = 1.0 - ADAM_BETA2.powf(t);
        let mut slot = 0;
        for (layer, grad) in net.layers_mut().iter_mut().zip(grads.layers.iter()) {
            apply(
                layer.weights_mut(),
                &grad.weights,
                &mut self.m[slot],
                &mut self.v[slot],
                lr,
                bias1,
                bias2,
            );
            apply(
                layer.bias_mut(),
                &grad.bias,
                &mut self.m[slot + 1],
                &mut self.v[slot + 1],
                lr,
                bias1,
                bias2,
            );
            slot += 2;
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn apply(
    params: &mut [f64],
    grads: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    lr: f64,
    bias1: f64,
    bias2: f64,
) {
    for i in 0..params.len() {
        m[i] = ADAM_BETA1 * m[i] + (1.0 - ADAM_BETA1) * grads[i];
        v[i] = ADAM_BETA2 * v[i] + (1.0 - ADAM_BETA2) * grads[i] * grads[i];
        let m_hat = m[i] / bias1;
        let v_hat = v[i] / bias2;
        params[i] -= lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
    }
}

fn mse_per_head(net: &MlpNet, rows: &[(Vec<f64>, [f64; 2])], indices: &[usize]) -> [f64; 2] {
    let mut acc = [0.0f64; 2];
    for &i in indices {
        let (z, target) = &rows[i];
        let out = net.forward_unchecked(z);
        acc[0] += (out[0] - target[0]) * (out[0] - target[0]);
        acc[1] += (out[1] - target[1]) * (out[1] - target[1]);
    }
    let n = indices.len().max(1) as f64;
    [acc[0] / n, acc[1] / n]
}

fn r2_per_head(net: &MlpNet, rows: &[(Vec<f64>, [f64; 2])], indices: &[usize]) -> [f64; 2] {
    let n = indices.len().max(1) as f64;
    let mut mean = [0.0f64; 2];
    for &i in indices {
        mean[0] += rows[i].1[0];
        mean[1] += rows[i].1[1];
    }
    mean[0] /= n;
    mean[1] /= n;
    let mut ss_res = [0.0f64; 2];
    let mut ss_tot = [0.0f64; 2];
    for &i in indices {
        let (z, target) = &rows[i];
        let out = net.forward_unchecked(z);
        for h in 0..2 {
            ss_res[h] += (out[h] - target[h]) * (out[h] - target[h]);
            ss_tot[h] += (target[h] - mean[h]) * (target[h] - mean[h]);
        }
    }
    let mut r2 = [0.0f64; 2];
    for h in 0..2 {
        r2[h] = if ss_tot[h] == 0.0 {
            // constant held-out target: perfect fit or no explainable variance
            if ss_res[h] == 0.0 {
                1.0
            } else {
                0.0
            }
        } else {
            1.0 - ss_res[h] / ss_tot[h]
        };
    }
    r2
}

/// Trains the proxy network on min-max-normalized targets.
///
/// The architecture is `n -> hidden[0..4] -> 2` with sigmoid activations on
/// the hidden layers and on both heads. Optimization is mini-batch Adam on
/// the squared error summed over heads. Fully deterministic for a given
/// `cfg.seed`: initialization, the train/held-out split, and per-epoch
/// shuffles all derive from it.
pub fn train_proxy(data: &ProxyDataset, cfg: &TrainConfig) -> Result<(MlpNet, TrainReport)> {
    cfg.validate()?;
    data.validate()?;

    let rows: Vec<(Vec<f64>, [f64; 2])> = data
        .samples
        .iter()
        .map(|s| {
            (
                s.z_tilde.as_slice().to_vec(),
                [
                    data.normalization.normalize_f(s.f_value),
                    data.normalization.normalize_s(s.s_value),
                ],
            )
        })
        .collect();

    let mut split_rng = Rng::new(cfg.seed).derive(1);
    let mut order: Vec<usize> = (0..rows.len()).collect();
    split_rng.shuffle(&mut order);
    let holdout_len = ((rows.len() as f64 * cfg.holdout_fraction).floor() as usize).max(1);
    if holdout_len >= rows.len() {
        return Err(Error::arg("dataset too small for the held-out split"));
    }
    let (holdout_idx, train_idx) = order.split_at(holdout_len);
    let mut train_idx = train_idx.to_vec();

    let mut init_rng = Rng::new(cfg.seed).derive(2);
    let mut net = MlpNet::init(data.source_z.len(), &cfg.hidden, &mut init_rng)?;
    let mut adam = Adam::new(&net);
    let mut grads = NetGradients::zeros_like(&net);
    let mut shuffle_rng = Rng::new(cfg.seed).derive(3);

    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        shuffle_rng.shuffle(&mut train_idx);
        let mut epoch_loss = 0.0;
        for (batch, chunk) in train_idx.chunks(cfg.batch_size).enumerate() {
            grads.reset();
            let scale = 1.0 / chunk.len() as f64;
            let mut batch_loss = 0.0;
            for &i in chunk {
                let (z, target) = &rows[i];
                let out = net.forward_unchecked(z);
                let df = out[0] - target[0];
                let ds = out[1] - target[1];
                batch_loss += df * df + ds * ds;
                net.accumulate_param_grads(z, [2.0 * df * scale, 2.0 * ds * scale], &mut grads);
            }
            if !batch_loss.is_finite() {
                return Err(Error::TrainingDiverged { epoch, batch });
            }
            epoch_loss += batch_loss;
            adam.update(&mut net, &grads, cfg.learning_rate);
        }
        epoch_losses.push(epoch_loss / train_idx.len() as f64);
    }

    let report = TrainReport {
        epoch_losses,
        final_train_mse: mse_per_head(&net, &rows, &train_idx),
        holdout_mse: mse_per_head(&net, &rows, holdout_idx),
        holdout_r2: r2_per_head(&net, &rows, holdout_idx),
        train_samples: train_idx.len(),
        holdout_samples: holdout_idx.len(),
    };
    Ok((net, report))
}
