//! Minimal feed-forward network with analytic input gradients.
//!
//! The network is a chain of dense layers with a shared hidden activation and
//! one activation tag per output head. The output width is fixed to two: the
//! first head tracks the classifier score, the second the perceptual distance.
//! Input gradients are computed by reverse-mode accumulation through the
//! stored pre-activations; the input Hessian is a central finite difference of
//! that analytic gradient, which costs `2n` gradient evaluations and is one
//! order more accurate than double finite differences of the scalar.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::linalg::{SymMatrix, Vector};
use crate::numerics::rng::Rng;

pub const OUTPUT_WIDTH: usize = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Identity,
    Sigmoid,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Identity => x,
            Activation::Sigmoid => sigmoid(x),
        }
    }

    /// Derivative with respect to the pre-activation.
    #[inline]
    pub fn derivative(self, pre: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Sigmoid => {
                let s = sigmoid(pre);
                s * (1.0 - s)
            }
        }
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Dense layer, weights stored row-major with shape `(out_dim, in_dim)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawLayer", into = "RawLayer")]
pub struct Layer {
    out_dim: usize,
    in_dim: usize,
    weights: Vec<f64>,
    bias: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawLayer {
    out_dim: usize,
    in_dim: usize,
    weights: Vec<f64>,
    bias: Vec<f64>,
}

impl TryFrom<RawLayer> for Layer {
    type Error = Error;
    fn try_from(raw: RawLayer) -> Result<Layer> {
        Layer::new(raw.out_dim, raw.in_dim, raw.weights, raw.bias)
    }
}

impl From<Layer> for RawLayer {
    fn from(l: Layer) -> RawLayer {
        RawLayer {
            out_dim: l.out_dim,
            in_dim: l.in_dim,
            weights: l.weights,
            bias: l.bias,
        }
    }
}

impl Layer {
    pub fn new(out_dim: usize, in_dim: usize, weights: Vec<f64>, bias: Vec<f64>) -> Result<Layer> {
        if out_dim == 0 || in_dim == 0 {
            return Err(Error::arg("layer dimensions must be >= 1"));
        }
        if weights.len() != out_dim * in_dim {
            return Err(Error::dim(format!(
                "layer weights: expected {} values, got {}",
                out_dim * in_dim,
                weights.len()
            )));
        }
        if bias.len() != out_dim {
            return Err(Error::dim(format!(
                "layer bias: expected {out_dim} values, got {}",
                bias.len()
            )));
        }
        if weights.iter().chain(bias.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("layer parameters".into()));
        }
        Ok(Layer {
            out_dim,
            in_dim,
            weights,
            bias,
        })
    }

    pub fn zeros(out_dim: usize, in_dim: usize) -> Result<Layer> {
        Layer::new(
            out_dim,
            in_dim,
            vec![0.0; out_dim * in_dim],
            vec![0.0; out_dim],
        )
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    // training-only access; callers keep parameters finite
    pub(crate) fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub(crate) fn bias_mut(&mut self) -> &mut [f64] {
        &mut self.bias
    }

    fn apply_into(&self, input: &[f64], pre: &mut Vec<f64>) {
        pre.clear();
        for row in 0..self.out_dim {
            let w = &self.weights[row * self.in_dim..(row + 1) * self.in_dim];
            let mut acc = self.bias[row];
            for (wi, xi) in w.iter().zip(input.iter()) {
                acc += wi * xi;
            }
            pre.push(acc);
        }
    }

    /// `out = W^T v`, accumulating into a fresh vector of length `in_dim`.
    fn transpose_apply(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.in_dim];
        for (row, vr) in v.iter().enumerate().take(self.out_dim) {
            let w = &self.weights[row * self.in_dim..(row + 1) * self.in_dim];
            for (o, wi) in out.iter_mut().zip(w.iter()) {
                *o += vr * wi;
            }
        }
        out
    }
}

/// Feed-forward network with two output heads.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawNet", into = "RawNet")]
pub struct MlpNet {
    layers: Vec<Layer>,
    hidden_activation: Activation,
    head_activations: [Activation; OUTPUT_WIDTH],
}

#[derive(Serialize, Deserialize)]
struct RawNet {
    layers: Vec<Layer>,
    hidden_activation: Activation,
    head_activations: [Activation; OUTPUT_WIDTH],
}

impl TryFrom<RawNet> for MlpNet {
    type Error = Error;
    fn try_from(raw: RawNet) -> Result<MlpNet> {
        MlpNet::new(raw.layers, raw.hidden_activation, raw.head_activations)
    }
}

impl From<MlpNet> for RawNet {
    fn from(net: MlpNet) -> RawNet {
        RawNet {
            layers: net.layers,
            hidden_activation: net.hidden_activation,
            head_activations: net.head_activations,
        }
    }
}

impl MlpNet {
    pub fn new(
        layers: Vec<Layer>,
        hidden_activation: Activation,
        head_activations: [Activation; OUTPUT_WIDTH],
    ) -> Result<MlpNet> {
        if layers.is_empty() {
            return Err(Error::arg("network needs at least one layer"));
        }
        for (i, pair) in layers.windows(2).enumerate() {
            if pair[0].out_dim != pair[1].in_dim {
                return Err(Error::dim(format!(
                    "layer {i} outputs {} values but layer {} expects {}",
                    pair[0].out_dim,
                    i + 1,
                    pair[1].in_dim
                )));
            }
        }
        let last = layers.last().unwrap();
        if last.out_dim != OUTPUT_WIDTH {
            return Err(Error::dim(format!(
                "output layer must have width {OUTPUT_WIDTH}, got {}",
                last.out_dim
            )));
        }
        Ok(MlpNet {
            layers,
            hidden_activation,
            head_activations,
        })
    }

    /// Randomly initialized network for the widths `input -> hidden... -> 2`.
    /// Weights are Gaussian scaled by `1/sqrt(fan_in)`, biases zero.
    pub fn init(input_width: usize, hidden: &[usize], rng: &mut Rng) -> Result<MlpNet> {
        let mut widths = vec![input_width];
        widths.extend_from_slice(hidden);
        widths.push(OUTPUT_WIDTH);
        let mut layers = Vec::with_capacity(widths.len() - 1);
        for w in widths.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let scale = 1.0 / (fan_in as f64).sqrt();
            let weights = (0..fan_in * fan_out)
                .map(|_| rng.next_gaussian() * scale)
                .collect();
            layers.push(Layer::new(fan_out, fan_in, weights, vec![0.0; fan_out])?);
        }
        MlpNet::new(layers, Activation::Sigmoid, [Activation::Sigmoid; 2])
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].in_dim
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn hidden_activation(&self) -> Activation {
        self.hidden_activation
    }

    pub fn head_activations(&self) -> [Activation; OUTPUT_WIDTH] {
        self.head_activations
    }

    fn check_input(&self, z: &[f64]) -> Result<()> {
        if z.len() != self.input_width() {
            return Err(Error::dim(format!(
                "network expects input width {}, got {}",
                self.input_width(),
                z.len()
            )));
        }
        Ok(())
    }

    /// Forward pass storing every layer input and pre-activation.
    fn trace(&self, z: &[f64]) -> Trace {
        let depth = self.layers.len();
        let mut inputs: Vec<Vec<f64>> = Vec::with_capacity(depth);
        let mut pres: Vec<Vec<f64>> = Vec::with_capacity(depth);
        let mut current = z.to_vec();
        for (l, layer) in self.layers.iter().enumerate() {
            let mut pre = Vec::with_capacity(layer.out_dim);
            layer.apply_into(&current, &mut pre);
            inputs.push(std::mem::take(&mut current));
            let last = l + 1 == depth;
            current = pre
                .iter()
                .enumerate()
                .map(|(i, &p)| {
                    if last {
                        self.head_activations[i].apply(p)
                    } else {
                        self.hidden_activation.apply(p)
                    }
                })
                .collect();
            pres.push(pre);
        }
        Trace {
            inputs,
            pres,
            output: [current[0], current[1]],
        }
    }

    /// Deterministic forward pass; output has width two.
    pub fn forward(&self, z: &Vector) -> Result<[f64; OUTPUT_WIDTH]> {
        self.check_input(z.as_slice())?;
        let out = self.trace(z.as_slice()).output;
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("network output".into()));
        }
        Ok(out)
    }

    /// Analytic gradient of `w_f * head_f(z) + w_s * head_s(z)` with respect
    /// to the input, by reverse accumulation through the layer chain.
    pub fn grad_input(&self, z: &Vector, head_weights: (f64, f64)) -> Result<Vector> {
        self.check_input(z.as_slice())?;
        let trace = self.trace(z.as_slice());
        let depth = self.layers.len();

        let last_pre = &trace.pres[depth - 1];
        let mut delta = vec![
            head_weights.0 * self.head_activations[0].derivative(last_pre[0]),
            head_weights.1 * self.head_activations[1].derivative(last_pre[1]),
        ];
        for l in (0..depth).rev() {
            let back = self.layers[l].transpose_apply(&delta);
            if l == 0 {
                return Vector::new(back);
            }
            let pre = &trace.pres[l - 1];
            delta = back
                .iter()
                .zip(pre.iter())
                .map(|(b, &p)| b * self.hidden_activation.derivative(p))
                .collect();
        }
        unreachable!("network has at least one layer");
    }

    /// Input Hessian of the weighted head sum: central finite differences of
    /// the analytic gradient with stride `step`, symmetrized as
    /// `(H + H^T) / 2`.
    pub fn hessian_input(
        &self,
        z: &Vector,
        head_weights: (f64, f64),
        step: f64,
    ) -> Result<SymMatrix> {
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::arg(format!("hessian step must be > 0, got {step}")));
        }
        self.check_input(z.as_slice())?;
        let n = z.len();
        let mut columns: Vec<Vec<f64>> = Vec::with_capacity(n);
        let mut point = z.as_slice().to_vec();
        for j in 0..n {
            let name_coordinate =
                |e: Error| Error::NonFinite(format!("hessian column for coordinate {j}: {e}"));
            let base = point[j];
            point[j] = base + step;
            let plus = self
                .grad_input(&Vector::new(point.clone())?, head_weights)
                .map_err(name_coordinate)?;
            point[j] = base - step;
            let minus = self
                .grad_input(&Vector::new(point.clone())?, head_weights)
                .map_err(name_coordinate)?;
            point[j] = base;
            let col: Vec<f64> = plus
                .as_slice()
                .iter()
                .zip(minus.as_slice().iter())
                .map(|(p, m)| (p - m) / (2.0 * step))
                .collect();
            if col.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!(
                    "hessian column for coordinate {j}"
                )));
            }
            columns.push(col);
        }
        let mut h = SymMatrix::zeros(n)?;
        for (i, col_i) in columns.iter().enumerate() {
            for (j, col_j) in columns.iter().enumerate().take(i + 1) {
                h.set(i, j, 0.5 * (col_j[i] + col_i[j]));
            }
        }
        Ok(h)
    }

    /// Backward pass for training: given `dL/d output`, accumulates parameter
    /// gradients into `grads`. Returns nothing else; input gradients go
    /// through [`MlpNet::grad_input`].
    pub fn accumulate_param_grads(
        &self,
        z: &[f64],
        output_grad: [f64; OUTPUT_WIDTH],
        grads: &mut NetGradients,
    ) {
        let trace = self.trace(z);
        let depth = self.layers.len();
        let last_pre = &trace.pres[depth - 1];
        let mut delta = vec![
            output_grad[0] * self.head_activations[0].derivative(last_pre[0]),
            output_grad[1] * self.head_activations[1].derivative(last_pre[1]),
        ];
        for l in (0..depth).rev() {
            let layer = &self.layers[l];
            let input = &trace.inputs[l];
            let lg = &mut grads.layers[l];
            let (gw, gb) = (&mut lg.weights, &mut lg.bias);
            for row in 0..layer.out_dim {
                let d = delta[row];
                gb[row] += d;
                let grow = &mut gw[row * layer.in_dim..(row + 1) * layer.in_dim];
                for (g, x) in grow.iter_mut().zip(input.iter()) {
                    *g += d * x;
                }
            }
            if l > 0 {
                let back = layer.transpose_apply(&delta);
                let pre = &trace.pres[l - 1];
                delta = back
                    .iter()
                    .zip(pre.iter())
                    .map(|(b, &p)| b * self.hidden_activation.derivative(p))
                    .collect();
            }
        }
    }

    /// Output of the trace without validation, for hot training loops where
    /// the shape was checked up front.
    pub fn forward_unchecked(&self, z: &[f64]) -> [f64; OUTPUT_WIDTH] {
        self.trace(z).output
    }
}

struct Trace {
    inputs: Vec<Vec<f64>>,
    pres: Vec<Vec<f64>>,
    output: [f64; OUTPUT_WIDTH],
}

/// Parameter gradients shaped like the network.
pub struct NetGradients {
    pub layers: Vec<LayerGradients>,
}

pub struct LayerGradients {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl NetGradients {
    pub fn zeros_like(net: &MlpNet) -> NetGradients {
        NetGradients {
            layers: net
                .layers
                .iter()
                .map(|l| LayerGradients {
                    weights: vec![0.0; l.weights.len()],
                    bias: vec![0.0; l.bias.len()],
                })
                .collect(),
        }
    }

    pub fn reset(&mut self) {
        for l in &mut self.layers {
            l.weights.iter_mut().for_each(|g| *g = 0.0);
            l.bias.iter_mut().for_each(|g| *g = 0.0);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn finite_diff_grad(net: &MlpNet, z: &Vector, head_weights: (f64, f64), step: f64) -> Vec<f64> {
        let scalar = |p: &[f64]| {
            let out = net.forward_unchecked(p);
            head_weights.0 * out[0] + head_weights.1 * out[1]
        };
        let mut p = z.as_slice().to_vec();
        (0..p.len())
            .map(|i| {
                let base = p[i];
                p[i] = base + step;
                let fp = scalar(&p);
                p[i] = base - step;
                let fm = scalar(&p);
                p[i] = base;
                (fp - fm) / (2.0 * step)
            })
            .collect()
    }

    #[test]
    fn zero_net_with_sigmoid_heads_outputs_half() {
        let layers = vec![Layer::zeros(8, 4).unwrap(), Layer::zeros(2, 8).unwrap()];
        let net = MlpNet::new(layers, Activation::Sigmoid, [Activation::Sigmoid; 2]).unwrap();
        let z = Vector::zeros(4).unwrap();
        assert_eq!(net.forward(&z).unwrap(), [0.5, 0.5]);
    }

    #[test]
    fn forward_rejects_wrong_width() {
        let net = MlpNet::new(
            vec![Layer::zeros(2, 3).unwrap()],
            Activation::Sigmoid,
            [Activation::Identity; 2],
        )
        .unwrap();
        let z = Vector::zeros(4).unwrap();
        assert!(matches!(net.forward(&z), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn hand_built_single_path_matches_manual_composition() {
        // 2 -> 1 -> 2 with single active path: pre1 = 2*z0 + 0.5,
        // h = sigmoid(pre1), out_f = sigmoid(3*h - 1), out_s = sigmoid(0).
        let l1 = Layer::new(1, 2, vec![2.0, 0.0], vec![0.5]).unwrap();
        let l2 = Layer::new(2, 1, vec![3.0, 0.0], vec![-1.0, 0.0]).unwrap();
        let net = MlpNet::new(vec![l1, l2], Activation::Sigmoid, [Activation::Sigmoid; 2]).unwrap();
        let z = Vector::new(vec![0.7, -1.3]).unwrap();
        let h = sigmoid(2.0 * 0.7 + 0.5);
        let expected = [sigmoid(3.0 * h - 1.0), sigmoid(0.0)];
        let got = net.forward(&z).unwrap();
        assert!((got[0] - expected[0]).abs() < 1e-15);
        assert!((got[1] - expected[1]).abs() < 1e-15);
    }

    #[test]
    fn forward_is_bit_deterministic() {
        let mut rng = Rng::new(5);
        let net = MlpNet::init(6, &[16, 8], &mut rng).unwrap();
        let z = Vector::new(rng.gaussian_vec(6)).unwrap();
        let a = net.forward(&z).unwrap();
        let b = net.forward(&z).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_final_layer_has_zero_gradient() {
        let mut rng = Rng::new(6);
        let mut net = MlpNet::init(5, &[8], &mut rng).unwrap();
        let last = net.layers_mut().last_mut().unwrap();
        *last = Layer::zeros(2, 8).unwrap();
        let z = Vector::new(rng.gaussian_vec(5)).unwrap();
        let g = net.grad_input(&z, (1.0, 1.0)).unwrap();
        assert_eq!(g.as_slice(), &[0.0; 5]);
    }

    #[test]
    fn single_linear_layer_gradient_is_weight_row() {
        let l = Layer::new(2, 3, vec![1.5, -2.0, 0.25, 9.0, 9.0, 9.0], vec![0.3, 0.4]).unwrap();
        let net = MlpNet::new(vec![l], Activation::Sigmoid, [Activation::Identity; 2]).unwrap();
        let z = Vector::new(vec![0.1, 0.2, 0.3]).unwrap();
        let g = net.grad_input(&z, (1.0, 0.0)).unwrap();
        assert_eq!(g.as_slice(), &[1.5, -2.0, 0.25]);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = Rng::new(7);
        for case in 0..20 {
            let n = 2 + (case % 7);
            let net = MlpNet::init(n, &[12, 10, 6, 4], &mut rng).unwrap();
            let z = Vector::new(rng.gaussian_vec(n)).unwrap();
            let g = net.grad_input(&z, (1.0, 0.7)).unwrap();
            let fd = finite_diff_grad(&net, &z, (1.0, 0.7), 1e-5);
            let scale = fd.iter().fold(1e-12f64, |m, v| m.max(v.abs()));
            for (a, b) in g.as_slice().iter().zip(fd.iter()) {
                assert!(
                    (a - b).abs() / scale <= 1e-5,
                    "case {case}: analytic {a} vs fd {b}"
                );
            }
        }
    }

    #[test]
    fn linear_net_has_zero_hessian() {
        let l1 = Layer::new(3, 2, vec![1.0, 2.0, -1.0, 0.5, 0.0, 3.0], vec![0.0; 3]).unwrap();
        let l2 = Layer::new(2, 3, vec![1.0, 1.0, 1.0, -1.0, 2.0, 0.0], vec![0.1, 0.2]).unwrap();
        let net = MlpNet::new(
            vec![l1, l2],
            Activation::Identity,
            [Activation::Identity; 2],
        )
        .unwrap();
        let z = Vector::new(vec![0.4, -0.9]).unwrap();
        let h = net.hessian_input(&z, (1.0, 0.5), 1e-3).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!(h.get(i, j).abs() < 1e-9, "H[{i}][{j}] = {}", h.get(i, j));
            }
        }
    }

    #[test]
    fn sigmoid_scalar_hessian_matches_double_finite_difference() {
        // g(z) = sigmoid(w . z) on the first head, identity second head.
        let w = [0.8, -1.1, 0.4];
        let l = Layer::new(2, 3, vec![w[0], w[1], w[2], 0.0, 0.0, 0.0], vec![0.0, 0.0]).unwrap();
        let net = MlpNet::new(
            vec![l],
            Activation::Sigmoid,
            [Activation::Sigmoid, Activation::Identity],
        )
        .unwrap();
        let z = Vector::new(vec![0.3, 0.1, -0.2]).unwrap();
        let h = net.hessian_input(&z, (1.0, 0.0), 1e-4).unwrap();

        // dense second-order central difference of the scalar itself
        let g = |p: &[f64]| sigmoid(w.iter().zip(p.iter()).map(|(a, b)| a * b).sum::<f64>());
        let step = 1e-4;
        let base = z.as_slice().to_vec();
        let at = |si: f64, sj: f64, i: usize, j: usize| {
            let mut p = base.clone();
            p[i] += si * step;
            p[j] += sj * step;
            g(&p)
        };
        let mut worst = 0.0f64;
        for i in 0..3 {
            for j in 0..3 {
                let dd = if i == j {
                    (at(1.0, 0.0, i, j) - 2.0 * g(&base) + at(-1.0, 0.0, i, j)) / (step * step)
                } else {
                    (at(1.0, 1.0, i, j) - at(1.0, -1.0, i, j) - at(-1.0, 1.0, i, j)
                        + at(-1.0, -1.0, i, j))
                        / (4.0 * step * step)
                };
                let rel = (h.get(i, j) - dd).abs() / dd.abs().max(1e-6);
                worst = worst.max(rel);
            }
        }
        assert!(worst <= 1e-3, "worst relative error {worst}");
    }

    #[test]
    fn hessian_overflow_names_the_coordinate() {
        // weights near the float ceiling overflow during backpropagation
        let l = Layer::new(2, 1, vec![1e308, 1e308], vec![0.0, 0.0]).unwrap();
        let net = MlpNet::new(vec![l], Activation::Identity, [Activation::Identity; 2]).unwrap();
        let z = Vector::new(vec![10.0]).unwrap();
        match net.hessian_input(&z, (1.0, 1.0), 1e-3) {
            Err(Error::NonFinite(msg)) => {
                assert!(msg.contains("coordinate 0"), "message: {msg}");
            }
            other => panic!("expected NonFinite, got {other:?}"),
        }
    }

    #[test]
    fn hessian_is_exactly_symmetric() {
        let mut rng = Rng::new(8);
        let net = MlpNet::init(4, &[8, 8], &mut rng).unwrap();
        let z = Vector::new(rng.gaussian_vec(4)).unwrap();
        let h = net.hessian_input(&z, (1.0, 1.0), 1e-3).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(h.get(i, j), h.get(j, i));
            }
        }
    }

    #[test]
    fn serde_round_trip_is_exact() {
        let mut rng = Rng::new(9);
        let net = MlpNet::init(3, &[5, 4], &mut rng).unwrap();
        let s = crate::textio::to_json_string(&net).unwrap();
        let back: MlpNet = serde_json::from_str(&s).unwrap();
        assert_eq!(back, net);
    }

    #[test]
    fn rejects_broken_layer_chain() {
        let l1 = Layer::zeros(4, 3).unwrap();
        let l2 = Layer::zeros(2, 5).unwrap();
        assert!(MlpNet::new(vec![l1, l2], Activation::Sigmoid, [Activation::Sigmoid; 2]).is_err());
    }

    #[test]
    fn rejects_non_two_output() {
        let l = Layer::zeros(3, 3).unwrap();
        assert!(MlpNet::new(vec![l], Activation::Sigmoid, [Activation::Sigmoid; 2]).is_err());
    }
}
