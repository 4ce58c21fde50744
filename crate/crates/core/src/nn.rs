//! Dense feed-forward networks with hand-written backpropagation and Adam.
//!
//! Weights are stored row-major as `out_dim × in_dim`. A [`Activation::Crelu`]
//! layer emits `[relu(z), relu(−z)]`, so the following layer must accept
//! `2 · out_dim` inputs.

use std::io::{self, BufRead, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NnError {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("non-finite value in {0}")]
    NumericFault(&'static str),

    #[error("snapshot parse error: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activation {
    Relu,
    Crelu,
    Softmax,
    Identity,
}

impl Activation {
    pub fn output_width(self, units: usize) -> usize {
        match self {
            Activation::Crelu => 2 * units,
            _ => units,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub in_dim: usize,
    pub out_dim: usize,
    pub activation: Activation,
}

impl LayerSpec {
    pub fn new(in_dim: usize, out_dim: usize, activation: Activation) -> Self {
        Self {
            in_dim,
            out_dim,
            activation,
        }
    }

    /// Width after the activation is applied.
    pub fn output_width(&self) -> usize {
        self.activation.output_width(self.out_dim)
    }
}

/// Parameters of one dense layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub spec: LayerSpec,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Layer {
    pub fn zeros(spec: LayerSpec) -> Self {
        Self {
            spec,
            weights: vec![0.0; spec.out_dim * spec.in_dim],
            bias: vec![0.0; spec.out_dim],
        }
    }

    #[inline]
    pub fn weight(&self, row: usize, col: usize) -> f64 {
        self.weights[row * self.spec.in_dim + col]
    }

    pub fn param_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }
}

/// He-uniform initialization: weights uniform on `±√(6 / in_dim)`, zero bias.
pub fn he_uniform_init<R: Rng + ?Sized>(spec: LayerSpec, rng: &mut R) -> Layer {
    let limit = (6.0 / spec.in_dim as f64).sqrt();
    let mut layer = Layer::zeros(spec);
    for w in &mut layer.weights {
        *w = rng.gen_range(-limit..=limit);
    }
    layer
}

pub fn relu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        0.0
    }
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

pub fn apply_activation(kind: Activation, x: &[f64]) -> Vec<f64> {
    match kind {
        Activation::Relu => x.iter().map(|&v| relu(v)).collect(),
        Activation::Crelu => x
            .iter()
            .map(|&v| relu(v))
            .chain(x.iter().map(|&v| relu(-v)))
            .collect(),
        Activation::Softmax => softmax(x),
        Activation::Identity => x.to_vec(),
    }
}

/// Vector-Jacobian product of an activation: maps `dL/d(post)` to `dL/d(pre)`.
fn activation_vjp(kind: Activation, pre: &[f64], post: &[f64], grad_post: &[f64]) -> Vec<f64> {
    match kind {
        Activation::Relu => pre
            .iter()
            .zip(grad_post)
            .map(|(&z, &g)| if z > 0.0 { g } else { 0.0 })
            .collect(),
        Activation::Crelu => {
            let n = pre.len();
            pre.iter()
                .enumerate()
                .map(|(i, &z)| {
                    if z > 0.0 {
                        grad_post[i]
                    } else if z < 0.0 {
                        -grad_post[i + n]
                    } else {
                        0.0
                    }
                })
                .collect()
        }
        Activation::Softmax => {
            let dot: f64 = post.iter().zip(grad_post).map(|(p, g)| p * g).sum();
            post.iter()
                .zip(grad_post)
                .map(|(p, g)| p * (g - dot))
                .collect()
        }
        Activation::Identity => grad_post.to_vec(),
    }
}

/// Intermediate values of one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace {
    pub input: Vec<f64>,
    pub pre_activations: Vec<Vec<f64>>,
    pub post_activations: Vec<Vec<f64>>,
}

impl ForwardTrace {
    pub fn output(&self) -> &[f64] {
        self.post_activations.last().map(Vec::as_slice).unwrap_or(&self.input)
    }

    /// Pre-activation of the final layer (logits for a softmax head).
    pub fn head_preactivation(&self) -> &[f64] {
        self.pre_activations.last().map(Vec::as_slice).unwrap_or(&self.input)
    }
}

/// Gradient (or moment) buffers shaped like a network's parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<LayerGrad>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrad {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Gradients {
    pub fn zeros_like(net: &MlpNetwork) -> Self {
        Self {
            layers: net
                .layers
                .iter()
                .map(|l| LayerGrad {
                    weights: vec![0.0; l.weights.len()],
                    bias: vec![0.0; l.bias.len()],
                })
                .collect(),
        }
    }

    pub fn scale(&mut self, factor: f64) {
        self.values_mut().for_each(|v| *v *= factor);
    }

    pub fn is_finite(&self) -> bool {
        self.values().all(|v| v.is_finite())
    }

    pub fn values(&self) -> impl Iterator<Item = &f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(l.bias.iter()))
    }

    pub fn values_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.weights.iter_mut().chain(l.bias.iter_mut()))
    }

    /// Flattened in snapshot order.
    pub fn to_flat(&self) -> Vec<f64> {
        self.values().copied().collect()
    }
}

/// Layered dense network.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpNetwork {
    pub layers: Vec<Layer>,
}

impl MlpNetwork {
    /// Builds a He-initialized network, checking that layer widths chain.
    pub fn new<R: Rng + ?Sized>(specs: &[LayerSpec], rng: &mut R) -> Result<Self, NnError> {
        check_chain(specs)?;
        Ok(Self {
            layers: specs.iter().map(|&s| he_uniform_init(s, rng)).collect(),
        })
    }

    pub fn zeros(specs: &[LayerSpec]) -> Result<Self, NnError> {
        check_chain(specs)?;
        Ok(Self {
            layers: specs.iter().map(|&s| Layer::zeros(s)).collect(),
        })
    }

    pub fn specs(&self) -> Vec<LayerSpec> {
        self.layers.iter().map(|l| l.spec).collect()
    }

    pub fn input_dim(&self) -> usize {
        self.layers.first().map_or(0, |l| l.spec.in_dim)
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.spec.output_width())
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Layer::param_count).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.params().all(|v| v.is_finite())
    }

    pub fn params(&self) -> impl Iterator<Item = &f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(l.bias.iter()))
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.weights.iter_mut().chain(l.bias.iter_mut()))
    }

    /// Parameters in layer order, row-major weights, biases after weights.
    pub fn to_flat(&self) -> Vec<f64> {
        self.params().copied().collect()
    }

    pub fn set_flat(&mut self, values: &[f64]) -> Result<(), NnError> {
        if values.len() != self.param_count() {
            return Err(NnError::Shape(format!(
                "expected {} parameters, got {}",
                self.param_count(),
                values.len()
            )));
        }
        for (p, v) in self.params_mut().zip(values) {
            *p = *v;
        }
        Ok(())
    }

    pub fn forward(&self, input: &[f64]) -> Result<ForwardTrace, NnError> {
        if input.len() != self.input_dim() {
            return Err(NnError::Shape(format!(
                "input has {} components, network expects {}",
                input.len(),
                self.input_dim()
            )));
        }
        let mut pre_activations = Vec::with_capacity(self.layers.len());
        let mut post_activations: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let x = post_activations.last().map(Vec::as_slice).unwrap_or(input);
            let n_in = layer.spec.in_dim;
            let z: Vec<f64> = layer
                .weights
                .chunks_exact(n_in)
                .zip(&layer.bias)
                .map(|(row, b)| row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b)
                .collect();
            post_activations.push(apply_activation(layer.spec.activation, &z));
            pre_activations.push(z);
        }
        Ok(ForwardTrace {
            input: input.to_vec(),
            pre_activations,
            post_activations,
        })
    }

    /// Output vector only.
    pub fn predict(&self, input: &[f64]) -> Result<Vec<f64>, NnError> {
        let mut trace = self.forward(input)?;
        Ok(trace.post_activations.pop().unwrap_or(trace.input))
    }

    /// Parameter gradients given `dL/d(output)`.
    pub fn backward(&self, trace: &ForwardTrace, output_grad: &[f64]) -> Result<Gradients, NnError> {
        self.check_trace(trace)?;
        let last = self.layers.len() - 1;
        if output_grad.len() != self.layers[last].spec.output_width() {
            return Err(NnError::Shape(format!(
                "output gradient has {} components, network emits {}",
                output_grad.len(),
                self.layers[last].spec.output_width()
            )));
        }
        let head = activation_vjp(
            self.layers[last].spec.activation,
            &trace.pre_activations[last],
            &trace.post_activations[last],
            output_grad,
        );
        self.backward_from_preactivation(trace, &head)
    }

    /// Parameter gradients given `dL/dz` at the final layer's pre-activation.
    ///
    /// For a softmax head this skips the softmax Jacobian, so the policy
    /// score `onehot − probs` can be fed in directly.
    pub fn backward_from_preactivation(
        &self,
        trace: &ForwardTrace,
        head_grad: &[f64],
    ) -> Result<Gradients, NnError> {
        self.check_trace(trace)?;
        let last = self.layers.len() - 1;
        if head_grad.len() != self.layers[last].spec.out_dim {
            return Err(NnError::Shape(format!(
                "head gradient has {} components, final layer has {} units",
                head_grad.len(),
                self.layers[last].spec.out_dim
            )));
        }
        let mut grads = Gradients::zeros_like(self);
        let mut dz = head_grad.to_vec();
        for idx in (0..self.layers.len()).rev() {
            let layer = &self.layers[idx];
            let n_in = layer.spec.in_dim;
            let x = if idx == 0 {
                &trace.input
            } else {
                &trace.post_activations[idx - 1]
            };
            let g = &mut grads.layers[idx];
            for (r, &d) in dz.iter().enumerate() {
                g.bias[r] = d;
                for (gw, &xv) in g.weights[r * n_in..(r + 1) * n_in].iter_mut().zip(x) {
                    *gw = d * xv;
                }
            }
            if idx > 0 {
                let mut dx = vec![0.0; n_in];
                for (r, &d) in dz.iter().enumerate() {
                    for (c, dxc) in dx.iter_mut().enumerate() {
                        *dxc += layer.weight(r, c) * d;
                    }
                }
                let prev = &self.layers[idx - 1];
                dz = activation_vjp(
                    prev.spec.activation,
                    &trace.pre_activations[idx - 1],
                    &trace.post_activations[idx - 1],
                    &dx,
                );
            }
        }
        Ok(grads)
    }

    fn check_trace(&self, trace: &ForwardTrace) -> Result<(), NnError> {
        if self.layers.is_empty() {
            return Err(NnError::Shape("network has no layers".into()));
        }
        let ok = trace.input.len() == self.input_dim()
            && trace.pre_activations.len() == self.layers.len()
            && trace.post_activations.len() == self.layers.len()
            && self
                .layers
                .iter()
                .zip(&trace.pre_activations)
                .all(|(l, z)| z.len() == l.spec.out_dim);
        if ok {
            Ok(())
        } else {
            Err(NnError::Shape("trace was not produced by this network".into()))
        }
    }

    /// Writes one value per line, in [`MlpNetwork::to_flat`] order.
    pub fn write_snapshot_text<W: Write>(&self, mut out: W) -> Result<(), NnError> {
        for v in self.params() {
            writeln!(out, "{v:e}")?;
        }
        Ok(())
    }

    pub fn read_snapshot_text<B: BufRead>(&mut self, input: B) -> Result<(), NnError> {
        let mut values = Vec::with_capacity(self.param_count());
        for line in input.lines() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            values.push(
                line.parse::<f64>()
                    .map_err(|e| NnError::Snapshot(format!("{line:?}: {e}")))?,
            );
        }
        self.set_flat(&values)
    }

    /// Little-endian `f64` values in [`MlpNetwork::to_flat`] order.
    pub fn snapshot_bytes(&self) -> Vec<u8> {
        self.params().flat_map(|v| v.to_le_bytes()).collect()
    }

    pub fn load_snapshot_bytes(&mut self, bytes: &[u8]) -> Result<(), NnError> {
        if !bytes.len().is_multiple_of(8) {
            return Err(NnError::Snapshot(format!(
                "byte length {} is not a multiple of 8",
                bytes.len()
            )));
        }
        let values: Vec<f64> = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        self.set_flat(&values)
    }
}

fn check_chain(specs: &[LayerSpec]) -> Result<(), NnError> {
    if specs.is_empty() {
        return Err(NnError::Shape("network needs at least one layer".into()));
    }
    for (i, s) in specs.iter().enumerate() {
        if s.in_dim == 0 || s.out_dim == 0 {
            return Err(NnError::Shape(format!("layer {i} has a zero dimension")));
        }
    }
    for (i, pair) in specs.windows(2).enumerate() {
        if pair[0].output_width() != pair[1].in_dim {
            return Err(NnError::Shape(format!(
                "layer {} emits {} values but layer {} expects {}",
                i,
                pair[0].output_width(),
                i + 1,
                pair[1].in_dim
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Adam moment estimates for one network.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub first_moment: Gradients,
    pub second_moment: Gradients,
    pub step_count: u64,
    pub config: AdamConfig,
}

impl AdamState {
    pub fn new(net: &MlpNetwork, config: AdamConfig) -> Self {
        Self {
            first_moment: Gradients::zeros_like(net),
            second_moment: Gradients::zeros_like(net),
            step_count: 0,
            config,
        }
    }
}

/// One Adam descent step `θ ← θ − lr · m̂ / (√v̂ + ε)`.
///
/// Nothing is modified if `grads` contains a non-finite value.
pub fn adam_step(
    net: &mut MlpNetwork,
    grads: &Gradients,
    state: &mut AdamState,
    lr: f64,
) -> Result<(), NnError> {
    let shapes_match = grads.layers.len() == net.layers.len()
        && state.first_moment.layers.len() == net.layers.len()
        && net.layers.iter().zip(&grads.layers).all(|(l, g)| {
            l.weights.len() == g.weights.len() && l.bias.len() == g.bias.len()
        });
    if !shapes_match {
        return Err(NnError::Shape("gradient does not match network".into()));
    }
    if !grads.is_finite() {
        return Err(NnError::NumericFault("gradient"));
    }
    if !lr.is_finite() || lr < 0.0 {
        return Err(NnError::NumericFault("learning rate"));
    }
    let AdamConfig {
        beta1,
        beta2,
        epsilon,
    } = state.config;
    state.step_count += 1;
    let t = state.step_count as i32;
    let c1 = 1.0 - beta1.powi(t);
    let c2 = 1.0 - beta2.powi(t);
    let params = net.params_mut();
    let m = state.first_moment.values_mut();
    let v = state.second_moment.values_mut();
    for (((p, g), m), v) in params.zip(grads.values()).zip(m).zip(v) {
        *m = beta1 * *m + (1.0 - beta1) * g;
        *v = beta2 * *v + (1.0 - beta2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *p -= lr * m_hat / (v_hat.sqrt() + epsilon);
    }
    if !net.is_finite() {
        return Err(NnError::NumericFault("parameters"));
    }
    Ok(())
}
