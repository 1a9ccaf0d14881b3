//! Feedforward value network with rectifier hidden layers and a linear
//! output layer, trained by exact backpropagation of a mean squared error.

use std::io::{Read, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const CHECKPOINT_FORMAT: &str = "fogdeploy-value-network";
const CHECKPOINT_VERSION: u32 = 1;

/// Fully connected layer. `weights` is stored row-major with one row per
/// input unit: `weights[i * outputs + o]` connects input `i` to output `o`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl DenseLayer {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
        }
    }

    /// Uniform initialization in ±√(6 / (fan_in + fan_out)), zero bias.
    pub fn glorot(inputs: usize, outputs: usize, rng: &mut impl Rng) -> Self {
        let limit = (6.0 / (inputs + outputs) as f64).sqrt();
        let weights = (0..inputs * outputs)
            .map(|_| rng.gen_range(-limit..=limit))
            .collect();
        Self {
            inputs,
            outputs,
            weights,
            bias: vec![0.0; outputs],
        }
    }

    fn forward_into(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend_from_slice(&self.bias);
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            let row = &self.weights[i * self.outputs..(i + 1) * self.outputs];
            for (o, w) in out.iter_mut().zip(row) {
                *o += xi * w;
            }
        }
    }

    fn is_finite(&self) -> bool {
        self.weights.iter().chain(&self.bias).all(|v| v.is_finite())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValueNetwork {
    layers: Vec<DenseLayer>,
}

/// Parameter gradients, shaped like the network.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub layers: Vec<DenseLayer>,
}

impl Gradients {
    /// Weights then biases of each layer, in layer order.
    pub fn flatten(&self) -> Vec<f64> {
        flatten(&self.layers)
    }

    pub fn max_abs(&self) -> f64 {
        self.flatten().iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

fn flatten(layers: &[DenseLayer]) -> Vec<f64> {
    layers
        .iter()
        .flat_map(|l| l.weights.iter().chain(&l.bias).copied())
        .collect()
}

impl ValueNetwork {
    /// Randomly initialized network `input -> hidden... -> outputs`.
    pub fn new(input: usize, hidden: &[usize], outputs: usize, rng: &mut impl Rng) -> Self {
        let sizes = layer_sizes(input, hidden, outputs);
        let layers = sizes
            .windows(2)
            .map(|w| DenseLayer::glorot(w[0], w[1], rng))
            .collect();
        Self { layers }
    }

    pub fn zeros(input: usize, hidden: &[usize], outputs: usize) -> Self {
        let sizes = layer_sizes(input, hidden, outputs);
        let layers = sizes.windows(2).map(|w| DenseLayer::zeros(w[0], w[1])).collect();
        Self { layers }
    }

    pub fn from_layers(layers: Vec<DenseLayer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Config("network needs at least one layer".into()));
        }
        for (k, l) in layers.iter().enumerate() {
            if l.weights.len() != l.inputs * l.outputs || l.bias.len() != l.outputs {
                return Err(Error::Shape {
                    expected: l.inputs * l.outputs,
                    got: l.weights.len(),
                });
            }
            if k > 0 && layers[k - 1].outputs != l.inputs {
                return Err(Error::Shape {
                    expected: layers[k - 1].outputs,
                    got: l.inputs,
                });
            }
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub fn layer_sizes(&self) -> Vec<usize> {
        let mut s = vec![self.layers[0].inputs];
        s.extend(self.layers.iter().map(|l| l.outputs));
        s
    }

    pub fn input_len(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_len(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    pub fn params(&self) -> Vec<f64> {
        flatten(&self.layers)
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.param_count() {
            return Err(Error::Shape {
                expected: self.param_count(),
                got: params.len(),
            });
        }
        let mut it = params.iter().copied();
        for l in &mut self.layers {
            for v in l.weights.iter_mut().chain(l.bias.iter_mut()) {
                *v = it.next().unwrap_or_default();
            }
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(DenseLayer::is_finite)
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_len() {
            return Err(Error::Shape {
                expected: self.input_len(),
                got: x.len(),
            });
        }
        Ok(())
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let acts = self.activations(x);
        Ok(acts.into_iter().last().unwrap_or_default())
    }

    /// Q-values `(fog, cloud)` of a two-output network.
    pub fn q_values(&self, x: &[f64]) -> Result<[f64; 2]> {
        if self.output_len() != 2 {
            return Err(Error::Shape {
                expected: 2,
                got: self.output_len(),
            });
        }
        let out = self.forward(x)?;
        Ok([out[0], out[1]])
    }

    /// Post-activation outputs of every layer (the input excluded).
    fn activations(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let last = self.layers.len() - 1;
        let mut acts: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len());
        for (k, layer) in self.layers.iter().enumerate() {
            let input = if k == 0 { x } else { &acts[k - 1] };
            let mut out = Vec::with_capacity(layer.outputs);
            layer.forward_into(input, &mut out);
            if k != last {
                for v in &mut out {
                    *v = v.max(0.0);
                }
            }
            acts.push(out);
        }
        acts
    }

    /// Gradient of `mean_b (Q(s_b)[a_b] − y_b)²` and the loss value.
    pub fn gradient(&self, states: &[&[f64]], actions: &[usize], targets: &[f64]) -> Result<(Gradients, f64)> {
        let n = states.len();
        if n == 0 {
            return Err(Error::Domain("gradient of an empty batch".into()));
        }
        if actions.len() != n || targets.len() != n {
            return Err(Error::Shape {
                expected: n,
                got: actions.len().min(targets.len()),
            });
        }
        let mut grads = Gradients {
            layers: self
                .layers
                .iter()
                .map(|l| DenseLayer::zeros(l.inputs, l.outputs))
                .collect(),
        };
        let mut loss = 0.0;
        let scale = 1.0 / n as f64;
        for ((x, &a), &y) in states.iter().zip(actions).zip(targets) {
            self.check_input(x)?;
            if a >= self.output_len() {
                return Err(Error::Shape {
                    expected: self.output_len(),
                    got: a + 1,
                });
            }
            if x.iter().any(|v| !v.is_finite()) || !y.is_finite() {
                return Err(Error::Domain("non-finite value in gradient batch".into()));
            }
            let acts = self.activations(x);
            let q = acts[acts.len() - 1][a];
            let err = q - y;
            loss += err * err * scale;

            let mut delta = vec![0.0; self.output_len()];
            delta[a] = 2.0 * err * scale;
            for k in (0..self.layers.len()).rev() {
                let layer = &self.layers[k];
                let input: &[f64] = if k == 0 { x } else { &acts[k - 1] };
                let g = &mut grads.layers[k];
                for (gb, d) in g.bias.iter_mut().zip(&delta) {
                    *gb += d;
                }
                for (i, &xi) in input.iter().enumerate() {
                    if xi == 0.0 {
                        continue;
                    }
                    let row = &mut g.weights[i * layer.outputs..(i + 1) * layer.outputs];
                    for (gw, d) in row.iter_mut().zip(&delta) {
                        *gw += xi * d;
                    }
                }
                if k > 0 {
                    // through the rectifier: zero where the unit was inactive
                    delta = input
                        .iter()
                        .enumerate()
                        .map(|(i, &ai)| {
                            if ai <= 0.0 {
                                return 0.0;
                            }
                            let row = &layer.weights[i * layer.outputs..(i + 1) * layer.outputs];
                            row.iter().zip(&delta).map(|(w, d)| w * d).sum()
                        })
                        .collect();
                }
            }
        }
        Ok((grads, loss))
    }

    /// Plain gradient descent step.
    pub fn apply(&mut self, grads: &Gradients, learning_rate: f64) {
        for (l, g) in self.layers.iter_mut().zip(&grads.layers) {
            for (w, d) in l.weights.iter_mut().zip(&g.weights) {
                *w -= learning_rate * d;
            }
            for (b, d) in l.bias.iter_mut().zip(&g.bias) {
                *b -= learning_rate * d;
            }
        }
    }

    pub fn write_checkpoint(&self, w: impl Write) -> Result<()> {
        let ck = Checkpoint {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            layer_sizes: self.layer_sizes(),
            layers: self
                .layers
                .iter()
                .map(|l| CheckpointLayer {
                    weights: l.weights.clone(),
                    bias: l.bias.clone(),
                })
                .collect(),
        };
        serde_json::to_writer(w, &ck)?;
        Ok(())
    }

    pub fn read_checkpoint(r: impl Read) -> Result<Self> {
        let ck: Checkpoint = serde_json::from_reader(r)?;
        if ck.format != CHECKPOINT_FORMAT || ck.version != CHECKPOINT_VERSION {
            return Err(Error::Config(format!(
                "unsupported checkpoint {} v{}",
                ck.format, ck.version
            )));
        }
        if ck.layer_sizes.len() != ck.layers.len() + 1 {
            return Err(Error::Config("checkpoint layer count mismatch".into()));
        }
        let layers = ck
            .layers
            .into_iter()
            .enumerate()
            .map(|(k, l)| DenseLayer {
                inputs: ck.layer_sizes[k],
                outputs: ck.layer_sizes[k + 1],
                weights: l.weights,
                bias: l.bias,
            })
            .collect();
        Self::from_layers(layers)
    }
}

fn layer_sizes(input: usize, hidden: &[usize], outputs: usize) -> Vec<usize> {
    let mut s = Vec::with_capacity(hidden.len() + 2);
    s.push(input);
    s.extend_from_slice(hidden);
    s.push(outputs);
    s
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    format: String,
    version: u32,
    layer_sizes: Vec<usize>,
    layers: Vec<CheckpointLayer>,
}

#[derive(Serialize, Deserialize)]
struct CheckpointLayer {
    weights: Vec<f64>,
    bias: Vec<f64>,
}
