//! Multilayer perceptrons over the autodiff tape.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

use super::{Tape, Tensor, TensorId};

/// Hidden-layer activation. The final layer is always linear (optionally
/// followed by row normalization); callers add output squashing themselves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activation {
    Relu,
}

/// Architecture of an MLP: `layer_widths[0]` inputs through hidden layers to
/// `layer_widths.last()` outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub layer_widths: Vec<usize>,
    pub activation: Activation,
    /// If set, output rows are scaled to unit Euclidean norm (feature encoders).
    pub final_unit_norm: bool,
}

impl MlpSpec {
    pub fn new(layer_widths: Vec<usize>) -> Self {
        Self { layer_widths, activation: Activation::Relu, final_unit_norm: false }
    }

    pub fn with_unit_norm(layer_widths: Vec<usize>) -> Self {
        Self { layer_widths, activation: Activation::Relu, final_unit_norm: true }
    }

    fn validate(&self) -> Result<()> {
        if self.layer_widths.len() < 2 || self.layer_widths.iter().any(|&w| w == 0) {
            return Err(Error::Config(format!(
                "mlp needs >= 2 positive layer widths, got {:?}",
                self.layer_widths
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
struct Layer {
    weight: Tensor, // [in, out]
    bias: Tensor,   // [1, out]
}

/// An MLP with owned parameters.
#[derive(Debug, Clone)]
pub struct Mlp {
    spec: MlpSpec,
    layers: Vec<Layer>,
}

impl Mlp {
    /// Initializes weights uniformly in `±1/sqrt(fan_in)` and biases to zero.
    pub fn new(spec: MlpSpec, rng: &mut impl Rng) -> Result<Self> {
        spec.validate()?;
        let mut layers = Vec::new();
        for w in spec.layer_widths.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let bound = 1.0 / (fan_in as f64).sqrt();
            let data = (0..fan_in * fan_out).map(|_| rng.gen_range(-bound..bound)).collect();
            layers.push(Layer {
                weight: Tensor::from_vec(fan_in, fan_out, data)?,
                bias: Tensor::zeros(1, fan_out),
            });
        }
        Ok(Self { spec, layers })
    }

    pub fn spec(&self) -> &MlpSpec {
        &self.spec
    }

    pub fn in_dim(&self) -> usize {
        self.spec.layer_widths[0]
    }

    pub fn out_dim(&self) -> usize {
        *self.spec.layer_widths.last().unwrap()
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    /// Total parameter count (weights plus biases).
    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weight.len() + l.bias.len()).sum()
    }

    /// Parameters in tape-registration order with `layer{i}.weight` /
    /// `layer{i}.bias` names, prefixed by `prefix`.
    pub fn named_params(&self, prefix: &str) -> Vec<(String, &Tensor)> {
        let mut out = Vec::new();
        for (i, l) in self.layers.iter().enumerate() {
            out.push((format!("{prefix}layer{i}.weight"), &l.weight));
            out.push((format!("{prefix}layer{i}.bias"), &l.bias));
        }
        out
    }

    /// Mutable parameter views in tape-registration order.
    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out = Vec::new();
        for l in &mut self.layers {
            out.push(&mut l.weight);
            out.push(&mut l.bias);
        }
        out
    }

    /// Overwrites parameters from a checkpoint map; shapes must match.
    pub fn load_from(&mut self, map: &BTreeMap<String, Tensor>, prefix: &str) -> Result<()> {
        for (i, l) in self.layers.iter_mut().enumerate() {
            for (name, slot) in
                [(format!("{prefix}layer{i}.weight"), &mut l.weight), (format!("{prefix}layer{i}.bias"), &mut l.bias)]
            {
                let t = map
                    .get(&name)
                    .ok_or_else(|| Error::Parse(format!("checkpoint missing {name}")))?;
                if (t.rows(), t.cols()) != (slot.rows(), slot.cols()) {
                    return Err(Error::Shape {
                        op: "load_from",
                        details: format!(
                            "{name}: {}x{} vs expected {}x{}",
                            t.rows(),
                            t.cols(),
                            slot.rows(),
                            slot.cols()
                        ),
                    });
                }
                *slot = t.clone();
            }
        }
        Ok(())
    }

    /// Hand-sets one layer's parameters (used by tests and probes).
    pub fn set_layer(&mut self, i: usize, weight: Tensor, bias: Tensor) -> Result<()> {
        let l = &mut self.layers[i];
        if (weight.rows(), weight.cols()) != (l.weight.rows(), l.weight.cols())
            || (bias.rows(), bias.cols()) != (l.bias.rows(), l.bias.cols())
        {
            return Err(Error::Shape { op: "set_layer", details: format!("layer {i}") });
        }
        l.weight = weight;
        l.bias = bias;
        Ok(())
    }

    fn check_params_finite(&self) -> Result<()> {
        for (i, l) in self.layers.iter().enumerate() {
            l.weight.check_finite(&format!("mlp layer{i}.weight"))?;
            l.bias.check_finite(&format!("mlp layer{i}.bias"))?;
        }
        Ok(())
    }

    /// Registers all parameters as leaves on `tape`, in `named_params` order.
    pub fn register(&self, tape: &mut Tape) -> Vec<TensorId> {
        let mut ids = Vec::with_capacity(2 * self.layers.len());
        for l in &self.layers {
            ids.push(tape.leaf(&l.weight));
            ids.push(tape.leaf(&l.bias));
        }
        ids
    }

    /// Records the forward pass on `tape` using previously registered
    /// parameter leaves. `x` is a `[batch, in_dim]` node.
    pub fn forward_on(&self, tape: &mut Tape, params: &[TensorId], x: TensorId) -> Result<TensorId> {
        if params.len() != 2 * self.layers.len() {
            return Err(Error::Shape {
                op: "forward_on",
                details: format!("{} param ids for {} layers", params.len(), self.layers.len()),
            });
        }
        let (_, in_cols) = tape.dims(x);
        if in_cols != self.in_dim() {
            return Err(Error::Shape {
                op: "forward_on",
                details: format!("input has {} cols, expected {}", in_cols, self.in_dim()),
            });
        }
        let last = self.layers.len() - 1;
        let mut h = x;
        for i in 0..self.layers.len() {
            let w = params[2 * i];
            let b = params[2 * i + 1];
            h = tape.matmul(h, w)?;
            h = tape.add_bias(h, b)?;
            if i < last {
                match self.spec.activation {
                    Activation::Relu => h = tape.relu(h),
                }
            }
        }
        if self.spec.final_unit_norm {
            h = tape.row_l2_normalize(h)?;
        }
        Ok(h)
    }

    /// Plain forward pass on a scratch tape. Uses the same code path as
    /// training, so identical inputs and parameters give bitwise-identical
    /// outputs. Errors on non-finite inputs or parameters.
    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        x.check_finite("mlp_forward input")?;
        self.check_params_finite()?;
        let mut tape = Tape::new();
        let pids = self.register(&mut tape);
        let xid = tape.leaf(x);
        let out = self.forward_on(&mut tape, &pids, xid)?;
        Ok(tape.value_tensor(out))
    }
}
