//! Minimal dense-tensor network core: Dense / Conv3x3 / ReLU layers with
//! analytic forward and backward passes, the two losses the protocol
//! trains with, and a bias-corrected Adam optimizer.
//!
//! Layers interpret tensors as `[batch, channel, height, width]`; Dense is
//! a per-position channel mix (a 1x1 kernel), Conv3x3 is stride-1 with
//! same-padding so spatial dims are always preserved. Rank-2 inputs
//! `[batch, feature]` are lifted to `[batch, feature, 1, 1]` on entry.

mod adam;
mod kernels;
mod loss;

pub use adam::{adam_step, AdamHyper, AdamState};
pub use loss::{cross_entropy_loss, mse_loss};

use crate::error::{CoreError, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerKind {
    Dense,
    Conv3x3,
    Relu,
}

/// Static description of one layer; `fan_in`/`fan_out` are channel counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerSpec {
    pub kind: LayerKind,
    pub fan_in: usize,
    pub fan_out: usize,
}

impl LayerSpec {
    pub fn dense(fan_in: usize, fan_out: usize) -> Self {
        Self {
            kind: LayerKind::Dense,
            fan_in,
            fan_out,
        }
    }

    pub fn conv3x3(fan_in: usize, fan_out: usize) -> Self {
        Self {
            kind: LayerKind::Conv3x3,
            fan_in,
            fan_out,
        }
    }

    pub fn relu(channels: usize) -> Self {
        Self {
            kind: LayerKind::Relu,
            fan_in: channels,
            fan_out: channels,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Layer<F> {
    Dense { weight: Tensor<F>, bias: Tensor<F> },
    Conv3x3 { weight: Tensor<F>, bias: Tensor<F> },
    Relu { channels: usize },
}

impl<F: Scalar> Layer<F> {
    pub fn spec(&self) -> LayerSpec {
        match self {
            Layer::Dense { weight, .. } => LayerSpec::dense(weight.shape()[1], weight.shape()[0]),
            Layer::Conv3x3 { weight, .. } => {
                LayerSpec::conv3x3(weight.shape()[1], weight.shape()[0])
            }
            Layer::Relu { channels } => LayerSpec::relu(*channels),
        }
    }

    fn has_params(&self) -> bool {
        !matches!(self, Layer::Relu { .. })
    }
}

/// An ordered layer stack plus its parameters. `trainable == false` freezes
/// the parameters: gradient bookkeeping is refused and no operation in this
/// crate mutates them.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams<F> {
    layers: Vec<Layer<F>>,
    trainable: bool,
}

impl<F: Scalar> ModelParams<F> {
    pub fn new(layers: Vec<Layer<F>>, trainable: bool) -> Self {
        Self { layers, trainable }
    }

    /// Build a model from layer specs with seeded uniform init in
    /// `[-sqrt(1/fan), +sqrt(1/fan)]` where `fan` counts the inputs feeding
    /// one output unit (kernel taps included for Conv3x3). The f64 sample
    /// stream is identical regardless of the scalar type.
    pub fn init(specs: &[LayerSpec], trainable: bool, seed: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let mut layers = Vec::with_capacity(specs.len());
        for spec in specs {
            layers.push(match spec.kind {
                LayerKind::Dense => {
                    let bound = (1.0 / spec.fan_in as f64).sqrt();
                    let weight = sample_uniform(&mut rng, vec![spec.fan_out, spec.fan_in], bound);
                    let bias = sample_uniform(&mut rng, vec![spec.fan_out], bound);
                    Layer::Dense { weight, bias }
                }
                LayerKind::Conv3x3 => {
                    let bound = (1.0 / (spec.fan_in * 9) as f64).sqrt();
                    let weight =
                        sample_uniform(&mut rng, vec![spec.fan_out, spec.fan_in, 3, 3], bound);
                    let bias = sample_uniform(&mut rng, vec![spec.fan_out], bound);
                    Layer::Conv3x3 { weight, bias }
                }
                LayerKind::Relu => Layer::Relu {
                    channels: spec.fan_in,
                },
            });
        }
        Self { layers, trainable }
    }

    pub fn from_parts(
        specs: &[LayerSpec],
        mut tensors: Vec<Tensor<F>>,
        trainable: bool,
    ) -> Result<Self> {
        let mut layers = Vec::with_capacity(specs.len());
        tensors.reverse();
        for (i, spec) in specs.iter().enumerate() {
            match spec.kind {
                LayerKind::Relu => layers.push(Layer::Relu {
                    channels: spec.fan_in,
                }),
                kind => {
                    let weight = tensors.pop().ok_or_else(|| {
                        CoreError::Decode(format!("missing weight tensor for layer {i}"))
                    })?;
                    let bias = tensors.pop().ok_or_else(|| {
                        CoreError::Decode(format!("missing bias tensor for layer {i}"))
                    })?;
                    let expected_w = match kind {
                        LayerKind::Dense => vec![spec.fan_out, spec.fan_in],
                        LayerKind::Conv3x3 => vec![spec.fan_out, spec.fan_in, 3, 3],
                        LayerKind::Relu => unreachable!(),
                    };
                    if weight.shape() != expected_w.as_slice() || bias.shape() != [spec.fan_out] {
                        return Err(CoreError::LayerShapeMismatch {
                            layer: i,
                            expected: format!("{:?}", expected_w),
                            got: format!("{:?}", weight.shape()),
                        });
                    }
                    layers.push(match kind {
                        LayerKind::Dense => Layer::Dense { weight, bias },
                        LayerKind::Conv3x3 => Layer::Conv3x3 { weight, bias },
                        LayerKind::Relu => unreachable!(),
                    });
                }
            }
        }
        if !tensors.is_empty() {
            return Err(CoreError::Decode("excess parameter tensors".into()));
        }
        Ok(Self { layers, trainable })
    }

    pub fn layers(&self) -> &[Layer<F>] {
        &self.layers
    }

    pub fn layer_specs(&self) -> Vec<LayerSpec> {
        self.layers.iter().map(Layer::spec).collect()
    }

    pub fn trainable(&self) -> bool {
        self.trainable
    }

    /// Parameter tensors in layer order, weight before bias.
    pub fn flat_params(&self) -> Vec<&Tensor<F>> {
        let mut out = Vec::new();
        for layer in &self.layers {
            match layer {
                Layer::Dense { weight, bias } | Layer::Conv3x3 { weight, bias } => {
                    out.push(weight);
                    out.push(bias);
                }
                Layer::Relu { .. } => {}
            }
        }
        out
    }

    pub fn flat_params_mut(&mut self) -> Result<Vec<&mut Tensor<F>>> {
        if !self.trainable {
            return Err(CoreError::NotTrainable);
        }
        let mut out = Vec::new();
        for layer in &mut self.layers {
            match layer {
                Layer::Dense { weight, bias } | Layer::Conv3x3 { weight, bias } => {
                    out.push(weight);
                    out.push(bias);
                }
                Layer::Relu { .. } => {}
            }
        }
        Ok(out)
    }

    pub fn param_count(&self) -> usize {
        self.flat_params().iter().map(|t| t.len()).sum()
    }

    /// Total parameter bytes under the wire format (8 bytes per element).
    pub fn serialized_param_bytes(&self) -> u64 {
        self.flat_params()
            .iter()
            .map(|t| t.serialized_byte_size())
            .sum()
    }
}

fn sample_uniform<F: Scalar>(rng: &mut ChaCha20Rng, shape: Vec<usize>, bound: f64) -> Tensor<F> {
    let n: usize = shape.iter().product();
    let data = (0..n)
        .map(|_| F::of(bound * (2.0 * rng.gen::<f64>() - 1.0)))
        .collect();
    Tensor::new(shape, data)
}

/// Retained per-layer inputs from a traced forward pass.
#[derive(Debug, Clone)]
pub struct ChainTrace<F> {
    layer_inputs: Vec<Tensor<F>>,
}

pub struct ForwardPass<F> {
    pub output: Tensor<F>,
    /// Present iff the model is trainable.
    pub trace: Option<ChainTrace<F>>,
}

/// Run the layer chain. Activations are retained iff the model is
/// trainable; a frozen model allocates no gradient bookkeeping.
pub fn forward<F: Scalar>(model: &ModelParams<F>, input: &Tensor<F>) -> Result<ForwardPass<F>> {
    let mut current: Tensor<F> = if input.rank() == 2 {
        let (b, c) = (input.shape()[0], input.shape()[1]);
        input.clone().reshaped(vec![b, c, 1, 1])
    } else {
        input.clone()
    };

    let mut trace = model.trainable.then(|| ChainTrace {
        layer_inputs: Vec::with_capacity(model.layers.len()),
    });

    for (i, layer) in model.layers.iter().enumerate() {
        let (_, c, _, _) = current.dims4()?;
        let spec = layer.spec();
        if spec.fan_in != c {
            return Err(CoreError::LayerShapeMismatch {
                layer: i,
                expected: format!("{} input channels", spec.fan_in),
                got: format!("{c}"),
            });
        }
        let next = match layer {
            Layer::Dense { weight, bias } => kernels::dense_forward(&current, weight, bias),
            Layer::Conv3x3 { weight, bias } => kernels::conv3x3_forward(&current, weight, bias),
            Layer::Relu { .. } => kernels::relu_forward(&current),
        };
        if let Some(t) = trace.as_mut() {
            t.layer_inputs.push(current);
        }
        current = next;
    }
    Ok(ForwardPass {
        output: current,
        trace,
    })
}

pub struct BackwardPass<F> {
    /// Gradients aligned with `ModelParams::flat_params()`.
    pub param_grads: Vec<Tensor<F>>,
    pub input_grad: Tensor<F>,
}

/// Backpropagate `grad_output` through a traced forward pass.
pub fn backward<F: Scalar>(
    model: &ModelParams<F>,
    trace: &ChainTrace<F>,
    grad_output: &Tensor<F>,
) -> Result<BackwardPass<F>> {
    if trace.layer_inputs.len() != model.layers.len() {
        return Err(CoreError::InvalidConfig(
            "trace does not match model depth".into(),
        ));
    }
    let mut grad = grad_output.clone();
    let mut rev_param_grads: Vec<Tensor<F>> = Vec::new();
    for (layer, input) in model.layers.iter().zip(&trace.layer_inputs).rev() {
        match layer {
            Layer::Dense { weight, .. } => {
                let (dw, db, dx) = kernels::dense_backward(input, weight, &grad);
                rev_param_grads.push(db);
                rev_param_grads.push(dw);
                grad = dx;
            }
            Layer::Conv3x3 { weight, .. } => {
                let (dw, db, dx) = kernels::conv3x3_backward(input, weight, &grad);
                rev_param_grads.push(db);
                rev_param_grads.push(dw);
                grad = dx;
            }
            Layer::Relu { .. } => {
                grad = kernels::relu_backward(input, &grad);
            }
        }
    }
    rev_param_grads.reverse();
    Ok(BackwardPass {
        param_grads: rev_param_grads,
        input_grad: grad,
    })
}

pub(crate) use kernels::{
    conv3x3_forward, dense_forward, nearest_upsample2x, nearest_upsample2x_backward, relu_backward,
    relu_forward, space_to_depth2, space_to_depth2_backward,
};
