use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::Network;
use crate::error::{Error, Result};
use crate::rng::Rng;

/// Layer shapes of the three-layer head for `input_dim` inputs:
/// `d -> d/2 -> d/4 -> 1`, integer division.
pub fn mlp_layer_dims(input_dim: usize) -> [(usize, usize); 3] {
    let d = input_dim;
    [(d, d / 2), (d / 2, d / 4), (d / 4, 1)]
}

pub fn mlp_param_count(input_dim: usize) -> usize {
    mlp_layer_dims(input_dim)
        .iter()
        .map(|&(i, o)| i * o + o)
        .sum()
}

/// Shape of an MLP; the parameters live elsewhere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub input_dim: usize,
}

impl MlpSpec {
    pub fn layer_dims(&self) -> [(usize, usize); 3] {
        mlp_layer_dims(self.input_dim)
    }

    pub fn param_count(&self) -> usize {
        mlp_param_count(self.input_dim)
    }
}

/// Flat layout: for each layer, the `out x in` weight matrix row-major,
/// followed by its `out` biases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    spec: MlpSpec,
    params: Vec<f64>,
}

impl Mlp {
    pub fn zeros(input_dim: usize) -> Self {
        let spec = MlpSpec { input_dim };
        Self {
            spec,
            params: vec![0.0; spec.param_count()],
        }
    }

    pub fn from_params(input_dim: usize, params: Vec<f64>) -> Result<Self> {
        let spec = MlpSpec { input_dim };
        if params.len() != spec.param_count() {
            return Err(Error::Dimension {
                context: "mlp parameters",
                expected: spec.param_count(),
                got: params.len(),
            });
        }
        Ok(Self { spec, params })
    }

    pub fn init(input_dim: usize, rng: &mut Rng) -> Self {
        let mut m = Self::zeros(input_dim);
        init_head(input_dim, &mut m.params, rng);
        m
    }

    pub fn spec(&self) -> MlpSpec {
        self.spec
    }
}

impl Network for Mlp {
    fn input_dim(&self) -> usize {
        self.spec.input_dim
    }

    fn params(&self) -> &[f64] {
        &self.params
    }

    fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn forward(&self, x: &[f64]) -> Result<f64> {
        check_input(self.spec.input_dim, x)?;
        Ok(head_forward(self.spec.input_dim, &self.params, x).output())
    }

    fn backward(&self, x: &[f64], upstream: f64) -> Result<(f64, Vec<f64>)> {
        check_input(self.spec.input_dim, x)?;
        let trace = head_forward(self.spec.input_dim, &self.params, x);
        let mut grad = vec![0.0; self.params.len()];
        head_backward(self.spec.input_dim, &self.params, &trace, upstream, &mut grad);
        Ok((trace.output(), grad))
    }
}

fn check_input(dim: usize, x: &[f64]) -> Result<()> {
    if x.len() != dim {
        return Err(Error::Dimension {
            context: "mlp input",
            expected: dim,
            got: x.len(),
        });
    }
    Ok(())
}

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases.
pub(crate) fn init_head(input_dim: usize, params: &mut [f64], rng: &mut Rng) {
    let mut off = 0;
    for (fan_in, fan_out) in mlp_layer_dims(input_dim) {
        let n = fan_in * fan_out + fan_out;
        if fan_in > 0 {
            let bound = 1.0 / (fan_in as f64).sqrt();
            for p in &mut params[off..off + n] {
                *p = rng.gen_range(-bound..bound);
            }
        }
        off += n;
    }
}

/// Activations of every layer; `acts[0]` is the input, `acts[3]` the
/// scalar output. `pre[l]` holds layer `l`'s affine output.
pub(crate) struct HeadTrace {
    acts: [Vec<f64>; 4],
    pre: [Vec<f64>; 3],
}

impl HeadTrace {
    pub(crate) fn output(&self) -> f64 {
        self.acts[3][0]
    }
}

pub(crate) fn head_forward(input_dim: usize, params: &[f64], x: &[f64]) -> HeadTrace {
    let dims = mlp_layer_dims(input_dim);
    let mut acts: [Vec<f64>; 4] = Default::default();
    let mut pre: [Vec<f64>; 3] = Default::default();
    acts[0] = x.to_vec();
    let mut off = 0;
    for (l, &(fan_in, fan_out)) in dims.iter().enumerate() {
        let w = &params[off..off + fan_in * fan_out];
        let b = &params[off + fan_in * fan_out..off + fan_in * fan_out + fan_out];
        let z: Vec<f64> = (0..fan_out)
            .map(|o| {
                let row = &w[o * fan_in..(o + 1) * fan_in];
                b[o] + row.iter().zip(&acts[l]).map(|(a, b)| a * b).sum::<f64>()
            })
            .collect();
        acts[l + 1] = if l < 2 {
            z.iter().map(|v| v.max(0.0)).collect()
        } else {
            z.clone()
        };
        pre[l] = z;
        off += fan_in * fan_out + fan_out;
    }
    HeadTrace { acts, pre }
}

/// Accumulates `upstream * d out / d params` into `grad` and returns
/// `upstream * d out / d x`.
pub(crate) fn head_backward(
    input_dim: usize,
    params: &[f64],
    trace: &HeadTrace,
    upstream: f64,
    grad: &mut [f64],
) -> Vec<f64> {
    let dims = mlp_layer_dims(input_dim);
    let mut offsets = [0usize; 3];
    let mut off = 0;
    for (l, &(i, o)) in dims.iter().enumerate() {
        offsets[l] = off;
        off += i * o + o;
    }
    let mut delta = vec![upstream];
    for l in (0..3).rev() {
        let (fan_in, fan_out) = dims[l];
        let off = offsets[l];
        let input = &trace.acts[l];
        let mut d_in = vec![0.0; fan_in];
        for o in 0..fan_out {
            let d = delta[o];
            let w_row = off + o * fan_in;
            for i in 0..fan_in {
                grad[w_row + i] += d * input[i];
                d_in[i] += params[w_row + i] * d;
            }
            grad[off + fan_in * fan_out + o] += d;
        }
        if l > 0 {
            for (i, v) in d_in.iter_mut().enumerate() {
                if trace.pre[l - 1][i] <= 0.0 {
                    *v = 0.0;
                }
            }
        }
        delta = d_in;
    }
    delta
}
