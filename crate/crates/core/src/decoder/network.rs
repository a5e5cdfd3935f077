use ndarray::{Array1, Array2, Axis};
use rand::Rng;
use rand_distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use crate::geom::Vec3;
use crate::{Error, Result};

/// Output of the untrained network, kept small so the clamped loss sees gradients.
pub const INITIAL_OUTPUT: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Activation {
    Relu,
    /// `ln(1 + exp(beta x)) / beta`, a smooth rectifier.
    Softplus { beta: f64 },
}

impl Activation {
    fn apply(&self, x: f64) -> f64 {
        match *self {
            Self::Relu => x.max(0.0),
            Self::Softplus { beta } => softplus(beta * x) / beta,
        }
    }

    fn derivative(&self, x: f64) -> f64 {
        match *self {
            Self::Relu => f64::from(u8::from(x > 0.0)),
            Self::Softplus { beta } => sigmoid(beta * x),
        }
    }
}

pub(crate) fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else {
        x.exp().ln_1p()
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecoderConfig {
    pub latent_dim: usize,
    /// Number of linear layers, including the output layer.
    pub layers: usize,
    pub width: usize,
    pub fourier_octaves: usize,
    pub activation: Activation,
}

impl DecoderConfig {
    pub fn full() -> Self {
        Self {
            latent_dim: 256,
            layers: 9,
            width: 512,
            fourier_octaves: 6,
            activation: Activation::Relu,
        }
    }

    pub fn desk() -> Self {
        Self {
            latent_dim: 64,
            layers: 5,
            width: 128,
            fourier_octaves: 6,
            activation: Activation::Softplus { beta: 100.0 },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers < 2 || self.width == 0 || self.latent_dim == 0 {
            return Err(Error::InvalidArgument(
                "decoder needs at least 2 layers, a positive width and a positive latent size".into(),
            ));
        }
        if let Activation::Softplus { beta } = self.activation {
            if !(beta > 0.0 && beta.is_finite()) {
                return Err(Error::InvalidArgument("softplus beta must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn encoding_dim(&self) -> usize {
        3 + 6 * self.fourier_octaves
    }

    pub fn input_dim(&self) -> usize {
        self.encoding_dim() + self.latent_dim
    }

    fn layer_shapes(&self) -> Vec<(usize, usize)> {
        (0..self.layers)
            .map(|l| {
                let fan_in = if l == 0 { self.input_dim() } else { self.width };
                let fan_out = if l + 1 == self.layers { 1 } else { self.width };
                (fan_out, fan_in)
            })
            .collect()
    }

    pub fn parameter_count(&self) -> usize {
        self.layer_shapes().iter().map(|(o, i)| o * i + o).sum()
    }
}

/// Fourier features `[p, sin(2^k pi p), cos(2^k pi p)]` for `k < octaves`.
pub fn fourier_encode(p: &Vec3, octaves: usize, out: &mut [f64]) {
    out[..3].copy_from_slice(p.as_slice());
    let mut freq = std::f64::consts::PI;
    for k in 0..octaves {
        for a in 0..3 {
            let (s, c) = (freq * p[a]).sin_cos();
            out[3 + 6 * k + a] = s;
            out[3 + 6 * k + 3 + a] = c;
        }
        freq *= 2.0;
    }
}

/// Chain rule through [`fourier_encode`]: maps a gradient on the encoding to one on `p`.
pub fn fourier_backward(p: &Vec3, octaves: usize, g: &[f64]) -> Vec3 {
    let mut out = Vec3::new(g[0], g[1], g[2]);
    let mut freq = std::f64::consts::PI;
    for k in 0..octaves {
        for a in 0..3 {
            let (s, c) = (freq * p[a]).sin_cos();
            out[a] += freq * (c * g[3 + 6 * k + a] - s * g[3 + 6 * k + 3 + a]);
        }
        freq *= 2.0;
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    /// Shape `(fan_out, fan_in)`.
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

/// Value and input gradients of the decoder at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct DecoderEval {
    pub value: f64,
    /// Output before the final softplus.
    pub pre_activation: f64,
    pub grad_p: Vec3,
    pub grad_z: Vec<f64>,
}

/// Cached activations of a forward pass, needed for the backward pass.
pub struct ForwardCache {
    inputs: Vec<Array2<f64>>,
    pre: Vec<Array2<f64>>,
    pub values: Vec<f64>,
}

/// Gradients of a scalar objective with respect to every network parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGradients {
    pub layers: Vec<Layer>,
}

impl ParamGradients {
    pub fn flatten(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weight.iter().chain(l.bias.iter()).copied().collect::<Vec<_>>())
            .collect()
    }
}

/// Latent-conditioned MLP `D(p, z) >= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Decoder {
    config: DecoderConfig,
    pub layers: Vec<Layer>,
}

impl Decoder {
    pub fn new<R: Rng + ?Sized>(config: DecoderConfig, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let shapes = config.layer_shapes();
        let last = shapes.len() - 1;
        let layers = shapes
            .iter()
            .enumerate()
            .map(|(l, &(o, i))| {
                let bound = (1.0 / i as f64).sqrt() * if l == last { 0.1 } else { 1.0 };
                let dist = Uniform::new_inclusive(-bound, bound).expect("finite bound");
                let weight = Array2::from_shape_simple_fn((o, i), || dist.sample(rng));
                let bias = if l == last {
                    Array1::from_elem(o, INITIAL_OUTPUT.exp_m1().ln())
                } else {
                    Array1::from_shape_simple_fn(o, || dist.sample(rng))
                };
                Layer { weight, bias }
            })
            .collect();
        Ok(Self { config, layers })
    }

    pub fn from_parameters(config: DecoderConfig, params: &[f64]) -> Result<Self> {
        config.validate()?;
        if params.len() != config.parameter_count() {
            return Err(Error::Format(format!(
                "expected {} decoder parameters, found {}",
                config.parameter_count(),
                params.len()
            )));
        }
        let mut offset = 0;
        let layers = config
            .layer_shapes()
            .into_iter()
            .map(|(o, i)| {
                let weight = Array2::from_shape_vec((o, i), params[offset..offset + o * i].to_vec()).expect("shape");
                offset += o * i;
                let bias = Array1::from_vec(params[offset..offset + o].to_vec());
                offset += o;
                Layer { weight, bias }
            })
            .collect();
        let d = Self { config, layers };
        d.check_finite()?;
        Ok(d)
    }

    pub fn config(&self) -> &DecoderConfig {
        &self.config
    }

    pub fn parameters(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weight.iter().chain(l.bias.iter()).copied().collect::<Vec<_>>())
            .collect()
    }

    pub fn check_finite(&self) -> Result<()> {
        if self.layers.iter().all(|l| l.weight.iter().chain(l.bias.iter()).all(|v| v.is_finite())) {
            Ok(())
        } else {
            Err(Error::NonFinite("decoder parameters".into()))
        }
    }

    /// Rounds every parameter to single precision so checkpoints reload bit-exactly.
    pub fn round_to_f32(&mut self) {
        for l in &mut self.layers {
            l.weight.mapv_inplace(|v| v as f32 as f64);
            l.bias.mapv_inplace(|v| v as f32 as f64);
        }
    }

    fn check_latent(&self, z: &[f64]) -> Result<()> {
        if z.len() != self.config.latent_dim {
            return Err(Error::InvalidArgument(format!(
                "latent has {} entries, decoder expects {}",
                z.len(),
                self.config.latent_dim
            )));
        }
        if !z.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("latent code".into()));
        }
        Ok(())
    }

    /// Network input rows, one per `(point, latent)` pair.
    pub fn input_matrix(&self, points: &[Vec3], latents: &[&[f64]]) -> Array2<f64> {
        let enc = self.config.encoding_dim();
        let mut x = Array2::zeros((points.len(), self.config.input_dim()));
        for (r, (p, z)) in points.iter().zip(latents).enumerate() {
            let mut row = x.row_mut(r);
            let row = row.as_slice_mut().expect("standard layout");
            fourier_encode(p, self.config.fourier_octaves, &mut row[..enc]);
            row[enc..].copy_from_slice(z);
        }
        x
    }

    pub fn forward(&self, x: Array2<f64>) -> ForwardCache {
        let last = self.layers.len() - 1;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut h = x;
        for (l, layer) in self.layers.iter().enumerate() {
            let a = h.dot(&layer.weight.t()) + &layer.bias;
            let next = if l == last {
                a.mapv(softplus)
            } else {
                let act = self.config.activation;
                a.mapv(|v| act.apply(v))
            };
            inputs.push(h);
            pre.push(a);
            h = next;
        }
        let values = h.column(0).to_vec();
        ForwardCache { inputs, pre, values }
    }

    /// Backpropagates per-row output gradients; returns the gradient on the input
    /// rows and, when requested, on the parameters.
    pub fn backward(&self, cache: &ForwardCache, upstream: &[f64], want_params: bool) -> (Array2<f64>, Option<ParamGradients>) {
        let last = self.layers.len() - 1;
        let n = upstream.len();
        let mut delta = Array2::from_shape_fn((n, 1), |(r, _)| upstream[r] * sigmoid(cache.pre[last][[r, 0]]));
        let mut grads = Vec::with_capacity(self.layers.len());
        for l in (0..self.layers.len()).rev() {
            if want_params {
                grads.push(Layer {
                    weight: delta.t().dot(&cache.inputs[l]),
                    bias: delta.sum_axis(Axis(0)),
                });
            }
            let back = delta.dot(&self.layers[l].weight);
            delta = if l > 0 {
                let act = self.config.activation;
                let d = cache.pre[l - 1].mapv(|v| act.derivative(v));
                back * d
            } else {
                back
            };
        }
        grads.reverse();
        (delta, want_params.then_some(ParamGradients { layers: grads }))
    }

    pub fn value(&self, p: &Vec3, z: &[f64]) -> Result<f64> {
        self.check_latent(z)?;
        Ok(self.forward(self.input_matrix(&[*p], &[z])).values[0])
    }

    /// Batched values at a shared latent.
    pub fn values(&self, points: &[Vec3], z: &[f64]) -> Result<Vec<f64>> {
        self.check_latent(z)?;
        let mut out = Vec::with_capacity(points.len());
        for chunk in points.chunks(BATCH_ROWS) {
            let zs = vec![z; chunk.len()];
            out.extend(self.forward(self.input_matrix(chunk, &zs)).values);
        }
        Ok(out)
    }

    /// Values with gradients in `p` and `z` for a batch of points at a shared latent.
    pub fn evaluate_batch(&self, points: &[Vec3], z: &[f64]) -> Result<Vec<DecoderEval>> {
        self.check_latent(z)?;
        let enc = self.config.encoding_dim();
        let last = self.layers.len() - 1;
        let mut out = Vec::with_capacity(points.len());
        for chunk in points.chunks(BATCH_ROWS) {
            let zs = vec![z; chunk.len()];
            let cache = self.forward(self.input_matrix(chunk, &zs));
            let (dx, _) = self.backward(&cache, &vec![1.0; chunk.len()], false);
            for (r, p) in chunk.iter().enumerate() {
                let row = dx.row(r);
                let row = row.as_slice().expect("standard layout");
                out.push(DecoderEval {
                    value: cache.values[r],
                    pre_activation: cache.pre[last][[r, 0]],
                    grad_p: fourier_backward(p, self.config.fourier_octaves, &row[..enc]),
                    grad_z: row[enc..].to_vec(),
                });
            }
        }
        Ok(out)
    }

    pub fn evaluate(&self, p: &Vec3, z: &[f64]) -> Result<DecoderEval> {
        Ok(self.evaluate_batch(&[*p], z)?.remove(0))
    }

    /// Gradient of `D(p, z)` with respect to every parameter.
    pub fn parameter_gradients(&self, p: &Vec3, z: &[f64]) -> Result<ParamGradients> {
        self.check_latent(z)?;
        let cache = self.forward(self.input_matrix(&[*p], &[z]));
        Ok(self.backward(&cache, &[1.0], true).1.expect("requested"))
    }
}

/// Rows per forward pass when evaluating large point sets.
const BATCH_ROWS: usize = 4096;
