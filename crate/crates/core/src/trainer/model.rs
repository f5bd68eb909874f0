//! Small differentiable heads: a linear model or a tanh MLP, both emitting a
//! single logit. Parameters live in one flat vector; each layer stores its
//! `out x in` weights row-major followed by `out` biases.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{domain, shape, Error, Result};
use crate::pipeline::{rng_for, Raster};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Linear,
    Mlp,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Linear => "linear",
            ModelKind::Mlp => "mlp",
        })
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "linear" => Ok(ModelKind::Linear),
            "mlp" => Ok(ModelKind::Mlp),
            other => Err(Error::Parse(format!("unknown model kind {other:?}"))),
        }
    }
}

/// Image-to-feature map: mean |v - 127.5| / 127.5 over a `pool x pool` grid of
/// cells, plus the same quantity over the whole image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FeatureSpec {
    pub pool: usize,
}

impl Default for FeatureSpec {
    fn default() -> Self {
        FeatureSpec { pool: 4 }
    }
}

impl FeatureSpec {
    pub fn dim(&self) -> usize {
        self.pool * self.pool + 1
    }

    pub fn extract(&self, image: &Raster) -> Vec<f64> {
        const MID: f64 = 127.5;
        let (w, h) = (image.width(), image.height());
        let pool = self.pool.max(1);
        let mut sums = vec![0.0; pool * pool];
        let mut counts = vec![0usize; pool * pool];
        let mut total = 0.0;
        for row in 0..h {
            let cell_r = row * pool / h;
            for col in 0..w {
                let cell = cell_r * pool + col * pool / w;
                let v = (image.get(row, col) - MID).abs() / MID;
                sums[cell] += v;
                counts[cell] += 1;
                total += v;
            }
        }
        let mut out: Vec<f64> = sums
            .iter()
            .zip(&counts)
            .map(|(s, &n)| if n == 0 { 0.0 } else { s / n as f64 })
            .collect();
        out.push(total / (w * h) as f64);
        out
    }
}

/// Per-feature z-score fitted on a training split. Constant features get
/// unit scale so they pass through centered.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(rows: &[Vec<f64>]) -> Self {
        let Some(dim) = rows.first().map(Vec::len) else {
            return Standardizer::default();
        };
        let n = rows.len() as f64;
        let mut mean = vec![0.0; dim];
        for r in rows {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; dim];
        for r in rows {
            for ((s, v), m) in var.iter_mut().zip(r).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let scale = var
            .into_iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd > 1e-12 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Standardizer { mean, scale }
    }

    pub fn is_identity(&self) -> bool {
        self.mean.is_empty()
    }

    pub fn apply(&self, x: &mut [f64]) {
        if self.is_identity() {
            return;
        }
        for ((v, m), s) in x.iter_mut().zip(&self.mean).zip(&self.scale) {
            *v = (*v - m) / s;
        }
    }

    pub fn apply_all(&self, rows: &mut [Vec<f64>]) {
        rows.iter_mut().for_each(|r| self.apply(r));
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub hidden_sizes: Vec<usize>,
    pub input_dim: usize,
}

impl ModelSpec {
    pub fn linear(input_dim: usize) -> Self {
        ModelSpec {
            kind: ModelKind::Linear,
            hidden_sizes: Vec::new(),
            input_dim,
        }
    }

    pub fn mlp(input_dim: usize, hidden_sizes: Vec<usize>) -> Self {
        ModelSpec {
            kind: ModelKind::Mlp,
            hidden_sizes,
            input_dim,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 {
            return Err(domain("model input dimension must be positive"));
        }
        match self.kind {
            ModelKind::Linear if !self.hidden_sizes.is_empty() => {
                Err(domain("a linear model has no hidden layers"))
            }
            ModelKind::Mlp if self.hidden_sizes.is_empty() => {
                Err(domain("an mlp needs at least one hidden layer"))
            }
            ModelKind::Mlp if self.hidden_sizes.contains(&0) => {
                Err(domain("mlp hidden sizes must be >= 1"))
            }
            _ => Ok(()),
        }
    }

    /// Layer widths from input to the single output.
    pub fn widths(&self) -> Vec<usize> {
        let mut w = vec![self.input_dim];
        w.extend(&self.hidden_sizes);
        w.push(1);
        w
    }

    pub fn param_count(&self) -> usize {
        self.widths().windows(2).map(|p| p[1] * p[0] + p[1]).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    spec: ModelSpec,
    params: Vec<f64>,
}

/// RNG stream reserved for parameter initialization.
const INIT_STREAM: u64 = 1;

impl Model {
    /// Scaled-uniform init: weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)),
    /// biases zero, drawn from the run seed.
    pub fn init(spec: ModelSpec, seed: u64) -> Result<Self> {
        spec.validate()?;
        let mut rng = rng_for(seed, INIT_STREAM);
        let mut params = Vec::with_capacity(spec.param_count());
        for pair in spec.widths().windows(2) {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let bound = 1.0 / (fan_in as f64).sqrt();
            for _ in 0..fan_in * fan_out {
                params.push(rng.gen_range(-bound..bound));
            }
            params.extend(std::iter::repeat_n(0.0, fan_out));
        }
        Ok(Model { spec, params })
    }

    pub fn from_params(spec: ModelSpec, params: Vec<f64>) -> Result<Self> {
        spec.validate()?;
        if params.len() != spec.param_count() {
            return Err(shape(format!(
                "model needs {} parameters, got {}",
                spec.param_count(),
                params.len()
            )));
        }
        Ok(Model { spec, params })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// Activations of every layer, input first. Hidden layers use tanh; the
    /// last entry is the one-element logit.
    fn activations(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let widths = self.spec.widths();
        let mut acts = vec![x.to_vec()];
        let mut offset = 0;
        for (layer, pair) in widths.windows(2).enumerate() {
            let (n_in, n_out) = (pair[0], pair[1]);
            let weights = &self.params[offset..offset + n_in * n_out];
            let biases = &self.params[offset + n_in * n_out..offset + n_in * n_out + n_out];
            let input = &acts[layer];
            let last = layer + 2 == widths.len();
            let out: Vec<f64> = (0..n_out)
                .map(|o| {
                    let z = biases[o]
                        + weights[o * n_in..(o + 1) * n_in]
                            .iter()
                            .zip(input)
                            .map(|(w, v)| w * v)
                            .sum::<f64>();
                    if last {
                        z
                    } else {
                        z.tanh()
                    }
                })
                .collect();
            acts.push(out);
            offset += n_in * n_out + n_out;
        }
        acts
    }

    pub fn forward(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.spec.input_dim);
        self.activations(x)
            .last()
            .map(|v| v[0])
            .expect("at least one layer")
    }

    /// Adds `dloss_dlogit * dlogit/dparams` into `grad`.
    pub fn accumulate_grad(&self, x: &[f64], dloss_dlogit: f64, grad: &mut [f64]) {
        let widths = self.spec.widths();
        let acts = self.activations(x);
        let mut offsets = Vec::with_capacity(widths.len() - 1);
        let mut offset = 0;
        for pair in widths.windows(2) {
            offsets.push(offset);
            offset += pair[0] * pair[1] + pair[1];
        }
        // delta = dL/dz for the current layer's pre-activations
        let mut delta = vec![dloss_dlogit];
        for layer in (0..widths.len() - 1).rev() {
            let (n_in, n_out) = (widths[layer], widths[layer + 1]);
            let off = offsets[layer];
            let input = &acts[layer];
            for o in 0..n_out {
                let row = off + o * n_in;
                for i in 0..n_in {
                    grad[row + i] += delta[o] * input[i];
                }
                grad[off + n_in * n_out + o] += delta[o];
            }
            if layer == 0 {
                break;
            }
            let weights = &self.params[off..off + n_in * n_out];
            delta = (0..n_in)
                .map(|i| {
                    let back: f64 = (0..n_out).map(|o| weights[o * n_in + i] * delta[o]).sum();
                    // tanh'(z) = 1 - a^2
                    back * (1.0 - input[i] * input[i])
                })
                .collect();
        }
    }
}
