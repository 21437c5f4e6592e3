use rand::Rng;
use serde::{Deserialize, Serialize};

/// Which rotation parameterization the network outputs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RepKind {
    /// 9 channels: packed Bingham parameter and approach direction.
    Ours,
    /// 6 channels: raw `e_x` and `e_z`.
    Rotmat,
    /// 4 channels: raw quaternion.
    Quat,
}

impl RepKind {
    pub const ALL: [RepKind; 3] = [RepKind::Ours, RepKind::Rotmat, RepKind::Quat];

    pub fn output_dim(self) -> usize {
        match self {
            RepKind::Ours => 9,
            RepKind::Rotmat => 6,
            RepKind::Quat => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            RepKind::Ours => "ours",
            RepKind::Rotmat => "rotmat",
            RepKind::Quat => "quat",
        }
    }
}

impl std::str::FromStr for RepKind {
    type Err = crate::error::Error;
    fn from_str(s: &str) -> crate::error::Result<Self> {
        match s {
            "ours" => Ok(RepKind::Ours),
            "rotmat" => Ok(RepKind::Rotmat),
            "quat" => Ok(RepKind::Quat),
            other => Err(crate::error::Error::Config(format!(
                "unknown representation kind `{other}` (expected ours, rotmat or quat)"
            ))),
        }
    }
}

/// Fully connected layer, `y = W x + b` with `W` stored row-major `(out, in)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub n_in: usize,
    pub n_out: usize,
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

impl Dense {
    /// Glorot-uniform weights, zero bias.
    fn init<R: Rng + ?Sized>(n_in: usize, n_out: usize, rng: &mut R) -> Self {
        let limit = (6.0 / (n_in + n_out) as f64).sqrt();
        let w = (0..n_in * n_out).map(|_| rng.gen_range(-limit..limit)).collect();
        Self { n_in, n_out, w, b: vec![0.0; n_out] }
    }

    fn zeros_like(&self) -> Self {
        Self { n_in: self.n_in, n_out: self.n_out, w: vec![0.0; self.w.len()], b: vec![0.0; self.b.len()] }
    }

    fn forward(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n_out)
            .map(|o| {
                let row = &self.w[o * self.n_in..(o + 1) * self.n_in];
                self.b[o] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
            })
            .collect()
    }
}

/// 2 → 32 → 32 → k tanh network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TinyModel {
    pub kind: RepKind,
    pub layers: Vec<Dense>,
}

pub const HIDDEN: usize = 32;

/// Activations kept for the backward pass.
pub struct ForwardCache {
    /// Input to each layer; hidden entries are post-tanh.
    inputs: Vec<Vec<f64>>,
    pub output: Vec<f64>,
}

/// Parameter gradients with the same layout as the model.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Dense>,
}

impl TinyModel {
    pub fn new<R: Rng + ?Sized>(kind: RepKind, rng: &mut R) -> Self {
        let layers = vec![
            Dense::init(2, HIDDEN, rng),
            Dense::init(HIDDEN, HIDDEN, rng),
            Dense::init(HIDDEN, kind.output_dim(), rng),
        ];
        Self { kind, layers }
    }

    pub fn forward(&self, input: [f64; 2]) -> ForwardCache {
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut x = input.to_vec();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let mut y = layer.forward(&x);
            if i < last {
                y.iter_mut().for_each(|v| *v = v.tanh());
            }
            inputs.push(std::mem::replace(&mut x, y));
        }
        ForwardCache { inputs, output: x }
    }

    pub fn predict(&self, input: [f64; 2]) -> Vec<f64> {
        self.forward(input).output
    }

    pub fn zero_grad(&self) -> Gradients {
        Gradients { layers: self.layers.iter().map(Dense::zeros_like).collect() }
    }

    /// Accumulates `∂L/∂θ` into `grads` given `∂L/∂output`.
    pub fn backward(&self, cache: &ForwardCache, d_output: &[f64], grads: &mut Gradients) {
        let mut delta = d_output.to_vec();
        for i in (0..self.layers.len()).rev() {
            let layer = &self.layers[i];
            let x = &cache.inputs[i];
            let g = &mut grads.layers[i];
            for o in 0..layer.n_out {
                g.b[o] += delta[o];
                for j in 0..layer.n_in {
                    g.w[o * layer.n_in + j] += delta[o] * x[j];
                }
            }
            if i == 0 {
                break;
            }
            // x is tanh output of the previous layer: d tanh = 1 - x²
            delta = (0..layer.n_in)
                .map(|j| {
                    let back: f64 = (0..layer.n_out).map(|o| layer.w[o * layer.n_in + j] * delta[o]).sum();
                    back * (1.0 - x[j] * x[j])
                })
                .collect();
        }
    }

    /// `θ ← θ - lr · scale · g`.
    pub fn apply(&mut self, grads: &Gradients, lr: f64, scale: f64) {
        for (layer, g) in self.layers.iter_mut().zip(&grads.layers) {
            layer.w.iter_mut().zip(&g.w).for_each(|(w, d)| *w -= lr * scale * d);
            layer.b.iter_mut().zip(&g.b).for_each(|(b, d)| *b -= lr * scale * d);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(|l| l.w.iter().chain(&l.b).all(|v| v.is_finite()))
    }
}
