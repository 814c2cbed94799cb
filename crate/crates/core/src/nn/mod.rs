//! Small hand-differentiated networks: affine layers, multilayer
//! perceptrons, the pairwise progress model, losses and Adam.

mod adam;
mod checkpoint;
mod loss;
mod progress;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng as _;

use crate::error::{Error, Result};
use crate::rng::Rng;

pub use adam::{AdamConfig, OptimizerState};
pub use checkpoint::{read_checkpoint, write_checkpoint, Checkpoint, CHECKPOINT_VERSION, PROGRESS_MAGIC, QNET_MAGIC};
pub use loss::{cross_entropy_loss, cross_entropy_rows, huber, softmax_rows};
pub use progress::{stack_frames, PairCache, ProgressModel, ProgressShape};

/// Hidden-layer nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Tanh,
    Relu,
}

impl Activation {
    fn apply(self, z: &mut Array2<f64>) {
        match self {
            Activation::Tanh => z.mapv_inplace(f64::tanh),
            Activation::Relu => z.mapv_inplace(|x| x.max(0.0)),
        }
    }

    /// Multiply `delta` in place by the derivative, expressed through the
    /// post-activation output.
    fn backprop(self, output: &Array2<f64>, delta: &mut Array2<f64>) {
        match self {
            Activation::Tanh => delta.zip_mut_with(output, |d, &a| *d *= 1.0 - a * a),
            Activation::Relu => delta.zip_mut_with(output, |d, &a| {
                if a <= 0.0 {
                    *d = 0.0
                }
            }),
        }
    }
}

/// Affine map `x · W + b` with `W` stored as `(fan_in, fan_out)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
    /// Inputs are mostly zeros (occupancy frames); skip them row by row.
    pub sparse_input: bool,
}

impl Dense {
    pub fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Dense {
            weights: Array2::zeros((fan_in, fan_out)),
            bias: Array1::zeros(fan_out),
            sparse_input: false,
        }
    }

    /// Uniform fan-in initialization, `U(-1/√fan_in, 1/√fan_in)`.
    pub fn init(fan_in: usize, fan_out: usize, zero_bias: bool, rng: &mut Rng) -> Self {
        let bound = 1.0 / (fan_in as f64).sqrt();
        let weights = Array2::from_shape_fn((fan_in, fan_out), |_| rng.gen_range(-bound..bound));
        let bias = if zero_bias {
            Array1::zeros(fan_out)
        } else {
            Array1::from_shape_fn(fan_out, |_| rng.gen_range(-bound..bound))
        };
        Dense { weights, bias, sparse_input: false }
    }

    pub fn fan_in(&self) -> usize {
        self.weights.nrows()
    }

    pub fn fan_out(&self) -> usize {
        self.weights.ncols()
    }

    pub fn forward(&self, x: ArrayView2<f64>) -> Array2<f64> {
        if self.sparse_input {
            let mut out = Array2::zeros((x.nrows(), self.fan_out()));
            for (row, mut dst) in x.outer_iter().zip(out.outer_iter_mut()) {
                dst.assign(&self.bias);
                for (i, &xi) in row.iter().enumerate() {
                    if xi != 0.0 {
                        dst.scaled_add(xi, &self.weights.row(i));
                    }
                }
            }
            out
        } else {
            x.dot(&self.weights) + &self.bias
        }
    }

    /// Accumulate parameter gradients for upstream `delta`; optionally return
    /// the gradient with respect to the input.
    fn backward(
        &self,
        x: ArrayView2<f64>,
        delta: &Array2<f64>,
        grad: &mut Dense,
        want_input_grad: bool,
    ) -> Option<Array2<f64>> {
        if self.sparse_input {
            for (row, d) in x.outer_iter().zip(delta.outer_iter()) {
                for (i, &xi) in row.iter().enumerate() {
                    if xi != 0.0 {
                        grad.weights.row_mut(i).scaled_add(xi, &d);
                    }
                }
            }
        } else {
            grad.weights += &x.t().dot(delta);
        }
        grad.bias += &delta.sum_axis(Axis(0));
        want_input_grad.then(|| delta.dot(&self.weights.t()))
    }

    fn zeros_like(&self) -> Dense {
        Dense { sparse_input: self.sparse_input, ..Dense::zeros(self.fan_in(), self.fan_out()) }
    }

    fn tensors(&self) -> [&[f64]; 2] {
        [
            self.weights.as_slice().expect("standard layout"),
            self.bias.as_slice().expect("standard layout"),
        ]
    }

    fn tensors_mut(&mut self) -> [&mut [f64]; 2] {
        [
            self.weights.as_slice_mut().expect("standard layout"),
            self.bias.as_slice_mut().expect("standard layout"),
        ]
    }
}

/// Feed-forward stack: hidden layers use `activation`, the last layer is linear.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub layers: Vec<Dense>,
    pub activation: Activation,
}

/// Layer inputs recorded during a forward pass; `inputs[0]` is the network input.
#[derive(Debug, Clone)]
pub struct MlpCache {
    inputs: Vec<Array2<f64>>,
}

impl Mlp {
    /// `dims` lists widths from input to output. The first layer is marked
    /// sparse-input when `sparse_input` is set.
    pub fn new(dims: &[usize], activation: Activation, sparse_input: bool, rng: &mut Rng) -> Result<Self> {
        if dims.len() < 2 || dims.contains(&0) {
            return Err(Error::invalid(format!("bad layer dimensions {dims:?}")));
        }
        let mut layers: Vec<Dense> =
            dims.windows(2).map(|w| Dense::init(w[0], w[1], false, rng)).collect();
        layers[0].sparse_input = sparse_input;
        Ok(Mlp { layers, activation })
    }

    pub fn dims(&self) -> Vec<usize> {
        let mut dims = vec![self.layers[0].fan_in()];
        dims.extend(self.layers.iter().map(Dense::fan_out));
        dims
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].fan_in()
    }

    pub fn output_width(&self) -> usize {
        self.layers.last().map(Dense::fan_out).unwrap_or(0)
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    pub fn forward(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let last = self.layers.len() - 1;
        let mut h = self.layers[0].forward(x);
        if last > 0 {
            self.activation.apply(&mut h);
        }
        for (i, layer) in self.layers.iter().enumerate().skip(1) {
            h = layer.forward(h.view());
            if i < last {
                self.activation.apply(&mut h);
            }
        }
        h
    }

    pub fn forward_cached(&self, x: Array2<f64>) -> (Array2<f64>, MlpCache) {
        let last = self.layers.len() - 1;
        let mut inputs = Vec::with_capacity(self.layers.len());
        inputs.push(x);
        for (i, layer) in self.layers.iter().enumerate() {
            let mut h = layer.forward(inputs[i].view());
            if i < last {
                self.activation.apply(&mut h);
                inputs.push(h);
            } else {
                return (h, MlpCache { inputs });
            }
        }
        unreachable!("mlp has at least one layer")
    }

    /// Accumulate gradients for `d_out` into `grad`; returns the input gradient
    /// when requested.
    pub fn backward(
        &self,
        cache: &MlpCache,
        d_out: Array2<f64>,
        grad: &mut Mlp,
        want_input_grad: bool,
    ) -> Option<Array2<f64>> {
        let mut delta = d_out;
        for i in (0..self.layers.len()).rev() {
            let need = i > 0 || want_input_grad;
            let d_in = self.layers[i].backward(cache.inputs[i].view(), &delta, &mut grad.layers[i], need);
            match d_in {
                Some(mut d) if i > 0 => {
                    self.activation.backprop(&cache.inputs[i], &mut d);
                    delta = d;
                }
                other => return other,
            }
        }
        None
    }

    pub fn zeros_like(&self) -> Mlp {
        Mlp { layers: self.layers.iter().map(Dense::zeros_like).collect(), activation: self.activation }
    }

    pub fn tensors(&self) -> Vec<&[f64]> {
        self.layers.iter().flat_map(Dense::tensors).collect()
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers.iter_mut().flat_map(Dense::tensors_mut).collect()
    }

    /// `self ← (1-τ)·self + τ·other`, parameter by parameter.
    pub fn soft_update_from(&mut self, other: &Mlp, tau: f64) {
        for (dst, src) in self.tensors_mut().into_iter().zip(other.tensors()) {
            for (d, &s) in dst.iter_mut().zip(src) {
                *d = (1.0 - tau) * *d + tau * s;
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|x| x.is_finite()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use ndarray::array;

    #[test]
    fn sparse_and_dense_paths_agree() {
        let mut rng = seeded(1);
        let mut layer = Dense::init(6, 4, false, &mut rng);
        let x = array![[0.0, 1.0, 0.0, 0.0, 0.5, 0.0], [0.0, 0.0, 0.0, 0.0, 0.0, 0.0]];
        let dense = layer.forward(x.view());
        layer.sparse_input = true;
        let sparse = layer.forward(x.view());
        for (a, b) in dense.iter().zip(sparse.iter()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn soft_update_is_exact_blend() {
        let mut rng = seeded(2);
        let online = Mlp::new(&[3, 4, 2], Activation::Relu, false, &mut rng).unwrap();
        let mut target = Mlp::new(&[3, 4, 2], Activation::Relu, false, &mut rng).unwrap();
        let old = target.clone();
        target.soft_update_from(&online, 0.005);
        for ((t, o), n) in old.tensors().iter().zip(online.tensors()).zip(target.tensors()) {
            for ((&t, &o), &n) in t.iter().zip(o).zip(n) {
                assert_eq!(n, (1.0 - 0.005) * t + 0.005 * o);
            }
        }
    }

    #[test]
    fn rejects_degenerate_dims() {
        let mut rng = seeded(0);
        assert!(Mlp::new(&[3], Activation::Tanh, false, &mut rng).is_err());
        assert!(Mlp::new(&[3, 0, 2], Activation::Tanh, false, &mut rng).is_err());
    }
}
