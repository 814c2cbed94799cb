use ndarray::{concatenate, s, Array2, ArrayView2, Axis};

use super::{cross_entropy_rows, Activation, Dense, Mlp, MlpCache};
use crate::env::Frame;
use crate::error::{Error, Result};
use crate::rng::Rng;

/// Layer widths of a [`ProgressModel`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProgressShape {
    pub input_width: usize,
    pub hidden: Vec<usize>,
    pub embedding: usize,
    /// Number of logits (two-hot bins), or 1 for a scalar regression head.
    pub outputs: usize,
}

impl ProgressShape {
    /// Two tanh layers of 128, a 64-wide embedding and `outputs` logits.
    pub fn toy(input_width: usize, outputs: usize) -> Self {
        ProgressShape { input_width, hidden: vec![128, 128], embedding: 64, outputs }
    }

    pub fn encoder_dims(&self) -> Vec<usize> {
        let mut dims = vec![self.input_width];
        dims.extend(&self.hidden);
        dims.push(self.embedding);
        dims
    }
}

/// Shared frame encoder followed by a linear head over the concatenated
/// pair embedding `[encode(a) | encode(b)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProgressModel {
    pub encoder: Mlp,
    pub head: Dense,
}

/// Forward-pass state needed by [`ProgressModel::backward_pairs`].
#[derive(Debug, Clone)]
pub struct PairCache {
    encoder: MlpCache,
    head_input: Array2<f64>,
    pairs: usize,
}

impl ProgressModel {
    pub fn new(shape: &ProgressShape, rng: &mut Rng) -> Result<Self> {
        if shape.outputs == 0 || shape.embedding == 0 {
            return Err(Error::invalid("progress model needs non-zero embedding and outputs"));
        }
        let encoder = Mlp::new(&shape.encoder_dims(), Activation::Tanh, true, rng)?;
        let head = Dense::init(2 * shape.embedding, shape.outputs, true, rng);
        Ok(ProgressModel { encoder, head })
    }

    pub fn shape(&self) -> ProgressShape {
        let dims = self.encoder.dims();
        ProgressShape {
            input_width: dims[0],
            hidden: dims[1..dims.len() - 1].to_vec(),
            embedding: self.embedding_width(),
            outputs: self.outputs(),
        }
    }

    pub fn input_width(&self) -> usize {
        self.encoder.input_width()
    }

    pub fn embedding_width(&self) -> usize {
        self.encoder.output_width()
    }

    pub fn outputs(&self) -> usize {
        self.head.fan_out()
    }

    pub fn param_count(&self) -> usize {
        self.encoder.param_count() + self.head.weights.len() + self.head.bias.len()
    }

    fn check_frame(&self, frame: &Frame) -> Result<()> {
        if frame.len() != self.input_width() {
            return Err(Error::invalid(format!(
                "frame has {} values, model expects {}",
                frame.len(),
                self.input_width()
            )));
        }
        Ok(())
    }

    pub fn encode_frame(&self, frame: &Frame) -> Result<Vec<f64>> {
        self.check_frame(frame)?;
        let x = stack_frames(&[frame]);
        Ok(self.encoder.forward(x.view()).into_raw_vec_and_offset().0)
    }

    pub fn predict_logits(&self, first: &Frame, second: &Frame) -> Result<Vec<f64>> {
        self.check_frame(first)?;
        self.check_frame(second)?;
        let logits = self.predict_batch(stack_frames(&[first]).view(), stack_frames(&[second]).view());
        Ok(logits.into_raw_vec_and_offset().0)
    }

    /// Embeddings for a batch of flattened frames (one per row).
    pub fn embed_rows(&self, frames: ArrayView2<f64>) -> Array2<f64> {
        self.encoder.forward(frames)
    }

    /// Head outputs for already-computed embeddings.
    pub fn head_from_embeddings(&self, first: ArrayView2<f64>, second: ArrayView2<f64>) -> Array2<f64> {
        let joined = concatenate(Axis(1), &[first, second]).expect("matching embedding widths");
        self.head.forward(joined.view())
    }

    pub fn predict_batch(&self, first: ArrayView2<f64>, second: ArrayView2<f64>) -> Array2<f64> {
        let n = first.nrows();
        let both = concatenate(Axis(0), &[first, second]).expect("matching input widths");
        let emb = self.encoder.forward(both.view());
        self.head_from_embeddings(emb.slice(s![..n, ..]), emb.slice(s![n.., ..]))
    }

    /// Batched forward pass. Both members of every pair go through the same
    /// encoder in one stacked call.
    pub fn forward_pairs(&self, first: ArrayView2<f64>, second: ArrayView2<f64>) -> (Array2<f64>, PairCache) {
        let pairs = first.nrows();
        let both = concatenate(Axis(0), &[first, second]).expect("matching input widths");
        let (emb, encoder) = self.encoder.forward_cached(both);
        let head_input = concatenate(Axis(1), &[emb.slice(s![..pairs, ..]), emb.slice(s![pairs.., ..])])
            .expect("matching embedding widths");
        let out = self.head.forward(head_input.view());
        (out, PairCache { encoder, head_input, pairs })
    }

    /// Parameter gradients for upstream `d_out` (one row per pair).
    pub fn backward_pairs(&self, cache: &PairCache, d_out: &Array2<f64>) -> ProgressModel {
        let mut grad = self.zeros_like();
        let d_joined = self
            .head
            .backward(cache.head_input.view(), d_out, &mut grad.head, true)
            .expect("input gradient requested");
        let e = self.embedding_width();
        let d_emb = concatenate(
            Axis(0),
            &[d_joined.slice(s![.., ..e]), d_joined.slice(s![.., e..])],
        )
        .expect("matching widths");
        debug_assert_eq!(d_emb.nrows(), 2 * cache.pairs);
        self.encoder.backward(&cache.encoder, d_emb, &mut grad.encoder, false);
        grad
    }

    /// Cross-entropy loss of one pair against `target` and the exact gradient.
    pub fn backward(&self, first: &Frame, second: &Frame, target: &[f64]) -> Result<(f64, ProgressModel)> {
        self.check_frame(first)?;
        self.check_frame(second)?;
        if target.len() != self.outputs() {
            return Err(Error::invalid(format!(
                "target has {} entries, model has {} outputs",
                target.len(),
                self.outputs()
            )));
        }
        let a = stack_frames(&[first]);
        let b = stack_frames(&[second]);
        let (logits, cache) = self.forward_pairs(a.view(), b.view());
        let t = Array2::from_shape_vec((1, target.len()), target.to_vec()).expect("shape");
        let (loss, d_logits) = cross_entropy_rows(&logits, &t);
        Ok((loss, self.backward_pairs(&cache, &d_logits)))
    }

    pub fn zeros_like(&self) -> ProgressModel {
        ProgressModel { encoder: self.encoder.zeros_like(), head: self.head.zeros_like() }
    }

    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut t = self.encoder.tensors();
        t.extend(self.head.tensors());
        t
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut t = self.encoder.tensors_mut();
        t.extend(self.head.tensors_mut());
        t
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|x| x.is_finite()))
    }
}

/// Stack frames as rows of an `f64` matrix.
pub fn stack_frames(frames: &[&Frame]) -> Array2<f64> {
    let width = frames.first().map_or(0, |f| f.len());
    let mut out = Array2::zeros((frames.len(), width));
    for (mut row, frame) in out.outer_iter_mut().zip(frames) {
        for (dst, &v) in row.iter_mut().zip(frame.values()) {
            *dst = f64::from(v);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::Frame;
    use crate::rng::seeded;
    use rand::Rng as _;

    fn tiny_shape() -> ProgressShape {
        ProgressShape { input_width: 12, hidden: vec![6], embedding: 3, outputs: 4 }
    }

    fn random_frame(rng: &mut Rng) -> Frame {
        Frame::from_values(3, 2, 2, (0..12).map(|_| rng.gen_range(0.0..1.0f32)).collect()).unwrap()
    }

    #[test]
    fn zero_final_encoder_layer_gives_zero_embedding() {
        let mut rng = seeded(0);
        let mut model = ProgressModel::new(&tiny_shape(), &mut rng).unwrap();
        let last = model.encoder.layers.last_mut().unwrap();
        last.weights.fill(0.0);
        last.bias.fill(0.0);
        let frame = random_frame(&mut rng);
        assert!(model.encode_frame(&frame).unwrap().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn zero_head_gives_zero_logits() {
        let mut rng = seeded(1);
        let mut model = ProgressModel::new(&tiny_shape(), &mut rng).unwrap();
        model.head.weights.fill(0.0);
        let (a, b) = (random_frame(&mut rng), random_frame(&mut rng));
        assert!(model.predict_logits(&a, &b).unwrap().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn concatenation_order_is_first_then_second() {
        let mut rng = seeded(2);
        let mut model = ProgressModel::new(&tiny_shape(), &mut rng).unwrap();
        // Head reads only the first embedding's coordinate 0 into logit 0 and
        // the second embedding's coordinate 0 into logit 1.
        model.head.weights.fill(0.0);
        model.head.weights[[0, 0]] = 1.0;
        model.head.weights[[3, 1]] = 1.0;
        let (a, b) = (random_frame(&mut rng), random_frame(&mut rng));
        let ea = model.encode_frame(&a).unwrap();
        let eb = model.encode_frame(&b).unwrap();
        let logits = model.predict_logits(&a, &b).unwrap();
        assert!((logits[0] - ea[0]).abs() < 1e-14);
        assert!((logits[1] - eb[0]).abs() < 1e-14);
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let mut rng = seeded(3);
        let model = ProgressModel::new(&tiny_shape(), &mut rng).unwrap();
        let wrong = Frame::zeros(3, 3, 3);
        assert!(model.encode_frame(&wrong).is_err());
        let ok = random_frame(&mut rng);
        assert!(model.predict_logits(&ok, &wrong).is_err());
        assert!(model.backward(&ok, &ok, &[1.0]).is_err());
    }

    #[test]
    fn zero_gradient_at_stationary_residual() {
        let mut rng = seeded(4);
        let model = ProgressModel::new(&tiny_shape(), &mut rng).unwrap();
        let (a, b) = (random_frame(&mut rng), random_frame(&mut rng));
        let logits = model.predict_logits(&a, &b).unwrap();
        let target = crate::codec::softmax(&logits);
        let (_, grad) = model.backward(&a, &b, &target).unwrap();
        let max = grad.tensors().iter().flat_map(|t| t.iter()).fold(0.0f64, |m, x| m.max(x.abs()));
        assert!(max < 1e-12, "max gradient {max}");
    }

    #[test]
    fn identical_frames_share_embedding_perturbation() {
        let mut rng = seeded(5);
        let mut model = ProgressModel::new(&tiny_shape(), &mut rng).unwrap();
        let frame = random_frame(&mut rng);
        let before = model.encode_frame(&frame).unwrap();
        model.encoder.layers[0].weights[[1, 2]] += 0.1;
        let x = stack_frames(&[&frame, &frame]);
        let emb = model.embed_rows(x.view());
        assert_eq!(emb.row(0), emb.row(1));
        assert_ne!(emb.row(0).to_vec(), before);
    }
}
