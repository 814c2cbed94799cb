use std::fmt::Write as _;
use std::path::Path;

use ndarray::s;

use super::ProgressRewarder;
use crate::codec::{softmax, TwoHotCodec};
use crate::env::Frame;
use crate::error::{Error, Result};
use crate::io::write_atomic;
use crate::nn::{read_checkpoint, stack_frames, write_checkpoint, Checkpoint, ProgressModel, PROGRESS_MAGIC};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub train_loss: f64,
    pub heldout_loss: f64,
}

/// A trained progress model, frozen: no method mutates its parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardModelHandle {
    model: ProgressModel,
    /// `None` for the scalar regression head.
    codec: Option<TwoHotCodec>,
    history: Vec<EpochMetrics>,
}

impl RewardModelHandle {
    pub(crate) fn freeze(model: ProgressModel, history: Vec<EpochMetrics>) -> Result<Self> {
        let codec = match model.outputs() {
            1 => None,
            k => Some(TwoHotCodec::new(k)?),
        };
        if !model.is_finite() {
            return Err(Error::Diverged("non-finite parameters in progress model".into()));
        }
        Ok(RewardModelHandle { model, codec, history })
    }

    /// Wrap an arbitrary model (untrained baselines, tests).
    pub fn from_model(model: ProgressModel) -> Result<Self> {
        Self::freeze(model, Vec::new())
    }

    pub fn is_frozen(&self) -> bool {
        true
    }

    pub fn model(&self) -> &ProgressModel {
        &self.model
    }

    pub fn codec(&self) -> Option<&TwoHotCodec> {
        self.codec.as_ref()
    }

    pub fn is_regression(&self) -> bool {
        self.codec.is_none()
    }

    pub fn history(&self) -> &[EpochMetrics] {
        &self.history
    }

    fn decode_row(&self, row: &[f64]) -> Result<f64> {
        match &self.codec {
            Some(codec) => codec.decode(row),
            None => {
                let y = row[0];
                if !y.is_finite() {
                    return Err(Error::invalid("non-finite regression output"));
                }
                Ok(y.clamp(-1.0, 1.0))
            }
        }
    }

    /// Decoded temporal distance predicted for `(from, to)`.
    pub fn infer_reward(&self, from: &Frame, to: &Frame) -> Result<f64> {
        let logits = self.model.predict_logits(from, to)?;
        self.decode_row(&logits)
    }

    /// Bin probabilities for a pair (two-hot models only).
    pub fn bin_probabilities(&self, from: &Frame, to: &Frame) -> Result<Vec<f64>> {
        if self.codec.is_none() {
            return Err(Error::invalid("regression head has no bins"));
        }
        Ok(softmax(&self.model.predict_logits(from, to)?))
    }

    /// Rewards for many `(from, to)` pairs in one batched pass.
    pub fn infer_batch(&self, pairs: &[(&Frame, &Frame)]) -> Result<Vec<f64>> {
        if pairs.is_empty() {
            return Ok(Vec::new());
        }
        let width = self.model.input_width();
        if pairs.iter().any(|(a, b)| a.len() != width || b.len() != width) {
            return Err(Error::invalid(format!("frame width differs from model input width {width}")));
        }
        let first: Vec<&Frame> = pairs.iter().map(|p| p.0).collect();
        let second: Vec<&Frame> = pairs.iter().map(|p| p.1).collect();
        let out = self.model.predict_batch(stack_frames(&first).view(), stack_frames(&second).view());
        out.outer_iter().map(|row| self.decode_row(row.as_slice().expect("contiguous"))).collect()
    }

    pub fn save(&self, path: &Path) -> Result<u64> {
        write_checkpoint(path, &self.model.to_checkpoint())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let ckpt = read_checkpoint(path, PROGRESS_MAGIC)?;
        Self::from_checkpoint(&ckpt)
    }

    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self> {
        let model = ProgressModel::from_checkpoint(ckpt)?;
        Self::freeze(model, Vec::new()).map_err(|e| Error::Corrupt(e.to_string()))
    }

    /// Loss history as `epoch,train_loss,heldout_loss` text.
    pub fn metrics_csv(&self) -> String {
        let mut out = String::from("epoch,train_loss,heldout_loss\n");
        for m in &self.history {
            let _ = writeln!(out, "{},{:.9},{:.9}", m.epoch, m.train_loss, m.heldout_loss);
        }
        out
    }

    pub fn write_metrics(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.metrics_csv().as_bytes())
    }
}

impl ProgressRewarder for RewardModelHandle {
    fn step_reward(&self, from: &Frame, to: &Frame) -> Result<f64> {
        self.infer_reward(from, to)
    }

    /// Each frame is encoded once; the head runs on consecutive embeddings.
    fn adjacent_rewards(&self, frames: &[Frame]) -> Result<Vec<f64>> {
        if frames.len() < 2 {
            return Ok(Vec::new());
        }
        let width = self.model.input_width();
        if frames.iter().any(|f| f.len() != width) {
            return Err(Error::invalid(format!("frame width differs from model input width {width}")));
        }
        let refs: Vec<&Frame> = frames.iter().collect();
        let emb = self.model.embed_rows(stack_frames(&refs).view());
        let n = frames.len();
        let out = self.model.head_from_embeddings(emb.slice(s![..n - 1, ..]), emb.slice(s![1.., ..]));
        out.outer_iter().map(|row| self.decode_row(row.as_slice().expect("contiguous"))).collect()
    }
}
