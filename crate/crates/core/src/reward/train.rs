use ndarray::Array2;
use rand::Rng as _;

use super::handle::{EpochMetrics, RewardModelHandle};
use crate::codec::{normalized_distance, TimeIndexPair, TwoHotCodec};
use crate::env::{Frame, Trajectory};
use crate::error::{Error, Result};
use crate::nn::{cross_entropy_rows, stack_frames, AdamConfig, OptimizerState, ProgressModel, ProgressShape};
use crate::rng::{component_rng, Rng};
use crate::sampling::{sample_pair, PairSamplerConfig, DEFAULT_LAMBDA};

/// Component removals studied in the ablation matrix.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct Ablations {
    /// Drop backward pairs; targets lie in (0, 1].
    pub forward_only: bool,
    /// Uniform instead of exponentially weighted intervals.
    pub uniform_intervals: bool,
    /// Scalar head trained by squared error instead of two-hot cross-entropy.
    pub direct_regression: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RewardTrainConfig {
    pub epochs: usize,
    pub pairs_per_epoch: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub lambda: f64,
    pub bins: usize,
    pub ablations: Ablations,
    pub rng_seed: u64,
    pub hidden: Vec<usize>,
    pub embedding: usize,
    /// Size of the fixed pair set scored after every epoch.
    pub validation_pairs: usize,
}

impl Default for RewardTrainConfig {
    fn default() -> Self {
        RewardTrainConfig {
            epochs: 100,
            pairs_per_epoch: 10_000,
            batch_size: 16,
            learning_rate: 1e-3,
            lambda: DEFAULT_LAMBDA,
            bins: 20,
            ablations: Ablations::default(),
            rng_seed: 0,
            hidden: vec![128, 128],
            embedding: 64,
            validation_pairs: 512,
        }
    }
}

impl RewardTrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.pairs_per_epoch == 0 || self.batch_size == 0 {
            return Err(Error::Config("epochs, pairs_per_epoch and batch_size must be positive".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!("learning rate {} must be positive", self.learning_rate)));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::Config(format!("lambda {} must be positive", self.lambda)));
        }
        if self.bins < 2 {
            return Err(Error::Config(format!("need at least 2 bins, got {}", self.bins)));
        }
        if self.embedding == 0 || self.hidden.contains(&0) {
            return Err(Error::Config("layer widths must be positive".into()));
        }
        Ok(())
    }

    pub fn sampler(&self) -> PairSamplerConfig {
        PairSamplerConfig {
            lambda: self.lambda,
            negative_sampling: !self.ablations.forward_only,
            uniform_intervals: self.ablations.uniform_intervals,
            rng_seed: self.rng_seed,
        }
    }

    fn outputs(&self) -> usize {
        if self.ablations.direct_regression {
            1
        } else {
            self.bins
        }
    }
}

/// Draws training pairs: a trajectory uniformly, then a pair within it.
pub struct PairBatcher {
    sampler: PairSamplerConfig,
    rng: Rng,
}

impl PairBatcher {
    pub fn new(sampler: PairSamplerConfig, rng: Rng) -> Self {
        PairBatcher { sampler, rng }
    }

    pub fn next_pair(&mut self, demos: &[Trajectory]) -> Result<(usize, TimeIndexPair)> {
        let t = self.rng.gen_range(0..demos.len());
        let pair = sample_pair(demos[t].len(), &self.sampler, &mut self.rng)?;
        Ok((t, pair))
    }
}

struct Batch {
    first: Array2<f64>,
    second: Array2<f64>,
    targets: Array2<f64>,
}

fn assemble(demos: &[Trajectory], pairs: &[(usize, TimeIndexPair)], codec: Option<&TwoHotCodec>) -> Result<Batch> {
    let first: Vec<&Frame> = pairs.iter().map(|&(t, p)| &demos[t].frames[p.u - 1]).collect();
    let second: Vec<&Frame> = pairs.iter().map(|&(t, p)| &demos[t].frames[p.v - 1]).collect();
    let width = codec.map_or(1, TwoHotCodec::bins);
    let mut targets = Array2::zeros((pairs.len(), width));
    for (mut row, &(_, p)) in targets.outer_iter_mut().zip(pairs) {
        let d = normalized_distance(p)?;
        match codec {
            Some(c) => row.assign(&ndarray::Array1::from(c.encode(d)?)),
            None => row[0] = d,
        }
    }
    Ok(Batch { first: stack_frames(&first), second: stack_frames(&second), targets })
}

/// Mean loss and its gradient with respect to the head outputs.
fn loss_and_grad(outputs: &Array2<f64>, targets: &Array2<f64>, regression: bool) -> (f64, Array2<f64>) {
    if regression {
        let n = outputs.nrows() as f64;
        let diff = outputs - targets;
        let loss = diff.iter().map(|d| d * d).sum::<f64>() / n;
        (loss, diff * (2.0 / n))
    } else {
        cross_entropy_rows(outputs, targets)
    }
}

fn evaluate(model: &ProgressModel, demos: &[Trajectory], pairs: &[(usize, TimeIndexPair)], codec: Option<&TwoHotCodec>) -> Result<f64> {
    let mut total = 0.0;
    for chunk in pairs.chunks(256) {
        let batch = assemble(demos, chunk, codec)?;
        let out = model.predict_batch(batch.first.view(), batch.second.view());
        let (loss, _) = loss_and_grad(&out, &batch.targets, codec.is_none());
        total += loss * chunk.len() as f64;
    }
    Ok(total / pairs.len().max(1) as f64)
}

fn check_demos(demos: &[Trajectory], what: &str) -> Result<()> {
    if demos.is_empty() {
        return Err(Error::invalid(format!("no {what} trajectories")));
    }
    if let Some(t) = demos.iter().find(|t| t.len() < 2) {
        return Err(Error::invalid(format!("{what} trajectory with {} frames; need at least 2", t.len())));
    }
    let width = demos[0].frames[0].len();
    if demos.iter().flat_map(|t| &t.frames).any(|f| f.len() != width) {
        return Err(Error::invalid(format!("{what} frames differ in size")));
    }
    Ok(())
}

/// Train a progress model on `demos` and freeze it.
///
/// When `validation` is given, the per-epoch held-out loss is measured on a
/// fixed pair set drawn from it; otherwise from the training demos.
pub fn train_reward_model(
    demos: &[Trajectory],
    validation: Option<&[Trajectory]>,
    cfg: &RewardTrainConfig,
) -> Result<RewardModelHandle> {
    cfg.validate()?;
    check_demos(demos, "training")?;
    let validation = validation.unwrap_or(demos);
    check_demos(validation, "validation")?;

    let regression = cfg.ablations.direct_regression;
    let codec = if regression { None } else { Some(TwoHotCodec::new(cfg.bins)?) };
    let shape = ProgressShape {
        input_width: demos[0].frames[0].len(),
        hidden: cfg.hidden.clone(),
        embedding: cfg.embedding,
        outputs: cfg.outputs(),
    };
    let mut model = ProgressModel::new(&shape, &mut component_rng(cfg.rng_seed, "reward:init"))?;
    let mut optimizer = OptimizerState::for_tensors(AdamConfig::with_lr(cfg.learning_rate), &model.tensors());

    let mut held = PairBatcher::new(cfg.sampler(), component_rng(cfg.rng_seed, "reward:validation"));
    let held_pairs = (0..cfg.validation_pairs).map(|_| held.next_pair(validation)).collect::<Result<Vec<_>>>()?;

    let mut batcher = PairBatcher::new(cfg.sampler(), component_rng(cfg.rng_seed, "reward:pairs"));
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut pairs = Vec::with_capacity(cfg.batch_size);
    for epoch in 1..=cfg.epochs {
        let mut seen = 0;
        let mut loss_sum = 0.0;
        while seen < cfg.pairs_per_epoch {
            let n = cfg.batch_size.min(cfg.pairs_per_epoch - seen);
            pairs.clear();
            for _ in 0..n {
                pairs.push(batcher.next_pair(demos)?);
            }
            let batch = assemble(demos, &pairs, codec.as_ref())?;
            let (out, cache) = model.forward_pairs(batch.first.view(), batch.second.view());
            let (loss, d_out) = loss_and_grad(&out, &batch.targets, regression);
            if !loss.is_finite() {
                return Err(Error::Diverged(format!("non-finite loss at epoch {epoch}, pair {seen}")));
            }
            let grad = model.backward_pairs(&cache, &d_out);
            optimizer.step(model.tensors_mut(), grad.tensors())?;
            loss_sum += loss * n as f64;
            seen += n;
        }
        let train_loss = loss_sum / seen as f64;
        let heldout_loss = evaluate(&model, validation, &held_pairs, codec.as_ref())?;
        if !train_loss.is_finite() || !heldout_loss.is_finite() {
            return Err(Error::Diverged(format!("non-finite loss after epoch {epoch}")));
        }
        history.push(EpochMetrics { epoch, train_loss, heldout_loss });
    }
    RewardModelHandle::freeze(model, history)
}
