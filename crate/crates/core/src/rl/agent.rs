use std::path::Path;
use ndarray::Array2;
use rand::Rng as _;

use super::policy::{evaluate_policy, GreedyPolicy};
use super::replay::{ReplayBatch, ReplayBuffer, RlTransition};
use super::{combined_reward, RlConfig};
use crate::env::{Action, Frame, GridWorld, CHANNELS};
use crate::error::{Error, Result};
use crate::io::write_atomic;
use crate::nn::{huber, read_checkpoint, stack_frames, write_checkpoint, Activation, AdamConfig, Mlp, OptimizerState, QNET_MAGIC};
use crate::reward::ProgressRewarder;
use crate::rng::{component_rng, derive_indexed, derive_seed};

/// Online and target action-value networks of identical shape.
#[derive(Debug, Clone, PartialEq)]
pub struct QNetwork {
    pub online: Mlp,
    pub target: Mlp,
}

impl QNetwork {
    pub fn new(input_width: usize, hidden: &[usize], seed: u64) -> Result<Self> {
        let mut dims = vec![input_width];
        dims.extend_from_slice(hidden);
        dims.push(Action::COUNT);
        let online = Mlp::new(&dims, Activation::Relu, true, &mut component_rng(seed, "rl:qnet-init"))?;
        Ok(QNetwork { target: online.clone(), online })
    }

    pub fn from_online(online: Mlp) -> Result<Self> {
        if online.output_width() != Action::COUNT {
            return Err(Error::invalid(format!("Q-network must output {} values", Action::COUNT)));
        }
        Ok(QNetwork { target: online.clone(), online })
    }

    pub fn input_width(&self) -> usize {
        self.online.input_width()
    }

    pub fn q_values(&self, frame: &Frame) -> Result<Vec<f64>> {
        if frame.len() != self.input_width() {
            return Err(Error::invalid(format!("frame has {} values, network expects {}", frame.len(), self.input_width())));
        }
        Ok(self.online.forward(stack_frames(&[frame]).view()).into_raw_vec_and_offset().0)
    }

    pub fn greedy_action(&self, frame: &Frame) -> Result<Action> {
        Ok(Action::ALL[argmax(&self.q_values(frame)?)])
    }

    /// Double-Q targets `R + γ^k · Q_target(s', argmax_a Q_online(s', a))`.
    pub fn targets(&self, batch: &ReplayBatch) -> Vec<f64> {
        let q_online = self.online.forward(batch.next_observations.view());
        let q_target = self.target.forward(batch.next_observations.view());
        (0..batch.rewards.len())
            .map(|i| {
                let (reward, discount) = (batch.rewards[i], batch.bootstrap_discounts[i]);
                if discount == 0.0 {
                    return reward;
                }
                let row = q_online.row(i);
                let best = argmax(row.as_slice().expect("standard layout"));
                reward + discount * q_target[[i, best]]
            })
            .collect()
    }

    /// One Huber-loss gradient step on the online network, then a soft
    /// target update. Returns the batch loss.
    pub fn update(&mut self, batch: &ReplayBatch, optimizer: &mut OptimizerState, tau: f64) -> Result<f64> {
        let targets = self.targets(batch);
        let (q, cache) = self.online.forward_cached(batch.observations.clone());
        let n = targets.len() as f64;
        let mut d_out = Array2::zeros(q.raw_dim());
        let mut loss = 0.0;
        for (i, (action, y)) in batch.actions.iter().zip(&targets).enumerate() {
            let a = action.index();
            let (l, g) = huber(q[[i, a]] - y);
            loss += l / n;
            d_out[[i, a]] = g / n;
        }
        if !loss.is_finite() {
            return Ok(loss);
        }
        let mut grad = self.online.zeros_like();
        self.online.backward(&cache, d_out, &mut grad, false);
        optimizer.step(self.online.tensors_mut(), grad.tensors())?;
        self.target.soft_update_from(&self.online, tau);
        Ok(loss)
    }

    /// Saves the online network.
    pub fn save(&self, path: &Path) -> Result<u64> {
        write_checkpoint(path, &self.online.to_checkpoint(QNET_MAGIC))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let online = Mlp::from_checkpoint(&read_checkpoint(path, QNET_MAGIC)?, Activation::Relu)?;
        QNetwork::from_online(online)
    }
}

/// Index of the largest value; the first one on ties.
fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub step: usize,
    pub success_rate: f64,
    /// Mean combined-reward return of training episodes finished since the
    /// previous point (0 when none finished).
    pub mean_episode_return: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LearningCurve {
    pub points: Vec<CurvePoint>,
}

impl LearningCurve {
    pub fn final_success(&self) -> Option<f64> {
        self.points.last().map(|p| p.success_rate)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,success_rate,mean_episode_return\n");
        for p in &self.points {
            out.push_str(&format!("{},{},{}\n", p.step, p.success_rate, p.mean_episode_return));
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_csv().as_bytes())
    }
}

#[derive(Debug, Clone)]
pub struct TrainedPolicy {
    pub q: QNetwork,
    pub curve: LearningCurve,
    pub episodes: usize,
}

/// Train a Q-network on `world` with the combined reward; `rewarder = None`
/// is the sparse-only baseline.
pub fn train_policy<R: ProgressRewarder + ?Sized>(
    world: &GridWorld,
    rewarder: Option<&R>,
    cfg: &RlConfig,
) -> Result<TrainedPolicy> {
    cfg.validate()?;
    let mut q = QNetwork::new(world.frame_len(), &cfg.hidden, cfg.rng_seed)?;
    let mut optimizer = OptimizerState::for_tensors(AdamConfig::with_lr(cfg.learning_rate), &q.online.tensors());
    let mut replay = ReplayBuffer::new(cfg.replay_capacity, (CHANNELS, world.height, world.width));
    let mut explore = component_rng(cfg.rng_seed, "rl:explore");
    let mut sampler = component_rng(cfg.rng_seed, "rl:replay");
    let eval_seed = derive_seed(cfg.rng_seed, "rl:eval");

    let mut curve = LearningCurve::default();
    let mut episode = 0u64;
    let mut returns_since_eval = Vec::new();
    let mut state = world.reset(derive_indexed(cfg.rng_seed, "rl:train-reset", episode));
    let mut frame = world.render(&state);
    let mut episode_return = 0.0;

    for step in 1..=cfg.max_steps {
        let action = if explore.gen::<f64>() < cfg.epsilon(step - 1) {
            Action::ALL[explore.gen_range(0..Action::COUNT)]
        } else {
            q.greedy_action(&frame)?
        };
        let out = world.step(&state, action)?;
        let reward = combined_reward(rewarder, &frame, &out.frame, out.success, cfg.alpha)?;
        episode_return += reward;
        let transition = RlTransition {
            observation: frame,
            action,
            reward,
            next_observation: out.frame,
            done: out.success,
            episode_end: out.done,
        };
        replay.push(&transition)?;

        if out.done {
            returns_since_eval.push(episode_return);
            episode_return = 0.0;
            episode += 1;
            state = world.reset(derive_indexed(cfg.rng_seed, "rl:train-reset", episode));
            frame = world.render(&state);
        } else {
            state = out.state;
            frame = transition.next_observation;
        }

        if step >= cfg.learning_starts && step % cfg.train_every == 0 && replay.len() >= cfg.batch_size {
            let batch = replay.sample(cfg.batch_size, cfg.n_step, cfg.gamma, &mut sampler);
            let loss = q.update(&batch, &mut optimizer, cfg.tau)?;
            if !loss.is_finite() || !q.online.is_finite() {
                return Err(Error::Diverged(format!(
                    "Q-learning loss {loss} at step {step} (episode {episode}, replay {}, epsilon {:.3})",
                    replay.len(),
                    cfg.epsilon(step)
                )));
            }
        }

        if step % cfg.eval_interval == 0 || step == cfg.max_steps {
            let success_rate = evaluate_policy(&mut GreedyPolicy(&q), world, cfg.eval_episodes, eval_seed)?;
            let mean_episode_return = if returns_since_eval.is_empty() {
                0.0
            } else {
                returns_since_eval.iter().sum::<f64>() / returns_since_eval.len() as f64
            };
            returns_since_eval.clear();
            curve.points.push(CurvePoint { step, success_rate, mean_episode_return });
        }
    }
    Ok(TrainedPolicy { q, curve, episodes: episode as usize })
}
