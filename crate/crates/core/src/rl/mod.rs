//! Double-Q learning with n-step replay on the combined reward
//! `r = r_progress + α · success`.

mod agent;
mod policy;
mod replay;

use crate::env::Frame;
use crate::error::{Error, Result};
use crate::reward::ProgressRewarder;

pub use agent::{train_policy, CurvePoint, LearningCurve, QNetwork, TrainedPolicy};
pub use policy::{evaluate_policy, ExpertPolicy, GreedyPolicy, Policy, RandomPolicy};
pub use replay::{NStepSample, ReplayBatch, ReplayBuffer, RlTransition};

#[derive(Debug, Clone, PartialEq)]
pub struct RlConfig {
    pub gamma: f64,
    pub n_step: usize,
    pub replay_capacity: usize,
    pub batch_size: usize,
    pub tau: f64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    pub epsilon_decay_steps: usize,
    /// Weight of the sparse success indicator.
    pub alpha: f64,
    pub max_steps: usize,
    pub eval_interval: usize,
    pub eval_episodes: usize,
    pub learning_rate: f64,
    pub hidden: Vec<usize>,
    /// Environment steps collected before the first update.
    pub learning_starts: usize,
    /// One gradient update every `train_every` environment steps.
    pub train_every: usize,
    pub rng_seed: u64,
}

impl Default for RlConfig {
    fn default() -> Self {
        RlConfig {
            gamma: 0.99,
            n_step: 3,
            replay_capacity: 50_000,
            batch_size: 128,
            tau: 0.005,
            epsilon_start: 1.0,
            epsilon_end: 0.05,
            epsilon_decay_steps: 20_000,
            alpha: 1.0,
            max_steps: 50_000,
            eval_interval: 2_500,
            eval_episodes: 20,
            learning_rate: 1e-3,
            hidden: vec![256, 256],
            learning_starts: 1_000,
            train_every: 2,
            rng_seed: 0,
        }
    }
}

impl RlConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.gamma >= 0.0 && self.gamma < 1.0) {
            return bad(format!("gamma {} outside [0, 1)", self.gamma));
        }
        if self.n_step == 0 {
            return bad("n_step must be >= 1".into());
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return bad(format!("alpha {} must be >= 0", self.alpha));
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return bad(format!("tau {} outside (0, 1]", self.tau));
        }
        if !(0.0..=1.0).contains(&self.epsilon_start) || !(0.0..=1.0).contains(&self.epsilon_end) {
            return bad("epsilon values must lie in [0, 1]".into());
        }
        if self.replay_capacity == 0 || self.batch_size == 0 || self.max_steps == 0 {
            return bad("replay_capacity, batch_size and max_steps must be positive".into());
        }
        if self.eval_interval == 0 || self.eval_episodes == 0 || self.train_every == 0 {
            return bad("eval_interval, eval_episodes and train_every must be positive".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning rate {} must be positive", self.learning_rate));
        }
        if self.hidden.contains(&0) {
            return bad("hidden widths must be positive".into());
        }
        Ok(())
    }

    /// Linear decay from `epsilon_start` to `epsilon_end` over the decay window.
    pub fn epsilon(&self, step: usize) -> f64 {
        if self.epsilon_decay_steps == 0 || step >= self.epsilon_decay_steps {
            return self.epsilon_end;
        }
        let frac = step as f64 / self.epsilon_decay_steps as f64;
        self.epsilon_start + frac * (self.epsilon_end - self.epsilon_start)
    }
}

/// `r_progress(o_t, o_next) + α · success`; without a rewarder only the
/// sparse term remains.
pub fn combined_reward<R: ProgressRewarder + ?Sized>(
    rewarder: Option<&R>,
    from: &Frame,
    to: &Frame,
    success: bool,
    alpha: f64,
) -> Result<f64> {
    if !(alpha >= 0.0) {
        return Err(Error::invalid(format!("alpha {alpha} must be >= 0")));
    }
    let proxy = match rewarder {
        Some(r) => r.step_reward(from, to)?,
        None => 0.0,
    };
    Ok(proxy + if success { alpha } else { 0.0 })
}

/// `Σ_k γ^k r_k + (done ? 0 : γ^n · bootstrap)`.
pub fn n_step_return(rewards: &[f64], bootstrap: f64, gamma: f64, done: bool) -> Result<f64> {
    if rewards.is_empty() {
        return Err(Error::invalid("n-step return over zero rewards"));
    }
    let mut total = 0.0;
    let mut discount = 1.0;
    for r in rewards {
        total += discount * r;
        discount *= gamma;
    }
    if !done {
        total += discount * bootstrap;
    }
    Ok(total)
}
