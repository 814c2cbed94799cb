//! Progress-model training and its use as a frozen step-wise rewarder.

mod handle;
mod oracle;
mod train;

use crate::env::{Frame, Trajectory};
use crate::error::{Error, Result};

pub use handle::{EpochMetrics, RewardModelHandle};
pub use oracle::{ConstantRewarder, ProgressOracle};
pub use train::{train_reward_model, Ablations, PairBatcher, RewardTrainConfig};

/// Anything that scores the progress made between two observations.
pub trait ProgressRewarder {
    /// Reward for moving from `from` to `to`, in `[-1, 1]`.
    fn step_reward(&self, from: &Frame, to: &Frame) -> Result<f64>;

    /// Rewards for every adjacent pair of `frames`.
    fn adjacent_rewards(&self, frames: &[Frame]) -> Result<Vec<f64>> {
        frames.windows(2).map(|w| self.step_reward(&w[0], &w[1])).collect()
    }
}

impl<R: ProgressRewarder + ?Sized> ProgressRewarder for &R {
    fn step_reward(&self, from: &Frame, to: &Frame) -> Result<f64> {
        (**self).step_reward(from, to)
    }

    fn adjacent_rewards(&self, frames: &[Frame]) -> Result<Vec<f64>> {
        (**self).adjacent_rewards(frames)
    }
}

/// Cumulative progress along a trajectory, anchored at 0 on the first frame.
pub fn value_trace<R: ProgressRewarder + ?Sized>(rewarder: &R, traj: &Trajectory) -> Result<Vec<f64>> {
    if traj.len() < 2 {
        return Err(Error::invalid("value trace needs at least 2 frames"));
    }
    let rewards = rewarder.adjacent_rewards(&traj.frames)?;
    let mut values = Vec::with_capacity(traj.len());
    let mut acc = 0.0;
    values.push(acc);
    for r in rewards {
        acc += r;
        values.push(acc);
    }
    Ok(values)
}

/// Per-trajectory statistics of adjacent expert rewards against the ideal
/// per-step distance `1 / (T - 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRewardStats {
    pub horizon: usize,
    pub mean: f64,
    pub std_dev: f64,
    /// `mean / (1 / (T - 1))`.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRewardSummary {
    pub per_trajectory: Vec<StepRewardStats>,
    pub median_ratio: f64,
    pub mean_ratio: f64,
}

pub fn expert_step_reward_check<R: ProgressRewarder + ?Sized>(
    rewarder: &R,
    heldout: &[Trajectory],
) -> Result<StepRewardSummary> {
    if heldout.is_empty() {
        return Err(Error::invalid("no held-out trajectories"));
    }
    let mut per_trajectory = Vec::with_capacity(heldout.len());
    for traj in heldout {
        if traj.len() < 2 {
            return Err(Error::invalid("trajectory shorter than 2 frames"));
        }
        let rewards = rewarder.adjacent_rewards(&traj.frames)?;
        let n = rewards.len() as f64;
        let mean = rewards.iter().sum::<f64>() / n;
        let var = rewards.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n;
        let ideal = 1.0 / (traj.len() - 1) as f64;
        per_trajectory.push(StepRewardStats { horizon: traj.len(), mean, std_dev: var.sqrt(), ratio: mean / ideal });
    }
    let mut ratios: Vec<f64> = per_trajectory.iter().map(|s| s.ratio).collect();
    let mean_ratio = ratios.iter().sum::<f64>() / ratios.len() as f64;
    Ok(StepRewardSummary { per_trajectory, median_ratio: median(&mut ratios), mean_ratio })
}

pub(crate) fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{generate_demos, GridWorld, Task};

    #[test]
    fn constant_rewarder_trace() {
        let world = GridWorld::new(Task::Reach);
        let traj = &generate_demos(&world, 1, 0).unwrap()[0];
        let trace = value_trace(&ConstantRewarder(0.0), traj).unwrap();
        assert_eq!(trace.len(), traj.len());
        assert!(trace.iter().all(|&v| v == 0.0));
        let trace = value_trace(&ConstantRewarder(0.5), traj).unwrap();
        assert_eq!(trace[0], 0.0);
        assert!((trace[traj.len() - 1] - 0.5 * (traj.len() - 1) as f64).abs() < 1e-12);
    }

    #[test]
    fn oracle_ratio_is_exactly_one() {
        let world = GridWorld::new(Task::Push);
        let demos = generate_demos(&world, 10, 4).unwrap();
        let oracle = ProgressOracle::new(&demos);
        let summary = expert_step_reward_check(&oracle, &demos).unwrap();
        assert!(summary.per_trajectory.iter().all(|s| (s.ratio - 1.0).abs() < 1e-12));
        assert!((summary.median_ratio - 1.0).abs() < 1e-12);
        assert!(expert_step_reward_check(&oracle, &[]).is_err());
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
