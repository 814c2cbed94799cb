use std::collections::HashMap;

use super::ProgressRewarder;
use crate::env::{Frame, Trajectory};
use crate::error::Result;

/// Ground-truth temporal distances for frames drawn from known trajectories.
///
/// A pair found in the same registered trajectory at indices `u`, `v` scores
/// `(v - u) / (T - 1)`; unknown pairs score 0.
#[derive(Debug, Clone, Default)]
pub struct ProgressOracle {
    index: HashMap<Vec<u32>, Vec<(usize, usize)>>,
    lengths: Vec<usize>,
}

fn key(frame: &Frame) -> Vec<u32> {
    frame.values().iter().map(|v| v.to_bits()).collect()
}

impl ProgressOracle {
    pub fn new(trajectories: &[Trajectory]) -> Self {
        let mut oracle = ProgressOracle::default();
        for traj in trajectories {
            oracle.register(traj);
        }
        oracle
    }

    pub fn register(&mut self, traj: &Trajectory) {
        let id = self.lengths.len();
        self.lengths.push(traj.len());
        for (i, frame) in traj.frames.iter().enumerate() {
            let slots = self.index.entry(key(frame)).or_default();
            // Held frames keep their first occurrence.
            if !slots.iter().any(|&(t, _)| t == id) {
                slots.push((id, i));
            }
        }
    }
}

impl ProgressRewarder for ProgressOracle {
    fn step_reward(&self, from: &Frame, to: &Frame) -> Result<f64> {
        let (Some(a), Some(b)) = (self.index.get(&key(from)), self.index.get(&key(to))) else {
            return Ok(0.0);
        };
        for &(ta, u) in a {
            if let Some(&(_, v)) = b.iter().find(|&&(tb, _)| tb == ta) {
                return Ok((v as f64 - u as f64) / (self.lengths[ta] - 1) as f64);
            }
        }
        Ok(0.0)
    }
}

/// Returns the same reward for every transition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantRewarder(pub f64);

impl ProgressRewarder for ConstantRewarder {
    fn step_reward(&self, _from: &Frame, _to: &Frame) -> Result<f64> {
        Ok(self.0)
    }
}
