use ndarray::Array2;
use rand::Rng as _;

use crate::env::{Action, Frame};
use crate::error::{Error, Result};
use crate::rng::Rng;

/// One environment step as stored in replay.
#[derive(Debug, Clone, PartialEq)]
pub struct RlTransition {
    pub observation: Frame,
    pub action: Action,
    /// Combined reward, computed at insertion.
    pub reward: f64,
    pub next_observation: Frame,
    /// Terminal (success): no bootstrapping past this step.
    pub done: bool,
    /// Last step of its episode (terminal or timed out).
    pub episode_end: bool,
}

/// An n-step window starting at one stored transition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NStepSample {
    /// Logical index of the first transition (0 = oldest).
    pub start: usize,
    /// Logical index of the transition whose next observation closes the window.
    pub last: usize,
    pub action: Action,
    /// Discounted reward sum over the window.
    pub reward: f64,
    /// `γ^k` for a window of `k` steps, or 0 when the window hit a terminal.
    pub bootstrap_discount: f64,
}

/// Row-stacked training batch.
#[derive(Debug, Clone)]
pub struct ReplayBatch {
    pub observations: Array2<f64>,
    pub actions: Vec<Action>,
    pub rewards: Vec<f64>,
    pub next_observations: Array2<f64>,
    pub bootstrap_discounts: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
struct Meta {
    action: Action,
    reward: f64,
    done: bool,
    episode_end: bool,
}

/// FIFO transition store backed by preallocated frame rings; n-step windows
/// are assembled at sampling time and stop at episode ends.
#[derive(Debug)]
pub struct ReplayBuffer {
    capacity: usize,
    shape: (usize, usize, usize),
    frame_len: usize,
    observations: Vec<f32>,
    next_observations: Vec<f32>,
    meta: Vec<Meta>,
    oldest: usize,
    len: usize,
}

impl ReplayBuffer {
    /// `shape` is `(channels, height, width)` of stored frames.
    pub fn new(capacity: usize, shape: (usize, usize, usize)) -> Self {
        let frame_len = shape.0 * shape.1 * shape.2;
        ReplayBuffer {
            capacity,
            shape,
            frame_len,
            observations: vec![0.0; capacity * frame_len],
            next_observations: vec![0.0; capacity * frame_len],
            meta: Vec::with_capacity(capacity),
            oldest: 0,
            len: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    fn slot(&self, i: usize) -> usize {
        (self.oldest + i) % self.capacity
    }

    /// Append, evicting the oldest transition when full.
    pub fn push(&mut self, t: &RlTransition) -> Result<()> {
        for f in [&t.observation, &t.next_observation] {
            if (f.channels(), f.height(), f.width()) != self.shape {
                return Err(Error::invalid("transition frame shape differs from replay shape"));
            }
        }
        if !t.reward.is_finite() {
            return Err(Error::invalid(format!("non-finite reward {}", t.reward)));
        }
        let slot = if self.len == self.capacity {
            let s = self.oldest;
            self.oldest = (self.oldest + 1) % self.capacity;
            s
        } else {
            self.len += 1;
            self.slot(self.len - 1)
        };
        let range = slot * self.frame_len..(slot + 1) * self.frame_len;
        self.observations[range.clone()].copy_from_slice(t.observation.values());
        self.next_observations[range].copy_from_slice(t.next_observation.values());
        let meta = Meta { action: t.action, reward: t.reward, done: t.done, episode_end: t.episode_end };
        if slot == self.meta.len() {
            self.meta.push(meta);
        } else {
            self.meta[slot] = meta;
        }
        Ok(())
    }

    fn frame(&self, store: &[f32], slot: usize) -> Frame {
        let (c, h, w) = self.shape;
        let values = store[slot * self.frame_len..(slot + 1) * self.frame_len].to_vec();
        Frame::from_values(c, h, w, values).expect("stored frames have the replay shape")
    }

    /// Copy of the transition at logical index `i` (0 = oldest).
    pub fn get(&self, i: usize) -> Option<RlTransition> {
        if i >= self.len {
            return None;
        }
        let slot = self.slot(i);
        let m = self.meta[slot];
        Some(RlTransition {
            observation: self.frame(&self.observations, slot),
            action: m.action,
            reward: m.reward,
            next_observation: self.frame(&self.next_observations, slot),
            done: m.done,
            episode_end: m.episode_end,
        })
    }

    /// The window of at most `n` steps starting at logical index `i`.
    pub fn n_step(&self, i: usize, n: usize, gamma: f64) -> NStepSample {
        let first = self.meta[self.slot(i)];
        let mut reward = 0.0;
        let mut discount = 1.0;
        let mut last = i;
        let mut done = false;
        for k in 0..n.min(self.len - i) {
            let m = self.meta[self.slot(i + k)];
            reward += discount * m.reward;
            discount *= gamma;
            last = i + k;
            done = m.done;
            if m.episode_end {
                break;
            }
        }
        NStepSample {
            start: i,
            last,
            action: first.action,
            reward,
            bootstrap_discount: if done { 0.0 } else { discount },
        }
    }

    /// Stack the windows starting at the given logical indices.
    pub fn gather(&self, starts: &[usize], n: usize, gamma: f64) -> ReplayBatch {
        let rows = starts.len();
        let mut observations = Array2::zeros((rows, self.frame_len));
        let mut next_observations = Array2::zeros((rows, self.frame_len));
        let mut actions = Vec::with_capacity(rows);
        let mut rewards = Vec::with_capacity(rows);
        let mut bootstrap_discounts = Vec::with_capacity(rows);
        for (r, &i) in starts.iter().enumerate() {
            let s = self.n_step(i, n, gamma);
            let (a, b) = (self.slot(s.start), self.slot(s.last));
            let src = &self.observations[a * self.frame_len..(a + 1) * self.frame_len];
            observations.row_mut(r).iter_mut().zip(src).for_each(|(d, &v)| *d = f64::from(v));
            let src = &self.next_observations[b * self.frame_len..(b + 1) * self.frame_len];
            next_observations.row_mut(r).iter_mut().zip(src).for_each(|(d, &v)| *d = f64::from(v));
            actions.push(s.action);
            rewards.push(s.reward);
            bootstrap_discounts.push(s.bootstrap_discount);
        }
        ReplayBatch { observations, actions, rewards, next_observations, bootstrap_discounts }
    }

    /// Uniform sample of `batch` windows, with replacement.
    pub fn sample(&self, batch: usize, n: usize, gamma: f64, rng: &mut Rng) -> ReplayBatch {
        let starts: Vec<usize> = (0..batch).map(|_| rng.gen_range(0..self.len)).collect();
        self.gather(&starts, n, gamma)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rl::n_step_return;

    fn tr(reward: f64, done: bool, episode_end: bool) -> RlTransition {
        let mut next = Frame::zeros(3, 2, 2);
        next.set(0, 0, 0, reward as f32);
        RlTransition {
            observation: Frame::zeros(3, 2, 2),
            action: Action::Up,
            reward,
            next_observation: next,
            done,
            episode_end,
        }
    }

    #[test]
    fn fifo_eviction() {
        let mut buf = ReplayBuffer::new(3, (3, 2, 2));
        for r in 0..5 {
            buf.push(&tr(r as f64 / 10.0, false, false)).unwrap();
            assert!(buf.len() <= 3);
        }
        let kept: Vec<f64> = (0..3).map(|i| buf.get(i).unwrap().reward).collect();
        assert_eq!(kept, vec![0.2, 0.3, 0.4]);
        assert_eq!(buf.get(0).unwrap(), tr(0.2, false, false));
        assert!(buf.get(3).is_none());
    }

    #[test]
    fn windows_stop_at_episode_ends() {
        let mut buf = ReplayBuffer::new(10, (3, 2, 2));
        buf.push(&tr(1.0, false, false)).unwrap();
        buf.push(&tr(2.0, true, true)).unwrap();
        buf.push(&tr(4.0, false, false)).unwrap();
        buf.push(&tr(8.0, false, true)).unwrap();
        buf.push(&tr(16.0, false, false)).unwrap();

        let s = buf.n_step(0, 3, 0.5);
        assert_eq!(s.reward, n_step_return(&[1.0, 2.0], 0.0, 0.5, true).unwrap());
        assert_eq!((s.last, s.bootstrap_discount), (1, 0.0));

        // Timeout: the window ends but still bootstraps.
        let s = buf.n_step(2, 3, 0.5);
        assert_eq!(s.reward, 4.0 + 0.5 * 8.0);
        assert_eq!((s.last, s.bootstrap_discount), (3, 0.25));

        // Ongoing episode at the buffer head: shorter window.
        let s = buf.n_step(4, 3, 0.5);
        assert_eq!((s.reward, s.bootstrap_discount), (16.0, 0.5));

        let batch = buf.gather(&[2], 3, 0.5);
        assert_eq!(batch.next_observations[[0, 0]], 8.0);
        assert_eq!(batch.rewards, vec![8.0]);
    }

    #[test]
    fn rejects_bad_transitions() {
        let mut buf = ReplayBuffer::new(2, (3, 2, 2));
        assert!(buf.push(&tr(f64::NAN, false, false)).is_err());
        let mut t = tr(0.0, false, false);
        t.observation = Frame::zeros(3, 3, 3);
        assert!(buf.push(&t).is_err());
    }
}
