use rand::Rng as _;

use super::{scripted_expert, Action, EnvState, Frame, GridWorld, Task};
use crate::error::{Error, Result};
use crate::rng::{derive_indexed, derive_seed, seeded};

/// An action-free observation sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub frames: Vec<Frame>,
    pub success: bool,
    pub task: Task,
    /// Reset seed the rollout started from, when known.
    pub seed: Option<u64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Same frames in reverse temporal order.
    pub fn reversed(&self) -> Trajectory {
        let mut frames = self.frames.clone();
        frames.reverse();
        Trajectory { frames, success: false, ..self.clone() }
    }
}

/// An expert episode with its actions kept alongside the frames.
#[derive(Debug, Clone)]
pub struct ExpertRollout {
    pub initial: EnvState,
    pub actions: Vec<Action>,
    pub frames: Vec<Frame>,
    pub success: bool,
}

/// Run the scripted expert from `world.reset(reset_seed)` until the episode ends.
pub fn expert_rollout(world: &GridWorld, reset_seed: u64) -> Result<ExpertRollout> {
    let initial = world.reset(reset_seed);
    let mut state = initial.clone();
    let mut frames = vec![world.render(&state)];
    let mut actions = Vec::new();
    while !state.done {
        let action = scripted_expert(world, &state);
        let out = world.step(&state, action)?;
        actions.push(action);
        frames.push(out.frame);
        state = out.state;
    }
    Ok(ExpertRollout { initial, actions, frames, success: state.success })
}

fn reset_seed(seed: u64, task: Task, index: u64) -> u64 {
    derive_indexed(seed, &format!("demo:{}", task.name()), index)
}

/// `n` successful expert trajectories from distinct reset seeds, each ending
/// at its success step.
pub fn generate_demos(world: &GridWorld, n: usize, seed: u64) -> Result<Vec<Trajectory>> {
    if n == 0 {
        return Err(Error::invalid("demo count must be at least 1"));
    }
    (0..n as u64)
        .map(|i| {
            let rs = reset_seed(seed, world.task, i);
            let roll = expert_rollout(world, rs)?;
            if !roll.success {
                return Err(Error::Internal(format!(
                    "scripted expert failed on {} reset seed {rs}",
                    world.task
                )));
            }
            Ok(Trajectory { frames: roll.frames, success: true, task: world.task, seed: Some(rs) })
        })
        .collect()
}

/// Failure archetypes paired against the expert episode from the same reset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FailureKind {
    /// Expert stopped halfway, last frame held.
    FrozenAtHalf,
    /// Expert motions replayed without ever touching the object.
    Mimic,
    /// Uniformly random actions.
    Random,
}

impl FailureKind {
    pub const ALL: [FailureKind; 3] = [FailureKind::FrozenAtHalf, FailureKind::Mimic, FailureKind::Random];

    pub fn name(self) -> &'static str {
        match self {
            FailureKind::FrozenAtHalf => "frozen_at_half",
            FailureKind::Mimic => "mimic",
            FailureKind::Random => "random",
        }
    }

    /// `(success, failure)` trajectories of equal length from one reset seed.
    pub fn pair(self, world: &GridWorld, reset_seed: u64) -> Result<(Trajectory, Trajectory)> {
        let roll = expert_rollout(world, reset_seed)?;
        if !roll.success {
            return Err(Error::Internal(format!("expert failed on reset seed {reset_seed}")));
        }
        let failure = match self {
            FailureKind::FrozenAtHalf => frozen_at_half(&roll),
            FailureKind::Mimic => mimic_rollout(world, &roll)?,
            FailureKind::Random => random_rollout(world, reset_seed, roll.frames.len() - 1)?,
        };
        let success = Trajectory { frames: roll.frames, success: true, task: world.task, seed: Some(reset_seed) };
        Ok((success, Trajectory { task: world.task, seed: Some(reset_seed), ..failure }))
    }

    /// `n` paired episodes on reset seeds derived from `seed`.
    pub fn pairs(self, world: &GridWorld, n: usize, seed: u64) -> Result<Vec<(Trajectory, Trajectory)>> {
        let tag = format!("failure:{}:{}", self.name(), world.task.name());
        (0..n as u64).map(|i| self.pair(world, derive_indexed(seed, &tag, i))).collect()
    }
}

impl std::str::FromStr for FailureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        FailureKind::ALL
            .into_iter()
            .find(|k| k.name() == norm || (norm == "frozen" && *k == FailureKind::FrozenAtHalf))
            .ok_or_else(|| Error::invalid(format!("unknown failure kind {s:?} (expected frozen_at_half, mimic, random)")))
    }
}

/// First half of the expert episode, then the halfway frame held to full length.
pub fn frozen_at_half(roll: &ExpertRollout) -> Trajectory {
    let steps = roll.frames.len() - 1;
    let keep = steps / 2;
    let mut frames: Vec<Frame> = roll.frames[..=keep].to_vec();
    let held = frames[keep].clone();
    frames.resize(roll.frames.len(), held);
    Trajectory { frames, success: false, task: Task::Reach, seed: None }
}

/// Replay the expert's actions from the same start, but replace every action
/// that would touch the object (moving into it, grasping) with standing
/// still. The agent traces the expert's motion pattern; the object never moves.
pub fn mimic_rollout(world: &GridWorld, roll: &ExpertRollout) -> Result<Trajectory> {
    if !world.task.has_object() {
        return Err(Error::invalid("mimic failures need a task with an object"));
    }
    let mut state = roll.initial.clone();
    let mut frames = vec![world.render(&state)];
    for &action in &roll.actions {
        if state.done {
            frames.push(frames.last().expect("non-empty").clone());
        } else if touches_object(world, &state, action) {
            state.step += 1;
            state.done = state.step >= state.horizon;
            frames.push(world.render(&state));
        } else {
            let out = world.step(&state, action)?;
            frames.push(out.frame);
            state = out.state;
        }
    }
    Ok(Trajectory { frames, success: state.success, task: world.task, seed: None })
}

fn touches_object(world: &GridWorld, state: &EnvState, action: Action) -> bool {
    let Some(object) = state.object else { return false };
    match (world.task, action) {
        (Task::PickPlace, Action::Interact) => true,
        (Task::Push, a) if a != Action::Interact => {
            let (dr, dc) = a.delta();
            state.agent.row as i64 + dr == object.row as i64 && state.agent.col as i64 + dc == object.col as i64
        }
        _ => false,
    }
}

/// Uniformly random actions for `steps` steps (or until the episode ends;
/// the last frame is then held).
pub fn random_rollout(world: &GridWorld, reset_seed: u64, steps: usize) -> Result<Trajectory> {
    let mut rng = seeded(derive_seed(reset_seed, "random-policy"));
    let mut state = world.reset(reset_seed);
    let mut frames = vec![world.render(&state)];
    let mut success = false;
    for _ in 0..steps {
        if state.done {
            frames.push(frames.last().expect("non-empty").clone());
            continue;
        }
        let action = Action::ALL[rng.gen_range(0..Action::COUNT)];
        let out = world.step(&state, action)?;
        success |= out.success;
        frames.push(out.frame);
        state = out.state;
    }
    Ok(Trajectory { frames, success, task: world.task, seed: Some(reset_seed) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn demos_are_successful_and_reproducible() {
        for task in Task::ALL {
            let world = GridWorld::new(task);
            let a = generate_demos(&world, 20, 3).unwrap();
            let b = generate_demos(&world, 20, 3).unwrap();
            assert_eq!(a, b);
            assert!(a.iter().all(|t| t.success && t.len() >= 2 && t.len() <= world.horizon + 1));
            assert!(a.iter().all(|t| t.frames.iter().all(Frame::is_valid_occupancy)));
            let mut seeds: Vec<_> = a.iter().map(|t| t.seed.unwrap()).collect();
            seeds.sort();
            seeds.dedup();
            assert_eq!(seeds.len(), 20);
        }
        assert!(generate_demos(&GridWorld::new(Task::Reach), 0, 1).is_err());
    }

    #[test]
    fn frozen_failure_holds_halfway_frame() {
        let world = GridWorld::new(Task::Push);
        let (ok, bad) = FailureKind::FrozenAtHalf.pair(&world, 17).unwrap();
        assert_eq!(ok.len(), bad.len());
        let half = (ok.len() - 1) / 2;
        assert_eq!(bad.frames[..=half], ok.frames[..=half]);
        assert!(bad.frames[half..].iter().all(|f| *f == ok.frames[half]));
    }

    #[test]
    fn mimic_never_moves_the_object() {
        for task in [Task::Push, Task::PickPlace] {
            let world = GridWorld::new(task);
            for seed in 0..50 {
                let (ok, bad) = FailureKind::Mimic.pair(&world, seed).unwrap();
                assert_eq!(ok.len(), bad.len());
                assert!(!bad.success);
                let first = &bad.frames[0];
                for f in &bad.frames {
                    for r in 0..world.height {
                        for c in 0..world.width {
                            assert_eq!(f.get(1, r, c), first.get(1, r, c));
                        }
                    }
                }
            }
        }
        let reach = GridWorld::new(Task::Reach);
        assert!(FailureKind::Mimic.pair(&reach, 0).is_err());
    }

    #[test]
    fn random_rollout_has_requested_length() {
        let world = GridWorld::new(Task::Reach);
        let t = random_rollout(&world, 4, 30).unwrap();
        assert_eq!(t.len(), 31);
    }
}
