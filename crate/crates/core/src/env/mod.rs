//! Deterministic occupancy-grid tasks standing in for tabletop manipulation:
//! `reach` (move to the goal), `push` (shove the object onto the goal) and
//! `pickplace` (grasp the object, carry it, release it on the goal).

mod dataset;
mod demos;
mod expert;
mod frame;

use std::fmt;
use std::str::FromStr;

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::rng::{derive_seed, seeded};

pub use dataset::{read_dataset, write_dataset, Dataset, DATASET_VERSION};
pub use demos::{
    expert_rollout, frozen_at_half, generate_demos, mimic_rollout, random_rollout, ExpertRollout, FailureKind,
    Trajectory,
};
pub use expert::scripted_expert;
pub use frame::{Frame, AGENT_CHANNEL, GOAL_CHANNEL, OBJECT_CHANNEL};

pub const CHANNELS: usize = 3;
pub const DEFAULT_GRID: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Task {
    Reach,
    Push,
    PickPlace,
}

impl Task {
    pub const ALL: [Task; 3] = [Task::Reach, Task::Push, Task::PickPlace];

    pub fn name(self) -> &'static str {
        match self {
            Task::Reach => "reach",
            Task::Push => "push",
            Task::PickPlace => "pickplace",
        }
    }

    pub fn id(self) -> u32 {
        match self {
            Task::Reach => 0,
            Task::Push => 1,
            Task::PickPlace => 2,
        }
    }

    pub fn from_id(id: u32) -> Result<Self> {
        Task::ALL
            .into_iter()
            .find(|t| t.id() == id)
            .ok_or_else(|| Error::invalid(format!("unknown task id {id}")))
    }

    /// Episode step cap used when no horizon is given.
    pub fn default_horizon(self) -> usize {
        match self {
            Task::Reach => 48,
            Task::Push => 80,
            Task::PickPlace => 100,
        }
    }

    pub fn has_object(self) -> bool {
        self != Task::Reach
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "reach" => Ok(Task::Reach),
            "push" => Ok(Task::Push),
            "pickplace" | "pick-place" | "pick_place" => Ok(Task::PickPlace),
            other => Err(Error::invalid(format!("unknown task '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Action {
    Up,
    Down,
    Left,
    Right,
    Interact,
}

impl Action {
    pub const ALL: [Action; 5] = [Action::Up, Action::Down, Action::Left, Action::Right, Action::Interact];
    pub const COUNT: usize = 5;

    pub fn index(self) -> usize {
        match self {
            Action::Up => 0,
            Action::Down => 1,
            Action::Left => 2,
            Action::Right => 3,
            Action::Interact => 4,
        }
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Action::ALL.get(i).copied()
    }

    /// Row/column displacement; `Interact` does not move.
    pub fn delta(self) -> (i64, i64) {
        match self {
            Action::Up => (-1, 0),
            Action::Down => (1, 0),
            Action::Left => (0, -1),
            Action::Right => (0, 1),
            Action::Interact => (0, 0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pos {
    pub row: usize,
    pub col: usize,
}

impl Pos {
    pub fn new(row: usize, col: usize) -> Self {
        Pos { row, col }
    }

    pub fn manhattan(self, other: Pos) -> usize {
        self.row.abs_diff(other.row) + self.col.abs_diff(other.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EnvState {
    pub agent: Pos,
    pub object: Option<Pos>,
    pub goal: Pos,
    pub carrying: bool,
    pub step: usize,
    pub horizon: usize,
    pub success: bool,
    pub done: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub state: EnvState,
    pub frame: Frame,
    pub success: bool,
    pub done: bool,
}

/// A task on a fixed grid with a fixed step horizon.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridWorld {
    pub task: Task,
    pub height: usize,
    pub width: usize,
    pub horizon: usize,
}

impl GridWorld {
    pub fn new(task: Task) -> Self {
        GridWorld { task, height: DEFAULT_GRID, width: DEFAULT_GRID, horizon: task.default_horizon() }
    }

    pub fn with_grid(task: Task, height: usize, width: usize, horizon: usize) -> Result<Self> {
        if height < 3 || width < 3 {
            return Err(Error::invalid(format!("grid {height}x{width} too small")));
        }
        if horizon == 0 {
            return Err(Error::invalid("horizon must be positive"));
        }
        Ok(GridWorld { task, height, width, horizon })
    }

    pub fn frame_len(&self) -> usize {
        CHANNELS * self.height * self.width
    }

    pub fn cells(&self) -> usize {
        self.height * self.width
    }

    pub fn contains(&self, row: i64, col: i64) -> bool {
        row >= 0 && col >= 0 && (row as usize) < self.height && (col as usize) < self.width
    }

    fn offset(&self, pos: Pos, action: Action) -> Option<Pos> {
        let (dr, dc) = action.delta();
        let (r, c) = (pos.row as i64 + dr, pos.col as i64 + dc);
        self.contains(r, c).then(|| Pos::new(r as usize, c as usize))
    }

    /// Broad independent uniform placement of every entity, redrawing on overlap.
    /// Push objects stay off the border so every push direction is feasible.
    pub fn reset(&self, seed: u64) -> EnvState {
        let mut rng = seeded(derive_seed(seed, self.task.name()));
        let mut draw = |interior: bool| {
            if interior {
                Pos::new(rng.gen_range(1..self.height - 1), rng.gen_range(1..self.width - 1))
            } else {
                Pos::new(rng.gen_range(0..self.height), rng.gen_range(0..self.width))
            }
        };
        let agent = draw(false);
        let object = self.task.has_object().then(|| loop {
            let p = draw(self.task == Task::Push);
            if p != agent {
                break p;
            }
        });
        let goal = loop {
            let p = draw(false);
            if p != agent && Some(p) != object {
                break p;
            }
        };
        EnvState { agent, object, goal, carrying: false, step: 0, horizon: self.horizon, success: false, done: false }
    }

    pub fn render(&self, state: &EnvState) -> Frame {
        let mut frame = Frame::zeros(CHANNELS, self.height, self.width);
        frame.set(AGENT_CHANNEL, state.agent.row, state.agent.col, 1.0);
        if let Some(obj) = state.object {
            let at = if state.carrying { state.agent } else { obj };
            frame.set(OBJECT_CHANNEL, at.row, at.col, 1.0);
        }
        frame.set(GOAL_CHANNEL, state.goal.row, state.goal.col, 1.0);
        frame
    }

    pub fn is_success(&self, state: &EnvState) -> bool {
        match self.task {
            Task::Reach => state.agent == state.goal,
            Task::Push => state.object == Some(state.goal),
            Task::PickPlace => !state.carrying && state.object == Some(state.goal),
        }
    }

    pub fn step(&self, state: &EnvState, action: Action) -> Result<StepOutcome> {
        if state.done || state.step >= state.horizon {
            return Err(Error::InvalidState("step called on a finished episode".into()));
        }
        let mut next = state.clone();
        match self.task {
            Task::Reach => {
                if let Some(p) = self.offset(state.agent, action) {
                    next.agent = p;
                }
            }
            Task::Push => {
                if let Some(p) = self.offset(state.agent, action) {
                    if Some(p) == state.object {
                        if let Some(q) = self.offset(p, action) {
                            next.object = Some(q);
                            next.agent = p;
                        }
                    } else {
                        next.agent = p;
                    }
                }
            }
            Task::PickPlace => {
                if action == Action::Interact {
                    let obj = state.object.expect("pickplace has an object");
                    if state.carrying {
                        if state.agent == state.goal {
                            next.carrying = false;
                            next.object = Some(state.agent);
                        }
                    } else if state.agent.manhattan(obj) <= 1 {
                        next.carrying = true;
                        next.object = Some(state.agent);
                    }
                } else if let Some(p) = self.offset(state.agent, action) {
                    next.agent = p;
                    if next.carrying {
                        next.object = Some(p);
                    }
                }
            }
        }
        next.step += 1;
        next.success = state.success || self.is_success(&next);
        next.done = next.success || next.step >= next.horizon;
        let frame = self.render(&next);
        Ok(StepOutcome { success: next.success, done: next.done, frame, state: next })
    }
}
