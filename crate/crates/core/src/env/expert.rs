use std::collections::VecDeque;

use super::{Action, EnvState, GridWorld, Pos, Task};

/// Preference order among equally good moves: horizontal before vertical,
/// Right before Left, Up before Down.
const MOVE_ORDER: [Action; 4] = [Action::Right, Action::Left, Action::Up, Action::Down];

/// Greedy shortest-path expert for every task.
pub fn scripted_expert(world: &GridWorld, state: &EnvState) -> Action {
    match world.task {
        Task::Reach => navigate(world, state.agent, state.goal, None),
        Task::Push => push_action(world, state),
        Task::PickPlace => {
            let object = state.object.expect("pickplace has an object");
            if state.carrying {
                if state.agent == state.goal {
                    Action::Interact
                } else {
                    navigate(world, state.agent, state.goal, None)
                }
            } else if state.agent.manhattan(object) <= 1 {
                Action::Interact
            } else {
                navigate(world, state.agent, object, None)
            }
        }
    }
}

fn push_action(world: &GridWorld, state: &EnvState) -> Action {
    let object = state.object.expect("push has an object");
    let goal = state.goal;
    let (axis_move, behind) = if object.col != goal.col {
        let dir = if goal.col > object.col { Action::Right } else { Action::Left };
        let col = if dir == Action::Right { object.col.checked_sub(1) } else { Some(object.col + 1) };
        (dir, col.map(|c| Pos::new(object.row, c)))
    } else if object.row != goal.row {
        let dir = if goal.row > object.row { Action::Down } else { Action::Up };
        let row = if dir == Action::Down { object.row.checked_sub(1) } else { Some(object.row + 1) };
        (dir, row.map(|r| Pos::new(r, object.col)))
    } else {
        return Action::Interact;
    };
    match behind {
        Some(p) if world.contains(p.row as i64, p.col as i64) => {
            if state.agent == p {
                axis_move
            } else {
                navigate(world, state.agent, p, Some(object))
            }
        }
        // Object against the far wall on this axis; unreachable from valid resets.
        _ => Action::Interact,
    }
}

/// First move along a shortest path from `from` to `to` that avoids `blocked`.
fn navigate(world: &GridWorld, from: Pos, to: Pos, blocked: Option<Pos>) -> Action {
    if from == to {
        return Action::Interact;
    }
    let dist = distances_to(world, to, blocked);
    let here = dist[from.row * world.width + from.col];
    MOVE_ORDER
        .into_iter()
        .find(|&a| {
            let (dr, dc) = a.delta();
            let (r, c) = (from.row as i64 + dr, from.col as i64 + dc);
            world.contains(r, c) && dist[r as usize * world.width + c as usize] < here
        })
        .unwrap_or(Action::Interact)
}

fn distances_to(world: &GridWorld, to: Pos, blocked: Option<Pos>) -> Vec<usize> {
    let mut dist = vec![usize::MAX; world.cells()];
    let mut queue = VecDeque::new();
    dist[to.row * world.width + to.col] = 0;
    queue.push_back(to);
    while let Some(p) = queue.pop_front() {
        let d = dist[p.row * world.width + p.col];
        for a in MOVE_ORDER {
            let (dr, dc) = a.delta();
            let (r, c) = (p.row as i64 + dr, p.col as i64 + dc);
            if !world.contains(r, c) {
                continue;
            }
            let q = Pos::new(r as usize, c as usize);
            if Some(q) == blocked {
                continue;
            }
            let slot = &mut dist[q.row * world.width + q.col];
            if *slot == usize::MAX {
                *slot = d + 1;
                queue.push_back(q);
            }
        }
    }
    dist
}
