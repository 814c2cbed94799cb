use rand::Rng as _;

use super::agent::QNetwork;
use crate::env::{scripted_expert, Action, EnvState, Frame, GridWorld};
use crate::error::{Error, Result};
use crate::rng::{derive_indexed, seeded, Rng};

/// Maps the current observation (and, for scripted baselines, the state) to an action.
pub trait Policy {
    fn act(&mut self, world: &GridWorld, state: &EnvState, frame: &Frame) -> Result<Action>;
}

/// Greedy (ε = 0) action selection on a Q-network.
pub struct GreedyPolicy<'a>(pub &'a QNetwork);

impl Policy for GreedyPolicy<'_> {
    fn act(&mut self, _: &GridWorld, _: &EnvState, frame: &Frame) -> Result<Action> {
        self.0.greedy_action(frame)
    }
}

/// The scripted expert, which reads the true state.
pub struct ExpertPolicy;

impl Policy for ExpertPolicy {
    fn act(&mut self, world: &GridWorld, state: &EnvState, _: &Frame) -> Result<Action> {
        Ok(scripted_expert(world, state))
    }
}

/// Uniformly random actions.
pub struct RandomPolicy(pub Rng);

impl RandomPolicy {
    pub fn new(seed: u64) -> Self {
        RandomPolicy(seeded(seed))
    }
}

impl Policy for RandomPolicy {
    fn act(&mut self, _: &GridWorld, _: &EnvState, _: &Frame) -> Result<Action> {
        Ok(Action::ALL[self.0.gen_range(0..Action::COUNT)])
    }
}

/// Success rate of `policy` over `episodes` fresh resets derived from `seed`.
pub fn evaluate_policy<P: Policy + ?Sized>(policy: &mut P, world: &GridWorld, episodes: usize, seed: u64) -> Result<f64> {
    if episodes == 0 {
        return Err(Error::invalid("evaluation needs at least one episode"));
    }
    let mut successes = 0;
    for i in 0..episodes as u64 {
        let mut state = world.reset(derive_indexed(seed, "eval-episode", i));
        let mut frame = world.render(&state);
        while !state.done {
            let action = policy.act(world, &state, &frame)?;
            let out = world.step(&state, action)?;
            state = out.state;
            frame = out.frame;
        }
        successes += usize::from(state.success);
    }
    Ok(successes as f64 / episodes as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::Task;

    #[test]
    fn expert_always_succeeds() {
        for task in Task::ALL {
            let world = GridWorld::new(task);
            assert_eq!(evaluate_policy(&mut ExpertPolicy, &world, 50, 3).unwrap(), 1.0);
        }
    }

    #[test]
    fn random_policy_rarely_reaches() {
        let world = GridWorld::new(Task::Reach);
        let rate = evaluate_policy(&mut RandomPolicy::new(0), &world, 500, 0).unwrap();
        assert!(rate < 0.3, "random success rate {rate}");
        let again = evaluate_policy(&mut RandomPolicy::new(0), &world, 500, 0).unwrap();
        assert_eq!(rate, again);
    }

    #[test]
    fn zero_episodes_is_error() {
        let world = GridWorld::new(Task::Reach);
        assert!(evaluate_policy(&mut ExpertPolicy, &world, 0, 0).is_err());
    }
}
