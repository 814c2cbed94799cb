//! Train a Q-learning agent on reach with the learned proxy reward plus the
//! sparse success bonus, and compare with the sparse-only baseline.
//!
//! cargo run --release --example rl_reach -- [steps] [seed]

use anyhow::Result;
use progress_reward::env::generate_demos;
use progress_reward::reward::train_reward_model;
use progress_reward::rl::{evaluate_policy, train_policy, GreedyPolicy, RlConfig};
use progress_reward::{GridWorld, RewardTrainConfig, Task};

fn main() -> Result<()> {
    let mut args = std::env::args().skip(1);
    let steps = args.next().map(|s| s.parse()).transpose()?.unwrap_or(20_000);
    let seed = args.next().map(|s| s.parse()).transpose()?.unwrap_or(0);

    let world = GridWorld::new(Task::Reach);
    let demos = generate_demos(&world, 100, 0)?;
    let handle = train_reward_model(&demos, None, &RewardTrainConfig::default())?;
    let cfg = RlConfig { max_steps: steps, rng_seed: seed, ..Default::default() };

    let proxy = train_policy(&world, Some(&handle), &cfg)?;
    let sparse = train_policy::<progress_reward::reward::ConstantRewarder>(&world, None, &cfg)?;
    println!("{:>6}  {:>12}  {:>11}", "step", "proxy+sparse", "sparse-only");
    for (p, s) in proxy.curve.points.iter().zip(&sparse.curve.points) {
        println!("{:>6}  {:>12.2}  {:>11.2}", p.step, p.success_rate, s.success_rate);
    }
    let mut greedy = GreedyPolicy(&proxy.q);
    println!("fresh evaluation of the proxy policy: {:.2}", evaluate_policy(&mut greedy, &world, 50, 99)?);
    Ok(())
}
