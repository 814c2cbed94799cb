//! Train a progress model on scripted demos and report loss plus the
//! step-reward signature on a held-out expert episode.
//!
//! cargo run --release --example train_reward -- [task] [epochs] [demos]

use anyhow::Result;
use progress_reward::env::generate_demos;
use progress_reward::reward::{expert_step_reward_check, train_reward_model, value_trace};
use progress_reward::{GridWorld, RewardTrainConfig, Task};

fn main() -> Result<()> {
    let mut args = std::env::args().skip(1);
    let task: Task = args.next().as_deref().unwrap_or("push").parse()?;
    let epochs = args.next().map(|s| s.parse()).transpose()?.unwrap_or(20);
    let n_demos = args.next().map(|s| s.parse()).transpose()?.unwrap_or(100);

    let world = GridWorld::new(task);
    let demos = generate_demos(&world, n_demos, 0)?;
    let heldout = generate_demos(&world, 20, 1)?;
    let cfg = RewardTrainConfig { epochs, ..Default::default() };

    let start = std::time::Instant::now();
    let handle = train_reward_model(&demos, Some(&heldout), &cfg)?;
    println!("trained {epochs} epochs in {:.1}s", start.elapsed().as_secs_f64());
    for m in handle.history() {
        println!("epoch {:>3}  train {:.4}  heldout {:.4}", m.epoch, m.train_loss, m.heldout_loss);
    }

    let summary = expert_step_reward_check(&handle, &heldout)?;
    println!("median step-reward ratio (mean / (1/(T-1))): {:.3}", summary.median_ratio);
    let trace = value_trace(&handle, &heldout[0])?;
    let shown: Vec<String> = trace.iter().map(|v| format!("{v:.2}")).collect();
    println!("value trace of held-out episode 0: [{}]", shown.join(", "));
    Ok(())
}
