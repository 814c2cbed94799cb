//! Small ablation matrix over the four reward-model variants on push.
//!
//! cargo run --release --example ablations -- [epochs] [workers]

use anyhow::Result;
use progress_reward::eval::{run_ablation_matrix_with_workers, AblationBudget, Variant};
use progress_reward::{RewardTrainConfig, Task};

fn main() -> Result<()> {
    let mut args = std::env::args().skip(1);
    let epochs = args.next().map(|s| s.parse()).transpose()?.unwrap_or(10);
    let workers = args.next().map(|s| s.parse()).transpose()?.unwrap_or(4);

    let budget = AblationBudget {
        reward: RewardTrainConfig { epochs, ..Default::default() },
        ..Default::default()
    };
    let matrix = run_ablation_matrix_with_workers(&[Task::Push], &Variant::ALL, &[0], &budget, None, workers)?;
    print!("{}", matrix.summary_csv());
    for cell in &matrix.cells {
        if let Ok(m) = &cell.outcome {
            println!("{:<18} reversed-transition reward {:+.4}", cell.variant.name(), m.reversed_mean_reward);
        }
    }
    Ok(())
}
