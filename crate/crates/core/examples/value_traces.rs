//! Train on push demos, then chart value traces of a successful episode
//! against frozen-at-half and mimic failures (SVG) and report separation.
//!
//! cargo run --release --example value_traces -- [epochs] [out_dir]

use anyhow::Result;
use progress_reward::env::{generate_demos, FailureKind};
use progress_reward::eval::{separation_score, trace_svg, TraceSeries};
use progress_reward::reward::{train_reward_model, value_trace};
use progress_reward::{GridWorld, RewardTrainConfig, Task};

fn main() -> Result<()> {
    let mut args = std::env::args().skip(1);
    let epochs = args.next().map(|s| s.parse()).transpose()?.unwrap_or(30);
    let out = args.next().map(std::path::PathBuf::from).unwrap_or_else(std::env::temp_dir);

    let world = GridWorld::new(Task::Push);
    let demos = generate_demos(&world, 100, 0)?;
    let handle = train_reward_model(&demos, None, &RewardTrainConfig { epochs, ..Default::default() })?;

    for kind in [FailureKind::FrozenAtHalf, FailureKind::Mimic] {
        let pairs = kind.pairs(&world, 100, 11)?;
        println!("{}: separation {:.3}", kind.name(), separation_score(&handle, &pairs)?);
        let (success, failure) = &pairs[0];
        let series = [
            TraceSeries { label: "success".into(), values: value_trace(&handle, success)? },
            TraceSeries { label: kind.name().into(), values: value_trace(&handle, failure)? },
        ];
        let path = out.join(format!("trace_{}.svg", kind.name()));
        std::fs::write(&path, trace_svg(&format!("push: success vs {}", kind.name()), &series))?;
        println!("  wrote {}", path.display());
    }
    Ok(())
}
