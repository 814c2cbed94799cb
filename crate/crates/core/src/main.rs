use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use progress_reward::env::FailureKind;
use progress_reward::eval::Variant;
use progress_reward::harness::{self, EvalMode};
use progress_reward::{Error, Task};

/// Dense proxy rewards from action-free demonstrations.
#[derive(Parser)]
#[command(name = "progress-reward", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate scripted expert demos into a dataset file.
    GenDemos {
        #[arg(long, default_value = "reach")]
        task: Task,
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "demos.trdm")]
        file_name: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train a progress model on a dataset file.
    TrainReward {
        #[arg(long)]
        demos: PathBuf,
        #[arg(long)]
        heldout: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// full, forward-only, uniform-intervals or direct-regression
        #[arg(long)]
        ablation: Option<Variant>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a checkpoint (voc, separation) or the analytic potential (bellman).
    Eval {
        #[arg(long)]
        mode: EvalMode,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        demos: Option<PathBuf>,
        #[arg(long, default_value = "push")]
        task: Task,
        #[arg(long, value_delimiter = ',', default_value = "frozen-at-half,mimic")]
        failures: Vec<FailureKind>,
        #[arg(long, default_value_t = 100)]
        pairs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.99)]
        gamma: f64,
        #[arg(long)]
        svg: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train a Q-learning policy on the proxy+sparse reward or sparse only.
    TrainPolicy {
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        sparse_only: bool,
        #[arg(long)]
        task: Option<Task>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the variant x task x seed ablation matrix.
    Ablate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::GenDemos { task, n, seed, file_name, out } => {
            let m = harness::cmd_gen_demos(&harness::GenDemosArgs { task, n, seed, out, file_name })?;
            for f in &m.files {
                println!("{}  {}  {} bytes", f.checksum, f.path, f.bytes);
            }
        }
        Command::TrainReward { demos, heldout, config, ablation, seed, out } => {
            let m = harness::cmd_train_reward(&harness::TrainRewardArgs { demos, heldout, config, ablation, seed, out })?;
            println!("wrote {} files ({})", m.files.len(), m.config_hash);
        }
        Command::Eval { mode, checkpoint, demos, task, failures, pairs, seed, gamma, svg, out } => {
            let args = harness::EvalArgs { mode, checkpoint, demos, task, failures, pairs, seed, gamma, svg, out };
            for (k, v) in harness::cmd_eval(&args)?.headline {
                println!("{k} = {v}");
            }
        }
        Command::TrainPolicy { checkpoint, sparse_only, task, config, alpha, seed, steps, out } => {
            let args = harness::TrainPolicyArgs { checkpoint, sparse_only, task, config, alpha, seed, steps, out };
            let m = harness::cmd_train_policy(&args)?;
            println!("wrote {} files ({})", m.files.len(), m.config_hash);
        }
        Command::Ablate { config, out } => {
            let (matrix, _) = harness::cmd_ablate(&harness::AblateArgs { config, out })?;
            print!("{}", matrix.summary_csv());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
