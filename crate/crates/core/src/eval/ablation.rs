use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use super::{separation_score, voc_suite};
use crate::env::{generate_demos, FailureKind, GridWorld, Task, Trajectory};
use crate::error::{Error, Result};
use crate::io::write_atomic;
use crate::reward::{train_reward_model, Ablations, ProgressRewarder, RewardModelHandle, RewardTrainConfig};
use crate::rl::{train_policy, RlConfig};
use crate::rng::{derive_seed, fnv1a64};

/// Reward-model variants compared in the ablation study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    Full,
    ForwardOnly,
    UniformIntervals,
    DirectRegression,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Full, Variant::ForwardOnly, Variant::UniformIntervals, Variant::DirectRegression];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Full => "full",
            Variant::ForwardOnly => "forward-only",
            Variant::UniformIntervals => "uniform-intervals",
            Variant::DirectRegression => "direct-regression",
        }
    }

    pub fn ablations(self) -> Ablations {
        let mut a = Ablations::default();
        match self {
            Variant::Full => {}
            Variant::ForwardOnly => a.forward_only = true,
            Variant::UniformIntervals => a.uniform_intervals = true,
            Variant::DirectRegression => a.direct_regression = true,
        }
        a
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('_', "-");
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == norm)
            .ok_or_else(|| Error::invalid(format!("unknown variant {s:?} (expected full, forward-only, uniform-intervals, direct-regression)")))
    }
}

/// Data sizes and training budgets shared by every cell.
#[derive(Debug, Clone, PartialEq)]
pub struct AblationBudget {
    pub train_demos: usize,
    pub heldout_demos: usize,
    pub failure_pairs: usize,
    pub reward: RewardTrainConfig,
    /// Policy training per cell; skipped when `None`.
    pub rl: Option<RlConfig>,
}

impl Default for AblationBudget {
    fn default() -> Self {
        AblationBudget {
            train_demos: 100,
            heldout_demos: 100,
            failure_pairs: 100,
            reward: RewardTrainConfig::default(),
            rl: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellMetrics {
    pub voc: f64,
    /// Separation against frozen-at-half failures.
    pub separation_frozen: f64,
    /// Separation against mimic failures (tasks with an object only).
    pub separation_mimic: Option<f64>,
    /// Mean predicted reward over reversed held-out expert transitions.
    pub reversed_mean_reward: f64,
    pub final_rl_success: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationCell {
    pub task: Task,
    pub variant: Variant,
    pub seed: u64,
    pub config_hash: u64,
    pub outcome: std::result::Result<CellMetrics, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationMatrix {
    pub cells: Vec<AblationCell>,
}

impl AblationMatrix {
    pub fn succeeded(&self) -> usize {
        self.cells.iter().filter(|c| c.outcome.is_ok()).count()
    }

    pub fn cell(&self, task: Task, variant: Variant, seed: u64) -> Option<&AblationCell> {
        self.cells.iter().find(|c| c.task == task && c.variant == variant && c.seed == seed)
    }

    pub fn summary_csv(&self) -> String {
        let mut out = String::from(
            "task,variant,seed,config_hash,status,voc,separation_frozen,separation_mimic,reversed_mean_reward,final_rl_success\n",
        );
        let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
        for c in &self.cells {
            let head = format!("{},{},{},{:016x}", c.task, c.variant, c.seed, c.config_hash);
            match &c.outcome {
                Ok(m) => out.push_str(&format!(
                    "{head},ok,{},{},{},{},{}\n",
                    m.voc,
                    m.separation_frozen,
                    opt(m.separation_mimic),
                    m.reversed_mean_reward,
                    opt(m.final_rl_success)
                )),
                Err(e) => out.push_str(&format!("{head},\"failed: {}\",,,,,\n", e.replace('"', "'"))),
            }
        }
        out
    }
}

/// Mean predicted reward over every reversed adjacent pair of `demos`.
pub fn reversed_mean_reward<R: ProgressRewarder + ?Sized>(rewarder: &R, demos: &[Trajectory]) -> Result<f64> {
    let mut total = 0.0;
    let mut count = 0usize;
    for t in demos {
        let r = rewarder.adjacent_rewards(&t.reversed().frames)?;
        total += r.iter().sum::<f64>();
        count += r.len();
    }
    if count == 0 {
        return Err(Error::invalid("no transitions to reverse"));
    }
    Ok(total / count as f64)
}

fn run_cell(
    task: Task,
    variant: Variant,
    seed: u64,
    budget: &AblationBudget,
    out_dir: Option<&Path>,
) -> Result<CellMetrics> {
    let world = GridWorld::new(task);
    let train = generate_demos(&world, budget.train_demos, derive_seed(seed, "ablation:train"))?;
    let heldout = generate_demos(&world, budget.heldout_demos, derive_seed(seed, "ablation:heldout"))?;
    let cfg = RewardTrainConfig { ablations: variant.ablations(), rng_seed: seed, ..budget.reward.clone() };
    let handle: RewardModelHandle = train_reward_model(&train, Some(&heldout), &cfg)?;

    let voc = voc_suite(&handle, &heldout)?;
    let failures = derive_seed(seed, "ablation:failures");
    let frozen = FailureKind::FrozenAtHalf.pairs(&world, budget.failure_pairs, failures)?;
    let separation_frozen = separation_score(&handle, &frozen)?;
    let separation_mimic = if task.has_object() {
        Some(separation_score(&handle, &FailureKind::Mimic.pairs(&world, budget.failure_pairs, failures)?)?)
    } else {
        None
    };
    let reversed = reversed_mean_reward(&handle, &heldout)?;
    let final_rl_success = match &budget.rl {
        Some(rl) => {
            let rl = RlConfig { rng_seed: seed, ..rl.clone() };
            let trained = train_policy(&world, Some(&handle), &rl)?;
            if let Some(dir) = out_dir {
                trained.curve.write(&dir.join("curve.csv"))?;
            }
            trained.curve.final_success()
        }
        None => None,
    };
    if let Some(dir) = out_dir {
        handle.save(&dir.join("reward.ckpt"))?;
        handle.write_metrics(&dir.join("reward_metrics.csv"))?;
        write_atomic(&dir.join("voc.csv"), voc.to_csv().as_bytes())?;
    }
    Ok(CellMetrics { voc: voc.mean, separation_frozen, separation_mimic, reversed_mean_reward: reversed, final_rl_success })
}

/// Train and evaluate every (task, variant, seed) cell. Cell failures are
/// recorded, not propagated. With `out_dir`, per-cell artifacts land in
/// `<out_dir>/<task>/<variant>/seed-<seed>/` and the summary in
/// `<out_dir>/summary.csv`.
pub fn run_ablation_matrix(
    tasks: &[Task],
    variants: &[Variant],
    seeds: &[u64],
    budget: &AblationBudget,
    out_dir: Option<&Path>,
) -> Result<AblationMatrix> {
    run_ablation_matrix_with_workers(tasks, variants, seeds, budget, out_dir, 1)
}

/// As [`run_ablation_matrix`], spreading cells over `workers` threads.
/// Cells are independent and seeded per cell, so the result does not depend
/// on the worker count.
pub fn run_ablation_matrix_with_workers(
    tasks: &[Task],
    variants: &[Variant],
    seeds: &[u64],
    budget: &AblationBudget,
    out_dir: Option<&Path>,
    workers: usize,
) -> Result<AblationMatrix> {
    if tasks.is_empty() || variants.is_empty() || seeds.is_empty() {
        return Err(Error::invalid("ablation matrix needs at least one task, variant and seed"));
    }
    if workers == 0 {
        return Err(Error::invalid("ablation matrix needs at least one worker"));
    }
    let mut jobs = Vec::new();
    for &task in tasks {
        for &variant in variants {
            for &seed in seeds {
                jobs.push((task, variant, seed));
            }
        }
    }
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<AblationCell>>> = jobs.iter().map(|_| Mutex::new(None)).collect();
    let run_job = |(task, variant, seed): (Task, Variant, u64)| {
        let config_hash = fnv1a64(format!("{task}|{variant}|{seed}|{budget:?}").as_bytes());
        let dir = out_dir.map(|d| d.join(task.name()).join(variant.name()).join(format!("seed-{seed}")));
        let outcome = run_cell(task, variant, seed, budget, dir.as_deref()).map_err(|e| e.to_string());
        AblationCell { task, variant, seed, config_hash, outcome }
    };
    std::thread::scope(|scope| {
        for _ in 0..workers.min(jobs.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(&job) = jobs.get(i) else { break };
                let cell = run_job(job);
                *slots[i].lock().unwrap_or_else(|p| p.into_inner()) = Some(cell);
            });
        }
    });
    let cells = slots
        .into_iter()
        .map(|s| s.into_inner().unwrap_or_else(|p| p.into_inner()))
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| Error::Internal("ablation worker exited without a result".into()))?;
    let matrix = AblationMatrix { cells };
    if let Some(dir) = out_dir {
        write_atomic(&dir.join("summary.csv"), matrix.summary_csv().as_bytes())?;
    }
    Ok(matrix)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_budget() -> AblationBudget {
        AblationBudget {
            train_demos: 4,
            heldout_demos: 3,
            failure_pairs: 3,
            reward: RewardTrainConfig { epochs: 1, pairs_per_epoch: 32, hidden: vec![8], embedding: 4, validation_pairs: 8, ..Default::default() },
            rl: None,
        }
    }

    #[test]
    fn variant_names_round_trip() {
        for v in Variant::ALL {
            assert_eq!(v.name().parse::<Variant>().unwrap(), v);
        }
        assert_eq!("forward_only".parse::<Variant>().unwrap(), Variant::ForwardOnly);
        assert!("bogus".parse::<Variant>().is_err());
    }

    #[test]
    fn one_by_one_matrix_emits_one_row() {
        let dir = tempfile::tempdir().unwrap();
        let m = run_ablation_matrix(&[Task::Push], &[Variant::Full], &[0], &tiny_budget(), Some(dir.path())).unwrap();
        assert_eq!(m.cells.len(), 1);
        assert_eq!(m.succeeded(), 1);
        let summary = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
        assert_eq!(summary.lines().count(), 2);
        assert!(dir.path().join("push/full/seed-0/reward.ckpt").exists());
    }

    #[test]
    fn failing_cells_are_recorded() {
        let budget = AblationBudget { train_demos: 0, ..tiny_budget() };
        let m = run_ablation_matrix(&[Task::Reach], &[Variant::Full, Variant::ForwardOnly], &[1], &budget, None).unwrap();
        assert_eq!(m.cells.len(), 2);
        assert_eq!(m.succeeded(), 0);
        assert!(m.summary_csv().contains("failed"));
        assert!(run_ablation_matrix(&[], &[Variant::Full], &[0], &budget, None).is_err());
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let seeds = [0, 1];
        let variants = [Variant::Full, Variant::DirectRegression];
        let a = run_ablation_matrix_with_workers(&[Task::Reach], &variants, &seeds, &tiny_budget(), None, 1).unwrap();
        let b = run_ablation_matrix_with_workers(&[Task::Reach], &variants, &seeds, &tiny_budget(), None, 3).unwrap();
        assert_eq!(a.summary_csv(), b.summary_csv());
    }
}
