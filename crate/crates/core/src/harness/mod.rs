//! Configuration files, run directories with manifests, and the command
//! implementations behind the `progress-reward` binary.

mod config;
mod manifest;

use std::path::{Path, PathBuf};

use crate::env::{read_dataset, Dataset, FailureKind, GridWorld, Task, Trajectory};
use crate::error::{Error, Result};
use crate::eval::{
    bellman_consistency_check, run_ablation_matrix_with_workers, separation_score, trace_csv, trace_svg, voc_suite,
    AblationBudget, AblationMatrix, TraceSeries, Variant,
};
use crate::reward::{train_reward_model, value_trace, RewardModelHandle};
use crate::rl::{train_policy, RlConfig};
use crate::rng::derive_seed;

pub use config::{EnvSection, EvalSection, ExperimentConfig};
pub use manifest::{FileEntry, RunDir, RunManifest, StageTiming, MANIFEST_NAME};

/// Overrides the output directory of every command.
pub const OUT_ENV: &str = "PROGRESS_REWARD_OUT";
/// Worker threads for the ablation matrix (cells are independent).
pub const THREADS_ENV: &str = "PROGRESS_REWARD_THREADS";

/// Output directory precedence: explicit flag, environment, config, fallback.
pub fn resolve_out(flag: Option<&Path>, cfg: Option<&ExperimentConfig>, fallback: &str) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    if let Some(p) = std::env::var_os(OUT_ENV).filter(|v| !v.is_empty()) {
        return PathBuf::from(p);
    }
    cfg.and_then(|c| c.output_dir.clone()).unwrap_or_else(|| PathBuf::from(fallback))
}

/// Worker count from the environment; 1 when unset.
pub fn worker_threads() -> Result<usize> {
    match std::env::var(THREADS_ENV) {
        Ok(v) if !v.trim().is_empty() => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(Error::Config(format!("{THREADS_ENV} must be a positive integer, got {v:?}"))),
        },
        _ => Ok(1),
    }
}

fn load_config(path: Option<&Path>) -> Result<ExperimentConfig> {
    match path {
        Some(p) => ExperimentConfig::load(p),
        None => Ok(ExperimentConfig::default()),
    }
}

fn load_demos(path: &Path) -> Result<Dataset> {
    read_dataset(path)
}

#[derive(Debug, Clone)]
pub struct GenDemosArgs {
    pub task: Task,
    pub n: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub file_name: String,
}

/// Generate `n` expert demos and write them as a dataset file.
pub fn cmd_gen_demos(args: &GenDemosArgs) -> Result<RunManifest> {
    if args.n == 0 {
        return Err(Error::Config("--n must be at least 1".into()));
    }
    let out = resolve_out(args.out.as_deref(), None, "runs/demos");
    let hash = crate::rng::fnv1a64(format!("gen-demos|{}|{}|{}", args.task, args.n, args.seed).as_bytes());
    let mut run = RunDir::open(&out, "gen-demos", hash)?;
    let world = GridWorld::new(args.task);
    let demos = crate::env::generate_demos(&world, args.n, args.seed)?;
    run.stage("generate");
    let dataset = Dataset::new(args.task, world.height, world.width, demos)?;
    run.write(&args.file_name, &dataset.to_bytes())?;
    run.stage("write");
    run.finish()
}

#[derive(Debug, Clone, Default)]
pub struct TrainRewardArgs {
    pub demos: PathBuf,
    pub heldout: Option<PathBuf>,
    pub config: Option<PathBuf>,
    pub ablation: Option<Variant>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

/// Train a progress model on a dataset file; writes `reward.ckpt`,
/// `metrics.csv` and the resolved `config.ini`.
pub fn cmd_train_reward(args: &TrainRewardArgs) -> Result<RunManifest> {
    let mut cfg = load_config(args.config.as_deref())?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(v) = args.ablation {
        cfg.reward.ablations = v.ablations();
    }
    cfg.validate()?;
    let train = load_demos(&args.demos)?;
    let heldout = args.heldout.as_deref().map(load_demos).transpose()?;
    let out = resolve_out(args.out.as_deref(), Some(&cfg), "runs/reward");
    let mut run = RunDir::open(&out, "train-reward", cfg.hash())?;
    run.stage("load");

    let reward_cfg = crate::reward::RewardTrainConfig { rng_seed: derive_seed(cfg.seed, "reward"), ..cfg.reward.clone() };
    let handle = train_reward_model(&train.trajectories, heldout.as_ref().map(|d| d.trajectories.as_slice()), &reward_cfg)?;
    run.stage("train");

    handle.save(&run.path("reward.ckpt"))?;
    run.record("reward.ckpt")?;
    run.write("metrics.csv", handle.metrics_csv().as_bytes())?;
    run.write("config.ini", cfg.render().as_bytes())?;
    run.stage("write");
    run.finish()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalMode {
    Voc,
    Separation,
    Bellman,
}

impl std::str::FromStr for EvalMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "voc" => Ok(EvalMode::Voc),
            "separation" => Ok(EvalMode::Separation),
            "bellman" => Ok(EvalMode::Bellman),
            _ => Err(Error::Config(format!("unknown eval mode {s:?} (expected voc, separation, bellman)"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct EvalArgs {
    pub mode: EvalMode,
    pub checkpoint: Option<PathBuf>,
    pub demos: Option<PathBuf>,
    /// Task for generated failure pairs (separation mode).
    pub task: Task,
    pub failures: Vec<FailureKind>,
    pub pairs: usize,
    pub seed: u64,
    pub gamma: f64,
    pub svg: bool,
    pub out: Option<PathBuf>,
}

impl Default for EvalArgs {
    fn default() -> Self {
        EvalArgs {
            mode: EvalMode::Voc,
            checkpoint: None,
            demos: None,
            task: Task::Push,
            failures: vec![FailureKind::FrozenAtHalf, FailureKind::Mimic],
            pairs: 100,
            seed: 0,
            gamma: 0.99,
            svg: false,
            out: None,
        }
    }
}

/// Outcome of `cmd_eval`: the headline number plus the manifest.
#[derive(Debug, Clone)]
pub struct EvalOutcome {
    pub headline: Vec<(String, f64)>,
    pub manifest: RunManifest,
}

fn require<'a>(p: &'a Option<PathBuf>, what: &str, mode: &str) -> Result<&'a Path> {
    p.as_deref().ok_or_else(|| Error::Config(format!("{mode} mode needs --{what}")))
}

fn summary_csv(rows: &[(String, f64)]) -> String {
    let mut s = String::from("metric,value\n");
    for (k, v) in rows {
        s.push_str(&format!("{k},{v}\n"));
    }
    s
}

pub fn cmd_eval(args: &EvalArgs) -> Result<EvalOutcome> {
    let out = resolve_out(args.out.as_deref(), None, "runs/eval");
    let hash = crate::rng::fnv1a64(format!("{args:?}").as_bytes());
    let headline: Vec<(String, f64)>;
    let mut run;
    match args.mode {
        EvalMode::Voc => {
            let handle = RewardModelHandle::load(require(&args.checkpoint, "checkpoint", "voc")?)?;
            let demos = load_demos(require(&args.demos, "demos", "voc")?)?;
            run = RunDir::open(&out, "eval voc", hash)?;
            let report = voc_suite(&handle, &demos.trajectories)?;
            run.write("voc.csv", report.to_csv().as_bytes())?;
            if args.svg {
                let series = demos
                    .trajectories
                    .iter()
                    .take(4)
                    .enumerate()
                    .map(|(i, t)| Ok(TraceSeries { label: format!("demo {i}"), values: value_trace(&handle, t)? }))
                    .collect::<Result<Vec<_>>>()?;
                run.write("voc_traces.svg", trace_svg("Value traces on held-out demos", &series).as_bytes())?;
            }
            headline = vec![("mean_voc".into(), report.mean), ("trajectories".into(), report.count as f64)];
        }
        EvalMode::Separation => {
            let handle = RewardModelHandle::load(require(&args.checkpoint, "checkpoint", "separation")?)?;
            if args.pairs == 0 {
                return Err(Error::Config("--pairs must be at least 1".into()));
            }
            run = RunDir::open(&out, "eval separation", hash)?;
            let world = GridWorld::new(args.task);
            let mut rows = Vec::new();
            for &kind in &args.failures {
                if kind == FailureKind::Mimic && !args.task.has_object() {
                    continue;
                }
                let pairs = kind.pairs(&world, args.pairs, args.seed)?;
                rows.push((format!("separation_{}", kind.name()), separation_score(&handle, &pairs)?));
                let (s, f) = &pairs[0];
                let s = value_trace(&handle, s)?;
                let f = value_trace(&handle, f)?;
                run.write(&format!("trace_{}_success.csv", kind.name()), trace_csv(&s).as_bytes())?;
                run.write(&format!("trace_{}_failure.csv", kind.name()), trace_csv(&f).as_bytes())?;
                if args.svg {
                    let series = [
                        TraceSeries { label: "success".into(), values: s },
                        TraceSeries { label: kind.name().into(), values: f },
                    ];
                    let title = format!("{}: success vs {}", args.task, kind.name());
                    run.write(&format!("trace_{}.svg", kind.name()), trace_svg(&title, &series).as_bytes())?;
                }
            }
            if rows.is_empty() {
                return Err(Error::Config(format!("no applicable failure kinds for task {}", args.task)));
            }
            headline = rows;
        }
        EvalMode::Bellman => {
            let demos = load_demos(require(&args.demos, "demos", "bellman")?)?;
            run = RunDir::open(&out, "eval bellman", hash)?;
            let mut csv = String::from("trajectory,length,max_abs_residual\n");
            let mut worst = 0.0f64;
            for (i, t) in demos.trajectories.iter().enumerate() {
                let max = bellman_consistency_check(t, args.gamma)?.iter().fold(0.0f64, |m, r| m.max(r.abs()));
                worst = worst.max(max);
                csv.push_str(&format!("{i},{},{max:e}\n", t.len()));
            }
            run.write("bellman.csv", csv.as_bytes())?;
            headline = vec![("max_abs_residual".into(), worst)];
        }
    }
    run.write("summary.csv", summary_csv(&headline).as_bytes())?;
    run.stage("eval");
    Ok(EvalOutcome { headline, manifest: run.finish()? })
}

#[derive(Debug, Clone, Default)]
pub struct TrainPolicyArgs {
    pub checkpoint: Option<PathBuf>,
    pub sparse_only: bool,
    pub task: Option<Task>,
    pub config: Option<PathBuf>,
    pub alpha: Option<f64>,
    pub seed: Option<u64>,
    pub steps: Option<usize>,
    pub out: Option<PathBuf>,
}

/// Resolved RL config for a policy run.
pub fn policy_config(cfg: &ExperimentConfig, args: &TrainPolicyArgs) -> RlConfig {
    let mut rl = cfg.rl.clone();
    if let Some(a) = args.alpha {
        rl.alpha = a;
    }
    if let Some(s) = args.steps {
        rl.max_steps = s;
    }
    rl.rng_seed = derive_seed(cfg.seed, "rl");
    rl
}

/// Train a policy on the combined reward (or the sparse-only baseline);
/// writes `curve.csv` and `policy.ckpt`.
pub fn cmd_train_policy(args: &TrainPolicyArgs) -> Result<RunManifest> {
    let mut cfg = load_config(args.config.as_deref())?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(task) = args.task {
        cfg.env.task = task;
    }
    let rl = policy_config(&cfg, args);
    rl.validate()?;
    let handle = match (&args.checkpoint, args.sparse_only) {
        (Some(p), false) => Some(RewardModelHandle::load(p)?),
        (None, true) => None,
        (Some(_), true) => return Err(Error::Config("--checkpoint and --sparse-only are mutually exclusive".into())),
        (None, false) => return Err(Error::Config("pass --checkpoint <reward.ckpt> or --sparse-only".into())),
    };
    let out = resolve_out(args.out.as_deref(), Some(&cfg), "runs/policy");
    let hash = crate::rng::fnv1a64(format!("{}|{rl:?}|{}", cfg.render(), args.sparse_only).as_bytes());
    let mut run = RunDir::open(&out, "train-policy", hash)?;
    let world = GridWorld::new(cfg.env.task);
    let trained = train_policy(&world, handle.as_ref(), &rl)?;
    run.stage("train");
    run.write("curve.csv", trained.curve.to_csv().as_bytes())?;
    trained.q.save(&run.path("policy.ckpt"))?;
    run.record("policy.ckpt")?;
    run.write("config.ini", cfg.render().as_bytes())?;
    run.stage("write");
    run.finish()
}

#[derive(Debug, Clone, Default)]
pub struct AblateArgs {
    pub config: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

/// Budget for the ablation matrix from a config.
pub fn ablation_budget(cfg: &ExperimentConfig) -> AblationBudget {
    AblationBudget {
        train_demos: cfg.env.demos,
        heldout_demos: cfg.env.heldout_demos,
        failure_pairs: cfg.eval.failure_pairs,
        reward: cfg.reward.clone(),
        rl: cfg.eval.train_policy.then(|| cfg.rl.clone()),
    }
}

/// Run the ablation matrix. Fails with a total-failure error only when
/// every cell failed; the summary is written either way.
pub fn cmd_ablate(args: &AblateArgs) -> Result<(AblationMatrix, RunManifest)> {
    let cfg = load_config(args.config.as_deref())?;
    cfg.validate()?;
    let workers = worker_threads()?;
    let out = resolve_out(args.out.as_deref(), Some(&cfg), "runs/ablate");
    let mut run = RunDir::open(&out, "ablate", cfg.hash())?;
    let budget = ablation_budget(&cfg);
    let matrix =
        run_ablation_matrix_with_workers(&cfg.eval.tasks, &cfg.eval.variants, &cfg.eval.seeds, &budget, Some(run.root()), workers)?;
    run.stage("matrix");
    run.record("summary.csv")?;
    for task in &cfg.eval.tasks {
        if run.path(task.name()).is_dir() {
            run.record_tree(Path::new(task.name()))?;
        }
    }
    run.write("config.ini", cfg.render().as_bytes())?;
    let manifest = run.finish()?;
    if matrix.succeeded() == 0 {
        let first = matrix.cells.iter().find_map(|c| c.outcome.as_ref().err()).cloned().unwrap_or_default();
        return Err(Error::TotalFailure(format!("all {} cells failed; first error: {first}", matrix.cells.len())));
    }
    Ok((matrix, manifest))
}

/// Demos from a dataset file when given, else generated from the config.
pub fn demos_for(cfg: &ExperimentConfig, file: Option<&Path>, n: usize, tag: &str) -> Result<Vec<Trajectory>> {
    match file {
        Some(p) => Ok(load_demos(p)?.trajectories),
        None => crate::env::generate_demos(&GridWorld::new(cfg.env.task), n, derive_seed(cfg.seed, tag)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_mode_parsing() {
        assert_eq!("voc".parse::<EvalMode>().unwrap(), EvalMode::Voc);
        assert_eq!("bellman".parse::<EvalMode>().unwrap(), EvalMode::Bellman);
        assert_eq!("nope".parse::<EvalMode>().unwrap_err().exit_code(), 2);
    }

    #[test]
    fn gen_demos_rejects_zero_and_reproduces() {
        let dir = tempfile::tempdir().unwrap();
        let args = |n: usize, sub: &str| GenDemosArgs {
            task: Task::Reach,
            n,
            seed: 7,
            out: Some(dir.path().join(sub)),
            file_name: "demos.trdm".into(),
        };
        assert_eq!(cmd_gen_demos(&args(0, "zero")).unwrap_err().exit_code(), 2);
        let a = cmd_gen_demos(&args(5, "a")).unwrap();
        let b = cmd_gen_demos(&args(5, "b")).unwrap();
        assert_eq!(a.files, b.files);
        assert_eq!(read_dataset(&dir.path().join("a/demos.trdm")).unwrap().trajectories.len(), 5);
    }

    #[test]
    fn train_policy_needs_exactly_one_reward_source() {
        let args = TrainPolicyArgs::default();
        assert_eq!(cmd_train_policy(&args).unwrap_err().exit_code(), 2);
    }
}
