use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::env::Task;
use crate::error::{Error, Result};
use crate::eval::Variant;
use crate::reward::RewardTrainConfig;
use crate::rl::RlConfig;
use crate::rng::fnv1a64;

#[derive(Debug, Clone, PartialEq)]
pub struct EnvSection {
    pub task: Task,
    pub demos: usize,
    pub heldout_demos: usize,
    /// Optional pre-generated dataset files; must exist when set.
    pub demo_file: Option<PathBuf>,
    pub heldout_file: Option<PathBuf>,
}

impl Default for EnvSection {
    fn default() -> Self {
        EnvSection { task: Task::Reach, demos: 100, heldout_demos: 100, demo_file: None, heldout_file: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalSection {
    pub tasks: Vec<Task>,
    pub variants: Vec<Variant>,
    pub seeds: Vec<u64>,
    pub failure_pairs: usize,
    /// Also train a policy per ablation cell.
    pub train_policy: bool,
}

impl Default for EvalSection {
    fn default() -> Self {
        EvalSection {
            tasks: vec![Task::Reach, Task::Push],
            variants: Variant::ALL.to_vec(),
            seeds: vec![0, 1, 2],
            failure_pairs: 100,
            train_policy: false,
        }
    }
}

/// Everything one run needs, loaded from a sectioned `key = value` file.
///
/// ```text
/// seed = 7
/// output_dir = runs/reach
///
/// [reward]
/// epochs = 50   # comments run to end of line
/// ```
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
    pub env: EnvSection,
    pub reward: RewardTrainConfig,
    pub rl: RlConfig,
    pub eval: EvalSection,
}


fn parse<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e| Error::Config(format!("{key}: cannot parse {value:?}: {e}")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    value.split(',').map(str::trim).filter(|s| !s.is_empty()).map(|s| parse(key, s)).collect()
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!("{key}: expected true or false, got {value:?}"))),
    }
}

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        let mut section = String::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let at = |e: Error| match e {
                Error::Config(m) => Error::Config(format!("line {}: {m}", n + 1)),
                other => other,
            };
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = name.trim().to_string();
                if !["env", "reward", "rl", "eval"].contains(&section.as_str()) {
                    return Err(at(Error::Config(format!("unknown section [{section}]"))));
                }
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| at(Error::Config(format!("expected key = value, got {line:?}"))))?;
            cfg.set(&section, key.trim(), value.trim()).map_err(at)?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        let cfg = Self::parse(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn set(&mut self, section: &str, key: &str, v: &str) -> Result<()> {
        let full = if section.is_empty() { key.to_string() } else { format!("{section}.{key}") };
        let k = full.as_str();
        match k {
            "seed" => self.seed = parse(k, v)?,
            "output_dir" => self.output_dir = Some(PathBuf::from(v)),

            "env.task" => self.env.task = parse(k, v)?,
            "env.demos" => self.env.demos = parse(k, v)?,
            "env.heldout_demos" => self.env.heldout_demos = parse(k, v)?,
            "env.demo_file" => self.env.demo_file = Some(PathBuf::from(v)),
            "env.heldout_file" => self.env.heldout_file = Some(PathBuf::from(v)),

            "reward.epochs" => self.reward.epochs = parse(k, v)?,
            "reward.pairs_per_epoch" => self.reward.pairs_per_epoch = parse(k, v)?,
            "reward.batch_size" => self.reward.batch_size = parse(k, v)?,
            "reward.learning_rate" => self.reward.learning_rate = parse(k, v)?,
            "reward.lambda" => self.reward.lambda = parse(k, v)?,
            "reward.bins" => self.reward.bins = parse(k, v)?,
            "reward.hidden" => self.reward.hidden = parse_list(k, v)?,
            "reward.embedding" => self.reward.embedding = parse(k, v)?,
            "reward.validation_pairs" => self.reward.validation_pairs = parse(k, v)?,
            "reward.forward_only" => self.reward.ablations.forward_only = parse_bool(k, v)?,
            "reward.uniform_intervals" => self.reward.ablations.uniform_intervals = parse_bool(k, v)?,
            "reward.direct_regression" => self.reward.ablations.direct_regression = parse_bool(k, v)?,

            "rl.gamma" => self.rl.gamma = parse(k, v)?,
            "rl.n_step" => self.rl.n_step = parse(k, v)?,
            "rl.replay_capacity" => self.rl.replay_capacity = parse(k, v)?,
            "rl.batch_size" => self.rl.batch_size = parse(k, v)?,
            "rl.tau" => self.rl.tau = parse(k, v)?,
            "rl.epsilon_start" => self.rl.epsilon_start = parse(k, v)?,
            "rl.epsilon_end" => self.rl.epsilon_end = parse(k, v)?,
            "rl.epsilon_decay_steps" => self.rl.epsilon_decay_steps = parse(k, v)?,
            "rl.alpha" => self.rl.alpha = parse(k, v)?,
            "rl.max_steps" => self.rl.max_steps = parse(k, v)?,
            "rl.eval_interval" => self.rl.eval_interval = parse(k, v)?,
            "rl.eval_episodes" => self.rl.eval_episodes = parse(k, v)?,
            "rl.learning_rate" => self.rl.learning_rate = parse(k, v)?,
            "rl.hidden" => self.rl.hidden = parse_list(k, v)?,
            "rl.learning_starts" => self.rl.learning_starts = parse(k, v)?,
            "rl.train_every" => self.rl.train_every = parse(k, v)?,

            "eval.tasks" => self.eval.tasks = parse_list(k, v)?,
            "eval.variants" => self.eval.variants = parse_list(k, v)?,
            "eval.seeds" => self.eval.seeds = parse_list(k, v)?,
            "eval.failure_pairs" => self.eval.failure_pairs = parse(k, v)?,
            "eval.train_policy" => self.eval.train_policy = parse_bool(k, v)?,
            _ => return Err(Error::Config(format!("unknown key {k:?}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.reward.validate()?;
        self.rl.validate()?;
        let a = self.reward.ablations;
        if [a.forward_only, a.uniform_intervals, a.direct_regression].iter().filter(|&&f| f).count() > 1 {
            return Err(Error::Config("at most one ablation flag may be set".into()));
        }
        if self.env.demos == 0 || self.env.heldout_demos == 0 {
            return Err(Error::Config("env.demos and env.heldout_demos must be positive".into()));
        }
        for path in [&self.env.demo_file, &self.env.heldout_file].into_iter().flatten() {
            if !path.is_file() {
                return Err(Error::Config(format!("referenced file {} does not exist", path.display())));
            }
        }
        if self.eval.tasks.is_empty() || self.eval.variants.is_empty() || self.eval.seeds.is_empty() {
            return Err(Error::Config("eval.tasks, eval.variants and eval.seeds must be non-empty".into()));
        }
        Ok(())
    }

    /// Canonical text form; parsing it yields an equal config.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "seed = {}", self.seed);
        if let Some(d) = &self.output_dir {
            let _ = writeln!(s, "output_dir = {}", d.display());
        }
        let e = &self.env;
        let _ = writeln!(s, "\n[env]\ntask = {}\ndemos = {}\nheldout_demos = {}", e.task, e.demos, e.heldout_demos);
        if let Some(p) = &e.demo_file {
            let _ = writeln!(s, "demo_file = {}", p.display());
        }
        if let Some(p) = &e.heldout_file {
            let _ = writeln!(s, "heldout_file = {}", p.display());
        }
        let r = &self.reward;
        let _ = writeln!(
            s,
            "\n[reward]\nepochs = {}\npairs_per_epoch = {}\nbatch_size = {}\nlearning_rate = {:?}\nlambda = {:?}\nbins = {}\nhidden = {}\nembedding = {}\nvalidation_pairs = {}\nforward_only = {}\nuniform_intervals = {}\ndirect_regression = {}",
            r.epochs, r.pairs_per_epoch, r.batch_size, r.learning_rate, r.lambda, r.bins, join(&r.hidden), r.embedding,
            r.validation_pairs, r.ablations.forward_only, r.ablations.uniform_intervals, r.ablations.direct_regression
        );
        let l = &self.rl;
        let _ = writeln!(
            s,
            "\n[rl]\ngamma = {:?}\nn_step = {}\nreplay_capacity = {}\nbatch_size = {}\ntau = {:?}\nepsilon_start = {:?}\nepsilon_end = {:?}\nepsilon_decay_steps = {}\nalpha = {:?}\nmax_steps = {}\neval_interval = {}\neval_episodes = {}\nlearning_rate = {:?}\nhidden = {}\nlearning_starts = {}\ntrain_every = {}",
            l.gamma, l.n_step, l.replay_capacity, l.batch_size, l.tau, l.epsilon_start, l.epsilon_end, l.epsilon_decay_steps,
            l.alpha, l.max_steps, l.eval_interval, l.eval_episodes, l.learning_rate, join(&l.hidden), l.learning_starts, l.train_every
        );
        let v = &self.eval;
        let _ = writeln!(
            s,
            "\n[eval]\ntasks = {}\nvariants = {}\nseeds = {}\nfailure_pairs = {}\ntrain_policy = {}",
            join(&v.tasks), join(&v.variants), join(&v.seeds), v.failure_pairs, v.train_policy
        );
        s
    }

    /// FNV-1a of the canonical rendering.
    pub fn hash(&self) -> u64 {
        fnv1a64(self.render().as_bytes())
    }
}
