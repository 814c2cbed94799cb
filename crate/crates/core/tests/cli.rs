//! End-to-end runs of the binary: exit codes, manifests and determinism.

use std::path::Path;
use std::process::{Command, Output};

use progress_reward::harness::{RunManifest, MANIFEST_NAME};

const BIN: &str = env!("CARGO_BIN_EXE_progress-reward");

const TINY: &str = "seed = 3
[reward]
epochs = 1
pairs_per_epoch = 64
hidden = 16
embedding = 8
validation_pairs = 16
[rl]
max_steps = 300
learning_starts = 50
replay_capacity = 500
batch_size = 16
hidden = 16
eval_interval = 150
eval_episodes = 2
[eval]
tasks = reach
variants = full
seeds = 0
failure_pairs = 3
";

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).env_remove("PROGRESS_REWARD_OUT").env_remove("PROGRESS_REWARD_THREADS").output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn gen(dir: &Path, sub: &str, n: &str) -> std::path::PathBuf {
    let out = dir.join(sub);
    let o = run(&["gen-demos", "--task", "reach", "--n", n, "--seed", "7", "--out", p(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    out.join("demos.trdm")
}

#[test]
fn gen_demos_is_reproducible_and_validated() {
    let dir = tempfile::tempdir().unwrap();
    let a = gen(dir.path(), "a", "100");
    let b = gen(dir.path(), "b", "100");
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let ds = progress_reward::env::read_dataset(&a).unwrap();
    assert_eq!(ds.trajectories.len(), 100);
    let m = RunManifest::read(&dir.path().join("a").join(MANIFEST_NAME)).unwrap();
    assert!(m.verify(&dir.path().join("a")).unwrap().is_empty());

    assert_eq!(code(&run(&["gen-demos", "--n", "0", "--out", p(&dir.path().join("z"))])), 2);
    assert_eq!(code(&run(&["gen-demos", "--task", "fly", "--out", p(&dir.path().join("y"))])), 2);
    assert_eq!(code(&run(&["frobnicate"])), 2);
}

#[test]
fn train_reward_flags_and_corruption() {
    let dir = tempfile::tempdir().unwrap();
    let demos = gen(dir.path(), "demos", "4");
    let cfg = dir.path().join("tiny.ini");
    std::fs::write(&cfg, TINY).unwrap();

    let out = dir.path().join("reward");
    let o = run(&["train-reward", "--demos", p(&demos), "--config", p(&cfg), "--ablation", "forward-only", "--out", p(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["reward.ckpt", "metrics.csv", "config.ini", MANIFEST_NAME] {
        assert!(out.join(f).exists(), "{f}");
    }
    assert!(std::fs::read_to_string(out.join("config.ini")).unwrap().contains("forward_only = true"));
    assert!(!out.join(".lock").exists());

    let bytes = std::fs::read(&demos).unwrap();
    let truncated = dir.path().join("truncated.trdm");
    std::fs::write(&truncated, &bytes[..bytes.len() / 2]).unwrap();
    let o = run(&["train-reward", "--demos", p(&truncated), "--out", p(&dir.path().join("t"))]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("checksum"));

    std::fs::write(&cfg, "[reward]\nepohcs = 3\n").unwrap();
    let o = run(&["train-reward", "--demos", p(&demos), "--config", p(&cfg), "--out", p(&dir.path().join("u"))]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));

    std::fs::write(&cfg, "[reward]\nlearning_rate = 1e307\nepochs = 2\npairs_per_epoch = 64\n").unwrap();
    let o = run(&["train-reward", "--demos", p(&demos), "--config", p(&cfg), "--out", p(&dir.path().join("d"))]);
    assert_eq!(code(&o), 4, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn eval_modes() {
    let dir = tempfile::tempdir().unwrap();
    let demos = gen(dir.path(), "demos", "4");
    let o = run(&["eval", "--mode", "bellman", "--demos", p(&demos), "--out", p(&dir.path().join("b"))]);
    assert_eq!(code(&o), 0);
    let summary = std::fs::read_to_string(dir.path().join("b/summary.csv")).unwrap();
    let residual: f64 = summary.lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!(residual < 1e-12);

    assert_eq!(code(&run(&["eval", "--mode", "psychic"])), 2);
    assert_eq!(code(&run(&["eval", "--mode", "voc", "--demos", p(&demos), "--out", p(&dir.path().join("v"))])), 2);

    let cfg = dir.path().join("tiny.ini");
    std::fs::write(&cfg, TINY).unwrap();
    let reward = dir.path().join("reward");
    assert_eq!(code(&run(&["train-reward", "--demos", p(&demos), "--config", p(&cfg), "--out", p(&reward)])), 0);
    let ckpt = reward.join("reward.ckpt");
    let o = run(&["eval", "--mode", "voc", "--checkpoint", p(&ckpt), "--demos", p(&demos), "--svg", "--out", p(&dir.path().join("v"))]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("v/voc_traces.svg").exists());
    let o = run(&["eval", "--mode", "separation", "--checkpoint", p(&ckpt), "--task", "reach", "--failures", "frozen-at-half", "--pairs", "3", "--out", p(&dir.path().join("s"))]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("separation_frozen_at_half"));

    let mut bad = std::fs::read(&ckpt).unwrap();
    bad[0] ^= 0xff;
    std::fs::write(&ckpt, bad).unwrap();
    let o = run(&["eval", "--mode", "voc", "--checkpoint", p(&ckpt), "--demos", p(&demos), "--out", p(&dir.path().join("c"))]);
    assert_eq!(code(&o), 3);
}

#[test]
fn train_policy_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("tiny.ini");
    std::fs::write(&cfg, TINY).unwrap();
    let arm = |sub: &str| {
        let out = dir.path().join(sub);
        let o = run(&["train-policy", "--sparse-only", "--task", "reach", "--config", p(&cfg), "--out", p(&out)]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        (std::fs::read(out.join("curve.csv")).unwrap(), std::fs::read(out.join("policy.ckpt")).unwrap())
    };
    assert_eq!(arm("a"), arm("b"));
    assert_eq!(code(&run(&["train-policy", "--config", p(&cfg), "--out", p(&dir.path().join("n"))])), 2);
}

#[test]
fn ablate_smoke_and_total_failure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("tiny.ini");
    std::fs::write(&cfg, TINY).unwrap();
    let out = dir.path().join("ab");
    let o = run(&["ablate", "--config", p(&cfg), "--out", p(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(std::fs::read_to_string(out.join("summary.csv")).unwrap().lines().count(), 2);
    let m = RunManifest::read(&out.join(MANIFEST_NAME)).unwrap();
    assert!(m.files.iter().any(|f| f.path.ends_with("reward.ckpt")));
    assert!(m.verify(&out).unwrap().is_empty());

    std::fs::write(&cfg, format!("{TINY}failure_pairs = 0\n")).unwrap();
    let o = run(&["ablate", "--config", p(&cfg), "--out", p(&dir.path().join("fail"))]);
    assert_eq!(code(&o), 5, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn env_overrides_output_and_lock_blocks_concurrent_runs() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("from-env");
    let o = Command::new(BIN)
        .args(["gen-demos", "--n", "2"])
        .env("PROGRESS_REWARD_OUT", &target)
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert!(target.join("demos.trdm").exists());

    std::fs::write(target.join(".lock"), b"").unwrap();
    assert_eq!(code(&run(&["gen-demos", "--n", "2", "--out", p(&target)])), 2);

    let o = Command::new(BIN)
        .args(["ablate", "--out", p(&dir.path().join("t"))])
        .env("PROGRESS_REWARD_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
}
