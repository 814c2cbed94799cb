//! Empirical interval frequencies of the pair sampler against the exact
//! exponential law, with and without the uniform-interval ablation.
//!
//! cargo run --release --example pair_sampling -- [horizon] [draws]

use anyhow::Result;
use progress_reward::rng::seeded;
use progress_reward::sampling::{interval_probabilities, sample_pair, PairSamplerConfig};

fn main() -> Result<()> {
    let mut args = std::env::args().skip(1);
    let horizon: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(50);
    let draws: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(200_000);

    for cfg in [PairSamplerConfig::default(), PairSamplerConfig { uniform_intervals: true, ..Default::default() }] {
        let exact = interval_probabilities(horizon, &cfg)?;
        let mut counts = vec![0usize; horizon];
        let mut backward = 0usize;
        let mut rng = seeded(cfg.rng_seed);
        for _ in 0..draws {
            let pair = sample_pair(horizon, &cfg, &mut rng)?;
            counts[pair.span()] += 1;
            backward += usize::from(!pair.is_forward());
        }
        let label = if cfg.uniform_intervals { "uniform" } else { "exponential" };
        println!("{label}: backward fraction {:.4}", backward as f64 / draws as f64);
        let mut worst = 0.0f64;
        for (delta, &c) in counts.iter().enumerate().skip(1) {
            let freq = c as f64 / draws as f64;
            let p = exact[delta - 1];
            worst = worst.max((freq - p).abs());
            if delta <= 5 || delta == horizon - 1 {
                println!("  delta {delta:>2}: empirical {freq:.5}  exact {p:.5}");
            }
        }
        println!("  max |empirical - exact| = {worst:.5}");
    }
    Ok(())
}
