//! Normalized temporal distances and their two-hot encoding.
//!
//! cargo run --example two_hot_codec

use anyhow::Result;
use progress_reward::{normalized_distance, TimeIndexPair, TwoHotCodec};

fn main() -> Result<()> {
    let codec = TwoHotCodec::new(20)?;
    println!("{} bins, spacing {:.4}", codec.bins(), codec.spacing());

    let horizon = 48;
    for (u, v) in [(1, 48), (10, 11), (11, 10), (30, 5)] {
        let pair = TimeIndexPair::new(u, v, horizon)?;
        let d = normalized_distance(pair)?;
        let target = codec.encode(d)?;
        let support: Vec<String> = target
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(k, p)| format!("bin {k} ({:+.3}) = {p:.3}", codec.centers()[k]))
            .collect();
        // Logits whose softmax equals the target decode back to d.
        let logits: Vec<f64> = target.iter().map(|&p| if p > 0.0 { p.ln() } else { -1e3 }).collect();
        println!("({u:>2},{v:>2}) d = {d:+.4}  ->  {}  ->  decoded {:+.4}", support.join(", "), codec.decode(&logits)?);
    }
    Ok(())
}
