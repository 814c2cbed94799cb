//! Potential-based shaping identities: the telescoping sum of shaped
//! rewards and the Bellman consistency of the analytic potential.
//!
//! cargo run --example potential_checks

use anyhow::Result;
use progress_reward::env::generate_demos;
use progress_reward::eval::{analytic_potential, bellman_consistency_check, shaping_identity_check};
use progress_reward::rng::seeded;
use progress_reward::{GridWorld, Task};
use rand::Rng;

fn main() -> Result<()> {
    let mut rng = seeded(3);
    for gamma in [0.9, 0.99, 1.0] {
        let potentials: Vec<f64> = (0..100).map(|_| rng.gen_range(-1.0..1.0)).collect();
        println!("gamma {gamma}: shaping identity residual {:.2e}", shaping_identity_check(&potentials, gamma)?);
    }

    let v = analytic_potential(10, 0.99)?;
    let shown: Vec<String> = v.iter().map(|x| format!("{x:.4}")).collect();
    println!("analytic potential, T = 10: [{}]", shown.join(", "));

    let demo = &generate_demos(&GridWorld::new(Task::Reach), 1, 0)?[0];
    for gamma in [0.9, 0.99, 1.0] {
        let worst = bellman_consistency_check(demo, gamma)?.iter().fold(0.0f64, |m, r| m.max(r.abs()));
        println!("gamma {gamma}: bellman residual on a {}-frame demo {worst:.2e}", demo.len());
    }
    Ok(())
}
