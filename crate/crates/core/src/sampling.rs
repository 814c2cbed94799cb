//! Frame-pair sampling: exponentially weighted intervals and implicit
//! negatives (backward-ordered pairs).

use rand::Rng as _;

use crate::codec::TimeIndexPair;
use crate::error::{Error, Result};
use crate::rng::Rng;

pub const DEFAULT_LAMBDA: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct PairSamplerConfig {
    /// Decay rate of the interval law `P(Δ) ∝ exp(-λΔ)`.
    pub lambda: f64,
    /// Emit backward pairs with probability 1/2.
    pub negative_sampling: bool,
    /// Ablation: draw Δ uniformly instead of exponentially.
    pub uniform_intervals: bool,
    pub rng_seed: u64,
}

impl Default for PairSamplerConfig {
    fn default() -> Self {
        PairSamplerConfig {
            lambda: DEFAULT_LAMBDA,
            negative_sampling: true,
            uniform_intervals: false,
            rng_seed: 0,
        }
    }
}

impl PairSamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::invalid(format!("lambda must be > 0, got {}", self.lambda)));
        }
        Ok(())
    }
}

/// Exact probabilities of Δ = 1..=T-1 under `cfg`; index 0 holds Δ = 1.
pub fn interval_probabilities(horizon: usize, cfg: &PairSamplerConfig) -> Result<Vec<f64>> {
    if horizon < 2 {
        return Err(Error::invalid(format!("horizon {horizon} < 2")));
    }
    cfg.validate()?;
    let n = horizon - 1;
    if cfg.uniform_intervals {
        return Ok(vec![1.0 / n as f64; n]);
    }
    let masses: Vec<f64> = (1..=n).map(|k| (-cfg.lambda * k as f64).exp()).collect();
    let total: f64 = masses.iter().sum();
    Ok(masses.into_iter().map(|m| m / total).collect())
}

/// Draw an interval Δ ∈ {1, ..., T-1}.
pub fn sample_interval(horizon: usize, cfg: &PairSamplerConfig, rng: &mut Rng) -> Result<usize> {
    if horizon < 2 {
        return Err(Error::invalid(format!("horizon {horizon} < 2")));
    }
    cfg.validate()?;
    let n = horizon - 1;
    if cfg.uniform_intervals {
        return Ok(rng.gen_range(1..=n));
    }
    // Inverse CDF over unnormalized masses exp(-λΔ).
    let ratio = (-cfg.lambda).exp();
    let total: f64 = (1..=n).map(|k| ratio.powi(k as i32)).sum();
    let target = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    let mut mass = 1.0;
    for delta in 1..=n {
        mass *= ratio;
        acc += mass;
        if target < acc {
            return Ok(delta);
        }
    }
    Ok(n)
}

/// Draw a frame pair with `|v - u| = Δ` and `u` uniform over valid starts.
pub fn sample_pair(horizon: usize, cfg: &PairSamplerConfig, rng: &mut Rng) -> Result<TimeIndexPair> {
    let delta = sample_interval(horizon, cfg, rng)?;
    let start = rng.gen_range(1..=horizon - delta);
    let pair = TimeIndexPair { u: start, v: start + delta, horizon };
    if cfg.negative_sampling && rng.gen::<bool>() {
        Ok(pair.swapped())
    } else {
        Ok(pair)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::normalized_distance;
    use crate::rng::seeded;

    #[test]
    fn probabilities_limits() {
        let tiny = PairSamplerConfig { lambda: 1e-12, ..Default::default() };
        let p = interval_probabilities(10, &tiny).unwrap();
        assert!(p.iter().all(|&x| (x - 1.0 / 9.0).abs() < 1e-9));

        for t in [3, 10, 57] {
            let cfg = PairSamplerConfig { lambda: 0.37, ..Default::default() };
            let p = interval_probabilities(t, &cfg).unwrap();
            assert!((p[0] / p[1] - 0.37f64.exp()).abs() < 1e-12);
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }

        let uni = PairSamplerConfig { uniform_intervals: true, ..Default::default() };
        assert_eq!(interval_probabilities(5, &uni).unwrap(), vec![0.25; 4]);
    }

    #[test]
    fn rejects_bad_inputs() {
        let cfg = PairSamplerConfig::default();
        let mut rng = seeded(0);
        assert!(sample_interval(1, &cfg, &mut rng).is_err());
        assert!(sample_pair(0, &cfg, &mut rng).is_err());
        let bad = PairSamplerConfig { lambda: 0.0, ..Default::default() };
        assert!(sample_interval(10, &bad, &mut rng).is_err());
    }

    #[test]
    fn pairs_are_valid() {
        let cfg = PairSamplerConfig::default();
        let mut rng = seeded(3);
        for t in [2usize, 3, 17, 100] {
            for _ in 0..2000 {
                let p = sample_pair(t, &cfg, &mut rng).unwrap();
                assert!(p.u >= 1 && p.v >= 1 && p.u <= t && p.v <= t);
                assert!(p.span() >= 1 && p.span() < t);
            }
        }
    }

    #[test]
    fn forward_only_targets_positive() {
        let cfg = PairSamplerConfig { negative_sampling: false, ..Default::default() };
        let mut rng = seeded(11);
        for _ in 0..5000 {
            let p = sample_pair(40, &cfg, &mut rng).unwrap();
            assert!(normalized_distance(p).unwrap() > 0.0);
        }
    }

    #[test]
    fn backward_fraction_is_half() {
        let cfg = PairSamplerConfig::default();
        let mut rng = seeded(5);
        let n = 100_000;
        let backward = (0..n)
            .filter(|_| !sample_pair(30, &cfg, &mut rng).unwrap().is_forward())
            .count();
        let frac = backward as f64 / n as f64;
        assert!((0.495..=0.505).contains(&frac), "backward fraction {frac}");
    }

    #[test]
    fn same_seed_same_sequence() {
        let cfg = PairSamplerConfig::default();
        let draw = |seed| {
            let mut rng = seeded(seed);
            (0..500).map(|_| sample_pair(50, &cfg, &mut rng).unwrap()).collect::<Vec<_>>()
        };
        assert_eq!(draw(9), draw(9));
        assert_ne!(draw(9), draw(10));
    }
}
