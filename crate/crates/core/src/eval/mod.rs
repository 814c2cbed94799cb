//! Metrics and theory checks: value-order correlation, success/failure
//! separation, potential-shaping identities and the ablation matrix.

mod ablation;
mod report;

use crate::env::Trajectory;
use crate::error::{Error, Result};
use crate::reward::{value_trace, ProgressRewarder};

pub use ablation::{reversed_mean_reward, run_ablation_matrix, run_ablation_matrix_with_workers, AblationBudget, AblationCell, AblationMatrix, CellMetrics, Variant};
pub use report::{trace_csv, trace_svg, TraceSeries};

/// Ranks 1..n with ties sharing their average rank.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)
}

/// Spearman correlation between `values` and their time indices 1..T.
///
/// Ties share average ranks; a constant sequence scores 0.
pub fn value_order_correlation(values: &[f64]) -> Result<f64> {
    if values.len() < 2 {
        return Err(Error::invalid(format!("value-order correlation needs T >= 2, got {}", values.len())));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("non-finite value in trace"));
    }
    let ranks = average_ranks(values);
    let time: Vec<f64> = (1..=values.len()).map(|t| t as f64).collect();
    Ok(pearson(&ranks, &time))
}

#[derive(Debug, Clone, PartialEq)]
pub struct VocReport {
    pub per_trajectory: Vec<f64>,
    pub mean: f64,
    pub count: usize,
}

impl VocReport {
    pub fn from_scores(per_trajectory: Vec<f64>) -> Result<Self> {
        if per_trajectory.is_empty() {
            return Err(Error::invalid("VOC report over zero trajectories"));
        }
        let count = per_trajectory.len();
        let mean = per_trajectory.iter().sum::<f64>() / count as f64;
        Ok(VocReport { per_trajectory, mean, count })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("trajectory,voc\n");
        for (i, v) in self.per_trajectory.iter().enumerate() {
            out.push_str(&format!("{i},{v}\n"));
        }
        out
    }
}

/// Value trace then VOC for each held-out trajectory.
pub fn voc_suite<R: ProgressRewarder + ?Sized>(rewarder: &R, heldout: &[Trajectory]) -> Result<VocReport> {
    let scores = heldout
        .iter()
        .map(|t| value_order_correlation(&value_trace(rewarder, t)?))
        .collect::<Result<Vec<_>>>()?;
    VocReport::from_scores(scores)
}

/// Fraction of pairs whose success trace ends strictly above the failure trace.
pub fn separation_score<R: ProgressRewarder + ?Sized>(
    rewarder: &R,
    paired: &[(Trajectory, Trajectory)],
) -> Result<f64> {
    if paired.is_empty() {
        return Err(Error::invalid("separation score over zero pairs"));
    }
    let mut wins = 0;
    for (success, failure) in paired {
        let s = *value_trace(rewarder, success)?.last().expect("length >= 2");
        let f = *value_trace(rewarder, failure)?.last().expect("length >= 2");
        if s > f {
            wins += 1;
        }
    }
    Ok(wins as f64 / paired.len() as f64)
}

/// Shaped rewards `r_t = V_t - gamma * V_{t+1}`.
pub fn shaped_rewards(potentials: &[f64], gamma: f64) -> Vec<f64> {
    potentials.windows(2).map(|w| w[0] - gamma * w[1]).collect()
}

/// Residual of the telescoping identity
/// `sum_t gamma^(t-1) r_t = V_1 - gamma^(T-1) V_T` for shaped rewards.
pub fn shaping_identity_check(potentials: &[f64], gamma: f64) -> Result<f64> {
    if potentials.len() < 2 {
        return Err(Error::invalid("shaping identity needs at least 2 potentials"));
    }
    let rewards = shaped_rewards(potentials, gamma);
    let mut discounted = 0.0;
    let mut g = 1.0;
    for r in &rewards {
        discounted += g * r;
        g *= gamma;
    }
    let closed = potentials[0] - g * potentials[potentials.len() - 1];
    Ok((discounted - closed).abs())
}

/// Analytic potential `V_t = sum_{k=t}^{T-1} gamma^(k-t) / (T-1)`, `V_T = 0`.
pub fn analytic_potential(horizon: usize, gamma: f64) -> Result<Vec<f64>> {
    if horizon < 2 {
        return Err(Error::invalid(format!("potential needs T >= 2, got {horizon}")));
    }
    let step = 1.0 / (horizon - 1) as f64;
    let mut v = vec![0.0; horizon];
    for t in (0..horizon - 1).rev() {
        v[t] = step + gamma * v[t + 1];
    }
    Ok(v)
}

/// Per-step residuals `V_t - (1/(T-1) + gamma V_{t+1})` of the analytic potential
/// along `traj`; they vanish identically.
pub fn bellman_consistency_check(traj: &Trajectory, gamma: f64) -> Result<Vec<f64>> {
    let v = analytic_potential(traj.len(), gamma)?;
    let step = 1.0 / (traj.len() - 1) as f64;
    Ok(v.windows(2).map(|w| w[0] - (step + gamma * w[1])).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{generate_demos, FailureKind, GridWorld, Task};
    use crate::reward::{ConstantRewarder, ProgressOracle};

    #[test]
    fn voc_endpoints_and_ties() {
        assert_eq!(value_order_correlation(&[1.0, 2.0, 3.0, 4.0]).unwrap(), 1.0);
        assert_eq!(value_order_correlation(&[4.0, 3.0, 2.0, 1.0]).unwrap(), -1.0);
        assert_eq!(value_order_correlation(&[0.5; 7]).unwrap(), 0.0);
        assert!(value_order_correlation(&[1.0]).is_err());
        assert_eq!(average_ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    }

    #[test]
    fn oracle_voc_and_separation() {
        let world = GridWorld::new(Task::Push);
        let pairs = FailureKind::FrozenAtHalf.pairs(&world, 20, 3).unwrap();
        let all: Vec<Trajectory> = pairs.iter().flat_map(|(s, f)| [s.clone(), f.clone()]).collect();
        let oracle = ProgressOracle::new(&all);
        let successes: Vec<Trajectory> = pairs.iter().map(|p| p.0.clone()).collect();
        assert_eq!(voc_suite(&oracle, &successes).unwrap().mean, 1.0);
        assert_eq!(separation_score(&oracle, &pairs).unwrap(), 1.0);
        assert_eq!(separation_score(&ConstantRewarder(0.0), &pairs).unwrap(), 0.0);
        assert!(separation_score(&oracle, &[]).is_err());
    }

    #[test]
    fn bellman_small_cases() {
        let demos = generate_demos(&GridWorld::new(Task::Reach), 1, 0).unwrap();
        assert!(bellman_consistency_check(&demos[0], 0.99).unwrap().iter().all(|r| r.abs() < 1e-12));
        assert_eq!(analytic_potential(2, 0.99).unwrap(), vec![1.0, 0.0]);
        let v = analytic_potential(5, 1.0).unwrap();
        for (t, x) in v.iter().enumerate() {
            assert!((x - (4 - t) as f64 / 4.0).abs() < 1e-15);
        }
        assert!(analytic_potential(1, 0.9).is_err());
    }

    #[test]
    fn zero_potential_gives_zero_rewards() {
        assert!(shaped_rewards(&[0.0; 6], 0.99).iter().all(|&r| r == 0.0));
        assert_eq!(shaping_identity_check(&[0.0; 6], 0.99).unwrap(), 0.0);
    }
}
