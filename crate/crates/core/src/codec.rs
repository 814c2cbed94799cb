//! Temporal distance targets and their two-hot discretization.

use crate::error::{Error, Result};

/// A pair of 1-based frame indices within a trajectory of `horizon` frames.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TimeIndexPair {
    pub u: usize,
    pub v: usize,
    pub horizon: usize,
}

impl TimeIndexPair {
    pub fn new(u: usize, v: usize, horizon: usize) -> Result<Self> {
        let pair = TimeIndexPair { u, v, horizon };
        pair.validate()?;
        Ok(pair)
    }

    fn validate(&self) -> Result<()> {
        if self.horizon < 2 {
            return Err(Error::invalid(format!("horizon {} < 2", self.horizon)));
        }
        for idx in [self.u, self.v] {
            if idx < 1 || idx > self.horizon {
                return Err(Error::invalid(format!(
                    "frame index {idx} outside 1..={}",
                    self.horizon
                )));
            }
        }
        Ok(())
    }

    pub fn swapped(self) -> Self {
        TimeIndexPair { u: self.v, v: self.u, horizon: self.horizon }
    }

    /// Interval `|v - u|`.
    pub fn span(&self) -> usize {
        self.u.abs_diff(self.v)
    }

    pub fn is_forward(&self) -> bool {
        self.v > self.u
    }
}

/// Signed temporal distance `(v - u) / (T - 1)`.
pub fn normalized_distance(pair: TimeIndexPair) -> Result<f64> {
    pair.validate()?;
    Ok((pair.v as f64 - pair.u as f64) / (pair.horizon - 1) as f64)
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// `K` bin centers spaced uniformly over `[-1, 1]`, endpoints included.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoHotCodec {
    centers: Vec<f64>,
}

impl TwoHotCodec {
    pub fn new(bins: usize) -> Result<Self> {
        if bins < 2 {
            return Err(Error::invalid(format!("two-hot codec needs at least 2 bins, got {bins}")));
        }
        let last = (bins - 1) as f64;
        let centers = (0..bins).map(|i| -1.0 + 2.0 * i as f64 / last).collect();
        Ok(TwoHotCodec { centers })
    }

    pub fn bins(&self) -> usize {
        self.centers.len()
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn spacing(&self) -> f64 {
        2.0 / (self.bins() - 1) as f64
    }

    /// Split `d` across its two bracketing centers by linear interpolation.
    ///
    /// Values outside `[-1, 1]` are rejected rather than clamped.
    pub fn encode(&self, d: f64) -> Result<Vec<f64>> {
        if !d.is_finite() || !(-1.0..=1.0).contains(&d) {
            return Err(Error::invalid(format!("two-hot target {d} outside [-1, 1]")));
        }
        let k = self.bins();
        let mut weights = vec![0.0; k];
        let pos = (d + 1.0) * (k - 1) as f64 / 2.0;
        let lo = (pos.floor() as usize).min(k - 2);
        let upper = (pos - lo as f64).clamp(0.0, 1.0);
        weights[lo] = 1.0 - upper;
        weights[lo + 1] = upper;
        Ok(weights)
    }

    /// Expected bin center under `softmax(logits)`.
    pub fn decode(&self, logits: &[f64]) -> Result<f64> {
        if logits.len() != self.bins() {
            return Err(Error::invalid(format!(
                "expected {} logits, got {}",
                self.bins(),
                logits.len()
            )));
        }
        if logits.iter().any(|z| !z.is_finite()) {
            return Err(Error::invalid("non-finite logit"));
        }
        let probs = softmax(logits);
        Ok(self.expectation(&probs))
    }

    /// Expected bin center under an already-normalized distribution.
    pub fn expectation(&self, probs: &[f64]) -> f64 {
        let value: f64 = probs.iter().zip(&self.centers).map(|(p, c)| p * c).sum();
        value.clamp(-1.0, 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pair(u: usize, v: usize, t: usize) -> TimeIndexPair {
        TimeIndexPair::new(u, v, t).unwrap()
    }

    #[test]
    fn distance_examples() {
        assert_eq!(normalized_distance(pair(1, 10, 10)).unwrap(), 1.0);
        assert_eq!(normalized_distance(pair(5, 5, 10)).unwrap(), 0.0);
        assert_eq!(normalized_distance(pair(3, 1, 3)).unwrap(), -1.0);
        assert_eq!(normalized_distance(pair(2, 5, 7)).unwrap(), 0.5);
    }

    #[test]
    fn distance_rejects_bad_pairs() {
        assert!(TimeIndexPair::new(1, 1, 1).is_err());
        assert!(TimeIndexPair::new(0, 2, 5).is_err());
        assert!(TimeIndexPair::new(1, 6, 5).is_err());
        let raw = TimeIndexPair { u: 1, v: 2, horizon: 1 };
        assert!(matches!(normalized_distance(raw), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn codec_geometry() {
        let codec = TwoHotCodec::new(20).unwrap();
        let c = codec.centers();
        assert_eq!(c[0], -1.0);
        assert_eq!(c[19], 1.0);
        for w in c.windows(2) {
            assert!(w[1] > w[0]);
            assert!((w[1] - w[0] - codec.spacing()).abs() < 1e-12);
        }
        assert!(TwoHotCodec::new(1).is_err());
    }

    #[test]
    fn encode_examples() {
        let codec = TwoHotCodec::new(20).unwrap();
        let w = codec.encode(-1.0).unwrap();
        assert_eq!(w[0], 1.0);
        assert!(w[1..].iter().all(|&x| x == 0.0));

        let w = codec.encode(codec.centers()[7]).unwrap();
        assert!((w[7] - 1.0).abs() < 1e-12);
        assert_eq!(w.iter().filter(|&&x| x > 1e-12).count(), 1);

        let mid = 0.5 * (codec.centers()[3] + codec.centers()[4]);
        let w = codec.encode(mid).unwrap();
        assert!((w[3] - 0.5).abs() < 1e-12 && (w[4] - 0.5).abs() < 1e-12);

        let w = codec.encode(1.0).unwrap();
        assert_eq!(w[19], 1.0);
    }

    #[test]
    fn encode_rejects_out_of_range() {
        let codec = TwoHotCodec::new(20).unwrap();
        assert!(codec.encode(1.0 + 1e-12).is_err());
        assert!(codec.encode(-1.5).is_err());
        assert!(codec.encode(f64::NAN).is_err());
    }

    #[test]
    fn decode_examples() {
        let codec = TwoHotCodec::new(20).unwrap();
        assert!(codec.decode(&[0.3; 20]).unwrap().abs() < 1e-12);

        let mut spike = vec![0.0; 20];
        spike[19] = 60.0;
        assert!((codec.decode(&spike).unwrap() - 1.0).abs() < 1e-12);

        // Log-space round trip, zero weights floored at -30.
        let w = codec.encode(0.37).unwrap();
        let logits: Vec<f64> = w.iter().map(|&x| if x > 0.0 { x.ln() } else { -30.0 }).collect();
        assert!((codec.decode(&logits).unwrap() - 0.37).abs() < 1e-9);

        assert!(codec.decode(&[0.0; 19]).is_err());
        let mut bad = vec![0.0; 20];
        bad[2] = f64::INFINITY;
        assert!(codec.decode(&bad).is_err());
    }

    proptest! {
        #[test]
        fn distance_antisymmetric(t in 2usize..200, a in 0usize..1000, b in 0usize..1000) {
            let u = 1 + a % t;
            let v = 1 + b % t;
            let fwd = normalized_distance(pair(u, v, t)).unwrap();
            let bwd = normalized_distance(pair(v, u, t)).unwrap();
            prop_assert_eq!(fwd, -bwd);
            prop_assert!((-1.0..=1.0).contains(&fwd));
            prop_assert_eq!(fwd > 0.0, v > u);
        }

        #[test]
        fn encode_support_and_mean(d in -1.0f64..=1.0, k in 2usize..64) {
            let codec = TwoHotCodec::new(k).unwrap();
            let w = codec.encode(d).unwrap();
            prop_assert!(w.iter().all(|&x| x >= 0.0));
            prop_assert!(w.iter().filter(|&&x| x != 0.0).count() <= 2);
            prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            let mean: f64 = w.iter().zip(codec.centers()).map(|(p, c)| p * c).sum();
            prop_assert!((mean - d).abs() < 1e-12);
        }

        #[test]
        fn decode_stays_in_range(logits in proptest::collection::vec(-50.0f64..50.0, 20)) {
            let codec = TwoHotCodec::new(20).unwrap();
            let d = codec.decode(&logits).unwrap();
            prop_assert!((-1.0..=1.0).contains(&d));
        }
    }
}
