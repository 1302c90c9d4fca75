//! Poisson rate encoding of observations and linear rate decoding of output spikes.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_len, Error, Result};
use crate::snn::SpikeTrain;

/// Each of `timesteps` bits is independently 1 with probability `value`.
pub fn poisson_encode<R: Rng + ?Sized>(value: f64, timesteps: usize, rng: &mut R) -> Result<SpikeTrain> {
    if !(0.0..=1.0).contains(&value) {
        return Err(Error::domain(format!("firing probability {value} outside [0, 1]")));
    }
    if timesteps == 0 {
        return Err(Error::domain("spike train needs at least one timestep"));
    }
    // random::<f64>() is in [0, 1), so value = 1 always fires and value = 0 never does
    Ok(SpikeTrain::new((0..timesteps).map(|_| rng.random::<f64>() < value).collect()))
}

/// Encodes a whole normalized state vector.
pub fn encode_state<R: Rng + ?Sized>(values: &[f64], timesteps: usize, rng: &mut R) -> Result<Vec<SpikeTrain>> {
    values
        .iter()
        .enumerate()
        .map(|(i, &v)| poisson_encode(v, timesteps, rng).map_err(|e| e.at(format_args!("dimension {i}"))))
        .collect()
}

/// Per-dimension `(lo, hi)` bounds mapping raw observations onto `[0, 1]`.
///
/// `lo` maps to 0 and `hi` to 1; `lo > hi` flips the direction, so for a range
/// sensor `(far, near)` makes nearby obstacles fire most.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(f64, f64)>", into = "Vec<(f64, f64)>")]
pub struct StateNormalizer {
    bounds: Vec<(f64, f64)>,
}

impl StateNormalizer {
    pub fn new(bounds: Vec<(f64, f64)>) -> Result<Self> {
        for (i, &(lo, hi)) in bounds.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && hi != lo) {
                return Err(Error::domain(format!("normalizer dimension {i}: need finite lo != hi, got ({lo}, {hi})")));
            }
        }
        Ok(Self { bounds })
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn len(&self) -> usize {
        self.bounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bounds.is_empty()
    }

    /// `(x − lo)/(hi − lo)` clamped to `[0, 1]`.
    pub fn normalize(&self, raw: &[f64]) -> Result<Vec<f64>> {
        ensure_len("state", raw.len(), self.bounds.len())?;
        Ok(raw
            .iter()
            .zip(&self.bounds)
            .map(|(&x, &(lo, hi))| ((x - lo) / (hi - lo)).clamp(0.0, 1.0))
            .collect())
    }

    pub fn denormalize(&self, unit: &[f64]) -> Result<Vec<f64>> {
        ensure_len("state", unit.len(), self.bounds.len())?;
        Ok(unit.iter().zip(&self.bounds).map(|(&u, &(lo, hi))| lo + u * (hi - lo)).collect())
    }
}

impl TryFrom<Vec<(f64, f64)>> for StateNormalizer {
    type Error = Error;

    fn try_from(b: Vec<(f64, f64)>) -> Result<Self> {
        StateNormalizer::new(b)
    }
}

impl From<StateNormalizer> for Vec<(f64, f64)> {
    fn from(n: StateNormalizer) -> Self {
        n.bounds
    }
}

pub fn normalize_state(raw: &[f64], norm: &StateNormalizer) -> Result<Vec<f64>> {
    norm.normalize(raw)
}

/// `lo + (count/T)·(hi − lo)` per output neuron.
pub fn rate_decode(spike_counts: &[u32], timesteps: usize, lo: f64, hi: f64) -> Result<Vec<f64>> {
    if timesteps == 0 {
        return Err(Error::domain("cannot decode over zero timesteps"));
    }
    spike_counts
        .iter()
        .map(|&c| {
            if c as usize > timesteps {
                Err(Error::domain(format!("spike count {c} exceeds T = {timesteps}")))
            } else {
                Ok(lo + (c as f64 / timesteps as f64) * (hi - lo))
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn extreme_probabilities() {
        let mut r = rng::from_seed(1);
        assert_eq!(poisson_encode(0.0, 50, &mut r).unwrap().count(), 0);
        assert_eq!(poisson_encode(1.0, 50, &mut r).unwrap().count(), 50);
        assert!(matches!(poisson_encode(1.01, 5, &mut r), Err(Error::Domain(_))));
        assert!(matches!(poisson_encode(-0.1, 5, &mut r), Err(Error::Domain(_))));
        assert!(poisson_encode(0.5, 0, &mut r).is_err());
    }

    #[test]
    fn empirical_rate_at_half() {
        let mut r = rng::from_seed(2024);
        let train = poisson_encode(0.5, 10_000, &mut r).unwrap();
        let rate = train.count() as f64 / 10_000.0;
        assert!((rate - 0.5).abs() <= 0.015, "rate {rate}");
    }

    #[test]
    fn same_seed_same_train() {
        let a = poisson_encode(0.3, 64, &mut rng::from_seed(9)).unwrap();
        let b = poisson_encode(0.3, 64, &mut rng::from_seed(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn normalize_examples() {
        let n = StateNormalizer::new(vec![(0.2, 6.0)]).unwrap();
        assert_eq!(n.normalize(&[0.2]).unwrap(), vec![0.0]);
        assert_eq!(n.normalize(&[6.0]).unwrap(), vec![1.0]);
        assert!((n.normalize(&[3.1]).unwrap()[0] - 0.5).abs() < 1e-15);
        assert_eq!(n.normalize(&[100.0]).unwrap(), vec![1.0]);
        assert!(matches!(n.normalize(&[1.0, 2.0]), Err(Error::Shape(_))));
        assert!(StateNormalizer::new(vec![(1.0, 1.0)]).is_err());
        let inv = StateNormalizer::new(vec![(2.0, 0.2)]).unwrap();
        assert_eq!(inv.normalize(&[0.2]).unwrap(), vec![1.0]);
        assert_eq!(inv.normalize(&[6.0]).unwrap(), vec![0.0]);
        assert!((inv.normalize(&[1.1]).unwrap()[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn decode_examples() {
        assert_eq!(rate_decode(&[0], 5, 0.0, 0.5).unwrap(), vec![0.0]);
        assert_eq!(rate_decode(&[5], 5, 0.0, 0.5).unwrap(), vec![0.5]);
        assert!((rate_decode(&[2], 5, 0.0, 0.5).unwrap()[0] - 0.2).abs() < 1e-15);
        assert!(matches!(rate_decode(&[6], 5, 0.0, 0.5), Err(Error::Domain(_))));
    }

    #[test]
    fn normalizer_json() {
        let n: StateNormalizer = serde_json::from_str("[[0.2,6.0],[0,1]]").unwrap();
        assert_eq!(n.bounds(), &[(0.2, 6.0), (0.0, 1.0)]);
        assert!(serde_json::from_str::<StateNormalizer>("[[1,1]]").is_err());
    }
}
