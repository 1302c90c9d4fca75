//! Firing-rate homeostasis metrics over a set of trials.
//!
//! For each trial take the per-neuron firing rates, then its mean `m_p` and population
//! standard deviation `σ_p`. Over `P` trials:
//! `FR_m = mean(m_p)`, `FR_std^m = mean(σ_p)`, `FR_std^s = std(σ_p)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::snn::FiringRecorder;

/// Spike counts of every recorded neuron over one trial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecording {
    pub trial_id: u64,
    pub condition: String,
    pub counts: Vec<u64>,
    pub timesteps: u64,
}

impl TrialRecording {
    /// `include_output = false` restricts the recording to hidden layers.
    pub fn from_recorder(rec: &FiringRecorder, trial_id: u64, condition: &str, include_output: bool) -> Self {
        Self {
            trial_id,
            condition: condition.to_string(),
            counts: rec.flat_counts(include_output),
            timesteps: rec.timesteps,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.timesteps == 0 {
            return Err(Error::domain(format!("trial {} recorded zero timesteps", self.trial_id)));
        }
        if let Some(c) = self.counts.iter().find(|&&c| c > self.timesteps) {
            return Err(Error::domain(format!("trial {}: count {c} exceeds {} timesteps", self.trial_id, self.timesteps)));
        }
        Ok(())
    }
}

/// `count_i / timesteps` per neuron.
pub fn trial_rates(rec: &TrialRecording) -> Result<Vec<f64>> {
    rec.validate()?;
    let t = rec.timesteps as f64;
    Ok(rec.counts.iter().map(|&c| c as f64 / t).collect())
}

/// Mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HomeostasisReport {
    pub condition: String,
    #[serde(rename = "P")]
    pub trials: usize,
    pub fr_m: f64,
    pub fr_std_m: f64,
    pub fr_std_s: f64,
}

pub fn homeostasis_metrics(trials: &[TrialRecording]) -> Result<HomeostasisReport> {
    let first = trials.first().ok_or_else(|| Error::domain("homeostasis needs at least one trial"))?;
    let n = first.counts.len();
    if n == 0 {
        return Err(Error::shape("trials record no neurons"));
    }
    let mut means = Vec::with_capacity(trials.len());
    let mut stds = Vec::with_capacity(trials.len());
    for tr in trials {
        if tr.counts.len() != n {
            return Err(Error::shape(format!(
                "trial {} records {} neurons, trial {} records {n}",
                tr.trial_id,
                tr.counts.len(),
                first.trial_id
            )));
        }
        let (m, s) = mean_std(&trial_rates(tr)?);
        means.push(m);
        stds.push(s);
    }
    let (fr_m, _) = mean_std(&means);
    let (fr_std_m, fr_std_s) = mean_std(&stds);
    Ok(HomeostasisReport { condition: first.condition.clone(), trials: trials.len(), fr_m, fr_std_m, fr_std_s })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct HomeostasisDelta {
    pub fr_m: f64,
    pub fr_std_m: f64,
    pub fr_std_s: f64,
}

/// Absolute per-metric differences; symmetric in its arguments.
pub fn delta(report: &HomeostasisReport, base: &HomeostasisReport) -> HomeostasisDelta {
    HomeostasisDelta {
        fr_m: (report.fr_m - base.fr_m).abs(),
        fr_std_m: (report.fr_std_m - base.fr_std_m).abs(),
        fr_std_s: (report.fr_std_s - base.fr_std_s).abs(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(id: u64, counts: Vec<u64>, t: u64) -> TrialRecording {
        TrialRecording { trial_id: id, condition: "base".into(), counts, timesteps: t }
    }

    #[test]
    fn rates() {
        assert_eq!(trial_rates(&rec(0, vec![5, 0], 5)).unwrap(), vec![1.0, 0.0]);
        assert_eq!(trial_rates(&rec(0, vec![2], 5)).unwrap(), vec![0.4]);
        assert_eq!(trial_rates(&rec(0, vec![0, 0, 0], 5)).unwrap(), vec![0.0; 3]);
        assert!(matches!(trial_rates(&rec(0, vec![1], 0)), Err(Error::Domain(_))));
    }

    #[test]
    fn worked_two_trial_example() {
        let r = homeostasis_metrics(&[rec(0, vec![1, 1], 2), rec(1, vec![0, 2], 2)]).unwrap();
        assert_eq!((r.fr_m, r.fr_std_m, r.fr_std_s), (0.5, 0.25, 0.25));
        assert_eq!(r.trials, 2);
    }

    #[test]
    fn single_and_identical_trials_have_no_spread() {
        let r = homeostasis_metrics(&[rec(0, vec![1, 4, 2], 5)]).unwrap();
        assert_eq!(r.fr_std_s, 0.0);
        let r = homeostasis_metrics(&[rec(0, vec![1, 4], 5), rec(1, vec![1, 4], 5)]).unwrap();
        assert_eq!(r.fr_std_s, 0.0);
    }

    #[test]
    fn mismatched_neuron_sets() {
        assert!(matches!(homeostasis_metrics(&[rec(0, vec![1], 5), rec(1, vec![1, 2], 5)]), Err(Error::Shape(_))));
        assert!(homeostasis_metrics(&[]).is_err());
    }

    #[test]
    fn deltas() {
        let base = HomeostasisReport { condition: "base".into(), trials: 1, fr_m: 0.558, fr_std_m: 0.2, fr_std_s: 0.01 };
        let other = HomeostasisReport { fr_m: 0.515, ..base.clone() };
        assert_eq!(delta(&base, &base), HomeostasisDelta::default());
        let d = delta(&other, &base);
        assert!((d.fr_m - 0.043).abs() < 1e-12);
        assert_eq!(d, delta(&base, &other));
    }
}
