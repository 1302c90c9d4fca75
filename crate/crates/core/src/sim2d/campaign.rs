//! Multi-trial evaluation: success rate, overtime rate and homeostasis.

use rayon::prelude::*;
use serde::Serialize;

use super::episode::{run_episode, EpisodeConfig, InputDegrader, Outcome, Policy};
use super::world::{Trial, World};
use crate::degradation::DegradationSpec;
use crate::error::{Error, Result};
use crate::homeostasis::{homeostasis_metrics, HomeostasisReport, TrialRecording};
use crate::rng::{self, Purpose};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialResult {
    pub trial_id: usize,
    pub outcome: Outcome,
    pub steps: usize,
    #[serde(skip)]
    pub recording: Option<TrialRecording>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CampaignResult {
    pub condition: String,
    pub sr: f64,
    pub otp: f64,
    pub trials: Vec<TrialResult>,
    /// Over successful trials; `None` when no trial succeeded or the policy records nothing.
    pub homeostasis: Option<HomeostasisReport>,
}

/// SR and OTP from a list of outcomes.
pub fn rates(outcomes: &[Outcome]) -> Result<(f64, f64)> {
    if outcomes.is_empty() {
        return Err(Error::domain("campaign needs at least one trial"));
    }
    let n = outcomes.len() as f64;
    let count = |o: Outcome| outcomes.iter().filter(|&&x| x == o).count() as f64;
    Ok((count(Outcome::Success) / n, count(Outcome::Overtime) / n))
}

/// Runs every trial under one condition.
///
/// Weight degradations are applied once to a copy of `policy`. Trial `i` draws its
/// encoding noise from stream `(seed, Trial, i)` and each input degradation from
/// `(spec.seed, InputNoise, i)`, so results do not depend on scheduling.
#[allow(clippy::too_many_arguments)]
pub fn campaign<P: Policy + Clone + Sync>(
    world: &World,
    policy: &P,
    trials: &[Trial],
    cfg: &EpisodeConfig,
    degradations: &[DegradationSpec],
    seed: u64,
    condition: &str,
    include_output: bool,
) -> Result<CampaignResult> {
    if trials.is_empty() {
        return Err(Error::domain("campaign needs at least one trial"));
    }
    world.validate()?;
    let mut degraded = policy.clone();
    for d in degradations {
        d.validate()?;
        if !d.acts_on_input() {
            degraded = degraded.degraded(d)?;
        }
    }
    let results: Vec<TrialResult> = trials
        .par_iter()
        .enumerate()
        .map(|(i, trial)| {
            let mut p = degraded.clone();
            let mut inputs: Vec<InputDegrader> = degradations
                .iter()
                .filter(|d| d.acts_on_input())
                .map(|d| InputDegrader { spec: d.clone(), rng: rng::stream(d.seed, Purpose::InputNoise, i as u64) })
                .collect();
            let mut r = rng::stream(seed, Purpose::Trial, i as u64);
            let out = run_episode(world, &mut p, trial, cfg, &mut inputs, &mut r).map_err(|e| e.at(format_args!("trial {i}")))?;
            let recording = out.recording.map(|rec| TrialRecording::from_recorder(&rec, i as u64, condition, include_output));
            Ok(TrialResult { trial_id: i, outcome: out.outcome, steps: out.steps, recording })
        })
        .collect::<Result<_>>()?;

    let outcomes: Vec<Outcome> = results.iter().map(|t| t.outcome).collect();
    let (sr, otp) = rates(&outcomes)?;
    let successful: Vec<TrialRecording> = results
        .iter()
        .filter(|t| t.outcome == Outcome::Success)
        .filter_map(|t| t.recording.clone())
        .filter(|r| r.timesteps > 0)
        .collect();
    let homeostasis = if successful.is_empty() { None } else { Some(homeostasis_metrics(&successful)?) };
    Ok(CampaignResult { condition: condition.to_string(), sr, otp, trials: results, homeostasis })
}
