//! Behavior-cloning datasets rolled out from a scripted controller.

use super::{Dataset, Sample, Target};
use crate::encoding::StateNormalizer;
use crate::error::Result;
use crate::rng::{self, Purpose, SimRng};
use crate::sim2d::{expert_controller, generate_trials, run_episode, EpisodeConfig, ExpertParams, Policy, Trial, World};

struct Recorder<'a, F> {
    expert: F,
    normalizer: &'a StateNormalizer,
    samples: Vec<Sample>,
}

impl<F: FnMut(&[f64]) -> Result<(f64, f64)> + Send> Policy for Recorder<'_, F> {
    fn act(&mut self, state: &[f64], _rng: &mut SimRng) -> Result<(f64, f64)> {
        let (vl, vr) = (self.expert)(state)?;
        self.samples.push(Sample { x: self.normalizer.normalize(state)?, y: Target::Action(vec![vl, vr]) });
        Ok((vl, vr))
    }
}

/// Rolls `expert` through every trial and records `(normalized state, wheel speeds)`
/// for each step taken.
pub fn clone_policy_with<F>(world: &World, expert: F, trials: &[Trial], cfg: &EpisodeConfig, normalizer: &StateNormalizer) -> Result<Dataset>
where
    F: FnMut(&[f64]) -> Result<(f64, f64)> + Send,
{
    let mut rec = Recorder { expert, normalizer, samples: Vec::new() };
    for (i, t) in trials.iter().enumerate() {
        let mut r = rng::stream(0, Purpose::Trial, i as u64);
        run_episode(world, &mut rec, t, cfg, &mut [], &mut r).map_err(|e| e.at(format_args!("cloning episode {i}")))?;
    }
    Ok(Dataset { samples: rec.samples })
}

/// `episodes` seeded trials of the potential-field expert.
pub fn clone_policy(
    world: &World,
    expert: &ExpertParams,
    episodes: usize,
    cfg: &EpisodeConfig,
    normalizer: &StateNormalizer,
    seed: u64,
) -> Result<Dataset> {
    let trials = generate_trials(world, episodes, seed)?;
    clone_policy_with(world, |s: &[f64]| expert_controller(s, expert), &trials, cfg, normalizer)
}
