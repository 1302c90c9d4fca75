//! Spiking network driving the robot.

use super::episode::Policy;
use crate::degradation::DegradationSpec;
use crate::encoding::{encode_state, rate_decode, StateNormalizer};
use crate::error::{ensure_len, Error, Result};
use crate::rng::SimRng;
use crate::snn::{run_steps, FiringRecorder, NetworkModel, NetworkState};

/// Normalize, Poisson-encode over `T` steps, run the network, rate-decode the two
/// output neurons into wheel speeds in `[0, v_max]`.
#[derive(Clone, Debug)]
pub struct SnnPolicy {
    model: NetworkModel,
    normalizer: StateNormalizer,
    v_max: f64,
    /// Keep potentials and thresholds across observations instead of resetting.
    pub carry_state: bool,
    state: Option<NetworkState>,
    recorder: Option<FiringRecorder>,
}

impl SnnPolicy {
    pub fn new(model: NetworkModel, normalizer: StateNormalizer, v_max: f64) -> Result<Self> {
        model.validate()?;
        ensure_len("normalizer", normalizer.len(), model.n_inputs())?;
        ensure_len("policy outputs", model.n_outputs(), 2)?;
        if !(v_max > 0.0) {
            return Err(Error::domain("v_max must be positive"));
        }
        Ok(Self { model, normalizer, v_max, carry_state: false, state: None, recorder: None })
    }

    pub fn model(&self) -> &NetworkModel {
        &self.model
    }
}

impl Policy for SnnPolicy {
    fn begin_episode(&mut self) {
        self.state = None;
        self.recorder = Some(FiringRecorder::new(&self.model));
    }

    fn act(&mut self, raw: &[f64], rng: &mut SimRng) -> Result<(f64, f64)> {
        let unit = self.normalizer.normalize(raw)?;
        let trains = encode_state(&unit, self.model.timesteps, rng)?;
        let counts = if self.carry_state {
            let state = self.state.get_or_insert_with(|| NetworkState::new(&self.model));
            run_steps(&self.model, state, &trains, self.recorder.as_mut())?
        } else {
            run_steps(&self.model, &mut NetworkState::new(&self.model), &trains, self.recorder.as_mut())?
        };
        let a = rate_decode(&counts, self.model.timesteps, 0.0, self.v_max)?;
        Ok((a[0], a[1]))
    }

    fn end_episode(&mut self) -> Option<FiringRecorder> {
        self.recorder.take()
    }

    fn degraded(&self, spec: &DegradationSpec) -> Result<Self> {
        Ok(Self { model: spec.apply_to_model(&self.model)?, ..self.clone() })
    }
}
