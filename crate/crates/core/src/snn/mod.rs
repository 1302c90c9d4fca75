//! Discrete-time feedforward spiking networks.
//!
//! Per timestep and per layer (input to output) the simulation computes new membrane
//! potentials, then the thresholds for the same step, then fires and commits. The
//! threshold update needs both `v(t)` and `v(t+1)`, so this order is the only one
//! that works.

mod lif;
mod network;
mod srm;

pub use lif::lif_step;
pub use network::{
    forward, init_weights, run_steps, FiringRecorder, NetworkModel, NetworkState, NeuronModel,
};
pub use srm::{srm_epsilon, srm_step, srm_zeta, LONG_EPISODE_STEPS, SRM_KERNEL_CUTOFF};

use serde::{Deserialize, Serialize};

use crate::error::{ensure_len, Error, Result};

/// Binary spike sequence of one neuron.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<u8>", into = "Vec<u8>")]
pub struct SpikeTrain {
    bits: Vec<bool>,
}

impl SpikeTrain {
    pub fn new(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    pub fn silent(len: usize) -> Self {
        Self { bits: vec![false; len] }
    }

    pub fn from_bits(bits: &[u8]) -> Result<Self> {
        bits.iter()
            .map(|&b| match b {
                0 => Ok(false),
                1 => Ok(true),
                other => Err(Error::domain(format!("spike bit must be 0 or 1, got {other}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Self::new)
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Spike at zero-based step `k` (network time `k + 1`).
    pub fn at(&self, k: usize) -> bool {
        self.bits[k]
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }
}

impl TryFrom<Vec<u8>> for SpikeTrain {
    type Error = Error;

    fn try_from(v: Vec<u8>) -> Result<Self> {
        SpikeTrain::from_bits(&v)
    }
}

impl From<SpikeTrain> for Vec<u8> {
    fn from(t: SpikeTrain) -> Self {
        t.bits.into_iter().map(u8::from).collect()
    }
}

/// A past spike of an SRM neuron together with the threshold it crossed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpikeRecord {
    pub t: usize,
    pub theta: f64,
}

/// Per-layer simulation state.
///
/// After a step at time `t+1` is committed, `potentials_now` holds `v(t+1)` and
/// `potentials_prev` holds `v(t)`; `thresholds` and `last_spikes` belong to `t+1`.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerState {
    pub potentials_now: Vec<f64>,
    pub potentials_prev: Vec<f64>,
    pub thresholds: Vec<f64>,
    /// SRM only; strictly increasing in `t` per neuron.
    pub spike_history: Vec<Vec<SpikeRecord>>,
    pub last_spikes: Vec<bool>,
}

impl LayerState {
    /// Resting state: zero potentials, thresholds at `theta0`, no history.
    pub fn new(n: usize, theta0: f64) -> Self {
        Self {
            potentials_now: vec![0.0; n],
            potentials_prev: vec![0.0; n],
            thresholds: vec![theta0; n],
            spike_history: vec![Vec::new(); n],
            last_spikes: vec![false; n],
        }
    }

    pub fn len(&self) -> usize {
        self.potentials_now.len()
    }

    pub fn is_empty(&self) -> bool {
        self.potentials_now.is_empty()
    }

    /// Commits step `t`. `record_history` appends SRM spike records.
    pub fn commit(&mut self, t: usize, potentials: Vec<f64>, thresholds: Vec<f64>, spikes: Vec<bool>, record_history: bool) {
        if record_history {
            for (i, &s) in spikes.iter().enumerate() {
                if s {
                    self.spike_history[i].push(SpikeRecord { t, theta: thresholds[i] });
                }
            }
        }
        self.potentials_prev = std::mem::replace(&mut self.potentials_now, potentials);
        self.thresholds = thresholds;
        self.last_spikes = spikes;
    }
}

/// `spike_i = v_i ≥ Θ_i`. Equality fires.
pub fn fire(potentials: &[f64], thresholds: &[f64]) -> Result<Vec<bool>> {
    ensure_len("thresholds", thresholds.len(), potentials.len())?;
    Ok(potentials.iter().zip(thresholds).map(|(v, th)| v >= th).collect())
}
