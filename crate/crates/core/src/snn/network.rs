use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{fire, lif_step, srm_step, LayerState, SpikeTrain};
use crate::error::{ensure_len, Error, Result};
use crate::matrix::Matrix;
use crate::thresholds::{bdett_update, ThresholdSchemeConfig};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum NeuronModel {
    /// Leaky integrate-and-fire with multiplicative decay `D` and hard reset.
    Lif { decay: f64 },
    /// Spike response model with kernel time constants in timesteps.
    Srm { tau_s: f64, tau_r: f64 },
}

impl NeuronModel {
    pub fn lif() -> Self {
        NeuronModel::Lif { decay: 0.75 }
    }

    pub fn srm() -> Self {
        NeuronModel::Srm { tau_s: 1.0, tau_r: 1.0 }
    }
}

/// Feedforward network description, also the on-disk model format.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkModel {
    /// Neuron counts, input layer first.
    pub layer_sizes: Vec<usize>,
    /// `weights[l]` maps layer `l` to layer `l+1`; shape `(layer_sizes[l+1], layer_sizes[l])`.
    pub weights: Vec<Matrix>,
    /// One vector per non-input layer. Must be zero for SRM.
    pub biases: Vec<Vec<f64>>,
    pub neuron_model: NeuronModel,
    pub scheme: ThresholdSchemeConfig,
    /// Scheme for the output layer; `None` means same as hidden layers.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_scheme: Option<ThresholdSchemeConfig>,
    #[serde(rename = "T")]
    pub timesteps: usize,
}

impl NetworkModel {
    /// Zero-weight model of the given shape.
    pub fn zeros(layer_sizes: &[usize], neuron_model: NeuronModel, scheme: ThresholdSchemeConfig, timesteps: usize) -> Self {
        let weights = layer_sizes.windows(2).map(|w| Matrix::zeros(w[1], w[0])).collect();
        let biases = layer_sizes[1..].iter().map(|&n| vec![0.0; n]).collect();
        Self {
            layer_sizes: layer_sizes.to_vec(),
            weights,
            biases,
            neuron_model,
            scheme,
            output_scheme: None,
            timesteps,
        }
    }

    pub fn n_layers(&self) -> usize {
        self.weights.len()
    }

    pub fn n_inputs(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn n_outputs(&self) -> usize {
        *self.layer_sizes.last().expect("validated model has layers")
    }

    /// Threshold scheme of non-input layer `l` (0-based over non-input layers).
    pub fn scheme_for(&self, l: usize) -> &ThresholdSchemeConfig {
        match &self.output_scheme {
            Some(s) if l + 1 == self.n_layers() => s,
            _ => &self.scheme,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.layer_sizes.len() < 2 {
            return Err(Error::shape("a network needs an input and at least one more layer"));
        }
        if let Some(i) = self.layer_sizes.iter().position(|&n| n == 0) {
            return Err(Error::shape(format!("layer {i} is empty")));
        }
        ensure_len("weight matrices", self.weights.len(), self.layer_sizes.len() - 1)?;
        ensure_len("bias vectors", self.biases.len(), self.layer_sizes.len() - 1)?;
        for (l, w) in self.weights.iter().enumerate() {
            let (rows, cols) = (self.layer_sizes[l + 1], self.layer_sizes[l]);
            if w.rows() != rows || w.cols() != cols {
                return Err(Error::shape(format!(
                    "weights[{l}] is {}x{}, expected {rows}x{cols}",
                    w.rows(),
                    w.cols()
                )));
            }
            if !w.is_finite() {
                return Err(Error::numeric(format!("weights[{l}] has non-finite entries")));
            }
            ensure_len(&format!("biases[{l}]"), self.biases[l].len(), rows)?;
            if self.biases[l].iter().any(|b| !b.is_finite()) {
                return Err(Error::numeric(format!("biases[{l}] has non-finite entries")));
            }
        }
        match self.neuron_model {
            NeuronModel::Lif { decay } => {
                if !(0.0..=1.0).contains(&decay) {
                    return Err(Error::domain(format!("LIF decay must be in [0, 1], got {decay}")));
                }
            }
            NeuronModel::Srm { tau_s, tau_r } => {
                if !(tau_s > 0.0 && tau_r > 0.0 && tau_s.is_finite() && tau_r.is_finite()) {
                    return Err(Error::domain("SRM time constants must be positive"));
                }
                if self.biases.iter().flatten().any(|&b| b != 0.0) {
                    return Err(Error::domain("SRM networks carry no biases"));
                }
            }
        }
        if self.timesteps == 0 {
            return Err(Error::domain("T must be at least 1"));
        }
        self.scheme.validate()?;
        if let Some(s) = &self.output_scheme {
            s.validate()?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let model: Self = serde_json::from_str(&text)?;
        model.validate()?;
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}

/// Uniform weights in `±gain·sqrt(3/fan_in)` and zero biases.
pub fn init_weights<R: Rng + ?Sized>(model: &mut NetworkModel, gain: f64, rng: &mut R) {
    for w in &mut model.weights {
        let bound = gain * (3.0 / w.cols() as f64).sqrt();
        for x in w.as_mut_slice() {
            *x = rng.random_range(-bound..=bound);
        }
    }
    for b in &mut model.biases {
        b.iter_mut().for_each(|x| *x = 0.0);
    }
}

/// Per-neuron spike totals of every non-input layer.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FiringRecorder {
    /// `counts[l][i]` for non-input layer `l`.
    pub counts: Vec<Vec<u64>>,
    /// Number of simulated timesteps.
    pub timesteps: u64,
}

impl FiringRecorder {
    pub fn new(model: &NetworkModel) -> Self {
        Self { counts: model.layer_sizes[1..].iter().map(|&n| vec![0; n]).collect(), timesteps: 0 }
    }

    fn record(&mut self, layer: usize, spikes: &[bool]) {
        for (c, &s) in self.counts[layer].iter_mut().zip(spikes) {
            *c += u64::from(s);
        }
    }

    /// Counts of all recorded neurons, hidden layers first. `include_output = false`
    /// drops the last layer.
    pub fn flat_counts(&self, include_output: bool) -> Vec<u64> {
        let n = if include_output { self.counts.len() } else { self.counts.len().saturating_sub(1) };
        self.counts[..n].iter().flatten().copied().collect()
    }
}

/// Episode state of a whole network. Lives across `run_steps` calls when the caller
/// wants potentials to carry over between observations.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkState {
    pub layers: Vec<LayerState>,
    /// Last committed timestep; 0 before the first step.
    pub t: usize,
    /// Spike times per layer including the input layer (SRM only).
    spike_times: Vec<Vec<Vec<usize>>>,
}

impl NetworkState {
    pub fn new(model: &NetworkModel) -> Self {
        let layers = (0..model.n_layers())
            .map(|l| LayerState::new(model.layer_sizes[l + 1], model.scheme_for(l).theta0))
            .collect();
        let spike_times = match model.neuron_model {
            NeuronModel::Srm { .. } => model.layer_sizes.iter().map(|&n| vec![Vec::new(); n]).collect(),
            NeuronModel::Lif { .. } => Vec::new(),
        };
        Self { layers, t: 0, spike_times }
    }
}

/// Simulates `t = 1..=T` from rest and returns per-output-neuron spike counts.
pub fn forward(model: &NetworkModel, input_trains: &[SpikeTrain], recorder: Option<&mut FiringRecorder>) -> Result<Vec<u32>> {
    model.validate()?;
    if let Some(tr) = input_trains.iter().find(|tr| tr.len() != model.timesteps) {
        return Err(Error::shape(format!("input train has {} steps, model T is {}", tr.len(), model.timesteps)));
    }
    let mut state = NetworkState::new(model);
    run_steps(model, &mut state, input_trains, recorder)
}

/// Continues `state` for as many steps as the input trains hold. The model is assumed
/// valid.
pub fn run_steps(
    model: &NetworkModel,
    state: &mut NetworkState,
    input_trains: &[SpikeTrain],
    mut recorder: Option<&mut FiringRecorder>,
) -> Result<Vec<u32>> {
    ensure_len("input trains", input_trains.len(), model.n_inputs())?;
    let steps = input_trains.first().map_or(0, SpikeTrain::len);
    if input_trains.iter().any(|tr| tr.len() != steps) {
        return Err(Error::shape("input trains differ in length"));
    }
    ensure_len("network state layers", state.layers.len(), model.n_layers())?;
    let srm = matches!(model.neuron_model, NeuronModel::Srm { .. });
    let mut out_counts = vec![0u32; model.n_outputs()];

    for k in 0..steps {
        state.t += 1;
        let t = state.t;
        let mut spikes: Vec<bool> = input_trains.iter().map(|tr| tr.at(k)).collect();
        if srm {
            for (j, &s) in spikes.iter().enumerate() {
                if s {
                    state.spike_times[0][j].push(t);
                }
            }
        }
        for l in 0..model.n_layers() {
            let ctx = |e: Error| e.at(format_args!("layer {}, t={t}", l + 1));
            let layer = &state.layers[l];
            let v_new = match model.neuron_model {
                NeuronModel::Lif { decay } => lif_step(layer, &spikes, &model.weights[l], &model.biases[l], decay),
                NeuronModel::Srm { tau_s, tau_r } => {
                    srm_step(layer, &state.spike_times[l], &model.weights[l], t, tau_s, tau_r)
                }
            }
            .map_err(ctx)?;
            let scheme = model.scheme_for(l);
            let theta_new = if scheme.is_dynamic() {
                bdett_update(&v_new, &layer.potentials_now, &layer.thresholds, scheme).map_err(ctx)?
            } else {
                layer.thresholds.clone()
            };
            let fired = fire(&v_new, &theta_new).map_err(ctx)?;
            if let Some(rec) = recorder.as_deref_mut() {
                rec.record(l, &fired);
            }
            if srm {
                for (i, &s) in fired.iter().enumerate() {
                    if s {
                        state.spike_times[l + 1][i].push(t);
                    }
                }
            }
            state.layers[l].commit(t, v_new, theta_new, fired.clone(), srm);
            spikes = fired;
        }
        for (c, &s) in out_counts.iter_mut().zip(&spikes) {
            *c += u32::from(s);
        }
        if let Some(rec) = recorder.as_deref_mut() {
            rec.timesteps += 1;
        }
    }
    Ok(out_counts)
}
