//! Surrogate-gradient BPTT with plain SGD for small feedforward LIF networks.

mod bptt;
mod cloning;
mod gradcheck;

pub use bptt::{smooth_spike, surrogate_grad, FrozenStats, Grads, SpikeMode};
pub use cloning::{clone_policy, clone_policy_with};
pub use gradcheck::{gradient_check, GradCheckReport};

use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, Purpose, SimRng};
use crate::snn::{NetworkModel, NeuronModel};
use crate::thresholds::ThresholdSchemeConfig;
use bptt::{backward, forward_trace};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Target {
    Class(usize),
    Action(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub x: Vec<f64>,
    pub y: Target,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Dataset {
    pub samples: Vec<Sample>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Checks inputs lie in `[0, 1]^d` and targets fit `n_outputs` (class count or action width).
    pub fn validate(&self, n_inputs: usize, n_outputs: usize) -> Result<()> {
        let first = match self.samples.first() {
            Some(s) => s,
            None => return Ok(()),
        };
        let is_class = matches!(first.y, Target::Class(_));
        for (i, s) in self.samples.iter().enumerate() {
            if s.x.len() != n_inputs {
                return Err(Error::shape(format!("sample {i}: {} inputs, network takes {n_inputs}", s.x.len())));
            }
            if let Some(v) = s.x.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(Error::domain(format!("sample {i}: input {v} outside [0, 1]")));
            }
            match &s.y {
                Target::Class(c) if is_class => {
                    if *c >= n_outputs {
                        return Err(Error::domain(format!("sample {i}: class {c} but only {n_outputs} outputs")));
                    }
                }
                Target::Action(a) if !is_class => {
                    if a.len() != n_outputs {
                        return Err(Error::shape(format!("sample {i}: action of width {}, network has {n_outputs}", a.len())));
                    }
                    if a.iter().any(|v| !v.is_finite()) {
                        return Err(Error::domain(format!("sample {i}: non-finite action")));
                    }
                }
                _ => return Err(Error::domain(format!("sample {i} mixes class and action targets"))),
            }
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::from(e).at(path.display()))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string(self)?)?;
        Ok(())
    }
}

/// Two Gaussian clusters in `[0, 1]^d` centred at 0.2 and 0.8 on every axis (σ = 0.05),
/// alternating labels.
pub fn two_cluster_dataset(n: usize, d: usize, seed: u64) -> Dataset {
    let mut r = rng::stream(seed, Purpose::Data, 0);
    let noise = Normal::new(0.0, 0.05).expect("valid sigma");
    let samples = (0..n)
        .map(|i| {
            let class = i % 2;
            let centre: f64 = if class == 0 { 0.2 } else { 0.8 };
            let x = (0..d).map(|_| (centre + noise.sample(&mut r)).clamp(0.0, 1.0)).collect();
            Sample { x, y: Target::Class(class) }
        })
        .collect();
    Dataset { samples }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
    /// Surrogate sharpness.
    pub alpha: f64,
    /// Decode range for action targets.
    pub action_lo: f64,
    pub action_hi: f64,
    /// Train with the model's dynamic thresholds; `false` trains with fixed `theta0`.
    pub bdett_in_training: bool,
    /// Backpropagate through the layer statistics, not just each neuron's own threshold.
    pub stat_grad: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { epochs: 50, lr: 0.05, batch_size: 32, alpha: 10.0, action_lo: 0.0, action_hi: 0.5, bdett_in_training: true, stat_grad: false }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return Err(Error::domain(format!("learning rate must be >= 0, got {}", self.lr)));
        }
        if self.batch_size == 0 {
            return Err(Error::domain("batch size must be positive"));
        }
        if !(self.alpha > 0.0) {
            return Err(Error::domain("surrogate alpha must be positive"));
        }
        if !(self.action_hi > self.action_lo) {
            return Err(Error::domain("action range is empty"));
        }
        Ok(())
    }

    fn schemes(&self, model: &NetworkModel) -> Vec<ThresholdSchemeConfig> {
        (0..model.n_layers())
            .map(|l| {
                let s = *model.scheme_for(l);
                if self.bdett_in_training || !s.is_dynamic() {
                    s
                } else {
                    ThresholdSchemeConfig::fixed(s.theta0)
                }
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub loss: f64,
    pub accuracy: f64,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub model: NetworkModel,
    pub trace: Vec<EpochStats>,
}

/// Poisson bits of `x` over `timesteps`, as `[t][j]`.
fn encode_steps(x: &[f64], timesteps: usize, r: &mut SimRng) -> Vec<Vec<f64>> {
    (0..timesteps).map(|_| x.iter().map(|&p| f64::from(u8::from(r.random::<f64>() < p))).collect()).collect()
}

/// Index of the largest count; ties go to the lowest index.
pub fn argmax(counts: &[f64]) -> usize {
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = i;
        }
    }
    best
}

/// Loss and `dL/dcount` for one sample. Classification: softmax cross-entropy with the
/// counts as logits. Actions: mean squared error of the rate-decoded outputs.
pub(crate) fn loss_and_grad(counts: &[f64], y: &Target, timesteps: usize, cfg: &TrainConfig) -> (f64, Vec<f64>, bool) {
    match y {
        Target::Class(c) => {
            let m = counts.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let z: f64 = counts.iter().map(|v| (v - m).exp()).sum();
            let loss = m + z.ln() - counts[*c];
            let grad = counts
                .iter()
                .enumerate()
                .map(|(i, v)| (v - m).exp() / z - if i == *c { 1.0 } else { 0.0 })
                .collect();
            (loss, grad, argmax(counts) == *c)
        }
        Target::Action(a) => {
            let span = cfg.action_hi - cfg.action_lo;
            let n = a.len() as f64;
            let step = span / timesteps as f64;
            let decoded: Vec<f64> = counts.iter().map(|c| cfg.action_lo + c * step).collect();
            let loss = decoded.iter().zip(a).map(|(d, y)| (d - y).powi(2)).sum::<f64>() / n;
            let grad = decoded.iter().zip(a).map(|(d, y)| 2.0 * (d - y) / n * step).collect();
            let hit = decoded.iter().zip(a).all(|(d, y)| (d - y).abs() <= step + 1e-12);
            (loss, grad, hit)
        }
    }
}

fn decay_of(model: &NetworkModel) -> Result<f64> {
    match model.neuron_model {
        NeuronModel::Lif { decay } => Ok(decay),
        NeuronModel::Srm { .. } => Err(Error::domain("training supports LIF networks only")),
    }
}

/// Mean loss and accuracy over `data`, sample `i` encoded with stream `(seed, Eval, i)`.
pub fn evaluate(model: &NetworkModel, data: &Dataset, cfg: &TrainConfig, seed: u64) -> Result<(f64, f64)> {
    if data.is_empty() {
        return Err(Error::domain("cannot evaluate on an empty dataset"));
    }
    model.validate()?;
    data.validate(model.n_inputs(), model.n_outputs())?;
    let schemes = cfg.schemes(model);
    let per: Vec<(f64, bool)> = data
        .samples
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let mut r = rng::stream(seed, Purpose::Eval, i as u64);
            let tr = forward_trace(model, &schemes, encode_steps(&s.x, model.timesteps, &mut r), cfg.alpha, SpikeMode::Hard, None)?;
            let (loss, _, hit) = loss_and_grad(&tr.counts, &s.y, model.timesteps, cfg);
            Ok((loss, hit))
        })
        .collect::<Result<_>>()?;
    let n = per.len() as f64;
    Ok((per.iter().map(|p| p.0).sum::<f64>() / n, per.iter().filter(|p| p.1).count() as f64 / n))
}

/// Trains a copy of `model`. After every epoch the full dataset is re-evaluated with a
/// fixed encoding seed for the loss trace.
pub fn bptt_train(model: &NetworkModel, data: &Dataset, cfg: &TrainConfig, seed: u64) -> Result<TrainOutcome> {
    cfg.validate()?;
    model.validate()?;
    let decay = decay_of(model)?;
    data.validate(model.n_inputs(), model.n_outputs())?;
    let mut model = model.clone();
    let schemes = cfg.schemes(&model);
    let n = data.len();
    let mut trace = Vec::with_capacity(cfg.epochs);
    let mut order: Vec<usize> = (0..n).collect();
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng::stream(seed, Purpose::Shuffle, epoch as u64));
        for (b, batch) in order.chunks(cfg.batch_size).enumerate() {
            let per: Vec<(f64, Grads)> = batch
                .par_iter()
                .map(|&i| {
                    let s = &data.samples[i];
                    let mut r = rng::stream(seed, Purpose::Encoding, (epoch * n + i) as u64);
                    let tr = forward_trace(&model, &schemes, encode_steps(&s.x, model.timesteps, &mut r), cfg.alpha, SpikeMode::Hard, None)?;
                    let (loss, dl, _) = loss_and_grad(&tr.counts, &s.y, model.timesteps, cfg);
                    Ok((loss, backward(&model, &tr, &dl, decay, cfg.stat_grad)))
                })
                .collect::<Result<_>>()
                .map_err(|e: Error| e.at(format_args!("epoch {epoch}, batch {b}")))?;
            let mut g = Grads::zeros(&model);
            let mut loss = 0.0;
            for (l, gi) in &per {
                loss += l;
                g.add_assign(gi);
            }
            if !loss.is_finite() {
                return Err(Error::numeric(format!("epoch {epoch}, batch {b}: loss is {loss}")));
            }
            g.scale(cfg.lr / batch.len() as f64);
            apply_step(&mut model, &g).map_err(|e| e.at(format_args!("epoch {epoch}, batch {b}")))?;
        }
        let (loss, accuracy) = evaluate(&model, data, cfg, seed)?;
        if !loss.is_finite() {
            return Err(Error::numeric(format!("epoch {epoch}: evaluation loss is {loss}")));
        }
        trace.push(EpochStats { epoch, loss, accuracy });
    }
    Ok(TrainOutcome { model, trace })
}

fn apply_step(model: &mut NetworkModel, step: &Grads) -> Result<()> {
    for (w, g) in model.weights.iter_mut().zip(&step.weights) {
        for (x, d) in w.as_mut_slice().iter_mut().zip(g.as_slice()) {
            *x -= d;
        }
        if !w.is_finite() {
            return Err(Error::numeric("non-finite weight after update"));
        }
    }
    let srm = matches!(model.neuron_model, NeuronModel::Srm { .. });
    for (b, g) in model.biases.iter_mut().zip(&step.biases) {
        if srm {
            continue;
        }
        for (x, d) in b.iter_mut().zip(g) {
            *x -= d;
        }
    }
    Ok(())
}

/// Writes `epoch,loss,accuracy` rows.
pub fn write_loss_csv(trace: &[EpochStats], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for e in trace {
        w.serialize(e).map_err(|e| Error::domain(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::snn::{forward, init_weights, SpikeTrain};

    fn classifier(seed: u64) -> NetworkModel {
        let mut m = NetworkModel::zeros(&[4, 16, 2], NeuronModel::lif(), ThresholdSchemeConfig::bdett(), 5);
        init_weights(&mut m, 1.0, &mut rng::from_seed(seed));
        m
    }

    #[test]
    fn hard_trace_matches_network_forward() {
        let m = classifier(3);
        let schemes: Vec<_> = (0..2).map(|l| *m.scheme_for(l)).collect();
        let mut r = rng::from_seed(8);
        for _ in 0..50 {
            let x: Vec<f64> = (0..4).map(|_| r.random()).collect();
            let steps = encode_steps(&x, 5, &mut r);
            let trains: Vec<SpikeTrain> = (0..4).map(|j| SpikeTrain::new(steps.iter().map(|s| s[j] == 1.0).collect())).collect();
            let want = forward(&m, &trains, None).unwrap();
            let tr = forward_trace(&m, &schemes, steps, 10.0, SpikeMode::Hard, None).unwrap();
            let got: Vec<u32> = tr.counts.iter().map(|&c| c as u32).collect();
            assert_eq!(got, want);
        }
    }

    #[test]
    fn cross_entropy_gradient() {
        let cfg = TrainConfig::default();
        let (loss, g, hit) = loss_and_grad(&[2.0, 0.0], &Target::Class(0), 5, &cfg);
        assert!((loss - (1.0 + (-2f64).exp()).ln()).abs() < 1e-12);
        assert!((g[0] + g[1]).abs() < 1e-12);
        assert!(hit);
        let (_, _, hit) = loss_and_grad(&[1.0, 1.0], &Target::Class(1), 5, &cfg);
        assert!(!hit);
    }

    #[test]
    fn mse_gradient() {
        let cfg = TrainConfig::default();
        let (loss, g, _) = loss_and_grad(&[5.0, 0.0], &Target::Action(vec![0.5, 0.0]), 5, &cfg);
        assert_eq!(loss, 0.0);
        assert_eq!(g, vec![0.0, 0.0]);
    }

    #[test]
    fn zero_learning_rate_keeps_weights() {
        let m = classifier(1);
        let data = two_cluster_dataset(40, 4, 2);
        let cfg = TrainConfig { epochs: 2, lr: 0.0, ..Default::default() };
        let out = bptt_train(&m, &data, &cfg, 9).unwrap();
        assert_eq!(out.model, m);
    }

    #[test]
    fn dataset_json_and_validation() {
        let d: Dataset = serde_json::from_str(r#"[{"x":[0.1,0.2],"y":1},{"x":[0.3,0.4],"y":0}]"#).unwrap();
        assert_eq!(d.samples[0].y, Target::Class(1));
        d.validate(2, 2).unwrap();
        assert!(d.validate(3, 2).is_err());
        assert!(d.validate(2, 1).is_err());
        let a: Dataset = serde_json::from_str(r#"[{"x":[0.5],"y":[0.1,0.2]}]"#).unwrap();
        a.validate(1, 2).unwrap();
        let bad: Dataset = serde_json::from_str(r#"[{"x":[1.5],"y":0}]"#).unwrap();
        assert!(bad.validate(1, 2).is_err());
    }
}
