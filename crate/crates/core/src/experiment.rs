//! Config-driven experiments: building models and datasets, training, and evaluating
//! under a list of degradations.
//!
//! Relative paths in a config file are resolved against the file's directory.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::degradation::DegradationSpec;
use crate::encoding::encode_state;
use crate::error::{Error, Result};
use crate::homeostasis::{delta, homeostasis_metrics, HomeostasisDelta, HomeostasisReport, TrialRecording};
use crate::rng::{self, Purpose};
use crate::sim2d::{
    campaign, default_normalizer, generate_trials, load_trials, EpisodeConfig, ExpertParams, Outcome, SnnPolicy, Trial, World,
};
use crate::snn::{forward, init_weights, FiringRecorder, NetworkModel, NeuronModel};
use crate::thresholds::ThresholdSchemeConfig;
use crate::trainer::{argmax, bptt_train, clone_policy, two_cluster_dataset, Dataset, EpochStats, Target, TrainConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    /// Two-cluster synthetic classification.
    Classify,
    /// Behavior cloning of the scripted expert.
    Clone,
    /// Obstacle-avoidance campaign with a cloned policy.
    Avoid,
}

/// Fresh network shape, used when no model file is given.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub layers: Vec<usize>,
    #[serde(default = "NeuronModel::lif")]
    pub neuron_model: NeuronModel,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelSource {
    Path(PathBuf),
    Spec(ModelSpec),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitConfig {
    pub gain: f64,
    /// Every bias starts here. Silent networks get no surrogate gradient, so a
    /// small positive value helps training get going.
    pub bias: f64,
}

impl Default for InitConfig {
    fn default() -> Self {
        InitConfig { gain: 1.0, bias: 0.2 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    /// Classification set size.
    pub samples: usize,
    /// Classification input dimension.
    pub dims: usize,
    /// Expert episodes recorded for cloning.
    pub episodes: usize,
    /// Load this dataset instead of generating one.
    pub path: Option<PathBuf>,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig { samples: 200, dims: 4, episodes: 60, path: None }
    }
}

fn default_trials() -> usize {
    50
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub task: Task,
    pub model: ModelSource,
    /// Overrides the model's threshold scheme.
    #[serde(default)]
    pub scheme: Option<ThresholdSchemeConfig>,
    /// Overrides the model's timestep count.
    #[serde(rename = "T", default)]
    pub timesteps: Option<usize>,
    #[serde(default)]
    pub degradations: Vec<DegradationSpec>,
    /// Campaign trials, or test samples for classification.
    #[serde(rename = "P", default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub init: InitConfig,
    #[serde(default)]
    pub data: DataConfig,
    #[serde(default)]
    pub episode: EpisodeConfig,
    #[serde(default)]
    pub expert: ExpertParams,
    /// World JSON; the built-in default world otherwise.
    #[serde(default)]
    pub world: Option<PathBuf>,
    /// Trial list JSON; `P` seeded trials otherwise.
    #[serde(default)]
    pub trial_file: Option<PathBuf>,
    /// Count output neurons in the homeostasis metrics.
    #[serde(default)]
    pub include_output: bool,
}

impl ExperimentConfig {
    /// Parses and validates a config file. Parse errors carry line and column.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
        let mut cfg: ExperimentConfig =
            serde_json::from_str(&text).map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        cfg.validate()?;
        Ok(cfg)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let ModelSource::Path(p) = &mut self.model {
            fix(p);
        }
        for p in [&mut self.data.path, &mut self.world, &mut self.trial_file].into_iter().flatten() {
            fix(p);
        }
    }

    /// Field-level checks; every error names the offending field.
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::config("field `P`: need at least one trial"));
        }
        if self.timesteps == Some(0) {
            return Err(Error::config("field `T`: need at least one timestep"));
        }
        let must_exist = |name: &str, p: &Option<PathBuf>| match p {
            Some(p) if !p.is_file() => Err(Error::config(format!("field `{name}`: no such file {}", p.display()))),
            _ => Ok(()),
        };
        match &self.model {
            ModelSource::Path(p) => must_exist("model", &Some(p.clone()))?,
            ModelSource::Spec(s) => {
                if s.layers.len() < 2 || s.layers.contains(&0) {
                    return Err(Error::config("field `model.layers`: need at least two non-empty layers"));
                }
            }
        }
        must_exist("data.path", &self.data.path)?;
        must_exist("world", &self.world)?;
        must_exist("trial_file", &self.trial_file)?;
        if let Some(s) = &self.scheme {
            s.validate().map_err(field("scheme".into()))?;
        }
        self.train.validate().map_err(field("train".into()))?;
        self.episode.validate().map_err(field("episode".into()))?;
        if !(self.init.gain.is_finite() && self.init.bias.is_finite()) {
            return Err(Error::config("field `init`: gain and bias must be finite"));
        }
        for (i, d) in self.degradations.iter().enumerate() {
            d.validate().map_err(field(format!("degradations[{i}]")))?;
            if self.task == Task::Classify && d.acts_on_input() {
                return Err(Error::config(format!(
                    "field `degradations[{i}]`: {} acts on robot observations, not classification inputs",
                    d.label()
                )));
            }
        }
        Ok(())
    }

    pub fn world(&self) -> Result<World> {
        match &self.world {
            Some(p) => World::load(p),
            None => Ok(World::default_world()),
        }
    }

    /// Model to train from: the referenced file, or a fresh initialization from stream
    /// `(seed, Init, 0)`. Scheme and `T` overrides are applied either way.
    pub fn initial_model(&self) -> Result<NetworkModel> {
        let mut m = match &self.model {
            ModelSource::Path(p) => NetworkModel::load(p)?,
            ModelSource::Spec(s) => {
                let t = self.timesteps.unwrap_or(5);
                let scheme = self.scheme.unwrap_or_default();
                let mut m = NetworkModel::zeros(&s.layers, s.neuron_model, scheme, t);
                init_weights(&mut m, self.init.gain, &mut rng::stream(self.seed, Purpose::Init, 0));
                if matches!(s.neuron_model, NeuronModel::Lif { .. }) {
                    m.biases.iter_mut().flatten().for_each(|b| *b = self.init.bias);
                }
                m
            }
        };
        if let Some(s) = self.scheme {
            m.scheme = s;
        }
        if let Some(t) = self.timesteps {
            m.timesteps = t;
        }
        m.validate().map_err(|e| Error::config(format!("field `model`: {e}")))?;
        Ok(m)
    }

    /// Training set for `classify` and `clone`.
    pub fn training_data(&self, model: &NetworkModel) -> Result<Dataset> {
        if let Some(p) = &self.data.path {
            return Dataset::load(p);
        }
        match self.task {
            Task::Classify => Ok(two_cluster_dataset(self.data.samples, self.data.dims, self.seed)),
            Task::Clone | Task::Avoid => {
                let world = self.world()?;
                let norm = default_normalizer(&world, &self.episode);
                if model.n_inputs() != norm.len() || model.n_outputs() != 2 {
                    return Err(Error::config(format!(
                        "field `model`: cloning needs {} inputs and 2 outputs, got {:?}",
                        norm.len(),
                        model.layer_sizes
                    )));
                }
                let seed = rng::child_seed(self.seed, Purpose::Data, 1);
                clone_policy(&world, &self.expert, self.data.episodes, &self.episode, &norm, seed)
            }
        }
    }

    /// Campaign trials: the trial file, or `P` seeded trials.
    pub fn campaign_trials(&self, world: &World) -> Result<Vec<Trial>> {
        match &self.trial_file {
            Some(p) => load_trials(p),
            None => generate_trials(world, self.trials, self.seed),
        }
    }
}

fn field(name: String) -> impl FnOnce(Error) -> Error {
    move |e| Error::config(format!("field `{name}`: {e}"))
}

#[derive(Clone, Debug)]
pub struct TrainRun {
    pub initial: NetworkModel,
    pub model: NetworkModel,
    pub trace: Vec<EpochStats>,
    pub samples: usize,
}

impl TrainRun {
    pub fn final_accuracy(&self) -> Option<f64> {
        self.trace.last().map(|e| e.accuracy)
    }
}

pub fn run_train(cfg: &ExperimentConfig) -> Result<TrainRun> {
    if cfg.task == Task::Avoid {
        return Err(Error::config("field `task`: train supports classify and clone; avoid is evaluation only"));
    }
    let initial = cfg.initial_model()?;
    let data = cfg.training_data(&initial)?;
    data.validate(initial.n_inputs(), initial.n_outputs()).map_err(|e| Error::config(format!("field `data`: {e}")))?;
    let out = bptt_train(&initial, &data, &cfg.train, cfg.seed)?;
    Ok(TrainRun { initial, model: out.model, trace: out.trace, samples: data.len() })
}

/// One line of `trials.csv`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialRow {
    pub condition: String,
    pub trial_id: usize,
    pub outcome: String,
    pub steps: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionReport {
    pub condition: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sr: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub otp: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub accuracy: Option<f64>,
    pub homeostasis: Option<HomeostasisReport>,
    /// Versus the base condition; absent when either side has no homeostasis data.
    pub delta: Option<HomeostasisDelta>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalReport {
    pub task: Task,
    pub seed: u64,
    pub layer_sizes: Vec<usize>,
    pub conditions: Vec<ConditionReport>,
    #[serde(skip)]
    pub rows: Vec<TrialRow>,
}

impl EvalReport {
    pub fn condition(&self, name: &str) -> Option<&ConditionReport> {
        self.conditions.iter().find(|c| c.condition == name)
    }
}

pub const BASE_CONDITION: &str = "base";

/// Evaluates `model` under the base condition and then under each listed degradation
/// on its own.
pub fn run_eval(cfg: &ExperimentConfig, model: &NetworkModel) -> Result<EvalReport> {
    let mut conditions: Vec<(String, Vec<DegradationSpec>)> = vec![(BASE_CONDITION.to_string(), Vec::new())];
    conditions.extend(cfg.degradations.iter().map(|d| (d.label(), vec![d.clone()])));
    let mut reports = Vec::new();
    let mut rows = Vec::new();
    for (label, degr) in &conditions {
        let (mut rep, mut r) = match cfg.task {
            Task::Classify => classify_condition(cfg, model, degr, label)?,
            Task::Clone | Task::Avoid => avoid_condition(cfg, model, degr, label)?,
        };
        r.sort_by_key(|row| row.trial_id);
        rows.extend(r);
        rep.delta = match (&rep.homeostasis, reports.first().and_then(|b: &ConditionReport| b.homeostasis.as_ref())) {
            (Some(h), Some(b)) => Some(delta(h, b)),
            (Some(h), None) if reports.is_empty() => Some(delta(h, h)),
            _ => None,
        };
        reports.push(rep);
    }
    Ok(EvalReport { task: cfg.task, seed: cfg.seed, layer_sizes: model.layer_sizes.clone(), conditions: reports, rows })
}

fn avoid_condition(
    cfg: &ExperimentConfig,
    model: &NetworkModel,
    degr: &[DegradationSpec],
    label: &str,
) -> Result<(ConditionReport, Vec<TrialRow>)> {
    let world = cfg.world()?;
    let trials = cfg.campaign_trials(&world)?;
    let policy = SnnPolicy::new(model.clone(), default_normalizer(&world, &cfg.episode), cfg.episode.v_max)
        .map_err(|e| Error::config(format!("field `model`: {e}")))?;
    let res = campaign(&world, &policy, &trials, &cfg.episode, degr, cfg.seed, label, cfg.include_output)?;
    let rows = res
        .trials
        .iter()
        .map(|t| TrialRow {
            condition: label.to_string(),
            trial_id: t.trial_id,
            outcome: outcome_name(t.outcome).to_string(),
            steps: t.steps,
        })
        .collect();
    let rep = ConditionReport {
        condition: label.to_string(),
        sr: Some(res.sr),
        otp: Some(res.otp),
        accuracy: None,
        homeostasis: res.homeostasis,
        delta: None,
    };
    Ok((rep, rows))
}

fn outcome_name(o: Outcome) -> &'static str {
    match o {
        Outcome::Success => "success",
        Outcome::Collision => "collision",
        Outcome::Overtime => "overtime",
    }
}

/// Test-set accuracy. Samples come from a data stream disjoint from training, sample
/// `i` is encoded with stream `(seed, Eval, i)` and every sample counts as one trial for
/// the homeostasis metrics.
fn classify_condition(
    cfg: &ExperimentConfig,
    model: &NetworkModel,
    degr: &[DegradationSpec],
    label: &str,
) -> Result<(ConditionReport, Vec<TrialRow>)> {
    let mut m = model.clone();
    for d in degr {
        m = d.apply_to_model(&m)?;
    }
    let test = match &cfg.data.path {
        Some(p) => Dataset::load(p)?,
        None => two_cluster_dataset(cfg.trials, cfg.data.dims, rng::child_seed(cfg.seed, Purpose::Data, 2)),
    };
    test.validate(m.n_inputs(), m.n_outputs()).map_err(|e| Error::config(format!("field `data`: {e}")))?;
    let per: Vec<(bool, TrialRecording)> = test
        .samples
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let trains = encode_state(&s.x, m.timesteps, &mut rng::stream(cfg.seed, Purpose::Eval, i as u64))?;
            let mut rec = FiringRecorder::new(&m);
            let counts = forward(&m, &trains, Some(&mut rec))?;
            let counts: Vec<f64> = counts.iter().map(|&c| f64::from(c)).collect();
            let hit = match &s.y {
                Target::Class(c) => argmax(&counts) == *c,
                Target::Action(_) => return Err(Error::config("field `data`: classification needs class labels")),
            };
            Ok((hit, TrialRecording::from_recorder(&rec, i as u64, label, cfg.include_output)))
        })
        .collect::<Result<_>>()?;
    let accuracy = per.iter().filter(|p| p.0).count() as f64 / per.len() as f64;
    let recordings: Vec<TrialRecording> = per.iter().map(|p| p.1.clone()).filter(|r| !r.counts.is_empty()).collect();
    let homeostasis = if recordings.is_empty() { None } else { Some(homeostasis_metrics(&recordings)?) };
    let rows = per
        .iter()
        .enumerate()
        .map(|(i, (hit, _))| TrialRow {
            condition: label.to_string(),
            trial_id: i,
            outcome: if *hit { "correct" } else { "incorrect" }.to_string(),
            steps: m.timesteps,
        })
        .collect();
    let rep = ConditionReport { condition: label.to_string(), sr: None, otp: None, accuracy: Some(accuracy), homeostasis, delta: None };
    Ok((rep, rows))
}

/// Writes `rows` as CSV with a header line.
pub fn write_trials_csv(path: &Path, rows: &[TrialRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Io(e.into()))?;
    for r in rows {
        w.serialize(r).map_err(|e| Error::Io(e.into()))?;
    }
    w.flush()?;
    Ok(())
}
