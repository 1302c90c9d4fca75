//! Built-in golden-value and property suites behind `bdett verify`.
//!
//! Every suite is deterministic. A suite reports how many cases it ran and the names
//! of the ones that failed; a library error inside a case counts as a failure.

mod golden;
pub mod oracles;
mod suites;

use std::fmt::Display;
use std::time::Instant;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::experiment::{run_eval, run_train, ExperimentConfig, BASE_CONDITION};
use crate::snn::NetworkModel;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VerifyOptions {
    /// Added to η in the threshold config used by the energy-threshold golden checks.
    /// Anything but 0 should make `golden` fail.
    pub eta_offset: f64,
    /// Include the end-to-end avoid pipeline (about half a minute).
    pub pipeline: bool,
    /// Root seed for the randomized suites.
    pub seed: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { eta_offset: 0.0, pipeline: true, seed: 0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteReport {
    pub name: String,
    pub cases: usize,
    pub failures: Vec<String>,
    /// Measured values worth showing next to the verdict.
    pub notes: Vec<String>,
    pub seconds: f64,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn first_failure(&self) -> Option<&str> {
        self.failures.first().map(String::as_str)
    }
}

/// Case bookkeeping for one suite.
#[derive(Debug, Default)]
pub struct Checker {
    cases: usize,
    failures: Vec<String>,
    notes: Vec<String>,
}

impl Checker {
    pub fn check(&mut self, name: impl Display, pass: bool) {
        self.cases += 1;
        if !pass {
            self.failures.push(name.to_string());
        }
    }

    /// Relative error against `want`; absolute when `want` is 0.
    pub fn close(&mut self, name: impl Display, got: f64, want: f64, tol: f64) {
        let err = if want == 0.0 { got.abs() } else { ((got - want) / want).abs() };
        self.cases += 1;
        if !(err <= tol) {
            self.failures.push(format!("{name}: got {got:.17e}, want {want:.17e} (tol {tol:e})"));
        }
    }

    pub fn abs(&mut self, name: impl Display, got: f64, want: f64, tol: f64) {
        self.cases += 1;
        if !((got - want).abs() <= tol) {
            self.failures.push(format!("{name}: got {got:.17e}, want {want:.17e} (abs tol {tol:e})"));
        }
    }

    /// Unwraps `r`, recording an error as a failed case.
    pub fn ok<T>(&mut self, name: impl Display, r: Result<T>) -> Option<T> {
        match r {
            Ok(v) => Some(v),
            Err(e) => {
                self.cases += 1;
                self.failures.push(format!("{name}: {e}"));
                None
            }
        }
    }

    pub fn note(&mut self, text: impl Display) {
        self.notes.push(text.to_string());
    }

    pub fn failed(&self) -> usize {
        self.failures.len()
    }
}

type Suite = fn(&VerifyOptions, &mut Checker);

const SUITES: [(&str, Suite); 10] = [
    ("golden", golden::formulas),
    ("examples", golden::examples),
    ("monotonicity", suites::monotonicity),
    ("homeostasis", suites::homeostasis),
    ("degradation", suites::degradation),
    ("srm", suites::srm),
    ("simulator", suites::simulator),
    ("training", suites::training),
    ("fitted", suites::fitted),
    ("pipeline", suites::pipeline),
];

pub fn suite_names() -> Vec<&'static str> {
    SUITES.iter().map(|(n, _)| *n).collect()
}

pub fn run_suite(name: &str, opts: &VerifyOptions) -> Result<SuiteReport> {
    let (_, suite) = SUITES
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| Error::config(format!("unknown suite `{name}`; known: {}", suite_names().join(", "))))?;
    let start = Instant::now();
    let mut c = Checker::default();
    suite(opts, &mut c);
    Ok(SuiteReport { name: name.to_string(), cases: c.cases, failures: c.failures, notes: c.notes, seconds: start.elapsed().as_secs_f64() })
}

/// Every suite in order; `pipeline` only when `opts.pipeline` is set.
pub fn run_all(opts: &VerifyOptions) -> Vec<SuiteReport> {
    suite_names()
        .into_iter()
        .filter(|n| opts.pipeline || *n != "pipeline")
        .map(|n| run_suite(n, opts).expect("known suite"))
        .collect()
}

/// 4-16-2 LIF+BDETT classifier on 200 samples of the two-cluster task.
pub fn toy_classifier_config(seed: u64) -> ExperimentConfig {
    let v = serde_json::json!({
        "task": "classify",
        "model": { "layers": [4, 16, 2] },
        "T": 5,
        "seed": seed,
        "P": 200,
        "train": { "epochs": 50, "lr": 0.3, "batch_size": 32 },
        "init": { "gain": 1.0, "bias": 0.2 },
    });
    serde_json::from_value(v).expect("static config")
}

/// 24-64-64-2 LIF+BDETT policy cloned from 60 expert episodes, evaluated on 50 trials
/// of the default world.
pub fn avoid_pipeline_config(seed: u64) -> ExperimentConfig {
    let v = serde_json::json!({
        "task": "clone",
        "model": { "layers": [24, 64, 64, 2] },
        "T": 5,
        "seed": seed,
        "P": 50,
        "train": { "epochs": 12, "lr": 3.0, "batch_size": 32 },
        "init": { "gain": 1.0, "bias": 0.6 },
        "data": { "episodes": 60 },
    });
    serde_json::from_value(v).expect("static config")
}

/// Trains the toy classifier and returns it with its final training accuracy.
pub fn train_toy_classifier(cfg: &ExperimentConfig) -> Result<(NetworkModel, f64)> {
    let run = run_train(cfg)?;
    let acc = run.final_accuracy().ok_or_else(|| Error::domain("training ran zero epochs"))?;
    Ok((run.model, acc))
}

/// Base-condition accuracy or SR of `model` under `cfg`.
pub fn base_score(cfg: &ExperimentConfig, model: &NetworkModel) -> Result<f64> {
    let rep = run_eval(&ExperimentConfig { degradations: Vec::new(), ..cfg.clone() }, model)?;
    let base = rep.condition(BASE_CONDITION).expect("base condition always runs");
    Ok(base.accuracy.or(base.sr).unwrap_or(0.0))
}

/// Per-seed test-accuracy drops under `GaussWeights(σ)` for BDETT and for a static
/// threshold of 0.5, each trained from scratch.
pub fn robustness_drops(seeds: &[u64], sigma: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    use crate::degradation::{Degradation, DegradationSpec};
    use crate::thresholds::ThresholdSchemeConfig;
    let mut bdett = Vec::new();
    let mut fixed = Vec::new();
    for &seed in seeds {
        for (scheme, out) in [(ThresholdSchemeConfig::bdett(), &mut bdett), (ThresholdSchemeConfig::fixed(0.5), &mut fixed)] {
            let cfg = ExperimentConfig { scheme: Some(scheme), ..toy_classifier_config(seed) };
            let (model, _) = train_toy_classifier(&cfg)?;
            let noisy = ExperimentConfig {
                degradations: vec![DegradationSpec::new(Degradation::GaussWeights { sigma }, seed)],
                ..cfg.clone()
            };
            let rep = run_eval(&noisy, &model)?;
            let acc = |i: usize| rep.conditions[i].accuracy.unwrap_or(0.0);
            out.push(acc(0) - acc(1));
        }
    }
    Ok((bdett, fixed))
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
