use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use bdett::experiment::ExperimentConfig;
use bdett::snn::NetworkModel;
use serde_json::{json, Value};
use tempfile::TempDir;

fn bdett(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bdett")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write_config(dir: &Path, name: &str, mut cfg: Value) -> PathBuf {
    cfg["out"] = json!(dir.join(format!("{name}-out")));
    let p = dir.join(format!("{name}.json"));
    fs::write(&p, serde_json::to_string_pretty(&cfg).unwrap()).unwrap();
    p
}

fn classify(epochs: usize) -> Value {
    json!({
        "task": "classify",
        "model": { "layers": [4, 16, 2] },
        "T": 5,
        "seed": 3,
        "P": 100,
        "train": { "epochs": epochs, "lr": 0.3, "batch_size": 32 },
        "init": { "gain": 1.0, "bias": 0.2 },
    })
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn train_reaches_accuracy_and_writes_outputs() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "train", classify(50));
    let o = bdett(&["train", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let acc: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("final accuracy: "))
        .expect("accuracy line")
        .trim()
        .parse()
        .unwrap();
    assert!(acc >= 0.95, "{text}");

    let out = dir.path().join("train-out");
    let loss = fs::read_to_string(out.join("loss.csv")).unwrap();
    assert_eq!(loss.lines().count(), 51, "header plus one row per epoch");
    NetworkModel::load(&out.join("model.json")).unwrap();

    let m = read_json(&out.join("manifest.json"));
    assert_eq!(m["command"], "train");
    assert_eq!(m["seed"], 3);
    assert_eq!(m["config_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn zero_epochs_saves_the_initialization() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "zero", classify(0));
    let o = bdett(&["train", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let saved = NetworkModel::load(&dir.path().join("zero-out/model.json")).unwrap();
    let init = ExperimentConfig::load(&cfg).unwrap().initial_model().unwrap();
    let bits = |m: &NetworkModel| -> Vec<u64> {
        m.weights.iter().flat_map(|w| w.as_slice()).chain(m.biases.iter().flatten()).map(|x| x.to_bits()).collect()
    };
    assert_eq!(bits(&saved), bits(&init));
    assert_eq!(saved, init);
}

#[test]
fn seed_flag_overrides_config() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "seed", classify(0));
    let out = dir.path().join("elsewhere");
    let o = bdett(&["train", "--config", cfg.to_str().unwrap(), "--seed", "11", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(read_json(&out.join("manifest.json"))["seed"], 11);
}

#[test]
fn missing_model_file_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let mut v = classify(1);
    v["model"] = json!(dir.path().join("nope.json"));
    let cfg = write_config(dir.path(), "missing", v);
    let o = bdett(&["eval", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn malformed_config_reports_position() {
    let dir = TempDir::new().unwrap();
    let p = dir.path().join("bad.json");
    fs::write(&p, "{\n  \"task\": \"classify\",\n  \"model\": \n}").unwrap();
    let o = bdett(&["train", "--config", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line"));
}

#[test]
fn eval_is_reproducible_and_reports_each_condition() {
    let dir = TempDir::new().unwrap();
    let mut v = classify(20);
    v["degradations"] = json!([{ "kind": "quantize8" }, { "kind": "gauss_weights", "sigma": 0.1, "seed": 4 }]);
    let runs: Vec<PathBuf> = (0..2)
        .map(|i| {
            let cfg = write_config(dir.path(), &format!("eval{i}"), v.clone());
            let o = bdett(&["eval", "--config", cfg.to_str().unwrap()]);
            assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
            dir.path().join(format!("eval{i}-out"))
        })
        .collect();
    let csv = |d: &PathBuf| fs::read(d.join("trials.csv")).unwrap();
    assert_eq!(csv(&runs[0]), csv(&runs[1]));

    let report = read_json(&runs[0].join("report.json"));
    let names: Vec<&str> = report["conditions"].as_array().unwrap().iter().map(|c| c["condition"].as_str().unwrap()).collect();
    assert_eq!(names, ["base", "quantize8", "gauss_weights"]);
    let base = &report["conditions"][0];
    for k in ["fr_m", "fr_std_m", "fr_std_s"] {
        assert_eq!(base["delta"][k], 0.0);
    }
    assert!(runs[0].join("model.json").exists());
}

#[test]
fn eval_runs_a_small_clone_campaign() {
    let dir = TempDir::new().unwrap();
    let v = json!({
        "task": "avoid",
        "model": { "layers": [24, 8, 2] },
        "T": 3,
        "P": 3,
        "seed": 1,
        "train": { "epochs": 1, "lr": 1.0, "batch_size": 32 },
        "data": { "episodes": 2 },
        "degradations": [{ "kind": "fixed_lasers", "value": 0.2, "indices": [1, 2, 3] }],
    });
    let cfg = write_config(dir.path(), "avoid", v);
    let o = bdett(&["eval", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("avoid-out/trials.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 3);
    let report = read_json(&dir.path().join("avoid-out/report.json"));
    for c in report["conditions"].as_array().unwrap() {
        let sr = c["sr"].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&sr));
    }
}

#[test]
fn verify_passes_and_catches_a_perturbed_eta() {
    let o = bdett(&["verify", "--skip-pipeline"]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(!stdout(&o).contains("first failure"));

    let o = bdett(&["verify", "--suite", "golden", "--perturb-eta", "1e-6"]);
    assert_eq!(o.status.code(), Some(1));
    let text = stdout(&o);
    assert!(text.contains("first failure: [golden] det"), "{text}");
}

#[test]
fn unknown_suite_is_a_config_error() {
    let o = bdett(&["verify", "--suite", "nonsense"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn thread_count_does_not_change_results() {
    let dir = TempDir::new().unwrap();
    let v = json!({
        "task": "avoid",
        "model": { "layers": [24, 8, 2] },
        "T": 3,
        "P": 8,
        "seed": 5,
        "train": { "epochs": 1, "lr": 1.0, "batch_size": 32 },
        "data": { "episodes": 2 },
        "degradations": [{ "kind": "gauss_input", "sigma": 0.5, "seed": 1 }],
    });
    let cfg = write_config(dir.path(), "jobs", v);
    let outs: Vec<PathBuf> = ["1", "4"]
        .iter()
        .map(|j| {
            let out = dir.path().join(format!("jobs-{j}"));
            let o = bdett(&["--jobs", j, "eval", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
            assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
            out
        })
        .collect();
    for f in ["trials.csv", "report.json"] {
        assert_eq!(fs::read(outs[0].join(f)).unwrap(), fs::read(outs[1].join(f)).unwrap(), "{f}");
    }
}
