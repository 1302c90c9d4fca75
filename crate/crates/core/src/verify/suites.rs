//! Randomized property suites and the desk-scale experiments.

use rand::seq::SliceRandom;
use rand::Rng;

use super::oracles;
use super::{avoid_pipeline_config, base_score, toy_classifier_config, train_toy_classifier, Checker, VerifyOptions};
use crate::degradation::{gauss_input, gauss_weights, quantize_8bit, zero_mask};
use crate::experiment::{run_train, ExperimentConfig};
use crate::homeostasis::{homeostasis_metrics, TrialRecording};
use crate::matrix::Matrix;
use crate::rng::{self, Purpose, SimRng};
use crate::sim2d::{
    cast_ray, default_normalizer, generate_trials, run_episode, step_kinematics, Bounds, Circle, DynamicObstacle,
    EpisodeConfig, ExpertPolicy, FnPolicy, Outcome, RobotPose, Segment, SnnPolicy, Trial, World, LIDAR_OFFSET, STATE_DIM,
};
use crate::snn::{fire, init_weights, srm_step, LayerState, NetworkModel, NeuronModel};
use crate::thresholds::{
    bdett_update, det, det_slope, dtt, dtt_slope, neuron_threshold, neuron_threshold_partials, shifted_stat, LayerStats,
    SchemeKind, ThresholdSchemeConfig,
};
use crate::trainer::{bptt_train, evaluate, gradient_check, Dataset, Sample, Target, TrainConfig};

fn suite_rng(opts: &VerifyOptions, suite: u64) -> SimRng {
    rng::stream(opts.seed, Purpose::Data, 1000 + suite)
}

fn random_layer(r: &mut SimRng, n: usize) -> (Vec<f64>, Vec<f64>) {
    let v = (0..n).map(|_| r.random_range(-2.0..2.0)).collect();
    let th = (0..n).map(|_| r.random_range(0.1..1.5)).collect();
    (v, th)
}

/// Finite-difference signs and slopes of the threshold terms at 100 random points.
pub(super) fn monotonicity(opts: &VerifyOptions, c: &mut Checker) {
    const H: f64 = 1e-5;
    const TOL: f64 = 1e-6;
    let mut r = suite_rng(opts, 1);
    let cfg = ThresholdSchemeConfig::bdett();
    for k in 0..100 {
        let n = r.random_range(1..8);
        let (vs, ths) = random_layer(&mut r, n);
        let Some(stats) = c.ok(format!("point {k} stats"), LayerStats::from_layer(&vs, &ths, cfg.range_coeff)) else {
            continue;
        };
        let v = r.random_range(-5.0..5.0);
        let fd = (det(v + H, &stats, cfg.eta, cfg.psi) - det(v - H, &stats, cfg.eta, cfg.psi)) / (2.0 * H);
        let slope = det_slope(v, &stats, cfg.eta, cfg.psi);
        c.check(format!("point {k}: dE/dv > 0"), fd > 0.0 && slope > 0.0);
        c.abs(format!("point {k}: dE/dv slope"), slope, fd, TOL);

        let v_prev = r.random_range(-2.0..2.0);
        let v_now = v_prev + r.random_range(-3.0..3.0);
        let mu = stats.mean_theta;
        let t = |x: f64| dtt(x, v_prev, mu, cfg.c_decay).unwrap_or(f64::NAN);
        let fd = (t(v_now + H) - t(v_now - H)) / (2.0 * H);
        let Some(slope) = c.ok(format!("point {k}: dtt slope"), dtt_slope(v_now, v_prev, cfg.c_decay)) else {
            continue;
        };
        c.check(format!("point {k}: dT/dΔv < 0"), fd < 0.0 && slope < 0.0);
        c.abs(format!("point {k}: dT/dΔv slope"), slope, fd, TOL);

        let theta = |now: f64, prev: f64| neuron_threshold(now, prev, 0.5, &stats, &cfg).unwrap_or(f64::NAN);
        let d_now = (theta(v_now + H, v_prev) - theta(v_now - H, v_prev)) / (2.0 * H);
        let d_prev = (theta(v_now, v_prev + H) - theta(v_now, v_prev - H)) / (2.0 * H);
        c.check(format!("point {k}: dΘ/dv_now < 0"), d_now < 0.0);
        c.check(format!("point {k}: dΘ/dv_prev > 0 with frozen stats"), d_prev > 0.0);
        if let Some((a_now, a_prev)) = c.ok(format!("point {k}: partials"), neuron_threshold_partials(v_now, v_prev, &stats, &cfg)) {
            c.abs(format!("point {k}: dΘ/dv_now slope"), a_now, d_now, TOL);
            c.abs(format!("point {k}: dΘ/dv_prev slope"), a_prev, d_prev, TOL);
        }

        let coeff = r.random_range(0.0..=1.0);
        if let Some(s) = c.ok(format!("point {k}: shifted stat"), shifted_stat(&vs, coeff)) {
            let lo = vs.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = vs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            c.check(format!("point {k}: shifted stat bounds"), lo - coeff * (hi - lo) - 1e-12 <= s && s <= hi + 1e-12);
        }

        let now: Vec<f64> = vs.iter().map(|v| v + r.random_range(-1.0..1.0)).collect();
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut r);
        let pick = |x: &[f64]| perm.iter().map(|&i| x[i]).collect::<Vec<f64>>();
        if let (Some(a), Some(b)) = (
            c.ok(format!("point {k}: update"), bdett_update(&now, &vs, &ths, &cfg)),
            c.ok(format!("point {k}: permuted update"), bdett_update(&pick(&now), &pick(&vs), &pick(&ths), &cfg)),
        ) {
            let same = pick(&a).iter().zip(&b).all(|(x, y)| (x - y).abs() <= 1e-12 * x.abs().max(1.0));
            c.check(format!("point {k}: permutation equivariance"), same);
        }
    }
    for x in [-1e6, -1e3, 0.0, 1e3, 1e6] {
        let stats = LayerStats { shifted_mean_v: 0.0, shifted_mean_theta: 0.5, mean_theta: 0.5 };
        c.check(format!("det finite at {x:e}"), det(x, &stats, cfg.eta, cfg.psi).is_finite());
    }
}

/// Metrics against explicit loops on 200 random recording sets.
pub(super) fn homeostasis(opts: &VerifyOptions, c: &mut Checker) {
    let mut r = suite_rng(opts, 2);
    for k in 0..200 {
        let p = r.random_range(1..10);
        let n = r.random_range(1..20);
        let mut trials = Vec::with_capacity(p);
        for id in 0..p {
            let t = r.random_range(1..60u64);
            let counts = (0..n).map(|_| r.random_range(0..=t)).collect();
            trials.push(TrialRecording { trial_id: id as u64, condition: "base".into(), counts, timesteps: t });
        }
        let Some(h) = c.ok(format!("set {k}"), homeostasis_metrics(&trials)) else {
            continue;
        };
        let counts: Vec<Vec<u64>> = trials.iter().map(|t| t.counts.clone()).collect();
        let steps: Vec<u64> = trials.iter().map(|t| t.timesteps).collect();
        let (m, sm, ss) = oracles::homeostasis(&counts, &steps);
        c.abs(format!("set {k}: FR_m"), h.fr_m, m, 1e-12);
        c.abs(format!("set {k}: FR_std^m"), h.fr_std_m, sm, 1e-12);
        c.abs(format!("set {k}: FR_std^s"), h.fr_std_s, ss, 1e-12);
        c.check(format!("set {k}: ranges"), (0.0..=1.0).contains(&h.fr_m) && h.fr_std_m <= 0.5);
    }
    let worked = [
        TrialRecording { trial_id: 0, condition: "base".into(), counts: vec![1, 1], timesteps: 2 },
        TrialRecording { trial_id: 1, condition: "base".into(), counts: vec![0, 2], timesteps: 2 },
    ];
    if let Some(h) = c.ok("worked example", homeostasis_metrics(&worked)) {
        c.check("worked example is exactly (0.5, 0.25, 0.25)", (h.fr_m, h.fr_std_m, h.fr_std_s) == (0.5, 0.25, 0.25));
    }
}

fn random_matrix(r: &mut SimRng, rows: usize, cols: usize, spread: f64) -> Matrix {
    let data = (0..rows * cols).map(|_| r.random_range(-spread..spread)).collect();
    Matrix::from_vec(rows, cols, data).expect("sized to fit")
}

/// Quantization bound, mask counts and Monte-Carlo moments of the noise operators.
pub(super) fn degradation(opts: &VerifyOptions, c: &mut Checker) {
    let mut r = suite_rng(opts, 3);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let (rows, cols) = (r.random_range(1..12), r.random_range(1..12));
        let spread = 10f64.powf(r.random_range(-3.0..2.0));
        let w = random_matrix(&mut r, rows, cols, spread);
        let q = quantize_8bit(&w);
        let back = q.dequantize();
        let err = w.as_slice().iter().zip(back.as_slice()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        worst = worst.max(err / (q.scale / 2.0));
    }
    // one ulp of slack for the dequantizing multiply
    c.check(format!("|w − ŵ| ≤ scale/2 on 1000 matrices (worst ratio {worst:.6})"), worst <= 1.0 + 1e-12);

    for k in 0..200 {
        let (rows, cols) = (r.random_range(1..15), r.random_range(1..15));
        let w = random_matrix(&mut r, rows, cols, 1.0);
        let fraction = r.random_range(0.0..=1.0);
        if let Some(m) = c.ok(format!("mask {k}"), zero_mask(&w, fraction, &mut r)) {
            let n = w.len();
            let want = ((fraction * n as f64).round() as usize).min(n);
            let zeros = m.as_slice().iter().filter(|&&x| x == 0.0).count();
            let kept = m.as_slice().iter().zip(w.as_slice()).all(|(a, b)| *a == 0.0 || a == b);
            c.check(format!("mask {k}: {want} zeros of {n}"), zeros == want && kept);
        }
    }

    let mut state = vec![0.0; STATE_DIM];
    state[LIDAR_OFFSET..].iter_mut().for_each(|x| *x = 3.0);
    let (mut sum, mut count) = (0.0, 0usize);
    while count < 100_000 {
        match gauss_input(&state, 1.0, 0.2, 6.0, &mut r) {
            Ok(out) => {
                for &x in &out[LIDAR_OFFSET..] {
                    sum += x;
                    count += 1;
                }
            }
            Err(e) => {
                c.check(format!("gauss input: {e}"), false);
                break;
            }
        }
    }
    c.abs(format!("gauss input mean over {count} draws"), sum / count as f64, 3.0, 0.01);

    let sigma = 0.05;
    let n = 100_000;
    let base = random_matrix(&mut r, 100, n / 100, 1.0);
    if let Some(noisy) = c.ok("gauss weights", gauss_weights(&base, sigma, &mut r)) {
        let d: Vec<f64> = noisy.as_slice().iter().zip(base.as_slice()).map(|(a, b)| a - b).collect();
        let mean = d.iter().sum::<f64>() / n as f64;
        let std = (d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
        c.abs("gauss weights std within 3%", std, sigma, 0.03 * sigma);
        c.abs("gauss weights mean within 3σ/√N", mean, 0.0, 3.0 * sigma / (n as f64).sqrt());
    }
}

/// `srm_step` driven for `T = 25` against the double-loop oracle on 500 instances.
pub(super) fn srm(opts: &VerifyOptions, c: &mut Checker) {
    const T: usize = 25;
    let mut r = suite_rng(opts, 4);
    for k in 0..500 {
        let (n_in, n) = (r.random_range(1..=8), r.random_range(1..=8));
        let w = random_matrix(&mut r, n, n_in, 2.0);
        let (tau_s, tau_r) = (r.random_range(0.5..4.0), r.random_range(0.5..4.0));
        let theta: Vec<f64> = (0..n).map(|_| r.random_range(0.2..1.5)).collect();
        let rate = r.random_range(0.05..0.6);
        let inputs: Vec<Vec<usize>> = (0..n_in).map(|_| (1..=T).filter(|_| r.random::<f64>() < rate).collect()).collect();

        let mut state = LayerState::new(n, 0.0);
        state.thresholds = theta.clone();
        let want = oracles::srm_layer(&(0..n).map(|i| w.row(i).to_vec()).collect::<Vec<_>>(), &inputs, &theta, T, tau_s, tau_r);
        let mut worst = 0.0f64;
        let mut failed = false;
        for t in 1..=T {
            let Ok(v) = srm_step(&state, &inputs, &w, t, tau_s, tau_r) else {
                failed = true;
                break;
            };
            worst = v.iter().zip(&want[t - 1]).map(|(a, b)| (a - b).abs()).fold(worst, f64::max);
            let Ok(s) = fire(&v, &theta) else {
                failed = true;
                break;
            };
            state.commit(t, v, theta.clone(), s, true);
        }
        c.check(format!("instance {k}: max error {worst:e}"), !failed && worst <= 1e-12);
    }
}

fn random_scene(r: &mut SimRng) -> World {
    let bounds = Bounds {
        x_min: r.random_range(-12.0..-4.0),
        y_min: r.random_range(-12.0..-4.0),
        x_max: r.random_range(4.0..12.0),
        y_max: r.random_range(4.0..12.0),
    };
    let inside = |r: &mut SimRng| (r.random_range(bounds.x_min..bounds.x_max), r.random_range(bounds.y_min..bounds.y_max));
    let circles = (0..r.random_range(0..6))
        .map(|_| {
            let (x, y) = inside(r);
            Circle { x, y, r: r.random_range(0.1..1.5) }
        })
        .collect();
    let segments = (0..r.random_range(0..5))
        .map(|_| {
            let ((x1, y1), (x2, y2)) = (inside(r), inside(r));
            Segment { x1, y1, x2, y2 }
        })
        .collect();
    World { bounds, circles, segments, dynamic: Vec::new() }
}

/// Raycast, kinematics, dynamic obstacles and episode replay.
pub(super) fn simulator(opts: &VerifyOptions, c: &mut Checker) {
    let mut r = suite_rng(opts, 5);
    let mut worst = 0.0f64;
    let mut bad = None;
    for k in 0..10_000 {
        let w = random_scene(&mut r);
        let b = w.bounds;
        let (x, y) = loop {
            let p = (r.random_range(b.x_min..b.x_max), r.random_range(b.y_min..b.y_max));
            if w.circles.iter().all(|c| c.surface_distance(p.0, p.1) > 1e-6) {
                break p;
            }
        };
        let angle = r.random_range(-std::f64::consts::PI..std::f64::consts::PI);
        let (dx, dy) = (angle.cos(), angle.sin());
        let edges = b.edges();
        let want = w
            .circles
            .iter()
            .filter_map(|c| oracles::ray_circle(x, y, dx, dy, c))
            .chain(w.segments.iter().chain(&edges).filter_map(|s| oracles::ray_segment(x, y, dx, dy, s)))
            .fold(f64::INFINITY, f64::min);
        let got = cast_ray(&w, &[], x, y, angle);
        let err = (got - want).abs();
        if !(err <= 1e-9) && bad.is_none() {
            bad = Some(format!("scene {k}: ray from ({x}, {y}) at {angle} got {got}, oracle {want}"));
        }
        worst = worst.max(err);
    }
    c.check(bad.unwrap_or_else(|| format!("raycast vs oracle on 10^4 scenes (worst {worst:e})")), worst <= 1e-9);

    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let (x, y, h) = (r.random_range(-9.0..9.0), r.random_range(-9.0..9.0), r.random_range(-3.0..3.0));
        let (vl, vr) = (r.random_range(-0.5..0.5), r.random_range(-0.5..0.5));
        let p = step_kinematics(&RobotPose::at(x, y, h), vl, vr, 0.1, 0.3);
        let (ox, oy, _) = oracles::kinematics(x, y, RobotPose::at(x, y, h).heading, vl, vr, 0.1, 0.3, 1000);
        worst = worst.max((p.x - ox).abs()).max((p.y - oy).abs());
    }
    c.check(format!("kinematics vs 1000 sub-steps (worst {worst:e})"), worst <= 1e-6);

    let mut ok = true;
    for _ in 0..200 {
        let d = DynamicObstacle {
            ax: r.random_range(-8.0..8.0),
            ay: r.random_range(-8.0..8.0),
            bx: r.random_range(-8.0..8.0),
            by: r.random_range(-8.0..8.0),
            speed: r.random_range(0.0..0.5),
            r: 0.3,
        };
        let w = World { dynamic: vec![d], ..World::empty() };
        let len = (d.bx - d.ax).hypot(d.by - d.ay);
        for step in [0u64, 1, 7, 99, 1000, r.random_range(0..5000)] {
            let c0 = w.dynamic_at(step, 0.1)[0];
            let (ex, ey) = oracles::shuttle(d.ax, d.ay, d.bx, d.by, d.speed, step as f64 * 0.1);
            let on_path = crate::sim2d::geometry::point_segment_distance(c0.x, c0.y, &d.path()) <= 1e-12 * len.max(1.0);
            ok &= on_path && (c0.x - ex).abs() <= 1e-9 && (c0.y - ey).abs() <= 1e-9;
        }
    }
    c.check("dynamic obstacles follow the triangle wave and stay on [A, B]", ok);

    let mut w = World::empty();
    w.circles.push(Circle { x: 2.0, y: 0.0, r: 1.0 });
    let t = Trial { start_x: 0.0, start_y: 0.0, goal_x: 5.0, goal_y: 5.0, heading: 0.0 };
    let out = run_episode(&w, &mut FnPolicy(|_: &[f64]| (0.5, 0.5)), &t, &EpisodeConfig::default(), &mut [], &mut rng::from_seed(0));
    // centre distance is still 1.35 when the surface is 0.35 away
    c.check("collision uses the obstacle surface", out.is_ok_and(|o| o.outcome == Outcome::Collision && o.steps <= 14));

    replay(opts, c);
}

fn replay(opts: &VerifyOptions, c: &mut Checker) {
    let w = World::default_world();
    let cfg = EpisodeConfig { max_steps: 300, ..EpisodeConfig::default() };
    let Some(trials) = c.ok("replay trials", generate_trials(&w, 4, opts.seed)) else {
        return;
    };
    let mut m = NetworkModel::zeros(&[STATE_DIM, 16, 2], NeuronModel::lif(), ThresholdSchemeConfig::bdett(), 5);
    init_weights(&mut m, 1.0, &mut rng::stream(opts.seed, Purpose::Init, 0));
    m.biases.iter_mut().flatten().for_each(|b| *b = 0.5);
    let Some(policy) = c.ok("replay policy", SnnPolicy::new(m, default_normalizer(&w, &cfg), cfg.v_max)) else {
        return;
    };
    for (i, t) in trials.iter().enumerate() {
        let once = || {
            let mut p = policy.clone();
            let o = run_episode(&w, &mut p, t, &cfg, &mut [], &mut rng::stream(opts.seed, Purpose::Trial, i as u64))?;
            Ok::<_, crate::Error>((o.outcome, o.steps, o.recording.map(|rec| rec.counts)))
        };
        let (a, b) = (once(), once());
        c.check(format!("snn episode {i} replays identically"), matches!((&a, &b), (Ok(x), Ok(y)) if x == y));
        let expert = || run_episode(&w, &mut ExpertPolicy::default(), t, &cfg, &mut [], &mut rng::from_seed(0)).map(|o| (o.outcome, o.steps));
        c.check(format!("expert episode {i} replays identically"), matches!((expert(), expert()), (Ok(x), Ok(y)) if x == y));
    }
}

/// Toy-task convergence, zero learning rate, memorization, gradients and determinism.
pub(super) fn training(_opts: &VerifyOptions, c: &mut Checker) {
    for seed in 0..3 {
        if let Some((_, acc)) = c.ok(format!("classifier seed {seed}"), train_toy_classifier(&toy_classifier_config(seed))) {
            c.check(format!("classifier seed {seed}: train accuracy {acc:.3} ≥ 0.95"), acc >= 0.95);
        }
    }

    let cfg = toy_classifier_config(0);
    let Some(initial) = c.ok("initial model", cfg.initial_model()) else {
        return;
    };
    let Some(data) = c.ok("toy data", cfg.training_data(&initial)) else {
        return;
    };
    let frozen = TrainConfig { lr: 0.0, epochs: 3, ..cfg.train.clone() };
    if let Some(out) = c.ok("lr = 0", bptt_train(&initial, &data, &frozen, 0)) {
        c.check("lr = 0 leaves weights and biases bit-identical", out.model == initial);
    }

    let one = Dataset { samples: vec![Sample { x: vec![0.8, 0.2, 0.9, 0.1], y: Target::Class(1) }] };
    // with T = 5 count logits, loss < 0.01 needs the full 5-to-0 margin
    let memo = TrainConfig { epochs: 100, lr: 1.0, batch_size: 1, ..cfg.train.clone() };
    if let Some(out) = c.ok("memorization", bptt_train(&initial, &one, &memo, 0)) {
        let loss = out.trace.last().map_or(f64::NAN, |e| e.loss);
        c.check(format!("single sample memorized (loss {loss:.4} < 0.01)"), loss < 0.01);
    }

    let short = TrainConfig { epochs: 3, ..cfg.train.clone() };
    if let (Some(a), Some(b)) = (c.ok("determinism a", bptt_train(&initial, &data, &short, 7)), c.ok("determinism b", bptt_train(&initial, &data, &short, 7))) {
        c.check("same seed trains identical weights", a.model == b.model && a.trace == b.trace);
    }

    for scheme in [ThresholdSchemeConfig::bdett(), ThresholdSchemeConfig::fixed(0.5)] {
        for frozen in [true, false] {
            let mut m = NetworkModel::zeros(&[2, 2, 1], NeuronModel::lif(), scheme, 5);
            init_weights(&mut m, 1.5, &mut rng::from_seed(4));
            let name = format!("gradient check {:?}, frozen stats {frozen}", scheme.kind);
            let rep = gradient_check(&m, &[0.7, 0.4], &Target::Action(vec![0.3]), &TrainConfig::default(), 1, 1e-4, 1e-3, frozen);
            if let Some(rep) = c.ok(&name, rep) {
                c.check(format!("{name}: {:.3} within 1e-3", rep.pass_fraction()), rep.pass_fraction() >= 0.95);
            }
        }
    }
}

/// The trained toy classifier with the statistics swapped for the fitted constants.
pub(super) fn fitted(opts: &VerifyOptions, c: &mut Checker) {
    let cfg = toy_classifier_config(opts.seed);
    let Some((model, acc)) = c.ok("toy classifier", train_toy_classifier(&cfg)) else {
        return;
    };
    let swapped = NetworkModel { scheme: model.scheme.with_kind(SchemeKind::FittedConstants), ..model.clone() };
    let test = ExperimentConfig { scheme: None, ..cfg.clone() };
    if let (Some(before), Some(after)) = (c.ok("bdett test accuracy", base_score(&test, &model)), c.ok("fitted test accuracy", base_score(&test, &swapped))) {
        c.note(format!("test accuracy {before:.3} -> {after:.3}"));
        c.check(format!("fitted constants give chance (train {acc:.3}, test {before:.3} -> {after:.3})"), (after - 0.5).abs() <= 0.1);
    }
    // training-set view, same encoder seeds as the trace
    if let Some(data) = c.ok("toy data", cfg.training_data(&model)) {
        if let Some((_, train_acc)) = c.ok("fitted train accuracy", evaluate(&swapped, &data, &cfg.train, cfg.seed)) {
            c.note(format!("fitted train accuracy {train_acc:.3}"));
            c.check(format!("fitted constants on the training set ({train_acc:.3})"), (train_acc - 0.5).abs() <= 0.1);
        }
    }
}

/// Behavior cloning to a 50-trial campaign in the default world.
pub(super) fn pipeline(opts: &VerifyOptions, c: &mut Checker) {
    let cfg = avoid_pipeline_config(opts.seed);
    let Some(run) = c.ok("clone training", run_train(&cfg)) else {
        return;
    };
    if let Some(sr) = c.ok("campaign", base_score(&cfg, &run.model)) {
        c.note(format!("base SR {sr:.2}"));
        c.check(format!("base SR {sr:.2} >= 0.5"), sr >= 0.5);
    }
}
