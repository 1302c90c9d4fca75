//! Worked examples with reference values computed outside this crate.

use std::f64::consts::{FRAC_PI_2, LN_2};

use super::{Checker, VerifyOptions};
use crate::degradation::{fix_laser_ranges, gauss_input, gauss_weights, quantize_8bit, zero_mask, DEFAULT_FIXED_LASERS};
use crate::encoding::{normalize_state, poisson_encode, rate_decode, StateNormalizer};
use crate::homeostasis::{delta, homeostasis_metrics, trial_rates, TrialRecording};
use crate::matrix::Matrix;
use crate::rng;
use crate::sim2d::{
    cast_ray, expert_controller, generate_trials, observe, rates, raycast, run_episode, step_kinematics,
    Circle, EpisodeConfig, ExpertParams, ExpertPolicy, FnPolicy, Outcome, RobotPose, Trial, World, LIDAR_MAX, LIDAR_MIN,
    LIDAR_OFFSET, N_RAYS,
};
use crate::snn::{fire, forward, lif_step, srm_epsilon, srm_step, srm_zeta, LayerState, NetworkModel, NeuronModel, SpikeTrain};
use crate::thresholds::{
    bdett_update, det, dtt, fitted_constants_update, shifted_stat, LayerStats, ThresholdSchemeConfig,
};
use crate::trainer::{clone_policy, clone_policy_with, surrogate_grad, Target};

const TOL: f64 = 1e-9;
const TWO_OVER_E: f64 = 0.735_758_882_342_884_643_2;

// mpmath, 40 digits
const DET_AT_1: f64 = 1.291_470_430_663_046_821_8;
const DET_AT_0: f64 = 1.153_350_140_826_795_160_7;
const DTT_RISE: f64 = 0.239_951_065_177_980_650_4;
const DTT_FALL: f64 = 0.574_829_753_153_012_556_7;
const DTT_FLAT_NEURON: f64 = 0.393_469_340_287_366_576_4;
const BDETT_NEURONS: [f64; 2] = [0.765_710_747_920_513_736_1, 0.773_409_740_557_080_868_5];
const BDETT_SINGLE: f64 = 1.162_633_869_694_251_494;
const FITTED_FLAT: f64 = 9.346_573_590_279_972_655;
const FITTED_E: f64 = 7.693_147_180_559_945_309;
const FITTED_T_RISE3: f64 = 4.678_794_411_714_423_216;
const RAY_AT_5_DEG: f64 = 1.523_757_871_396_248_312;

/// Neuron, kernel and threshold formulas.
pub(super) fn formulas(opts: &VerifyOptions, c: &mut Checker) {
    lif(c);
    srm(c);
    firing(c);
    network(c);
    thresholds(opts, c);
}

fn lif(c: &mut Checker) {
    let w = Matrix::from_rows(&[vec![0.5, -0.25]]).expect("1x2");
    let mut st = LayerState::new(1, 0.5);
    st.potentials_now = vec![0.4];
    if let Some(v) = c.ok("lif carry", lif_step(&st, &[true, true], &w, &[0.1], 0.75)) {
        c.close("lif carry", v[0], 0.65, TOL);
    }
    st.last_spikes = vec![true];
    if let Some(v) = c.ok("lif reset", lif_step(&st, &[true, true], &w, &[0.1], 0.75)) {
        c.close("lif reset", v[0], 0.35, TOL);
    }
    let st = LayerState::new(3, 0.5);
    if let Some(v) = c.ok("lif zero", lif_step(&st, &[true, false], &Matrix::zeros(3, 2), &[0.0; 3], 0.75)) {
        c.check("lif zero weights give zero", v == vec![0.0; 3]);
    }
}

fn srm(c: &mut Checker) {
    c.close("epsilon(0)", srm_epsilon(0, 1.0), 0.0, TOL);
    c.close("epsilon(1)", srm_epsilon(1, 1.0), 1.0, TOL);
    c.close("epsilon(2)", srm_epsilon(2, 1.0), TWO_OVER_E, TOL);
    c.close("zeta(0, 0.5)", srm_zeta(0, 0.5, 1.0), -1.0, TOL);
    c.close("zeta(1, 1.0)", srm_zeta(1, 1.0, 1.0), -TWO_OVER_E, TOL);
    c.check("zeta with zero threshold", (0..25).all(|t| srm_zeta(t, 0.0, 1.0) == 0.0));

    let w = Matrix::from_rows(&[vec![1.0]]).expect("1x1");
    let hist = vec![vec![1usize]];
    let st = LayerState::new(1, 0.5);
    if let Some(v) = c.ok("srm v(2)", srm_step(&st, &hist, &w, 2, 1.0, 1.0)) {
        c.close("srm v(2)", v[0], 1.0, TOL);
    }
    if let Some(v) = c.ok("srm v(3)", srm_step(&st, &hist, &w, 3, 1.0, 1.0)) {
        c.close("srm v(3)", v[0], TWO_OVER_E, TOL);
    }
    let mut st = LayerState::new(1, 0.5);
    st.commit(2, vec![1.0], vec![0.5], vec![true], true);
    if let Some(v) = c.ok("srm v(3) after own spike", srm_step(&st, &hist, &w, 3, 1.0, 1.0)) {
        c.close("srm v(3) after own spike", v[0], TWO_OVER_E - 1.0, TOL);
    }
}

fn firing(c: &mut Checker) {
    c.check("fire [1, 0.2] vs 0.5", fire(&[1.0, 0.2], &[0.5, 0.5]).ok() == Some(vec![true, false]));
    c.check("fire at equality", fire(&[0.5], &[0.5]).ok() == Some(vec![true]));
    c.check("fire empty", fire(&[], &[]).is_ok_and(|v| v.is_empty()));
}

fn network(c: &mut Checker) {
    let zero = NetworkModel::zeros(&[3, 2], NeuronModel::lif(), ThresholdSchemeConfig::fixed(0.5), 1);
    let silent = vec![SpikeTrain::silent(1); 3];
    c.check("forward silent input", forward(&zero, &silent, None).ok() == Some(vec![0, 0]));

    let single = |theta| {
        let mut m = NetworkModel::zeros(&[1, 1], NeuronModel::lif(), ThresholdSchemeConfig::fixed(theta), 3);
        m.weights[0].set(0, 0, 1.0);
        m
    };
    let on = vec![SpikeTrain::new(vec![true; 3])];
    c.check("forward theta 0.5 fires every step", forward(&single(0.5), &on, None).ok() == Some(vec![3]));
    c.check("forward theta 1.5 fires once", forward(&single(1.5), &on, None).ok() == Some(vec![1]));
}

fn thresholds(opts: &VerifyOptions, c: &mut Checker) {
    c.close("shifted_stat [1, 0]", shifted_stat(&[1.0, 0.0], 0.2).unwrap_or(f64::NAN), 0.3, TOL);
    c.close("shifted_stat uniform", shifted_stat(&[0.7; 5], 0.6).unwrap_or(f64::NAN), 0.7, TOL);
    c.close("shifted_stat single", shifted_stat(&[-2.5], 0.2).unwrap_or(f64::NAN), -2.5, TOL);

    let cfg = ThresholdSchemeConfig { eta: ThresholdSchemeConfig::bdett().eta + opts.eta_offset, ..ThresholdSchemeConfig::bdett() };
    let Some(stats) = c.ok("layer stats", LayerStats::from_layer(&[1.0, 0.0], &[0.5, 0.5], cfg.range_coeff)) else {
        return;
    };
    c.close("det(v=1)", det(1.0, &stats, cfg.eta, cfg.psi), DET_AT_1, TOL);
    c.close("det(v=0)", det(0.0, &stats, cfg.eta, cfg.psi), DET_AT_0, TOL);
    if let Some(flat) = c.ok("uniform stats", LayerStats::from_layer(&[0.3; 4], &[0.8; 4], cfg.range_coeff)) {
        c.close("det uniform layer", det(0.3, &flat, cfg.eta, cfg.psi), 0.8 + LN_2, TOL);
    }

    let dtt_case = |name: &str, c: &mut Checker, got: crate::Result<f64>, want: f64| {
        if let Some(v) = c.ok(name, got) {
            c.close(name, v, want, TOL);
        }
    };
    dtt_case("dtt flat", c, dtt(0.0, 0.0, 0.0, 3.0), 0.0);
    dtt_case("dtt rising", c, dtt(1.0, 0.5, 0.5, 3.0), DTT_RISE);
    dtt_case("dtt falling", c, dtt(0.0, 0.5, 0.5, 3.0), DTT_FALL);
    c.check("dtt overflow is an error", dtt(-3000.0, 0.0, 0.5, 3.0).is_err());

    if let Some(th) = c.ok("bdett_update", bdett_update(&[1.5, 0.0], &[1.0, 0.0], &[0.5, 0.5], &cfg)) {
        c.close("bdett neuron 1", th[0], BDETT_NEURONS[0], TOL);
        c.close("bdett neuron 2", th[1], BDETT_NEURONS[1], TOL);
    }
    // the second neuron's temporal term alone
    dtt_case("dtt of bdett neuron 2", c, dtt(0.0, 0.0, 0.5, 3.0), DTT_FLAT_NEURON);
    let fixed = ThresholdSchemeConfig::fixed(0.5);
    c.check("static scheme keeps thresholds", bdett_update(&[3.0, -1.0], &[0.0, 2.0], &[0.4, 0.9], &fixed).ok() == Some(vec![0.4, 0.9]));
    if let Some(th) = c.ok("bdett single neuron", bdett_update(&[0.0], &[0.0], &[1.0], &cfg)) {
        c.close("bdett single neuron", th[0], BDETT_SINGLE, TOL);
    }

    if let Some(th) = c.ok("fitted flat", fitted_constants_update(&[3.0], &[3.0])) {
        c.close("fitted, Δv = 0", th[0], FITTED_FLAT, TOL);
    }
    c.close("fitted energy term", det(3.0, &LayerStats::fitted(), 0.01, 4.0), FITTED_E, TOL);
    if let Some(th) = c.ok("fitted rise", fitted_constants_update(&[6.0], &[3.0])) {
        c.close("fitted, Δv = 3", th[0], 0.5 * (FITTED_E + FITTED_T_RISE3), TOL);
    }
    if let Some(th) = c.ok("fitted asymptote", fitted_constants_update(&[1003.0], &[3.0])) {
        c.close("fitted, Δv → ∞", th[0], 0.5 * (FITTED_E + 1.0), TOL);
    }
}

/// Examples for the encoder, degradations, homeostasis, trainer and simulator.
pub(super) fn examples(opts: &VerifyOptions, c: &mut Checker) {
    encoding(opts, c);
    degradation(opts, c);
    homeostasis(c);
    trainer(c);
    simulator(c);
}

fn encoding(opts: &VerifyOptions, c: &mut Checker) {
    let mut r = rng::from_seed(opts.seed);
    c.check("poisson value 0", poisson_encode(0.0, 50, &mut r).is_ok_and(|t| t.count() == 0));
    c.check("poisson value 1", poisson_encode(1.0, 50, &mut r).is_ok_and(|t| t.count() == 50));
    if let Some(t) = c.ok("poisson 0.5", poisson_encode(0.5, 10_000, &mut r)) {
        c.abs("poisson 0.5 rate", t.count() as f64 / 10_000.0, 0.5, 0.015);
    }
    if let Some(n) = c.ok("normalizer", StateNormalizer::new(vec![(0.2, 6.0)])) {
        let one = |x: f64| normalize_state(&[x], &n).map(|v| v[0]).unwrap_or(f64::NAN);
        c.close("normalize lo", one(0.2), 0.0, TOL);
        c.close("normalize hi", one(6.0), 1.0, TOL);
        c.close("normalize 3.1", one(3.1), 0.5, TOL);
    }
    c.check("decode 0", rate_decode(&[0], 5, 0.0, 0.5).ok() == Some(vec![0.0]));
    c.check("decode T", rate_decode(&[5], 5, 0.0, 0.5).ok() == Some(vec![0.5]));
    if let Some(v) = c.ok("decode 2 of 5", rate_decode(&[2], 5, 0.0, 0.5)) {
        c.close("decode 2 of 5", v[0], 0.2, TOL);
    }
}

fn lidar_state(ranges: &[f64]) -> Vec<f64> {
    let mut s = vec![5.0, 0.1, 0.0, 0.3, 0.0, 0.2];
    s.extend_from_slice(ranges);
    s
}

fn degradation(opts: &VerifyOptions, c: &mut Checker) {
    let flat = lidar_state(&[6.0; N_RAYS]);
    if let Some(out) = c.ok("fixed lasers at 0.2", fix_laser_ranges(&flat, &DEFAULT_FIXED_LASERS, 0.2)) {
        c.check("fixed lasers at 0.2 change three rays", out[LIDAR_OFFSET..].iter().filter(|&&x| x == 0.2).count() == 3);
    }
    c.check("fixed lasers at 6.0 is identity", fix_laser_ranges(&flat, &DEFAULT_FIXED_LASERS, 6.0).ok().as_ref() == Some(&flat));
    let mixed: Vec<f64> = (0..N_RAYS).map(|k| 0.5 + 0.3 * k as f64).collect();
    let s = lidar_state(&mixed);
    if let Some(out) = c.ok("fixed lasers mixed", fix_laser_ranges(&s, &DEFAULT_FIXED_LASERS, 0.2)) {
        let changed: Vec<usize> = (0..s.len()).filter(|&i| out[i] != s[i]).collect();
        let want: Vec<usize> = DEFAULT_FIXED_LASERS.iter().map(|k| LIDAR_OFFSET + k - 1).collect();
        c.check("fixed lasers touch only rays 3, 9, 15", changed == want);
    }

    let mut r = rng::from_seed(opts.seed);
    c.check("gauss input σ = 0", gauss_input(&s, 0.0, LIDAR_MIN, LIDAR_MAX, &mut r).ok().as_ref() == Some(&s));
    if let Some(out) = c.ok("gauss input clip", gauss_input(&flat, 1e6, LIDAR_MIN, LIDAR_MAX, &mut r)) {
        c.check("gauss input saturates at the clip bounds", out[LIDAR_OFFSET..].iter().all(|&x| x == LIDAR_MIN || x == LIDAR_MAX));
        c.check("gauss input leaves the goal block", out[..LIDAR_OFFSET] == flat[..LIDAR_OFFSET]);
    }

    let w = Matrix::from_rows(&[vec![0.5, -1.0, 0.25]]).expect("1x3");
    let q = quantize_8bit(&w);
    c.close("quantize scale", q.scale, 1.0 / 127.0, TOL);
    c.check("quantize codes", q.q == vec![64, -127, 32]);
    let back = q.dequantize();
    c.close("dequantize 0.5", back.get(0, 0), 64.0 / 127.0, TOL);
    c.close("dequantize -1", back.get(0, 1), -1.0, TOL);
    c.close("dequantize 0.25", back.get(0, 2), 32.0 / 127.0, TOL);
    let grid = Matrix::from_rows(&[vec![-127.0, 3.0, 64.0, 0.0]]).expect("1x4");
    c.check("quantize grid round trip", quantize_8bit(&grid).dequantize() == grid);

    let w = Matrix::from_vec(10, 10, (0..100).map(|i| 0.01 * (i as f64 + 1.0)).collect()).expect("10x10");
    c.check("gauss weights σ = 0", gauss_weights(&w, 0.0, &mut r).ok().as_ref() == Some(&w));
    c.check("zero mask 0", zero_mask(&w, 0.0, &mut r).ok().as_ref() == Some(&w));
    c.check("zero mask 1", zero_mask(&w, 1.0, &mut r).is_ok_and(|m| m.as_slice().iter().all(|&x| x == 0.0)));
    if let Some(m) = c.ok("zero mask 0.3", zero_mask(&w, 0.3, &mut r)) {
        let zeros = m.as_slice().iter().filter(|&&x| x == 0.0).count();
        let kept = m.as_slice().iter().zip(w.as_slice()).all(|(a, b)| *a == 0.0 || a == b);
        c.check("zero mask 0.3 zeroes exactly 30", zeros == 30);
        c.check("zero mask 0.3 keeps the rest bit-identical", kept);
    }
}

fn rec(id: u64, counts: Vec<u64>, t: u64) -> TrialRecording {
    TrialRecording { trial_id: id, condition: "base".into(), counts, timesteps: t }
}

fn homeostasis(c: &mut Checker) {
    c.check("rates [5, 0] / 5", trial_rates(&rec(0, vec![5, 0], 5)).ok() == Some(vec![1.0, 0.0]));
    if let Some(v) = c.ok("rates [2] / 5", trial_rates(&rec(0, vec![2], 5))) {
        c.close("rates [2] / 5", v[0], 0.4, TOL);
    }
    c.check("rates all zero", trial_rates(&rec(0, vec![0; 4], 7)).ok() == Some(vec![0.0; 4]));

    let worked = [rec(0, vec![1, 1], 2), rec(1, vec![0, 2], 2)];
    if let Some(h) = c.ok("worked example", homeostasis_metrics(&worked)) {
        c.check("worked example is (0.5, 0.25, 0.25)", (h.fr_m, h.fr_std_m, h.fr_std_s) == (0.5, 0.25, 0.25));
        let d = delta(&h, &h);
        c.check("delta against itself", (d.fr_m, d.fr_std_m, d.fr_std_s) == (0.0, 0.0, 0.0));
    }
    if let Some(h) = c.ok("single trial", homeostasis_metrics(&[rec(0, vec![1, 3, 0], 4)])) {
        c.check("single trial has no spread", h.fr_std_s == 0.0);
    }
    let same = [rec(0, vec![1, 3, 0], 4), rec(1, vec![1, 3, 0], 4), rec(2, vec![1, 3, 0], 4)];
    if let (Some(h), Some(other)) = (c.ok("identical trials", homeostasis_metrics(&same)), c.ok("other", homeostasis_metrics(&worked))) {
        c.check("identical trials have no spread", h.fr_std_s == 0.0);
        c.check("delta is symmetric", delta(&h, &other) == delta(&other, &h));
    }
}

fn trainer(c: &mut Checker) {
    c.close("surrogate peak", surrogate_grad(0.5, 0.5, 10.0), 1.0, TOL);
    c.close("surrogate at 0.1", surrogate_grad(0.6, 0.5, 10.0), 0.25, TOL);
    c.close("surrogate at -0.1", surrogate_grad(0.4, 0.5, 10.0), 0.25, TOL);
    c.check("surrogate vanishes far away", surrogate_grad(1e9, 0.0, 10.0) < 1e-18);

    let w = World::default_world();
    let cfg = EpisodeConfig::default();
    let norm = crate::sim2d::default_normalizer(&w, &cfg);
    let empty = c.ok("clone 0 episodes", clone_policy(&w, &ExpertParams::default(), 0, &cfg, &norm, 1));
    c.check("clone 0 episodes is empty", empty.is_some_and(|d| d.is_empty()));
    if let Some(trials) = c.ok("clone trials", generate_trials(&w, 10, 3)) {
        let short = EpisodeConfig { max_steps: 40, ..cfg };
        if let Some(d) = c.ok("clone constant expert", clone_policy_with(&w, |_: &[f64]| Ok((0.1, 0.2)), &trials[..3], &short, &norm)) {
            c.check("constant expert gives identical targets", !d.is_empty() && d.samples.iter().all(|s| s.y == Target::Action(vec![0.1, 0.2])));
        }
        if let Some(d) = c.ok("clone 10 episodes", clone_policy(&w, &ExpertParams::default(), 10, &cfg, &norm, 3)) {
            let steps: Option<usize> = trials
                .iter()
                .map(|t| run_episode(&w, &mut ExpertPolicy::default(), t, &cfg, &mut [], &mut rng::from_seed(0)).ok().map(|o| o.steps))
                .sum();
            c.check("clone size equals total episode steps", steps == Some(d.len()));
        }
    }
}

fn trial(sx: f64, sy: f64, gx: f64, gy: f64, heading: f64) -> Trial {
    Trial { start_x: sx, start_y: sy, goal_x: gx, goal_y: gy, heading }
}

fn simulator(c: &mut Checker) {
    let mut w = World::empty();
    w.circles.push(Circle { x: 2.0, y: 0.0, r: 0.5 });
    c.close("ray straight at a circle", cast_ray(&w, &[], 0.0, 0.0, 0.0), 1.5, TOL);
    let scan = raycast(&w, &[], &RobotPose::at(0.0, 0.0, 0.0));
    c.close("ray at -5°", scan[8], RAY_AT_5_DEG, TOL);
    c.close("ray at +5°", scan[9], RAY_AT_5_DEG, TOL);
    c.check("empty world clamps at 6", raycast(&World::empty(), &[], &RobotPose::at(0.0, 0.0, 0.4)) == [LIDAR_MAX; N_RAYS]);
    let mut near = World::empty();
    near.circles.push(Circle { x: 0.6, y: 0.0, r: 0.5 });
    c.close("near obstacle clamps at 0.2", raycast(&near, &[], &RobotPose::at(0.0, 0.0, 0.0))[9], LIDAR_MIN, TOL);

    let p = step_kinematics(&RobotPose::at(1.0, 2.0, 0.3), 0.4, 0.4, 0.1, 0.3);
    c.close("straight x", p.x, 1.0 + 0.04 * 0.3f64.cos(), TOL);
    c.close("straight y", p.y, 2.0 + 0.04 * 0.3f64.sin(), TOL);
    c.check("straight keeps heading", p.heading == 0.3);
    let p = step_kinematics(&RobotPose::at(1.0, 2.0, 0.3), -0.2, 0.2, 0.1, 0.3);
    c.abs("spin x", p.x, 1.0, 1e-15);
    c.abs("spin y", p.y, 2.0, 1e-15);
    c.close("spin heading", p.heading, 0.3 + 0.4 * 0.1 / 0.3, TOL);
    let p = step_kinematics(&RobotPose::at(-1.0, 0.5, 1.1), 0.13, 0.42, 0.1, 0.3);
    let (x, y, h) = super::oracles::kinematics(-1.0, 0.5, 1.1, 0.13, 0.42, 0.1, 0.3, 1000);
    c.abs("arc x vs 1000 sub-steps", p.x, x, TOL);
    c.abs("arc y vs 1000 sub-steps", p.y, y, TOL);
    c.abs("arc heading vs 1000 sub-steps", p.heading, h, TOL);

    let e = World::empty();
    let at_goal = observe(&e, &[], &RobotPose::at(1.0, 1.0, 0.0), (1.0, 1.0));
    c.check("observe at goal", at_goal[0] == 0.0);
    let ahead = observe(&e, &[], &RobotPose::at(0.0, 0.0, 0.0), (4.0, 0.0));
    c.check("observe goal ahead", (ahead[1], ahead[2]) == (0.0, 0.0));
    let left = observe(&e, &[], &RobotPose::at(0.0, 0.0, 0.0), (0.0, 5.0));
    c.close("observe left distance", left[0], 5.0, TOL);
    c.close("observe left, right component", left[1], 0.0, TOL);
    c.close("observe left, left component", left[2], FRAC_PI_2, TOL);

    let cfg = EpisodeConfig::default();
    let run = |p: (f64, f64), t: Trial| run_episode(&e, &mut FnPolicy(move |_: &[f64]| p), &t, &cfg, &mut [], &mut rng::from_seed(0));
    let o = c.ok("episode at goal", run((0.5, 0.5), trial(0.0, 0.0, 0.3, 0.0, 0.0)));
    c.check("episode at goal succeeds in 0 steps", o.is_some_and(|o| (o.outcome, o.steps) == (Outcome::Success, 0)));
    let bound = ((1.0f64 - 0.35) / (0.5 * 0.1)).ceil() as usize;
    let o = c.ok("episode into a wall", run((0.5, 0.5), trial(9.0, 0.0, -5.0, 0.0, 0.0)));
    c.check("episode into a wall collides in time", o.is_some_and(|o| o.outcome == Outcome::Collision && o.steps <= bound));
    let o = c.ok("episode standing still", run((0.0, 0.0), trial(0.0, 0.0, 5.0, 5.0, 0.0)));
    c.check("episode standing still times out", o.is_some_and(|o| (o.outcome, o.steps) == (Outcome::Overtime, 1000)));

    let p = ExpertParams::default();
    let state = |bearing: f64, ranges: [f64; N_RAYS]| {
        let mut s = vec![5.0, (-bearing).max(0.0), bearing.max(0.0), 0.0, 0.0, 0.0];
        s.extend(ranges);
        s
    };
    c.check("expert open space", expert_controller(&state(0.0, [6.0; N_RAYS]), &p).ok() == Some((0.5, 0.5)));
    let mut sym = [6.0; N_RAYS];
    for (k, v) in [(1, 0.7), (6, 0.8), (8, 0.5)] {
        sym[k] = v;
        sym[N_RAYS - 1 - k] = v;
    }
    c.check("expert symmetric field", expert_controller(&state(0.0, sym), &p).is_ok_and(|(l, r)| l == r));
    let mut right = [6.0; N_RAYS];
    right[6] = 0.5;
    c.check("expert obstacle right turns left", expert_controller(&state(0.0, right), &p).is_ok_and(|(l, r)| r > l));

    use Outcome::*;
    c.check("rates [S, C, S, O]", rates(&[Success, Collision, Success, Overtime]).ok() == Some((0.5, 0.25)));
    c.check("rates all success", rates(&[Success; 4]).ok() == Some((1.0, 0.0)));
    c.check("rates empty", rates(&[]).is_err());
    let empty = crate::sim2d::campaign(&e, &ExpertPolicy::default(), &[], &cfg, &[], 0, "base", false);
    c.check("empty campaign", empty.is_err());
}
