//! Unrolled forward trace and backpropagation through time for LIF networks.
//!
//! Per layer and step (`u` potential, `θ` threshold, `s` spike, `x` layer input):
//!
//! ```text
//! u_t = W x_t + D·u_{t−1}·(1 − s_{t−1}) + b
//! θ_t = g(u_t, u_{t−1})          layer statistics frozen
//! s_t = H(u_t − θ_t)
//! ```
//!
//! The backward pass replaces `H'` by the fast-sigmoid surrogate and includes the
//! reset path and both threshold partials. With `through_stats` it also follows the
//! layer statistics back to the potentials and thresholds of the previous step.

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::snn::NetworkModel;
use crate::thresholds::{
    layer_stats_for, neuron_threshold_partials, neuron_threshold_stat_partials, update_with_stats, LayerStats, SchemeKind,
    ThresholdSchemeConfig,
};

/// `1/(1 + α|v − θ|)²`
pub fn surrogate_grad(v: f64, theta: f64, alpha: f64) -> f64 {
    let d = 1.0 + alpha * (v - theta).abs();
    1.0 / (d * d)
}

/// Smooth stand-in for the step function whose derivative is exactly the surrogate.
pub fn smooth_spike(x: f64, alpha: f64) -> f64 {
    0.5 + x / (1.0 + alpha * x.abs())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpikeMode {
    /// Heaviside forward, surrogate backward.
    Hard,
    /// `smooth_spike` forward; used by the gradient check.
    Smooth,
}

/// Layer statistics used at every step, `stats[l][t]`.
pub type FrozenStats = Vec<Vec<Option<LayerStats>>>;

#[derive(Clone, Debug)]
pub(crate) struct LayerTrace {
    pub u: Vec<Vec<f64>>,
    pub s: Vec<Vec<f64>>,
    /// `u_t − θ_t`
    pub margin: Vec<Vec<f64>>,
    pub h: Vec<Vec<f64>>,
    pub dtheta_now: Vec<Vec<f64>>,
    pub dtheta_prev: Vec<Vec<f64>>,
    pub theta: Vec<Vec<f64>>,
    /// `(∂Θ/∂V_m, ∂Θ/∂V_θ, ∂Θ/∂μ)`, empty when the step used no statistics.
    pub dtheta_stats: Vec<Vec<(f64, f64, f64)>>,
    pub range_coeff: f64,
}

#[derive(Clone, Debug)]
pub(crate) struct Trace {
    pub inputs: Vec<Vec<f64>>,
    pub layers: Vec<LayerTrace>,
    pub stats: FrozenStats,
    /// Output spike counts (real-valued in smooth mode).
    pub counts: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Grads {
    pub weights: Vec<Matrix>,
    pub biases: Vec<Vec<f64>>,
}

impl Grads {
    pub fn zeros(model: &NetworkModel) -> Self {
        Grads {
            weights: model.weights.iter().map(|w| Matrix::zeros(w.rows(), w.cols())).collect(),
            biases: model.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    pub fn add_assign(&mut self, other: &Grads) {
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            for (x, y) in a.as_mut_slice().iter_mut().zip(b.as_slice()) {
                *x += y;
            }
        }
        for (a, b) in self.biases.iter_mut().zip(&other.biases) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn scale(&mut self, k: f64) {
        for w in &mut self.weights {
            w.as_mut_slice().iter_mut().for_each(|x| *x *= k);
        }
        for b in &mut self.biases {
            b.iter_mut().for_each(|x| *x *= k);
        }
    }
}

/// Runs the network over `inputs[t][j]` and keeps everything the backward pass needs.
///
/// `schemes[l]` overrides the model's threshold scheme per layer. With `frozen` the
/// layer statistics are taken from there instead of being computed.
pub(crate) fn forward_trace(
    model: &NetworkModel,
    schemes: &[ThresholdSchemeConfig],
    inputs: Vec<Vec<f64>>,
    alpha: f64,
    mode: SpikeMode,
    frozen: Option<&FrozenStats>,
) -> Result<Trace> {
    let decay = match model.neuron_model {
        crate::snn::NeuronModel::Lif { decay } => decay,
        _ => return Err(Error::domain("training supports LIF networks only")),
    };
    let steps = inputs.len();
    let mut layers: Vec<LayerTrace> = Vec::with_capacity(model.n_layers());
    let mut all_stats = Vec::with_capacity(model.n_layers());
    for l in 0..model.n_layers() {
        let w = &model.weights[l];
        let bias = &model.biases[l];
        let cfg = &schemes[l];
        let n = w.rows();
        let x_seq: &[Vec<f64>] = if l == 0 { &inputs } else { &layers[l - 1].s };
        let mut tr = LayerTrace {
            u: Vec::with_capacity(steps),
            s: Vec::with_capacity(steps),
            margin: Vec::with_capacity(steps),
            h: Vec::with_capacity(steps),
            dtheta_now: Vec::with_capacity(steps),
            dtheta_prev: Vec::with_capacity(steps),
            theta: Vec::with_capacity(steps),
            dtheta_stats: Vec::with_capacity(steps),
            range_coeff: cfg.range_coeff,
        };
        let mut stats_l = Vec::with_capacity(steps);
        let mut u_prev = vec![0.0; n];
        let mut theta_prev = vec![cfg.theta0; n];
        let mut s_prev = vec![0.0; n];
        let mut active = Vec::new();
        for t in 0..steps {
            let ctx = |e: Error| e.at(format_args!("layer {}, t={}", l + 1, t + 1));
            let x = &x_seq[t];
            let mut u = vec![0.0; n];
            if mode == SpikeMode::Hard {
                active.clear();
                active.extend(x.iter().enumerate().filter(|(_, &v)| v != 0.0).map(|(j, _)| j));
                w.mul_active(&active, &mut u);
            } else {
                w.mul_vec(x, &mut u);
            }
            for i in 0..n {
                let carry = if mode == SpikeMode::Hard {
                    if s_prev[i] != 0.0 { 0.0 } else { u_prev[i] * decay }
                } else {
                    u_prev[i] * decay * (1.0 - s_prev[i])
                };
                u[i] += carry + bias[i];
                if !u[i].is_finite() {
                    return Err(ctx(Error::numeric(format!("non-finite potential at neuron {i}"))));
                }
            }
            let (theta, stats) = if cfg.kind == SchemeKind::Static {
                (theta_prev.clone(), None)
            } else {
                let stats = match frozen {
                    Some(f) => f[l][t],
                    None => layer_stats_for(&u_prev, &theta_prev, cfg).map_err(ctx)?,
                };
                let st = stats.unwrap_or_else(LayerStats::fitted);
                let mut theta = vec![0.0; n];
                update_with_stats(&u, &u_prev, &theta_prev, &st, cfg, &mut theta).map_err(ctx)?;
                (theta, stats)
            };
            let mut s = vec![0.0; n];
            let mut h = vec![0.0; n];
            let mut margin = vec![0.0; n];
            let mut dn = vec![0.0; n];
            let mut dp = vec![0.0; n];
            let st = stats.unwrap_or_else(LayerStats::fitted);
            for i in 0..n {
                let m = u[i] - theta[i];
                margin[i] = m;
                s[i] = match mode {
                    SpikeMode::Hard => f64::from(u8::from(u[i] >= theta[i])),
                    SpikeMode::Smooth => smooth_spike(m, alpha),
                };
                h[i] = surrogate_grad(u[i], theta[i], alpha);
                let (a, p) = neuron_threshold_partials(u[i], u_prev[i], &st, cfg).map_err(ctx)?;
                dn[i] = a;
                dp[i] = p;
            }
            let dq = match stats {
                Some(st) => u_prev.iter().map(|&vp| neuron_threshold_stat_partials(vp, &st, cfg)).collect(),
                None => Vec::new(),
            };
            stats_l.push(stats);
            tr.theta.push(theta.clone());
            tr.dtheta_stats.push(dq);
            u_prev.clone_from(&u);
            theta_prev = theta;
            s_prev.clone_from(&s);
            tr.u.push(u);
            tr.s.push(s);
            tr.margin.push(margin);
            tr.h.push(h);
            tr.dtheta_now.push(dn);
            tr.dtheta_prev.push(dp);
        }
        layers.push(tr);
        all_stats.push(stats_l);
    }
    let out = layers.last().expect("at least one layer");
    let mut counts = vec![0.0; model.n_outputs()];
    for s in &out.s {
        for (c, v) in counts.iter_mut().zip(s) {
            *c += v;
        }
    }
    Ok(Trace { inputs, layers, stats: all_stats, counts })
}

fn extremes(v: &[f64]) -> (usize, usize) {
    let mut lo = 0;
    let mut hi = 0;
    for (i, &x) in v.iter().enumerate() {
        if x < v[lo] {
            lo = i;
        }
        if x > v[hi] {
            hi = i;
        }
    }
    (lo, hi)
}

/// Adds `g·∂(mean − k·range)/∂v_i` to `out`.
fn add_shifted_stat_grad(v: &[f64], g: f64, k: f64, out: &mut [f64]) {
    if g == 0.0 {
        return;
    }
    let n = v.len() as f64;
    out.iter_mut().for_each(|o| *o += g / n);
    let (lo, hi) = extremes(v);
    if lo != hi {
        out[hi] -= g * k;
        out[lo] += g * k;
    }
}

/// Weight and bias gradients given `dL/dcount` for every output neuron.
pub(crate) fn backward(model: &NetworkModel, trace: &Trace, dl_dcount: &[f64], decay: f64, through_stats: bool) -> Grads {
    let mut g = Grads::zeros(model);
    let steps = trace.inputs.len();
    // dL/ds_t of the layer being processed, from the layer above (or the loss).
    let mut upstream: Vec<Vec<f64>> = vec![dl_dcount.to_vec(); steps];
    for l in (0..model.n_layers()).rev() {
        let tr = &trace.layers[l];
        let w = &model.weights[l];
        let n = w.rows();
        let x_seq = if l == 0 { &trace.inputs } else { &trace.layers[l - 1].s };
        let mut below = if l > 0 { vec![vec![0.0; w.cols()]; steps] } else { Vec::new() };
        let mut du_next = vec![0.0; n];
        let mut dth_next = vec![0.0; n];
        let mut du = vec![0.0; n];
        let mut dth = vec![0.0; n];
        // dL/d(V_m, V_θ, μ) of the statistics taken at step t+1 from step t values.
        let mut gstat_next = (0.0, 0.0, 0.0);
        let mut via_u = vec![0.0; n];
        let mut via_th = vec![0.0; n];
        for t in (0..steps).rev() {
            let u = &tr.u[t];
            let s = &tr.s[t];
            let h = &tr.h[t];
            let a = &tr.dtheta_now[t];
            via_u.iter_mut().for_each(|x| *x = 0.0);
            via_th.iter_mut().for_each(|x| *x = 0.0);
            if through_stats {
                add_shifted_stat_grad(u, gstat_next.0, tr.range_coeff, &mut via_u);
                add_shifted_stat_grad(&tr.theta[t], gstat_next.1, tr.range_coeff, &mut via_th);
                let gm = gstat_next.2 / n as f64;
                via_th.iter_mut().for_each(|x| *x += gm);
            }
            for i in 0..n {
                let p_next = if t + 1 < steps { tr.dtheta_prev[t + 1][i] } else { 0.0 };
                let ds = upstream[t][i] - du_next[i] * decay * u[i];
                dth[i] = -ds * h[i] + via_th[i];
                du[i] = ds * h[i] + dth[i] * a[i] + dth_next[i] * p_next + du_next[i] * decay * (1.0 - s[i]) + via_u[i];
            }
            gstat_next = (0.0, 0.0, 0.0);
            if through_stats {
                for (q, &d) in tr.dtheta_stats[t].iter().zip(&dth) {
                    gstat_next.0 += d * q.0;
                    gstat_next.1 += d * q.1;
                    gstat_next.2 += d * q.2;
                }
            }
            let gw = &mut g.weights[l];
            let x = &x_seq[t];
            for (i, &d) in du.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                g.biases[l][i] += d;
                let row = &mut gw.as_mut_slice()[i * x.len()..(i + 1) * x.len()];
                for (gij, &xj) in row.iter_mut().zip(x) {
                    *gij += d * xj;
                }
            }
            if l > 0 {
                w.add_transpose_mul(&du, &mut below[t]);
            }
            du_next.clone_from(&du);
            dth_next.clone_from(&dth);
        }
        upstream = below;
    }
    g
}
