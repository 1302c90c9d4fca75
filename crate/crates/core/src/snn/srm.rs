use super::LayerState;
use crate::error::{ensure_len, Error, Result};
use crate::matrix::Matrix;

/// Past this many steps the convolutions drop kernel terms below [`SRM_KERNEL_CUTOFF`].
pub const LONG_EPISODE_STEPS: usize = 256;
pub const SRM_KERNEL_CUTOFF: f64 = 1e-6;

/// Spike response kernel `ε(t) = (t/τ_s)·e^{1 − t/τ_s}`.
pub fn srm_epsilon(t: usize, tau_s: f64) -> f64 {
    let x = t as f64 / tau_s;
    x * (1.0 - x).exp()
}

/// Refractory kernel `ζ(t) = −2·Θ·e^{−t/τ_r}`, scaled by the threshold the neuron crossed.
pub fn srm_zeta(t: usize, theta_at_spike: f64, tau_r: f64) -> f64 {
    -2.0 * theta_at_spike * (-(t as f64) / tau_r).exp()
}

/// SRM potentials at step `t`:
///
/// ```text
/// v_i(t) = Σ_j w_ij Σ_{t_f ∈ hist_j, t_f ≤ t} ε(t − t_f)
///        + Σ_{t_f ∈ own_i, t_f ≤ t−1} ζ((t−1) − t_f, Θ at t_f)
/// ```
///
/// Input histories must be sorted ascending. Own histories come from `state`.
pub fn srm_step(
    state: &LayerState,
    input_histories: &[Vec<usize>],
    weights: &Matrix,
    t: usize,
    tau_s: f64,
    tau_r: f64,
) -> Result<Vec<f64>> {
    if t == 0 {
        return Err(Error::domain("SRM step index starts at 1"));
    }
    ensure_len("input histories", input_histories.len(), weights.cols())?;
    ensure_len("layer state", state.len(), weights.rows())?;
    let cutoff = t > LONG_EPISODE_STEPS;

    let psp: Vec<f64> = input_histories
        .iter()
        .map(|hist| {
            let mut acc = 0.0;
            for &tf in hist.iter().rev() {
                if tf > t {
                    continue;
                }
                let lag = t - tf;
                let k = srm_epsilon(lag, tau_s);
                // ε is decreasing past its peak at τ_s, so older spikes only get smaller
                if cutoff && lag as f64 > tau_s && k < SRM_KERNEL_CUTOFF {
                    break;
                }
                acc += k;
            }
            acc
        })
        .collect();

    let mut v = vec![0.0; weights.rows()];
    weights.mul_vec(&psp, &mut v);
    for (i, vi) in v.iter_mut().enumerate() {
        for rec in state.spike_history[i].iter().rev() {
            if rec.t > t - 1 {
                continue;
            }
            let z = srm_zeta(t - 1 - rec.t, rec.theta, tau_r);
            if cutoff && z.abs() < SRM_KERNEL_CUTOFF {
                continue;
            }
            *vi += z;
        }
        if !vi.is_finite() {
            return Err(Error::numeric(format!("non-finite SRM potential at neuron {i}")));
        }
    }
    Ok(v)
}
