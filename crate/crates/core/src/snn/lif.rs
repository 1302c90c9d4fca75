use super::LayerState;
use crate::error::{ensure_len, Error, Result};
use crate::matrix::Matrix;

/// LIF membrane update for one layer:
/// `v_i(t+1) = Σ_j w_ij s_j(t+1) + v_i(t)·f_d(s_i(t)) + b_i`, with `f_d = D` when the
/// neuron was silent at `t` and `0` after a spike (hard reset).
///
/// Reads `state.potentials_now` as `v(t)` and does not mutate the state.
pub fn lif_step(
    state: &LayerState,
    input_spikes: &[bool],
    weights: &Matrix,
    biases: &[f64],
    decay: f64,
) -> Result<Vec<f64>> {
    ensure_len("input spikes", input_spikes.len(), weights.cols())?;
    ensure_len("layer state", state.len(), weights.rows())?;
    ensure_len("biases", biases.len(), weights.rows())?;
    let active: Vec<usize> = input_spikes.iter().enumerate().filter(|(_, &s)| s).map(|(j, _)| j).collect();
    let mut v = vec![0.0; weights.rows()];
    weights.mul_active(&active, &mut v);
    for (i, vi) in v.iter_mut().enumerate() {
        let carry = if state.last_spikes[i] { 0.0 } else { state.potentials_now[i] * decay };
        *vi += carry + biases[i];
        if !vi.is_finite() {
            return Err(Error::numeric(format!("non-finite potential at neuron {i}")));
        }
    }
    Ok(v)
}
