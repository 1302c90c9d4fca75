//! Firing-threshold schemes.
//!
//! The dynamic energy-temporal threshold of neuron `i` at step `t+1` is the mean of
//!
//! ```text
//! E_i(t)   = η (v_i(t) − V_m(t)) + V_θ(t) + ln(1 + e^{(v_i(t) − V_m(t)) / ψ})
//! T_i(t+1) = −e^{−|μ(Θ(t))|} + e^{−(v_i(t+1) − v_i(t)) / C}
//! ```
//!
//! where `V_m` and `V_θ` are layer statistics (`mean − 0.2·range`) over the membrane
//! potentials and thresholds of the same layer at step `t`. The energy term rises with
//! the potential, the temporal term falls with the rate of depolarization.
//!
//! Everything here is a pure function of its inputs. Layer statistics always come
//! from step `t` values, never the in-flight `t+1` ones.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_len, Error, Result};

/// Exponent arguments above this are treated as overflow.
pub const EXP_ARG_LIMIT: f64 = 700.0;

/// Resting-potential-shifted constants of the fitted biological threshold model.
pub const FITTED_V_M: f64 = 3.0;
pub const FITTED_V_THETA: f64 = 7.0;
pub const FITTED_DTT_OFFSET: f64 = 1.0;
pub const FITTED_DTT_SCALE: f64 = 10.0;
pub const FITTED_DTT_DECAY: f64 = 3.0;
pub const FITTED_ETA: f64 = 0.01;
pub const FITTED_PSI: f64 = 4.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeKind {
    Static,
    DetOnly,
    DttOnly,
    Bdett,
    #[serde(rename = "fitted")]
    FittedConstants,
}

/// One config type serves every scheme; fields a scheme does not use are ignored.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ThresholdSchemeConfig {
    pub kind: SchemeKind,
    pub eta: f64,
    pub psi: f64,
    #[serde(rename = "c")]
    pub c_decay: f64,
    pub theta0: f64,
    pub range_coeff: f64,
}

impl Default for ThresholdSchemeConfig {
    fn default() -> Self {
        Self { kind: SchemeKind::Bdett, eta: 0.01, psi: 4.0, c_decay: 3.0, theta0: 0.5, range_coeff: 0.2 }
    }
}

impl ThresholdSchemeConfig {
    pub fn bdett() -> Self {
        Self::default()
    }

    pub fn fixed(theta0: f64) -> Self {
        Self { kind: SchemeKind::Static, theta0, ..Self::default() }
    }

    pub fn with_kind(self, kind: SchemeKind) -> Self {
        Self { kind, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.eta, self.psi, self.c_decay, self.theta0, self.range_coeff]
            .iter()
            .all(|x| x.is_finite());
        if !finite {
            return Err(Error::domain("threshold scheme parameters must be finite"));
        }
        if self.psi <= 0.0 {
            return Err(Error::domain(format!("psi must be > 0, got {}", self.psi)));
        }
        if self.c_decay <= 0.0 {
            return Err(Error::domain(format!("c must be > 0, got {}", self.c_decay)));
        }
        if self.range_coeff < 0.0 {
            return Err(Error::domain(format!("range_coeff must be >= 0, got {}", self.range_coeff)));
        }
        Ok(())
    }

    /// Whether thresholds change over time at all.
    pub fn is_dynamic(&self) -> bool {
        self.kind != SchemeKind::Static
    }
}

/// Layer statistics at step `t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LayerStats {
    /// `V_m(t)`
    pub shifted_mean_v: f64,
    /// `V_θ(t)`
    pub shifted_mean_theta: f64,
    /// `μ(Θ(t))`
    pub mean_theta: f64,
}

impl LayerStats {
    pub fn from_layer(potentials: &[f64], thresholds: &[f64], range_coeff: f64) -> Result<Self> {
        ensure_len("layer thresholds", thresholds.len(), potentials.len())?;
        let stats = Self {
            shifted_mean_v: shifted_stat(potentials, range_coeff)?,
            shifted_mean_theta: shifted_stat(thresholds, range_coeff)?,
            mean_theta: mean(thresholds),
        };
        if !(stats.shifted_mean_v.is_finite() && stats.shifted_mean_theta.is_finite() && stats.mean_theta.is_finite()) {
            return Err(Error::numeric("non-finite layer statistics"));
        }
        Ok(stats)
    }

    /// Statistics pinned to the fitted biological constants.
    pub fn fitted() -> Self {
        Self { shifted_mean_v: FITTED_V_M, shifted_mean_theta: FITTED_V_THETA, mean_theta: 0.0 }
    }
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// `mean(values) − range_coeff · (max − min)`.
pub fn shifted_stat(values: &[f64], range_coeff: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::domain("shifted statistic of an empty layer"));
    }
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    Ok(mean(values) - range_coeff * (hi - lo))
}

/// `ln(1 + e^x)` without overflow for large `x`.
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `e^arg` with overflow reported instead of saturating to infinity.
pub fn guarded_exp(arg: f64) -> Result<f64> {
    if arg.is_nan() {
        return Err(Error::numeric("NaN exponent"));
    }
    if arg > EXP_ARG_LIMIT {
        return Err(Error::numeric(format!("exponent {arg:.6e} exceeds the overflow guard")));
    }
    Ok(arg.max(-EXP_ARG_LIMIT).exp())
}

/// Dynamic energy threshold `E_i(t)`.
pub fn det(v_i: f64, stats: &LayerStats, eta: f64, psi: f64) -> f64 {
    let x = v_i - stats.shifted_mean_v;
    eta * x + stats.shifted_mean_theta + softplus(x / psi)
}

/// `∂E/∂v_i` with the statistics held fixed.
pub fn det_slope(v_i: f64, stats: &LayerStats, eta: f64, psi: f64) -> f64 {
    eta + sigmoid((v_i - stats.shifted_mean_v) / psi) / psi
}

/// Dynamic temporal threshold `T_i(t+1)`.
pub fn dtt(v_now: f64, v_prev: f64, mean_theta_prev: f64, c_decay: f64) -> Result<f64> {
    let a = -(-mean_theta_prev.abs()).exp();
    let decay = guarded_exp(-(v_now - v_prev) / c_decay)
        .map_err(|e| e.at(format_args!("temporal threshold (Δv = {:.6e})", v_now - v_prev)))?;
    Ok(a + decay)
}

/// `∂T/∂(Δv)`.
pub fn dtt_slope(v_now: f64, v_prev: f64, c_decay: f64) -> Result<f64> {
    Ok(-guarded_exp(-(v_now - v_prev) / c_decay)? / c_decay)
}

fn fitted_det(v_prev: f64) -> f64 {
    det(v_prev, &LayerStats::fitted(), FITTED_ETA, FITTED_PSI)
}

fn fitted_dtt(v_now: f64, v_prev: f64) -> Result<f64> {
    Ok(FITTED_DTT_OFFSET + FITTED_DTT_SCALE * guarded_exp(-(v_now - v_prev) / FITTED_DTT_DECAY)?)
}

/// Threshold of one neuron at `t+1` given frozen layer statistics from `t`.
///
/// `Static` returns `theta_prev`.
pub fn neuron_threshold(
    v_now: f64,
    v_prev: f64,
    theta_prev: f64,
    stats: &LayerStats,
    cfg: &ThresholdSchemeConfig,
) -> Result<f64> {
    let theta = match cfg.kind {
        SchemeKind::Static => theta_prev,
        SchemeKind::DetOnly => det(v_prev, stats, cfg.eta, cfg.psi),
        SchemeKind::DttOnly => dtt(v_now, v_prev, stats.mean_theta, cfg.c_decay)?,
        SchemeKind::Bdett => {
            0.5 * (det(v_prev, stats, cfg.eta, cfg.psi) + dtt(v_now, v_prev, stats.mean_theta, cfg.c_decay)?)
        }
        SchemeKind::FittedConstants => 0.5 * (fitted_det(v_prev) + fitted_dtt(v_now, v_prev)?),
    };
    if theta.is_finite() {
        Ok(theta)
    } else {
        Err(Error::numeric(format!("non-finite threshold from v_now={v_now}, v_prev={v_prev}")))
    }
}

/// `(∂Θ/∂v_now, ∂Θ/∂v_prev)` for one neuron with the layer statistics held fixed.
pub fn neuron_threshold_partials(
    v_now: f64,
    v_prev: f64,
    stats: &LayerStats,
    cfg: &ThresholdSchemeConfig,
) -> Result<(f64, f64)> {
    Ok(match cfg.kind {
        SchemeKind::Static => (0.0, 0.0),
        SchemeKind::DetOnly => (0.0, det_slope(v_prev, stats, cfg.eta, cfg.psi)),
        SchemeKind::DttOnly => {
            let s = dtt_slope(v_now, v_prev, cfg.c_decay)?;
            (s, -s)
        }
        SchemeKind::Bdett => {
            let s = dtt_slope(v_now, v_prev, cfg.c_decay)?;
            (0.5 * s, 0.5 * (det_slope(v_prev, stats, cfg.eta, cfg.psi) - s))
        }
        SchemeKind::FittedConstants => {
            let s = FITTED_DTT_SCALE * dtt_slope(v_now, v_prev, FITTED_DTT_DECAY)?;
            (0.5 * s, 0.5 * (det_slope(v_prev, &LayerStats::fitted(), FITTED_ETA, FITTED_PSI) - s))
        }
    })
}

/// `(∂Θ/∂V_m, ∂Θ/∂V_θ, ∂Θ/∂μ(Θ))` for one neuron. Zero for schemes without layer statistics.
pub fn neuron_threshold_stat_partials(v_prev: f64, stats: &LayerStats, cfg: &ThresholdSchemeConfig) -> (f64, f64, f64) {
    let mu = stats.mean_theta;
    let dmu = if mu == 0.0 { 0.0 } else { mu.signum() * (-mu.abs()).exp() };
    match cfg.kind {
        SchemeKind::Static | SchemeKind::FittedConstants => (0.0, 0.0, 0.0),
        SchemeKind::DetOnly => (-det_slope(v_prev, stats, cfg.eta, cfg.psi), 1.0, 0.0),
        SchemeKind::DttOnly => (0.0, 0.0, dmu),
        SchemeKind::Bdett => (-0.5 * det_slope(v_prev, stats, cfg.eta, cfg.psi), 0.5, 0.5 * dmu),
    }
}

/// Statistics the scheme needs at step `t`, or `None` if it needs none.
pub fn layer_stats_for(
    v_prev: &[f64],
    theta_prev: &[f64],
    cfg: &ThresholdSchemeConfig,
) -> Result<Option<LayerStats>> {
    match cfg.kind {
        SchemeKind::Static | SchemeKind::FittedConstants => Ok(None),
        _ => LayerStats::from_layer(v_prev, theta_prev, cfg.range_coeff).map(Some),
    }
}

/// Thresholds at `t+1` with statistics supplied by the caller.
pub fn update_with_stats(
    v_now: &[f64],
    v_prev: &[f64],
    theta_prev: &[f64],
    stats: &LayerStats,
    cfg: &ThresholdSchemeConfig,
    out: &mut [f64],
) -> Result<()> {
    ensure_len("v_prev", v_prev.len(), v_now.len())?;
    ensure_len("theta_prev", theta_prev.len(), v_now.len())?;
    ensure_len("threshold output", out.len(), v_now.len())?;
    for i in 0..v_now.len() {
        out[i] = neuron_threshold(v_now[i], v_prev[i], theta_prev[i], stats, cfg)
            .map_err(|e| e.at(format_args!("neuron {i}")))?;
    }
    Ok(())
}

/// Layer thresholds at `t+1` under `cfg`.
///
/// Statistics are taken over `(v_prev, theta_prev)`, i.e. step `t`.
pub fn bdett_update(
    v_now: &[f64],
    v_prev: &[f64],
    theta_prev: &[f64],
    cfg: &ThresholdSchemeConfig,
) -> Result<Vec<f64>> {
    ensure_len("v_prev", v_prev.len(), v_now.len())?;
    ensure_len("theta_prev", theta_prev.len(), v_now.len())?;
    if v_now.is_empty() {
        return Err(Error::domain("threshold update of an empty layer"));
    }
    if cfg.kind == SchemeKind::Static {
        return Ok(theta_prev.to_vec());
    }
    let stats = layer_stats_for(v_prev, theta_prev, cfg)?.unwrap_or_else(LayerStats::fitted);
    let mut out = vec![0.0; v_now.len()];
    update_with_stats(v_now, v_prev, theta_prev, &stats, cfg, &mut out)?;
    Ok(out)
}

/// The ablation that swaps the layer statistics for the fitted constants (3, 7) and the
/// temporal term for `1 + 10·e^{−Δv/3}`.
pub fn fitted_constants_update(v_now: &[f64], v_prev: &[f64]) -> Result<Vec<f64>> {
    ensure_len("v_prev", v_prev.len(), v_now.len())?;
    let cfg = ThresholdSchemeConfig::default().with_kind(SchemeKind::FittedConstants);
    let stats = LayerStats::fitted();
    v_now
        .iter()
        .zip(v_prev)
        .map(|(&now, &prev)| neuron_threshold(now, prev, 0.0, &stats, &cfg))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs().max(1e-300)
    }

    #[test]
    fn shifted_stat_examples() {
        assert!(close(shifted_stat(&[1.0, 0.0], 0.2).unwrap(), 0.3, 1e-15));
        assert_eq!(shifted_stat(&[0.7; 5], 0.9).unwrap(), 0.7);
        assert_eq!(shifted_stat(&[-3.25], 0.2).unwrap(), -3.25);
        assert!(matches!(shifted_stat(&[], 0.2), Err(Error::Domain(_))));
    }

    #[test]
    fn det_reference_values() {
        let stats = LayerStats::from_layer(&[1.0, 0.0], &[0.5, 0.5], 0.2).unwrap();
        assert!(close(stats.shifted_mean_v, 0.3, 1e-15));
        assert_eq!(stats.shifted_mean_theta, 0.5);
        assert!(close(det(1.0, &stats, 0.01, 4.0), 1.291_470_430_663_046_8, 1e-12));
        assert!(close(det(0.0, &stats, 0.01, 4.0), 1.153_350_140_826_795_2, 1e-12));
    }

    #[test]
    fn det_uniform_layer_is_theta_plus_ln2() {
        let stats = LayerStats::from_layer(&[0.8; 4], &[0.3; 4], 0.2).unwrap();
        assert!(close(det(0.8, &stats, 0.01, 4.0), 0.3 + std::f64::consts::LN_2, 1e-14));
    }

    #[test]
    fn dtt_reference_values() {
        assert_eq!(dtt(0.4, 0.4, 0.0, 3.0).unwrap(), 0.0);
        assert!(close(dtt(1.0, 0.5, 0.5, 3.0).unwrap(), 0.239_951_065_177_980_65, 1e-12));
        assert!(close(dtt(0.0, 0.5, 0.5, 3.0).unwrap(), 0.574_829_753_153_012_56, 1e-12));
    }

    #[test]
    fn dtt_overflow_is_an_error() {
        let err = dtt(-3000.0, 0.0, 0.5, 3.0).unwrap_err();
        assert!(matches!(err, Error::Numeric(_)), "{err}");
        // deep depolarization underflows harmlessly to the `a` offset
        let t = dtt(3000.0, 0.0, 0.0, 3.0).unwrap();
        assert_eq!(t, -1.0);
    }

    #[test]
    fn bdett_update_examples() {
        let cfg = ThresholdSchemeConfig::bdett();
        let th = bdett_update(&[1.5, 0.0], &[1.0, 0.0], &[0.5, 0.5], &cfg).unwrap();
        assert!(close(th[0], 0.765_710_747_920_513_74, 1e-12));
        assert!(close(th[1], 0.773_409_740_557_080_87, 1e-12));

        let th = bdett_update(&[0.0], &[0.0], &[1.0], &cfg).unwrap();
        assert!(close(th[0], 1.162_633_869_694_251_5, 1e-12));
    }

    #[test]
    fn static_and_single_term_schemes() {
        let prev = [0.3, -0.2, 1.1];
        let stat = bdett_update(&[9.0, 9.0, 9.0], &[0.0; 3], &prev, &ThresholdSchemeConfig::fixed(0.5)).unwrap();
        assert_eq!(stat, prev);

        let cfg = ThresholdSchemeConfig::bdett();
        let v_prev = [1.0, 0.0];
        let v_now = [1.5, 0.0];
        let theta = [0.5, 0.5];
        let stats = LayerStats::from_layer(&v_prev, &theta, 0.2).unwrap();
        let d = bdett_update(&v_now, &v_prev, &theta, &cfg.with_kind(SchemeKind::DetOnly)).unwrap();
        assert_eq!(d[0], det(1.0, &stats, 0.01, 4.0));
        let t = bdett_update(&v_now, &v_prev, &theta, &cfg.with_kind(SchemeKind::DttOnly)).unwrap();
        assert_eq!(t[1], dtt(0.0, 0.0, 0.5, 3.0).unwrap());
    }

    #[test]
    fn fitted_constants_examples() {
        let th = fitted_constants_update(&[3.0], &[3.0]).unwrap();
        assert!(close(th[0], 9.346_573_590_279_972_7, 1e-12));
        assert!(close(fitted_dtt(6.0, 3.0).unwrap(), 4.678_794_411_714_423_2, 1e-12));
        assert!((fitted_dtt(600.0, 0.0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn shape_errors() {
        let cfg = ThresholdSchemeConfig::bdett();
        assert!(matches!(bdett_update(&[0.0; 2], &[0.0; 3], &[0.5; 2], &cfg), Err(Error::Shape(_))));
        assert!(matches!(bdett_update(&[], &[], &[], &cfg), Err(Error::Domain(_))));
    }

    #[test]
    fn softplus_is_safe_at_extremes() {
        assert_eq!(softplus(1e6), 1e6);
        assert_eq!(softplus(-1e6), 0.0);
        assert!((softplus(0.0) - std::f64::consts::LN_2).abs() < 1e-16);
    }

    #[test]
    fn config_json_shape() {
        let cfg: ThresholdSchemeConfig = serde_json::from_str(r#"{"kind":"fitted","c":2.0}"#).unwrap();
        assert_eq!(cfg.kind, SchemeKind::FittedConstants);
        assert_eq!(cfg.c_decay, 2.0);
        assert_eq!(cfg.eta, 0.01);
        let s = serde_json::to_value(ThresholdSchemeConfig::bdett()).unwrap();
        assert_eq!(s["kind"], "bdett");
        assert_eq!(s["c"], 3.0);
        assert_eq!(s["theta0"], 0.5);
        assert_eq!(s["range_coeff"], 0.2);
        let bad = ThresholdSchemeConfig { psi: 0.0, ..Default::default() };
        assert!(bad.validate().is_err());
    }
}
