//! Input and weight degradations.
//!
//! Input operators act on the raw 24-dim robot state and only ever touch its LIDAR
//! block. Weight operators act per adjacent-layer matrix; biases are left alone.
//! `N(0, σ)` is parameterized by standard deviation.

use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_len, Error, Result};
use crate::matrix::Matrix;
use crate::rng::{self, Purpose};
use crate::sim2d::{LIDAR_MAX, LIDAR_MIN, LIDAR_OFFSET, N_RAYS, STATE_DIM};
use crate::snn::NetworkModel;

/// Lasers overridden by the fixed-range conditions, 1-based within the LIDAR block.
pub const DEFAULT_FIXED_LASERS: [usize; 3] = [3, 9, 15];

fn default_indices() -> Vec<usize> {
    DEFAULT_FIXED_LASERS.to_vec()
}

fn default_clip_lo() -> f64 {
    LIDAR_MIN
}

fn default_clip_hi() -> f64 {
    LIDAR_MAX
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Degradation {
    FixedLasers {
        #[serde(default = "default_indices")]
        indices: Vec<usize>,
        value: f64,
    },
    GaussInput {
        sigma: f64,
        #[serde(default = "default_clip_lo")]
        clip_lo: f64,
        #[serde(default = "default_clip_hi")]
        clip_hi: f64,
    },
    #[serde(rename = "quantize8")]
    Quantize8Bit,
    GaussWeights {
        sigma: f64,
    },
    ZeroMask {
        fraction: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegradationSpec {
    #[serde(flatten)]
    pub kind: Degradation,
    #[serde(default)]
    pub seed: u64,
    /// Condition name in reports; derived from the kind when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl DegradationSpec {
    pub fn new(kind: Degradation, seed: u64) -> Self {
        Self { kind, seed, label: None }
    }

    pub fn label(&self) -> String {
        if let Some(l) = &self.label {
            return l.clone();
        }
        match &self.kind {
            Degradation::FixedLasers { value, .. } => format!("fixed_lasers_{value:?}"),
            Degradation::GaussInput { .. } => "gauss_input".into(),
            Degradation::Quantize8Bit => "quantize8".into(),
            Degradation::GaussWeights { .. } => "gauss_weights".into(),
            Degradation::ZeroMask { .. } => "zero_mask".into(),
        }
    }

    pub fn acts_on_input(&self) -> bool {
        matches!(self.kind, Degradation::FixedLasers { .. } | Degradation::GaussInput { .. })
    }

    pub fn validate(&self) -> Result<()> {
        match &self.kind {
            Degradation::FixedLasers { indices, value } => {
                if let Some(i) = indices.iter().find(|&&i| i == 0 || i > N_RAYS) {
                    return Err(Error::domain(format!("laser index {i} outside 1..={N_RAYS}")));
                }
                if !value.is_finite() {
                    return Err(Error::domain("fixed laser range must be finite"));
                }
            }
            Degradation::GaussInput { sigma, clip_lo, clip_hi } => {
                check_sigma(*sigma)?;
                if !(clip_lo < clip_hi) {
                    return Err(Error::domain(format!("clip range ({clip_lo}, {clip_hi}) is empty")));
                }
            }
            Degradation::Quantize8Bit => {}
            Degradation::GaussWeights { sigma } => check_sigma(*sigma)?,
            Degradation::ZeroMask { fraction } => check_fraction(*fraction)?,
        }
        Ok(())
    }

    /// Degrades one raw observation. Weight kinds pass the state through unchanged.
    pub fn apply_input<R: Rng + ?Sized>(&self, state: &[f64], rng: &mut R) -> Result<Vec<f64>> {
        match &self.kind {
            Degradation::FixedLasers { indices, value } => fix_laser_ranges(state, indices, *value),
            Degradation::GaussInput { sigma, clip_lo, clip_hi } => gauss_input(state, *sigma, *clip_lo, *clip_hi, rng),
            _ => Ok(state.to_vec()),
        }
    }

    /// Degraded copy of `model`. Input kinds return it unchanged. Matrix `l` draws from
    /// its own stream of `seed`, so the result does not depend on how the model was
    /// loaded or stored.
    pub fn apply_to_model(&self, model: &NetworkModel) -> Result<NetworkModel> {
        self.validate()?;
        let mut out = model.clone();
        for (l, w) in out.weights.iter_mut().enumerate() {
            let mut r = rng::stream(self.seed, Purpose::WeightNoise, l as u64);
            *w = match &self.kind {
                Degradation::Quantize8Bit => quantize_8bit(w).dequantize(),
                Degradation::GaussWeights { sigma } => gauss_weights(w, *sigma, &mut r)?,
                Degradation::ZeroMask { fraction } => zero_mask(w, *fraction, &mut r)?,
                _ => return Ok(out),
            };
        }
        Ok(out)
    }
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma >= 0.0 && sigma.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("sigma must be >= 0, got {sigma}")))
    }
}

fn check_fraction(fraction: f64) -> Result<()> {
    if (0.0..=1.0).contains(&fraction) {
        Ok(())
    } else {
        Err(Error::domain(format!("fraction must be in [0, 1], got {fraction}")))
    }
}

/// Overrides the listed lasers (1-based within the LIDAR block) with `value_m`.
pub fn fix_laser_ranges(state: &[f64], indices: &[usize], value_m: f64) -> Result<Vec<f64>> {
    ensure_len("robot state", state.len(), STATE_DIM)?;
    let mut out = state.to_vec();
    for &i in indices {
        if i == 0 || i > N_RAYS {
            return Err(Error::domain(format!("laser index {i} outside 1..={N_RAYS}")));
        }
        out[LIDAR_OFFSET + i - 1] = value_m;
    }
    Ok(out)
}

/// `clip(x + N(0, σ), clip_lo, clip_hi)` on every LIDAR range.
pub fn gauss_input<R: Rng + ?Sized>(state: &[f64], sigma: f64, clip_lo: f64, clip_hi: f64, rng: &mut R) -> Result<Vec<f64>> {
    ensure_len("robot state", state.len(), STATE_DIM)?;
    check_sigma(sigma)?;
    if !(clip_lo < clip_hi) {
        return Err(Error::domain(format!("clip range ({clip_lo}, {clip_hi}) is empty")));
    }
    let noise = Normal::new(0.0, sigma).map_err(|e| Error::domain(e.to_string()))?;
    let mut out = state.to_vec();
    for x in &mut out[LIDAR_OFFSET..LIDAR_OFFSET + N_RAYS] {
        *x = (*x + noise.sample(rng)).max(clip_lo).min(clip_hi);
    }
    Ok(out)
}

/// Symmetric 8-bit weights with one scale per matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantizedMatrix {
    pub rows: usize,
    pub cols: usize,
    pub q: Vec<i8>,
    pub scale: f64,
}

impl QuantizedMatrix {
    pub fn dequantize(&self) -> Matrix {
        let data = self.q.iter().map(|&q| f64::from(q) * self.scale).collect();
        Matrix::from_vec(self.rows, self.cols, data).expect("shape preserved by quantization")
    }
}

/// `scale = max|w|/127`, `q = round(w/scale)` with ties away from zero.
///
/// An all-zero matrix quantizes to zeros with scale 1.
pub fn quantize_8bit(weights: &Matrix) -> QuantizedMatrix {
    let max_abs = weights.max_abs();
    let scale = if max_abs > 0.0 { max_abs / 127.0 } else { 1.0 };
    let q = weights
        .as_slice()
        .iter()
        // f64::round rounds half away from zero
        .map(|&w| (w / scale).round().clamp(-127.0, 127.0) as i8)
        .collect();
    QuantizedMatrix { rows: weights.rows(), cols: weights.cols(), q, scale }
}

/// `w + N(0, σ)` i.i.d. per weight.
pub fn gauss_weights<R: Rng + ?Sized>(weights: &Matrix, sigma: f64, rng: &mut R) -> Result<Matrix> {
    check_sigma(sigma)?;
    let noise = Normal::new(0.0, sigma).map_err(|e| Error::domain(e.to_string()))?;
    let mut out = weights.clone();
    for w in out.as_mut_slice() {
        *w += noise.sample(rng);
    }
    Ok(out)
}

/// Zeroes exactly `round(fraction·n)` entries chosen uniformly without replacement.
pub fn zero_mask<R: Rng + ?Sized>(weights: &Matrix, fraction: f64, rng: &mut R) -> Result<Matrix> {
    check_fraction(fraction)?;
    let n = weights.len();
    let k = ((fraction * n as f64).round() as usize).min(n);
    let mut out = weights.clone();
    let data = out.as_mut_slice();
    for i in index::sample(rng, n, k) {
        data[i] = 0.0;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::snn::NeuronModel;
    use crate::thresholds::ThresholdSchemeConfig;

    fn lidar_state(ranges: &[f64]) -> Vec<f64> {
        let mut s = vec![1.0, 0.1, 0.0, 0.3, 0.0, 0.2];
        s.extend_from_slice(ranges);
        s
    }

    #[test]
    fn fixed_lasers_examples() {
        let s = lidar_state(&[6.0; 18]);
        let out = fix_laser_ranges(&s, &DEFAULT_FIXED_LASERS, 0.2).unwrap();
        assert_eq!(out[LIDAR_OFFSET..].iter().filter(|&&x| x == 0.2).count(), 3);
        assert_eq!(fix_laser_ranges(&s, &DEFAULT_FIXED_LASERS, 6.0).unwrap(), s);

        let ranges: Vec<f64> = (0..18).map(|k| 0.5 + 0.3 * k as f64).collect();
        let s = lidar_state(&ranges);
        let out = fix_laser_ranges(&s, &DEFAULT_FIXED_LASERS, 0.2).unwrap();
        for (i, (a, b)) in s.iter().zip(&out).enumerate() {
            let hit = [LIDAR_OFFSET + 2, LIDAR_OFFSET + 8, LIDAR_OFFSET + 14].contains(&i);
            if hit {
                assert_eq!(*b, 0.2);
            } else {
                assert_eq!(a, b);
            }
        }
        assert!(matches!(fix_laser_ranges(&s, &[19], 0.2), Err(Error::Domain(_))));
        assert!(matches!(fix_laser_ranges(&s, &[0], 0.2), Err(Error::Domain(_))));
    }

    #[test]
    fn gauss_input_examples() {
        let s = lidar_state(&[3.0; 18]);
        let mut r = rng::from_seed(3);
        assert_eq!(gauss_input(&s, 0.0, 0.2, 6.0, &mut r).unwrap(), s);
        let s = lidar_state(&[6.0; 18]);
        let out = gauss_input(&s, 50.0, 0.2, 6.0, &mut r).unwrap();
        assert!(out[LIDAR_OFFSET..].iter().all(|&x| (0.2..=6.0).contains(&x)));
        assert_eq!(&out[..LIDAR_OFFSET], &s[..LIDAR_OFFSET]);
    }

    #[test]
    fn quantize_example() {
        let w = Matrix::from_rows(&[vec![0.5, -1.0, 0.25]]).unwrap();
        let q = quantize_8bit(&w);
        assert_eq!(q.scale, 1.0 / 127.0);
        assert_eq!(q.q, vec![64, -127, 32]);
        let d = q.dequantize();
        let want = [0.503_937_007_874_015_7, -1.0, 0.251_968_503_937_007_9];
        for (a, b) in d.as_slice().iter().zip(want) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn quantize_grid_points_round_trip() {
        let scale = 0.8 / 127.0;
        let w = Matrix::from_vec(1, 4, vec![127.0 * scale, -3.0 * scale, 0.0, 50.0 * scale]).unwrap();
        let q = quantize_8bit(&w);
        assert_eq!(q.q, vec![127, -3, 0, 50]);
        for (a, b) in q.dequantize().as_slice().iter().zip(w.as_slice()) {
            assert!((a - b).abs() <= 1e-15);
        }
        let z = quantize_8bit(&Matrix::zeros(2, 2));
        assert_eq!(z.scale, 1.0);
        assert!(z.q.iter().all(|&q| q == 0));
    }

    #[test]
    fn zero_mask_counts() {
        let w = Matrix::from_vec(10, 10, (1..=100).map(f64::from).collect()).unwrap();
        let mut r = rng::from_seed(11);
        assert_eq!(zero_mask(&w, 0.0, &mut r).unwrap(), w);
        assert!(zero_mask(&w, 1.0, &mut r).unwrap().as_slice().iter().all(|&x| x == 0.0));
        let m = zero_mask(&w, 0.3, &mut r).unwrap();
        let zeros = m.as_slice().iter().filter(|&&x| x == 0.0).count();
        assert_eq!(zeros, 30);
        for (a, b) in w.as_slice().iter().zip(m.as_slice()) {
            assert!(*b == 0.0 || a.to_bits() == b.to_bits());
        }
        assert!(zero_mask(&w, 1.5, &mut r).is_err());
    }

    #[test]
    fn gauss_weights_zero_sigma_is_identity() {
        let w = Matrix::from_rows(&[vec![0.1, -0.2]]).unwrap();
        assert_eq!(gauss_weights(&w, 0.0, &mut rng::from_seed(1)).unwrap(), w);
        assert!(gauss_weights(&w, -1.0, &mut rng::from_seed(1)).is_err());
    }

    #[test]
    fn spec_json_and_labels() {
        let s: DegradationSpec = serde_json::from_str(r#"{"kind":"fixed_lasers","value":0.2,"seed":5}"#).unwrap();
        assert_eq!(s.kind, Degradation::FixedLasers { indices: vec![3, 9, 15], value: 0.2 });
        assert_eq!(s.label(), "fixed_lasers_0.2");
        assert!(s.acts_on_input());
        let q: DegradationSpec = serde_json::from_str(r#"{"kind":"quantize8"}"#).unwrap();
        assert_eq!(q.label(), "quantize8");
        assert!(!q.acts_on_input());
        let z: DegradationSpec = serde_json::from_str(r#"{"kind":"zero_mask","fraction":0.3,"seed":1,"label":"30%"}"#).unwrap();
        assert_eq!(z.label(), "30%");
        let g: DegradationSpec = serde_json::from_str(r#"{"kind":"gauss_input","sigma":1.0}"#).unwrap();
        assert_eq!(g.kind, Degradation::GaussInput { sigma: 1.0, clip_lo: 0.2, clip_hi: 6.0 });
    }

    #[test]
    fn model_degradation_is_per_matrix_and_seeded() {
        let mut m = NetworkModel::zeros(&[3, 4, 2], NeuronModel::lif(), ThresholdSchemeConfig::bdett(), 5);
        crate::snn::init_weights(&mut m, 1.0, &mut rng::from_seed(0));
        let spec = DegradationSpec::new(Degradation::GaussWeights { sigma: 0.05 }, 77);
        let a = spec.apply_to_model(&m).unwrap();
        assert_eq!(a, spec.apply_to_model(&m).unwrap());
        assert_ne!(a.weights, m.weights);
        assert_eq!(a.biases, m.biases);
        let input_only = DegradationSpec::new(Degradation::GaussInput { sigma: 1.0, clip_lo: 0.2, clip_hi: 6.0 }, 1);
        assert_eq!(input_only.apply_to_model(&m).unwrap(), m);
    }
}
