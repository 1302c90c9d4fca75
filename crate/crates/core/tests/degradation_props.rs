use bdett::degradation::{fix_laser_ranges, gauss_input, quantize_8bit, zero_mask, Degradation, DegradationSpec};
use bdett::encoding::{encode_state, rate_decode, StateNormalizer};
use bdett::homeostasis::{homeostasis_metrics, TrialRecording};
use bdett::matrix::Matrix;
use bdett::rng::{self, Purpose};
use bdett::sim2d::{LIDAR_OFFSET, N_RAYS, STATE_DIM};
use bdett::snn::{init_weights, NetworkModel, NeuronModel};
use bdett::thresholds::ThresholdSchemeConfig;
use bdett::verify::oracles;
use proptest::prelude::*;

fn matrix() -> impl Strategy<Value = Matrix> {
    (1usize..12, 1usize..12, 0.01..10.0f64).prop_flat_map(|(r, c, spread)| {
        prop::collection::vec(-spread..spread, r * c).prop_map(move |d| Matrix::from_vec(r, c, d).unwrap())
    })
}

fn recordings() -> impl Strategy<Value = Vec<TrialRecording>> {
    (1usize..10, 1usize..8).prop_flat_map(|(n, p)| {
        prop::collection::vec((prop::collection::vec(0u64..50, n), 50u64..200), p).prop_map(|trials| {
            trials
                .into_iter()
                .enumerate()
                .map(|(i, (counts, timesteps))| TrialRecording { trial_id: i as u64, condition: "c".into(), counts, timesteps })
                .collect()
        })
    })
}

fn degradation() -> impl Strategy<Value = DegradationSpec> {
    let kind = prop_oneof![
        Just(Degradation::Quantize8Bit),
        (0.0..0.5f64).prop_map(|sigma| Degradation::GaussWeights { sigma }),
        (0.0..1.0f64).prop_map(|fraction| Degradation::ZeroMask { fraction }),
    ];
    (kind, any::<u64>()).prop_map(|(k, seed)| DegradationSpec::new(k, seed))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn quantization_error_is_half_a_step(w in matrix()) {
        let q = quantize_8bit(&w);
        let back = q.dequantize();
        for (a, b) in w.as_slice().iter().zip(back.as_slice()) {
            prop_assert!((a - b).abs() <= q.scale / 2.0 * (1.0 + 1e-12));
        }
        prop_assert!(q.q.iter().all(|&x| x >= -127));
    }

    #[test]
    fn zero_mask_zeroes_exactly_the_rounded_count(w in matrix(), fraction in 0.0..=1.0f64, seed in any::<u64>()) {
        let w = Matrix::from_vec(w.rows(), w.cols(), w.as_slice().iter().map(|x| x + 20.0).collect()).unwrap();
        let out = zero_mask(&w, fraction, &mut rng::from_seed(seed)).unwrap();
        let zeros = out.as_slice().iter().filter(|&&x| x == 0.0).count();
        prop_assert_eq!(zeros, (fraction * w.len() as f64).round() as usize);
        for (a, b) in w.as_slice().iter().zip(out.as_slice()) {
            prop_assert!(*b == 0.0 || a == b);
        }
    }

    #[test]
    fn gauss_input_clips_lidar_and_leaves_the_rest(state in prop::collection::vec(0.0..10.0f64, STATE_DIM), sigma in 0.0..5.0f64, seed in any::<u64>()) {
        let out = gauss_input(&state, sigma, 0.2, 6.0, &mut rng::from_seed(seed)).unwrap();
        let lidar = LIDAR_OFFSET..LIDAR_OFFSET + N_RAYS;
        for (k, (a, b)) in state.iter().zip(&out).enumerate() {
            if lidar.contains(&k) {
                prop_assert!((0.2..=6.0).contains(b));
            } else {
                prop_assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn fixed_lasers_touch_only_listed_entries(state in prop::collection::vec(0.0..6.0f64, STATE_DIM), pick in prop::collection::btree_set(1usize..=N_RAYS, 0..N_RAYS)) {
        let idx: Vec<usize> = pick.into_iter().collect();
        let out = fix_laser_ranges(&state, &idx, 0.2).unwrap();
        for (k, (a, b)) in state.iter().zip(&out).enumerate() {
            if k >= LIDAR_OFFSET && idx.contains(&(k + 1 - LIDAR_OFFSET)) {
                prop_assert_eq!(*b, 0.2);
            } else {
                prop_assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn model_degradation_is_seeded_and_survives_serialization(spec in degradation(), init in any::<u64>()) {
        let mut m = NetworkModel::zeros(&[6, 8, 3], NeuronModel::lif(), ThresholdSchemeConfig::bdett(), 5);
        init_weights(&mut m, 1.0, &mut rng::stream(init, Purpose::Init, 0));
        let a = spec.apply_to_model(&m).unwrap();
        let b = spec.apply_to_model(&m).unwrap();
        prop_assert_eq!(&a, &b);
        let round: NetworkModel = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
        prop_assert_eq!(&spec.apply_to_model(&round).unwrap(), &a);
        prop_assert_eq!(&a.biases, &m.biases);
    }

    #[test]
    fn homeostasis_matches_explicit_loops(trials in recordings()) {
        let got = homeostasis_metrics(&trials).unwrap();
        let counts: Vec<Vec<u64>> = trials.iter().map(|t| t.counts.clone()).collect();
        let ts: Vec<u64> = trials.iter().map(|t| t.timesteps).collect();
        let (m, sm, ss) = oracles::homeostasis(&counts, &ts);
        prop_assert!((got.fr_m - m).abs() <= 1e-12);
        prop_assert!((got.fr_std_m - sm).abs() <= 1e-12);
        prop_assert!((got.fr_std_s - ss).abs() <= 1e-12);
        prop_assert!(got.fr_m >= 0.0 && got.fr_std_m >= 0.0 && got.fr_std_s >= 0.0);
    }

    #[test]
    fn homeostasis_ignores_neuron_and_trial_order(trials in recordings(), rot in 0usize..10) {
        let base = homeostasis_metrics(&trials).unwrap();
        let mut shuffled: Vec<TrialRecording> = trials.iter().rev().cloned().collect();
        for t in &mut shuffled {
            let k = rot % t.counts.len();
            t.counts.rotate_left(k);
        }
        let other = homeostasis_metrics(&shuffled).unwrap();
        prop_assert!((base.fr_m - other.fr_m).abs() <= 1e-12);
        prop_assert!((base.fr_std_m - other.fr_std_m).abs() <= 1e-12);
        prop_assert!((base.fr_std_s - other.fr_std_s).abs() <= 1e-12);
    }

    #[test]
    fn normalize_then_denormalize_is_identity(
        rows in prop::collection::vec((-10.0..10.0f64, 0.1..10.0f64, 0.0..=1.0f64), 1..24),
    ) {
        let bounds: Vec<(f64, f64)> = rows.iter().map(|&(lo, w, _)| (lo, lo + w)).collect();
        let raw: Vec<f64> = rows.iter().map(|&(lo, w, u)| lo + u * w).collect();
        let n = StateNormalizer::new(bounds).unwrap();
        let unit = n.normalize(&raw).unwrap();
        prop_assert!(unit.iter().all(|u| (0.0..=1.0).contains(u)));
        for (a, b) in n.denormalize(&unit).unwrap().iter().zip(&raw) {
            prop_assert!((a - b).abs() <= 1e-9);
        }
    }

    #[test]
    fn encoding_is_seeded(values in prop::collection::vec(0.0..=1.0f64, 1..24), t in 1usize..20, seed in any::<u64>()) {
        let a = encode_state(&values, t, &mut rng::from_seed(seed)).unwrap();
        let b = encode_state(&values, t, &mut rng::from_seed(seed)).unwrap();
        prop_assert_eq!(&a, &b);
        let counts: Vec<u32> = a.iter().map(|s| s.count() as u32).collect();
        let decoded = rate_decode(&counts, t, 0.0, 1.0).unwrap();
        prop_assert!(decoded.iter().all(|d| (0.0..=1.0).contains(d)));
    }
}
