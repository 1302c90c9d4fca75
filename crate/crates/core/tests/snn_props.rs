use bdett::matrix::Matrix;
use bdett::rng::{self, Purpose};
use bdett::snn::{fire, forward, init_weights, lif_step, srm_step, FiringRecorder, LayerState, NetworkModel, NeuronModel, SpikeTrain};
use bdett::thresholds::ThresholdSchemeConfig;
use bdett::verify::oracles;
use proptest::prelude::*;

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = Matrix> {
    prop::collection::vec(-2.0..2.0f64, rows * cols).prop_map(move |d| Matrix::from_vec(rows, cols, d).unwrap())
}

fn trains(n: usize, t: usize) -> impl Strategy<Value = Vec<SpikeTrain>> {
    prop::collection::vec(prop::collection::vec(any::<bool>(), t), n)
        .prop_map(|v| v.into_iter().map(SpikeTrain::new).collect())
}

fn model(layers: &[usize], neuron: NeuronModel, seed: u64) -> NetworkModel {
    let mut m = NetworkModel::zeros(layers, neuron, ThresholdSchemeConfig::bdett(), 6);
    init_weights(&mut m, 1.0, &mut rng::stream(seed, Purpose::Init, 0));
    m
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn fire_is_monotone_in_potential(
        v in prop::collection::vec(-3.0..3.0f64, 1..20),
        bump in 0.0..2.0f64,
        th in 0.1..1.5f64,
    ) {
        let thetas = vec![th; v.len()];
        let lo = fire(&v, &thetas).unwrap();
        let raised: Vec<f64> = v.iter().map(|x| x + bump).collect();
        let hi = fire(&raised, &thetas).unwrap();
        for (a, b) in lo.iter().zip(&hi) {
            prop_assert!(!a || *b);
        }
        for (s, x) in lo.iter().zip(&v) {
            prop_assert_eq!(*s, *x >= th);
        }
    }

    #[test]
    fn lif_drops_history_after_a_spike(
        w in matrix(3, 4),
        prev in prop::collection::vec(-2.0..2.0f64, 3),
        spiked in prop::collection::vec(any::<bool>(), 3),
        input in prop::collection::vec(any::<bool>(), 4),
        bias in prop::collection::vec(-0.5..0.5f64, 3),
    ) {
        let mut state = LayerState::new(3, 0.5);
        state.potentials_now = prev.clone();
        state.last_spikes = spiked.clone();
        let v = lif_step(&state, &input, &w, &bias, 0.75).unwrap();
        for i in 0..3 {
            let drive: f64 = (0..4).filter(|&j| input[j]).map(|j| w.get(i, j)).sum::<f64>() + bias[i];
            let carry = if spiked[i] { 0.0 } else { 0.75 * prev[i] };
            prop_assert!((v[i] - (drive + carry)).abs() <= 1e-12);
        }
    }

    #[test]
    fn srm_matches_double_loop(
        (n_in, n) in (1usize..6, 1usize..6),
        tau_s in 0.5..4.0f64,
        tau_r in 0.5..4.0f64,
        seed in any::<u64>(),
    ) {
        use rand::Rng;
        let mut r = rng::from_seed(seed);
        let w = Matrix::from_vec(n, n_in, (0..n * n_in).map(|_| r.random_range(-2.0..2.0)).collect()).unwrap();
        let theta: Vec<f64> = (0..n).map(|_| r.random_range(0.2..1.5)).collect();
        let steps = 15;
        let inputs: Vec<Vec<usize>> = (0..n_in).map(|_| (1..=steps).filter(|_| r.random::<f64>() < 0.3).collect()).collect();
        let want = oracles::srm_layer(&(0..n).map(|i| w.row(i).to_vec()).collect::<Vec<_>>(), &inputs, &theta, steps, tau_s, tau_r);

        let mut state = LayerState::new(n, 0.0);
        state.thresholds = theta.clone();
        for t in 1..=steps {
            let v = srm_step(&state, &inputs, &w, t, tau_s, tau_r).unwrap();
            for (a, b) in v.iter().zip(&want[t - 1]) {
                prop_assert!((a - b).abs() <= 1e-12, "t={} got {} want {}", t, a, b);
            }
            let s = fire(&v, &theta).unwrap();
            state.commit(t, v, theta.clone(), s, true);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn forward_is_deterministic_and_bounded(input in trains(5, 6), seed in any::<u64>(), srm in any::<bool>()) {
        let neuron = if srm { NeuronModel::srm() } else { NeuronModel::lif() };
        let mut m = model(&[5, 7, 3], neuron, seed);
        if srm {
            m.biases.iter_mut().for_each(|b| b.fill(0.0));
        }
        let mut rec_a = FiringRecorder::new(&m);
        let a = forward(&m, &input, Some(&mut rec_a)).unwrap();
        let mut rec_b = FiringRecorder::new(&m);
        let b = forward(&m, &input, Some(&mut rec_b)).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(&rec_a.counts, &rec_b.counts);
        prop_assert_eq!(rec_a.timesteps, 6);
        prop_assert!(a.iter().all(|&c| c <= 6));
        prop_assert!(rec_a.counts.iter().flatten().all(|&c| c <= 6));
    }
}

#[test]
fn wrong_train_length_is_rejected() {
    let m = model(&[2, 3, 2], NeuronModel::lif(), 0);
    let input = vec![SpikeTrain::new(vec![true; 5]); 2];
    assert!(forward(&m, &input, None).is_err());
}
