//! Analytic vs central-difference weight gradients on the smoothed network.

use serde::Serialize;

use super::bptt::{backward, forward_trace, SpikeMode, Trace};
use super::{decay_of, encode_steps, loss_and_grad, Target, TrainConfig};
use crate::error::Result;
use crate::rng::{self, Purpose};
use crate::snn::NetworkModel;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GradCheckReport {
    pub total: usize,
    /// Weights whose perturbation flipped the sign of some `u − θ`.
    pub masked: usize,
    pub passed: usize,
    pub max_rel_err: f64,
}

impl GradCheckReport {
    /// Share of unmasked weights within tolerance.
    pub fn pass_fraction(&self) -> f64 {
        let checked = self.total - self.masked;
        if checked == 0 {
            0.0
        } else {
            self.passed as f64 / checked as f64
        }
    }
}

fn same_signs(a: &Trace, b: &Trace) -> bool {
    a.layers.iter().zip(&b.layers).all(|(x, y)| {
        x.margin.iter().flatten().zip(y.margin.iter().flatten()).all(|(p, q)| (*p >= 0.0) == (*q >= 0.0))
    })
}

/// Compares every weight gradient with `(L(w+h) − L(w−h))/2h`. The forward pass uses the
/// smooth spike function and the Poisson input comes from stream `(seed, Encoding, 0)`.
/// With `frozen_stats` the layer statistics of the unperturbed run are reused for the
/// perturbed ones and the analytic side ignores them; otherwise both follow them.
pub fn gradient_check(
    model: &NetworkModel,
    x: &[f64],
    target: &Target,
    cfg: &TrainConfig,
    seed: u64,
    h: f64,
    rel_tol: f64,
    frozen_stats: bool,
) -> Result<GradCheckReport> {
    model.validate()?;
    let decay = decay_of(model)?;
    let schemes = cfg.schemes(model);
    let inputs = encode_steps(x, model.timesteps, &mut rng::stream(seed, Purpose::Encoding, 0));
    let base = forward_trace(model, &schemes, inputs.clone(), cfg.alpha, SpikeMode::Smooth, None)?;
    let (_, dl, _) = loss_and_grad(&base.counts, target, model.timesteps, cfg);
    let analytic = backward(model, &base, &dl, decay, !frozen_stats);
    let frozen = frozen_stats.then_some(&base.stats);

    let run = |m: &NetworkModel| -> Result<(f64, Trace)> {
        let tr = forward_trace(m, &schemes, inputs.clone(), cfg.alpha, SpikeMode::Smooth, frozen)?;
        let (loss, _, _) = loss_and_grad(&tr.counts, target, m.timesteps, cfg);
        Ok((loss, tr))
    };
    let mut report = GradCheckReport { total: 0, masked: 0, passed: 0, max_rel_err: 0.0 };
    let mut m = model.clone();
    for l in 0..m.n_layers() {
        for k in 0..m.weights[l].len() {
            report.total += 1;
            let w0 = m.weights[l].as_slice()[k];
            m.weights[l].as_mut_slice()[k] = w0 + h;
            let (lp, tp) = run(&m)?;
            m.weights[l].as_mut_slice()[k] = w0 - h;
            let (lm, tm) = run(&m)?;
            m.weights[l].as_mut_slice()[k] = w0;
            if !same_signs(&base, &tp) || !same_signs(&base, &tm) {
                report.masked += 1;
                continue;
            }
            let fd = (lp - lm) / (2.0 * h);
            let a = analytic.weights[l].as_slice()[k];
            let rel = (a - fd).abs() / a.abs().max(fd.abs()).max(1e-6);
            report.max_rel_err = report.max_rel_err.max(rel);
            if rel <= rel_tol {
                report.passed += 1;
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::snn::{init_weights, NeuronModel};
    use crate::thresholds::ThresholdSchemeConfig;

    #[test]
    fn small_net_gradients_agree() {
        for scheme in [ThresholdSchemeConfig::bdett(), ThresholdSchemeConfig::fixed(0.5)] {
            for frozen in [true, false] {
                let mut m = NetworkModel::zeros(&[2, 2, 1], NeuronModel::lif(), scheme, 5);
                init_weights(&mut m, 1.5, &mut rng::from_seed(4));
                let r = gradient_check(&m, &[0.7, 0.4], &Target::Action(vec![0.3]), &TrainConfig::default(), 1, 1e-4, 1e-3, frozen)
                    .unwrap();
                assert!(r.pass_fraction() >= 0.95, "{r:?}");
            }
        }
    }

    #[test]
    fn wider_net_gradients_follow_statistics() {
        use crate::thresholds::SchemeKind;
        for kind in [SchemeKind::Bdett, SchemeKind::DetOnly, SchemeKind::DttOnly] {
            let mut m = NetworkModel::zeros(&[3, 5, 4, 2], NeuronModel::lif(), ThresholdSchemeConfig::bdett().with_kind(kind), 6);
            init_weights(&mut m, 2.0, &mut rng::from_seed(8));
            let x = [0.9, 0.5, 0.7];
            let r = gradient_check(&m, &x, &Target::Action(vec![0.3, 0.1]), &TrainConfig::default(), 2, 1e-5, 1e-3, false).unwrap();
            assert!(r.total - r.masked >= 10, "{kind:?} {r:?}");
            assert!(r.pass_fraction() >= 0.95, "{kind:?} {r:?}");
        }
    }
}
