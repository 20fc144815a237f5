//! Gradient verification against central finite differences.

use rand::Rng;

use crate::error::Result;
use crate::numeric::network::ModelParams;
use crate::rng;

/// One evaluation of a differentiable loss: the scalar loss, gradients
/// aligned with the parameters, the distance of the closest ReLU
/// preactivation to its kink (infinity when no ReLU was crossed), and the
/// ReLU sign pattern of the evaluation.
pub struct LossEval {
    pub loss: f64,
    pub grads: ModelParams,
    pub kink_margin: f64,
    pub pattern: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_err: f64,
    pub probes_evaluated: usize,
    pub probes_skipped: usize,
}

/// Probes within this distance of a ReLU kink are skipped; central
/// differences straddle the nondifferentiable point there.
pub const KINK_SKIP_MARGIN: f64 = 1e-7;

/// Samples `n_probes` parameter coordinates and compares the analytic
/// gradient from `loss_fn` against a central finite difference with the
/// given epsilon. Returns the worst relative error over evaluated probes.
pub fn grad_check<F>(
    params: &ModelParams,
    loss_fn: F,
    n_probes: usize,
    seed: u64,
    epsilon: f64,
) -> Result<GradCheckReport>
where
    F: Fn(&ModelParams) -> Result<LossEval>,
{
    let base = loss_fn(params)?;
    let sizes: Vec<usize> = params.iter_tensors().map(|t| t.len()).collect();
    let total: usize = sizes.iter().sum();
    let mut rng = rng::stream(seed, &[0x6c0de]);

    let mut max_rel = 0.0f64;
    let mut evaluated = 0;
    let mut skipped = 0;
    for _ in 0..n_probes {
        let flat = rng.random_range(0..total);
        let (tensor_idx, offset) = locate(&sizes, flat);

        let analytic = base
            .grads
            .iter_tensors()
            .nth(tensor_idx)
            .expect("aligned grads")
            .values()[offset];

        let mut plus = params.clone();
        perturb(&mut plus, tensor_idx, offset, epsilon);
        let eval_plus = loss_fn(&plus)?;

        let mut minus = params.clone();
        perturb(&mut minus, tensor_idx, offset, -epsilon);
        let eval_minus = loss_fn(&minus)?;

        // A probe is unusable when it sits within the margin of a kink or
        // when the two evaluations straddle one (the ReLU pattern flips).
        if eval_plus.kink_margin < KINK_SKIP_MARGIN
            || eval_minus.kink_margin < KINK_SKIP_MARGIN
            || eval_plus.pattern != eval_minus.pattern
        {
            skipped += 1;
            continue;
        }
        let numeric = (eval_plus.loss - eval_minus.loss) / (2.0 * epsilon);
        // The denominator floor sits above the cancellation noise of the
        // central difference (≈ machine-eps · |loss| / ε ≈ 1e-11), so
        // dead-gradient coordinates compare as zero-vs-zero.
        let denom = analytic.abs().max(numeric.abs()).max(1e-6);
        max_rel = max_rel.max((analytic - numeric).abs() / denom);
        evaluated += 1;
    }
    Ok(GradCheckReport {
        max_rel_err: max_rel,
        probes_evaluated: evaluated,
        probes_skipped: skipped,
    })
}

fn locate(sizes: &[usize], mut flat: usize) -> (usize, usize) {
    for (i, &s) in sizes.iter().enumerate() {
        if flat < s {
            return (i, flat);
        }
        flat -= s;
    }
    unreachable!("flat index within total size");
}

fn perturb(params: &mut ModelParams, tensor_idx: usize, offset: usize, delta: f64) {
    let t = params
        .iter_tensors_mut()
        .nth(tensor_idx)
        .expect("index in range");
    t.values_mut()[offset] += delta;
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::network::{backward, ArchitectureConfig, ForwardMode};
    use crate::numeric::tensor::Tensor;

    /// Quadratic loss on a linear model has an exact analytic gradient, so
    /// finite differences agree to near machine precision.
    #[test]
    fn linear_model_quadratic_loss_is_exact() {
        let mut r = crate::rng::stream(21, &[1]);
        let arch = ArchitectureConfig {
            encoder_widths: vec![3],
            projection_hidden: 2,
        };
        let params = ModelParams::init(4, &arch, 2, None, &mut r).unwrap();
        let batch = Tensor::new(vec![2, 4], (0..8).map(|i| i as f64 / 4.0).collect()).unwrap();

        let loss_fn = |p: &ModelParams| {
            let (out, stash) = p.forward(&batch, ForwardMode::Encode)?;
            let loss = 0.5 * out.values().iter().map(|v| v * v).sum::<f64>();
            let grads = backward(p, &stash, &out)?;
            Ok(LossEval {
                loss,
                grads,
                kink_margin: stash.kink_margin(),
                pattern: stash.activation_pattern(),
            })
        };
        let report = grad_check(&params, loss_fn, 30, 7, 1e-5).unwrap();
        assert!(
            report.max_rel_err < 1e-8,
            "max rel err {}",
            report.max_rel_err
        );
        assert!(report.probes_evaluated > 0);
    }

    #[test]
    fn kink_probes_are_skipped_and_reported() {
        // A 1-layer net driven exactly onto the ReLU kink: preactivation 0.
        let mut r = crate::rng::stream(22, &[1]);
        let arch = ArchitectureConfig {
            encoder_widths: vec![2, 2],
            projection_hidden: 2,
        };
        let mut params = ModelParams::init(2, &arch, 2, None, &mut r).unwrap();
        for t in params.iter_tensors_mut() {
            for v in t.values_mut() {
                *v = 0.0; // all preactivations sit on the kink
            }
        }
        let batch = Tensor::new(vec![1, 2], vec![1.0, 1.0]).unwrap();
        let loss_fn = |p: &ModelParams| {
            let (out, stash) = p.forward(&batch, ForwardMode::Encode)?;
            let loss = out.values().iter().sum::<f64>();
            let grads = backward(p, &stash, &Tensor::new(out.shape().to_vec(), vec![1.0; out.len()]).unwrap())?;
            Ok(LossEval {
                loss,
                grads,
                kink_margin: stash.kink_margin(),
                pattern: stash.activation_pattern(),
            })
        };
        let report = grad_check(&params, loss_fn, 10, 3, 1e-5).unwrap();
        assert_eq!(report.probes_evaluated + report.probes_skipped, 10);
        assert!(report.probes_skipped > 0, "kink probes should be reported");
    }
}
