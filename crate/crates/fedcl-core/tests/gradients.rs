//! Gradient fidelity of the full encoder + projection + contrastive-loss
//! stack, checked against central finite differences.

use fedcl_core::contrastive::info_nce;
use fedcl_core::numeric::{
    backward, grad_check, ArchitectureConfig, ForwardMode, LossEval, ModelParams, Tensor,
};
use fedcl_core::rng;
use rand::Rng;

fn random_rows(rng: &mut rand_chacha::ChaCha8Rng, n: usize, dim: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..dim).map(|_| rng.random::<f64>()).collect())
        .collect()
}

fn random_unit_rows(rng: &mut rand_chacha::ChaCha8Rng, n: usize, dim: usize) -> Vec<Vec<f64>> {
    random_rows(rng, n, dim)
        .into_iter()
        .map(|mut v| {
            for x in v.iter_mut() {
                *x -= 0.5;
            }
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.into_iter().map(|x| x / norm).collect()
        })
        .collect()
}

/// Mean contrastive loss of a batch pushed through the main model, with
/// fixed keys and negatives. Exactly the per-step loss of local training.
fn contrastive_stack_eval(
    params: &ModelParams,
    batch: &Tensor,
    keys: &[Vec<f64>],
    negatives: &[Vec<f64>],
    tau: f64,
) -> fedcl_core::Result<LossEval> {
    let (q, stash) = params.forward(batch, ForwardMode::Project)?;
    let mut loss = 0.0;
    let mut grad_rows = Tensor::zeros_like(&q);
    let b = q.rows();
    for row in 0..b {
        let nce = info_nce(
            q.row(row),
            &keys[row],
            negatives.iter().map(|n| n.as_slice()),
            tau,
        )?;
        loss += nce.loss / b as f64;
        for (g, &v) in grad_rows.row_mut(row).iter_mut().zip(&nce.grad_q) {
            *g = v / b as f64;
        }
    }
    let grads = backward(params, &stash, &grad_rows)?;
    Ok(LossEval {
        loss,
        grads,
        kink_margin: stash.kink_margin(),
        pattern: stash.activation_pattern(),
    })
}

#[test]
fn contrastive_stack_matches_finite_differences() {
    let architectures = [
        ArchitectureConfig {
            encoder_widths: vec![16],
            projection_hidden: 8,
        },
        ArchitectureConfig {
            encoder_widths: vec![12, 12],
            projection_hidden: 12,
        },
        ArchitectureConfig {
            encoder_widths: vec![20, 10, 10],
            projection_hidden: 8,
        },
    ];
    for (i, arch) in architectures.iter().enumerate() {
        let seed = 90 + i as u64;
        let mut r = rng::stream(seed, &[1]);
        let input_dim = 10;
        let feature_dim = 6;
        let params =
            ModelParams::init(input_dim, arch, feature_dim, None, &mut r).unwrap();
        let batch = Tensor::from_rows(&random_rows(&mut r, 4, input_dim)).unwrap();
        let keys = random_unit_rows(&mut r, 4, feature_dim);
        let negatives = random_unit_rows(&mut r, 12, feature_dim);

        let report = grad_check(
            &params,
            |p| contrastive_stack_eval(p, &batch, &keys, &negatives, 0.2),
            40,
            seed,
            1e-5,
        )
        .unwrap();
        assert!(
            report.max_rel_err < 1e-4,
            "architecture {i}: max rel err {}",
            report.max_rel_err
        );
        assert!(report.probes_evaluated >= 30, "architecture {i}");
    }
}

#[test]
fn classifier_stack_matches_finite_differences() {
    use fedcl_core::numeric::cross_entropy;
    let mut r = rng::stream(77, &[2]);
    let arch = ArchitectureConfig {
        encoder_widths: vec![14, 10],
        projection_hidden: 8,
    };
    let params = ModelParams::init(9, &arch, 4, Some(3), &mut r).unwrap();
    let batch = Tensor::from_rows(&random_rows(&mut r, 5, 9)).unwrap();
    let targets = vec![0usize, 1, 2, 1, 0];

    let report = grad_check(
        &params,
        |p| {
            let (logits, stash) = p.forward(&batch, ForwardMode::Classify)?;
            let (loss, grad_logits) = cross_entropy(&logits, &targets)?;
            let grads = backward(p, &stash, &grad_logits)?;
            Ok(LossEval {
                loss,
                grads,
                kink_margin: stash.kink_margin(),
                pattern: stash.activation_pattern(),
            })
        },
        40,
        78,
        1e-5,
    )
    .unwrap();
    assert!(
        report.max_rel_err < 1e-4,
        "max rel err {}",
        report.max_rel_err
    );
}
