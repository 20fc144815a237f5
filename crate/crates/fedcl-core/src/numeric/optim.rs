//! Momentum SGD, Adam, and the cosine learning-rate schedule.

use crate::error::{Error, Result};
use crate::numeric::network::ModelParams;
use crate::numeric::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SgdHyper {
    pub momentum: f64,
    pub weight_decay: f64,
}

impl Default for SgdHyper {
    fn default() -> Self {
        Self {
            momentum: 0.9,
            weight_decay: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamHyper {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamHyper {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Buffers {
    Sgd {
        hyper: SgdHyper,
        velocity: Vec<Tensor>,
    },
    Adam {
        hyper: AdamHyper,
        first_moment: Vec<Tensor>,
        second_moment: Vec<Tensor>,
        step: u64,
    },
}

/// Per-parameter optimizer buffers, aligned with the canonical tensor order
/// of the [`ModelParams`] they were created from.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    buffers: Buffers,
}

impl OptimizerState {
    pub fn sgd(params: &ModelParams, hyper: SgdHyper) -> Self {
        Self {
            buffers: Buffers::Sgd {
                hyper,
                velocity: params.iter_tensors().map(Tensor::zeros_like).collect(),
            },
        }
    }

    pub fn adam(params: &ModelParams, hyper: AdamHyper) -> Self {
        Self {
            buffers: Buffers::Adam {
                hyper,
                first_moment: params.iter_tensors().map(Tensor::zeros_like).collect(),
                second_moment: params.iter_tensors().map(Tensor::zeros_like).collect(),
                step: 0,
            },
        }
    }

    pub fn adam_step_count(&self) -> Option<u64> {
        match &self.buffers {
            Buffers::Adam { step, .. } => Some(*step),
            _ => None,
        }
    }
}

fn check_alignment(params: &ModelParams, grads: &ModelParams, buffers: &[Tensor]) -> Result<()> {
    if !params.same_architecture(grads) {
        return Err(Error::ArchitectureMismatch(
            "gradients are not aligned with parameters".into(),
        ));
    }
    if params.n_tensors() != buffers.len()
        || params
            .iter_tensors()
            .zip(buffers)
            .any(|(p, b)| !p.same_shape(b))
    {
        return Err(Error::ArchitectureMismatch(
            "optimizer state was created for a different architecture".into(),
        ));
    }
    Ok(())
}

/// Standard momentum SGD with L2 weight decay folded into the gradient:
/// g ← grad + wd·p;  v ← μ·v + g;  p ← p − lr·v.
pub fn sgd_step(
    params: &mut ModelParams,
    grads: &ModelParams,
    state: &mut OptimizerState,
    lr: f64,
) -> Result<()> {
    let Buffers::Sgd { hyper, velocity } = &mut state.buffers else {
        return Err(Error::InvalidConfig("state is not SGD".into()));
    };
    check_alignment(params, grads, velocity)?;
    for ((p, g), v) in params
        .iter_tensors_mut()
        .zip(grads.iter_tensors())
        .zip(velocity.iter_mut())
    {
        for ((pv, &gv), vv) in p
            .values_mut()
            .iter_mut()
            .zip(g.values())
            .zip(v.values_mut())
        {
            let g_eff = gv + hyper.weight_decay * *pv;
            *vv = hyper.momentum * *vv + g_eff;
            *pv -= lr * *vv;
        }
        p.ensure_finite("sgd_step")?;
    }
    Ok(())
}

/// Adam with bias correction.
pub fn adam_step(
    params: &mut ModelParams,
    grads: &ModelParams,
    state: &mut OptimizerState,
    lr: f64,
) -> Result<()> {
    let Buffers::Adam {
        hyper,
        first_moment,
        second_moment,
        step,
    } = &mut state.buffers
    else {
        return Err(Error::InvalidConfig("state is not Adam".into()));
    };
    check_alignment(params, grads, first_moment)?;
    *step += 1;
    let t = *step as i32;
    let bc1 = 1.0 - hyper.beta1.powi(t);
    let bc2 = 1.0 - hyper.beta2.powi(t);
    for (((p, g), m), v) in params
        .iter_tensors_mut()
        .zip(grads.iter_tensors())
        .zip(first_moment.iter_mut())
        .zip(second_moment.iter_mut())
    {
        for (((pv, &gv), mv), vv) in p
            .values_mut()
            .iter_mut()
            .zip(g.values())
            .zip(m.values_mut())
            .zip(v.values_mut())
        {
            *mv = hyper.beta1 * *mv + (1.0 - hyper.beta1) * gv;
            *vv = hyper.beta2 * *vv + (1.0 - hyper.beta2) * gv * gv;
            let m_hat = *mv / bc1;
            let v_hat = *vv / bc2;
            *pv -= lr * m_hat / (v_hat.sqrt() + hyper.epsilon);
        }
        p.ensure_finite("adam_step")?;
    }
    Ok(())
}

/// lr(round) = lr0 · ½ (1 + cos(π · round / total)). Monotone nonincreasing.
pub fn cosine_lr(round: usize, total_rounds: usize, lr0: f64) -> Result<f64> {
    if total_rounds == 0 {
        return Err(Error::InvalidConfig("total_rounds must be ≥ 1".into()));
    }
    if round > total_rounds {
        return Err(Error::InvalidConfig(format!(
            "round {round} out of range 0..={total_rounds}"
        )));
    }
    let frac = round as f64 / total_rounds as f64;
    Ok(lr0 * 0.5 * (1.0 + (std::f64::consts::PI * frac).cos()))
}
