//! Temperature-scaled contrastive loss against a set of negatives.

use crate::error::{Error, Result};

/// Loss value plus gradients for the anchor and the positive key. Negatives
/// are constants: they come from the momentum model's bank and carry no
/// gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct InfoNce {
    pub loss: f64,
    pub grad_q: Vec<f64>,
    pub grad_k: Vec<f64>,
}

/// loss = −log( exp(q·k⁺/τ) / (exp(q·k⁺/τ) + Σ_n exp(q·n/τ)) ), computed
/// with a max-shifted log-sum-exp. With no negatives the loss is exactly 0.
pub fn info_nce<'a, I>(q: &[f64], k_pos: &[f64], negatives: I, tau: f64) -> Result<InfoNce>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    if q.is_empty() {
        return Err(Error::EmptyInput("info_nce anchor".into()));
    }
    if tau <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "temperature must be positive, got {tau}"
        )));
    }
    let d = q.len();
    if k_pos.len() != d {
        return Err(Error::ShapeMismatch {
            context: "info_nce positive key".into(),
            expected: vec![d],
            got: vec![k_pos.len()],
        });
    }

    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let s_pos = dot(q, k_pos) / tau;

    let mut neg_refs: Vec<&[f64]> = Vec::new();
    let mut s_neg: Vec<f64> = Vec::new();
    for n in negatives {
        if n.len() != d {
            return Err(Error::ShapeMismatch {
                context: "info_nce negative".into(),
                expected: vec![d],
                got: vec![n.len()],
            });
        }
        s_neg.push(dot(q, n) / tau);
        neg_refs.push(n);
    }

    let m = s_neg.iter().cloned().fold(s_pos, f64::max);
    let z: f64 = (s_pos - m).exp() + s_neg.iter().map(|&s| (s - m).exp()).sum::<f64>();
    let lse = m + z.ln();
    let loss = lse - s_pos;

    let p_pos = (s_pos - lse).exp();
    let mut grad_q: Vec<f64> = k_pos.iter().map(|&k| (p_pos - 1.0) * k / tau).collect();
    for (&s, n) in s_neg.iter().zip(&neg_refs) {
        let p = (s - lse).exp();
        for (g, &nv) in grad_q.iter_mut().zip(n.iter()) {
            *g += p * nv / tau;
        }
    }
    let grad_k: Vec<f64> = q.iter().map(|&qv| (p_pos - 1.0) * qv / tau).collect();

    Ok(InfoNce {
        loss,
        grad_q,
        grad_k,
    })
}
