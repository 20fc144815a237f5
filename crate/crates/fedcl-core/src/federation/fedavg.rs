//! Sample-count-weighted model aggregation.

use crate::error::{Error, Result};
use crate::numeric::ModelParams;

/// Weighted mean of client models: every parameter becomes
/// Σ_c (n_c / Σ_i n_i) · θ_c.
pub fn fedavg(updates: &[(ModelParams, usize)]) -> Result<ModelParams> {
    let (first, _) = updates
        .first()
        .ok_or_else(|| Error::EmptyInput("fedavg over no updates".into()))?;
    if updates.iter().any(|(_, n)| *n == 0) {
        return Err(Error::InvalidConfig(
            "fedavg sample counts must be positive".into(),
        ));
    }
    for (params, _) in updates {
        if !params.same_architecture(first) {
            return Err(Error::ArchitectureMismatch(
                "fedavg received models with different architectures".into(),
            ));
        }
    }
    let total: usize = updates.iter().map(|(_, n)| n).sum();
    let mut out = first.zeros_like();
    for (params, n) in updates {
        let weight = *n as f64 / total as f64;
        for (acc, src) in out.iter_tensors_mut().zip(params.iter_tensors()) {
            for (a, &s) in acc.values_mut().iter_mut().zip(src.values()) {
                *a += weight * s;
            }
        }
    }
    Ok(out)
}

/// The aggregation weights fedavg would use, in update order. They sum to 1.
pub fn aggregation_weights(sample_counts: &[usize]) -> Vec<f64> {
    let total: usize = sample_counts.iter().sum();
    sample_counts
        .iter()
        .map(|&n| n as f64 / total as f64)
        .collect()
}
