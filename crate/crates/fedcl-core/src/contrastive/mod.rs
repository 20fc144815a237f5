//! Contrastive machinery on one device: augmentation pairs, the
//! temperature-scaled loss, the EMA momentum model, and FIFO feature banks.

mod augment;
mod bank;
mod loss;

pub use augment::{augment_pair, AugmentationSpec};
pub use bank::{DeviceId, FeatureVec, MemoryBank};
pub use loss::{info_nce, InfoNce};

use crate::error::{Error, Result};
use crate::numeric::ModelParams;

/// Temperature, feature dimension, batch size, bank capacity, and the EMA
/// coefficient of the momentum model.
#[derive(Debug, Clone, PartialEq)]
pub struct ContrastiveConfig {
    pub tau: f64,
    pub feature_dim: usize,
    pub batch_size: usize,
    pub bank_capacity: usize,
    pub ema_momentum: f64,
}

impl Default for ContrastiveConfig {
    fn default() -> Self {
        Self {
            tau: 0.07,
            feature_dim: 32,
            batch_size: 16,
            bank_capacity: 128,
            ema_momentum: 0.99,
        }
    }
}

impl ContrastiveConfig {
    pub fn validate(&self) -> Result<()> {
        if self.tau <= 0.0 {
            return Err(Error::InvalidConfig("tau must be positive".into()));
        }
        if self.feature_dim == 0 || self.batch_size == 0 || self.bank_capacity == 0 {
            return Err(Error::InvalidConfig(
                "feature_dim, batch_size, bank_capacity must be positive".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.ema_momentum) {
            return Err(Error::InvalidConfig(format!(
                "ema momentum must lie in [0, 1), got {}",
                self.ema_momentum
            )));
        }
        Ok(())
    }
}

/// EMA update of the momentum model: p ← m·p + (1−m)·p_main for every
/// parameter. The main model is never modified.
pub fn momentum_update(main: &ModelParams, momentum_model: &mut ModelParams, m: f64) -> Result<()> {
    if !main.same_architecture(momentum_model) {
        return Err(Error::ArchitectureMismatch(
            "momentum model does not match main model".into(),
        ));
    }
    if m == 1.0 {
        return Ok(());
    }
    for (mom, src) in momentum_model.iter_tensors_mut().zip(main.iter_tensors()) {
        for (pv, &sv) in mom.values_mut().iter_mut().zip(src.values()) {
            if m == 0.0 {
                *pv = sv;
            } else {
                // Incremental form: exact no-op when both models agree.
                *pv += (1.0 - m) * (sv - *pv);
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::ArchitectureConfig;
    use crate::rng;

    fn model(seed: u64) -> ModelParams {
        ModelParams::init(
            6,
            &ArchitectureConfig {
                encoder_widths: vec![5, 4],
                projection_hidden: 4,
            },
            3,
            None,
            &mut rng::stream(seed, &[rng::tag::INIT]),
        )
        .unwrap()
    }

    #[test]
    fn m_zero_copies_main() {
        let main = model(1);
        let mut mom = model(2);
        momentum_update(&main, &mut mom, 0.0).unwrap();
        assert_eq!(mom, main);
    }

    #[test]
    fn one_step_arithmetic() {
        let mut main = model(1);
        for t in main.iter_tensors_mut() {
            for v in t.values_mut() {
                *v = 1.0;
            }
        }
        let mut mom = main.zeros_like();
        momentum_update(&main, &mut mom, 0.99).unwrap();
        for t in mom.iter_tensors() {
            for &v in t.values() {
                assert!((v - 0.01).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn equal_models_are_a_fixed_point() {
        let main = model(3);
        for m in [0.0, 0.3, 0.999] {
            let mut mom = main.clone();
            momentum_update(&main, &mut mom, m).unwrap();
            assert_eq!(mom, main);
        }
    }

    #[test]
    fn m_one_is_identity_on_momentum_model() {
        // Boundary excluded from configs but the formula itself is tested.
        let main = model(4);
        let mut mom = model(5);
        let before = mom.clone();
        momentum_update(&main, &mut mom, 1.0).unwrap();
        assert_eq!(mom, before);
    }

    #[test]
    fn architecture_mismatch_errors() {
        let main = model(1);
        let mut other = ModelParams::init(
            7,
            &ArchitectureConfig::default(),
            3,
            None,
            &mut rng::stream(9, &[rng::tag::INIT]),
        )
        .unwrap();
        assert!(momentum_update(&main, &mut other, 0.5).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(ContrastiveConfig::default().validate().is_ok());
        let mut c = ContrastiveConfig::default();
        c.ema_momentum = 1.0;
        assert!(c.validate().is_err());
        let mut c = ContrastiveConfig::default();
        c.tau = 0.0;
        assert!(c.validate().is_err());
    }
}
