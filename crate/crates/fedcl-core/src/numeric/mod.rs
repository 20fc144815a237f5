//! From-scratch dense network, optimizers, schedules, and gradient
//! verification. Everything downstream trains through this module.

mod gradcheck;
mod network;
mod optim;
mod tensor;

pub use gradcheck::{grad_check, GradCheckReport, LossEval, KINK_SKIP_MARGIN};
pub use network::{
    backward, cross_entropy, ActivationStash, ArchitectureConfig, ForwardMode, Layer, ModelParams,
};
pub use optim::{adam_step, cosine_lr, sgd_step, AdamHyper, OptimizerState, SgdHyper};
pub use tensor::{dot, l2_normalize, Tensor};
