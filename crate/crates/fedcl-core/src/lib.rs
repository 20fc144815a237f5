//! Deterministic simulator of federated contrastive pretraining with
//! cross-device feature sharing.
//!
//! Devices pre-train a small encoder on unlabeled data with a momentum-
//! contrast loss against local/remote negative banks; a server aggregates
//! models round by round and redistributes de-identified feature vectors;
//! the pre-trained encoder is then fine-tuned with limited labels and scored
//! by mean per-class recall and precision.

pub mod contrastive;
pub mod data;
pub mod error;
pub mod evaluation;
pub mod federation;
pub mod numeric;
pub mod rng;

pub use error::{Error, Result};
