//! The round protocol: device scheduling, feature upload and de-identified
//! redistribution, remote-bank assembly, negative-policy management, local
//! training, and weighted model aggregation.

mod checkpoint;
mod device;
mod fedavg;
mod rounds;
mod server;

pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use device::{
    init_qcl, local_cl_round, qcl_update, DeviceState, LocalRoundOutcome, LocalRoundParams,
    NegativesPolicy,
};
pub use fedavg::{aggregation_weights, fedavg};
pub use rounds::{
    remote_multiset_for, run_local_cl, run_pretraining, seeded_init, FederationConfig, LocalClRun,
    PretrainConfig, PretrainRun, RoundRecord,
};
pub use server::{FeaturePayload, ServerState};
