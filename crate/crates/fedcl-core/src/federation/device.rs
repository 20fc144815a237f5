//! Device-side state and the local contrastive round: negative-bank policy
//! management and minibatch training against the assembled negatives.

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;

use crate::contrastive::{
    augment_pair, info_nce, momentum_update, AugmentationSpec, ContrastiveConfig, DeviceId,
    FeatureVec, MemoryBank,
};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::numeric::{backward, sgd_step, ForwardMode, ModelParams, OptimizerState, SgdHyper, Tensor};

/// Which negatives a device contrasts against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NegativesPolicy {
    /// Own bank only: plain momentum-contrast training.
    LocalOnly,
    /// Own bank seeded, refreshed with local and sampled remote features.
    LocalPlusRemote,
    /// Remote features only; own features never used as negatives.
    RemoteOnly,
}

impl NegativesPolicy {
    pub fn as_str(&self) -> &'static str {
        match self {
            NegativesPolicy::LocalOnly => "local_only",
            NegativesPolicy::LocalPlusRemote => "local_plus_remote",
            NegativesPolicy::RemoteOnly => "remote_only",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "local_only" => Ok(NegativesPolicy::LocalOnly),
            "local_plus_remote" => Ok(NegativesPolicy::LocalPlusRemote),
            "remote_only" => Ok(NegativesPolicy::RemoteOnly),
            other => Err(Error::InvalidConfig(format!(
                "unknown negatives policy '{other}'"
            ))),
        }
    }

    pub fn uses_remote(&self) -> bool {
        !matches!(self, NegativesPolicy::LocalOnly)
    }
}

/// One simulated client: its training slice, main and momentum models, the
/// local feature bank, and the optimizer buffers.
#[derive(Debug, Clone)]
pub struct DeviceState {
    pub device_id: DeviceId,
    pub train_partition: Dataset,
    pub main_params: ModelParams,
    pub momentum_params: ModelParams,
    pub local_bank: MemoryBank,
    pub optimizer: OptimizerState,
}

impl DeviceState {
    pub fn new(
        device_id: DeviceId,
        train_partition: Dataset,
        global: &ModelParams,
        bank_capacity: usize,
        sgd: SgdHyper,
    ) -> Result<Self> {
        if train_partition.is_empty() {
            return Err(Error::EmptyInput(format!(
                "device {device_id} has an empty training partition"
            )));
        }
        Ok(Self {
            device_id,
            train_partition,
            main_params: global.clone(),
            momentum_params: global.clone(),
            local_bank: MemoryBank::new(bank_capacity)?,
            optimizer: OptimizerState::sgd(global, sgd),
        })
    }

    /// Round start: adopt the downloaded global model. The momentum model is
    /// re-seeded from it and the optimizer buffers start fresh.
    pub fn adopt_global(&mut self, global: &ModelParams, sgd: SgdHyper) {
        self.main_params = global.clone();
        self.momentum_params = global.clone();
        self.optimizer = OptimizerState::sgd(global, sgd);
    }
}

/// Bank Q_CL at round start: a copy of the local bank for local policies,
/// a copy of the remote bank when local negatives are removed. Capacity for
/// remote-containing policies is the remote bank's capacity.
pub fn init_qcl(
    policy: NegativesPolicy,
    local_bank: &MemoryBank,
    remote_bank: Option<&MemoryBank>,
) -> Result<MemoryBank> {
    match policy {
        NegativesPolicy::LocalOnly => {
            MemoryBank::from_entries(local_bank.capacity(), local_bank.iter().cloned().collect())
        }
        NegativesPolicy::LocalPlusRemote => {
            let remote = remote_bank.ok_or_else(|| {
                Error::InvalidConfig("local_plus_remote requires a remote bank".into())
            })?;
            if remote.is_empty() {
                return Err(Error::EmptyBank);
            }
            MemoryBank::from_entries(remote.capacity(), local_bank.iter().cloned().collect())
        }
        NegativesPolicy::RemoteOnly => {
            let remote = remote_bank.ok_or_else(|| {
                Error::InvalidConfig("remote_only requires a remote bank".into())
            })?;
            if remote.is_empty() {
                return Err(Error::EmptyBank);
            }
            MemoryBank::from_entries(remote.capacity(), remote.iter().cloned().collect())
        }
    }
}

/// After a minibatch: the oldest Q_CL entries give way to the freshest
/// features. Local policies push the minibatch's momentum features; remote
/// policies add (or substitute) a same-sized uniform sample of the remote
/// bank.
pub fn qcl_update(
    policy: NegativesPolicy,
    qcl: &mut MemoryBank,
    local_features: &[FeatureVec],
    remote_bank: Option<&MemoryBank>,
    batch_size: usize,
    rng: &mut ChaCha8Rng,
) -> Result<()> {
    match policy {
        NegativesPolicy::LocalOnly => {
            qcl.push(local_features.iter().cloned());
        }
        NegativesPolicy::LocalPlusRemote => {
            let remote = remote_bank.ok_or_else(|| {
                Error::InvalidConfig("local_plus_remote requires a remote bank".into())
            })?;
            qcl.push(local_features.iter().cloned());
            qcl.push(remote.sample_uniform(batch_size, rng)?);
        }
        NegativesPolicy::RemoteOnly => {
            let remote = remote_bank.ok_or_else(|| {
                Error::InvalidConfig("remote_only requires a remote bank".into())
            })?;
            qcl.push(remote.sample_uniform(batch_size, rng)?);
        }
    }
    Ok(())
}

/// Knobs for one local contrastive round.
#[derive(Debug, Clone)]
pub struct LocalRoundParams<'a> {
    pub policy: NegativesPolicy,
    pub local_epochs: usize,
    pub lr: f64,
    pub contrastive: &'a ContrastiveConfig,
    pub augment: &'a AugmentationSpec,
    pub round: u32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalRoundOutcome {
    pub mean_loss: f64,
    pub steps: usize,
    pub qcl_len: usize,
    /// Own-origin features observed in Q_CL under the remote-only policy.
    pub purity_violations: u64,
}

/// E local epochs of: augment pair → anchor through the main model, key
/// through the momentum model → contrastive loss against all of Q_CL →
/// backprop + SGD → EMA update → Q_CL and local-bank refresh.
pub fn local_cl_round(
    device: &mut DeviceState,
    qcl: &mut MemoryBank,
    remote_bank: Option<&MemoryBank>,
    params: &LocalRoundParams<'_>,
    rng: &mut ChaCha8Rng,
) -> Result<LocalRoundOutcome> {
    params.contrastive.validate()?;
    if params.local_epochs == 0 {
        return Err(Error::InvalidConfig(
            "local_epochs must be ≥ 1; a zero-epoch round has no defined loss".into(),
        ));
    }
    let data = &device.train_partition;
    let (h, w, c) = (data.height, data.width, data.channels);
    let mut purity_violations = own_origin_count(params.policy, qcl, device.device_id);
    let mut loss_sum = 0.0;
    let mut steps = 0usize;

    for _epoch in 0..params.local_epochs {
        let mut order: Vec<usize> = (0..data.len()).collect();
        order.shuffle(rng);
        for chunk in order.chunks(params.contrastive.batch_size) {
            let mut q_rows = Vec::with_capacity(chunk.len());
            let mut k_rows = Vec::with_capacity(chunk.len());
            for &idx in chunk {
                let sample = data.sample_f64(idx);
                let (xq, xk) = augment_pair(&sample, h, w, c, params.augment, rng)?;
                q_rows.push(xq);
                k_rows.push(xk);
            }
            let q_batch = Tensor::from_rows(&q_rows)?;
            let k_batch = Tensor::from_rows(&k_rows)?;

            let (q_out, stash) = device.main_params.forward(&q_batch, ForwardMode::Project)?;
            let (k_out, _) = device
                .momentum_params
                .forward(&k_batch, ForwardMode::Project)?;

            let negatives: Vec<&[f64]> = qcl.iter().map(|f| f.values()).collect();
            let mut grad_rows = Tensor::zeros_like(&q_out);
            let mut batch_loss = 0.0;
            for row in 0..chunk.len() {
                let nce = info_nce(
                    q_out.row(row),
                    k_out.row(row),
                    negatives.iter().copied(),
                    params.contrastive.tau,
                )?;
                batch_loss += nce.loss;
                let scale = 1.0 / chunk.len() as f64;
                for (g, &v) in grad_rows.row_mut(row).iter_mut().zip(&nce.grad_q) {
                    *g = v * scale;
                }
            }
            batch_loss /= chunk.len() as f64;

            let grads = backward(&device.main_params, &stash, &grad_rows)?;
            sgd_step(
                &mut device.main_params,
                &grads,
                &mut device.optimizer,
                params.lr,
            )?;
            momentum_update(
                &device.main_params,
                &mut device.momentum_params,
                params.contrastive.ema_momentum,
            )?;

            let fresh: Vec<FeatureVec> = (0..chunk.len())
                .map(|row| {
                    FeatureVec::new(k_out.row(row).to_vec(), device.device_id, params.round)
                })
                .collect::<Result<_>>()?;
            qcl_update(
                params.policy,
                qcl,
                &fresh,
                remote_bank,
                chunk.len(),
                rng,
            )?;
            device.local_bank.push(fresh);

            purity_violations += own_origin_count(params.policy, qcl, device.device_id);
            loss_sum += batch_loss;
            steps += 1;
        }
    }
    Ok(LocalRoundOutcome {
        mean_loss: loss_sum / steps as f64,
        steps,
        qcl_len: qcl.len(),
        purity_violations,
    })
}

fn own_origin_count(policy: NegativesPolicy, qcl: &MemoryBank, device: DeviceId) -> u64 {
    if policy != NegativesPolicy::RemoteOnly {
        return 0;
    }
    qcl.iter().filter(|f| f.origin() == device).count() as u64
}
