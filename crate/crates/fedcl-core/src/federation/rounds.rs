//! The round protocol: device scheduling, local training, feature upload
//! and redistribution, and model aggregation.

use rand_chacha::ChaCha8Rng;

use crate::contrastive::{AugmentationSpec, ContrastiveConfig, FeatureVec};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::federation::device::{
    init_qcl, local_cl_round, DeviceState, LocalRoundParams, NegativesPolicy,
};
use crate::federation::fedavg::{aggregation_weights, fedavg};
use crate::federation::server::ServerState;
use crate::numeric::{cosine_lr, ArchitectureConfig, ForwardMode, ModelParams, SgdHyper, Tensor};
use crate::rng::{self, tag};

/// Round-protocol knobs: device count, rounds, participation, local epochs,
/// the negatives policy, and how many features each device shares per round.
#[derive(Debug, Clone, PartialEq)]
pub struct FederationConfig {
    pub n_devices: usize,
    pub rounds: usize,
    pub active_ratio: f64,
    pub local_epochs: usize,
    pub negatives_policy: NegativesPolicy,
    pub share_count: usize,
    pub global_seed: u64,
}

impl Default for FederationConfig {
    fn default() -> Self {
        Self {
            n_devices: 10,
            rounds: 30,
            active_ratio: 1.0,
            local_epochs: 1,
            negatives_policy: NegativesPolicy::RemoteOnly,
            share_count: 64,
            global_seed: 1,
        }
    }
}

impl FederationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_devices == 0 || self.local_epochs == 0 || self.share_count == 0 {
            return Err(Error::InvalidConfig(
                "n_devices, local_epochs, share_count must be positive".into(),
            ));
        }
        if !(self.active_ratio > 0.0 && self.active_ratio <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "active_ratio must lie in (0, 1], got {}",
                self.active_ratio
            )));
        }
        Ok(())
    }
}

/// Everything a pretraining run needs.
#[derive(Debug, Clone)]
pub struct PretrainConfig {
    pub federation: FederationConfig,
    pub contrastive: ContrastiveConfig,
    pub augment: AugmentationSpec,
    pub arch: ArchitectureConfig,
    /// Initial SGD learning rate; decays on the cosine schedule over rounds.
    pub lr0: f64,
    pub sgd: SgdHyper,
}

impl Default for PretrainConfig {
    fn default() -> Self {
        Self {
            federation: FederationConfig::default(),
            contrastive: ContrastiveConfig::default(),
            augment: AugmentationSpec::default(),
            arch: ArchitectureConfig::default(),
            lr0: 0.03,
            sgd: SgdHyper::default(),
        }
    }
}

/// Per-round, per-device log entry. Aggregation weights are absent for the
/// no-aggregation baseline.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    pub round: usize,
    pub device_id: usize,
    pub mean_loss: f64,
    pub lr: f64,
    pub qcl_size: usize,
    pub local_bank_size: usize,
    pub agg_weight: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct PretrainRun {
    pub global_params: ModelParams,
    pub records: Vec<RoundRecord>,
    /// Own-origin features seen in any Q_CL under remote_only; stays 0 in a
    /// correct run.
    pub purity_violations: u64,
}

/// Output of the per-device (no aggregation, no sharing) baseline.
#[derive(Debug, Clone)]
pub struct LocalClRun {
    pub device_params: Vec<ModelParams>,
    pub records: Vec<RoundRecord>,
}

fn check_partitions(cfg: &FederationConfig, partitions: &[Dataset]) -> Result<()> {
    if partitions.len() != cfg.n_devices {
        return Err(Error::InvalidConfig(format!(
            "expected {} device partitions, got {}",
            cfg.n_devices,
            partitions.len()
        )));
    }
    for (i, p) in partitions.iter().enumerate() {
        if p.is_empty() {
            return Err(Error::EmptyInput(format!("device {i} partition is empty")));
        }
        if p.sample_dim() != partitions[0].sample_dim() {
            return Err(Error::InvalidConfig(
                "device partitions disagree on sample dimensions".into(),
            ));
        }
    }
    Ok(())
}

/// ⌈active_ratio·n⌉ distinct device ids, seeded draw, processed in id order.
fn select_active(n: usize, ratio: f64, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let k = ((ratio * n as f64).ceil() as usize).clamp(1, n);
    let mut ids: Vec<usize> = (0..n).collect();
    use rand::seq::SliceRandom;
    ids.shuffle(rng);
    let mut chosen: Vec<usize> = ids.into_iter().take(k).collect();
    chosen.sort_unstable();
    chosen
}

/// Momentum-model features of a seeded subsample of the training partition
/// (the whole partition, shuffled, when it is smaller than `share_count`).
fn upload_features(
    device: &DeviceState,
    share_count: usize,
    round: u32,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<FeatureVec>> {
    let n = device.train_partition.len();
    let mut order: Vec<usize> = (0..n).collect();
    use rand::seq::SliceRandom;
    order.shuffle(rng);
    order.truncate(share_count.min(n));
    let rows: Vec<Vec<f64>> = order
        .iter()
        .map(|&i| device.train_partition.sample_f64(i))
        .collect();
    let batch = Tensor::from_rows(&rows)?;
    let (out, _) = device.momentum_params.forward(&batch, ForwardMode::Project)?;
    (0..out.rows())
        .map(|r| FeatureVec::new(out.row(r).to_vec(), device.device_id, round))
        .collect()
}

/// Runs the full federated pretraining protocol. Fully deterministic given
/// `global_seed`: device selection, minibatch order, augmentation draws,
/// remote sampling, and upload subsampling all derive from per-purpose
/// streams keyed by (seed, device, round).
///
/// Round 0 has no uploaded features yet, so every device falls back to the
/// local-only policy for that round; the same fallback applies whenever no
/// other device has shared features.
pub fn run_pretraining(cfg: &PretrainConfig, partitions: &[Dataset]) -> Result<PretrainRun> {
    cfg.federation.validate()?;
    cfg.contrastive.validate()?;
    cfg.augment.validate()?;
    check_partitions(&cfg.federation, partitions)?;
    let seed = cfg.federation.global_seed;

    let input_dim = partitions[0].sample_dim();
    let global = ModelParams::init(
        input_dim,
        &cfg.arch,
        cfg.contrastive.feature_dim,
        None,
        &mut rng::stream(seed, &[tag::INIT]),
    )?;
    let mut server = ServerState::new(global);
    let mut devices: Vec<DeviceState> = partitions
        .iter()
        .enumerate()
        .map(|(id, p)| {
            DeviceState::new(
                id,
                p.clone(),
                &server.global_params,
                cfg.contrastive.bank_capacity,
                cfg.sgd,
            )
        })
        .collect::<Result<_>>()?;

    let mut records = Vec::new();
    let mut purity_violations = 0u64;

    for round in 0..cfg.federation.rounds {
        let lr = cosine_lr(round, cfg.federation.rounds, cfg.lr0)?;
        let active = select_active(
            cfg.federation.n_devices,
            cfg.federation.active_ratio,
            &mut rng::stream(seed, &[tag::SELECT, round as u64]),
        );

        let mut uploads = Vec::with_capacity(active.len());
        let mut updates = Vec::with_capacity(active.len());
        let mut round_records = Vec::with_capacity(active.len());

        for &id in &active {
            let device = &mut devices[id];
            device.adopt_global(&server.global_params, cfg.sgd);

            let remote_bank = if cfg.federation.negatives_policy.uses_remote() {
                match server.build_remote_bank(
                    id,
                    &mut rng::stream(seed, &[tag::REMOTE_SHUFFLE, id as u64, round as u64]),
                ) {
                    Ok(bank) => Some(bank),
                    Err(Error::NoRemoteFeatures(_)) => None,
                    Err(e) => return Err(e),
                }
            } else {
                None
            };
            let effective_policy = if remote_bank.is_some() {
                cfg.federation.negatives_policy
            } else {
                NegativesPolicy::LocalOnly
            };

            let mut qcl = init_qcl(effective_policy, &device.local_bank, remote_bank.as_ref())?;
            let params = LocalRoundParams {
                policy: effective_policy,
                local_epochs: cfg.federation.local_epochs,
                lr,
                contrastive: &cfg.contrastive,
                augment: &cfg.augment,
                round: round as u32,
            };
            let outcome = local_cl_round(
                device,
                &mut qcl,
                remote_bank.as_ref(),
                &params,
                &mut rng::stream(seed, &[tag::DEVICE_ROUND, id as u64, round as u64]),
            )?;
            purity_violations += outcome.purity_violations;

            let feats = upload_features(
                device,
                cfg.federation.share_count,
                round as u32,
                &mut rng::stream(seed, &[tag::UPLOAD, id as u64, round as u64]),
            )?;
            uploads.push((id, feats));
            updates.push((device.main_params.clone(), device.train_partition.len()));
            round_records.push(RoundRecord {
                round,
                device_id: id,
                mean_loss: outcome.mean_loss,
                lr,
                qcl_size: outcome.qcl_len,
                local_bank_size: device.local_bank.len(),
                agg_weight: None,
            });
        }

        let weights = aggregation_weights(
            &updates.iter().map(|(_, n)| *n).collect::<Vec<usize>>(),
        );
        for (record, &w) in round_records.iter_mut().zip(&weights) {
            record.agg_weight = Some(w);
        }
        server.collect_and_deidentify(uploads)?;
        server.global_params = fedavg(&updates)?;
        server.round_index = round + 1;
        records.extend(round_records);
    }

    Ok(PretrainRun {
        global_params: server.global_params,
        records,
        purity_violations,
    })
}

/// Per-device contrastive pretraining with no aggregation and no sharing:
/// every device trains alone from the common seeded initialization. Banks,
/// momentum model, and optimizer state persist across rounds.
pub fn run_local_cl(cfg: &PretrainConfig, partitions: &[Dataset]) -> Result<LocalClRun> {
    cfg.federation.validate()?;
    cfg.contrastive.validate()?;
    check_partitions(&cfg.federation, partitions)?;
    let seed = cfg.federation.global_seed;

    let input_dim = partitions[0].sample_dim();
    let init = ModelParams::init(
        input_dim,
        &cfg.arch,
        cfg.contrastive.feature_dim,
        None,
        &mut rng::stream(seed, &[tag::INIT]),
    )?;
    let mut devices: Vec<DeviceState> = partitions
        .iter()
        .enumerate()
        .map(|(id, p)| {
            DeviceState::new(id, p.clone(), &init, cfg.contrastive.bank_capacity, cfg.sgd)
        })
        .collect::<Result<_>>()?;

    let mut records = Vec::new();
    for round in 0..cfg.federation.rounds {
        let lr = cosine_lr(round, cfg.federation.rounds, cfg.lr0)?;
        for device in devices.iter_mut() {
            let mut qcl = init_qcl(NegativesPolicy::LocalOnly, &device.local_bank, None)?;
            let params = LocalRoundParams {
                policy: NegativesPolicy::LocalOnly,
                local_epochs: cfg.federation.local_epochs,
                lr,
                contrastive: &cfg.contrastive,
                augment: &cfg.augment,
                round: round as u32,
            };
            let outcome = local_cl_round(
                device,
                &mut qcl,
                None,
                &params,
                &mut rng::stream(
                    seed,
                    &[tag::DEVICE_ROUND, device.device_id as u64, round as u64],
                ),
            )?;
            records.push(RoundRecord {
                round,
                device_id: device.device_id,
                mean_loss: outcome.mean_loss,
                lr,
                qcl_size: outcome.qcl_len,
                local_bank_size: device.local_bank.len(),
                agg_weight: None,
            });
        }
    }
    Ok(LocalClRun {
        device_params: devices.into_iter().map(|d| d.main_params).collect(),
        records,
    })
}

/// The seeded initial model for a dataset shape; what `random_init` ships.
pub fn seeded_init(
    input_dim: usize,
    arch: &ArchitectureConfig,
    feature_dim: usize,
    global_seed: u64,
) -> Result<ModelParams> {
    ModelParams::init(
        input_dim,
        arch,
        feature_dim,
        None,
        &mut rng::stream(global_seed, &[tag::INIT]),
    )
}

/// Reassembles the remote multiset a device would see, for harness checks.
pub fn remote_multiset_for(server: &ServerState, device: usize) -> Vec<Vec<f64>> {
    let mut v: Vec<Vec<f64>> = server
        .download_payload(device)
        .features
        .into_iter()
        .collect();
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite features"));
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_synthetic, partition, PartitionSpec, SyntheticSpec};

    fn tiny_partitions(n_devices: usize) -> Vec<Dataset> {
        let ds = generate_synthetic(&SyntheticSpec {
            n_classes: 3,
            samples_per_class: 20,
            height: 8,
            width: 8,
            seed: 5,
            ..SyntheticSpec::default()
        })
        .unwrap();
        partition(
            &ds,
            &PartitionSpec {
                n_devices,
                ..PartitionSpec::default()
            },
        )
        .unwrap()
    }

    fn tiny_config(n_devices: usize, rounds: usize) -> PretrainConfig {
        PretrainConfig {
            federation: FederationConfig {
                n_devices,
                rounds,
                share_count: 8,
                ..FederationConfig::default()
            },
            contrastive: ContrastiveConfig {
                feature_dim: 8,
                batch_size: 8,
                bank_capacity: 16,
                ..ContrastiveConfig::default()
            },
            arch: ArchitectureConfig {
                encoder_widths: vec![16, 16],
                projection_hidden: 16,
            },
            ..PretrainConfig::default()
        }
    }

    #[test]
    fn zero_rounds_returns_initial_params() {
        let parts = tiny_partitions(3);
        let cfg = tiny_config(3, 0);
        let run = run_pretraining(&cfg, &parts).unwrap();
        let init = seeded_init(
            parts[0].sample_dim(),
            &cfg.arch,
            cfg.contrastive.feature_dim,
            cfg.federation.global_seed,
        )
        .unwrap();
        assert_eq!(run.global_params, init);
        assert!(run.records.is_empty());
    }

    #[test]
    fn full_participation_aggregates_every_device() {
        let parts = tiny_partitions(4);
        let cfg = tiny_config(4, 3);
        let run = run_pretraining(&cfg, &parts).unwrap();
        for round in 0..3 {
            let devices: Vec<usize> = run
                .records
                .iter()
                .filter(|r| r.round == round)
                .map(|r| r.device_id)
                .collect();
            assert_eq!(devices, vec![0, 1, 2, 3], "round {round}");
        }
        // weights sum to 1 per round
        for round in 0..3 {
            let s: f64 = run
                .records
                .iter()
                .filter(|r| r.round == round)
                .map(|r| r.agg_weight.unwrap())
                .sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn same_seed_bit_identical_records() {
        let parts = tiny_partitions(3);
        let cfg = tiny_config(3, 3);
        let a = run_pretraining(&cfg, &parts).unwrap();
        let b = run_pretraining(&cfg, &parts).unwrap();
        assert_eq!(a.records, b.records);
        assert_eq!(a.global_params, b.global_params);
    }

    #[test]
    fn remote_only_run_has_zero_purity_violations() {
        let parts = tiny_partitions(3);
        let mut cfg = tiny_config(3, 4);
        cfg.federation.negatives_policy = NegativesPolicy::RemoteOnly;
        let run = run_pretraining(&cfg, &parts).unwrap();
        assert_eq!(run.purity_violations, 0);
    }

    #[test]
    fn local_cl_records_have_no_aggregation_weights() {
        let parts = tiny_partitions(3);
        let cfg = tiny_config(3, 2);
        let run = run_local_cl(&cfg, &parts).unwrap();
        assert!(!run.records.is_empty());
        assert!(run.records.iter().all(|r| r.agg_weight.is_none()));
        assert_eq!(run.device_params.len(), 3);
    }

    #[test]
    fn partial_participation_selects_ceil() {
        let mut rng = rng::stream(1, &[tag::SELECT, 0]);
        let active = select_active(10, 0.25, &mut rng);
        assert_eq!(active.len(), 3);
        let mut sorted = active.clone();
        sorted.sort_unstable();
        assert_eq!(active, sorted);
    }
}
