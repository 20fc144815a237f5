//! Experiment configuration: a flat key=value file with dotted section
//! prefixes (`federation.rounds=30`). Unknown keys and malformed values are
//! validation errors; the canonical serialization round-trips.

use std::path::{Path, PathBuf};

use fedcl_core::contrastive::{AugmentationSpec, ContrastiveConfig};
use fedcl_core::data::{PartitionSpec, SkewMode, SyntheticSpec};
use fedcl_core::evaluation::{FinetuneConfig, FinetuneMode};
use fedcl_core::federation::{FederationConfig, NegativesPolicy, PretrainConfig};
use fedcl_core::numeric::{ArchitectureConfig, SgdHyper};
use fedcl_core::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    RandomInit,
    LocalCl,
    Fcl,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::RandomInit => "random_init",
            Method::LocalCl => "local_cl",
            Method::Fcl => "fcl",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "random_init" => Ok(Method::RandomInit),
            "local_cl" => Ok(Method::LocalCl),
            "fcl" => Ok(Method::Fcl),
            other => Err(Error::InvalidConfig(format!("unknown method '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeSelection {
    Local,
    Federated,
    Both,
}

impl ModeSelection {
    pub fn as_str(&self) -> &'static str {
        match self {
            ModeSelection::Local => "local",
            ModeSelection::Federated => "federated",
            ModeSelection::Both => "both",
        }
    }

    pub fn modes(&self) -> Vec<FinetuneMode> {
        match self {
            ModeSelection::Local => vec![FinetuneMode::Local],
            ModeSelection::Federated => vec![FinetuneMode::Federated],
            ModeSelection::Both => vec![FinetuneMode::Local, FinetuneMode::Federated],
        }
    }
}

/// Every knob of the experiment grid. Desk-scale defaults; the paper-scale
/// values (128-d features, 100 rounds, batch 128) stay reachable by config.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub data: SyntheticSpec,
    pub partition: PartitionSpec,
    pub split_train_ratio: f64,
    pub split_seed: u64,
    pub arch: ArchitectureConfig,
    pub contrastive: ContrastiveConfig,
    pub augment: AugmentationSpec,
    pub pretrain_rounds: usize,
    pub active_ratio: f64,
    pub local_epochs: usize,
    pub share_count: usize,
    pub lr0: f64,
    pub sgd_momentum: f64,
    pub weight_decay: f64,
    pub finetune: FinetuneConfig,
    pub finetune_mode: ModeSelection,
    pub label_fractions: Vec<f64>,
    pub label_seed: u64,
    pub method: Method,
    pub policy: NegativesPolicy,
    pub seeds: Vec<u64>,
    pub ablate_label_fraction: f64,
    pub out_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            data: SyntheticSpec::default(),
            partition: PartitionSpec::default(),
            split_train_ratio: 0.6,
            split_seed: 13,
            arch: ArchitectureConfig::default(),
            contrastive: ContrastiveConfig::default(),
            augment: AugmentationSpec::default(),
            pretrain_rounds: 30,
            active_ratio: 1.0,
            local_epochs: 1,
            share_count: 64,
            lr0: 0.03,
            sgd_momentum: 0.9,
            weight_decay: 1e-4,
            finetune: FinetuneConfig {
                rounds: 30,
                ..FinetuneConfig::default()
            },
            finetune_mode: ModeSelection::Both,
            label_fractions: vec![0.1, 0.2, 0.4, 0.8],
            label_seed: 17,
            method: Method::Fcl,
            policy: NegativesPolicy::RemoteOnly,
            seeds: vec![1, 2, 3, 4, 5],
            ablate_label_fraction: 0.1,
            out_dir: PathBuf::from("out"),
        }
    }
}

fn bad(key: &str, value: &str, what: &str) -> Error {
    Error::InvalidConfig(format!("key '{key}': cannot parse '{value}' as {what}"))
}

fn as_f64(key: &str, v: &str) -> Result<f64> {
    v.parse().map_err(|_| bad(key, v, "a number"))
}

fn as_usize(key: &str, v: &str) -> Result<usize> {
    v.parse().map_err(|_| bad(key, v, "an integer"))
}

fn as_u64(key: &str, v: &str) -> Result<u64> {
    v.parse().map_err(|_| bad(key, v, "an integer"))
}

fn as_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(bad(key, v, "true/false")),
    }
}

fn as_f64_list(key: &str, v: &str) -> Result<Vec<f64>> {
    v.split(',').map(|p| as_f64(key, p.trim())).collect()
}

fn as_usize_list(key: &str, v: &str) -> Result<Vec<usize>> {
    if v.trim().is_empty() {
        return Ok(Vec::new());
    }
    v.split(',').map(|p| as_usize(key, p.trim())).collect()
}

fn as_u64_list(key: &str, v: &str) -> Result<Vec<u64>> {
    v.split(',').map(|p| as_u64(key, p.trim())).collect()
}

fn as_range(key: &str, v: &str) -> Result<(f64, f64)> {
    let parts = as_f64_list(key, v)?;
    if parts.len() != 2 {
        return Err(bad(key, v, "a 'lo,hi' range"));
    }
    Ok((parts[0], parts[1]))
}

impl ExperimentConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::parse_str(&text)
    }

    pub fn parse_str(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::InvalidConfig(format!("line {}: expected key=value, got '{line}'", lineno + 1))
            })?;
            cfg.apply(key.trim(), value.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "data.n_classes" => self.data.n_classes = as_usize(key, value)?,
            "data.samples_per_class" => self.data.samples_per_class = as_usize(key, value)?,
            "data.height" => self.data.height = as_usize(key, value)?,
            "data.width" => self.data.width = as_usize(key, value)?,
            "data.channels" => self.data.channels = as_usize(key, value)?,
            "data.blob_radius" => self.data.blob_radius = as_f64(key, value)?,
            "data.jitter" => self.data.jitter = as_f64(key, value)?,
            "data.seed" => self.data.seed = as_u64(key, value)?,
            "partition.n_devices" => self.partition.n_devices = as_usize(key, value)?,
            "partition.skew_mode" => {
                self.partition.skew_mode = match value {
                    "dominant_class" => SkewMode::DominantClass,
                    "dirichlet" => SkewMode::Dirichlet,
                    _ => return Err(bad(key, value, "dominant_class|dirichlet")),
                }
            }
            "partition.skew_param" => self.partition.skew_param = as_f64(key, value)?,
            "partition.seed" => self.partition.seed = as_u64(key, value)?,
            "split.train_ratio" => self.split_train_ratio = as_f64(key, value)?,
            "split.seed" => self.split_seed = as_u64(key, value)?,
            "arch.encoder_widths" => self.arch.encoder_widths = as_usize_list(key, value)?,
            "arch.projection_hidden" => self.arch.projection_hidden = as_usize(key, value)?,
            "contrastive.tau" => self.contrastive.tau = as_f64(key, value)?,
            "contrastive.feature_dim" => self.contrastive.feature_dim = as_usize(key, value)?,
            "contrastive.batch_size" => self.contrastive.batch_size = as_usize(key, value)?,
            "contrastive.bank_capacity" => self.contrastive.bank_capacity = as_usize(key, value)?,
            "contrastive.ema_momentum" => self.contrastive.ema_momentum = as_f64(key, value)?,
            "augment.crop_scale" => self.augment.crop_scale = as_range(key, value)?,
            "augment.flip_prob" => self.augment.flip_prob = as_f64(key, value)?,
            "augment.rotations" => {
                self.augment.rotations = as_usize_list(key, value)?
                    .into_iter()
                    .map(|r| r as u16)
                    .collect()
            }
            "augment.brightness" => self.augment.brightness = as_range(key, value)?,
            "augment.contrast" => self.augment.contrast = as_range(key, value)?,
            "augment.noise_sigma" => self.augment.gaussian_noise_sigma = as_f64(key, value)?,
            "augment.mask_prob" => self.augment.mask_prob = as_f64(key, value)?,
            "augment.scale" => self.augment.scale = as_range(key, value)?,
            "federation.rounds" => self.pretrain_rounds = as_usize(key, value)?,
            "federation.active_ratio" => self.active_ratio = as_f64(key, value)?,
            "federation.local_epochs" => self.local_epochs = as_usize(key, value)?,
            "federation.share_count" => self.share_count = as_usize(key, value)?,
            "federation.lr0" => self.lr0 = as_f64(key, value)?,
            "federation.sgd_momentum" => self.sgd_momentum = as_f64(key, value)?,
            "federation.weight_decay" => self.weight_decay = as_f64(key, value)?,
            "finetune.mode" => {
                self.finetune_mode = match value {
                    "local" => ModeSelection::Local,
                    "federated" => ModeSelection::Federated,
                    "both" => ModeSelection::Both,
                    _ => return Err(bad(key, value, "local|federated|both")),
                }
            }
            "finetune.label_fractions" => self.label_fractions = as_f64_list(key, value)?,
            "finetune.label_seed" => self.label_seed = as_u64(key, value)?,
            "finetune.local_epochs" => self.finetune.epochs = as_usize(key, value)?,
            "finetune.rounds" => self.finetune.rounds = as_usize(key, value)?,
            "finetune.local_epochs_per_round" => {
                self.finetune.local_epochs_per_round = as_usize(key, value)?
            }
            "finetune.batch_size" => self.finetune.batch_size = as_usize(key, value)?,
            "finetune.lr" => self.finetune.lr = as_f64(key, value)?,
            "finetune.lr_decay_factor" => self.finetune.lr_decay_factor = as_f64(key, value)?,
            "finetune.lr_decay_epochs" => {
                self.finetune.lr_decay_epochs = as_usize_list(key, value)?
            }
            "finetune.freeze_encoder" => self.finetune.freeze_encoder = as_bool(key, value)?,
            "experiment.method" => self.method = Method::parse(value)?,
            "experiment.policy" => self.policy = NegativesPolicy::parse(value)?,
            "experiment.seeds" => self.seeds = as_u64_list(key, value)?,
            "experiment.ablate_label_fraction" => {
                self.ablate_label_fraction = as_f64(key, value)?
            }
            "experiment.out" => self.out_dir = PathBuf::from(value),
            other => {
                return Err(Error::InvalidConfig(format!(
                    "unknown config key '{other}'"
                )))
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.data.validate()?;
        self.partition.validate()?;
        self.contrastive.validate()?;
        self.augment.validate()?;
        self.finetune.validate()?;
        if !(self.split_train_ratio > 0.0 && self.split_train_ratio < 1.0) {
            return Err(Error::InvalidConfig(
                "split.train_ratio must lie in (0, 1)".into(),
            ));
        }
        if self.seeds.is_empty() {
            return Err(Error::InvalidConfig("experiment.seeds must be nonempty".into()));
        }
        if self.label_fractions.is_empty()
            || self
                .label_fractions
                .iter()
                .any(|&l| !(l > 0.0 && l <= 1.0))
        {
            return Err(Error::InvalidConfig(
                "finetune.label_fractions must be fractions in (0, 1]".into(),
            ));
        }
        if !(self.ablate_label_fraction > 0.0 && self.ablate_label_fraction <= 1.0) {
            return Err(Error::InvalidConfig(
                "experiment.ablate_label_fraction must lie in (0, 1]".into(),
            ));
        }
        // Build one pretraining config to run the cross-field checks.
        self.pretrain_config(self.policy, 0).federation.validate()?;
        Ok(())
    }

    /// Canonical key=value serialization, sorted by key. Feeding this text
    /// back through the parser reproduces the config.
    pub fn to_text(&self) -> String {
        let fl = |v: f64| format!("{v}");
        let list_u = |v: &[usize]| {
            v.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        let list_f = |v: &[f64]| v.iter().map(|x| fl(*x)).collect::<Vec<_>>().join(",");
        let range = |(a, b): (f64, f64)| format!("{},{}", fl(a), fl(b));
        let mut lines = vec![
            format!("arch.encoder_widths={}", list_u(&self.arch.encoder_widths)),
            format!("arch.projection_hidden={}", self.arch.projection_hidden),
            format!("augment.brightness={}", range(self.augment.brightness)),
            format!("augment.contrast={}", range(self.augment.contrast)),
            format!("augment.crop_scale={}", range(self.augment.crop_scale)),
            format!("augment.flip_prob={}", fl(self.augment.flip_prob)),
            format!("augment.mask_prob={}", fl(self.augment.mask_prob)),
            format!("augment.noise_sigma={}", fl(self.augment.gaussian_noise_sigma)),
            format!(
                "augment.rotations={}",
                self.augment
                    .rotations
                    .iter()
                    .map(|r| r.to_string())
                    .collect::<Vec<_>>()
                    .join(",")
            ),
            format!("augment.scale={}", range(self.augment.scale)),
            format!("contrastive.bank_capacity={}", self.contrastive.bank_capacity),
            format!("contrastive.batch_size={}", self.contrastive.batch_size),
            format!("contrastive.ema_momentum={}", fl(self.contrastive.ema_momentum)),
            format!("contrastive.feature_dim={}", self.contrastive.feature_dim),
            format!("contrastive.tau={}", fl(self.contrastive.tau)),
            format!("data.blob_radius={}", fl(self.data.blob_radius)),
            format!("data.channels={}", self.data.channels),
            format!("data.height={}", self.data.height),
            format!("data.jitter={}", fl(self.data.jitter)),
            format!("data.n_classes={}", self.data.n_classes),
            format!("data.samples_per_class={}", self.data.samples_per_class),
            format!("data.seed={}", self.data.seed),
            format!("data.width={}", self.data.width),
            format!(
                "experiment.ablate_label_fraction={}",
                fl(self.ablate_label_fraction)
            ),
            format!("experiment.method={}", self.method.as_str()),
            format!("experiment.out={}", self.out_dir.display()),
            format!("experiment.policy={}", self.policy.as_str()),
            format!(
                "experiment.seeds={}",
                self.seeds
                    .iter()
                    .map(|s| s.to_string())
                    .collect::<Vec<_>>()
                    .join(",")
            ),
            format!("federation.active_ratio={}", fl(self.active_ratio)),
            format!("federation.local_epochs={}", self.local_epochs),
            format!("federation.lr0={}", fl(self.lr0)),
            format!("federation.rounds={}", self.pretrain_rounds),
            format!("federation.sgd_momentum={}", fl(self.sgd_momentum)),
            format!("federation.share_count={}", self.share_count),
            format!("federation.weight_decay={}", fl(self.weight_decay)),
            format!("finetune.batch_size={}", self.finetune.batch_size),
            format!("finetune.freeze_encoder={}", self.finetune.freeze_encoder),
            format!("finetune.label_fractions={}", list_f(&self.label_fractions)),
            format!("finetune.label_seed={}", self.label_seed),
            format!("finetune.local_epochs={}", self.finetune.epochs),
            format!(
                "finetune.local_epochs_per_round={}",
                self.finetune.local_epochs_per_round
            ),
            format!("finetune.lr={}", fl(self.finetune.lr)),
            format!(
                "finetune.lr_decay_epochs={}",
                list_u(&self.finetune.lr_decay_epochs)
            ),
            format!("finetune.lr_decay_factor={}", fl(self.finetune.lr_decay_factor)),
            format!("finetune.mode={}", self.finetune_mode.as_str()),
            format!("finetune.rounds={}", self.finetune.rounds),
            format!("partition.n_devices={}", self.partition.n_devices),
            format!("partition.seed={}", self.partition.seed),
            format!("partition.skew_mode={}", match self.partition.skew_mode {
                SkewMode::DominantClass => "dominant_class",
                SkewMode::Dirichlet => "dirichlet",
            }),
            format!("partition.skew_param={}", fl(self.partition.skew_param)),
            format!("split.seed={}", self.split_seed),
            format!("split.train_ratio={}", fl(self.split_train_ratio)),
        ];
        lines.sort();
        let mut text = lines.join("\n");
        text.push('\n');
        text
    }

    /// The pretraining configuration for one (policy, run seed) cell.
    pub fn pretrain_config(&self, policy: NegativesPolicy, run_seed: u64) -> PretrainConfig {
        PretrainConfig {
            federation: FederationConfig {
                n_devices: self.partition.n_devices,
                rounds: self.pretrain_rounds,
                active_ratio: self.active_ratio,
                local_epochs: self.local_epochs,
                negatives_policy: policy,
                share_count: self.share_count,
                global_seed: run_seed,
            },
            contrastive: self.contrastive.clone(),
            augment: self.augment.clone(),
            arch: self.arch.clone(),
            lr0: self.lr0,
            sgd: SgdHyper {
                momentum: self.sgd_momentum,
                weight_decay: self.weight_decay,
            },
        }
    }

    /// The fine-tuning configuration for one (L, mode, run seed) cell.
    pub fn finetune_config(
        &self,
        mode: FinetuneMode,
        label_fraction: f64,
        run_seed: u64,
    ) -> FinetuneConfig {
        FinetuneConfig {
            mode,
            label_fraction,
            seed: fedcl_core::rng::derive_seed(run_seed, &[0xf17e]),
            ..self.finetune.clone()
        }
    }

    /// Seed for a device's labeled-subset selection in one run.
    pub fn label_selection_seed(&self, run_seed: u64, device: usize) -> u64 {
        fedcl_core::rng::derive_seed(self.label_seed, &[run_seed, device as u64])
    }
}
