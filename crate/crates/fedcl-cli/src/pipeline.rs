//! Shared harness machinery: dataset file layout, train/test handles,
//! per-method pretraining, fine-tune + evaluate cells, and the CSV schemas.

use std::path::PathBuf;

use fedcl_core::data::{label_subset, load_dataset, split_train_test, Dataset};
use fedcl_core::evaluation::{
    aggregate_metrics, evaluate, finetune_federated, finetune_local, AggregateMode, FinetuneMode,
    Metrics,
};
use fedcl_core::federation::{
    fedavg, run_local_cl, run_pretraining, seeded_init, NegativesPolicy, RoundRecord,
};
use fedcl_core::numeric::ModelParams;
use fedcl_core::{Error, Result};

use crate::config::{ExperimentConfig, Method};

/// Training-side handle. Pre-training and fine-tuning only ever see this.
#[derive(Debug, Clone)]
pub struct TrainSplit(Dataset);

/// Test-side handle. Only evaluation accepts it.
#[derive(Debug, Clone)]
pub struct TestSplit(Dataset);

impl TrainSplit {
    pub fn dataset(&self) -> &Dataset {
        &self.0
    }
}

impl TestSplit {
    pub fn dataset(&self) -> &Dataset {
        &self.0
    }
}

#[derive(Debug, Clone)]
pub struct DeviceData {
    pub train: TrainSplit,
    pub test: TestSplit,
}

pub fn data_dir(cfg: &ExperimentConfig) -> PathBuf {
    cfg.out_dir.join("data")
}

pub fn device_file(cfg: &ExperimentConfig, device: usize) -> PathBuf {
    data_dir(cfg).join(format!("device_{device:02}.fds"))
}

pub fn metrics_dir(cfg: &ExperimentConfig) -> PathBuf {
    cfg.out_dir.join("metrics")
}

/// `fcl_remote_only`, `random_init`, `local_cl`: the run directory and
/// metrics-file stem for a method/policy cell.
pub fn run_label(method: Method, policy: NegativesPolicy) -> String {
    match method {
        Method::Fcl => format!("fcl_{}", policy.as_str()),
        other => other.as_str().to_string(),
    }
}

pub fn pretrain_dir(cfg: &ExperimentConfig, label: &str, seed: u64) -> PathBuf {
    cfg.out_dir
        .join("pretrain")
        .join(label)
        .join(format!("seed{seed}"))
}

/// Loads the per-device FDS1 files and applies the seeded stratified split.
/// The same config always reproduces the same handles, so pre-training and
/// fine-tuning agree on what is train and what is test.
pub fn load_device_data(cfg: &ExperimentConfig) -> Result<Vec<DeviceData>> {
    (0..cfg.partition.n_devices)
        .map(|d| {
            let path = device_file(cfg, d);
            let full = load_dataset(&path)?;
            let (train, test) = split_train_test(&full, cfg.split_train_ratio, cfg.split_seed)?;
            Ok(DeviceData {
                train: TrainSplit(train),
                test: TestSplit(test),
            })
        })
        .collect()
}

/// Pre-trained weights: one shared model, or one per device for the
/// no-aggregation baseline.
#[derive(Debug, Clone)]
pub enum PretrainedModels {
    Shared(ModelParams),
    PerDevice(Vec<ModelParams>),
}

impl PretrainedModels {
    pub fn for_device(&self, device: usize) -> &ModelParams {
        match self {
            PretrainedModels::Shared(m) => m,
            PretrainedModels::PerDevice(models) => &models[device],
        }
    }

    /// The initialization federated fine-tuning starts from: the shared
    /// model, or the sample-weighted average of per-device models.
    pub fn federated_init(&self, train_sizes: &[usize]) -> Result<ModelParams> {
        match self {
            PretrainedModels::Shared(m) => Ok(m.clone()),
            PretrainedModels::PerDevice(models) => {
                let updates: Vec<(ModelParams, usize)> = models
                    .iter()
                    .cloned()
                    .zip(train_sizes.iter().copied())
                    .collect();
                fedavg(&updates)
            }
        }
    }
}

pub struct PretrainOutput {
    pub models: PretrainedModels,
    pub records: Vec<RoundRecord>,
    pub purity_violations: u64,
}

/// Pre-trains one (method, policy, seed) cell on the given train handles.
pub fn pretrain_models(
    cfg: &ExperimentConfig,
    method: Method,
    policy: NegativesPolicy,
    seed: u64,
    device_data: &[DeviceData],
) -> Result<PretrainOutput> {
    let partitions: Vec<Dataset> = device_data
        .iter()
        .map(|d| d.train.dataset().clone())
        .collect();
    let pretrain_cfg = cfg.pretrain_config(policy, seed);
    match method {
        Method::RandomInit => {
            let model = seeded_init(
                partitions[0].sample_dim(),
                &cfg.arch,
                cfg.contrastive.feature_dim,
                seed,
            )?;
            Ok(PretrainOutput {
                models: PretrainedModels::Shared(model),
                records: Vec::new(),
                purity_violations: 0,
            })
        }
        Method::LocalCl => {
            let run = run_local_cl(&pretrain_cfg, &partitions)?;
            Ok(PretrainOutput {
                models: PretrainedModels::PerDevice(run.device_params),
                records: run.records,
                purity_violations: 0,
            })
        }
        Method::Fcl => {
            let run = run_pretraining(&pretrain_cfg, &partitions)?;
            Ok(PretrainOutput {
                models: PretrainedModels::Shared(run.global_params),
                records: run.records,
                purity_violations: run.purity_violations,
            })
        }
    }
}

/// One fine-tune + evaluate cell: label subsets per device, fine-tuning in
/// the requested mode, evaluation on every device's test split, and the
/// mode's aggregation convention (device means locally, pooled confusion
/// federated).
pub fn finetune_and_evaluate(
    cfg: &ExperimentConfig,
    models: &PretrainedModels,
    device_data: &[DeviceData],
    mode: FinetuneMode,
    label_fraction: f64,
    run_seed: u64,
) -> Result<Metrics> {
    let ft_cfg = cfg.finetune_config(mode, label_fraction, run_seed);
    let labeled: Vec<Vec<usize>> = device_data
        .iter()
        .enumerate()
        .map(|(d, dd)| {
            label_subset(
                dd.train.dataset(),
                label_fraction,
                cfg.label_selection_seed(run_seed, d),
            )
        })
        .collect::<Result<_>>()?;

    match mode {
        FinetuneMode::Local => {
            let per_device: Vec<Metrics> = device_data
                .iter()
                .enumerate()
                .map(|(d, dd)| {
                    let model = finetune_local(
                        d,
                        dd.train.dataset(),
                        &labeled[d],
                        models.for_device(d),
                        &ft_cfg,
                    )?;
                    evaluate(&model, dd.test.dataset())
                })
                .collect::<Result<_>>()?;
            aggregate_metrics(&per_device, AggregateMode::Local)
        }
        FinetuneMode::Federated => {
            let train_sizes: Vec<usize> = device_data
                .iter()
                .map(|dd| dd.train.dataset().len())
                .collect();
            let init = models.federated_init(&train_sizes)?;
            let devices: Vec<(usize, &Dataset, Vec<usize>)> = device_data
                .iter()
                .enumerate()
                .map(|(d, dd)| (d, dd.train.dataset(), labeled[d].clone()))
                .collect();
            let global = finetune_federated(&devices, &init, &ft_cfg)?;
            let per_device: Vec<Metrics> = device_data
                .iter()
                .map(|dd| evaluate(&global, dd.test.dataset()))
                .collect::<Result<_>>()?;
            aggregate_metrics(&per_device, AggregateMode::Federated)
        }
    }
}

// ---------------------------------------------------------------------------
// CSV schemas
// ---------------------------------------------------------------------------

/// Round-log schema: one row per (round, device).
pub fn rounds_csv(records: &[RoundRecord]) -> String {
    let mut out = String::from("round,device_id,mean_loss,lr,qcl_size,agg_weight\n");
    for r in records {
        let weight = r.agg_weight.map(|w| w.to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.round, r.device_id, r.mean_loss, r.lr, r.qcl_size, weight
        ));
    }
    out
}

pub fn metrics_csv_header(n_classes: usize) -> String {
    let mut cols = vec![
        "method".to_string(),
        "policy".to_string(),
        "label_fraction".to_string(),
        "seed".to_string(),
        "mode".to_string(),
        "mean_recall".to_string(),
        "mean_precision".to_string(),
    ];
    for c in 0..n_classes {
        cols.push(format!("recall_{c}"));
    }
    for c in 0..n_classes {
        cols.push(format!("precision_{c}"));
    }
    cols.join(",") + "\n"
}

pub fn metrics_csv_row(
    method: Method,
    policy: NegativesPolicy,
    label_fraction: f64,
    seed: u64,
    mode: FinetuneMode,
    metrics: &Metrics,
) -> String {
    let policy_str = match method {
        Method::Fcl => policy.as_str().to_string(),
        _ => "none".to_string(),
    };
    let mut cols = vec![
        method.as_str().to_string(),
        policy_str,
        label_fraction.to_string(),
        seed.to_string(),
        mode.as_str().to_string(),
        metrics.mean_recall.to_string(),
        metrics.mean_precision.to_string(),
    ];
    cols.extend(metrics.per_class_recall.iter().map(|v| v.to_string()));
    cols.extend(metrics.per_class_precision.iter().map(|v| v.to_string()));
    cols.join(",") + "\n"
}

/// A parsed metrics row; the per-class tails are kept but unused by report.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedMetricsRow {
    pub method: String,
    pub policy: String,
    pub label_fraction: f64,
    pub seed: u64,
    pub mode: String,
    pub mean_recall: f64,
    pub mean_precision: f64,
}

/// Parses a metrics CSV, verifying the fixed leading columns. Schema
/// violations name the offending file.
pub fn parse_metrics_csv(path_label: &str, text: &str) -> Result<Vec<ParsedMetricsRow>> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::MalformedFile {
        path: path_label.to_string(),
        reason: "empty metrics file".into(),
    })?;
    let expected = [
        "method",
        "policy",
        "label_fraction",
        "seed",
        "mode",
        "mean_recall",
        "mean_precision",
    ];
    let cols: Vec<&str> = header.split(',').collect();
    if cols.len() < expected.len() || cols[..expected.len()] != expected {
        return Err(Error::MalformedFile {
            path: path_label.to_string(),
            reason: format!("metrics schema mismatch: header '{header}'"),
        });
    }
    let parse_f = |path_label: &str, v: &str| -> Result<f64> {
        v.parse().map_err(|_| Error::MalformedFile {
            path: path_label.to_string(),
            reason: format!("bad numeric field '{v}'"),
        })
    };
    lines
        .filter(|l| !l.trim().is_empty())
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() < expected.len() {
                return Err(Error::MalformedFile {
                    path: path_label.to_string(),
                    reason: format!("short row '{line}'"),
                });
            }
            Ok(ParsedMetricsRow {
                method: f[0].to_string(),
                policy: f[1].to_string(),
                label_fraction: parse_f(path_label, f[2])?,
                seed: f[3].parse().map_err(|_| Error::MalformedFile {
                    path: path_label.to_string(),
                    reason: format!("bad seed '{}'", f[3]),
                })?,
                mode: f[4].to_string(),
                mean_recall: parse_f(path_label, f[5])?,
                mean_precision: parse_f(path_label, f[6])?,
            })
        })
        .collect()
}

pub fn write_text(path: &std::path::Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent.display().to_string(), e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path.display().to_string(), e))
}
