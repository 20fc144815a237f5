//! `pretrain`: run the configured pretraining method for every seed and
//! write checkpoints, round logs, and manifests.

use std::path::PathBuf;
use std::time::Instant;

use fedcl_core::federation::save_checkpoint;
use fedcl_core::{Error, Result};

use crate::config::{ExperimentConfig, Method};
use crate::manifest::RunManifest;
use crate::pipeline::{
    load_device_data, pretrain_dir, pretrain_models, rounds_csv, run_label, write_text,
    PretrainedModels,
};

pub struct PretrainOutcome {
    pub run_dirs: Vec<PathBuf>,
}

pub fn cmd_pretrain(cfg: &ExperimentConfig) -> Result<PretrainOutcome> {
    cfg.validate()?;
    let device_data = load_device_data(cfg)?;
    let label = run_label(cfg.method, cfg.policy);
    let mut run_dirs = Vec::new();

    for &seed in &cfg.seeds {
        let start = Instant::now();
        let out = pretrain_models(cfg, cfg.method, cfg.policy, seed, &device_data)?;
        let dir = pretrain_dir(cfg, &label, seed);
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(dir.display().to_string(), e))?;

        let mut manifest = RunManifest::new(&cfg.to_text());
        match &out.models {
            PretrainedModels::Shared(model) => {
                let path = dir.join("checkpoint.fcl");
                save_checkpoint(&path, model)?;
                manifest.add_artifact("checkpoint.fcl", &path)?;
            }
            PretrainedModels::PerDevice(models) => {
                for (d, model) in models.iter().enumerate() {
                    let path = dir.join(format!("checkpoint_device_{d:02}.fcl"));
                    save_checkpoint(&path, model)?;
                    manifest.add_artifact(&format!("checkpoint_device_{d:02}.fcl"), &path)?;
                }
            }
        }
        let rounds_path = dir.join("rounds.csv");
        write_text(&rounds_path, &rounds_csv(&out.records))?;
        manifest.add_artifact("rounds.csv", &rounds_path)?;

        if cfg.method == Method::Fcl {
            manifest.note(
                "qcl_origin_purity",
                if out.purity_violations == 0 {
                    "passed: 0 own-origin features observed in Q_CL".to_string()
                } else {
                    format!("FAILED: {} own-origin features in Q_CL", out.purity_violations)
                },
            );
        }
        manifest.record_time("pretrain", start.elapsed().as_millis() as u64);
        manifest.write(dir.join("manifest.json"))?;
        run_dirs.push(dir);
    }
    Ok(PretrainOutcome { run_dirs })
}
