//! Stage two: supervised fine-tuning of the pre-trained encoder with
//! limited labels, locally per device or collaboratively via weighted
//! aggregation.

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::federation::fedavg;
use crate::numeric::{
    adam_step, backward, cross_entropy, AdamHyper, ForwardMode, Layer, ModelParams,
    OptimizerState, Tensor,
};
use crate::rng::{self, tag};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FinetuneMode {
    Local,
    Federated,
}

impl FinetuneMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            FinetuneMode::Local => "local",
            FinetuneMode::Federated => "federated",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "local" => Ok(FinetuneMode::Local),
            "federated" => Ok(FinetuneMode::Federated),
            other => Err(Error::InvalidConfig(format!(
                "unknown fine-tuning mode '{other}'"
            ))),
        }
    }
}

/// Fine-tuning schedule. Local mode runs `epochs` with step decays; the
/// federated mode runs `rounds` of `local_epochs_per_round` at constant lr.
#[derive(Debug, Clone, PartialEq)]
pub struct FinetuneConfig {
    pub mode: FinetuneMode,
    pub label_fraction: f64,
    pub epochs: usize,
    pub rounds: usize,
    pub local_epochs_per_round: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub lr_decay_factor: f64,
    /// 1-based epochs at which the local-mode lr multiplies by the factor.
    pub lr_decay_epochs: Vec<usize>,
    /// Linear-probe mode: freeze the encoder, train the head only.
    pub freeze_encoder: bool,
    pub adam: AdamHyper,
    pub seed: u64,
}

impl Default for FinetuneConfig {
    fn default() -> Self {
        Self {
            mode: FinetuneMode::Federated,
            label_fraction: 0.1,
            epochs: 20,
            rounds: 100,
            local_epochs_per_round: 1,
            batch_size: 16,
            lr: 1e-4,
            lr_decay_factor: 0.2,
            lr_decay_epochs: vec![12, 16],
            freeze_encoder: false,
            adam: AdamHyper::default(),
            seed: 17,
        }
    }
}

impl FinetuneConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.label_fraction > 0.0 && self.label_fraction <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "label fraction must lie in (0, 1], got {}",
                self.label_fraction
            )));
        }
        if self.batch_size == 0 || self.local_epochs_per_round == 0 {
            return Err(Error::InvalidConfig(
                "batch_size and local_epochs_per_round must be positive".into(),
            ));
        }
        if self.lr <= 0.0 || self.lr_decay_factor <= 0.0 {
            return Err(Error::InvalidConfig(
                "learning rate and decay factor must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Local-mode learning rate for a 1-based epoch index.
    pub fn lr_for_epoch(&self, epoch: usize) -> f64 {
        let decays = self.lr_decay_epochs.iter().filter(|&&d| epoch >= d).count();
        self.lr * self.lr_decay_factor.powi(decays as i32)
    }
}

/// The fine-tuning network: the pre-trained encoder with a fresh classifier
/// head attached to the encoder output. The projection head is carried
/// along unchanged but is not on the classification path.
pub fn attach_classifier(
    pretrained: &ModelParams,
    n_classes: usize,
    seed: u64,
) -> Result<ModelParams> {
    if n_classes == 0 {
        return Err(Error::InvalidConfig("n_classes must be positive".into()));
    }
    pretrained.validate()?;
    let mut rng = rng::stream(seed, &[tag::FINETUNE_HEAD]);
    let enc_out = pretrained.encoder_out_dim();
    let scale = (6.0 / (enc_out + n_classes) as f64).sqrt();
    use rand::Rng;
    let values: Vec<f64> = (0..n_classes * enc_out)
        .map(|_| (rng.random::<f64>() * 2.0 - 1.0) * scale)
        .collect();
    let head = Layer {
        weight: Tensor::new(vec![n_classes, enc_out], values)?,
        bias: Tensor::zeros(vec![n_classes]),
    };
    let mut params = pretrained.clone();
    params.classifier = Some(head);
    params.validate()?;
    Ok(params)
}

/// One epoch of Adam on the labeled subset. Returns the mean loss over
/// steps. Minibatch order derives from (seed, device, epoch) so a federated
/// round with one device replays exactly as local fine-tuning.
fn train_epoch(
    params: &mut ModelParams,
    optimizer: &mut OptimizerState,
    train: &Dataset,
    labeled: &[usize],
    cfg: &FinetuneConfig,
    lr: f64,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    let mut order = labeled.to_vec();
    order.shuffle(rng);
    let mut loss_sum = 0.0;
    let mut steps = 0usize;
    for chunk in order.chunks(cfg.batch_size) {
        let rows: Vec<Vec<f64>> = chunk.iter().map(|&i| train.sample_f64(i)).collect();
        let targets: Vec<usize> = chunk.iter().map(|&i| usize::from(train.labels[i])).collect();
        let batch = Tensor::from_rows(&rows)?;
        let (logits, stash) = params.forward(&batch, ForwardMode::Classify)?;
        let (loss, grad_logits) = cross_entropy(&logits, &targets)?;
        let mut grads = backward(params, &stash, &grad_logits)?;
        if cfg.freeze_encoder {
            for layer in &mut grads.encoder {
                for t in [&mut layer.weight, &mut layer.bias] {
                    for v in t.values_mut() {
                        *v = 0.0;
                    }
                }
            }
        }
        adam_step(params, &grads, optimizer, lr)?;
        loss_sum += loss;
        steps += 1;
    }
    Ok(loss_sum / steps.max(1) as f64)
}

/// Independent fine-tuning of one device on its labeled subset.
pub fn finetune_local(
    device_id: usize,
    train: &Dataset,
    labeled: &[usize],
    pretrained: &ModelParams,
    cfg: &FinetuneConfig,
) -> Result<ModelParams> {
    cfg.validate()?;
    if labeled.is_empty() {
        return Err(Error::EmptyInput(format!(
            "device {device_id} has no labeled samples"
        )));
    }
    let mut params = attach_classifier(pretrained, train.n_classes, cfg.seed)?;
    let mut optimizer = OptimizerState::adam(&params, cfg.adam);
    for epoch in 0..cfg.epochs {
        let lr = cfg.lr_for_epoch(epoch + 1);
        train_epoch(
            &mut params,
            &mut optimizer,
            train,
            labeled,
            cfg,
            lr,
            &mut rng::stream(cfg.seed, &[tag::FINETUNE_EPOCH, device_id as u64, epoch as u64]),
        )?;
    }
    Ok(params)
}

/// Collaborative fine-tuning: rounds of local Adam epochs aggregated with
/// weights proportional to labeled counts. Devices without labels sit out.
/// Per-device Adam moments persist across rounds.
pub fn finetune_federated(
    devices: &[(usize, &Dataset, Vec<usize>)],
    pretrained: &ModelParams,
    cfg: &FinetuneConfig,
) -> Result<ModelParams> {
    cfg.validate()?;
    let participants: Vec<&(usize, &Dataset, Vec<usize>)> =
        devices.iter().filter(|(_, _, l)| !l.is_empty()).collect();
    if participants.is_empty() {
        return Err(Error::EmptyInput(
            "federated fine-tuning needs at least one device with labels".into(),
        ));
    }
    let n_classes = participants[0].1.n_classes;
    let mut global = attach_classifier(pretrained, n_classes, cfg.seed)?;
    let mut optimizers: Vec<OptimizerState> = participants
        .iter()
        .map(|_| OptimizerState::adam(&global, cfg.adam))
        .collect();

    for round in 0..cfg.rounds {
        let mut updates = Vec::with_capacity(participants.len());
        for (slot, (id, train, labeled)) in participants.iter().enumerate() {
            let mut local = global.clone();
            for e in 0..cfg.local_epochs_per_round {
                let epoch = round * cfg.local_epochs_per_round + e;
                train_epoch(
                    &mut local,
                    &mut optimizers[slot],
                    train,
                    labeled,
                    cfg,
                    cfg.lr,
                    &mut rng::stream(cfg.seed, &[tag::FINETUNE_EPOCH, *id as u64, epoch as u64]),
                )?;
            }
            updates.push((local, labeled.len()));
        }
        global = fedavg(&updates)?;
    }
    Ok(global)
}
