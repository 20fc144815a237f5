//! Dense encoder / projection / classifier network with hand-rolled
//! forward and reverse passes.
//!
//! The network is a chain of affine layers with ReLU after every layer
//! except the last layer of each head (encoder output, projection output,
//! classifier logits stay linear). Projection outputs are L2-normalized per
//! row so dot products behave as cosine similarities.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::numeric::tensor::{dot, Tensor};

/// One affine layer: `weight` is `[out × in]`, `bias` is `[out]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weight: Tensor,
    pub bias: Tensor,
}

impl Layer {
    pub fn zeros(out_dim: usize, in_dim: usize) -> Self {
        Self {
            weight: Tensor::zeros(vec![out_dim, in_dim]),
            bias: Tensor::zeros(vec![out_dim]),
        }
    }

    pub fn in_dim(&self) -> usize {
        self.weight.shape()[1]
    }

    pub fn out_dim(&self) -> usize {
        self.weight.shape()[0]
    }
}

/// Hidden/output widths of the encoder and the projection head.
#[derive(Debug, Clone, PartialEq)]
pub struct ArchitectureConfig {
    /// Widths of the encoder layers, e.g. `[128, 128]`.
    pub encoder_widths: Vec<usize>,
    /// Width of the first projection layer; the second projects to the
    /// feature dimension.
    pub projection_hidden: usize,
}

impl Default for ArchitectureConfig {
    fn default() -> Self {
        Self {
            encoder_widths: vec![128, 128],
            projection_hidden: 128,
        }
    }
}

/// All weights of the encoder, the 2-layer projection head, and the optional
/// classifier head. Gradients use the same container, aligned tensor by
/// tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub encoder: Vec<Layer>,
    pub projection: Vec<Layer>,
    pub classifier: Option<Layer>,
}

/// Which head terminates the forward pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ForwardMode {
    Encode,
    Project,
    Classify,
}

impl ModelParams {
    /// Seeded Xavier-uniform initialization of encoder + projection
    /// (+ classifier when `n_classes` is given).
    pub fn init(
        input_dim: usize,
        arch: &ArchitectureConfig,
        feature_dim: usize,
        n_classes: Option<usize>,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self> {
        if input_dim == 0 || feature_dim == 0 || arch.encoder_widths.is_empty() {
            return Err(Error::InvalidConfig(
                "input_dim, feature_dim and encoder widths must be positive".into(),
            ));
        }
        let mut encoder = Vec::new();
        let mut prev = input_dim;
        for &w in &arch.encoder_widths {
            encoder.push(init_layer(w, prev, rng));
            prev = w;
        }
        let projection = vec![
            init_layer(arch.projection_hidden, prev, rng),
            init_layer(feature_dim, arch.projection_hidden, rng),
        ];
        let classifier = n_classes.map(|k| init_layer(k, prev, rng));
        let params = Self {
            encoder,
            projection,
            classifier,
        };
        params.validate()?;
        Ok(params)
    }

    /// Checks layer dimension chaining and the 2-layer projection contract.
    pub fn validate(&self) -> Result<()> {
        if self.encoder.is_empty() {
            return Err(Error::InvalidConfig("encoder has no layers".into()));
        }
        if self.projection.len() != 2 {
            return Err(Error::InvalidConfig(format!(
                "projection head must have exactly 2 layers, got {}",
                self.projection.len()
            )));
        }
        let mut prev = self.encoder[0].in_dim();
        for (i, l) in self.encoder.iter().enumerate() {
            if l.in_dim() != prev {
                return Err(Error::DimensionMismatch {
                    layer: format!("encoder layer {i}"),
                    expected: prev,
                    got: l.in_dim(),
                });
            }
            if l.bias.len() != l.out_dim() {
                return Err(Error::ShapeMismatch {
                    context: format!("encoder layer {i} bias"),
                    expected: vec![l.out_dim()],
                    got: l.bias.shape().to_vec(),
                });
            }
            prev = l.out_dim();
        }
        let enc_out = prev;
        let mut p = enc_out;
        for (i, l) in self.projection.iter().enumerate() {
            if l.in_dim() != p {
                return Err(Error::DimensionMismatch {
                    layer: format!("projection layer {i}"),
                    expected: p,
                    got: l.in_dim(),
                });
            }
            p = l.out_dim();
        }
        if let Some(c) = &self.classifier {
            if c.in_dim() != enc_out {
                return Err(Error::DimensionMismatch {
                    layer: "classifier".into(),
                    expected: enc_out,
                    got: c.in_dim(),
                });
            }
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.encoder[0].in_dim()
    }

    pub fn encoder_out_dim(&self) -> usize {
        self.encoder.last().expect("validated").out_dim()
    }

    pub fn feature_dim(&self) -> usize {
        self.projection[1].out_dim()
    }

    /// A gradient container of matching shape, all zeros.
    pub fn zeros_like(&self) -> Self {
        Self {
            encoder: self
                .encoder
                .iter()
                .map(|l| Layer::zeros(l.out_dim(), l.in_dim()))
                .collect(),
            projection: self
                .projection
                .iter()
                .map(|l| Layer::zeros(l.out_dim(), l.in_dim()))
                .collect(),
            classifier: self
                .classifier
                .as_ref()
                .map(|l| Layer::zeros(l.out_dim(), l.in_dim())),
        }
    }

    pub fn same_architecture(&self, other: &Self) -> bool {
        let dims = |p: &Self| -> Vec<(usize, usize)> {
            p.iter_tensors().map(|t| (t.rows(), t.cols())).collect()
        };
        self.encoder.len() == other.encoder.len()
            && self.classifier.is_some() == other.classifier.is_some()
            && dims(self) == dims(other)
    }

    /// Tensors in canonical order (encoder w,b; projection w,b; classifier
    /// w,b). Optimizer buffers are aligned to this order.
    pub fn iter_tensors(&self) -> impl Iterator<Item = &Tensor> {
        self.encoder
            .iter()
            .chain(self.projection.iter())
            .chain(self.classifier.iter())
            .flat_map(|l| [&l.weight, &l.bias])
    }

    pub fn iter_tensors_mut(&mut self) -> impl Iterator<Item = &mut Tensor> {
        self.encoder
            .iter_mut()
            .chain(self.projection.iter_mut())
            .chain(self.classifier.iter_mut())
            .flat_map(|l| [&mut l.weight, &mut l.bias])
    }

    pub fn n_tensors(&self) -> usize {
        2 * (self.encoder.len() + self.projection.len() + usize::from(self.classifier.is_some()))
    }

    /// Runs the chain selected by `mode` on a `[B × input_dim]` batch.
    /// Returns the output and the activation record needed by [`backward`].
    pub fn forward(&self, batch: &Tensor, mode: ForwardMode) -> Result<(Tensor, ActivationStash)> {
        self.validate()?;
        if batch.shape().len() != 2 {
            return Err(Error::ShapeMismatch {
                context: "forward batch".into(),
                expected: vec![batch.rows(), self.input_dim()],
                got: batch.shape().to_vec(),
            });
        }
        let plan = self.plan(mode)?;
        let mut stash = ActivationStash {
            mode,
            layer_inputs: Vec::with_capacity(plan.len()),
            preacts: Vec::with_capacity(plan.len()),
            relu_applied: Vec::with_capacity(plan.len()),
            prenorm: None,
            kink_margin: f64::INFINITY,
        };
        let mut x = batch.clone();
        for step in &plan {
            let layer = self.layer(step.slot);
            if x.cols() != layer.in_dim() {
                return Err(Error::DimensionMismatch {
                    layer: step.slot.name(),
                    expected: layer.in_dim(),
                    got: x.cols(),
                });
            }
            let pre = affine_forward(&x, layer);
            stash.layer_inputs.push(x);
            let mut out = pre.clone();
            if step.relu {
                for v in out.values_mut() {
                    stash.kink_margin = stash.kink_margin.min(v.abs());
                    if *v <= 0.0 {
                        *v = 0.0;
                    }
                }
            }
            stash.preacts.push(pre);
            stash.relu_applied.push(step.relu);
            x = out;
        }
        if mode == ForwardMode::Project {
            stash.prenorm = Some(x.clone());
            crate::numeric::tensor::l2_normalize_in_place(&mut x)?;
        }
        x.ensure_finite("forward output")?;
        Ok((x, stash))
    }

    fn plan(&self, mode: ForwardMode) -> Result<Vec<PlanStep>> {
        let n_enc = self.encoder.len();
        // ReLU after every layer except the last of each head.
        let mut plan: Vec<PlanStep> = (0..n_enc)
            .map(|i| PlanStep {
                slot: Slot::Encoder(i),
                relu: i + 1 < n_enc,
            })
            .collect();
        match mode {
            ForwardMode::Encode => {}
            ForwardMode::Project => {
                plan.push(PlanStep {
                    slot: Slot::Projection(0),
                    relu: true,
                });
                plan.push(PlanStep {
                    slot: Slot::Projection(1),
                    relu: false,
                });
            }
            ForwardMode::Classify => {
                if self.classifier.is_none() {
                    return Err(Error::InvalidConfig(
                        "mode=classify requires a classifier head".into(),
                    ));
                }
                plan.push(PlanStep {
                    slot: Slot::Classifier,
                    relu: false,
                });
            }
        }
        Ok(plan)
    }

    fn layer(&self, slot: Slot) -> &Layer {
        match slot {
            Slot::Encoder(i) => &self.encoder[i],
            Slot::Projection(i) => &self.projection[i],
            Slot::Classifier => self.classifier.as_ref().expect("checked in plan"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Slot {
    Encoder(usize),
    Projection(usize),
    Classifier,
}

impl Slot {
    fn name(self) -> String {
        match self {
            Slot::Encoder(i) => format!("encoder layer {i}"),
            Slot::Projection(i) => format!("projection layer {i}"),
            Slot::Classifier => "classifier".into(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct PlanStep {
    slot: Slot,
    relu: bool,
}

/// Activations recorded by [`ModelParams::forward`] for the reverse pass.
#[derive(Debug, Clone)]
pub struct ActivationStash {
    mode: ForwardMode,
    layer_inputs: Vec<Tensor>,
    preacts: Vec<Tensor>,
    relu_applied: Vec<bool>,
    prenorm: Option<Tensor>,
    kink_margin: f64,
}

impl ActivationStash {
    pub fn mode(&self) -> ForwardMode {
        self.mode
    }

    /// Smallest |preactivation| seen at any ReLU in the forward pass;
    /// used by the gradient checker to skip probes near kinks.
    pub fn kink_margin(&self) -> f64 {
        self.kink_margin
    }

    /// FNV-1a hash of the ReLU sign pattern. Two evaluations with different
    /// patterns straddle a kink, where central differences are invalid.
    pub fn activation_pattern(&self) -> u64 {
        let mut hash = 0xcbf2_9ce4_8422_2325u64;
        for (pre, &relu) in self.preacts.iter().zip(&self.relu_applied) {
            if !relu {
                continue;
            }
            for &v in pre.values() {
                hash ^= u64::from(v > 0.0);
                hash = hash.wrapping_mul(0x100_0000_01b3);
            }
        }
        hash
    }
}

fn affine_forward(input: &Tensor, layer: &Layer) -> Tensor {
    let (b, in_dim, out_dim) = (input.rows(), layer.in_dim(), layer.out_dim());
    let mut out = Tensor::zeros(vec![b, out_dim]);
    let bias = layer.bias.values();
    for r in 0..b {
        let x = input.row(r);
        let o = out.row_mut(r);
        for j in 0..out_dim {
            o[j] = bias[j] + dot(x, &layer.weight.values()[j * in_dim..(j + 1) * in_dim]);
        }
    }
    out
}

/// Exact reverse-mode gradients for the chain recorded in `stash`.
/// `output_grad` is dLoss/dOutput with the same shape as the forward output.
pub fn backward(
    params: &ModelParams,
    stash: &ActivationStash,
    output_grad: &Tensor,
) -> Result<ModelParams> {
    let plan = params.plan(stash.mode)?;
    if plan.len() != stash.preacts.len() {
        return Err(Error::StaleStash(format!(
            "stash records {} layers, model executes {}",
            stash.preacts.len(),
            plan.len()
        )));
    }
    let mut grads = params.zeros_like();
    let mut g = output_grad.clone();

    if stash.mode == ForwardMode::Project {
        let pre = stash
            .prenorm
            .as_ref()
            .ok_or_else(|| Error::StaleStash("missing pre-normalization record".into()))?;
        if !g.same_shape(pre) {
            return Err(Error::StaleStash(format!(
                "output grad shape {:?} does not match stash {:?}",
                g.shape(),
                pre.shape()
            )));
        }
        g = l2_normalize_backward(pre, &g)?;
    }

    for (step_idx, step) in plan.iter().enumerate().rev() {
        let layer = params.layer(step.slot);
        let pre = &stash.preacts[step_idx];
        let input = &stash.layer_inputs[step_idx];
        if !g.same_shape(pre) || input.cols() != layer.in_dim() {
            return Err(Error::StaleStash(format!(
                "gradient/stash shape mismatch at {}",
                step.slot.name()
            )));
        }
        if step.relu {
            // Subgradient at 0 is 0, so the mask is strictly positive preacts.
            let mask = pre.values();
            for (gv, &p) in g.values_mut().iter_mut().zip(mask) {
                if p <= 0.0 {
                    *gv = 0.0;
                }
            }
        }
        let (gw, gb, gx) = affine_backward(input, layer, &g);
        let slot_grads = match step.slot {
            Slot::Encoder(i) => &mut grads.encoder[i],
            Slot::Projection(i) => &mut grads.projection[i],
            Slot::Classifier => grads.classifier.as_mut().expect("aligned"),
        };
        slot_grads.weight = gw;
        slot_grads.bias = gb;
        g = gx;
    }
    for t in grads.iter_tensors() {
        t.ensure_finite("backward gradients")?;
    }
    Ok(grads)
}

fn affine_backward(input: &Tensor, layer: &Layer, g_out: &Tensor) -> (Tensor, Tensor, Tensor) {
    let (b, in_dim, out_dim) = (input.rows(), layer.in_dim(), layer.out_dim());
    let mut gw = Tensor::zeros(vec![out_dim, in_dim]);
    let mut gb = Tensor::zeros(vec![out_dim]);
    let mut gx = Tensor::zeros(vec![b, in_dim]);
    for r in 0..b {
        let x = input.row(r);
        let go = g_out.row(r);
        let gxr = gx.row_mut(r);
        for j in 0..out_dim {
            let gj = go[j];
            if gj == 0.0 {
                continue;
            }
            gb.values_mut()[j] += gj;
            let wrow = &layer.weight.values()[j * in_dim..(j + 1) * in_dim];
            let gwrow = &mut gw.values_mut()[j * in_dim..(j + 1) * in_dim];
            for i in 0..in_dim {
                gwrow[i] += gj * x[i];
                gxr[i] += gj * wrow[i];
            }
        }
    }
    (gw, gb, gx)
}

/// Gradient of row-wise L2 normalization: for y = x/|x|,
/// dL/dx = (dL/dy − y (y·dL/dy)) / |x|.
fn l2_normalize_backward(prenorm: &Tensor, g_out: &Tensor) -> Result<Tensor> {
    let mut gx = Tensor::zeros_like(prenorm);
    for r in 0..prenorm.rows() {
        let x = prenorm.row(r);
        let go = g_out.row(r);
        let norm = dot(x, x).sqrt();
        if norm == 0.0 {
            return Err(Error::ZeroRow(r));
        }
        let y: Vec<f64> = x.iter().map(|v| v / norm).collect();
        let proj = dot(&y, go);
        let out = gx.row_mut(r);
        for i in 0..x.len() {
            out[i] = (go[i] - y[i] * proj) / norm;
        }
    }
    Ok(gx)
}

/// Mean softmax cross-entropy over a `[B × K]` logit batch with integer
/// targets. Returns the loss and dLoss/dLogits.
pub fn cross_entropy(logits: &Tensor, targets: &[usize]) -> Result<(f64, Tensor)> {
    let (b, k) = (logits.rows(), logits.cols());
    if targets.len() != b {
        return Err(Error::ShapeMismatch {
            context: "cross_entropy targets".into(),
            expected: vec![b],
            got: vec![targets.len()],
        });
    }
    let mut grad = Tensor::zeros_like(logits);
    let mut loss = 0.0;
    for r in 0..b {
        let t = targets[r];
        if t >= k {
            return Err(Error::InvalidConfig(format!(
                "target {t} out of range for {k} classes"
            )));
        }
        let row = logits.row(r);
        let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = row.iter().map(|&v| (v - m).exp()).sum();
        loss += z.ln() + m - row[t];
        let g = grad.row_mut(r);
        for j in 0..k {
            let p = (row[j] - m).exp() / z;
            g[j] = (p - if j == t { 1.0 } else { 0.0 }) / b as f64;
        }
    }
    Ok((loss / b as f64, grad))
}

fn init_layer(out_dim: usize, in_dim: usize, rng: &mut ChaCha8Rng) -> Layer {
    let scale = (6.0 / (in_dim + out_dim) as f64).sqrt();
    let values: Vec<f64> = (0..out_dim * in_dim)
        .map(|_| (rng.random::<f64>() * 2.0 - 1.0) * scale)
        .collect();
    Layer {
        weight: Tensor::new(vec![out_dim, in_dim], values).expect("finite init"),
        bias: Tensor::zeros(vec![out_dim]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn single_layer(weight: Vec<f64>, out_dim: usize, in_dim: usize) -> ModelParams {
        ModelParams {
            encoder: vec![Layer {
                weight: Tensor::new(vec![out_dim, in_dim], weight).unwrap(),
                bias: Tensor::zeros(vec![out_dim]),
            }],
            projection: vec![Layer::zeros(2, out_dim), Layer::zeros(2, 2)],
            classifier: None,
        }
    }

    #[test]
    fn identity_single_layer() {
        let params = single_layer(vec![1.0, 0.0, 0.0, 1.0], 2, 2);
        let batch = Tensor::new(vec![1, 2], vec![1.0, 2.0]).unwrap();
        let (out, _) = params.forward(&batch, ForwardMode::Encode).unwrap();
        assert_eq!(out.values(), &[1.0, 2.0]);
    }

    #[test]
    fn project_rows_are_unit_norm() {
        let mut r = rng::stream(3, &[1]);
        let params = ModelParams::init(8, &ArchitectureConfig::default(), 4, None, &mut r).unwrap();
        let vals: Vec<f64> = (0..4 * 8).map(|i| (i as f64 * 0.37).sin()).collect();
        let batch = Tensor::new(vec![4, 8], vals).unwrap();
        let (out, _) = params.forward(&batch, ForwardMode::Project).unwrap();
        for i in 0..4 {
            let n = dot(out.row(i), out.row(i)).sqrt();
            assert!((n - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn forward_matches_dense_matmul_oracle() {
        // Independent oracle: direct dense matmul + ReLU, no shared code path.
        let mut r = rng::stream(7, &[2]);
        let arch = ArchitectureConfig {
            encoder_widths: vec![5, 3],
            projection_hidden: 4,
        };
        let params = ModelParams::init(8, &arch, 2, None, &mut r).unwrap();
        let vals: Vec<f64> = (0..4 * 8).map(|i| ((i * 13 % 7) as f64 - 3.0) / 3.0).collect();
        let batch = Tensor::new(vec![4, 8], vals.clone()).unwrap();
        let (out, _) = params.forward(&batch, ForwardMode::Encode).unwrap();

        for row in 0..4 {
            let x: Vec<f64> = vals[row * 8..(row + 1) * 8].to_vec();
            // layer 0 + relu
            let l0 = &params.encoder[0];
            let mut h: Vec<f64> = (0..5)
                .map(|j| {
                    let mut acc = l0.bias.values()[j];
                    for i in 0..8 {
                        acc += l0.weight.values()[j * 8 + i] * x[i];
                    }
                    acc.max(0.0)
                })
                .collect();
            // layer 1, linear output
            let l1 = &params.encoder[1];
            let y: Vec<f64> = (0..3)
                .map(|j| {
                    let mut acc = l1.bias.values()[j];
                    for (i, hv) in h.iter().enumerate() {
                        acc += l1.weight.values()[j * 5 + i] * hv;
                    }
                    acc
                })
                .collect();
            h.clear();
            for (a, b) in out.row(row).iter().zip(&y) {
                assert!((a - b).abs() < 1e-12, "row {row}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn dimension_mismatch_names_layer() {
        let mut r = rng::stream(3, &[4]);
        let params = ModelParams::init(8, &ArchitectureConfig::default(), 4, None, &mut r).unwrap();
        let batch = Tensor::new(vec![1, 5], vec![0.0; 5]).unwrap();
        let err = params.forward(&batch, ForwardMode::Encode).unwrap_err();
        assert!(err.to_string().contains("encoder layer 0"), "{err}");
    }

    #[test]
    fn classify_without_head_errors() {
        let mut r = rng::stream(3, &[5]);
        let params = ModelParams::init(8, &ArchitectureConfig::default(), 4, None, &mut r).unwrap();
        let batch = Tensor::new(vec![1, 8], vec![0.1; 8]).unwrap();
        assert!(params.forward(&batch, ForwardMode::Classify).is_err());
    }

    #[test]
    fn zero_output_grad_gives_zero_grads() {
        let mut r = rng::stream(9, &[6]);
        let params = ModelParams::init(6, &ArchitectureConfig::default(), 4, None, &mut r).unwrap();
        let batch = Tensor::new(vec![2, 6], vec![0.3; 12]).unwrap();
        let (out, stash) = params.forward(&batch, ForwardMode::Project).unwrap();
        let grads = backward(&params, &stash, &Tensor::zeros_like(&out)).unwrap();
        for t in grads.iter_tensors() {
            assert!(t.values().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn linear_layer_sum_loss_grad_is_input_broadcast() {
        // loss = sum(outputs) of a single linear layer: dW[j][i] = sum_b x[b][i].
        let params = single_layer(vec![0.5, -0.2, 0.1, 0.4], 2, 2);
        let batch = Tensor::new(vec![3, 2], vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let (out, stash) = params.forward(&batch, ForwardMode::Encode).unwrap();
        let ones = Tensor::new(vec![3, 2], vec![1.0; 6]).unwrap();
        let grads = backward(&params, &stash, &ones).unwrap();
        let col_sums = [1.0 + 3.0 + 5.0, 2.0 + 4.0 + 6.0];
        for j in 0..2 {
            for i in 0..2 {
                assert!((grads.encoder[0].weight.values()[j * 2 + i] - col_sums[i]).abs() < 1e-12);
            }
            assert!((grads.encoder[0].bias.values()[j] - 3.0).abs() < 1e-12);
        }
        drop(out);
    }

    #[test]
    fn stale_stash_is_rejected() {
        let mut r = rng::stream(9, &[7]);
        let params = ModelParams::init(6, &ArchitectureConfig::default(), 4, None, &mut r).unwrap();
        let batch = Tensor::new(vec![2, 6], vec![0.3; 12]).unwrap();
        let (_, stash) = params.forward(&batch, ForwardMode::Encode).unwrap();
        let bad_grad = Tensor::zeros(vec![2, 7]);
        assert!(backward(&params, &stash, &bad_grad).is_err());
    }

    #[test]
    fn cross_entropy_uniform_logits() {
        let logits = Tensor::zeros(vec![2, 4]);
        let (loss, grad) = cross_entropy(&logits, &[0, 3]).unwrap();
        assert!((loss - (4.0f64).ln()).abs() < 1e-12);
        // gradient rows sum to zero
        for r in 0..2 {
            let s: f64 = grad.row(r).iter().sum();
            assert!(s.abs() < 1e-12);
        }
    }

    #[test]
    fn init_is_seed_deterministic() {
        let a = ModelParams::init(
            8,
            &ArchitectureConfig::default(),
            4,
            Some(3),
            &mut rng::stream(11, &[rng::tag::INIT]),
        )
        .unwrap();
        let b = ModelParams::init(
            8,
            &ArchitectureConfig::default(),
            4,
            Some(3),
            &mut rng::stream(11, &[rng::tag::INIT]),
        )
        .unwrap();
        assert_eq!(a, b);
    }
}
