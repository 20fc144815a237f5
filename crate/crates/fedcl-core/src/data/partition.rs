//! Non-IID partitioning across devices, stratified train/test splits, and
//! nested label-fraction subsets.

use rand::seq::SliceRandom;
use rand_distr::{Distribution, Gamma};

use crate::data::dataset::Dataset;
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SkewMode {
    /// Per-class device shares drawn from a symmetric Dirichlet(α).
    Dirichlet,
    /// Each device draws a fixed fraction of its samples from one class.
    DominantClass,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartitionSpec {
    pub n_devices: usize,
    pub skew_mode: SkewMode,
    /// Dirichlet α or the dominant-class fraction, depending on mode.
    pub skew_param: f64,
    pub seed: u64,
}

impl Default for PartitionSpec {
    fn default() -> Self {
        Self {
            n_devices: 10,
            skew_mode: SkewMode::DominantClass,
            skew_param: 0.7,
            seed: 11,
        }
    }
}

impl PartitionSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_devices < 2 {
            return Err(Error::InvalidConfig("n_devices must be ≥ 2".into()));
        }
        if self.skew_param <= 0.0 || !self.skew_param.is_finite() {
            return Err(Error::InvalidConfig("skew_param must be > 0".into()));
        }
        if self.skew_mode == SkewMode::DominantClass && self.skew_param > 1.0 {
            return Err(Error::InvalidConfig(
                "dominant-class fraction must lie in (0, 1]".into(),
            ));
        }
        Ok(())
    }
}

/// Splits a dataset into per-device datasets that cover the input exactly
/// once, with the configured label skew. Errors if any device would end up
/// empty.
pub fn partition(dataset: &Dataset, spec: &PartitionSpec) -> Result<Vec<Dataset>> {
    spec.validate()?;
    if dataset.len() < spec.n_devices {
        return Err(Error::InfeasiblePartition(format!(
            "{} samples cannot cover {} devices",
            dataset.len(),
            spec.n_devices
        )));
    }
    // Seeded shuffle of each class's index pool.
    let mut pools: Vec<Vec<usize>> = vec![Vec::new(); dataset.n_classes];
    for (i, &l) in dataset.labels.iter().enumerate() {
        pools[usize::from(l)].push(i);
    }
    for (c, pool) in pools.iter_mut().enumerate() {
        pool.shuffle(&mut rng::stream(spec.seed, &[rng::tag::PARTITION, c as u64]));
    }

    let assignments = match spec.skew_mode {
        SkewMode::DominantClass => assign_dominant(dataset, spec, &mut pools)?,
        SkewMode::Dirichlet => assign_dirichlet(spec, &mut pools)?,
    };

    let devices: Vec<Dataset> = assignments.iter().map(|idx| dataset.subset(idx)).collect();
    for (d, ds) in devices.iter().enumerate() {
        if ds.is_empty() {
            return Err(Error::InfeasiblePartition(format!("device {d} is empty")));
        }
    }
    Ok(devices)
}

fn assign_dominant(
    dataset: &Dataset,
    spec: &PartitionSpec,
    pools: &mut [Vec<usize>],
) -> Result<Vec<Vec<usize>>> {
    let n = dataset.len();
    let d = spec.n_devices;
    // Near-equal device quotas; the remainder goes to the first devices.
    let quotas: Vec<usize> = (0..d).map(|i| n / d + usize::from(i < n % d)).collect();
    let mut assignments: Vec<Vec<usize>> = vec![Vec::new(); d];

    // Dominant draws first so every device gets its share of its class.
    for dev in 0..d {
        let class = dev % dataset.n_classes;
        let want = ((spec.skew_param * quotas[dev] as f64).ceil() as usize).min(quotas[dev]);
        let take = want.min(pools[class].len());
        assignments[dev].extend(pools[class].drain(..take));
    }
    // Remaining quota comes from the leftover pool, shuffled across classes.
    let mut leftovers: Vec<usize> = pools.iter_mut().flat_map(std::mem::take).collect();
    leftovers.shuffle(&mut rng::stream(spec.seed, &[rng::tag::PARTITION, u64::MAX]));
    for dev in 0..d {
        let missing = quotas[dev] - assignments[dev].len();
        let take = missing.min(leftovers.len());
        assignments[dev].extend(leftovers.drain(..take));
    }
    // Rounding slack: hand any stragglers to devices below quota, then
    // append the rest to the last device so the cover stays exact.
    if !leftovers.is_empty() {
        assignments[d - 1].extend(leftovers.drain(..));
    }
    Ok(assignments)
}

fn assign_dirichlet(spec: &PartitionSpec, pools: &mut [Vec<usize>]) -> Result<Vec<Vec<usize>>> {
    let d = spec.n_devices;
    let gamma = Gamma::new(spec.skew_param, 1.0)
        .map_err(|e| Error::InvalidConfig(format!("invalid Dirichlet α: {e}")))?;
    let mut assignments: Vec<Vec<usize>> = vec![Vec::new(); d];
    for (class, pool) in pools.iter_mut().enumerate() {
        if pool.is_empty() {
            continue;
        }
        let mut rng = rng::stream(spec.seed, &[rng::tag::PARTITION, 1000 + class as u64]);
        let draws: Vec<f64> = (0..d).map(|_| gamma.sample(&mut rng).max(1e-300)).collect();
        let total: f64 = draws.iter().sum();
        let counts = largest_remainder(
            &draws.iter().map(|g| g / total).collect::<Vec<_>>(),
            pool.len(),
        );
        for (dev, &count) in counts.iter().enumerate() {
            assignments[dev].extend(pool.drain(..count));
        }
    }
    Ok(assignments)
}

/// Integer allocation of `total` items proportional to `weights`
/// (floor + largest fractional remainder; ties broken by index).
fn largest_remainder(weights: &[f64], total: usize) -> Vec<usize> {
    let quotas: Vec<f64> = weights.iter().map(|w| w * total as f64).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = quotas[a] - quotas[a].floor();
        let fb = quotas[b] - quotas[b].floor();
        fb.partial_cmp(&fa).expect("finite").then(a.cmp(&b))
    });
    for &i in order.iter().take(total.saturating_sub(assigned)) {
        counts[i] += 1;
    }
    counts
}

/// Stratified, seeded 60/40-style split. The train side gets
/// `round(ratio · N)` samples, allocated per class by largest remainder.
pub fn split_train_test(dataset: &Dataset, ratio: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if dataset.len() < 2 {
        return Err(Error::EmptyInput(
            "split_train_test needs at least 2 samples".into(),
        ));
    }
    if !(0.0..=1.0).contains(&ratio) {
        return Err(Error::InvalidConfig(format!(
            "train ratio must lie in [0, 1], got {ratio}"
        )));
    }
    let mut pools: Vec<Vec<usize>> = vec![Vec::new(); dataset.n_classes];
    for (i, &l) in dataset.labels.iter().enumerate() {
        pools[usize::from(l)].push(i);
    }
    for (c, pool) in pools.iter_mut().enumerate() {
        pool.shuffle(&mut rng::stream(seed, &[rng::tag::SPLIT, c as u64]));
    }
    let total_train = (ratio * dataset.len() as f64).round() as usize;
    let weights: Vec<f64> = pools
        .iter()
        .map(|p| p.len() as f64 / dataset.len() as f64)
        .collect();
    let mut counts = largest_remainder(&weights, total_train);
    // Largest remainder can overshoot a small class; clamp and spill over.
    let mut spill = 0usize;
    for (c, pool) in pools.iter().enumerate() {
        if counts[c] > pool.len() {
            spill += counts[c] - pool.len();
            counts[c] = pool.len();
        }
    }
    for (c, pool) in pools.iter().enumerate() {
        while spill > 0 && counts[c] < pool.len() {
            counts[c] += 1;
            spill -= 1;
        }
    }
    let mut train_idx = Vec::new();
    let mut test_idx = Vec::new();
    for (c, pool) in pools.iter().enumerate() {
        train_idx.extend_from_slice(&pool[..counts[c]]);
        test_idx.extend_from_slice(&pool[counts[c]..]);
    }
    Ok((dataset.subset(&train_idx), dataset.subset(&test_idx)))
}

/// Indices of the labeled subset: the first ⌈L·N⌉ entries of a stratified
/// smooth round-robin over per-class seeded shuffles. For a fixed seed the
/// subsets are nested across increasing L.
pub fn label_subset(train: &Dataset, label_fraction: f64, seed: u64) -> Result<Vec<usize>> {
    if !(label_fraction > 0.0 && label_fraction <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "label fraction must lie in (0, 1], got {label_fraction}"
        )));
    }
    if train.is_empty() {
        return Err(Error::EmptyInput("label_subset on empty dataset".into()));
    }
    let n = train.len();
    let take = (label_fraction * n as f64).ceil() as usize;

    let mut pools: Vec<Vec<usize>> = vec![Vec::new(); train.n_classes];
    for (i, &l) in train.labels.iter().enumerate() {
        pools[usize::from(l)].push(i);
    }
    for (c, pool) in pools.iter_mut().enumerate() {
        pool.shuffle(&mut rng::stream(seed, &[rng::tag::LABELS, c as u64]));
    }
    // Smooth weighted round-robin: class credits grow with class size, the
    // richest class emits next. Prefixes stay proportionally stratified.
    let mut credits = vec![0i64; train.n_classes];
    let mut cursor = vec![0usize; train.n_classes];
    let mut sequence = Vec::with_capacity(n);
    for _ in 0..n {
        for (c, credit) in credits.iter_mut().enumerate() {
            if cursor[c] < pools[c].len() {
                *credit += pools[c].len() as i64;
            }
        }
        let winner = (0..train.n_classes)
            .filter(|&c| cursor[c] < pools[c].len())
            .max_by_key(|&c| (credits[c], std::cmp::Reverse(c)))
            .expect("some class still has samples");
        credits[winner] -= n as i64;
        sequence.push(pools[winner][cursor[winner]]);
        cursor[winner] += 1;
    }
    sequence.truncate(take);
    Ok(sequence)
}
