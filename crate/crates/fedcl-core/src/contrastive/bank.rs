//! Unit-norm feature vectors and fixed-capacity FIFO memory banks.

use std::collections::VecDeque;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub type DeviceId = usize;

/// A unit-norm embedding with an origin tag. The origin is used only by the
/// server (for exclusion when assembling remote banks) and by the test
/// harness; it is never part of a download payload.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVec {
    values: Vec<f64>,
    origin: DeviceId,
    birth_round: u32,
}

impl FeatureVec {
    pub fn new(values: Vec<f64>, origin: DeviceId, birth_round: u32) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput("FeatureVec::new".into()));
        }
        let norm: f64 = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig(format!(
                "feature vector must be unit norm, got {norm}"
            )));
        }
        Ok(Self {
            values,
            origin,
            birth_round,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn origin(&self) -> DeviceId {
        self.origin
    }

    pub fn birth_round(&self) -> u32 {
        self.birth_round
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

/// Fixed-capacity FIFO queue of feature vectors, oldest first. Pushing past
/// capacity evicts strictly oldest-first.
#[derive(Debug, Clone, PartialEq)]
pub struct MemoryBank {
    capacity: usize,
    entries: VecDeque<FeatureVec>,
}

impl MemoryBank {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::InvalidConfig("bank capacity must be ≥ 1".into()));
        }
        Ok(Self {
            capacity,
            entries: VecDeque::new(),
        })
    }

    pub fn from_entries(capacity: usize, entries: Vec<FeatureVec>) -> Result<Self> {
        let mut bank = Self::new(capacity)?;
        bank.push(entries);
        Ok(bank)
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &FeatureVec> {
        self.entries.iter()
    }

    /// Appends features in order, evicting the oldest entries once the
    /// capacity would be exceeded.
    pub fn push(&mut self, feats: impl IntoIterator<Item = FeatureVec>) {
        for f in feats {
            if self.entries.len() == self.capacity {
                self.entries.pop_front();
            }
            self.entries.push_back(f);
        }
    }

    /// `count` draws uniform over the bank, with replacement. Returned
    /// features are copies.
    pub fn sample_uniform(&self, count: usize, rng: &mut ChaCha8Rng) -> Result<Vec<FeatureVec>> {
        if self.entries.is_empty() {
            return Err(Error::EmptyBank);
        }
        Ok((0..count)
            .map(|_| self.entries[rng.random_range(0..self.entries.len())].clone())
            .collect())
    }
}
