//! Server-side state: the global model, the per-device feature registry,
//! and the de-identified redistribution of shared features.

use std::collections::BTreeMap;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::contrastive::{DeviceId, FeatureVec, MemoryBank};
use crate::error::{Error, Result};
use crate::numeric::ModelParams;

/// Coordinates the round protocol. The registry holds the features uploaded
/// in the most recent round; origin tags stay server-internal so remote
/// banks can exclude a device's own features.
#[derive(Debug, Clone)]
pub struct ServerState {
    pub global_params: ModelParams,
    registry: BTreeMap<DeviceId, Vec<FeatureVec>>,
    pub round_index: usize,
}

/// The wire form of redistributed features: values only. De-identification
/// means no origin ever appears in this payload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeaturePayload {
    pub features: Vec<Vec<f64>>,
}

impl ServerState {
    pub fn new(global_params: ModelParams) -> Self {
        Self {
            global_params,
            registry: BTreeMap::new(),
            round_index: 0,
        }
    }

    pub fn registry_len(&self, device: DeviceId) -> usize {
        self.registry.get(&device).map_or(0, Vec::len)
    }

    pub fn uploaders(&self) -> impl Iterator<Item = DeviceId> + '_ {
        self.registry.keys().copied()
    }

    /// Replaces the registry with this round's uploads. Every feature must
    /// carry the origin of the device that uploaded it; a mismatch is an
    /// integrity violation. Entries from devices that did not upload this
    /// round are dropped, so the registry always reflects exactly the last
    /// exchange.
    pub fn collect_and_deidentify(
        &mut self,
        uploads: Vec<(DeviceId, Vec<FeatureVec>)>,
    ) -> Result<()> {
        let mut fresh: BTreeMap<DeviceId, Vec<FeatureVec>> = BTreeMap::new();
        for (device, feats) in uploads {
            for f in &feats {
                if f.origin() != device {
                    return Err(Error::OriginMismatch {
                        expected: device,
                        found: f.origin(),
                    });
                }
            }
            fresh.insert(device, feats);
        }
        self.registry = fresh;
        Ok(())
    }

    /// Everything the server would send device `device`: all registered
    /// features from other devices, stripped of origin metadata.
    pub fn download_payload(&self, device: DeviceId) -> FeaturePayload {
        FeaturePayload {
            features: self
                .remote_features(device)
                .map(|f| f.values().to_vec())
                .collect(),
        }
    }

    fn remote_features(&self, device: DeviceId) -> impl Iterator<Item = &FeatureVec> {
        self.registry
            .iter()
            .filter(move |(&id, _)| id != device)
            .flat_map(|(_, feats)| feats.iter())
    }

    /// Assembles the remote bank for a device: a seeded shuffle of every
    /// registered feature whose origin differs from `device`. Capacity is
    /// the assembled size; nothing is evicted here. Origin tags are kept so
    /// the harness can audit policy purity.
    pub fn build_remote_bank(&self, device: DeviceId, rng: &mut ChaCha8Rng) -> Result<MemoryBank> {
        let mut feats: Vec<FeatureVec> = self.remote_features(device).cloned().collect();
        if feats.is_empty() {
            return Err(Error::NoRemoteFeatures(device));
        }
        use rand::seq::SliceRandom;
        feats.shuffle(rng);
        MemoryBank::from_entries(feats.len(), feats)
    }
}
