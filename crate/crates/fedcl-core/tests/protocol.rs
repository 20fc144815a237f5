//! Round-protocol invariants exercised through the public API.

use fedcl_core::contrastive::{ContrastiveConfig, FeatureVec};
use fedcl_core::data::{generate_synthetic, partition, PartitionSpec, SyntheticSpec};
use fedcl_core::federation::{
    run_pretraining, FederationConfig, NegativesPolicy, PretrainConfig, ServerState,
};
use fedcl_core::numeric::ArchitectureConfig;
use fedcl_core::rng;

fn unit_feature(origin: usize, tag: u64, dim: usize) -> FeatureVec {
    use rand::Rng;
    let mut r = rng::stream(tag, &[origin as u64]);
    let v: Vec<f64> = (0..dim).map(|_| r.random::<f64>() - 0.5).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    FeatureVec::new(v.into_iter().map(|x| x / norm).collect(), origin, 0).unwrap()
}

fn sorted_values(mut rows: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    rows.sort_by(|a, b| a.partial_cmp(b).unwrap());
    rows
}

#[test]
fn downloads_equal_other_devices_uploads_as_multisets() {
    let global = fedcl_core::federation::seeded_init(
        8,
        &ArchitectureConfig {
            encoder_widths: vec![6],
            projection_hidden: 6,
        },
        4,
        0,
    )
    .unwrap();
    let mut server = ServerState::new(global);
    let uploads: Vec<(usize, Vec<FeatureVec>)> = (0..4)
        .map(|dev| {
            (
                dev,
                (0..5).map(|i| unit_feature(dev, 100 + i, 4)).collect(),
            )
        })
        .collect();
    server.collect_and_deidentify(uploads.clone()).unwrap();

    for dev in 0..4 {
        let downloaded = sorted_values(server.download_payload(dev).features);
        let expected = sorted_values(
            uploads
                .iter()
                .filter(|(id, _)| *id != dev)
                .flat_map(|(_, feats)| feats.iter().map(|f| f.values().to_vec()))
                .collect(),
        );
        assert_eq!(downloaded, expected, "device {dev}");
        assert_eq!(downloaded.len(), 15);
    }
}

#[test]
fn download_payload_wire_format_has_no_origin() {
    let global = fedcl_core::federation::seeded_init(
        8,
        &ArchitectureConfig {
            encoder_widths: vec![6],
            projection_hidden: 6,
        },
        4,
        0,
    )
    .unwrap();
    let mut server = ServerState::new(global);
    server
        .collect_and_deidentify(vec![
            (0, vec![unit_feature(0, 1, 4)]),
            (1, vec![unit_feature(1, 2, 4)]),
        ])
        .unwrap();
    let json = serde_json::to_string(&server.download_payload(1)).unwrap();
    assert!(json.contains("features"));
    for leaked in ["origin", "device", "birth"] {
        assert!(!json.contains(leaked), "payload leaks '{leaked}': {json}");
    }
}

fn desk_partitions() -> Vec<fedcl_core::data::Dataset> {
    let ds = generate_synthetic(&SyntheticSpec {
        n_classes: 3,
        samples_per_class: 30,
        height: 8,
        width: 8,
        seed: 41,
        ..SyntheticSpec::default()
    })
    .unwrap();
    partition(
        &ds,
        &PartitionSpec {
            n_devices: 3,
            ..PartitionSpec::default()
        },
    )
    .unwrap()
}

fn desk_config(policy: NegativesPolicy, rounds: usize) -> PretrainConfig {
    PretrainConfig {
        federation: FederationConfig {
            n_devices: 3,
            rounds,
            negatives_policy: policy,
            share_count: 10,
            global_seed: 5,
            ..FederationConfig::default()
        },
        contrastive: ContrastiveConfig {
            feature_dim: 8,
            batch_size: 8,
            bank_capacity: 16,
            ..ContrastiveConfig::default()
        },
        arch: ArchitectureConfig {
            encoder_widths: vec![16, 12],
            projection_hidden: 12,
        },
        ..PretrainConfig::default()
    }
}

#[test]
fn cold_start_falls_back_then_uses_remote_banks() {
    // Round 0 has no registry, so devices run local_only (qcl capacity =
    // local bank capacity); from round 1 on the remote policies see a
    // remote bank of (|C|−1)·share_count features.
    let parts = desk_partitions();
    let run = run_pretraining(&desk_config(NegativesPolicy::RemoteOnly, 2), &parts).unwrap();
    let r0: Vec<_> = run.records.iter().filter(|r| r.round == 0).collect();
    let r1: Vec<_> = run.records.iter().filter(|r| r.round == 1).collect();
    for rec in r0 {
        assert!(rec.qcl_size <= 16, "round 0 should be local-only sized");
    }
    for rec in r1 {
        assert_eq!(rec.qcl_size, 20, "round 1 remote bank is 2 × 10 shares");
    }
}

#[test]
fn remote_only_purity_holds_across_a_run() {
    let parts = desk_partitions();
    let run = run_pretraining(&desk_config(NegativesPolicy::RemoteOnly, 4), &parts).unwrap();
    assert_eq!(run.purity_violations, 0);
}

#[test]
fn policies_diverge_but_share_initialization() {
    let parts = desk_partitions();
    let local = run_pretraining(&desk_config(NegativesPolicy::LocalOnly, 2), &parts).unwrap();
    let remote = run_pretraining(&desk_config(NegativesPolicy::RemoteOnly, 2), &parts).unwrap();
    // Same seed → same init; policies only start to differ once remote
    // features exist, so trained models differ.
    assert_ne!(local.global_params, remote.global_params);
    // Round 0 is the shared local-only cold start under either policy.
    let l0: Vec<f64> = local
        .records
        .iter()
        .filter(|r| r.round == 0)
        .map(|r| r.mean_loss)
        .collect();
    let r0: Vec<f64> = remote
        .records
        .iter()
        .filter(|r| r.round == 0)
        .map(|r| r.mean_loss)
        .collect();
    assert_eq!(l0, r0);
}

#[test]
fn reruns_are_bit_identical_and_seeds_matter() {
    let parts = desk_partitions();
    let cfg = desk_config(NegativesPolicy::LocalPlusRemote, 3);
    let a = run_pretraining(&cfg, &parts).unwrap();
    let b = run_pretraining(&cfg, &parts).unwrap();
    assert_eq!(a.records, b.records);
    assert_eq!(a.global_params, b.global_params);

    let mut other = desk_config(NegativesPolicy::LocalPlusRemote, 3);
    other.federation.global_seed = 6;
    let c = run_pretraining(&other, &parts).unwrap();
    assert_ne!(a.records, c.records);
}
