// SPDX-License-Identifier: Apache-2.0

use aafv_core::commands::{cmd_synth, synth_file_names};
use aafv_core::dataio::{load_csv, LabelColumn, SynthSpec};

fn files(dir: &std::path::Path) -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    names
}

#[test]
fn same_seed_gives_identical_bytes() {
    let spec = SynthSpec::default();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    cmd_synth(&spec, a.path()).unwrap();
    cmd_synth(&spec, b.path()).unwrap();
    for name in synth_file_names(spec.n_clients) {
        assert_eq!(
            std::fs::read(a.path().join(&name)).unwrap(),
            std::fs::read(b.path().join(&name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn different_seed_changes_output() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    cmd_synth(&SynthSpec::default(), a.path()).unwrap();
    cmd_synth(
        &SynthSpec {
            seed: 8,
            ..SynthSpec::default()
        },
        b.path(),
    )
    .unwrap();
    assert_ne!(
        std::fs::read(a.path().join("test.csv")).unwrap(),
        std::fs::read(b.path().join("test.csv")).unwrap()
    );
}

#[test]
fn one_file_per_client_and_shapes() {
    let spec = SynthSpec {
        n_clients: 5,
        ..SynthSpec::default()
    };
    let dir = tempfile::tempdir().unwrap();
    cmd_synth(&spec, dir.path()).unwrap();
    let mut expect = synth_file_names(5);
    expect.sort();
    assert_eq!(files(dir.path()), expect);
    assert_eq!(expect.len(), 7);

    let label = LabelColumn::Name("label".into());
    let test = load_csv(&dir.path().join("test.csv"), &label).unwrap();
    assert_eq!(test.len(), spec.test_rows());
    assert_eq!(test.cols(), spec.n_features);
    for k in 0..5 {
        let shard = load_csv(&dir.path().join(format!("client_{k}.csv")), &label).unwrap();
        assert_eq!(shard.len(), spec.client_rows());
        assert_eq!(shard.cols(), spec.n_features);
    }
    let unlabeled = std::fs::read_to_string(dir.path().join("unlabeled.csv")).unwrap();
    let header = unlabeled.lines().next().unwrap();
    assert_eq!(header.split(',').count(), spec.n_features);
    assert_eq!(unlabeled.lines().count(), spec.unlabeled_rows() + 1);
}

#[test]
fn test_labels_are_roughly_balanced() {
    let dir = tempfile::tempdir().unwrap();
    cmd_synth(&SynthSpec::default(), dir.path()).unwrap();
    let test = load_csv(&dir.path().join("test.csv"), &LabelColumn::Name("label".into())).unwrap();
    let rate = test.positive_rate();
    assert!((0.35..=0.65).contains(&rate), "positive rate {rate}");
}

#[test]
fn invalid_spec_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let spec = SynthSpec {
        n_clients: 1,
        ..SynthSpec::default()
    };
    assert!(cmd_synth(&spec, &out).is_err());
    assert!(!out.exists());
}
