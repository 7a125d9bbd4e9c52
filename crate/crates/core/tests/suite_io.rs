//! Config files in, CSV and JSON bundles out.

use std::path::Path;

use nplab::consistency_lab::StatisticFamily;
use nplab::harness::config::{
    AlternativeSpec, Assertion, ExperimentConfig, Manifest, SCHEMA_VERSION,
};
use nplab::harness::suite::{canonical_json, run_suite, Bundle, SuiteOptions};
use nplab::quadratic_tests::TruncationRule;
use nplab::sequence_model::FamilyShape;

const HEADER: &str = "experiment,n,alpha_hat,alpha_lo,alpha_hi,beta_hat,beta_lo,beta_hi,prediction";

fn manifest() -> Manifest {
    Manifest::new(vec![
        ExperimentConfig {
            schema_version: SCHEMA_VERSION,
            name: "small".into(),
            statistic: StatisticFamily::quadratic(
                3.0,
                1.0,
                TruncationRule::ScaleMultiple { multiple: 8.0 },
            ),
            rate: 0.25,
            alternatives: vec![
                AlternativeSpec::Calibrated {
                    label: "nc1".into(),
                    index: 1,
                    noncentrality: 1.0,
                },
                AlternativeSpec::Family {
                    label: "low".into(),
                    amplitude: 1.5,
                    shape: FamilyShape::AllLow { width: 4 },
                },
            ],
            n_grid: vec![256, 1024],
            reps: 2000,
            alpha: 0.05,
            seed: 3,
            output: None,
            assertions: vec![Assertion::SizeWithin { tolerance: 0.5 }],
        },
        ExperimentConfig {
            schema_version: SCHEMA_VERSION,
            name: "chi2-null".into(),
            statistic: StatisticFamily::chi2(Some(16)),
            rate: 0.25,
            alternatives: vec![],
            n_grid: vec![500],
            reps: 1000,
            alpha: 0.05,
            seed: 3,
            output: Some("custom.csv".into()),
            assertions: vec![],
        },
    ])
}

fn lines(path: &Path) -> Vec<String> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(str::to_owned)
        .collect()
}

#[test]
fn manifest_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.json");
    let m = manifest();
    std::fs::write(&path, serde_json::to_string_pretty(&m).unwrap()).unwrap();
    assert_eq!(Manifest::load(&path).unwrap(), m);

    // a bare experiment loads as a one-entry manifest
    std::fs::write(&path, serde_json::to_string(&m.experiments[0]).unwrap()).unwrap();
    assert_eq!(
        Manifest::load(&path).unwrap().experiments,
        vec![m.experiments[0].clone()]
    );
}

#[test]
fn bad_field_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.json");
    let mut m = manifest();
    m.experiments[1].alpha = 1.5;
    std::fs::write(&path, serde_json::to_string(&m).unwrap()).unwrap();
    let err = Manifest::load(&path).unwrap_err().to_string();
    assert!(err.contains("experiments[1].alpha"), "{err}");
}

#[test]
fn outputs_have_the_documented_shape() {
    let dir = tempfile::tempdir().unwrap();
    let bundle = run_suite(
        &manifest(),
        &SuiteOptions {
            workers: None,
            out: Some(dir.path().to_path_buf()),
        },
    )
    .unwrap();

    let small = lines(&dir.path().join("small.csv"));
    assert_eq!(small[0], HEADER);
    // two grid points times two arms
    assert_eq!(small.len(), 1 + 4);
    assert!(small[1].starts_with("small/nc1,256,"));
    let cols: Vec<&str> = small[1].split(',').collect();
    assert_eq!(cols.len(), 9);
    assert!(cols.iter().all(|c| !c.is_empty()));

    let null = lines(&dir.path().join("custom.csv"));
    assert_eq!(null[0], HEADER);
    assert_eq!(null.len(), 2);
    assert!(null[1].starts_with("chi2-null,500,"));
    assert!(null[1].ends_with(",,,,"));

    let text = std::fs::read_to_string(dir.path().join("bundle.json")).unwrap();
    let back: Bundle = serde_json::from_str(&text).unwrap();
    assert_eq!(back, bundle);
    assert_eq!(back.schema_version, SCHEMA_VERSION);
}

#[test]
fn worker_count_does_not_change_results() {
    let m = manifest();
    let run = |w| {
        canonical_json(
            &run_suite(
                &m,
                &SuiteOptions {
                    workers: Some(w),
                    out: None,
                },
            )
            .unwrap(),
        )
        .unwrap()
    };
    assert_eq!(run(1), run(3));
}
