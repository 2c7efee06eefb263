use crowdguard::deepnn::TrainParams;
use crowdguard::features::FeatureMatrix;
use crowdguard::pipeline::{
    combine_with_precl, run_baseline, run_full_experiment, run_precdeepnn, ExperimentConfig, RunSettings,
    VariantSelection,
};
use crowdguard::sofm::{assign_clusters, ClusterMark, ClusterPartition};
use crowdguard::Error;

fn settings(epochs: usize) -> RunSettings {
    RunSettings {
        train: TrainParams { epochs, ..TrainParams::default() },
        threshold: 0.5,
        base_seed: 40,
        dataset_seed: 0,
    }
}

fn small_config(seed: u64) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(seed);
    cfg.generation.total_tasks = 1500;
    cfg.n_runs = 2;
    cfg.train.epochs = 30;
    cfg.sofm.epochs = 40;
    cfg
}

/// Two well-separated classes along the first coordinate.
fn separable(n: usize, offset: usize) -> FeatureMatrix {
    let rows = (0..n)
        .map(|i| {
            let legit = (i + offset) % 3 != 0;
            let x = ((i * 7 + offset) % 10) as f64 / 40.0;
            vec![if legit { 0.75 + x } else { x }, ((i * 3) % 5) as f64 / 5.0]
        })
        .collect();
    let labels = (0..n).map(|i| (i + offset) % 3 != 0).collect();
    FeatureMatrix::new(rows, vec!["a".into(), "b".into()], labels).unwrap()
}

#[test]
fn single_run_report_mean_is_that_run() {
    let out = run_baseline(&separable(60, 0), &separable(30, 1), &[0, 1], 1, &settings(50)).unwrap();
    assert_eq!(out.report.runs.len(), 1);
    assert_eq!(out.report.mean_accuracy, out.report.runs[0].metrics.accuracy);
    assert_eq!(out.report.std_accuracy, 0.0);
}

#[test]
fn separable_data_is_classified_perfectly() {
    let out = run_baseline(&separable(120, 0), &separable(45, 2), &[0, 1], 3, &settings(300)).unwrap();
    for run in &out.report.runs {
        assert_eq!(run.metrics.accuracy, 1.0, "seed {}", run.seed);
    }
}

#[test]
fn all_mixed_partition_reduces_to_the_baseline() {
    let train = separable(90, 0);
    let test = separable(30, 1);
    let everything = |n: usize| ClusterPartition {
        assignment: vec![0; n],
        legitimate_only: vec![],
        mixed: (0..n).collect(),
    };
    let s = settings(40);
    let base = run_baseline(&train, &test, &[0, 1], 3, &s).unwrap();
    let prec = run_precdeepnn(&train, &everything(90), &test, &everything(30), &[0, 1], 3, &s).unwrap();
    assert_eq!(base.report.runs, prec.report.runs);
    assert_eq!(base.networks, prec.networks);
}

#[test]
fn empty_mixed_training_partition_is_an_error() {
    let train = separable(30, 0);
    let test = separable(12, 1);
    let all_legit = |n: usize| ClusterPartition {
        assignment: vec![0; n],
        legitimate_only: (0..n).collect(),
        mixed: vec![],
    };
    let mixed = ClusterPartition {
        assignment: vec![0; 12],
        legitimate_only: vec![],
        mixed: (0..12).collect(),
    };
    let err = run_precdeepnn(&train, &all_legit(30), &test, &mixed, &[0, 1], 1, &settings(5)).unwrap_err();
    assert!(matches!(err, Error::Domain(_)), "{err}");
}

#[test]
fn experiment_replays_bit_identically() {
    let cfg = small_config(9);
    let a = run_full_experiment(&cfg, None, VariantSelection::all()).unwrap();
    let b = run_full_experiment(&cfg, None, VariantSelection::all()).unwrap();
    for ((_, ra), (_, rb)) in a.reports().iter().zip(b.reports()) {
        assert_eq!(ra.to_json(), rb.to_json());
    }
    assert_eq!(a.sofm.unwrap().map.to_json(), b.sofm.unwrap().map.to_json());
}

#[test]
fn combined_accuracy_identity_and_exact_coverage() {
    let mut cfg = small_config(12);
    // A loose purity threshold lets some fakes into PrecL so the identity is
    // exercised with nonzero leakage.
    cfg.purity_threshold = 0.9;
    let out = run_full_experiment(&cfg, None, VariantSelection::all()).unwrap();
    let stage = out.sofm.as_ref().unwrap();
    let prec = out.prec.as_ref().unwrap();
    let combined = out.combined.as_ref().unwrap();
    let labels = &stage.test_labels;
    let precl = &stage.test_partition.legitimate_only;
    let legit_in_precl = precl.iter().filter(|&&i| labels[i]).count();

    for (r, pred) in prec.predictions.iter().enumerate() {
        let correct_mixed = pred.index_map.iter().zip(&pred.labels).filter(|(&i, &l)| labels[i] == l).count();
        let expected = (correct_mixed + legit_in_precl) as f64 / labels.len() as f64;
        assert_eq!(combined.runs[r].metrics.accuracy, expected);

        let merged = combine_with_precl(pred, precl, labels.len()).unwrap();
        assert_eq!(merged.labels.len(), labels.len());
        for &i in precl {
            assert!(merged.labels[i] && merged.from_precl[i]);
        }
        assert_eq!(merged.from_precl.iter().filter(|&&f| f).count(), precl.len());
    }
}

#[test]
fn leakage_counts_fakes_whose_bmu_is_legitimate_only() {
    let mut cfg = small_config(13);
    cfg.purity_threshold = 0.9;
    let out = run_full_experiment(&cfg, None, VariantSelection::all()).unwrap();
    let stage = out.sofm.as_ref().unwrap();
    let (_, test) = crowdguard::taskgen::split_temporal(&out.dataset, cfg.train_fraction).unwrap();
    let all = out.scaler.transform(&FeatureMatrix::from_dataset(&test)).unwrap();
    let scaled = all.select_columns(&out.selected_features).unwrap();
    let bmus = assign_clusters(&stage.map, scaled.rows()).unwrap();
    let marks = stage.map.marks().unwrap();
    let expected = bmus
        .iter()
        .zip(scaled.labels())
        .filter(|(&b, &legit)| !legit && marks[b] == ClusterMark::LegitimateOnly)
        .count();
    assert_eq!(stage.test_leakage(), expected);
    assert_eq!(out.combined.as_ref().unwrap().precl_leakage, expected);
    assert!(expected > 0, "threshold 0.9 should leak on this campaign");
}

#[test]
fn single_class_campaign_is_rejected_with_a_stage() {
    let mut cfg = small_config(1);
    cfg.generation.fake_fraction = 0.0;
    let err = run_full_experiment(&cfg, None, VariantSelection::all()).unwrap_err();
    assert!(matches!(err, Error::Stage { .. }), "{err}");
}

#[test]
fn invalid_config_is_tagged_config() {
    let mut cfg = small_config(1);
    cfg.n_runs = 0;
    let err = run_full_experiment(&cfg, None, VariantSelection::all()).unwrap_err();
    assert!(matches!(err, Error::Stage { stage: "config", .. }), "{err}");
}
