//! End-to-end experiment: generate, scale, rank features, pre-cluster, and
//! evaluate three classifiers on the same chronological test split.
//!
//! * `DeepNN` trains on the whole training split and predicts the whole test split.
//! * `PrecDeepNN` trains on the SOFM-mixed training subset and predicts the
//!   SOFM-mixed test subset.
//! * `PrecDeepNNPrecL` takes the `PrecDeepNN` predictions and labels the
//!   legitimate-only test subset (PrecL) legitimate without consulting the
//!   network, covering the whole test split again.
//!
//! Legitimate is the positive class in every metric.

use serde::{Deserialize, Serialize};

use crate::deepnn::{self, MlpNetwork, PredictionSet, TrainParams, TrainingTrace};
use crate::error::{Error, Result};
use crate::features::{self, Feature, FeatureMatrix, FeatureRanking, ReliefParams, Scaler};
use crate::sofm::{self, ClusterPartition, Contingency, SofmMap, SofmParams};
use crate::taskgen::{self, Dataset, GenerationConfig};

/// Confusion counts with legitimate as the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Metrics {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Metrics {
    pub fn total(&self) -> usize {
        self.tp + self.tn + self.fp + self.fn_
    }

    pub fn correct(&self) -> usize {
        self.tp + self.tn
    }

    /// False when precision had a zero denominator and is reported as 0.
    pub fn precision_defined(&self) -> bool {
        self.tp + self.fp > 0
    }

    /// False when recall had a zero denominator and is reported as 0.
    pub fn recall_defined(&self) -> bool {
        self.tp + self.fn_ > 0
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Confusion matrix and derived scores of `predicted` against `truth`.
pub fn evaluate(predicted: &[bool], truth: &[bool]) -> Result<Metrics> {
    if predicted.len() != truth.len() {
        return Err(Error::domain(format!(
            "{} predictions for {} labels",
            predicted.len(),
            truth.len()
        )));
    }
    if truth.is_empty() {
        return Err(Error::domain("cannot evaluate an empty label set"));
    }
    let (mut tp, mut tn, mut fp, mut fn_) = (0, 0, 0, 0);
    for (&p, &t) in predicted.iter().zip(truth) {
        match (p, t) {
            (true, true) => tp += 1,
            (false, false) => tn += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
        }
    }
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Ok(Metrics {
        tp,
        tn,
        fp,
        fn_,
        accuracy: (tp + tn) as f64 / truth.len() as f64,
        precision,
        recall,
        f1,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variant {
    DeepNN,
    PrecDeepNN,
    PrecDeepNNPrecL,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::DeepNN, Variant::PrecDeepNN, Variant::PrecDeepNNPrecL];

    pub fn name(self) -> &'static str {
        match self {
            Variant::DeepNN => "DeepNN",
            Variant::PrecDeepNN => "PrecDeepNN",
            Variant::PrecDeepNNPrecL => "PrecDeepNNPrecL",
        }
    }

    /// Report file stem.
    pub fn file_stem(self) -> &'static str {
        match self {
            Variant::DeepNN => "report_deepnn",
            Variant::PrecDeepNN => "report_precdeepnn",
            Variant::PrecDeepNNPrecL => "report_precdeepnn_precl",
        }
    }
}

/// One run's entry in a report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub seed: u64,
    #[serde(flatten)]
    pub metrics: Metrics,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetFingerprint {
    pub seed: u64,
    /// Training records the variant's networks saw.
    pub train: usize,
    /// Test records the variant was scored on.
    pub test: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub variant: String,
    pub runs: Vec<RunMetrics>,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
    pub precl_leakage: usize,
    pub dataset: DatasetFingerprint,
    /// Run whose network has the smallest training residual norm.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub selected_run: Option<usize>,
    /// Effective configuration that produced the report.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub config: Option<ExperimentConfig>,
}

impl EvaluationReport {
    fn new(variant: Variant, runs: Vec<RunMetrics>, precl_leakage: usize, dataset: DatasetFingerprint) -> Self {
        let accs: Vec<f64> = runs.iter().map(|r| r.metrics.accuracy).collect();
        let (mean_accuracy, std_accuracy) = mean_std(&accs);
        EvaluationReport {
            variant: variant.name().to_string(),
            runs,
            mean_accuracy,
            std_accuracy,
            precl_leakage,
            dataset,
            selected_run: None,
            config: None,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str, source: &str) -> Result<Self> {
        crate::error::parse_json(text, source)
    }
}

/// Arithmetic mean and sample standard deviation (0 for a single value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Shared settings for the classifier runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSettings {
    pub train: TrainParams,
    pub threshold: f64,
    /// Run `i` uses seed `base_seed + i` for initialization and shuffling.
    pub base_seed: u64,
    /// Seed recorded in the dataset fingerprint.
    pub dataset_seed: u64,
}

impl RunSettings {
    fn seeds(&self, n_runs: usize) -> Vec<u64> {
        (0..n_runs as u64).map(|i| self.base_seed.wrapping_add(i)).collect()
    }
}

/// Report plus the networks, traces and predictions behind it.
#[derive(Debug, Clone)]
pub struct VariantOutcome {
    pub report: EvaluationReport,
    pub networks: Vec<MlpNetwork>,
    pub traces: Vec<TrainingTrace>,
    pub predictions: Vec<PredictionSet>,
}

impl VariantOutcome {
    /// Network selected by the smallest training residual norm.
    pub fn selected_network(&self) -> Option<&MlpNetwork> {
        self.report.selected_run.map(|i| &self.networks[i])
    }
}

fn train_and_score(
    variant: Variant,
    train: &FeatureMatrix,
    test: &FeatureMatrix,
    test_index_map: Vec<usize>,
    n_runs: usize,
    settings: &RunSettings,
    precl_leakage: usize,
) -> Result<VariantOutcome> {
    if n_runs == 0 {
        return Err(Error::config("n_runs must be at least 1"));
    }
    let seeds = settings.seeds(n_runs);
    let trained = deepnn::train_restarts(train.dim(), train.rows(), train.labels(), &settings.train, &seeds)?;
    let mut runs = Vec::with_capacity(n_runs);
    let mut predictions = Vec::with_capacity(n_runs);
    for ((net, _), &seed) in trained.iter().zip(&seeds) {
        let pred = deepnn::predict(net, test.rows(), settings.threshold)?.with_index_map(test_index_map.clone())?;
        let metrics = evaluate(&pred.labels, test.labels())?;
        runs.push(RunMetrics { seed, metrics });
        predictions.push(pred);
    }
    let (networks, traces): (Vec<_>, Vec<_>) = trained.into_iter().unzip();
    let mut report = EvaluationReport::new(
        variant,
        runs,
        precl_leakage,
        DatasetFingerprint {
            seed: settings.dataset_seed,
            train: train.len(),
            test: test.len(),
        },
    );
    report.selected_run = deepnn::argmin_residual_norm(&traces.iter().collect::<Vec<_>>());
    Ok(VariantOutcome {
        report,
        networks,
        traces,
        predictions,
    })
}

/// Baseline: networks trained on the full training split, scored on the
/// full test split, using the `feature_indices` columns.
pub fn run_baseline(
    train: &FeatureMatrix,
    test: &FeatureMatrix,
    feature_indices: &[usize],
    n_runs: usize,
    settings: &RunSettings,
) -> Result<VariantOutcome> {
    let train = train.select_columns(feature_indices)?;
    let test = test.select_columns(feature_indices)?;
    let index_map = (0..test.len()).collect();
    train_and_score(Variant::DeepNN, &train, &test, index_map, n_runs, settings, 0)
}

/// Networks trained on the mixed training subset and scored on the mixed
/// test subset. Prediction index maps point into the full test split.
pub fn run_precdeepnn(
    train: &FeatureMatrix,
    train_partition: &ClusterPartition,
    test: &FeatureMatrix,
    test_partition: &ClusterPartition,
    feature_indices: &[usize],
    n_runs: usize,
    settings: &RunSettings,
) -> Result<VariantOutcome> {
    if train_partition.len() != train.len() || test_partition.len() != test.len() {
        return Err(Error::domain("partition does not match its matrix"));
    }
    if train_partition.mixed.is_empty() {
        return Err(Error::domain("mixed training partition is empty"));
    }
    if test_partition.mixed.is_empty() {
        return Err(Error::domain("mixed test partition is empty"));
    }
    let train_mixed = train.select_rows(&train_partition.mixed).select_columns(feature_indices)?;
    let test_mixed = test.select_rows(&test_partition.mixed).select_columns(feature_indices)?;
    let leakage = test_partition.leakage(test.labels());
    train_and_score(
        Variant::PrecDeepNN,
        &train_mixed,
        &test_mixed,
        test_partition.mixed.clone(),
        n_runs,
        settings,
        leakage,
    )
}

/// Final labels over the whole test split.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CombinedPrediction {
    pub labels: Vec<bool>,
    /// Records labeled by the legitimate-only fast path.
    pub from_precl: Vec<bool>,
}

/// Union of the network's predictions on the mixed subset with the PrecL
/// subset labeled legitimate. The two index sets must cover `0..test_len`
/// exactly once.
pub fn combine_with_precl(predictions: &PredictionSet, precl: &[usize], test_len: usize) -> Result<CombinedPrediction> {
    let mut labels: Vec<Option<bool>> = vec![None; test_len];
    let mut from_precl = vec![false; test_len];
    let mut place = |i: usize, label: bool| -> Result<()> {
        let slot = labels
            .get_mut(i)
            .ok_or_else(|| Error::Consistency(format!("index {i} beyond test set of {test_len}")))?;
        if slot.is_some() {
            return Err(Error::Consistency(format!("record {i} labeled twice")));
        }
        *slot = Some(label);
        Ok(())
    };
    for (&i, &label) in predictions.index_map.iter().zip(&predictions.labels) {
        place(i, label)?;
    }
    for &i in precl {
        place(i, true)?;
        from_precl[i] = true;
    }
    let labels = labels
        .into_iter()
        .enumerate()
        .map(|(i, l)| l.ok_or_else(|| Error::Consistency(format!("record {i} has no label"))))
        .collect::<Result<Vec<bool>>>()?;
    Ok(CombinedPrediction { labels, from_precl })
}

fn combined_report(
    prec: &VariantOutcome,
    test_partition: &ClusterPartition,
    test_labels: &[bool],
    settings: &RunSettings,
) -> Result<EvaluationReport> {
    let mut runs = Vec::with_capacity(prec.predictions.len());
    for (pred, run) in prec.predictions.iter().zip(&prec.report.runs) {
        let combined = combine_with_precl(pred, &test_partition.legitimate_only, test_labels.len())?;
        runs.push(RunMetrics {
            seed: run.seed,
            metrics: evaluate(&combined.labels, test_labels)?,
        });
    }
    let mut report = EvaluationReport::new(
        Variant::PrecDeepNNPrecL,
        runs,
        test_partition.leakage(test_labels),
        DatasetFingerprint {
            seed: settings.dataset_seed,
            train: prec.report.dataset.train,
            test: test_labels.len(),
        },
    );
    report.selected_run = prec.report.selected_run;
    Ok(report)
}

/// Which columns feed the SOFM and the classifiers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureChoice {
    /// The `k` best ReliefF features.
    ReliefTopK(usize),
    /// Explicit column indices into [`Feature::ALL`].
    Pinned(Vec<usize>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct VariantSelection {
    pub baseline: bool,
    pub prec: bool,
    pub combined: bool,
}

impl VariantSelection {
    pub fn all() -> Self {
        VariantSelection {
            baseline: true,
            prec: true,
            combined: true,
        }
    }

    fn needs_sofm(&self) -> bool {
        self.prec || self.combined
    }
}

/// Everything that determines an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub master_seed: u64,
    pub generation: GenerationConfig,
    pub train_fraction: f64,
    pub features: FeatureChoice,
    pub relieff: ReliefParams,
    pub sofm_rows: usize,
    pub sofm_cols: usize,
    pub sofm: SofmParams,
    /// Seed of the SOFM weight initialization.
    pub sofm_init_seed: u64,
    pub purity_threshold: f64,
    pub train: TrainParams,
    pub n_runs: usize,
    /// Seed of run 0; run `i` uses `run_base_seed + i`.
    pub run_base_seed: u64,
    pub threshold: f64,
}

/// Master seed used when none is given.
pub const DEFAULT_MASTER_SEED: u64 = 1;

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig::new(DEFAULT_MASTER_SEED)
    }
}

/// Seed offsets from the master seed.
pub mod seed_offsets {
    pub const DATASET: u64 = 0;
    pub const SOFM_INIT: u64 = 1;
    pub const SOFM_TRAIN: u64 = 2;
    pub const RELIEFF: u64 = 3;
    pub const RUNS: u64 = 100;
}

impl ExperimentConfig {
    /// Default experiment with every seed derived from `master_seed`.
    pub fn new(master_seed: u64) -> Self {
        let mut cfg = ExperimentConfig {
            master_seed,
            generation: GenerationConfig::default(),
            train_fraction: 0.8,
            features: FeatureChoice::Pinned(Feature::REFERENCE_SELECTION.iter().map(|f| f.index()).collect()),
            relieff: ReliefParams::default(),
            sofm_rows: 4,
            sofm_cols: 4,
            sofm: SofmParams::default(),
            sofm_init_seed: 0,
            purity_threshold: 1.0,
            train: TrainParams::default(),
            n_runs: 10,
            run_base_seed: 0,
            threshold: 0.5,
        };
        cfg.reseed(master_seed);
        cfg
    }

    /// Re-derives every seed (and the default attack zones) from `master_seed`.
    pub fn reseed(&mut self, master_seed: u64) {
        use seed_offsets::*;
        self.master_seed = master_seed;
        let dataset_seed = master_seed.wrapping_add(DATASET);
        let zones = GenerationConfig::with_seed(dataset_seed).attack_zones;
        self.generation.rng_seed = dataset_seed;
        self.generation.attack_zones = zones;
        self.sofm_init_seed = master_seed.wrapping_add(SOFM_INIT);
        self.sofm.rng_seed = master_seed.wrapping_add(SOFM_TRAIN);
        self.relieff.rng_seed = master_seed.wrapping_add(RELIEFF);
        self.run_base_seed = master_seed.wrapping_add(RUNS);
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::config("train_fraction must lie in (0, 1)"));
        }
        if self.n_runs == 0 {
            return Err(Error::config("n_runs must be at least 1"));
        }
        if self.sofm_rows == 0 || self.sofm_cols == 0 {
            return Err(Error::config("SOFM grid dimensions must be positive"));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::config("threshold must lie in (0, 1)"));
        }
        match &self.features {
            FeatureChoice::ReliefTopK(k) if *k == 0 || *k > Feature::ALL.len() => {
                return Err(Error::config(format!("cannot select {k} of {} features", Feature::ALL.len())))
            }
            FeatureChoice::Pinned(cols) => {
                if cols.is_empty() {
                    return Err(Error::config("feature list is empty"));
                }
                if let Some(c) = cols.iter().find(|&&c| c >= Feature::ALL.len()) {
                    return Err(Error::config(format!("feature index {c} out of range")));
                }
                let mut sorted = cols.clone();
                sorted.sort_unstable();
                sorted.dedup();
                if sorted.len() != cols.len() {
                    return Err(Error::config("feature list has duplicates"));
                }
            }
            _ => {}
        }
        self.sofm.validate()
    }

    fn run_settings(&self, dataset_seed: u64) -> RunSettings {
        RunSettings {
            train: self.train,
            threshold: self.threshold,
            base_seed: self.run_base_seed,
            dataset_seed,
        }
    }
}

/// Everything an experiment produced.
#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub config: ExperimentConfig,
    pub dataset: Dataset,
    pub train_len: usize,
    pub test_len: usize,
    pub ranking: FeatureRanking,
    pub selected_features: Vec<usize>,
    pub scaler: Scaler,
    pub sofm: Option<SofmStage>,
    pub baseline: Option<VariantOutcome>,
    pub prec: Option<VariantOutcome>,
    pub combined: Option<EvaluationReport>,
}

/// Trained map and the partitions it induced.
#[derive(Debug, Clone)]
pub struct SofmStage {
    pub map: SofmMap,
    pub train_partition: ClusterPartition,
    pub test_partition: ClusterPartition,
    pub train_contingency: Contingency,
    pub test_contingency: Contingency,
    pub test_labels: Vec<bool>,
}

impl SofmStage {
    pub fn contingency_csv(&self) -> String {
        let marks = self.map.marks().expect("labeled map");
        sofm::contingency_csv(
            marks,
            &[("training", &self.train_contingency), ("test", &self.test_contingency)],
        )
    }

    pub fn test_leakage(&self) -> usize {
        self.test_partition.leakage(&self.test_labels)
    }
}

impl ExperimentOutcome {
    /// Reports in variant order, skipping variants that were not run.
    pub fn reports(&self) -> Vec<(Variant, &EvaluationReport)> {
        let mut out = Vec::new();
        if let Some(b) = &self.baseline {
            out.push((Variant::DeepNN, &b.report));
        }
        if let Some(p) = &self.prec {
            out.push((Variant::PrecDeepNN, &p.report));
        }
        if let Some(c) = &self.combined {
            out.push((Variant::PrecDeepNNPrecL, c));
        }
        out
    }

    pub fn ranking_report(&self) -> features::RankingReport {
        features::RankingReport::new(&self.ranking, &self.selected_features)
    }
}

/// Runs the whole flow. When `dataset` is `None` the campaign is generated
/// from `config.generation`.
pub fn run_full_experiment(
    config: &ExperimentConfig,
    dataset: Option<Dataset>,
    variants: VariantSelection,
) -> Result<ExperimentOutcome> {
    config.validate().map_err(|e| e.at_stage("config"))?;
    let dataset = match dataset {
        Some(d) => d,
        None => taskgen::generate_campaign(&config.generation).map_err(|e| e.at_stage("generate"))?,
    };
    let dataset_seed = config.generation.rng_seed;
    let (train_ds, test_ds) = taskgen::split_temporal(&dataset, config.train_fraction).map_err(|e| e.at_stage("split"))?;

    let scaled = (|| {
        let train_raw = FeatureMatrix::from_dataset(&train_ds);
        let test_raw = FeatureMatrix::from_dataset(&test_ds);
        if !train_raw.has_both_classes() {
            return Err(Error::domain("training split contains a single class"));
        }
        let scaler = Scaler::fit(&train_raw)?;
        Ok((scaler.transform(&train_raw)?, scaler.transform(&test_raw)?, scaler))
    })();
    let (train, test, scaler) = scaled.map_err(|e| e.at_stage("normalize"))?;

    let (ranking, selected) = (|| {
        let r = &config.relieff;
        let ranking = features::relieff(&train, r.k_neighbors, r.sample_count, r.rng_seed)?;
        let selected = match &config.features {
            FeatureChoice::ReliefTopK(k) => features::select_top_k(&ranking, *k)?,
            FeatureChoice::Pinned(cols) => cols.clone(),
        };
        Ok((ranking, selected))
    })()
    .map_err(|e: Error| e.at_stage("select_features"))?;

    let settings = config.run_settings(dataset_seed);

    let baseline = if variants.baseline {
        Some(run_baseline(&train, &test, &selected, config.n_runs, &settings).map_err(|e| e.at_stage("baseline"))?)
    } else {
        None
    };

    let sofm_stage = if variants.needs_sofm() {
        Some(
            build_sofm_stage(config, &train, &test, &selected).map_err(|e| e.at_stage("sofm"))?,
        )
    } else {
        None
    };

    let (prec, combined) = match &sofm_stage {
        Some(stage) => {
            let prec = run_precdeepnn(
                &train,
                &stage.train_partition,
                &test,
                &stage.test_partition,
                &selected,
                config.n_runs,
                &settings,
            )
            .map_err(|e| e.at_stage("precdeepnn"))?;
            let combined = if variants.combined {
                Some(
                    combined_report(&prec, &stage.test_partition, test.labels(), &settings)
                        .map_err(|e| e.at_stage("combine"))?,
                )
            } else {
                None
            };
            (variants.prec.then_some(prec), combined)
        }
        None => (None, None),
    };

    let mut outcome = ExperimentOutcome {
        config: config.clone(),
        train_len: train_ds.len(),
        test_len: test_ds.len(),
        dataset,
        ranking,
        selected_features: selected,
        scaler,
        sofm: sofm_stage,
        baseline,
        prec,
        combined,
    };
    if let Some(b) = &mut outcome.baseline {
        b.report.config = Some(config.clone());
    }
    if let Some(p) = &mut outcome.prec {
        p.report.config = Some(config.clone());
    }
    if let Some(c) = &mut outcome.combined {
        c.config = Some(config.clone());
    }
    Ok(outcome)
}

fn build_sofm_stage(
    config: &ExperimentConfig,
    train: &FeatureMatrix,
    test: &FeatureMatrix,
    selected: &[usize],
) -> Result<SofmStage> {
    let train_sel = train.select_columns(selected)?;
    let test_sel = test.select_columns(selected)?;
    let map = sofm::init_map(config.sofm_rows, config.sofm_cols, selected.len(), config.sofm_init_seed)?;
    let map = sofm::train_sofm(map, train_sel.rows(), &config.sofm)?;
    let assignment = sofm::assign_clusters(&map, train_sel.rows())?;
    let marks = sofm::label_clusters(&assignment, train_sel.labels(), map.neuron_count(), config.purity_threshold)?;
    let map = map.with_marks(marks)?;
    let train_partition = sofm::partition(&map, &train_sel)?;
    let test_partition = sofm::partition(&map, &test_sel)?;
    let n = map.neuron_count();
    Ok(SofmStage {
        train_contingency: Contingency::tally(&train_partition.assignment, train_sel.labels(), n)?,
        test_contingency: Contingency::tally(&test_partition.assignment, test_sel.labels(), n)?,
        test_labels: test_sel.labels().to_vec(),
        map,
        train_partition,
        test_partition,
    })
}
