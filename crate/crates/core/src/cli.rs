//! Command-line front end: `generate`, `run` and `inspect`.
//!
//! Settings resolve as flags, then the TOML file given by `--config`, then
//! built-in defaults. The config file mirrors the flags:
//!
//! ```toml
//! seed = 7
//!
//! [generation]
//! total = 14306
//! fake-fraction = 0.124
//!
//! [run]
//! runs = 10
//! features = "latitude,longitude,grid_number,coverage_m"
//! sofm-grid = "4x4"
//! ```

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::deepnn::MlpNetwork;
use crate::error::{Error, Result};
use crate::features::{Feature, RankingReport};
use crate::pipeline::{
    run_full_experiment, EvaluationReport, ExperimentConfig, ExperimentOutcome, FeatureChoice, VariantSelection,
    DEFAULT_MASTER_SEED,
};
use crate::plot;
use crate::sofm::{ClusterMark, SofmMap};
use crate::taskgen::{generate_campaign, seeded_zones, Dataset, CSV_HEADER, DEFAULT_ZONE_COUNT, DEFAULT_ZONE_RADIUS_M};

#[derive(Debug, Parser)]
#[command(name = "crowdguard", version, about = "Fake sensing-task detection with SOFM pre-clustering")]
struct Cli {
    /// Master seed; every random stream derives from it.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// TOML file with `[generation]` and `[run]` tables.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    /// Format of the summary printed to stdout.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a campaign and write it as CSV.
    Generate(GenerateArgs),
    /// Run the experiment end to end and write reports, models and a chart.
    Run(RunArgs),
    /// Summarize a dataset, map, network, report or ranking file.
    Inspect(InspectArgs),
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[command(flatten)]
    generation: GenerationOverrides,
    /// Output file (default: <out-dir>/dataset.csv).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long, value_enum, default_value_t = VariantArg::All)]
    variant: VariantArg,
    /// Dataset CSV to use instead of generating one.
    #[arg(long)]
    input: Option<PathBuf>,
    #[command(flatten)]
    generation: GenerationOverrides,
    #[command(flatten)]
    run: RunOverrides,
}

#[derive(Debug, Args)]
struct InspectArgs {
    path: PathBuf,
    #[arg(long, value_enum, default_value_t = Kind::Auto)]
    kind: Kind,
    /// Write the parsed file back out in canonical form.
    #[arg(long)]
    rewrite: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum VariantArg {
    All,
    Baseline,
    Prec,
    Combined,
}

impl VariantArg {
    fn selection(self) -> VariantSelection {
        match self {
            VariantArg::All => VariantSelection::all(),
            VariantArg::Baseline => VariantSelection { baseline: true, ..Default::default() },
            VariantArg::Prec => VariantSelection { prec: true, ..Default::default() },
            VariantArg::Combined => VariantSelection { combined: true, ..Default::default() },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Kind {
    Auto,
    Dataset,
    Sofm,
    Network,
    Report,
    Ranking,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
struct GenerationOverrides {
    /// Number of tasks in the campaign.
    #[arg(long)]
    total: Option<usize>,
    #[arg(long)]
    fake_fraction: Option<f64>,
    #[arg(long)]
    days: Option<u32>,
    /// Number of attack zones.
    #[arg(long)]
    zones: Option<usize>,
    #[arg(long)]
    zone_radius: Option<f64>,
    /// Grid cell edge in meters.
    #[arg(long)]
    grid_cell: Option<f64>,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
struct RunOverrides {
    /// Comma-separated feature indices or names.
    #[arg(long, conflicts_with = "select_top")]
    features: Option<String>,
    /// Use the k best ReliefF features instead of a fixed list.
    #[arg(long)]
    select_top: Option<usize>,
    #[arg(long)]
    runs: Option<usize>,
    /// SOFM lattice as RxC.
    #[arg(long)]
    sofm_grid: Option<String>,
    #[arg(long)]
    sofm_epochs: Option<usize>,
    #[arg(long)]
    purity: Option<f64>,
    #[arg(long)]
    train_fraction: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    momentum: Option<f64>,
    #[arg(long)]
    patience: Option<usize>,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    relieff_k: Option<usize>,
    /// ReliefF instances to score (0 = all).
    #[arg(long)]
    relieff_samples: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    seed: Option<u64>,
    #[serde(default)]
    generation: GenerationOverrides,
    #[serde(default)]
    run: RunOverrides,
}

macro_rules! prefer {
    ($hi:expr, $lo:expr; $($field:ident),*) => {
        $( $hi.$field = $hi.$field.take().or($lo.$field.take()); )*
    };
}

impl GenerationOverrides {
    fn or(mut self, mut lower: GenerationOverrides) -> Self {
        prefer!(self, lower; total, fake_fraction, days, zones, zone_radius, grid_cell);
        self
    }

    fn apply(&self, cfg: &mut ExperimentConfig) {
        let g = &mut cfg.generation;
        if let Some(v) = self.total {
            g.total_tasks = v;
        }
        if let Some(v) = self.fake_fraction {
            g.fake_fraction = v;
        }
        if let Some(v) = self.days {
            g.num_days = v;
        }
        if let Some(v) = self.grid_cell {
            g.grid_cell_m = v;
        }
        if self.zones.is_some() || self.zone_radius.is_some() {
            g.attack_zones = seeded_zones(
                &g.bounding_box,
                self.zones.unwrap_or(DEFAULT_ZONE_COUNT),
                self.zone_radius.unwrap_or(DEFAULT_ZONE_RADIUS_M),
                g.rng_seed,
            );
        }
    }
}

impl RunOverrides {
    fn or(mut self, mut lower: RunOverrides) -> Self {
        // A feature list on the command line beats a top-k in the file, and
        // the other way round.
        if self.features.is_some() || self.select_top.is_some() {
            lower.features = None;
            lower.select_top = None;
        }
        prefer!(self, lower; features, select_top, runs, sofm_grid, sofm_epochs, purity, train_fraction,
            epochs, batch_size, learning_rate, momentum, patience, threshold, relieff_k, relieff_samples);
        self
    }

    fn apply(&self, cfg: &mut ExperimentConfig) -> Result<()> {
        if let Some(list) = &self.features {
            cfg.features = FeatureChoice::Pinned(parse_features(list)?);
        }
        if let Some(k) = self.select_top {
            cfg.features = FeatureChoice::ReliefTopK(k);
        }
        if let Some(grid) = &self.sofm_grid {
            let (r, c) = parse_grid(grid)?;
            cfg.sofm_rows = r;
            cfg.sofm_cols = c;
        }
        macro_rules! set {
            ($($src:ident => $($dst:ident).+),*) => {
                $( if let Some(v) = self.$src { cfg.$($dst).+ = v; } )*
            };
        }
        set!(runs => n_runs, sofm_epochs => sofm.epochs, purity => purity_threshold,
            train_fraction => train_fraction, epochs => train.epochs, batch_size => train.batch_size,
            learning_rate => train.learning_rate, momentum => train.momentum, patience => train.patience,
            threshold => threshold, relieff_k => relieff.k_neighbors, relieff_samples => relieff.sample_count);
        Ok(())
    }
}

/// Parses `0,1,6,8` or `latitude,longitude,...` (mixing is allowed).
fn parse_features(list: &str) -> Result<Vec<usize>> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|item| match item.parse::<usize>() {
            Ok(i) if i < Feature::ALL.len() => Ok(i),
            Ok(i) => Err(Error::config(format!("feature index {i} out of range 0..{}", Feature::ALL.len()))),
            Err(_) => Feature::from_name(item)
                .map(Feature::index)
                .ok_or_else(|| Error::config(format!("unknown feature `{item}`"))),
        })
        .collect()
}

fn parse_grid(text: &str) -> Result<(usize, usize)> {
    let bad = || Error::config(format!("SOFM grid `{text}` is not RxC"));
    let (r, c) = text.split_once(['x', 'X']).ok_or_else(bad)?;
    let r: usize = r.trim().parse().map_err(|_| bad())?;
    let c: usize = c.trim().parse().map_err(|_| bad())?;
    if r == 0 || c == 0 {
        return Err(bad());
    }
    Ok((r, c))
}

fn load_file_config(path: Option<&Path>) -> Result<FileConfig> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    toml::from_str(&text).map_err(|e| {
        let message = e.message().to_string();
        let field = message.split('`').nth(1).map(str::to_string).unwrap_or_else(|| "config".into());
        Error::parse(path.display().to_string(), field, message)
    })
}

fn build_config(
    seed: Option<u64>,
    file: FileConfig,
    generation: GenerationOverrides,
    run: Option<RunOverrides>,
) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::new(seed.or(file.seed).unwrap_or(DEFAULT_MASTER_SEED));
    generation.or(file.generation).apply(&mut cfg);
    if let Some(run) = run {
        run.or(file.run).apply(&mut cfg)?;
    }
    Ok(cfg)
}

/// Writes through a sibling temp file and a rename, so readers never see a
/// half-written artifact.
fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, contents).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        Error::io(path, e)
    })
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Ordered key/value summary printed by every command.
struct Summary(Vec<(String, Value)>);

impl Summary {
    fn new() -> Self {
        Summary(Vec::new())
    }

    fn put(&mut self, key: &str, value: impl Into<Value>) {
        self.0.push((key.to_string(), value.into()));
    }

    fn render(&self, format: Format) -> String {
        match format {
            Format::Json => {
                let map: serde_json::Map<String, Value> = self.0.iter().cloned().collect();
                serde_json::to_string_pretty(&Value::Object(map)).expect("summary serializes") + "\n"
            }
            Format::Csv => {
                let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(vec![]);
                w.write_record(["key", "value"]).expect("in-memory write");
                for (k, v) in &self.0 {
                    w.write_record([k.as_str(), &scalar_text(v)]).expect("in-memory write");
                }
                String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
            }
            Format::Text => {
                let mut out = String::new();
                for (k, v) in &self.0 {
                    match v {
                        Value::Array(items) => {
                            out.push_str(&format!("{k}:\n"));
                            for item in items {
                                out.push_str(&format!("  - {}\n", scalar_text(item)));
                            }
                        }
                        Value::Object(fields) => {
                            out.push_str(&format!("{k}:\n"));
                            for (fk, fv) in fields {
                                out.push_str(&format!("  {fk}: {}\n", scalar_text(fv)));
                            }
                        }
                        _ => out.push_str(&format!("{k}: {}\n", scalar_text(v))),
                    }
                }
                out
            }
        }
    }
}

fn scalar_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn day_histogram(dataset: &Dataset) -> Value {
    let map: serde_json::Map<String, Value> =
        dataset.day_histogram().into_iter().map(|(d, n)| (d.to_string(), json!(n))).collect();
    Value::Object(map)
}

fn cmd_generate(cli_seed: Option<u64>, file: FileConfig, out_dir: &Path, args: GenerateArgs) -> Result<Summary> {
    let cfg = build_config(cli_seed, file, args.generation, None).map_err(|e| e.at_stage("config"))?;
    let dataset = generate_campaign(&cfg.generation).map_err(|e| e.at_stage("generate"))?;
    let path = match args.out {
        Some(p) => p,
        None => {
            ensure_dir(out_dir).map_err(|e| e.at_stage("write"))?;
            out_dir.join("dataset.csv")
        }
    };
    write_atomic(&path, dataset.to_csv_string().as_bytes()).map_err(|e| e.at_stage("write"))?;

    let mut s = Summary::new();
    s.put("path", path.display().to_string());
    s.put("seed", cfg.master_seed);
    s.put("tasks", dataset.len());
    s.put("legitimate", dataset.legitimate_count());
    s.put("fake", dataset.fake_count());
    s.put("attack_zones", cfg.generation.attack_zones.len());
    s.put("tasks_per_day", day_histogram(&dataset));
    Ok(s)
}

fn read_dataset(path: &Path) -> Result<Dataset> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Dataset::read_csv(std::io::BufReader::new(file), &path.display().to_string())
}

fn json_file(value: String) -> Vec<u8> {
    (value + "\n").into_bytes()
}

/// Writes every artifact of a finished experiment; returns the paths written.
fn write_artifacts(outcome: &ExperimentOutcome, dir: &Path) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let mut written = Vec::new();
    let mut emit = |name: &str, bytes: Vec<u8>| -> Result<()> {
        let path = dir.join(name);
        write_atomic(&path, &bytes)?;
        written.push(path);
        Ok(())
    };
    emit("dataset.csv", outcome.dataset.to_csv_string().into_bytes())?;
    emit("ranking.json", json_file(outcome.ranking_report().to_json()))?;
    let reports = outcome.reports();
    for (variant, report) in &reports {
        emit(&format!("{}.json", variant.file_stem()), json_file(report.to_json()))?;
    }
    if let Some(net) = outcome.baseline.as_ref().and_then(|v| v.selected_network()) {
        emit("network_deepnn.json", json_file(net.to_json()))?;
    }
    if let Some(net) = outcome.prec.as_ref().and_then(|v| v.selected_network()) {
        emit("network_precdeepnn.json", json_file(net.to_json()))?;
    }
    if let Some(stage) = &outcome.sofm {
        emit("sofm.json", json_file(stage.map.to_json()))?;
        emit("contingency.csv", stage.contingency_csv().into_bytes())?;
    }
    let bars: Vec<&EvaluationReport> = reports.iter().map(|(_, r)| *r).collect();
    emit("accuracy.svg", plot::accuracy_chart(&bars).into_bytes())?;
    Ok(written)
}

fn cmd_run(cli_seed: Option<u64>, file: FileConfig, out_dir: &Path, args: RunArgs) -> Result<Summary> {
    let cfg = build_config(cli_seed, file, args.generation, Some(args.run)).map_err(|e| e.at_stage("config"))?;
    let dataset = match &args.input {
        Some(path) => Some(read_dataset(path).map_err(|e| e.at_stage("load"))?),
        None => None,
    };
    let outcome = run_full_experiment(&cfg, dataset, args.variant.selection())?;
    let written = write_artifacts(&outcome, out_dir).map_err(|e| e.at_stage("write"))?;

    let mut s = Summary::new();
    s.put("seed", cfg.master_seed);
    s.put("train_tasks", outcome.train_len);
    s.put("test_tasks", outcome.test_len);
    s.put(
        "features",
        outcome.selected_features.iter().map(|&i| Feature::ALL[i].name()).collect::<Vec<_>>().join(","),
    );
    if let Some(stage) = &outcome.sofm {
        s.put("precl_train", stage.train_partition.legitimate_only.len());
        s.put("precl_test", stage.test_partition.legitimate_only.len());
        s.put("precl_test_leakage", stage.test_leakage());
    }
    for (variant, report) in outcome.reports() {
        s.put(
            &format!("accuracy_{}", variant.file_stem().trim_start_matches("report_")),
            format!("{:.4} ± {:.4}", report.mean_accuracy, report.std_accuracy),
        );
    }
    s.put("written", written.iter().map(|p| json!(p.display().to_string())).collect::<Vec<_>>());
    Ok(s)
}

fn detect_kind(text: &str, source: &str) -> Result<Kind> {
    if text.lines().next().map(|l| l.trim_end_matches('\r')) == Some(CSV_HEADER.join(",").as_str()) {
        return Ok(Kind::Dataset);
    }
    let value: Value = crate::error::parse_json(text, source)?;
    let has = |k: &str| value.get(k).is_some();
    Ok(if has("layer_sizes") {
        Kind::Network
    } else if has("variant") {
        Kind::Report
    } else if has("order") {
        Kind::Ranking
    } else if has("weights") && has("rows") {
        Kind::Sofm
    } else {
        return Err(Error::parse(source, "document", "not a dataset, SOFM, network, report or ranking"));
    })
}

fn mark_name(mark: ClusterMark) -> &'static str {
    match mark {
        ClusterMark::LegitimateOnly => "legitimate_only",
        ClusterMark::Mixed => "mixed",
    }
}

fn cmd_inspect(args: InspectArgs) -> Result<Summary> {
    let source = args.path.display().to_string();
    let bytes = fs::read(&args.path).map_err(|e| Error::io(&args.path, e))?;
    let text = String::from_utf8(bytes).map_err(|e| Error::parse(&source, "file", e.to_string()))?;
    if text.trim().is_empty() {
        return Err(Error::parse(&source, "file", "is empty"));
    }
    let kind = match args.kind {
        Kind::Auto => detect_kind(&text, &source)?,
        k => k,
    };

    let mut s = Summary::new();
    let canonical: Vec<u8> = match kind {
        Kind::Dataset => {
            let d = Dataset::read_csv(text.as_bytes(), &source)?;
            s.put("kind", "dataset");
            s.put("tasks", d.len());
            s.put("legitimate", d.legitimate_count());
            s.put("fake", d.fake_count());
            s.put("tasks_per_day", day_histogram(&d));
            d.to_csv_string().into_bytes()
        }
        Kind::Sofm => {
            let map = SofmMap::from_json(&text, &source)?;
            s.put("kind", "sofm");
            s.put("grid", format!("{}x{}", map.rows, map.cols));
            s.put("dim", map.dim);
            s.put("trained", map.trained);
            s.put("seed", map.seed);
            if let Some(p) = &map.params {
                s.put("epochs", p.epochs);
                s.put("alpha0", p.alpha0);
                s.put("sigma0", p.sigma0);
            }
            if let Some(marks) = map.marks() {
                let listed: Vec<Value> =
                    marks.iter().enumerate().map(|(i, &m)| json!(format!("{}: {}", i + 1, mark_name(m)))).collect();
                s.put(
                    "legitimate_only_clusters",
                    marks.iter().filter(|&&m| m == ClusterMark::LegitimateOnly).count(),
                );
                s.put("cluster_marks", listed);
            }
            json_file(map.to_json())
        }
        Kind::Network => {
            let net = MlpNetwork::from_json(&text, &source)?;
            s.put("kind", "network");
            s.put(
                "layers",
                net.layer_sizes.iter().map(|n| n.to_string()).collect::<Vec<_>>().join("-"),
            );
            s.put("parameters", net.param_count());
            s.put("seed", net.seed);
            if let Some(p) = &net.train_params {
                s.put("epochs", p.epochs);
                s.put("batch_size", p.batch_size);
                s.put("learning_rate", p.learning_rate);
                s.put("momentum", p.momentum);
            }
            json_file(net.to_json())
        }
        Kind::Report => {
            let r = EvaluationReport::from_json(&text, &source)?;
            s.put("kind", "report");
            s.put("variant", r.variant.clone());
            s.put("runs", r.runs.len());
            s.put("mean_accuracy", r.mean_accuracy);
            s.put("std_accuracy", r.std_accuracy);
            s.put("precl_leakage", r.precl_leakage);
            s.put("train_tasks", r.dataset.train);
            s.put("test_tasks", r.dataset.test);
            if let Some(sel) = r.selected_run {
                s.put("selected_run", sel);
            }
            s.put(
                "run_accuracy",
                r.runs.iter().map(|m| json!(format!("seed {}: {:.4}", m.seed, m.metrics.accuracy))).collect::<Vec<_>>(),
            );
            json_file(r.to_json())
        }
        Kind::Ranking => {
            let r = RankingReport::from_json(&text, &source)?;
            let name = |i: usize| Feature::ALL.get(i).map_or_else(|| i.to_string(), |f| f.name().to_string());
            s.put("kind", "ranking");
            s.put(
                "order",
                r.order.iter().map(|&i| json!(format!("{} {:.6}", name(i), r.weights[i]))).collect::<Vec<_>>(),
            );
            s.put("selected", r.selected.iter().map(|&i| name(i)).collect::<Vec<_>>().join(","));
            json_file(r.to_json())
        }
        Kind::Auto => unreachable!("kind resolved above"),
    };
    s.put("canonical", canonical == text.as_bytes());
    if let Some(out) = &args.rewrite {
        write_atomic(out, &canonical)?;
        s.put("rewritten", out.display().to_string());
    }
    Ok(s)
}

/// Runs the tool on `args` (program name first) and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli) {
        Ok(text) => {
            print!("{text}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn execute(cli: Cli) -> Result<String> {
    let format = cli.format;
    let summary = match cli.command {
        Command::Inspect(args) => cmd_inspect(args)?,
        command => {
            let file = load_file_config(cli.config.as_deref()).map_err(|e| e.at_stage("config"))?;
            match command {
                Command::Generate(args) => cmd_generate(cli.seed, file, &cli.out_dir, args)?,
                Command::Run(args) => cmd_run(cli.seed, file, &cli.out_dir, args)?,
                Command::Inspect(_) => unreachable!(),
            }
        }
    };
    Ok(summary.render(format))
}
