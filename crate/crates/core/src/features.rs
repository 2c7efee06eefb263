//! Feature extraction, min-max scaling and ReliefF ranking.

use std::cmp::Ordering;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::taskgen::{Dataset, TaskRecord};

/// Candidate features of a task. `day` is deliberately absent: it only
/// indexes the campaign and does not separate the classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Feature {
    Latitude,
    Longitude,
    Hour,
    Minute,
    DurationMin,
    BatteryPct,
    GridNumber,
    OnPeak,
    CoverageM,
}

impl Feature {
    /// All candidate features, in column order.
    pub const ALL: [Feature; 9] = [
        Feature::Latitude,
        Feature::Longitude,
        Feature::Hour,
        Feature::Minute,
        Feature::DurationMin,
        Feature::BatteryPct,
        Feature::GridNumber,
        Feature::OnPeak,
        Feature::CoverageM,
    ];

    /// Latitude, longitude, grid number and coverage.
    pub const REFERENCE_SELECTION: [Feature; 4] = [
        Feature::Latitude,
        Feature::Longitude,
        Feature::GridNumber,
        Feature::CoverageM,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Feature::Latitude => "latitude",
            Feature::Longitude => "longitude",
            Feature::Hour => "hour",
            Feature::Minute => "minute",
            Feature::DurationMin => "duration_min",
            Feature::BatteryPct => "battery_pct",
            Feature::GridNumber => "grid_number",
            Feature::OnPeak => "on_peak",
            Feature::CoverageM => "coverage_m",
        }
    }

    pub fn index(self) -> usize {
        Feature::ALL.iter().position(|&f| f == self).expect("listed")
    }

    pub fn from_name(name: &str) -> Option<Feature> {
        Feature::ALL.iter().copied().find(|f| f.name() == name)
    }

    fn value(self, r: &TaskRecord) -> f64 {
        match self {
            Feature::Latitude => r.latitude,
            Feature::Longitude => r.longitude,
            Feature::Hour => r.hour as f64,
            Feature::Minute => r.minute as f64,
            Feature::DurationMin => r.duration_min as f64,
            Feature::BatteryPct => r.battery_pct as f64,
            Feature::GridNumber => r.grid_number as f64,
            Feature::OnPeak => f64::from(u8::from(r.on_peak)),
            Feature::CoverageM => r.coverage_m as f64,
        }
    }
}

/// Samples by features, with one legitimacy label per row.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    rows: Vec<Vec<f64>>,
    feature_names: Vec<String>,
    labels: Vec<bool>,
}

impl FeatureMatrix {
    pub fn new(rows: Vec<Vec<f64>>, feature_names: Vec<String>, labels: Vec<bool>) -> Result<Self> {
        let d = feature_names.len();
        if let Some(i) = rows.iter().position(|r| r.len() != d) {
            return Err(Error::domain(format!("row {i} has {} values, expected {d}", rows[i].len())));
        }
        if labels.len() != rows.len() {
            return Err(Error::domain(format!("{} labels for {} rows", labels.len(), rows.len())));
        }
        Ok(FeatureMatrix {
            rows,
            feature_names,
            labels,
        })
    }

    /// All candidate features of every record, unscaled.
    pub fn from_dataset(dataset: &Dataset) -> Self {
        let rows = dataset
            .records()
            .iter()
            .map(|r| Feature::ALL.iter().map(|f| f.value(r)).collect())
            .collect();
        FeatureMatrix {
            rows,
            feature_names: Feature::ALL.iter().map(|f| f.name().to_string()).collect(),
            labels: dataset.records().iter().map(|r| r.legitimate).collect(),
        }
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn labels(&self) -> &[bool] {
        &self.labels
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.feature_names.len()
    }

    /// Keeps only the given columns, in the given order.
    pub fn select_columns(&self, columns: &[usize]) -> Result<FeatureMatrix> {
        if let Some(&c) = columns.iter().find(|&&c| c >= self.dim()) {
            return Err(Error::domain(format!("column {c} out of range for {} features", self.dim())));
        }
        Ok(FeatureMatrix {
            rows: self
                .rows
                .iter()
                .map(|r| columns.iter().map(|&c| r[c]).collect())
                .collect(),
            feature_names: columns.iter().map(|&c| self.feature_names[c].clone()).collect(),
            labels: self.labels.clone(),
        })
    }

    /// Keeps only the given rows, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            feature_names: self.feature_names.clone(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    pub fn has_both_classes(&self) -> bool {
        self.labels.iter().any(|&l| l) && self.labels.iter().any(|&l| !l)
    }
}

/// Per-feature min/max recorded from training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub mins: Vec<f64>,
    pub maxs: Vec<f64>,
}

impl Scaler {
    pub fn fit(train: &FeatureMatrix) -> Result<Scaler> {
        if train.is_empty() {
            return Err(Error::domain("cannot fit a scaler on an empty matrix"));
        }
        let d = train.dim();
        let mut mins = vec![f64::INFINITY; d];
        let mut maxs = vec![f64::NEG_INFINITY; d];
        for row in train.rows() {
            for (f, &v) in row.iter().enumerate() {
                mins[f] = mins[f].min(v);
                maxs[f] = maxs[f].max(v);
            }
        }
        Ok(Scaler { mins, maxs })
    }

    pub fn dim(&self) -> usize {
        self.mins.len()
    }

    fn check_dim(&self, m: &FeatureMatrix) -> Result<()> {
        if m.dim() != self.dim() {
            return Err(Error::domain(format!(
                "scaler fitted on {} features, matrix has {}",
                self.dim(),
                m.dim()
            )));
        }
        Ok(())
    }

    /// Maps every value to `[0, 1]`; values outside the fitted range clamp,
    /// constant features map to 0.
    pub fn transform(&self, matrix: &FeatureMatrix) -> Result<FeatureMatrix> {
        self.check_dim(matrix)?;
        let rows = matrix
            .rows()
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .map(|(f, &v)| {
                        let span = self.maxs[f] - self.mins[f];
                        if span > 0.0 {
                            ((v - self.mins[f]) / span).clamp(0.0, 1.0)
                        } else {
                            0.0
                        }
                    })
                    .collect()
            })
            .collect();
        Ok(FeatureMatrix {
            rows,
            feature_names: matrix.feature_names.clone(),
            labels: matrix.labels.clone(),
        })
    }

    pub fn inverse_transform(&self, matrix: &FeatureMatrix) -> Result<FeatureMatrix> {
        self.check_dim(matrix)?;
        let rows = matrix
            .rows()
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .map(|(f, &v)| self.mins[f] + v * (self.maxs[f] - self.mins[f]))
                    .collect()
            })
            .collect();
        Ok(FeatureMatrix {
            rows,
            feature_names: matrix.feature_names.clone(),
            labels: matrix.labels.clone(),
        })
    }
}

/// ReliefF weights and the induced ordering (descending weight, ties by
/// ascending index).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRanking {
    pub weights: Vec<f64>,
    pub order: Vec<usize>,
}

impl FeatureRanking {
    pub fn from_weights(weights: Vec<f64>) -> Self {
        let mut order: Vec<usize> = (0..weights.len()).collect();
        order.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]).then(a.cmp(&b)));
        FeatureRanking { weights, order }
    }
}

/// JSON form of a ranking: weights, order and the chosen columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingReport {
    pub weights: Vec<f64>,
    pub order: Vec<usize>,
    pub selected: Vec<usize>,
}

impl RankingReport {
    pub fn new(ranking: &FeatureRanking, selected: &[usize]) -> Self {
        RankingReport {
            weights: ranking.weights.clone(),
            order: ranking.order.clone(),
            selected: selected.to_vec(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("ranking serializes")
    }

    pub fn from_json(text: &str, source: &str) -> Result<Self> {
        let report: RankingReport = crate::error::parse_json(text, source)?;
        if report.order.len() != report.weights.len() {
            return Err(Error::parse(source, "order", "length differs from weights"));
        }
        let mut seen = report.order.clone();
        seen.sort_unstable();
        if seen.iter().enumerate().any(|(i, &o)| i != o) {
            return Err(Error::parse(source, "order", "is not a permutation of the feature indices"));
        }
        if let Some(s) = report.selected.iter().find(|&&s| s >= report.weights.len()) {
            return Err(Error::parse(source, "selected", format!("index {s} out of range")));
        }
        Ok(report)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReliefParams {
    pub k_neighbors: usize,
    /// Number of instances to score; 0 (or any value ≥ n) uses every
    /// instance in index order, which makes the result seed-independent.
    pub sample_count: usize,
    pub rng_seed: u64,
}

impl Default for ReliefParams {
    fn default() -> Self {
        ReliefParams {
            k_neighbors: 10,
            sample_count: 0,
            rng_seed: 0,
        }
    }
}

fn cmp_neighbor(a: &(f64, usize), b: &(f64, usize)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

/// Keeps the `k` smallest `(distance, index)` pairs, sorted.
fn k_nearest(mut cands: Vec<(f64, usize)>, k: usize) -> Vec<(f64, usize)> {
    if cands.len() > k && k > 0 {
        cands.select_nth_unstable_by(k - 1, cmp_neighbor);
        cands.truncate(k);
    }
    cands.sort_unstable_by(cmp_neighbor);
    cands.truncate(k);
    cands
}

/// Binary ReliefF.
///
/// For each scored instance the `k` nearest hits and misses are found by
/// Euclidean distance (ties broken by lower row index). Each feature then
/// loses the mean hit difference and gains the mean miss difference, where
/// the difference is `|a - b|` divided by the feature's range over the
/// matrix. Contributions are averaged over the `m` scored instances, so
/// every weight lies in `[-1, 1]`. When a class has fewer than `k` other
/// members, all of them are used and the mean is taken over that count.
pub fn relieff(matrix: &FeatureMatrix, k_neighbors: usize, sample_count: usize, rng_seed: u64) -> Result<FeatureRanking> {
    if k_neighbors == 0 {
        return Err(Error::domain("k_neighbors must be at least 1"));
    }
    if !matrix.has_both_classes() {
        return Err(Error::domain("ReliefF needs both classes present"));
    }
    let n = matrix.len();
    let d = matrix.dim();
    let rows = matrix.rows();
    let labels = matrix.labels();

    let mut ranges = vec![0.0; d];
    for (f, range) in ranges.iter_mut().enumerate() {
        let (lo, hi) = rows
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r[f]), hi.max(r[f])));
        *range = hi - lo;
    }

    let scored: Vec<usize> = if sample_count == 0 || sample_count >= n {
        (0..n).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
        let mut picked = rand::seq::index::sample(&mut rng, n, sample_count).into_vec();
        picked.sort_unstable();
        picked
    };
    let m = scored.len() as f64;

    let mut weights = vec![0.0; d];
    let mut contrib = vec![0.0; d];
    for &i in &scored {
        let xi = &rows[i];
        let mut hits = Vec::new();
        let mut misses = Vec::new();
        for (j, xj) in rows.iter().enumerate() {
            if j == i {
                continue;
            }
            let dist = xi.iter().zip(xj).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            if labels[j] == labels[i] {
                hits.push((dist, j));
            } else {
                misses.push((dist, j));
            }
        }
        let hits = k_nearest(hits, k_neighbors);
        let misses = k_nearest(misses, k_neighbors);

        contrib.iter_mut().for_each(|c| *c = 0.0);
        for (set, sign) in [(&hits, -1.0), (&misses, 1.0)] {
            if set.is_empty() {
                continue;
            }
            let k = set.len() as f64;
            for &(_, j) in set.iter() {
                for f in 0..d {
                    if ranges[f] > 0.0 {
                        contrib[f] += sign * (xi[f] - rows[j][f]).abs() / ranges[f] / k;
                    }
                }
            }
        }
        for f in 0..d {
            weights[f] += contrib[f] / m;
        }
    }
    Ok(FeatureRanking::from_weights(weights))
}

/// The first `k` entries of the ranking order.
pub fn select_top_k(ranking: &FeatureRanking, k: usize) -> Result<Vec<usize>> {
    if k == 0 || k > ranking.order.len() {
        return Err(Error::domain(format!(
            "k = {k} outside 1..={}",
            ranking.order.len()
        )));
    }
    Ok(ranking.order[..k].to_vec())
}

/// Greedy forward pass over the ranking: start from the top feature and
/// keep appending the next ranked feature while the evaluator's score
/// strictly improves, up to `k_max` features.
///
/// The evaluator receives the column-sliced matrix and the subset indices.
pub fn sequential_forward_select<F>(
    matrix: &FeatureMatrix,
    ranking: &FeatureRanking,
    k_max: usize,
    mut evaluator: F,
) -> Result<Vec<usize>>
where
    F: FnMut(&FeatureMatrix, &[usize]) -> f64,
{
    if ranking.order.len() != matrix.dim() {
        return Err(Error::domain("ranking does not match the matrix width"));
    }
    let k_max = k_max.min(matrix.dim());
    if k_max == 0 {
        return Err(Error::domain("k_max must be at least 1"));
    }
    let mut chosen = vec![ranking.order[0]];
    let mut best = evaluator(&matrix.select_columns(&chosen)?, &chosen);
    for &next in &ranking.order[1..k_max] {
        chosen.push(next);
        let score = evaluator(&matrix.select_columns(&chosen)?, &chosen);
        if score > best {
            best = score;
        } else {
            chosen.pop();
            break;
        }
    }
    Ok(chosen)
}
