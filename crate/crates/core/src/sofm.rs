//! Self-organizing feature map used as a pre-clustering stage.
//!
//! A trained map routes every sample to its best matching unit (BMU). After
//! training, each neuron is marked from the training labels: neurons whose
//! members are (by default) all legitimate become *legitimate-only*, every
//! other neuron, including empty ones, is *mixed*. Partitioning a dataset
//! then splits it into the legitimate-only subset, accepted without further
//! classification, and the mixed subset, handed to the deep classifier.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClusterMark {
    LegitimateOnly,
    Mixed,
}

/// How the learning rate and neighborhood radius shrink over training.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Decay {
    /// Straight line from the initial value at the first epoch down to the
    /// floor at the last epoch.
    Linear { alpha_floor: f64, sigma_floor: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SofmParams {
    pub epochs: usize,
    pub alpha0: f64,
    /// Initial neighborhood radius in lattice units.
    pub sigma0: f64,
    pub decay: Decay,
    pub rng_seed: u64,
}

impl Default for SofmParams {
    fn default() -> Self {
        SofmParams {
            epochs: 200,
            alpha0: 0.5,
            sigma0: 2.0,
            decay: Decay::Linear {
                alpha_floor: 0.01,
                sigma_floor: 0.5,
            },
            rng_seed: 0,
        }
    }
}

impl SofmParams {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::config("SOFM epochs must be at least 1"));
        }
        if !(self.alpha0 > 0.0 && self.alpha0 <= 1.0) {
            return Err(Error::config(format!("alpha0 {} outside (0, 1]", self.alpha0)));
        }
        if !(self.sigma0 > 0.0 && self.sigma0.is_finite()) {
            return Err(Error::config("sigma0 must be positive"));
        }
        let Decay::Linear {
            alpha_floor,
            sigma_floor,
        } = self.decay;
        if !(alpha_floor > 0.0 && alpha_floor <= self.alpha0 && sigma_floor > 0.0 && sigma_floor <= self.sigma0) {
            return Err(Error::config("decay floors must be positive and not exceed the initial values"));
        }
        Ok(())
    }

    /// Learning rate and radius for a zero-based epoch.
    pub fn schedule(&self, epoch: usize) -> (f64, f64) {
        let frac = if self.epochs > 1 {
            epoch as f64 / (self.epochs - 1) as f64
        } else {
            0.0
        };
        let Decay::Linear {
            alpha_floor,
            sigma_floor,
        } = self.decay;
        (
            self.alpha0 + (alpha_floor - self.alpha0) * frac,
            self.sigma0 + (sigma_floor - self.sigma0) * frac,
        )
    }
}

/// Gaussian neighborhood weight for lattice distance `g`.
pub fn neighborhood(g: f64, sigma: f64) -> f64 {
    (-(g * g) / (2.0 * sigma * sigma)).exp()
}

/// 2-D map of prototype vectors, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SofmMap {
    pub rows: usize,
    pub cols: usize,
    pub dim: usize,
    pub weights: Vec<Vec<f64>>,
    pub cluster_marks: Option<Vec<ClusterMark>>,
    pub trained: bool,
    pub params: Option<SofmParams>,
    /// Seed the weights were initialized from.
    pub seed: u64,
}

/// Map with every weight drawn uniformly from `[0, 1)`.
pub fn init_map(rows: usize, cols: usize, dim: usize, rng_seed: u64) -> Result<SofmMap> {
    if rows == 0 || cols == 0 || dim == 0 {
        return Err(Error::domain(format!("map dimensions must be positive, got {rows}x{cols}x{dim}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let weights = (0..rows * cols)
        .map(|_| (0..dim).map(|_| rng.gen::<f64>()).collect())
        .collect();
    Ok(SofmMap {
        rows,
        cols,
        dim,
        weights,
        cluster_marks: None,
        trained: false,
        params: None,
        seed: rng_seed,
    })
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

impl SofmMap {
    pub fn neuron_count(&self) -> usize {
        self.rows * self.cols
    }

    /// (row, col) of a neuron index.
    pub fn position(&self, neuron: usize) -> (usize, usize) {
        (neuron / self.cols, neuron % self.cols)
    }

    /// Chebyshev distance between two neurons on the lattice.
    pub fn grid_distance(&self, a: usize, b: usize) -> usize {
        let (ra, ca) = self.position(a);
        let (rb, cb) = self.position(b);
        ra.abs_diff(rb).max(ca.abs_diff(cb))
    }

    fn check_dim(&self, sample: &[f64]) -> Result<()> {
        if sample.len() != self.dim {
            return Err(Error::domain(format!(
                "sample has {} values, map expects {}",
                sample.len(),
                self.dim
            )));
        }
        Ok(())
    }

    /// Nearest neuron by Euclidean distance; ties go to the lowest index.
    pub fn bmu(&self, sample: &[f64]) -> Result<usize> {
        self.check_dim(sample)?;
        Ok(self.bmu_unchecked(sample))
    }

    fn bmu_unchecked(&self, sample: &[f64]) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (j, w) in self.weights.iter().enumerate() {
            let d = sq_dist(w, sample);
            if d < best_d {
                best = j;
                best_d = d;
            }
        }
        best
    }

    /// Moves every neuron toward `sample` by `alpha * h(bmu, j)`.
    pub fn update(&mut self, sample: &[f64], alpha: f64, sigma: f64) -> usize {
        let b = self.bmu_unchecked(sample);
        for j in 0..self.neuron_count() {
            let h = neighborhood(self.grid_distance(b, j) as f64, sigma);
            let rate = alpha * h;
            for (w, x) in self.weights[j].iter_mut().zip(sample) {
                *w += rate * (x - *w);
            }
        }
        b
    }

    pub fn marks(&self) -> Option<&[ClusterMark]> {
        self.cluster_marks.as_deref()
    }

    pub fn with_marks(mut self, marks: Vec<ClusterMark>) -> Result<Self> {
        if marks.len() != self.neuron_count() {
            return Err(Error::domain(format!(
                "{} marks for {} neurons",
                marks.len(),
                self.neuron_count()
            )));
        }
        self.cluster_marks = Some(marks);
        Ok(self)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("map serializes")
    }

    pub fn from_json(text: &str, source: &str) -> Result<Self> {
        let map: SofmMap = crate::error::parse_json(text, source)?;
        if map.rows == 0 || map.cols == 0 || map.dim == 0 {
            return Err(Error::parse(source, "rows/cols/dim", "must be positive"));
        }
        if map.weights.len() != map.rows * map.cols {
            return Err(Error::parse(source, "weights", format!("expected {} neurons", map.rows * map.cols)));
        }
        if map.weights.iter().any(|w| w.len() != map.dim) {
            return Err(Error::parse(source, "weights", format!("every vector needs {} entries", map.dim)));
        }
        if let Some(marks) = &map.cluster_marks {
            if marks.len() != map.rows * map.cols {
                return Err(Error::parse(source, "cluster_marks", "one mark per neuron required"));
            }
        }
        Ok(map)
    }
}

/// Online Kohonen training.
///
/// Each epoch visits the samples in a fresh shuffled order. For each sample
/// every neuron `j` moves by `alpha(t) * h(b, j, t) * (x - w_j)`, with `b`
/// the BMU and `h` the Gaussian of the Chebyshev lattice distance.
pub fn train_sofm(mut map: SofmMap, samples: &[Vec<f64>], params: &SofmParams) -> Result<SofmMap> {
    params.validate()?;
    if samples.is_empty() {
        return Err(Error::domain("cannot train a map on zero samples"));
    }
    if let Some(s) = samples.iter().find(|s| s.len() != map.dim) {
        return Err(Error::domain(format!("sample has {} values, map expects {}", s.len(), map.dim)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.rng_seed);
    let mut order: Vec<usize> = (0..samples.len()).collect();
    for epoch in 0..params.epochs {
        let (alpha, sigma) = params.schedule(epoch);
        order.shuffle(&mut rng);
        for &i in &order {
            map.update(&samples[i], alpha, sigma);
        }
    }
    map.trained = true;
    map.params = Some(*params);
    map.cluster_marks = None;
    Ok(map)
}

/// BMU of every row.
pub fn assign_clusters(map: &SofmMap, samples: &[Vec<f64>]) -> Result<Vec<usize>> {
    if !map.trained {
        return Err(Error::state("map has not been trained"));
    }
    samples.iter().map(|s| map.bmu(s)).collect()
}

/// Marks a neuron legitimate-only when it is non-empty and its legitimate
/// share reaches `purity_threshold`.
pub fn label_clusters(
    assignment: &[usize],
    labels: &[bool],
    neuron_count: usize,
    purity_threshold: f64,
) -> Result<Vec<ClusterMark>> {
    if !(purity_threshold > 0.5 && purity_threshold <= 1.0) {
        return Err(Error::config(format!("purity threshold {purity_threshold} outside (0.5, 1]")));
    }
    if assignment.len() != labels.len() {
        return Err(Error::domain("assignment and labels differ in length"));
    }
    let counts = Contingency::tally(assignment, labels, neuron_count)?;
    Ok((0..neuron_count)
        .map(|j| {
            let size = counts.legitimate[j] + counts.fake[j];
            if size > 0 && counts.legitimate[j] as f64 / size as f64 >= purity_threshold {
                ClusterMark::LegitimateOnly
            } else {
                ClusterMark::Mixed
            }
        })
        .collect())
}

/// Split of a dataset by the mark of each record's BMU. Both index lists
/// are ascending, so each subset keeps the input order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterPartition {
    pub assignment: Vec<usize>,
    pub legitimate_only: Vec<usize>,
    pub mixed: Vec<usize>,
}

impl ClusterPartition {
    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    /// Merges both subsets back into input order.
    pub fn merged_order(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.len());
        let (mut a, mut b) = (self.legitimate_only.iter().peekable(), self.mixed.iter().peekable());
        loop {
            match (a.peek(), b.peek()) {
                (Some(&&x), Some(&&y)) => {
                    if x < y {
                        out.push(x);
                        a.next();
                    } else {
                        out.push(y);
                        b.next();
                    }
                }
                (Some(&&x), None) => {
                    out.push(x);
                    a.next();
                }
                (None, Some(&&y)) => {
                    out.push(y);
                    b.next();
                }
                (None, None) => break,
            }
        }
        out
    }

    /// Fake records routed to the legitimate-only subset.
    pub fn leakage(&self, labels: &[bool]) -> usize {
        self.legitimate_only.iter().filter(|&&i| !labels[i]).count()
    }
}

/// Routes each row of `matrix` by the mark of its BMU.
pub fn partition(map: &SofmMap, matrix: &FeatureMatrix) -> Result<ClusterPartition> {
    let marks = map
        .marks()
        .ok_or_else(|| Error::state("map clusters have not been labeled"))?;
    let assignment = assign_clusters(map, matrix.rows())?;
    let (mut legitimate_only, mut mixed) = (Vec::new(), Vec::new());
    for (i, &b) in assignment.iter().enumerate() {
        match marks[b] {
            ClusterMark::LegitimateOnly => legitimate_only.push(i),
            ClusterMark::Mixed => mixed.push(i),
        }
    }
    Ok(ClusterPartition {
        assignment,
        legitimate_only,
        mixed,
    })
}

/// Legitimate and fake counts per neuron.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Contingency {
    pub legitimate: Vec<usize>,
    pub fake: Vec<usize>,
}

impl Contingency {
    pub fn tally(assignment: &[usize], labels: &[bool], neuron_count: usize) -> Result<Self> {
        let mut c = Contingency {
            legitimate: vec![0; neuron_count],
            fake: vec![0; neuron_count],
        };
        for (&b, &legit) in assignment.iter().zip(labels) {
            if b >= neuron_count {
                return Err(Error::domain(format!("neuron {b} out of range")));
            }
            if legit {
                c.legitimate[b] += 1;
            } else {
                c.fake[b] += 1;
            }
        }
        Ok(c)
    }
}

/// Cluster table as CSV: one column per neuron (numbered from 1), rows for
/// the legitimate-only and mixed counts of each dataset, and a final
/// `pre_clustered` total. Cells that do not apply to a neuron's mark are
/// left empty.
pub fn contingency_csv(marks: &[ClusterMark], tables: &[(&str, &Contingency)]) -> String {
    let n = marks.len();
    let mut out = String::from("dataset,tasks");
    for j in 1..=n {
        let _ = write!(out, ",{j}");
    }
    out.push_str(",pre_clustered\n");
    for (name, c) in tables {
        let rows: [(&str, ClusterMark, &[usize]); 4] = [
            ("legitimate_only", ClusterMark::LegitimateOnly, &c.legitimate),
            ("legitimate_only_fake", ClusterMark::LegitimateOnly, &c.fake),
            ("mixed_legitimate", ClusterMark::Mixed, &c.legitimate),
            ("mixed_fake", ClusterMark::Mixed, &c.fake),
        ];
        for (label, mark, counts) in rows {
            let _ = write!(out, "{name},{label}");
            let mut total = 0;
            for j in 0..n {
                if marks[j] == mark {
                    total += counts[j];
                    let _ = write!(out, ",{}", counts[j]);
                } else {
                    out.push(',');
                }
            }
            let _ = writeln!(out, ",{total}");
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn two_neuron_map(a: Vec<f64>, b: Vec<f64>) -> SofmMap {
        let mut m = init_map(1, 2, a.len(), 0).unwrap();
        m.weights = vec![a, b];
        m.trained = true;
        m
    }

    #[test]
    fn init_shapes_and_determinism() {
        let m = init_map(4, 4, 4, 7).unwrap();
        assert_eq!(m.neuron_count(), 16);
        assert!(m.weights.iter().all(|w| w.len() == 4 && w.iter().all(|v| (0.0..1.0).contains(v))));
        assert!(!m.trained);
        assert_eq!(m, init_map(4, 4, 4, 7).unwrap());
        assert_eq!(init_map(1, 1, 3, 1).unwrap().neuron_count(), 1);
        assert!(matches!(init_map(0, 4, 4, 1), Err(Error::Domain(_))));
    }

    #[test]
    fn bmu_rules() {
        let single = init_map(1, 1, 2, 3).unwrap();
        assert_eq!(single.bmu(&[0.9, 0.1]).unwrap(), 0);

        let m = two_neuron_map(vec![0.0, 0.0], vec![1.0, 1.0]);
        assert_eq!(m.bmu(&[0.1, 0.1]).unwrap(), 0);
        assert_eq!(m.bmu(&[0.5, 0.5]).unwrap(), 0);
        assert_eq!(m.bmu(&[0.9, 0.6]).unwrap(), 1);
        assert!(matches!(m.bmu(&[0.5]), Err(Error::Domain(_))));
    }

    #[test]
    fn chebyshev_lattice_distance() {
        let m = init_map(4, 4, 1, 0).unwrap();
        assert_eq!(m.grid_distance(0, 5), 1);
        assert_eq!(m.grid_distance(0, 15), 3);
        assert_eq!(m.grid_distance(3, 12), 3);
        assert_eq!(m.grid_distance(6, 6), 0);
    }

    #[test]
    fn single_neuron_converges_to_repeated_sample() {
        let m = init_map(1, 1, 3, 5).unwrap();
        let samples = vec![vec![0.2, 0.7, 0.4]; 5];
        let params = SofmParams {
            epochs: 50,
            ..SofmParams::default()
        };
        let m = train_sofm(m, &samples, &params).unwrap();
        for (w, x) in m.weights[0].iter().zip(&samples[0]) {
            assert!((w - x).abs() < 1e-3);
        }
    }

    #[test]
    fn separated_blobs_get_their_own_neuron() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut samples = Vec::new();
        let mut blob = Vec::new();
        for i in 0..80 {
            let c = if i % 2 == 0 { 0.15 } else { 0.85 };
            samples.push(vec![c + 0.05 * rng.gen::<f64>(), c + 0.05 * rng.gen::<f64>()]);
            blob.push(i % 2);
        }
        let params = SofmParams {
            epochs: 30,
            sigma0: 1.0,
            ..SofmParams::default()
        };
        let m = train_sofm(init_map(1, 2, 2, 9).unwrap(), &samples, &params).unwrap();
        let assignment = assign_clusters(&m, &samples).unwrap();
        // Oracle: nearest blob centre must map consistently to one neuron each.
        let n0 = assignment[0];
        let n1 = assignment[1];
        assert_ne!(n0, n1);
        for (a, &b) in assignment.iter().zip(&blob) {
            assert_eq!(*a, if b == 0 { n0 } else { n1 });
        }
    }

    #[test]
    fn assignment_requires_training() {
        let m = init_map(2, 2, 2, 0).unwrap();
        assert!(matches!(assign_clusters(&m, &[vec![0.0, 0.0]]), Err(Error::State(_))));
        let trained = SofmMap { trained: true, ..m };
        assert!(assign_clusters(&trained, &[]).unwrap().is_empty());
        let a = assign_clusters(&trained, &[vec![0.3, 0.3], vec![0.3, 0.3]]).unwrap();
        assert_eq!(a[0], a[1]);
    }

    #[test]
    fn labeling_from_counts() {
        // Neuron 0: 418 legitimate; neuron 1: 640 legitimate + 100 fake; neuron 2 empty.
        let mut assignment = vec![0; 418];
        let mut labels = vec![true; 418];
        assignment.extend(std::iter::repeat(1).take(740));
        labels.extend((0..740).map(|i| i < 640));
        let marks = label_clusters(&assignment, &labels, 3, 1.0).unwrap();
        assert_eq!(marks, vec![ClusterMark::LegitimateOnly, ClusterMark::Mixed, ClusterMark::Mixed]);

        let relaxed = label_clusters(&assignment, &labels, 3, 0.85).unwrap();
        assert_eq!(relaxed[1], ClusterMark::LegitimateOnly);
        assert!(label_clusters(&assignment, &labels, 3, 0.5).is_err());
    }

    #[test]
    fn partition_needs_marks() {
        let m = two_neuron_map(vec![0.0], vec![1.0]);
        let fm = FeatureMatrix::new(vec![vec![0.1]], vec!["x".into()], vec![true]).unwrap();
        assert!(matches!(partition(&m, &fm), Err(Error::State(_))));
        let all_mixed = m.with_marks(vec![ClusterMark::Mixed; 2]).unwrap();
        let p = partition(&all_mixed, &fm).unwrap();
        assert!(p.legitimate_only.is_empty());
        assert_eq!(p.mixed, vec![0]);
    }

    #[test]
    fn neighborhood_shape() {
        assert_eq!(neighborhood(0.0, 0.7), 1.0);
        for sigma in [0.5, 1.0, 2.0] {
            let hs: Vec<f64> = (0..5).map(|g| neighborhood(g as f64, sigma)).collect();
            assert!(hs.windows(2).all(|w| w[1] <= w[0]));
        }
    }

    #[test]
    fn schedule_endpoints() {
        let p = SofmParams::default();
        assert_eq!(p.schedule(0), (0.5, 2.0));
        let (a, s) = p.schedule(199);
        assert!((a - 0.01).abs() < 1e-12 && (s - 0.5).abs() < 1e-12);
    }

    #[test]
    fn json_round_trip_and_errors() {
        let m = init_map(2, 3, 2, 1).unwrap();
        let m = train_sofm(m, &[vec![0.1, 0.2], vec![0.8, 0.9]], &SofmParams { epochs: 3, ..Default::default() })
            .unwrap()
            .with_marks(vec![ClusterMark::Mixed; 6])
            .unwrap();
        let text = m.to_json();
        let back = SofmMap::from_json(&text, "m.json").unwrap();
        assert_eq!(back, m);
        assert_eq!(back.to_json(), text);

        let broken = text.replace("\"cols\"", "\"colz\"");
        match SofmMap::from_json(&broken, "m.json") {
            Err(Error::Parse { field, .. }) => assert_eq!(field, "cols"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn contingency_layout() {
        let marks = [ClusterMark::LegitimateOnly, ClusterMark::Mixed];
        let c = Contingency {
            legitimate: vec![418, 640],
            fake: vec![0, 100],
        };
        let csv = contingency_csv(&marks, &[("training", &c)]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "dataset,tasks,1,2,pre_clustered");
        assert_eq!(lines[1], "training,legitimate_only,418,,418");
        assert_eq!(lines[2], "training,legitimate_only_fake,0,,0");
        assert_eq!(lines[3], "training,mixed_legitimate,,640,640");
        assert_eq!(lines[4], "training,mixed_fake,,100,100");
    }

    proptest! {
        #[test]
        fn bmu_update_moves_closer(
            w in proptest::collection::vec(0.0f64..1.0, 3),
            x in proptest::collection::vec(0.0f64..1.0, 3),
            alpha in 0.01f64..1.0,
        ) {
            let mut m = init_map(1, 1, 3, 0).unwrap();
            m.weights[0] = w.clone();
            let before = sq_dist(&w, &x);
            m.update(&x, alpha, 1.0);
            let after = sq_dist(&m.weights[0], &x);
            if before > 0.0 {
                prop_assert!(after < before);
            }
        }
    }
}
