//! Fully connected feedforward binary classifier trained by backpropagation.
//!
//! Hidden layers use `tanh`, the single output unit a logistic sigmoid, and
//! training minimizes binary cross-entropy with mini-batch gradient descent
//! and classical momentum. The same type serves as the baseline classifier
//! over whole datasets and as the classifier over SOFM-mixed subsets.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hidden layer widths of the default architecture.
pub const HIDDEN_LAYERS: [usize; 4] = [15, 15, 15, 15];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
    Sigmoid,
}

/// One dense layer; `weights[o][i]` connects input `i` to output `o`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<f64>,
}

impl Layer {
    pub fn in_dim(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }

    pub fn out_dim(&self) -> usize {
        self.biases.len()
    }

    fn zeros(in_dim: usize, out_dim: usize) -> Layer {
        Layer {
            weights: vec![vec![0.0; in_dim]; out_dim],
            biases: vec![0.0; out_dim],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainParams {
    pub epochs: usize,
    /// Clamped to the sample count when larger.
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub rng_seed: u64,
    /// Epochs without a new best training loss before stopping.
    pub patience: usize,
}

impl Default for TrainParams {
    fn default() -> Self {
        TrainParams {
            epochs: 300,
            batch_size: 32,
            learning_rate: 0.01,
            momentum: 0.9,
            rng_seed: 0,
            patience: 30,
        }
    }
}

impl TrainParams {
    fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::config("batch_size must be positive"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config("learning_rate must be positive"));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::config("momentum must lie in [0, 1)"));
        }
        if self.patience == 0 {
            return Err(Error::config("patience must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpNetwork {
    pub layer_sizes: Vec<usize>,
    pub layers: Vec<Layer>,
    pub hidden_activation: Activation,
    pub output_activation: Activation,
    pub train_params: Option<TrainParams>,
    /// Seed of the weight initialization.
    pub seed: u64,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

// Twice as fast as libm's expm1-based tanh, within 1 ulp in absolute terms.
fn tanh(x: f64) -> f64 {
    let t = (-2.0 * x.abs()).exp();
    ((1.0 - t) / (1.0 + t)).copysign(x)
}

/// Binary cross-entropy written in terms of the logit, stable for any `z`.
fn bce_from_logit(z: f64, label: bool) -> f64 {
    let softplus = z.max(0.0) + (-z.abs()).exp().ln_1p();
    if label {
        softplus - z
    } else {
        softplus
    }
}

fn target(label: bool) -> f64 {
    if label {
        1.0
    } else {
        0.0
    }
}

// Largest double below 1; keeps probabilities strictly inside (0, 1).
const P_MAX: f64 = 1.0 - f64::EPSILON / 2.0;

fn probability(z: f64) -> f64 {
    sigmoid(z).clamp(f64::MIN_POSITIVE, P_MAX)
}

/// Glorot-uniform network for `d` inputs and the default hidden layers.
pub fn init_network(d: usize, rng_seed: u64) -> Result<MlpNetwork> {
    let mut sizes = vec![d];
    sizes.extend(HIDDEN_LAYERS);
    sizes.push(1);
    MlpNetwork::with_layers(&sizes, rng_seed)
}

impl MlpNetwork {
    /// Glorot-uniform weights in `[-r, r]`, `r = sqrt(6 / (fan_in + fan_out))`,
    /// zero biases. `sizes` runs from the input width to the output width 1.
    pub fn with_layers(sizes: &[usize], rng_seed: u64) -> Result<MlpNetwork> {
        let mut net = MlpNetwork::zeros(sizes)?;
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
        for layer in &mut net.layers {
            let r = (6.0 / (layer.in_dim() + layer.out_dim()) as f64).sqrt();
            for row in &mut layer.weights {
                for w in row.iter_mut() {
                    *w = rng.gen_range(-r..=r);
                }
            }
        }
        net.seed = rng_seed;
        Ok(net)
    }

    /// All parameters zero.
    pub fn zeros(sizes: &[usize]) -> Result<MlpNetwork> {
        if sizes.len() < 2 {
            return Err(Error::domain("a network needs an input and an output layer"));
        }
        if sizes.contains(&0) {
            return Err(Error::domain(format!("layer sizes must be positive: {sizes:?}")));
        }
        if *sizes.last().expect("non-empty") != 1 {
            return Err(Error::domain("the output layer must have exactly one unit"));
        }
        Ok(MlpNetwork {
            layer_sizes: sizes.to_vec(),
            layers: sizes.windows(2).map(|w| Layer::zeros(w[0], w[1])).collect(),
            hidden_activation: Activation::Tanh,
            output_activation: Activation::Sigmoid,
            train_params: None,
            seed: 0,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.out_dim() * (l.in_dim() + 1)).sum()
    }

    fn check_input(&self, sample: &[f64]) -> Result<()> {
        if sample.len() != self.input_dim() {
            return Err(Error::domain(format!(
                "sample has {} values, network expects {}",
                sample.len(),
                self.input_dim()
            )));
        }
        Ok(())
    }

    /// Output logit; fills `acts` with every layer's post-activation output
    /// (the last entry holds the raw logit).
    fn forward_into(&self, sample: &[f64], acts: &mut [Vec<f64>]) -> f64 {
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let (prev, rest) = acts.split_at_mut(l);
            let input: &[f64] = if l == 0 { sample } else { &prev[l - 1] };
            let out = &mut rest[0];
            for (o, (row, b)) in layer.weights.iter().zip(&layer.biases).enumerate() {
                let z = b + row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>();
                out[o] = if l == last { z } else { tanh(z) };
            }
        }
        acts[last][0]
    }

    fn activation_buffers(&self) -> Vec<Vec<f64>> {
        self.layers.iter().map(|l| vec![0.0; l.out_dim()]).collect()
    }

    fn logit(&self, sample: &[f64]) -> f64 {
        let mut acts = self.activation_buffers();
        self.forward_into(sample, &mut acts)
    }

    /// Probability that `sample` is legitimate.
    pub fn forward(&self, sample: &[f64]) -> Result<f64> {
        self.check_input(sample)?;
        Ok(probability(self.logit(sample)))
    }

    /// Cross-entropy of one sample.
    pub fn loss(&self, sample: &[f64], label: bool) -> Result<f64> {
        self.check_input(sample)?;
        Ok(bce_from_logit(self.logit(sample), label))
    }

    pub fn mean_loss(&self, samples: &[Vec<f64>], labels: &[bool]) -> f64 {
        let mut acts = self.activation_buffers();
        let total: f64 = samples
            .iter()
            .zip(labels)
            .map(|(x, &y)| bce_from_logit(self.forward_into(x, &mut acts), y))
            .sum();
        total / samples.len() as f64
    }

    /// Analytic gradient of one sample's loss, shaped like `self.layers`.
    pub fn gradient(&self, sample: &[f64], label: bool) -> Result<Vec<Layer>> {
        self.check_input(sample)?;
        let mut ws = Workspace::new(self);
        self.accumulate_gradient(sample, label, &mut ws);
        Ok(ws.grads)
    }

    fn accumulate_gradient(&self, sample: &[f64], label: bool, ws: &mut Workspace) -> f64 {
        let z = self.forward_into(sample, &mut ws.acts);
        let last = self.layers.len() - 1;
        ws.deltas[last][0] = sigmoid(z) - target(label);
        for l in (0..=last).rev() {
            let input: &[f64] = if l == 0 { sample } else { &ws.acts[l - 1] };
            let (lower, upper) = ws.deltas.split_at_mut(l);
            let delta = &upper[0];
            let grad = &mut ws.grads[l];
            let layer = &self.layers[l];
            let mut below = lower.last_mut();
            if let Some(b) = below.as_deref_mut() {
                b.iter_mut().for_each(|v| *v = 0.0);
            }
            for (o, &d) in delta.iter().enumerate() {
                grad.biases[o] += d;
                for (g, x) in grad.weights[o].iter_mut().zip(input) {
                    *g += d * x;
                }
                if let Some(b) = below.as_deref_mut() {
                    for (v, w) in b.iter_mut().zip(&layer.weights[o]) {
                        *v += d * w;
                    }
                }
            }
            if let Some(b) = below {
                for (v, a) in b.iter_mut().zip(&ws.acts[l - 1]) {
                    *v *= 1.0 - a * a;
                }
            }
        }
        bce_from_logit(z, label)
    }

    fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers.iter_mut().flat_map(|l| {
            l.weights
                .iter_mut()
                .flat_map(|r| r.iter_mut())
                .chain(l.biases.iter_mut())
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("network serializes")
    }

    pub fn from_json(text: &str, source: &str) -> Result<Self> {
        let net: MlpNetwork = crate::error::parse_json(text, source)?;
        if net.layer_sizes.len() != net.layers.len() + 1 {
            return Err(Error::parse(source, "layer_sizes", "does not match the number of layers"));
        }
        for (l, layer) in net.layers.iter().enumerate() {
            let (i, o) = (net.layer_sizes[l], net.layer_sizes[l + 1]);
            if layer.biases.len() != o || layer.weights.len() != o || layer.weights.iter().any(|r| r.len() != i) {
                return Err(Error::parse(source, "layers", format!("layer {l} is not {o}x{i}")));
            }
        }
        if net.layer_sizes.last() != Some(&1) {
            return Err(Error::parse(source, "layer_sizes", "output width must be 1"));
        }
        Ok(net)
    }
}

fn param_values(layers: &[Layer]) -> impl Iterator<Item = &f64> + '_ {
    layers
        .iter()
        .flat_map(|l| l.weights.iter().flat_map(|r| r.iter()).chain(l.biases.iter()))
}

struct Workspace {
    acts: Vec<Vec<f64>>,
    deltas: Vec<Vec<f64>>,
    grads: Vec<Layer>,
}

impl Workspace {
    fn new(net: &MlpNetwork) -> Self {
        Workspace {
            acts: net.activation_buffers(),
            deltas: net.activation_buffers(),
            grads: net.layers.iter().map(|l| Layer::zeros(l.in_dim(), l.out_dim())).collect(),
        }
    }

    fn zero_grads(&mut self) {
        for g in &mut self.grads {
            g.biases.iter_mut().for_each(|b| *b = 0.0);
            g.weights.iter_mut().flatten().for_each(|w| *w = 0.0);
        }
    }
}

/// Loss history and final residuals of a training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingTrace {
    /// Mean loss of the network before the first update.
    pub initial_loss: f64,
    /// Mean training loss after each completed epoch.
    pub epoch_losses: Vec<f64>,
    /// Epoch (1-based) whose parameters were returned; 0 means the input network.
    pub best_epoch: usize,
    pub stopped_early: bool,
    /// `label - probability` per training sample for the returned network.
    pub residuals: Vec<f64>,
}

impl TrainingTrace {
    pub fn final_loss(&self) -> f64 {
        if self.best_epoch == 0 {
            self.initial_loss
        } else {
            self.epoch_losses[self.best_epoch - 1]
        }
    }

    /// Euclidean norm of the residual vector.
    pub fn residual_norm(&self) -> f64 {
        self.residuals.iter().map(|e| e * e).sum::<f64>().sqrt()
    }
}

fn check_training_set(samples: &[Vec<f64>], labels: &[bool], d: usize) -> Result<()> {
    if samples.len() != labels.len() {
        return Err(Error::domain(format!("{} samples but {} labels", samples.len(), labels.len())));
    }
    if samples.is_empty() {
        return Err(Error::domain("empty training set"));
    }
    if let Some(s) = samples.iter().find(|s| s.len() != d) {
        return Err(Error::domain(format!("sample has {} values, network expects {d}", s.len())));
    }
    if labels.iter().all(|&l| l) || labels.iter().all(|&l| !l) {
        return Err(Error::domain("training set contains a single class"));
    }
    Ok(())
}

/// Mini-batch gradient descent with momentum on binary cross-entropy.
///
/// Each epoch shuffles the samples, then for each batch applies
/// `v <- momentum * v - lr * mean_grad` and `w <- w + v`. The mean training
/// loss is measured after every epoch; training stops once `patience`
/// epochs pass without a new best, and the best parameters seen (the input
/// network included) are returned, so the final loss never exceeds the
/// initial one.
pub fn train(
    network: MlpNetwork,
    samples: &[Vec<f64>],
    labels: &[bool],
    params: &TrainParams,
) -> Result<(MlpNetwork, TrainingTrace)> {
    params.validate()?;
    check_training_set(samples, labels, network.input_dim())?;

    let initial_loss = network.mean_loss(samples, labels);
    if !initial_loss.is_finite() {
        return Err(Error::Training("initial loss is not finite".into()));
    }
    let mut net = network;
    let mut best = net.clone();
    let mut best_loss = initial_loss;
    let mut best_epoch = 0;
    let mut epoch_losses = Vec::with_capacity(params.epochs);
    let mut stopped_early = false;

    let mut rng = ChaCha8Rng::seed_from_u64(params.rng_seed);
    rng.set_stream(1);
    let batch = params.batch_size.min(samples.len());
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut ws = Workspace::new(&net);
    let mut velocity = vec![0.0; net.param_count()];

    for epoch in 1..=params.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(batch) {
            ws.zero_grads();
            for &i in chunk {
                net.accumulate_gradient(&samples[i], labels[i], &mut ws);
            }
            let scale = params.learning_rate / chunk.len() as f64;
            for ((w, v), g) in net.params_mut().zip(velocity.iter_mut()).zip(param_values(&ws.grads)) {
                *v = params.momentum * *v - scale * g;
                *w += *v;
            }
        }
        let loss = net.mean_loss(samples, labels);
        if !loss.is_finite() {
            return Err(Error::Training(format!(
                "loss became {loss} at epoch {epoch} (lr {}, momentum {}, batch {batch})",
                params.learning_rate, params.momentum
            )));
        }
        epoch_losses.push(loss);
        if loss < best_loss {
            best_loss = loss;
            best_epoch = epoch;
            best.clone_from(&net);
        } else if epoch - best_epoch >= params.patience {
            stopped_early = true;
            break;
        }
    }

    best.train_params = Some(*params);
    let residuals = samples
        .iter()
        .zip(labels)
        .map(|(x, &y)| target(y) - probability(best.logit(x)))
        .collect();
    let trace = TrainingTrace {
        initial_loss,
        epoch_losses,
        best_epoch,
        stopped_early,
        residuals,
    };
    Ok((best, trace))
}

/// Trains one network per seed from fresh initializations.
pub fn train_restarts(
    d: usize,
    samples: &[Vec<f64>],
    labels: &[bool],
    params: &TrainParams,
    seeds: &[u64],
) -> Result<Vec<(MlpNetwork, TrainingTrace)>> {
    seeds
        .iter()
        .map(|&seed| {
            let net = init_network(d, seed)?;
            train(net, samples, labels, &TrainParams { rng_seed: seed, ..*params })
        })
        .collect()
}

/// Index of the run with the smallest residual norm (first on ties).
pub fn argmin_residual_norm(traces: &[&TrainingTrace]) -> Option<usize> {
    traces
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.residual_norm().total_cmp(&b.1.residual_norm()).then(a.0.cmp(&b.0)))
        .map(|(i, _)| i)
}

/// Thresholded network outputs, with the source index of every sample.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSet {
    pub probabilities: Vec<f64>,
    /// `true` = predicted legitimate.
    pub labels: Vec<bool>,
    pub index_map: Vec<usize>,
}

impl PredictionSet {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Replaces the identity index map with source record indices.
    pub fn with_index_map(mut self, index_map: Vec<usize>) -> Result<Self> {
        if index_map.len() != self.len() {
            return Err(Error::domain(format!(
                "index map has {} entries for {} predictions",
                index_map.len(),
                self.len()
            )));
        }
        self.index_map = index_map;
        Ok(self)
    }

    /// Source indices predicted legitimate.
    pub fn predicted_legitimate(&self) -> Vec<usize> {
        self.select(true)
    }

    /// Source indices predicted fake.
    pub fn predicted_fake(&self) -> Vec<usize> {
        self.select(false)
    }

    fn select(&self, want: bool) -> Vec<usize> {
        self.labels
            .iter()
            .zip(&self.index_map)
            .filter(|(&l, _)| l == want)
            .map(|(_, &i)| i)
            .collect()
    }
}

/// Labels a sample legitimate when its probability is at least `threshold`.
pub fn predict(network: &MlpNetwork, samples: &[Vec<f64>], threshold: f64) -> Result<PredictionSet> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::domain(format!("threshold {threshold} outside (0, 1)")));
    }
    let probabilities = samples
        .iter()
        .map(|s| network.forward(s))
        .collect::<Result<Vec<f64>>>()?;
    let labels = probabilities.iter().map(|&p| p >= threshold).collect();
    Ok(PredictionSet {
        probabilities,
        labels,
        index_map: (0..samples.len()).collect(),
    })
}

/// Largest relative gap between the analytic gradient and central finite
/// differences over every parameter. Where both magnitudes fall below 1e-8
/// the absolute gap is used instead.
pub fn gradient_check(network: &MlpNetwork, sample: &[f64], label: bool, epsilon: f64) -> Result<f64> {
    if !(1e-7..=1e-3).contains(&epsilon) {
        return Err(Error::domain(format!("epsilon {epsilon} outside [1e-7, 1e-3]")));
    }
    let analytic: Vec<f64> = param_values(&network.gradient(sample, label)?).copied().collect();
    let mut probe = network.clone();
    let mut worst: f64 = 0.0;
    for (k, &a) in analytic.iter().enumerate() {
        let original = *probe.params_mut().nth(k).expect("param");
        *probe.params_mut().nth(k).expect("param") = original + epsilon;
        let plus = probe.loss(sample, label)?;
        *probe.params_mut().nth(k).expect("param") = original - epsilon;
        let minus = probe.loss(sample, label)?;
        *probe.params_mut().nth(k).expect("param") = original;
        let numeric = (plus - minus) / (2.0 * epsilon);
        let scale = a.abs().max(numeric.abs());
        let err = if scale < 1e-8 {
            (a - numeric).abs()
        } else {
            (a - numeric).abs() / scale
        };
        worst = worst.max(err);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_architecture() {
        let net = init_network(4, 1).unwrap();
        assert_eq!(net.layer_sizes, vec![4, 15, 15, 15, 15, 1]);
        assert_eq!(net.layers.len(), 5);
        assert_eq!(net, init_network(4, 1).unwrap());
        assert_ne!(net.layers[0].weights, init_network(4, 2).unwrap().layers[0].weights);
        assert!(matches!(init_network(0, 1), Err(Error::Domain(_))));
    }

    #[test]
    fn fast_tanh_matches_libm() {
        for i in -2000..=2000 {
            let x = i as f64 * 0.01;
            assert!((tanh(x) - x.tanh()).abs() <= 4.0 * f64::EPSILON, "x = {x}");
        }
        assert_eq!(tanh(0.0), 0.0);
        assert_eq!(tanh(1e3), 1.0);
        assert_eq!(tanh(-1e3), -1.0);
    }

    #[test]
    fn glorot_bounds() {
        let net = init_network(4, 3).unwrap();
        for layer in &net.layers {
            let r = (6.0 / (layer.in_dim() + layer.out_dim()) as f64).sqrt();
            assert!(layer.weights.iter().flatten().all(|w| w.abs() <= r));
            assert!(layer.biases.iter().all(|&b| b == 0.0));
        }
    }

    #[test]
    fn zero_network_outputs_half() {
        let net = MlpNetwork::zeros(&[3, 15, 15, 1]).unwrap();
        assert_eq!(net.forward(&[0.3, 0.9, 0.1]).unwrap(), 0.5);
        let p = predict(&net, &[vec![0.0; 3], vec![1.0; 3]], 0.5).unwrap();
        assert_eq!(p.labels, vec![true, true]);
        assert!(matches!(net.forward(&[0.0]), Err(Error::Domain(_))));
    }

    #[test]
    fn micro_chain_matches_composition() {
        let mut net = MlpNetwork::zeros(&[1, 1, 1, 1]).unwrap();
        let (w, b) = ([0.7, -1.3, 2.1], [0.1, 0.4, -0.2]);
        for l in 0..3 {
            net.layers[l].weights[0][0] = w[l];
            net.layers[l].biases[0] = b[l];
        }
        let x: f64 = 0.37;
        let h1 = (w[0] * x + b[0]).tanh();
        let h2 = (w[1] * h1 + b[1]).tanh();
        let expected = 1.0 / (1.0 + (-(w[2] * h2 + b[2])).exp());
        assert!((net.forward(&[x]).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn output_strictly_inside_unit_interval() {
        let mut net = MlpNetwork::zeros(&[1, 1]).unwrap();
        net.layers[0].weights[0][0] = 1e4;
        let hi = net.forward(&[1.0]).unwrap();
        let lo = net.forward(&[-1.0]).unwrap();
        assert!(hi < 1.0 && hi > 0.0);
        assert!(lo > 0.0 && lo < 1.0);
    }

    #[test]
    fn threshold_tie_goes_legitimate() {
        let net = MlpNetwork::zeros(&[1, 1]).unwrap();
        let p = predict(&net, &[vec![0.2]], 0.5).unwrap();
        assert_eq!(p.probabilities[0], 0.5);
        assert!(p.labels[0]);
        assert!(predict(&net, &[vec![0.2]], 1.0).is_err());
    }

    #[test]
    fn prediction_partitions() {
        let mut net = MlpNetwork::zeros(&[1, 1]).unwrap();
        net.layers[0].weights[0][0] = 5.0;
        let p = predict(&net, &[vec![1.0], vec![-1.0], vec![0.5]], 0.5)
            .unwrap()
            .with_index_map(vec![10, 20, 30])
            .unwrap();
        assert_eq!(p.predicted_legitimate(), vec![10, 30]);
        assert_eq!(p.predicted_fake(), vec![20]);
    }

    #[test]
    fn logistic_regression_gradient_closed_form() {
        let mut net = MlpNetwork::zeros(&[3, 1]).unwrap();
        net.layers[0].weights[0] = vec![0.4, -0.8, 0.3];
        net.layers[0].biases[0] = 0.05;
        let x = [0.9, 0.2, -0.6];
        for label in [true, false] {
            let p = net.forward(&x).unwrap();
            let g = net.gradient(&x, label).unwrap();
            let r = p - target(label);
            for i in 0..3 {
                assert!((g[0].weights[0][i] - r * x[i]).abs() < 1e-12);
            }
            assert!((g[0].biases[0] - r).abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_check_small_network() {
        let net = MlpNetwork::with_layers(&[3, 5, 4, 1], 17).unwrap();
        let err = gradient_check(&net, &[0.2, 0.7, 0.4], true, 1e-5).unwrap();
        assert!(err < 1e-4, "{err}");
        assert!(gradient_check(&net, &[0.2, 0.7, 0.4], true, 1e-2).is_err());
    }

    #[test]
    fn gradient_check_saturated_point() {
        // A confidently correct output leaves gradients far below 1e-8.
        let mut net = MlpNetwork::zeros(&[1, 1]).unwrap();
        net.layers[0].biases[0] = 30.0;
        let err = gradient_check(&net, &[0.5], true, 1e-5).unwrap();
        assert!(err < 1e-8, "{err}");
    }

    fn separable_toy() -> (Vec<Vec<f64>>, Vec<bool>) {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        while xs.len() < 120 {
            let (a, b): (f64, f64) = (rng.gen(), rng.gen());
            let margin = a + b - 1.0;
            if margin.abs() < 0.1 {
                continue;
            }
            xs.push(vec![a, b]);
            ys.push(margin > 0.0);
        }
        (xs, ys)
    }

    #[test]
    fn learns_linearly_separable_toy() {
        let (xs, ys) = separable_toy();
        let net = MlpNetwork::with_layers(&[2, 15, 15, 1], 5).unwrap();
        let params = TrainParams {
            epochs: 200,
            batch_size: 8,
            learning_rate: 0.05,
            ..TrainParams::default()
        };
        let (net, trace) = train(net, &xs, &ys, &params).unwrap();
        let p = predict(&net, &xs, 0.5).unwrap();
        assert_eq!(p.labels, ys);
        assert!(trace.final_loss() <= trace.initial_loss);
        assert!(trace.epoch_losses.iter().all(|l| l.is_finite()));
        assert_eq!(trace.residuals.len(), xs.len());
        assert!(trace.residuals.iter().all(|e| e.abs() < 1.0));
    }

    #[test]
    fn zero_epochs_is_identity() {
        let (xs, ys) = separable_toy();
        let net = init_network(2, 3).unwrap();
        let (out, trace) = train(net.clone(), &xs, &ys, &TrainParams { epochs: 0, ..Default::default() }).unwrap();
        assert_eq!(out.layers, net.layers);
        assert!(trace.epoch_losses.is_empty());
    }

    #[test]
    fn training_is_deterministic() {
        let (xs, ys) = separable_toy();
        let params = TrainParams { epochs: 20, ..Default::default() };
        let a = train(init_network(2, 9).unwrap(), &xs, &ys, &params).unwrap();
        let b = train(init_network(2, 9).unwrap(), &xs, &ys, &params).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn single_class_rejected() {
        let xs = vec![vec![0.1], vec![0.2]];
        let err = train(init_network(1, 0).unwrap(), &xs, &[true, true], &TrainParams::default()).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
    }

    #[test]
    fn divergence_reported() {
        let (xs, ys) = separable_toy();
        let mut net = init_network(2, 1).unwrap();
        net.layers[0].weights[0][0] = f64::NAN;
        assert!(matches!(
            train(net, &xs, &ys, &TrainParams::default()),
            Err(Error::Training(_))
        ));
    }

    #[test]
    fn early_stop_on_patience() {
        let (xs, ys) = separable_toy();
        // A vanishing step leaves the loss practically flat, so patience expires.
        let params = TrainParams {
            epochs: 100,
            learning_rate: 1e-300,
            momentum: 0.0,
            patience: 3,
            ..Default::default()
        };
        let (_, trace) = train(init_network(2, 1).unwrap(), &xs, &ys, &params).unwrap();
        assert!(trace.stopped_early);
        assert_eq!(trace.epoch_losses.len(), 3);
    }

    #[test]
    fn json_round_trip() {
        let net = init_network(4, 8).unwrap();
        let text = net.to_json();
        assert!(text.contains("\"tanh\"") && text.contains("\"sigmoid\""));
        let back = MlpNetwork::from_json(&text, "n.json").unwrap();
        assert_eq!(back, net);
        assert_eq!(back.to_json(), text);
        assert!(matches!(MlpNetwork::from_json("{}", "n.json"), Err(Error::Parse { .. })));
    }

    #[test]
    fn argmin_picks_smallest_norm() {
        let mk = |r: Vec<f64>| TrainingTrace {
            initial_loss: 1.0,
            epoch_losses: vec![],
            best_epoch: 0,
            stopped_early: false,
            residuals: r,
        };
        let (a, b, c) = (mk(vec![0.5, 0.5]), mk(vec![0.1, -0.2]), mk(vec![-0.1, 0.2]));
        assert_eq!(argmin_residual_norm(&[&a, &b, &c]), Some(1));
        assert_eq!(argmin_residual_norm(&[]), None);
    }
}
