use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::seeds;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SlpSpec {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub l2: f64,
}

impl Default for SlpSpec {
    fn default() -> Self {
        Self { learning_rate: 0.01, epochs: 200, batch_size: 32, l2: 1e-4 }
    }
}

impl SlpSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::invalid("slp", "learning_rate must be > 0"));
        }
        if self.epochs == 0 {
            return Err(Error::invalid("slp", "epochs must be >= 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("slp", "batch_size must be >= 1"));
        }
        if !(self.l2 >= 0.0) {
            return Err(Error::invalid("slp", "l2 must be >= 0"));
        }
        Ok(())
    }
}

/// Column z-scoring fitted on one matrix and applied to others.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: &FeatureMatrix) -> Self {
        let n = x.n_rows().max(1) as f64;
        let f = x.n_cols();
        let mut mean = vec![0.0; f];
        for r in 0..x.n_rows() {
            for (m, v) in mean.iter_mut().zip(x.row(r)) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; f];
        for r in 0..x.n_rows() {
            for ((s, v), m) in var.iter_mut().zip(x.row(r)).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        // zero-variance columns are mapped to 0
        let scale = var.iter().map(|s| if *s > 0.0 { 1.0 / (s / n).sqrt() } else { 0.0 }).collect();
        Self { mean, scale }
    }

    pub fn transform_row(&self, row: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(row.iter().zip(&self.mean).zip(&self.scale).map(|((v, m), s)| (v - m) * s));
    }

    pub fn transform(&self, x: &FeatureMatrix) -> Vec<Vec<f64>> {
        (0..x.n_rows())
            .map(|r| {
                let mut z = Vec::with_capacity(x.n_cols());
                self.transform_row(x.row(r), &mut z);
                z
            })
            .collect()
    }
}

/// Softmax regression on standardized features.
#[derive(Debug, Clone, PartialEq)]
pub struct SlpModel {
    pub standardizer: Standardizer,
    pub n_classes: usize,
    /// `n_classes x n_features`, row-major.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl SlpModel {
    fn logits(&self, z: &[f64], out: &mut [f64]) {
        let f = z.len();
        for (k, o) in out.iter_mut().enumerate() {
            let w = &self.weights[k * f..(k + 1) * f];
            *o = self.bias[k] + w.iter().zip(z).map(|(a, b)| a * b).sum::<f64>();
        }
    }

    pub fn predict(&self, x: &FeatureMatrix) -> Vec<usize> {
        let mut z = Vec::new();
        let mut logits = vec![0.0; self.n_classes];
        (0..x.n_rows())
            .map(|r| {
                self.standardizer.transform_row(x.row(r), &mut z);
                self.logits(&z, &mut logits);
                argmax(&logits)
            })
            .collect()
    }
}

/// First index of the maximum.
fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

fn softmax_in_place(v: &mut [f64]) {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut s = 0.0;
    for x in v.iter_mut() {
        *x = (*x - m).exp();
        s += *x;
    }
    v.iter_mut().for_each(|x| *x /= s);
}

/// Mini-batch gradient descent on mean cross-entropy plus `l2/2 * |W|^2`
/// (bias unpenalised), from zero initial weights.
pub fn train_slp(
    x: &FeatureMatrix,
    labels: &[usize],
    n_classes: usize,
    spec: &SlpSpec,
    seed: u64,
) -> Result<SlpModel> {
    spec.validate()?;
    if x.n_rows() != labels.len() || labels.is_empty() {
        return Err(Error::invalid("slp", "feature rows and labels must be equal and non-empty"));
    }
    if labels.iter().any(|&l| l >= n_classes) {
        return Err(Error::invalid("slp", "label out of range"));
    }
    let standardizer = Standardizer::fit(x);
    let z = standardizer.transform(x);
    let f = x.n_cols();
    let mut model = SlpModel { standardizer, n_classes, weights: vec![0.0; n_classes * f], bias: vec![0.0; n_classes] };

    let mut order: Vec<usize> = (0..labels.len()).collect();
    let mut rng = seeds::rng(seeds::derive(seed, "slp-batches"));
    let mut grad_w = vec![0.0; n_classes * f];
    let mut grad_b = vec![0.0; n_classes];
    let mut p = vec![0.0; n_classes];
    for _ in 0..spec.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(spec.batch_size) {
            grad_w.iter_mut().for_each(|g| *g = 0.0);
            grad_b.iter_mut().for_each(|g| *g = 0.0);
            for &i in batch {
                model.logits(&z[i], &mut p);
                softmax_in_place(&mut p);
                p[labels[i]] -= 1.0;
                for (k, &err) in p.iter().enumerate() {
                    grad_b[k] += err;
                    for (g, v) in grad_w[k * f..(k + 1) * f].iter_mut().zip(&z[i]) {
                        *g += err * v;
                    }
                }
            }
            let scale = spec.learning_rate / batch.len() as f64;
            for (w, g) in model.weights.iter_mut().zip(&grad_w) {
                *w -= scale * g + spec.learning_rate * spec.l2 * *w;
            }
            for (b, g) in model.bias.iter_mut().zip(&grad_b) {
                *b -= scale * g;
            }
        }
    }
    Ok(model)
}
