use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::seeds::{self, StageRng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ForestSpec {
    pub n_trees: usize,
    /// Candidate features per node; `None` means `floor(sqrt(F))`.
    pub max_features: Option<usize>,
    pub min_split: usize,
    pub bootstrap: bool,
}

impl Default for ForestSpec {
    fn default() -> Self {
        Self { n_trees: 500, max_features: None, min_split: 2, bootstrap: true }
    }
}

impl ForestSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::invalid("forest", "n_trees must be >= 1"));
        }
        if self.max_features == Some(0) {
            return Err(Error::invalid("forest", "max_features must be >= 1"));
        }
        if self.min_split < 2 {
            return Err(Error::invalid("forest", "min_split must be >= 2"));
        }
        Ok(())
    }

    fn candidates(&self, n_features: usize) -> usize {
        let k = self.max_features.unwrap_or_else(|| (n_features as f64).sqrt().floor() as usize);
        k.clamp(1, n_features.max(1))
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Leaf(usize),
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    pub fn predict_row(&self, row: &[f64]) -> usize {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf(c) => return c,
                Node::Split { feature, threshold, left, right } => {
                    i = if row[feature] <= threshold { left } else { right };
                }
            }
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestModel {
    pub n_classes: usize,
    pub trees: Vec<Tree>,
}

impl ForestModel {
    /// Per-example vote counts, `n_rows x n_classes`.
    pub fn votes(&self, x: &FeatureMatrix) -> Vec<Vec<u32>> {
        (0..x.n_rows())
            .map(|r| {
                let mut v = vec![0u32; self.n_classes];
                for t in &self.trees {
                    v[t.predict_row(x.row(r))] += 1;
                }
                v
            })
            .collect()
    }

    /// Majority vote; ties go to the smallest class id.
    pub fn predict(&self, x: &FeatureMatrix) -> Vec<usize> {
        self.votes(x).iter().map(|v| majority(v)).collect()
    }
}

fn majority(counts: &[u32]) -> usize {
    let mut best = 0;
    for (k, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = k;
        }
    }
    best
}

struct Builder<'a> {
    /// Column-major training features.
    cols: &'a [Vec<f64>],
    labels: &'a [usize],
    n_classes: usize,
    max_features: usize,
    min_split: usize,
    nodes: Vec<Node>,
    counts: Vec<u32>,
    feature_order: Vec<usize>,
    sorted: Vec<(f64, usize)>,
}

impl Builder<'_> {
    fn class_counts(&mut self, samples: &[usize]) {
        self.counts.iter_mut().for_each(|c| *c = 0);
        for &i in samples {
            self.counts[self.labels[i]] += 1;
        }
    }

    /// Best Gini split over randomly drawn features, as `(feature, threshold)`.
    fn best_split(&mut self, samples: &[usize], rng: &mut StageRng) -> Option<(usize, f64)> {
        let n = samples.len();
        let n_features = self.feature_order.len();
        let mut best: Option<(f64, usize, f64)> = None;
        let mut examined = 0;
        let mut left = vec![0u32; self.n_classes];
        for drawn in 0..n_features {
            if examined >= self.max_features {
                break;
            }
            let j = rng.random_range(drawn..n_features);
            self.feature_order.swap(drawn, j);
            let f = self.feature_order[drawn];
            let col = &self.cols[f];
            self.sorted.clear();
            self.sorted.extend(samples.iter().map(|&i| (col[i], self.labels[i])));
            if self.sorted.iter().all(|s| s.0 == self.sorted[0].0) {
                continue;
            }
            examined += 1;
            self.sorted.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));

            left.iter_mut().for_each(|c| *c = 0);
            let mut sq_left = 0.0f64;
            let mut sq_right: f64 = self.counts.iter().map(|&c| f64::from(c) * f64::from(c)).sum();
            for s in 0..n - 1 {
                let k = self.sorted[s].1;
                let cl = f64::from(left[k]);
                let cr = f64::from(self.counts[k] - left[k]);
                sq_left += 2.0 * cl + 1.0;
                sq_right -= 2.0 * cr - 1.0;
                left[k] += 1;
                let (v, next) = (self.sorted[s].0, self.sorted[s + 1].0);
                if v == next {
                    continue;
                }
                let nl = (s + 1) as f64;
                let score = sq_left / nl + sq_right / (n as f64 - nl);
                if best.is_none_or(|b| score > b.0) {
                    let mut t = v + (next - v) / 2.0;
                    if t >= next {
                        t = v;
                    }
                    best = Some((score, f, t));
                }
            }
        }
        best.map(|(_, f, t)| (f, t))
    }

    fn grow(&mut self, samples: &mut [usize], rng: &mut StageRng) -> usize {
        self.class_counts(samples);
        let id = self.nodes.len();
        let majority_class = majority(&self.counts);
        let pure = self.counts.iter().filter(|&&c| c > 0).count() <= 1;
        if pure || samples.len() < self.min_split {
            self.nodes.push(Node::Leaf(majority_class));
            return id;
        }
        let Some((feature, threshold)) = self.best_split(samples, rng) else {
            self.nodes.push(Node::Leaf(majority_class));
            return id;
        };
        self.nodes.push(Node::Leaf(majority_class));
        let col = &self.cols[feature];
        let mut mid = 0;
        for i in 0..samples.len() {
            if col[samples[i]] <= threshold {
                samples.swap(i, mid);
                mid += 1;
            }
        }
        let (l, r) = samples.split_at_mut(mid);
        let left = self.grow(l, rng);
        let right = self.grow(r, rng);
        self.nodes[id] = Node::Split { feature, threshold, left, right };
        id
    }
}

pub fn train_forest(
    x: &FeatureMatrix,
    labels: &[usize],
    n_classes: usize,
    spec: &ForestSpec,
    seed: u64,
) -> Result<ForestModel> {
    spec.validate()?;
    if x.n_rows() != labels.len() || labels.is_empty() {
        return Err(Error::invalid("forest", "feature rows and labels must be equal and non-empty"));
    }
    if labels.iter().any(|&l| l >= n_classes) {
        return Err(Error::invalid("forest", "label out of range"));
    }
    let n = x.n_rows();
    let cols: Vec<Vec<f64>> = (0..x.n_cols()).map(|c| (0..n).map(|r| x.get(r, c)).collect()).collect();
    let max_features = spec.candidates(x.n_cols());

    let trees = (0..spec.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = seeds::rng(seeds::derive_indexed(seed, "tree", t as u64));
            let mut samples: Vec<usize> = if spec.bootstrap {
                (0..n).map(|_| rng.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            let mut b = Builder {
                cols: &cols,
                labels,
                n_classes,
                max_features,
                min_split: spec.min_split,
                nodes: Vec::new(),
                counts: vec![0; n_classes],
                feature_order: (0..x.n_cols()).collect(),
                sorted: Vec::with_capacity(n),
            };
            b.grow(&mut samples, &mut rng);
            Tree { nodes: b.nodes }
        })
        .collect();
    Ok(ForestModel { n_classes, trees })
}
