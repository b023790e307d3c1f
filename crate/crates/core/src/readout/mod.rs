//! Readout classifiers and stratified k-fold evaluation.

mod folds;
mod forest;
mod metrics;
mod slp;

pub use folds::{stratified_folds, FoldAssignment};
pub use forest::{train_forest, ForestModel, ForestSpec, Tree};
pub use metrics::{metrics, Metric, Scores};
pub use slp::{train_slp, SlpModel, SlpSpec, Standardizer};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::seeds;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ReadoutKind {
    #[serde(rename = "SLP")]
    Slp,
    RandomForest,
}

impl ReadoutKind {
    pub fn name(self) -> &'static str {
        match self {
            ReadoutKind::Slp => "slp",
            ReadoutKind::RandomForest => "random_forest",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReadoutSpec {
    pub kind: ReadoutKind,
    #[serde(default)]
    pub slp: SlpSpec,
    #[serde(default)]
    pub forest: ForestSpec,
    #[serde(default = "default_folds")]
    pub folds: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_folds() -> usize {
    10
}

impl ReadoutSpec {
    pub fn slp() -> Self {
        Self { kind: ReadoutKind::Slp, slp: SlpSpec::default(), forest: ForestSpec::default(), folds: 10, seed: 0 }
    }

    pub fn forest() -> Self {
        Self { kind: ReadoutKind::RandomForest, ..Self::slp() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.folds < 2 {
            return Err(Error::invalid("readout", "folds must be >= 2"));
        }
        match self.kind {
            ReadoutKind::Slp => self.slp.validate(),
            ReadoutKind::RandomForest => self.forest.validate(),
        }
    }
}

/// A trained readout of either kind.
#[derive(Debug, Clone, PartialEq)]
pub enum Readout {
    Slp(SlpModel),
    Forest(ForestModel),
}

impl Readout {
    pub fn predict(&self, x: &FeatureMatrix) -> Vec<usize> {
        match self {
            Readout::Slp(m) => m.predict(x),
            Readout::Forest(m) => m.predict(x),
        }
    }
}

pub fn train(x: &FeatureMatrix, labels: &[usize], n_classes: usize, spec: &ReadoutSpec, seed: u64) -> Result<Readout> {
    Ok(match spec.kind {
        ReadoutKind::Slp => Readout::Slp(train_slp(x, labels, n_classes, &spec.slp, seed)?),
        ReadoutKind::RandomForest => Readout::Forest(train_forest(x, labels, n_classes, &spec.forest, seed)?),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    /// Mean and population standard deviation.
    pub fn of(values: &[f64]) -> Self {
        if values.iter().all(|&v| v == values[0]) {
            return Self { mean: values[0], std: 0.0 };
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Self { mean, std: var.sqrt() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub per_fold: Vec<Scores>,
    pub accuracy: MeanStd,
    pub f1_macro: MeanStd,
    pub mcc: MeanStd,
    pub fold_digest: String,
}

impl CvReport {
    pub fn summary(&self, m: Metric) -> MeanStd {
        match m {
            Metric::Accuracy => self.accuracy,
            Metric::F1Macro => self.f1_macro,
            Metric::Mcc => self.mcc,
        }
    }
}

/// Stratified k-fold cross-validation; folds are trained in parallel.
pub fn cross_validate(x: &FeatureMatrix, labels: &[usize], spec: &ReadoutSpec, seed: u64) -> Result<CvReport> {
    spec.validate()?;
    if x.n_rows() != labels.len() {
        return Err(Error::invalid("cross-validation", "feature rows and labels differ in length"));
    }
    let n_classes = labels.iter().max().map_or(0, |m| m + 1);
    let folds = stratified_folds(labels, spec.folds, seed)?;
    let per_fold = (0..spec.folds)
        .into_par_iter()
        .map(|f| {
            let train_idx = folds.train_indices(f);
            let test_idx = folds.test_indices(f);
            let xt = x.select_rows(&train_idx);
            let yt: Vec<usize> = train_idx.iter().map(|&i| labels[i]).collect();
            let model = train(&xt, &yt, n_classes, spec, seeds::derive_indexed(seed, "readout-fold", f as u64))?;
            let pred = model.predict(&x.select_rows(&test_idx));
            let truth: Vec<usize> = test_idx.iter().map(|&i| labels[i]).collect();
            metrics(&truth, &pred, n_classes)
        })
        .collect::<Result<Vec<_>>>()?;
    let col = |m: Metric| MeanStd::of(&per_fold.iter().map(|s| s.get(m)).collect::<Vec<_>>());
    Ok(CvReport {
        accuracy: col(Metric::Accuracy),
        f1_macro: col(Metric::F1Macro),
        mcc: col(Metric::Mcc),
        fold_digest: folds.digest(),
        per_fold,
    })
}
