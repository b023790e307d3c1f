use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::trial::{run_trial, CurveKey, PreparedData, TrialResult};
use crate::error::{Error, Result};
use crate::meanfield::{curve_distance_normalized, theta_equivalent};
use crate::seeds;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PairKind {
    /// `(beta_alt, theta_ref)` against `(beta_ref, theta_eq)`.
    Equivalent,
    /// Two independent instances of the same hyperparameters.
    Repeat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairDistance {
    pub kind: PairKind,
    pub seed: u64,
    pub a: String,
    pub b: String,
    pub key: CurveKey,
    pub d_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub beta_ref: f64,
    pub beta_alt: f64,
    pub theta_ref: f64,
    pub theta_eq: f64,
    pub w_crit_alt: f64,
    pub w_crit_eq: f64,
    pub w_grid: Vec<f64>,
    pub distances: Vec<PairDistance>,
    #[serde(skip)]
    pub trials: Vec<TrialResult>,
}

impl EquivalenceReport {
    pub fn mean_distance(&self, kind: PairKind) -> f64 {
        let d: Vec<f64> = self.distances.iter().filter(|p| p.kind == kind).map(|p| p.d_norm).collect();
        d.iter().sum::<f64>() / d.len() as f64
    }
}

fn pair_distances(kind: PairKind, seed: u64, a: &TrialResult, b: &TrialResult) -> Result<Vec<PairDistance>> {
    a.curves
        .iter()
        .map(|(key, ca)| {
            let cb = &b.curves[key];
            Ok(PairDistance {
                kind,
                seed,
                a: a.trial_id.clone(),
                b: b.trial_id.clone(),
                key: *key,
                d_norm: curve_distance_normalized(&a.w_grid, &ca.mean, &cb.mean)?,
            })
        })
        .collect()
}

/// For every seed, run two independent instances of each arm,
/// `(beta_alt, theta_ref)` and `(beta_ref, theta_eq)`, on one shared grid.
/// Cross-arm pairs give the equivalent-pair distances, same-arm pairs the
/// repeat baseline.
pub fn equivalence_experiment(
    cfg_ref: &ExperimentConfig,
    beta_alt: f64,
    data: &PreparedData,
    seeds_list: &[u64],
) -> Result<EquivalenceReport> {
    cfg_ref.validate()?;
    let mf = cfg_ref.meanfield();
    let theta_eq = theta_equivalent(&mf, beta_alt)?;
    if !(theta_eq > 0.0) {
        return Err(Error::invalid("equivalence", format!("equivalent threshold {theta_eq} is not positive")));
    }
    let mut alt = cfg_ref.clone();
    alt.topology.beta = beta_alt;
    let mut eq = cfg_ref.clone();
    eq.neuron.theta = theta_eq;
    alt.validate()?;
    eq.validate()?;
    let w_grid = alt.resolve_w_grid()?;

    let mut trials = Vec::new();
    let mut distances = Vec::new();
    for &seed in seeds_list {
        let run = |cfg: &ExperimentConfig, arm: &str, rep: u64| {
            let id = format!("{arm}/rep={rep}/seed={seed}");
            run_trial(cfg, data, &w_grid, seeds::derive_indexed(seed, &format!("equivalence/{arm}"), rep), &id)
        };
        let a0 = run(&alt, "beta_alt", 0)?;
        let a1 = run(&alt, "beta_alt", 1)?;
        let e0 = run(&eq, "theta_eq", 0)?;
        let e1 = run(&eq, "theta_eq", 1)?;
        distances.extend(pair_distances(PairKind::Equivalent, seed, &a0, &e0)?);
        distances.extend(pair_distances(PairKind::Equivalent, seed, &a1, &e1)?);
        distances.extend(pair_distances(PairKind::Repeat, seed, &a0, &a1)?);
        distances.extend(pair_distances(PairKind::Repeat, seed, &e0, &e1)?);
        trials.extend([a0, a1, e0, e1]);
    }
    Ok(EquivalenceReport {
        beta_ref: cfg_ref.topology.beta,
        beta_alt,
        theta_ref: cfg_ref.neuron.theta,
        theta_eq,
        w_crit_alt: alt.w_crit(),
        w_crit_eq: eq.w_crit(),
        w_grid,
        distances,
        trials,
    })
}
