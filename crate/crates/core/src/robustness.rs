//! Robustness intervals of performance curves and their relation to the
//! mean-field critical weight.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::readout::Metric;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerformanceCurve {
    pub w_grid: Vec<f64>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub metric: Metric,
    /// Free-form identifiers (trial id, readout, feature family, ...).
    pub provenance: BTreeMap<String, String>,
}

impl PerformanceCurve {
    pub fn new(w_grid: Vec<f64>, mean: Vec<f64>, std: Vec<f64>, metric: Metric) -> Result<Self> {
        let c = Self { w_grid, mean, std, metric, provenance: BTreeMap::new() };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.w_grid.is_empty() {
            return Err(Error::invalid("performance curve", "empty curve"));
        }
        if self.mean.len() != self.w_grid.len() || self.std.len() != self.w_grid.len() {
            return Err(Error::invalid("performance curve", "mean/std lengths differ from the grid"));
        }
        if self.w_grid.windows(2).any(|p| !(p[1] > p[0])) {
            return Err(Error::invalid("performance curve", "grid must be strictly increasing"));
        }
        if self.mean.iter().any(|m| !m.is_finite()) {
            return Err(Error::invalid("performance curve", "non-finite mean"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessReport {
    pub gamma: f64,
    pub threshold: f64,
    pub w_min: f64,
    pub w_max: f64,
    pub delta: f64,
    pub w_crit: Option<f64>,
    pub contains_crit: Option<bool>,
    pub midpoint_below_crit: Option<bool>,
}

impl RobustnessReport {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.w_min + self.w_max)
    }
}

/// `[w_min, w_max]` spanning every grid point with `mean >= gamma * max(mean)`.
/// Sub-threshold points between the extremes stay inside the interval.
/// `w_crit` is used for the containment flags only when it is positive.
pub fn robustness_interval(curve: &PerformanceCurve, gamma: f64, w_crit: Option<f64>) -> Result<RobustnessReport> {
    curve.validate()?;
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::invalid("gamma", format!("{gamma} must lie in (0, 1)")));
    }
    let peak = curve.mean.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let threshold = gamma * peak;
    let first = curve.mean.iter().position(|&m| m >= threshold).expect("the maximum passes");
    let last = curve.mean.iter().rposition(|&m| m >= threshold).expect("the maximum passes");
    let (w_min, w_max) = (curve.w_grid[first], curve.w_grid[last]);
    let physical = w_crit.filter(|w| *w > 0.0 && w.is_finite());
    Ok(RobustnessReport {
        gamma,
        threshold,
        w_min,
        w_max,
        delta: w_max - w_min,
        w_crit,
        contains_crit: physical.map(|w| w_min <= w && w <= w_max),
        midpoint_below_crit: physical.map(|w| 0.5 * (w_min + w_max) < w),
    })
}

pub const DEFAULT_GAMMAS: [f64; 3] = [0.80, 0.85, 0.90];

/// Interval width for each gamma.
pub fn gamma_sensitivity(curve: &PerformanceCurve, gammas: &[f64]) -> Result<Vec<(f64, f64)>> {
    gammas
        .iter()
        .map(|&g| robustness_interval(curve, g, None).map(|r| (g, r.delta)))
        .collect()
}

/// Relative change of Δ between consecutive levels, `None` when the
/// previous Δ is zero.
pub fn relative_changes(deltas: &[f64]) -> Result<Vec<Option<f64>>> {
    if deltas.len() < 2 {
        return Err(Error::invalid("trend table", "at least two levels are required"));
    }
    Ok(deltas.windows(2).map(|p| if p[0] == 0.0 { None } else { Some((p[1] - p[0]) / p[0]) }).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendRow {
    pub group: String,
    pub metric: Metric,
    /// One entry per consecutive level pair; `None` marks an undefined change.
    pub changes: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendTable {
    pub rows: Vec<TrendRow>,
    /// Mean change per (metric, step) over rows where it is defined.
    pub mean_changes: BTreeMap<Metric, Vec<Option<f64>>>,
}

/// `groups` maps a setting name to per-metric Δ values ordered by level.
pub fn trend_table(groups: &BTreeMap<String, BTreeMap<Metric, Vec<f64>>>) -> Result<TrendTable> {
    let mut rows = Vec::new();
    for (group, per_metric) in groups {
        for (&metric, deltas) in per_metric {
            rows.push(TrendRow { group: group.clone(), metric, changes: relative_changes(deltas)? });
        }
    }
    let mut mean_changes = BTreeMap::new();
    for metric in Metric::ALL {
        let mine: Vec<&TrendRow> = rows.iter().filter(|r| r.metric == metric).collect();
        let steps = mine.iter().map(|r| r.changes.len()).max().unwrap_or(0);
        let means = (0..steps)
            .map(|s| {
                let vals: Vec<f64> = mine.iter().filter_map(|r| r.changes.get(s).copied().flatten()).collect();
                (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
            })
            .collect();
        if steps > 0 {
            mean_changes.insert(metric, means);
        }
    }
    Ok(TrendTable { rows, mean_changes })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Consistency {
    pub n: usize,
    pub containment_rate: f64,
    pub midpoint_below_rate: f64,
}

/// Containment and midpoint-bias rates over reports with a physical `w_crit`.
pub fn criticality_consistency(reports: &[RobustnessReport]) -> Consistency {
    let usable: Vec<&RobustnessReport> = reports.iter().filter(|r| r.contains_crit.is_some()).collect();
    let n = usable.len();
    if n == 0 {
        return Consistency { n, containment_rate: 0.0, midpoint_below_rate: 0.0 };
    }
    let rate = |f: &dyn Fn(&RobustnessReport) -> bool| usable.iter().filter(|r| f(r)).count() as f64 / n as f64;
    Consistency {
        n,
        containment_rate: rate(&|r| r.contains_crit == Some(true)),
        midpoint_below_rate: rate(&|r| r.midpoint_below_crit == Some(true)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseCv {
    pub mean_cv: f64,
    pub n_points: usize,
    pub skipped_zero_mean: usize,
}

/// Mean of `std / mean` over every point of every curve; zero-mean points are skipped.
pub fn curve_noise_cv(curves: &[PerformanceCurve]) -> NoiseCv {
    let mut sum = 0.0;
    let mut n = 0;
    let mut skipped = 0;
    for c in curves {
        for (m, s) in c.mean.iter().zip(&c.std) {
            if *m == 0.0 {
                skipped += 1;
            } else {
                sum += s / m;
                n += 1;
            }
        }
    }
    NoiseCv { mean_cv: if n == 0 { 0.0 } else { sum / n as f64 }, n_points: n, skipped_zero_mean: skipped }
}
