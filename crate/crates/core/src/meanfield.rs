//! Closed-form mean-field quantities: mean ISI and theoretical rate as a
//! function of the mean weight, the critical weight, the equivalent
//! threshold transform and a normalised distance between curves.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeanFieldConfig {
    pub theta: f64,
    pub input_amplitude: f64,
    pub t_ref: f64,
    pub beta: f64,
    pub n_neurons: f64,
}

impl MeanFieldConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v >= 0.0;
        if !(self.theta > 0.0 && self.theta.is_finite()) {
            return Err(Error::invalid("mean-field config", "theta must be > 0"));
        }
        if !ok(self.input_amplitude) || !ok(self.t_ref) {
            return Err(Error::invalid("mean-field config", "input amplitude and t_ref must be >= 0"));
        }
        if !(self.beta_n() > 0.0 && self.beta_n().is_finite()) {
            return Err(Error::invalid("mean-field config", "beta * N must be > 0"));
        }
        Ok(())
    }

    pub fn beta_n(&self) -> f64 {
        self.beta * self.n_neurons
    }

    fn drive(&self) -> f64 {
        2.0 * self.input_amplitude * self.t_ref
    }
}

/// Mean inter-spike interval at mean weight `w`.
pub fn isi_mean(cfg: &MeanFieldConfig, w: f64) -> Result<f64> {
    cfg.validate()?;
    if !(w >= 0.0 && w.is_finite()) {
        return Err(Error::invalid("isi", format!("w = {w} must be finite and >= 0")));
    }
    let i = cfg.input_amplitude;
    let a = cfg.theta - w * cfg.beta_n();
    let b = 4.0 * i * cfg.beta_n() * cfg.t_ref * w;
    let root = (a * a + b).sqrt();
    // For a < 0 the direct sum cancels; use the rationalised form.
    let numerator = if a >= 0.0 { a + root } else { b / (root - a) };
    let isi = numerator / (2.0 * i);
    if !(isi > 0.0 && isi.is_finite()) {
        return Err(Error::invalid("isi", format!("non-positive or non-finite ISI {isi} at w = {w}")));
    }
    Ok(isi)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateCurve {
    pub w_grid: Vec<f64>,
    pub values: Vec<f64>,
}

fn check_grid(w_grid: &[f64]) -> Result<()> {
    if w_grid.is_empty() {
        return Err(Error::invalid("w grid", "empty"));
    }
    if w_grid.windows(2).any(|p| !(p[1] > p[0])) {
        return Err(Error::invalid("w grid", "must be strictly increasing"));
    }
    Ok(())
}

/// Theoretical firing rate `1 / ISI(w)` on a grid.
pub fn rate_theoretical(cfg: &MeanFieldConfig, w_grid: &[f64]) -> Result<RateCurve> {
    check_grid(w_grid)?;
    let values = w_grid.iter().map(|&w| isi_mean(cfg, w).map(|v| 1.0 / v)).collect::<Result<_>>()?;
    Ok(RateCurve { w_grid: w_grid.to_vec(), values })
}

/// Critical weight. A value `<= 0` is returned as is; see [`is_physical`].
pub fn w_critical(cfg: &MeanFieldConfig) -> f64 {
    (cfg.theta - cfg.drive()) / cfg.beta_n()
}

pub fn is_physical(w_crit: f64) -> bool {
    w_crit > 0.0 && w_crit.is_finite()
}

/// Threshold at the reference density that gives the same critical weight
/// as `theta_ref` at density `beta_alt`.
pub fn theta_equivalent(cfg_ref: &MeanFieldConfig, beta_alt: f64) -> Result<f64> {
    if !(beta_alt > 0.0 && beta_alt.is_finite()) {
        return Err(Error::invalid("beta_alt", "must be > 0"));
    }
    let drive = cfg_ref.drive();
    Ok((cfg_ref.theta - drive) * (cfg_ref.beta / beta_alt) + drive)
}

pub fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2).zip(y.windows(2)).map(|(xs, ys)| 0.5 * (xs[1] - xs[0]) * (ys[0] + ys[1])).sum()
}

/// `∫|a - b| / (½ ∫(a + b))` on the shared grid, trapezoid rule.
pub fn curve_distance(w_grid: &[f64], a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != w_grid.len() || b.len() != w_grid.len() {
        return Err(Error::invalid("curve distance", "curves and grid differ in length"));
    }
    check_grid(w_grid)?;
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x - y).abs()).collect();
    let sum: Vec<f64> = a.iter().zip(b).map(|(x, y)| x + y).collect();
    let denom = 0.5 * trapezoid(w_grid, &sum);
    if !(denom > 0.0) {
        return Err(Error::invalid("curve distance", "zero denominator"));
    }
    Ok(trapezoid(w_grid, &diff) / denom)
}

pub fn rate_curve_distance(a: &RateCurve, b: &RateCurve) -> Result<f64> {
    if a.w_grid != b.w_grid {
        return Err(Error::invalid("curve distance", "curves are on different grids"));
    }
    curve_distance(&a.w_grid, &a.values, &b.values)
}

/// Scale a curve so that its maximum is 1 (left unchanged if the maximum is not positive).
pub fn max_normalized(values: &[f64]) -> Vec<f64> {
    let m = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m > 0.0 {
        values.iter().map(|v| v / m).collect()
    } else {
        values.to_vec()
    }
}

/// Distance between max-normalised curves.
pub fn curve_distance_normalized(w_grid: &[f64], a: &[f64], b: &[f64]) -> Result<f64> {
    curve_distance(w_grid, &max_normalized(a), &max_normalized(b))
}

/// Pointwise `|ν_a - ν_b|`.
pub fn rate_curve_difference(cfg_a: &MeanFieldConfig, cfg_b: &MeanFieldConfig, w_grid: &[f64]) -> Result<Vec<f64>> {
    let a = rate_theoretical(cfg_a, w_grid)?;
    let b = rate_theoretical(cfg_b, w_grid)?;
    Ok(a.values.iter().zip(&b.values).map(|(x, y)| (x - y).abs()).collect())
}

/// Largest forward-difference slope of a curve.
pub fn max_slope(curve: &RateCurve) -> f64 {
    curve
        .w_grid
        .windows(2)
        .zip(curve.values.windows(2))
        .map(|(w, v)| (v[1] - v[0]) / (w[1] - w[0]))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// `n` evenly spaced points on `[lo, hi]`.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}
