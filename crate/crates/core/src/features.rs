//! Fixed-length features from output-neuron spike rasters.
//!
//! Neurons without spikes get sentinel values: `T` for time-valued features
//! and 0 for counts and dispersions. All variances are population variances.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::dynamics::ReservoirRecording;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FeatureFamily {
    /// count, binned-count variance, first spike, mean spike time
    StatisticalMnist,
    /// mean spike time, first, last, mean ISI, ISI variance
    StatisticalBalls,
    /// terminal value of an exponential spike trace
    Trace,
}

impl FeatureFamily {
    pub fn per_neuron(self) -> usize {
        match self {
            FeatureFamily::StatisticalMnist => 4,
            FeatureFamily::StatisticalBalls => 5,
            FeatureFamily::Trace => 1,
        }
    }

    fn kinds(self) -> &'static [&'static str] {
        match self {
            FeatureFamily::StatisticalMnist => &["count", "count_var", "first", "mean_time"],
            FeatureFamily::StatisticalBalls => &["mean_time", "first", "last", "isi_mean", "isi_var"],
            FeatureFamily::Trace => &["trace"],
        }
    }

    pub fn is_statistical(self) -> bool {
        self != FeatureFamily::Trace
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureSpec {
    pub family: FeatureFamily,
    pub n_output_neurons: usize,
    /// Trace time constant in steps.
    #[serde(default = "default_tau")]
    pub tau: f64,
    /// Bin width for the spike-count variance.
    #[serde(default = "default_bin")]
    pub count_var_bin: u32,
}

fn default_tau() -> f64 {
    60.0
}

fn default_bin() -> u32 {
    10
}

impl FeatureSpec {
    pub fn statistical_mnist(n: usize) -> Self {
        Self { family: FeatureFamily::StatisticalMnist, n_output_neurons: n, tau: default_tau(), count_var_bin: default_bin() }
    }

    pub fn statistical_balls(n: usize) -> Self {
        Self { family: FeatureFamily::StatisticalBalls, n_output_neurons: n, tau: default_tau(), count_var_bin: default_bin() }
    }

    pub fn trace(n: usize, tau: f64) -> Self {
        Self { family: FeatureFamily::Trace, n_output_neurons: n, tau, count_var_bin: default_bin() }
    }

    pub fn n_features(&self) -> usize {
        self.family.per_neuron() * self.n_output_neurons
    }

    pub fn validate(&self) -> Result<()> {
        if self.family == FeatureFamily::Trace && !(self.tau > 0.0) {
            return Err(Error::invalid("features", "tau must be > 0"));
        }
        if self.family == FeatureFamily::StatisticalMnist && self.count_var_bin == 0 {
            return Err(Error::invalid("features", "count_var_bin must be >= 1"));
        }
        Ok(())
    }
}

/// Row-major feature matrix with named columns.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    n_rows: usize,
    n_cols: usize,
    data: Vec<f64>,
    column_names: Vec<String>,
}

impl FeatureMatrix {
    pub fn new(n_rows: usize, n_cols: usize, data: Vec<f64>) -> Result<Self> {
        let names = (0..n_cols).map(|c| format!("f{c}")).collect();
        Self::with_names(n_rows, data, names)
    }

    pub fn with_names(n_rows: usize, data: Vec<f64>, column_names: Vec<String>) -> Result<Self> {
        let n_cols = column_names.len();
        if data.len() != n_rows * n_cols {
            return Err(Error::invalid("feature matrix", "data length does not match shape"));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(
                "feature matrix",
                format!("non-finite value at row {}, column {}", i / n_cols.max(1), i % n_cols.max(1)),
            ));
        }
        Ok(Self { n_rows, n_cols, data, column_names })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_cols) {
            return Err(Error::invalid("feature matrix", "ragged rows"));
        }
        Self::new(rows.len(), n_cols, rows.concat())
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.n_cols..(r + 1) * self.n_cols]
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.n_cols + c]
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn select_rows(&self, rows: &[usize]) -> FeatureMatrix {
        let mut data = Vec::with_capacity(rows.len() * self.n_cols);
        for &r in rows {
            data.extend_from_slice(self.row(r));
        }
        FeatureMatrix { n_rows: rows.len(), n_cols: self.n_cols, data, column_names: self.column_names.clone() }
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{}", self.column_names.join(","))?;
        for r in 0..self.n_rows {
            let cells: Vec<String> = self.row(r).iter().map(|v| format!("{v:.17e}")).collect();
            writeln!(out, "{}", cells.join(","))?;
        }
        Ok(())
    }
}

fn mean(xs: impl ExactSizeIterator<Item = f64>) -> f64 {
    let n = xs.len();
    if n == 0 {
        return 0.0;
    }
    xs.sum::<f64>() / n as f64
}

/// Population variance, two-pass.
fn variance(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let m = mean(xs.iter().copied());
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64
}

fn mnist_stats(spikes: &[u32], t_len: u32, bin: u32, out: &mut Vec<f64>) {
    let t = f64::from(t_len);
    let n_bins = t_len.div_ceil(bin) as usize;
    let mut bins = vec![0.0; n_bins];
    for &s in spikes {
        bins[(s / bin) as usize] += 1.0;
    }
    out.push(spikes.len() as f64);
    out.push(if spikes.is_empty() { 0.0 } else { variance(&bins) });
    out.push(spikes.first().map_or(t, |&s| f64::from(s)));
    out.push(if spikes.is_empty() { t } else { mean(spikes.iter().map(|&s| f64::from(s))) });
}

fn balls_stats(spikes: &[u32], t_len: u32, out: &mut Vec<f64>) {
    let t = f64::from(t_len);
    if spikes.is_empty() {
        out.extend_from_slice(&[t, t, t, 0.0, 0.0]);
        return;
    }
    let isi: Vec<f64> = spikes.windows(2).map(|w| f64::from(w[1] - w[0])).collect();
    out.push(mean(spikes.iter().map(|&s| f64::from(s))));
    out.push(f64::from(spikes[0]));
    out.push(f64::from(*spikes.last().unwrap()));
    out.push(mean(isi.iter().copied()));
    out.push(variance(&isi));
}

/// `x(T-1)` of `x(t) = x(t-1) e^{-1/tau} + s(t)`, summed in closed form.
fn trace_value(spikes: &[u32], t_len: u32, tau: f64) -> f64 {
    let end = f64::from(t_len - 1);
    spikes.iter().map(|&s| (-(end - f64::from(s)) / tau).exp()).sum()
}

/// Compute the features selected by `spec.family` from the first
/// `spec.n_output_neurons` output neurons of every recording.
pub fn extract(recordings: &[ReservoirRecording], spec: &FeatureSpec) -> Result<FeatureMatrix> {
    spec.validate()?;
    let n = spec.n_output_neurons;
    let mut data = Vec::with_capacity(recordings.len() * spec.n_features());
    for (k, rec) in recordings.iter().enumerate() {
        if rec.spikes.len() < n {
            return Err(Error::invalid(
                "features",
                format!("recording {k} has {} output neurons, need {n}", rec.spikes.len()),
            ));
        }
        for spikes in &rec.spikes[..n] {
            match spec.family {
                FeatureFamily::StatisticalMnist => mnist_stats(spikes, rec.duration, spec.count_var_bin, &mut data),
                FeatureFamily::StatisticalBalls => balls_stats(spikes, rec.duration, &mut data),
                FeatureFamily::Trace => data.push(trace_value(spikes, rec.duration, spec.tau)),
            }
        }
    }
    let names = (0..n)
        .flat_map(|i| spec.family.kinds().iter().map(move |k| format!("n{i}_{k}")))
        .collect();
    FeatureMatrix::with_names(recordings.len(), data, names)
}

pub fn features_statistical_mnist(recordings: &[ReservoirRecording], spec: &FeatureSpec) -> Result<FeatureMatrix> {
    if spec.family != FeatureFamily::StatisticalMnist {
        return Err(Error::invalid("features", "expected the StatisticalMnist family"));
    }
    extract(recordings, spec)
}

pub fn features_statistical_balls(recordings: &[ReservoirRecording], spec: &FeatureSpec) -> Result<FeatureMatrix> {
    if spec.family != FeatureFamily::StatisticalBalls {
        return Err(Error::invalid("features", "expected the StatisticalBalls family"));
    }
    extract(recordings, spec)
}

pub fn features_trace(recordings: &[ReservoirRecording], spec: &FeatureSpec) -> Result<FeatureMatrix> {
    if spec.family != FeatureFamily::Trace {
        return Err(Error::invalid("features", "expected the Trace family"));
    }
    extract(recordings, spec)
}
