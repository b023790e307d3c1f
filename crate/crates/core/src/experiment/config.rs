use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::datasets::BallGenSpec;
use crate::dynamics::{LeakSpec, NeuronParams, ResetScheme};
use crate::encoding::{EncodingKind, EncodingSpec};
use crate::error::{Error, Result};
use crate::features::{FeatureFamily, FeatureSpec};
use crate::meanfield::{self, MeanFieldConfig};
use crate::readout::{ReadoutKind, ReadoutSpec};
use crate::topology::TopologySpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Task {
    Mnist,
    BallTrajectories,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Mnist => "mnist",
            Task::BallTrajectories => "ball_trajectories",
        }
    }
}

pub fn reset_name(r: ResetScheme) -> &'static str {
    match r {
        ResetScheme::FixedPerNeuron => "fixed_per_neuron",
        ResetScheme::RedrawnEachReset => "redrawn_each_reset",
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MnistSource {
    pub images: PathBuf,
    pub labels: PathBuf,
    pub n_examples: usize,
    /// Pixels `>= threshold` are on.
    #[serde(default = "default_threshold")]
    pub threshold: u8,
    /// OR-pooling factor applied after binarisation (1 = none).
    #[serde(default = "default_pool")]
    pub pool: usize,
}

fn default_threshold() -> u8 {
    128
}

fn default_pool() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BallSource {
    #[serde(default)]
    pub generate: BallGenSpec,
    /// Optional video cache written by `gen-balls`; used instead of
    /// regenerating when present.
    #[serde(default)]
    pub cache: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSource {
    #[serde(default)]
    pub mnist: Option<MnistSource>,
    #[serde(default)]
    pub balls: Option<BallSource>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureSpecs {
    pub statistical: FeatureSpec,
    pub trace: FeatureSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReadoutSpecs {
    pub slp: ReadoutSpec,
    pub forest: ReadoutSpec,
}

impl ReadoutSpecs {
    pub fn both(&self) -> [&ReadoutSpec; 2] {
        [&self.slp, &self.forest]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum WGrid {
    /// `points` evenly spaced weights from `0.01 * w_crit` to `2 * w_crit`.
    CritAnchored { points: usize },
    Explicit { values: Vec<f64> },
}

impl Default for WGrid {
    fn default() -> Self {
        WGrid::CritAnchored { points: 40 }
    }
}

/// Levels for each sweepable hyperparameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepLevels {
    pub beta: Vec<f64>,
    pub theta: Vec<f64>,
    pub input: Vec<f64>,
}

impl Default for SweepLevels {
    fn default() -> Self {
        Self { beta: vec![0.2, 0.3, 0.4], theta: vec![2.0, 1.438, 1.157], input: vec![0.5, 1.5, 2.0] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub task: Task,
    pub reset: ResetScheme,
    pub topology: TopologySpec,
    pub neuron: NeuronParams,
    /// Standard deviation over mean of the synaptic weights.
    pub weight_cv: f64,
    #[serde(default)]
    pub leak: LeakSpec,
    pub encoding: EncodingSpec,
    pub features: FeatureSpecs,
    pub readouts: ReadoutSpecs,
    #[serde(default)]
    pub w_grid: WGrid,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default)]
    pub master_seed: u64,
    pub data: DataSource,
    #[serde(default)]
    pub sweep_levels: SweepLevels,
    #[serde(default = "default_true")]
    pub repeat_reference: bool,
}

fn default_gamma() -> f64 {
    0.85
}

fn default_true() -> bool {
    true
}

impl ExperimentConfig {
    pub fn meanfield(&self) -> MeanFieldConfig {
        MeanFieldConfig {
            theta: self.neuron.theta,
            input_amplitude: self.neuron.input_amplitude,
            t_ref: f64::from(self.neuron.t_ref),
            beta: self.topology.beta,
            n_neurons: self.topology.n_neurons as f64,
        }
    }

    pub fn w_crit(&self) -> f64 {
        meanfield::w_critical(&self.meanfield())
    }

    /// Number of output neurons: enough for both feature families.
    pub fn n_outputs(&self) -> usize {
        self.features.statistical.n_output_neurons.max(self.features.trace.n_output_neurons)
    }

    pub fn resolve_w_grid(&self) -> Result<Vec<f64>> {
        let grid = match &self.w_grid {
            WGrid::CritAnchored { points } => {
                let w = self.w_crit();
                if !meanfield::is_physical(w) {
                    return Err(Error::invalid(
                        "w_grid",
                        format!("critical weight {w} is not positive; supply an explicit grid"),
                    ));
                }
                if *points == 0 {
                    return Err(Error::invalid("w_grid", "points must be >= 1"));
                }
                meanfield::linspace(0.01 * w, 2.0 * w, *points)
            }
            WGrid::Explicit { values } => values.clone(),
        };
        if grid.is_empty() || grid.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
            return Err(Error::invalid("w_grid", "weights must be finite and >= 0"));
        }
        if grid.windows(2).any(|p| !(p[1] > p[0])) {
            return Err(Error::invalid("w_grid", "weights must be strictly increasing"));
        }
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        self.topology.validate()?;
        self.neuron.validate()?;
        self.encoding.validate()?;
        if !(self.weight_cv >= 0.0) {
            return Err(Error::invalid("weight_cv", "must be >= 0"));
        }
        if !(self.leak.mean_leak > 0.0 && self.leak.leak_cv >= 0.0) {
            return Err(Error::invalid("leak", "mean_leak must be > 0 and leak_cv >= 0"));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::invalid("gamma", "must lie in (0, 1)"));
        }
        let f = &self.features;
        f.statistical.validate()?;
        f.trace.validate()?;
        let want = match self.task {
            Task::Mnist => FeatureFamily::StatisticalMnist,
            Task::BallTrajectories => FeatureFamily::StatisticalBalls,
        };
        if f.statistical.family != want || f.trace.family != FeatureFamily::Trace {
            return Err(Error::invalid(
                "features",
                format!("task {} needs statistical = {want:?} and trace = Trace", self.task.name()),
            ));
        }
        if self.readouts.slp.kind != ReadoutKind::Slp || self.readouts.forest.kind != ReadoutKind::RandomForest {
            return Err(Error::invalid("readouts", "slp and forest entries must have kinds SLP and RandomForest"));
        }
        self.readouts.slp.validate()?;
        self.readouts.forest.validate()?;
        match self.task {
            Task::Mnist => {
                let Some(m) = &self.data.mnist else {
                    return Err(Error::invalid("data", "the Mnist task needs data.mnist"));
                };
                if m.pool == 0 {
                    return Err(Error::invalid("data", "pool must be >= 1"));
                }
                if self.encoding.kind != EncodingKind::RateCoding {
                    return Err(Error::invalid("encoding", "the Mnist task uses RateCoding"));
                }
            }
            Task::BallTrajectories => {
                let Some(b) = &self.data.balls else {
                    return Err(Error::invalid("data", "the BallTrajectories task needs data.balls"));
                };
                b.generate.validate()?;
                if self.encoding.kind != EncodingKind::FrameCoding {
                    return Err(Error::invalid("encoding", "the BallTrajectories task uses FrameCoding"));
                }
            }
        }
        for (name, levels) in [("beta", &self.sweep_levels.beta), ("theta", &self.sweep_levels.theta), ("input", &self.sweep_levels.input)] {
            if levels.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                return Err(Error::invalid("sweep_levels", format!("{name} levels must be positive")));
            }
        }
        self.resolve_w_grid()?;
        Ok(())
    }

    /// Parse a JSON config. Relative data paths are resolved against the
    /// directory of the file.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        let mut cfg: ExperimentConfig = serde_json::from_str(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(m) = &mut cfg.data.mnist {
            fix(&mut m.images);
            fix(&mut m.labels);
        }
        if let Some(c) = cfg.data.balls.as_mut().and_then(|b| b.cache.as_mut()) {
            fix(c);
        }
        Ok(cfg)
    }

    /// Reference MNIST configuration at the given scale.
    pub fn mnist_reference(images: PathBuf, labels: PathBuf, n_neurons: usize, n_examples: usize) -> Self {
        ExperimentConfig {
            task: Task::Mnist,
            reset: ResetScheme::FixedPerNeuron,
            topology: TopologySpec {
                n_neurons,
                beta: 0.2,
                rewiring_prob: 0.2,
                family: crate::topology::GraphFamily::WattsStrogatz,
                seed: 0,
            },
            neuron: NeuronParams { theta: 2.0, t_ref: 3, input_amplitude: 0.1 },
            weight_cv: 0.2,
            leak: LeakSpec::default(),
            encoding: EncodingSpec::rate(100, 0.25, 0),
            features: FeatureSpecs {
                statistical: FeatureSpec::statistical_mnist(50),
                trace: FeatureSpec::trace(200, 60.0),
            },
            readouts: ReadoutSpecs { slp: ReadoutSpec::slp(), forest: ReadoutSpec::forest() },
            w_grid: WGrid::default(),
            gamma: default_gamma(),
            master_seed: 0,
            data: DataSource {
                mnist: Some(MnistSource { images, labels, n_examples, threshold: default_threshold(), pool: default_pool() }),
                balls: None,
            },
            sweep_levels: SweepLevels::default(),
            repeat_reference: true,
        }
    }

    /// Reference Ball Trajectories configuration at the given scale.
    pub fn balls_reference(n_neurons: usize, generate: BallGenSpec) -> Self {
        let mut cfg = Self::mnist_reference(PathBuf::new(), PathBuf::new(), n_neurons, 0);
        cfg.task = Task::BallTrajectories;
        cfg.weight_cv = 0.1;
        cfg.encoding = EncodingSpec::frames();
        cfg.features = FeatureSpecs {
            statistical: FeatureSpec::statistical_balls(50),
            trace: FeatureSpec::trace(250, 40.0),
        };
        cfg.data = DataSource { mnist: None, balls: Some(BallSource { generate, cache: None }) };
        cfg.sweep_levels.theta = vec![2.0, 1.141, 1.117];
        cfg
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> ExperimentConfig {
        ExperimentConfig::mnist_reference("i".into(), "l".into(), 1000, 100)
    }

    #[test]
    fn crit_grid_spans_reference_interval() {
        let c = cfg();
        let g = c.resolve_w_grid().unwrap();
        assert_eq!(g.len(), 40);
        assert!((g[0] - 0.01 * 0.007).abs() < 1e-15);
        assert!((g[39] - 0.014).abs() < 1e-15);
        c.validate().unwrap();
    }

    #[test]
    fn non_physical_crit_needs_explicit_grid() {
        let mut c = cfg();
        c.neuron.input_amplitude = 2.0;
        assert!(c.resolve_w_grid().is_err());
        c.w_grid = WGrid::Explicit { values: vec![0.01, 0.02] };
        assert_eq!(c.resolve_w_grid().unwrap(), vec![0.01, 0.02]);
        c.w_grid = WGrid::Explicit { values: vec![0.02, 0.01] };
        assert!(c.resolve_w_grid().is_err());
    }

    #[test]
    fn json_round_trip_and_unknown_keys() {
        let c = cfg();
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<ExperimentConfig>(&text).unwrap(), c);
        let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
        v["surprise"] = serde_json::json!(1);
        assert!(serde_json::from_value::<ExperimentConfig>(v.clone()).is_err());
        v.as_object_mut().unwrap().remove("surprise");
        v["neuron"]["tau"] = serde_json::json!(3);
        assert!(serde_json::from_value::<ExperimentConfig>(v).is_err());
    }

    #[test]
    fn mismatched_task_parts_rejected() {
        let mut c = cfg();
        c.features.statistical = FeatureSpec::statistical_balls(50);
        assert!(c.validate().is_err());
        let mut c = cfg();
        c.data.mnist = None;
        assert!(c.validate().is_err());
        let mut c = cfg();
        c.readouts.slp.kind = ReadoutKind::RandomForest;
        assert!(c.validate().is_err());
    }
}
