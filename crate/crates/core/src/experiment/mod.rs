//! Experiment orchestration: configs, trials, hyperparameter sweeps, the
//! equivalence experiment and result files.

mod config;
mod equivalence;
mod output;
mod sweep;
mod trial;

pub use config::{
    reset_name, BallSource, DataSource, ExperimentConfig, FeatureSpecs, MnistSource, ReadoutSpecs, SweepLevels, Task,
    WGrid,
};
pub use equivalence::{equivalence_experiment, EquivalenceReport, PairDistance, PairKind};
pub use output::{
    curves_csv, emit_equivalence, emit_results, fmt_num, robustness_csv, RunRecord, TrialSummary, CURVES_HEADER,
    ROBUSTNESS_HEADER,
};
pub use sweep::{run_sweep, trial_reports, SweepCell, SweepPlan, SweepResult, SweptParam};
pub use trial::{feature_name, prepare_data, run_trial, trial_layout, CurveKey, PreparedData, TrialResult};
