use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::trial::{run_trial, PreparedData, TrialResult};
use crate::error::{Error, Result};
use crate::robustness::{robustness_interval, RobustnessReport};
use crate::seeds;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweptParam {
    Beta,
    Theta,
    InputI,
}

impl SweptParam {
    pub fn name(self) -> &'static str {
        match self {
            SweptParam::Beta => "beta",
            SweptParam::Theta => "theta",
            SweptParam::InputI => "input",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "beta" => Some(SweptParam::Beta),
            "theta" => Some(SweptParam::Theta),
            "input" | "I" => Some(SweptParam::InputI),
            _ => None,
        }
    }

    pub fn get(self, cfg: &ExperimentConfig) -> f64 {
        match self {
            SweptParam::Beta => cfg.topology.beta,
            SweptParam::Theta => cfg.neuron.theta,
            SweptParam::InputI => cfg.neuron.input_amplitude,
        }
    }

    pub fn apply(self, cfg: &ExperimentConfig, value: f64) -> ExperimentConfig {
        let mut c = cfg.clone();
        match self {
            SweptParam::Beta => c.topology.beta = value,
            SweptParam::Theta => c.neuron.theta = value,
            SweptParam::InputI => c.neuron.input_amplitude = value,
        }
        c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPlan {
    pub swept: SweptParam,
    pub levels: Vec<f64>,
    pub base: ExperimentConfig,
    pub repeat_reference: bool,
}

impl SweepPlan {
    /// Plan over the levels listed in the base config.
    pub fn from_config(base: &ExperimentConfig, swept: SweptParam) -> Self {
        let levels = match swept {
            SweptParam::Beta => base.sweep_levels.beta.clone(),
            SweptParam::Theta => base.sweep_levels.theta.clone(),
            SweptParam::InputI => base.sweep_levels.input.clone(),
        };
        Self { swept, levels, base: base.clone(), repeat_reference: base.repeat_reference }
    }

    pub fn validate(&self) -> Result<()> {
        if self.levels.len() != 3 {
            return Err(Error::invalid("sweep plan", format!("expected 3 levels, got {}", self.levels.len())));
        }
        for (i, a) in self.levels.iter().enumerate() {
            if self.levels[i + 1..].contains(a) {
                return Err(Error::invalid("sweep plan", format!("level {a} listed twice")));
            }
        }
        for &l in &self.levels {
            self.swept.apply(&self.base, l).validate()?;
        }
        Ok(())
    }

    /// Trial seed of one level. It depends on the level value, never on its
    /// position, so a level's result does not change with the other levels.
    /// Without `repeat_reference` the reference value maps to one shared
    /// network instance across all sweeps.
    pub fn trial_seed(&self, seed: u64, level: f64) -> u64 {
        let is_reference = level == self.swept.get(&self.base);
        if is_reference && !self.repeat_reference {
            seeds::derive(seed, "trial/reference")
        } else {
            seeds::derive(seed, &format!("trial/{}={:?}", self.swept.name(), level))
        }
    }

    pub fn trial_id(&self, seed: u64, level: f64) -> String {
        format!("{}={}/seed={}", self.swept.name(), level, seed)
    }
}

/// Outcome of one (seed, level) cell of a sweep.
#[derive(Debug)]
pub struct SweepCell {
    pub seed: u64,
    pub level: f64,
    pub outcome: Result<TrialResult>,
}

#[derive(Debug)]
pub struct SweepResult {
    pub plan: SweepPlan,
    pub cells: Vec<SweepCell>,
}

impl SweepResult {
    pub fn trials(&self) -> impl Iterator<Item = &TrialResult> {
        self.cells.iter().filter_map(|c| c.outcome.as_ref().ok())
    }

    pub fn failures(&self) -> impl Iterator<Item = (&SweepCell, &Error)> {
        self.cells.iter().filter_map(|c| c.outcome.as_ref().err().map(|e| (c, e)))
    }
}

/// Robustness reports for all twelve curves of a trial.
pub fn trial_reports(trial: &TrialResult, gamma: f64) -> Result<Vec<RobustnessReport>> {
    trial.curves.values().map(|c| robustness_interval(c, gamma, Some(trial.w_crit))).collect()
}

/// One trial per (seed, level). A failing trial is recorded and the
/// remaining cells still run.
pub fn run_sweep(plan: &SweepPlan, data: &PreparedData, seeds_list: &[u64]) -> Result<SweepResult> {
    plan.validate()?;
    let mut cells = Vec::new();
    for &seed in seeds_list {
        for &level in &plan.levels {
            let cfg = plan.swept.apply(&plan.base, level);
            let outcome = cfg.resolve_w_grid().and_then(|grid| {
                let mut t = run_trial(&cfg, data, &grid, plan.trial_seed(seed, level), &plan.trial_id(seed, level))?;
                t.swept_param = Some(plan.swept.name().to_string());
                t.level = Some(level);
                Ok(t)
            });
            cells.push(SweepCell { seed, level, outcome });
        }
    }
    Ok(SweepResult { plan: plan.clone(), cells })
}
