//! Configuration search: per-position threshold minimization, the greedy
//! single-pass and iterative searches, the `λ` sweep, and the comparison
//! baselines.

mod baseline;
mod greedy;
mod sweep;
mod threshold;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{ExitConfig, MetricsReport};

pub use baseline::{standalone_exits, uniform_baseline, StandaloneExit, UniformBaseline};
pub use greedy::{iterative_search, search, single_pass_search};
pub use sweep::{lambda_grid, pareto_front, sweep_lambda, Sweep};
pub use threshold::minimize_threshold;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    SinglePass,
    Iterative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdMethod {
    /// Evaluates every reachable-sample confidence; exact because the
    /// objective is piecewise constant in the threshold.
    ExactScan,
    /// Golden-section search on `(0, 1)`.
    GoldenSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSettings {
    pub algorithm: Algorithm,
    pub threshold_method: ThresholdMethod,
    pub golden_tolerance: f64,
    /// Upper bound on committed actions in the iterative search.
    pub max_rounds: usize,
}

impl Default for SearchSettings {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::SinglePass,
            threshold_method: ThresholdMethod::ExactScan,
            golden_tolerance: 1e-4,
            max_rounds: 1000,
        }
    }
}

impl SearchSettings {
    pub fn with_algorithm(mut self, algorithm: Algorithm) -> Self {
        self.algorithm = algorithm;
        self
    }

    pub fn with_threshold_method(mut self, method: ThresholdMethod) -> Self {
        self.threshold_method = method;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.golden_tolerance > 0.0 && self.golden_tolerance.is_finite()) {
            return Err(Error::InvalidSettings(format!(
                "golden tolerance must be positive, got {}",
                self.golden_tolerance
            )));
        }
        if self.max_rounds == 0 {
            return Err(Error::InvalidSettings("max_rounds must be >= 1".into()));
        }
        Ok(())
    }
}

/// A committed change `(k_c, t_c)` at one position and the objective it reached.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchAction {
    /// 0-based position.
    pub position: usize,
    pub candidate: usize,
    pub threshold: f64,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub config: ExitConfig,
    pub metrics: MetricsReport,
    /// Actions in commit order; their objectives strictly decrease.
    pub actions: Vec<SearchAction>,
    /// Set when the iterative search stopped on `max_rounds` rather than on
    /// finding no improving action.
    pub round_limit_reached: bool,
}

/// One point of a `λ` sweep. Serializes as `config.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontierEntry {
    pub lambda: f64,
    #[serde(flatten)]
    pub config: ExitConfig,
    pub metrics: MetricsReport,
}
