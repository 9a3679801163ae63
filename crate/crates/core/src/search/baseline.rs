use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{check_lambda, evaluate, ExitConfig, MetricsReport};
use crate::trace::{CostModel, ExitTrace};

/// Result of the uniform-threshold baseline.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformBaseline {
    pub threshold: f64,
    pub config: ExitConfig,
    pub metrics: MetricsReport,
    /// `(t, metrics)` for every grid point, ascending in `t`.
    pub curve: Vec<(f64, MetricsReport)>,
}

/// Same exit type `k_fixed` at every early position that has it, one
/// shared threshold picked from `threshold_grid`.
///
/// The objective is flat between sample confidences, so a fine grid hits
/// several equal minima; the highest threshold among them wins. That is the
/// plateau edge sitting on a sample confidence.
pub fn uniform_baseline(
    trace: &ExitTrace,
    costs: &CostModel,
    lambda: f64,
    k_fixed: usize,
    threshold_grid: &[f64],
) -> Result<UniformBaseline> {
    check_lambda(lambda)?;
    if threshold_grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let n_pos = trace.position_count();
    let supported: Vec<bool> = (0..n_pos - 1)
        .map(|n| k_fixed >= 1 && trace.candidates(n) >= k_fixed)
        .collect();
    if !supported.iter().any(|&s| s) {
        let available = (0..n_pos - 1).map(|n| trace.candidates(n)).max().unwrap_or(0);
        return Err(Error::CandidateOutOfRange {
            position: 1,
            candidate: k_fixed,
            available,
        });
    }

    let mut grid = threshold_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    let mut curve = Vec::with_capacity(grid.len());
    let mut best: Option<(f64, ExitConfig, MetricsReport)> = None;
    for &t in &grid {
        let mut config = ExitConfig::empty(n_pos);
        for (n, _) in supported.iter().enumerate().filter(|(_, &s)| s) {
            config = config.with_action(n, k_fixed, t);
        }
        let metrics = evaluate(trace, costs, &config, lambda)?;
        if best.as_ref().is_none_or(|(_, _, b)| metrics.objective <= b.objective) {
            best = Some((t, config, metrics.clone()));
        }
        curve.push((t, metrics));
    }
    let (threshold, config, metrics) = best.expect("grid is non-empty");
    Ok(UniformBaseline {
        threshold,
        config,
        metrics,
        curve,
    })
}

/// One exit evaluated as if it were the model's only head.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StandaloneExit {
    /// 0-based position.
    pub position: usize,
    pub exit: usize,
    /// Absolute accuracy, `|V_{n,k}| / M`.
    pub accuracy: f64,
    /// Backbone prefix through `position` plus this exit's cost.
    pub complexity: f64,
}

pub fn standalone_exits(trace: &ExitTrace, costs: &CostModel) -> Vec<StandaloneExit> {
    let mut prefix = 0.0;
    let mut rows = Vec::new();
    for n in 0..trace.position_count() {
        prefix += costs.segment_cost[n];
        for k in 1..=trace.candidates(n) {
            rows.push(StandaloneExit {
                position: n,
                exit: k,
                accuracy: trace.column(n, k).correct_count() as f64 / trace.sample_count() as f64,
                complexity: prefix + costs.exit_cost[n][k],
            });
        }
    }
    rows
}
