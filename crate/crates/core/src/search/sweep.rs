use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::search::{search, FrontierEntry, SearchSettings};
use crate::trace::{CostModel, ExitTrace};

/// All sweep entries plus their non-dominated subset.
#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub entries: Vec<FrontierEntry>,
    /// Sorted by complexity; both complexity and accuracy strictly increase.
    pub pareto: Vec<FrontierEntry>,
}

/// `start, start + step, … ≤ end`, rounded to 12 decimals so that grid
/// points print the way they were meant (0.07, not 0.07000000000000001).
pub fn lambda_grid(start: f64, end: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidSettings(format!("lambda step must be positive, got {step}")));
    }
    if !(0.0..=1.0).contains(&start) || !(0.0..=1.0).contains(&end) || start > end {
        return Err(Error::InvalidSettings(format!(
            "lambda range must satisfy 0 <= start <= end <= 1, got [{start}, {end}]"
        )));
    }
    let count = ((end - start) / step + 1e-9).floor() as usize;
    Ok((0..=count)
        .map(|i| {
            let value = start + i as f64 * step;
            ((value * 1e12).round() / 1e12).min(end)
        })
        .collect())
}

/// Runs an independent search at every `λ` of `grid` (in parallel).
pub fn sweep_lambda(
    trace: &ExitTrace,
    costs: &CostModel,
    grid: &[f64],
    settings: &SearchSettings,
) -> Result<Sweep> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if let Some(&bad) = grid.iter().find(|l| !(0.0..=1.0).contains(*l)) {
        return Err(Error::InvalidLambda(bad));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidSettings("lambda grid must be strictly ascending".into()));
    }
    settings.validate()?;
    let entries = grid
        .par_iter()
        .map(|&lambda| {
            let result = search(trace, costs, lambda, settings)?;
            Ok(FrontierEntry {
                lambda,
                config: result.config,
                metrics: result.metrics,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let pareto = pareto_front(&entries);
    Ok(Sweep { entries, pareto })
}

fn dominates(a: &FrontierEntry, b: &FrontierEntry) -> bool {
    let (ac, aa) = (a.metrics.relative_complexity, a.metrics.relative_accuracy);
    let (bc, ba) = (b.metrics.relative_complexity, b.metrics.relative_accuracy);
    ac <= bc && aa >= ba && (ac < bc || aa > ba)
}

/// Entries not dominated in (lower C, higher A). Duplicated points keep the
/// lowest-`λ` entry.
pub fn pareto_front(entries: &[FrontierEntry]) -> Vec<FrontierEntry> {
    let mut front: Vec<FrontierEntry> = Vec::new();
    for (i, entry) in entries.iter().enumerate() {
        if entries.iter().any(|other| dominates(other, entry)) {
            continue;
        }
        let duplicate = entries[..i].iter().any(|other| {
            other.metrics.relative_complexity == entry.metrics.relative_complexity
                && other.metrics.relative_accuracy == entry.metrics.relative_accuracy
        });
        if !duplicate {
            front.push(entry.clone());
        }
    }
    front.sort_by(|a, b| a.metrics.relative_complexity.total_cmp(&b.metrics.relative_complexity));
    front
}
