use crate::error::Result;
use crate::metrics::{check_lambda, evaluate, ExitConfig};
use crate::search::{minimize_threshold, Algorithm, SearchAction, SearchResult, SearchSettings};
use crate::trace::{CostModel, ExitTrace};

/// Runs whichever algorithm `settings` selects.
pub fn search(trace: &ExitTrace, costs: &CostModel, lambda: f64, settings: &SearchSettings) -> Result<SearchResult> {
    match settings.algorithm {
        Algorithm::SinglePass => single_pass_search(trace, costs, lambda, settings),
        Algorithm::Iterative => iterative_search(trace, costs, lambda, settings),
    }
}

/// Best strictly improving action over every searchable position and
/// candidate, scanned in (position, candidate) order so that ties keep the
/// earliest.
fn best_action(
    trace: &ExitTrace,
    costs: &CostModel,
    config: &ExitConfig,
    positions: std::ops::Range<usize>,
    lambda: f64,
    settings: &SearchSettings,
    mut f_min: f64,
) -> Result<Option<SearchAction>> {
    let mut best = None;
    for position in positions {
        for candidate in 0..=trace.candidates(position) {
            let (threshold, objective) =
                minimize_threshold(trace, costs, config, position, candidate, lambda, settings)?;
            if objective < f_min {
                f_min = objective;
                best = Some(SearchAction {
                    position,
                    candidate,
                    threshold,
                    objective,
                });
            }
        }
    }
    Ok(best)
}

/// One pass over positions `1..N-1` from the empty configuration, committing
/// at each position the candidate that improves the objective most.
pub fn single_pass_search(
    trace: &ExitTrace,
    costs: &CostModel,
    lambda: f64,
    settings: &SearchSettings,
) -> Result<SearchResult> {
    check_lambda(lambda)?;
    settings.validate()?;
    let n_pos = trace.position_count();
    let mut config = ExitConfig::empty(n_pos);
    let mut f_min = evaluate(trace, costs, &config, lambda)?.objective;
    let mut actions = Vec::new();

    for position in 0..n_pos - 1 {
        if let Some(action) = best_action(trace, costs, &config, position..position + 1, lambda, settings, f_min)? {
            config = config.with_action(position, action.candidate, action.threshold);
            f_min = action.objective;
            actions.push(action);
        }
    }
    let metrics = evaluate(trace, costs, &config, lambda)?;
    Ok(SearchResult {
        config,
        metrics,
        actions,
        round_limit_reached: false,
    })
}

/// Repeated full sweeps, each committing the single globally best improving
/// action, until no action improves or `max_rounds` actions were committed.
pub fn iterative_search(
    trace: &ExitTrace,
    costs: &CostModel,
    lambda: f64,
    settings: &SearchSettings,
) -> Result<SearchResult> {
    check_lambda(lambda)?;
    settings.validate()?;
    let n_pos = trace.position_count();
    let mut config = ExitConfig::empty(n_pos);
    let mut f_min = evaluate(trace, costs, &config, lambda)?.objective;
    let mut actions = Vec::new();
    let mut round_limit_reached = false;

    loop {
        if actions.len() >= settings.max_rounds {
            round_limit_reached = true;
            break;
        }
        match best_action(trace, costs, &config, 0..n_pos - 1, lambda, settings, f_min)? {
            Some(action) => {
                config = config.with_action(action.position, action.candidate, action.threshold);
                f_min = action.objective;
                actions.push(action);
            }
            None => break,
        }
    }
    let metrics = evaluate(trace, costs, &config, lambda)?;
    Ok(SearchResult {
        config,
        metrics,
        actions,
        round_limit_reached,
    })
}
