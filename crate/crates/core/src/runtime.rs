//! Run-time exit controller replayed over a trace, and the store of
//! pre-computed configurations it switches between.

use std::sync::atomic::{AtomicUsize, Ordering};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{check_lambda, check_shapes, ExitConfig, MetricsReport};
use crate::search::FrontierEntry;
use crate::trace::{CostModel, ExitTrace};

/// Where and how one sample left the model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleOutcome {
    pub sample_id: usize,
    /// 0-based exit position.
    pub exit_position: usize,
    pub exit_index: usize,
    pub confidence: f64,
    pub correct: bool,
    /// Segments and enabled exits executed up to and including the exit.
    pub cost: f64,
}

/// Walks one sample through the segments: run segment `n`, and if an exit is
/// enabled there run it and stop once its confidence reaches `t_n`.
pub fn walk_sample(
    trace: &ExitTrace,
    costs: &CostModel,
    config: &ExitConfig,
    sample_id: usize,
) -> Result<SampleOutcome> {
    check_shapes(trace, costs, config)?;
    if sample_id >= trace.sample_count() {
        return Err(Error::SampleOutOfRange {
            sample: sample_id,
            count: trace.sample_count(),
        });
    }
    Ok(walk(trace, costs, config, sample_id))
}

fn walk(trace: &ExitTrace, costs: &CostModel, config: &ExitConfig, sample_id: usize) -> SampleOutcome {
    let mut cost = 0.0;
    for n in 0..trace.position_count() {
        cost += costs.segment_cost[n];
        let k = config.k[n];
        if k == 0 {
            continue;
        }
        cost += costs.exit_cost[n][k];
        let confidence = trace.confidence(sample_id, n, k);
        if confidence >= config.t[n] {
            return SampleOutcome {
                sample_id,
                exit_position: n,
                exit_index: k,
                confidence,
                correct: trace.correct(sample_id, n, k),
                cost,
            };
        }
    }
    unreachable!("validated configs end in an exit with threshold 0")
}

/// Replays every sample and aggregates the outcomes into a report.
pub fn simulate(
    trace: &ExitTrace,
    costs: &CostModel,
    config: &ExitConfig,
    lambda: f64,
) -> Result<(Vec<SampleOutcome>, MetricsReport)> {
    check_lambda(lambda)?;
    check_shapes(trace, costs, config)?;
    let n_pos = trace.position_count();
    let outcomes: Vec<SampleOutcome> = (0..trace.sample_count())
        .map(|m| walk(trace, costs, config, m))
        .collect();
    let mut exit_count = vec![0; n_pos];
    let mut exit_correct = vec![0; n_pos];
    for outcome in &outcomes {
        exit_count[outcome.exit_position] += 1;
        exit_correct[outcome.exit_position] += usize::from(outcome.correct);
    }
    let report = MetricsReport::from_counts(exit_count, exit_correct, costs, config, lambda);
    Ok((outcomes, report))
}

/// Mean of per-sample costs; agrees with the report's `C` up to rounding.
pub fn mean_cost(outcomes: &[SampleOutcome]) -> f64 {
    outcomes.iter().map(|o| o.cost).sum::<f64>() / outcomes.len() as f64
}

/// What the caller wants from the store.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SwitchRequest {
    /// Nearest stored `λ`, ties toward the lower one.
    Lambda(f64),
    /// Most accurate entry with `C <= target`.
    MaxComplexity(f64),
    /// Cheapest entry with `A >= target`.
    MinAccuracy(f64),
}

impl std::fmt::Display for SwitchRequest {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SwitchRequest::Lambda(l) => write!(f, "lambda={l}"),
            SwitchRequest::MaxComplexity(c) => write!(f, "C <= {c}"),
            SwitchRequest::MinAccuracy(a) => write!(f, "A >= {a}"),
        }
    }
}

/// Immutable entries keyed by ascending `λ` plus an atomically switched
/// active index. Readers never see a partially written entry because entries
/// are never modified after construction.
#[derive(Debug)]
pub struct ConfigStore {
    entries: Vec<FrontierEntry>,
    active: AtomicUsize,
}

impl ConfigStore {
    /// Sorts by `λ`; duplicate keys are rejected. The first entry starts active.
    pub fn new(mut entries: Vec<FrontierEntry>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::EmptyStore);
        }
        entries.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
        if let Some(w) = entries.windows(2).find(|w| w[0].lambda == w[1].lambda) {
            return Err(Error::InvariantViolation(format!(
                "duplicate lambda {} in config store",
                w[0].lambda
            )));
        }
        Ok(Self {
            entries,
            active: AtomicUsize::new(0),
        })
    }

    pub fn entries(&self) -> &[FrontierEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn active(&self) -> &FrontierEntry {
        &self.entries[self.active.load(Ordering::Acquire)]
    }

    pub fn active_index(&self) -> usize {
        self.active.load(Ordering::Acquire)
    }

    /// Selects the entry matching `request` as active. A table lookup; no
    /// metrics are recomputed.
    pub fn switch(&self, request: SwitchRequest) -> Result<&FrontierEntry> {
        let index = self.lookup(request)?;
        self.active.store(index, Ordering::Release);
        Ok(&self.entries[index])
    }

    fn lookup(&self, request: SwitchRequest) -> Result<usize> {
        let metrics = |i: usize| &self.entries[i].metrics;
        let indices = 0..self.entries.len();
        match request {
            SwitchRequest::Lambda(lambda) => {
                check_lambda(lambda)?;
                // strict < keeps the lower λ on ties since entries are ascending
                let mut best = 0;
                for i in indices {
                    if (self.entries[i].lambda - lambda).abs() < (self.entries[best].lambda - lambda).abs() {
                        best = i;
                    }
                }
                Ok(best)
            }
            SwitchRequest::MaxComplexity(target) => indices
                .clone()
                .filter(|&i| metrics(i).relative_complexity <= target)
                .reduce(|a, b| {
                    let (ma, mb) = (metrics(a), metrics(b));
                    if mb.relative_accuracy > ma.relative_accuracy
                        || (mb.relative_accuracy == ma.relative_accuracy
                            && mb.relative_complexity < ma.relative_complexity)
                    {
                        b
                    } else {
                        a
                    }
                })
                .ok_or_else(|| {
                    let nearest = indices
                        .reduce(|a, b| {
                            if metrics(b).relative_complexity < metrics(a).relative_complexity {
                                b
                            } else {
                                a
                            }
                        })
                        .expect("store is non-empty");
                    self.infeasible(request, nearest)
                }),
            SwitchRequest::MinAccuracy(target) => indices
                .clone()
                .filter(|&i| metrics(i).relative_accuracy >= target)
                .reduce(|a, b| {
                    let (ma, mb) = (metrics(a), metrics(b));
                    if mb.relative_complexity < ma.relative_complexity
                        || (mb.relative_complexity == ma.relative_complexity
                            && mb.relative_accuracy > ma.relative_accuracy)
                    {
                        b
                    } else {
                        a
                    }
                })
                .ok_or_else(|| {
                    let nearest = indices
                        .reduce(|a, b| {
                            if metrics(b).relative_accuracy > metrics(a).relative_accuracy {
                                b
                            } else {
                                a
                            }
                        })
                        .expect("store is non-empty");
                    self.infeasible(request, nearest)
                }),
        }
    }

    fn infeasible(&self, request: SwitchRequest, nearest: usize) -> Error {
        let entry = &self.entries[nearest];
        Error::Infeasible {
            request: request.to_string(),
            nearest_lambda: entry.lambda,
            nearest_a: entry.metrics.relative_accuracy,
            nearest_c: entry.metrics.relative_complexity,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::evaluate;
    use crate::search::{sweep_lambda, SearchSettings};
    use crate::synth::synthesize_trace;
    use crate::trace::fixtures::t4;

    const TOL: f64 = 1e-12;

    fn t4_config() -> ExitConfig {
        ExitConfig::new(vec![1, 1], vec![0.7, 0.0]).unwrap()
    }

    #[test]
    fn t4_walks() {
        let (trace, costs) = t4();
        let first = walk_sample(&trace, &costs, &t4_config(), 0).unwrap();
        assert_eq!((first.exit_position, first.exit_index), (0, 1));
        assert_eq!(first.confidence, 0.9);
        assert!(first.correct);
        assert!((first.cost - 0.45).abs() < TOL);

        let last = walk_sample(&trace, &costs, &t4_config(), 3).unwrap();
        assert_eq!(last.exit_position, 1);
        assert!((last.cost - 1.05).abs() < TOL);

        assert!(matches!(
            walk_sample(&trace, &costs, &t4_config(), 4),
            Err(Error::SampleOutOfRange { sample: 4, count: 4 })
        ));
    }

    #[test]
    fn empty_config_runs_full_model() {
        let (trace, costs) = synthesize_trace(3, 40, 4, &[1, 2, 1, 1], 0.5).unwrap();
        let full = 1.0 + costs.exit_cost[3][1];
        for m in 0..40 {
            let o = walk_sample(&trace, &costs, &ExitConfig::empty(4), m).unwrap();
            assert_eq!(o.exit_position, 3);
            assert!((o.cost - full).abs() < 1e-9);
        }
    }

    #[test]
    fn t4_simulation_matches_formulas() {
        let (trace, costs) = t4();
        let (outcomes, report) = simulate(&trace, &costs, &t4_config(), 0.5).unwrap();
        assert_eq!(report, evaluate(&trace, &costs, &t4_config(), 0.5).unwrap());
        assert!((report.relative_accuracy - 4.0 / 3.0).abs() < TOL);
        assert!((mean_cost(&outcomes) - 0.75).abs() < TOL);
    }

    #[test]
    fn zero_threshold_catches_all_at_first_exit() {
        let (trace, costs) = synthesize_trace(3, 40, 3, &[1, 1, 1], 0.5).unwrap();
        let config = ExitConfig::empty(3).with_action(0, 1, 0.0);
        let (outcomes, _) = simulate(&trace, &costs, &config, 0.5).unwrap();
        assert!(outcomes.iter().all(|o| o.exit_position == 0));
    }

    fn t4_store() -> ConfigStore {
        let (trace, costs) = t4();
        let sweep = sweep_lambda(&trace, &costs, &[0.0, 1.0], &SearchSettings::default()).unwrap();
        ConfigStore::new(sweep.entries).unwrap()
    }

    #[test]
    fn switch_by_complexity_budget() {
        let store = t4_store();
        let entry = store.switch(SwitchRequest::MaxComplexity(0.8)).unwrap();
        assert!((entry.metrics.relative_complexity - 0.75).abs() < TOL);
        assert_eq!(entry.config.k, vec![1, 1]);
        assert_eq!(entry.config.t, vec![0.8, 0.0]);
        assert_eq!(store.active().lambda, 1.0);
    }

    #[test]
    fn switch_by_lambda_prefers_lower_on_tie() {
        let (trace, costs) = t4();
        let sweep = sweep_lambda(&trace, &costs, &[0.0, 0.5, 1.0], &SearchSettings::default()).unwrap();
        let store = ConfigStore::new(sweep.entries).unwrap();
        assert_eq!(store.switch(SwitchRequest::Lambda(0.49)).unwrap().lambda, 0.5);
        assert_eq!(store.switch(SwitchRequest::Lambda(0.25)).unwrap().lambda, 0.0);
        assert_eq!(store.switch(SwitchRequest::Lambda(0.75)).unwrap().lambda, 0.5);
    }

    #[test]
    fn infeasible_requests_name_nearest_miss() {
        let store = t4_store();
        let before = store.active_index();
        match store.switch(SwitchRequest::MinAccuracy(2.0)) {
            Err(Error::Infeasible { nearest_lambda, .. }) => assert_eq!(nearest_lambda, 1.0),
            other => panic!("{other:?}"),
        }
        assert!(matches!(store.switch(SwitchRequest::MaxComplexity(0.1)), Err(Error::Infeasible { .. })));
        assert_eq!(store.active_index(), before);
    }

    #[test]
    fn switching_is_idempotent_and_non_mutating() {
        let store = t4_store();
        let snapshot = store.entries().to_vec();
        let a = store.switch(SwitchRequest::MinAccuracy(1.0)).unwrap().clone();
        let b = store.switch(SwitchRequest::MinAccuracy(1.0)).unwrap().clone();
        assert_eq!(a, b);
        assert_eq!(store.entries(), snapshot.as_slice());
        // cheapest with A >= 1 is the λ = 0 entry
        assert_eq!(a.lambda, 0.0);
    }

    #[test]
    fn store_rejects_empty_and_duplicates() {
        assert!(matches!(ConfigStore::new(vec![]), Err(Error::EmptyStore)));
        let store = t4_store();
        let mut entries = store.entries().to_vec();
        entries.push(entries[0].clone());
        assert!(ConfigStore::new(entries).is_err());
    }

    #[test]
    fn concurrent_readers_see_whole_entries() {
        let store = t4_store();
        std::thread::scope(|s| {
            s.spawn(|| {
                for i in 0..1000 {
                    let l = if i % 2 == 0 { 0.0 } else { 1.0 };
                    store.switch(SwitchRequest::Lambda(l)).unwrap();
                }
            });
            for _ in 0..4 {
                s.spawn(|| {
                    for _ in 0..1000 {
                        let e = store.active();
                        assert!(store.entries().contains(e));
                    }
                });
            }
        });
    }
}
