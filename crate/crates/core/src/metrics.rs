//! Exit partition, per-exit counts, relative accuracy/complexity and the
//! trade-off objective for a configuration.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trace::{CostModel, ExitTrace};

/// Threshold stored for disabled positions.
pub const DISABLED_THRESHOLD: f64 = 1.0;

/// Exit selection `k` and thresholds `t`, one entry per position.
///
/// `k[n] = 0` disables position `n`. The final position always runs the
/// original head (`k = 1`) with threshold 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExitConfig {
    pub k: Vec<usize>,
    pub t: Vec<f64>,
}

impl ExitConfig {
    /// No early exits: every sample runs the full model.
    pub fn empty(position_count: usize) -> Self {
        assert!(position_count >= 1);
        let mut k = vec![0; position_count];
        let mut t = vec![DISABLED_THRESHOLD; position_count];
        k[position_count - 1] = 1;
        t[position_count - 1] = 0.0;
        Self { k, t }
    }

    /// Builds a config, canonicalizing thresholds of disabled positions.
    pub fn new(k: Vec<usize>, t: Vec<f64>) -> Result<Self> {
        if k.len() != t.len() || k.is_empty() {
            return Err(Error::ShapeMismatch(format!(
                "k has {} entries and t has {}",
                k.len(),
                t.len()
            )));
        }
        let mut config = Self { k, t };
        config.canonicalize();
        Ok(config)
    }

    pub fn position_count(&self) -> usize {
        self.k.len()
    }

    pub fn is_enabled(&self, position: usize) -> bool {
        self.k[position] != 0
    }

    /// Copy with `(k, t)` substituted at `position`.
    pub fn with_action(&self, position: usize, k: usize, t: f64) -> Self {
        let mut next = self.clone();
        next.k[position] = k;
        next.t[position] = if k == 0 { DISABLED_THRESHOLD } else { t };
        next
    }

    fn canonicalize(&mut self) {
        for (k, t) in self.k.iter().zip(self.t.iter_mut()) {
            if *k == 0 {
                *t = DISABLED_THRESHOLD;
            }
        }
    }

    /// Checks shape and value constraints against `trace`.
    pub fn validate(&self, trace: &ExitTrace) -> Result<()> {
        let n_pos = trace.position_count();
        if self.k.len() != n_pos || self.t.len() != n_pos {
            return Err(Error::ShapeMismatch(format!(
                "config has {} positions, trace has {n_pos}",
                self.k.len()
            )));
        }
        for (n, (&k, &t)) in self.k.iter().zip(&self.t).enumerate() {
            if k > trace.candidates(n) {
                return Err(Error::ShapeMismatch(format!(
                    "k_{} = {k} exceeds K_{} = {}",
                    n + 1,
                    n + 1,
                    trace.candidates(n)
                )));
            }
            if !(0.0..=1.0).contains(&t) {
                return Err(Error::ShapeMismatch(format!(
                    "t_{} = {t} outside [0,1]",
                    n + 1
                )));
            }
        }
        if self.k[n_pos - 1] != 1 || self.t[n_pos - 1] != 0.0 {
            return Err(Error::ShapeMismatch(format!(
                "final position must use k=1, t=0 (found k={}, t={})",
                self.k[n_pos - 1],
                self.t[n_pos - 1]
            )));
        }
        Ok(())
    }
}

/// Counts and scores of one configuration on one trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    #[serde(rename = "E")]
    pub exit_count: Vec<usize>,
    #[serde(rename = "EC")]
    pub exit_correct: Vec<usize>,
    #[serde(rename = "A")]
    pub relative_accuracy: f64,
    #[serde(rename = "C")]
    pub relative_complexity: f64,
    #[serde(rename = "f")]
    pub objective: f64,
    pub lambda: f64,
}

impl MetricsReport {
    /// Scores exit counts under `config`.
    ///
    /// Every route that produces a report (set formulas, the run-time walk,
    /// the threshold scan) goes through here, so equal counts give
    /// bit-identical reals.
    pub fn from_counts(
        exit_count: Vec<usize>,
        exit_correct: Vec<usize>,
        costs: &CostModel,
        config: &ExitConfig,
        lambda: f64,
    ) -> Self {
        let (relative_accuracy, relative_complexity, objective) =
            score(&exit_count, &exit_correct, costs, &config.k, lambda);
        Self {
            exit_count,
            exit_correct,
            relative_accuracy,
            relative_complexity,
            objective,
            lambda,
        }
    }

    /// `A_n = EC_n / E_n`, absent where nothing exits.
    pub fn per_exit_accuracy(&self) -> Vec<Option<f64>> {
        self.exit_count
            .iter()
            .zip(&self.exit_correct)
            .map(|(&e, &ec)| (e > 0).then(|| ec as f64 / e as f64))
            .collect()
    }

    pub fn sample_count(&self) -> usize {
        self.exit_count.iter().sum()
    }
}

/// `Σ_{n' <= n} (S_{n'} + Δ[n'][k_{n'}])` for every `n`.
pub fn path_costs(costs: &CostModel, k: &[usize]) -> Vec<f64> {
    let mut total = 0.0;
    costs
        .segment_cost
        .iter()
        .zip(&costs.exit_cost)
        .zip(k)
        .map(|((s, delta), &k)| {
            total += s + delta[k];
            total
        })
        .collect()
}

/// `(A, C, f)` from per-position counts.
pub(crate) fn score(
    exit_count: &[usize],
    exit_correct: &[usize],
    costs: &CostModel,
    k: &[usize],
    lambda: f64,
) -> (f64, f64, f64) {
    let samples: usize = exit_count.iter().sum();
    let correct: usize = exit_correct.iter().sum();
    let accuracy = correct as f64 / (samples as f64 * costs.base_accuracy);
    let weighted: f64 = exit_count
        .iter()
        .zip(path_costs(costs, k))
        .map(|(&e, path)| e as f64 * path)
        .sum();
    let complexity = weighted / samples as f64;
    let objective = lambda * (1.0 - accuracy) + (1.0 - lambda) * complexity;
    (accuracy, complexity, objective)
}

pub(crate) fn check_lambda(lambda: f64) -> Result<()> {
    if (0.0..=1.0).contains(&lambda) {
        Ok(())
    } else {
        Err(Error::InvalidLambda(lambda))
    }
}

pub(crate) fn check_shapes(trace: &ExitTrace, costs: &CostModel, config: &ExitConfig) -> Result<()> {
    if costs.position_count() != trace.position_count() {
        return Err(Error::ShapeMismatch(format!(
            "cost model has {} positions, trace has {}",
            costs.position_count(),
            trace.position_count()
        )));
    }
    for n in 0..trace.position_count() {
        if costs.exit_cost[n].len() != trace.candidates(n) + 1 {
            return Err(Error::ShapeMismatch(format!(
                "cost model lists {} exits at position {}, trace has {}",
                costs.exit_cost[n].len().saturating_sub(1),
                n + 1,
                trace.candidates(n)
            )));
        }
    }
    config.validate(trace)
}

/// Sample sets `U_n` exiting at each position.
///
/// `W_n` holds samples whose confidence at the selected exit reaches `t_n`;
/// `U_n` is `W_n` minus every earlier `W`.
pub fn exit_partition(trace: &ExitTrace, config: &ExitConfig) -> Result<Vec<Vec<usize>>> {
    config.validate(trace)?;
    let m_count = trace.sample_count();
    let mut taken = vec![false; m_count];
    let mut partition = Vec::with_capacity(trace.position_count());
    for n in 0..trace.position_count() {
        if !config.is_enabled(n) {
            partition.push(Vec::new());
            continue;
        }
        let column = trace.column(n, config.k[n]);
        let threshold = config.t[n];
        let mut exits = Vec::new();
        for (m, &c) in column.confidence.iter().enumerate() {
            if c >= threshold {
                if !taken[m] {
                    exits.push(m);
                }
                taken[m] = true;
            }
        }
        partition.push(exits);
    }
    Ok(partition)
}

/// Computes `E_n`, `EC_n`, `A`, `C`, and `f` for `config` at trade-off `lambda`.
pub fn evaluate(
    trace: &ExitTrace,
    costs: &CostModel,
    config: &ExitConfig,
    lambda: f64,
) -> Result<MetricsReport> {
    check_lambda(lambda)?;
    check_shapes(trace, costs, config)?;
    let partition = exit_partition(trace, config)?;
    let exit_count = partition.iter().map(Vec::len).collect();
    let exit_correct = partition
        .iter()
        .enumerate()
        .map(|(n, exits)| {
            if exits.is_empty() {
                return 0;
            }
            let column = trace.column(n, config.k[n]);
            exits.iter().filter(|&&m| column.correct[m]).count()
        })
        .collect();
    Ok(MetricsReport::from_counts(
        exit_count,
        exit_correct,
        costs,
        config,
        lambda,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::synthesize_trace;
    use crate::trace::fixtures::t4;
    use proptest::prelude::*;

    const TOL: f64 = 1e-12;

    /// Independent per-sample walk: counts and total cost with no set algebra.
    fn brute_force(trace: &ExitTrace, costs: &CostModel, config: &ExitConfig) -> (Vec<usize>, Vec<usize>, f64) {
        let n_pos = trace.position_count();
        let mut e = vec![0; n_pos];
        let mut ec = vec![0; n_pos];
        let mut cost = 0.0;
        for m in 0..trace.sample_count() {
            let mut spent = 0.0;
            for n in 0..n_pos {
                spent += costs.segment_cost[n] + costs.exit_cost[n][config.k[n]];
                if config.k[n] != 0 && trace.confidence(m, n, config.k[n]) >= config.t[n] {
                    e[n] += 1;
                    ec[n] += usize::from(trace.correct(m, n, config.k[n]));
                    break;
                }
            }
            cost += spent;
        }
        (e, ec, cost / trace.sample_count() as f64)
    }

    #[test]
    fn t4_partition() {
        let (trace, _) = t4();
        let config = ExitConfig::new(vec![1, 1], vec![0.7, 0.0]).unwrap();
        assert_eq!(exit_partition(&trace, &config).unwrap(), vec![vec![0, 2], vec![1, 3]]);
    }

    #[test]
    fn t4_golden_values() {
        let (trace, costs) = t4();
        let config = ExitConfig::new(vec![1, 1], vec![0.7, 0.0]).unwrap();
        let report = evaluate(&trace, &costs, &config, 0.5).unwrap();
        assert_eq!(report.exit_count, vec![2, 2]);
        assert_eq!(report.exit_correct, vec![2, 2]);
        assert!((report.relative_accuracy - 4.0 / 3.0).abs() < TOL);
        assert!((report.relative_complexity - 0.75).abs() < TOL);
        assert!((report.objective - 0.208_333_333_333_333_3).abs() < TOL);
        assert_eq!(report.per_exit_accuracy(), vec![Some(1.0), Some(1.0)]);

        let (e, ec, c) = brute_force(&trace, &costs, &config);
        assert_eq!((e, ec), (report.exit_count.clone(), report.exit_correct.clone()));
        assert!((c - report.relative_complexity).abs() < TOL);
    }

    #[test]
    fn t4_empty_config_is_original_model() {
        let (trace, costs) = t4();
        let report = evaluate(&trace, &costs, &ExitConfig::empty(2), 0.5).unwrap();
        assert_eq!(report.exit_count, vec![0, 4]);
        assert_eq!(report.exit_correct, vec![0, 3]);
        assert_eq!(report.relative_accuracy, 1.0);
        assert_eq!(report.relative_complexity, 1.0);
        assert_eq!(report.objective, 0.5);
        assert_eq!(report.per_exit_accuracy()[0], None);
    }

    #[test]
    fn zero_threshold_takes_everything() {
        let (trace, _) = synthesize_trace(4, 30, 3, &[2, 1, 1], 0.5).unwrap();
        let config = ExitConfig::new(vec![2, 1, 1], vec![0.0, 0.5, 0.0]).unwrap();
        let partition = exit_partition(&trace, &config).unwrap();
        assert_eq!(partition[0], (0..30).collect::<Vec<_>>());
        assert!(partition[1].is_empty() && partition[2].is_empty());
    }

    #[test]
    fn invalid_inputs() {
        let (trace, costs) = t4();
        let good = ExitConfig::empty(2);
        assert!(matches!(evaluate(&trace, &costs, &good, 1.5), Err(Error::InvalidLambda(_))));
        assert!(matches!(evaluate(&trace, &costs, &good, -0.1), Err(Error::InvalidLambda(_))));
        let long = ExitConfig::empty(3);
        assert!(matches!(evaluate(&trace, &costs, &long, 0.5), Err(Error::ShapeMismatch(_))));
        let bad_k = ExitConfig::new(vec![2, 1], vec![0.5, 0.0]).unwrap();
        assert!(matches!(evaluate(&trace, &costs, &bad_k, 0.5), Err(Error::ShapeMismatch(_))));
        let bad_final = ExitConfig::new(vec![0, 1], vec![1.0, 0.2]).unwrap();
        assert!(matches!(evaluate(&trace, &costs, &bad_final, 0.5), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn disabled_threshold_is_canonical() {
        let config = ExitConfig::new(vec![0, 1], vec![0.3, 0.0]).unwrap();
        assert_eq!(config.t, vec![1.0, 0.0]);
    }

    #[test]
    fn objective_can_go_negative() {
        let (trace, costs) = t4();
        let config = ExitConfig::new(vec![1, 1], vec![0.8, 0.0]).unwrap();
        let report = evaluate(&trace, &costs, &config, 1.0).unwrap();
        assert!(report.objective < 0.0);
        assert_eq!(report.objective, 1.0 - report.relative_accuracy);
    }

    fn random_config(trace: &ExitTrace, choices: &[(usize, f64)]) -> ExitConfig {
        let n_pos = trace.position_count();
        let mut k = Vec::with_capacity(n_pos);
        let mut t = Vec::with_capacity(n_pos);
        for n in 0..n_pos - 1 {
            let (pick, thr) = choices[n % choices.len()];
            k.push(pick % (trace.candidates(n) + 1));
            t.push(thr);
        }
        k.push(1);
        t.push(0.0);
        ExitConfig::new(k, t).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(120))]

        #[test]
        fn partition_covers_every_sample_once(
            seed in 0u64..1000,
            m in 1usize..80,
            shape in prop::collection::vec(0usize..3, 1..5),
            choices in prop::collection::vec((0usize..4, 0.0f64..=1.0), 1..6),
            lambda in 0.0f64..=1.0,
        ) {
            let mut k_shape = shape.clone();
            k_shape.push(1);
            let (trace, costs) = synthesize_trace(seed, m, k_shape.len(), &k_shape, 0.7).unwrap();
            let config = random_config(&trace, &choices);
            let partition = exit_partition(&trace, &config).unwrap();
            let mut seen = vec![0u32; m];
            for exits in &partition {
                for &s in exits {
                    seen[s] += 1;
                }
            }
            prop_assert!(seen.iter().all(|&c| c == 1));

            let report = evaluate(&trace, &costs, &config, lambda).unwrap();
            prop_assert_eq!(report.sample_count(), m);
            prop_assert!(report.exit_count.iter().zip(&report.exit_correct).all(|(e, ec)| ec <= e));
            prop_assert!(report.relative_complexity > 0.0);
            prop_assert!(report.relative_accuracy >= 0.0);

            let (e, ec, c) = brute_force(&trace, &costs, &config);
            prop_assert_eq!(&e, &report.exit_count);
            prop_assert_eq!(&ec, &report.exit_correct);
            prop_assert!((c - report.relative_complexity).abs() < TOL);

            let at_zero = evaluate(&trace, &costs, &config, 0.0).unwrap();
            prop_assert_eq!(at_zero.objective, at_zero.relative_complexity);
            let at_one = evaluate(&trace, &costs, &config, 1.0).unwrap();
            prop_assert_eq!(at_one.objective, 1.0 - at_one.relative_accuracy);
        }

        #[test]
        fn empty_config_matches_head(seed in 0u64..1000, m in 1usize..60) {
            let (trace, costs) = synthesize_trace(seed, m, 3, &[1, 2, 1], 0.5).unwrap();
            let report = evaluate(&trace, &costs, &ExitConfig::empty(3), 0.3).unwrap();
            prop_assert_eq!(report.relative_accuracy, trace.final_accuracy() / costs.base_accuracy);
            let expected_c: f64 = costs.segment_cost.iter().sum::<f64>() + costs.exit_cost[2][1];
            prop_assert!((report.relative_complexity - expected_c).abs() < TOL);
        }

        #[test]
        fn raising_threshold_never_adds_exits(seed in 0u64..1000, lo in 0.0f64..=1.0, hi in 0.0f64..=1.0) {
            let (lo, hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
            let (trace, costs) = synthesize_trace(seed, 64, 3, &[1, 1, 1], 0.5).unwrap();
            let low = ExitConfig::new(vec![1, 0, 1], vec![lo, 1.0, 0.0]).unwrap();
            let high = low.with_action(0, 1, hi);
            let e_low = evaluate(&trace, &costs, &low, 0.5).unwrap().exit_count[0];
            let e_high = evaluate(&trace, &costs, &high, 0.5).unwrap().exit_count[0];
            prop_assert!(e_high <= e_low);
        }
    }
}
