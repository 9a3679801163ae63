//! Deterministic synthetic traces for tests and benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::trace::{CostModel, ExitColumn, ExitTrace};

/// Confidences are quantized to this grid, so written traces stay short and
/// equal-confidence ties occur the way they do with real softmax outputs.
const CONFIDENCE_QUANTUM: f64 = 1e-6;

/// Generates a pseudo-random trace and cost model.
///
/// Every sample gets a latent difficulty shared by all exits. Each exit has a
/// skill that grows with depth and candidate index; its confidence is a noisy
/// logistic of `skill - difficulty`. With probability `calibration` a sample's
/// correctness at an exit is "confidence at or above the exit's accuracy
/// quantile", otherwise it is an independent draw at the exit's accuracy.
pub fn synthesize_trace(
    seed: u64,
    sample_count: usize,
    position_count: usize,
    candidates: &[usize],
    calibration: f64,
) -> Result<(ExitTrace, CostModel)> {
    if sample_count == 0 || position_count == 0 {
        return Err(Error::InvalidShape("M and N must both be >= 1".into()));
    }
    if candidates.len() != position_count {
        return Err(Error::InvalidShape(format!(
            "K has {} entries but N = {position_count}",
            candidates.len()
        )));
    }
    if candidates[position_count - 1] == 0 {
        return Err(Error::InvalidShape("K_N must be >= 1".into()));
    }
    if !(0.0..=1.0).contains(&calibration) {
        return Err(Error::InvalidShape(format!("calibration {calibration} outside [0,1]")));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let difficulty: Vec<f64> = (0..sample_count).map(|_| rng.gen::<f64>()).collect();

    let mut columns = Vec::with_capacity(position_count);
    for (n, &k_count) in candidates.iter().enumerate() {
        let depth = (n + 1) as f64 / position_count as f64;
        let mut position = Vec::with_capacity(k_count);
        for k in 1..=k_count {
            let skill = (0.2 + 0.7 * depth + 0.04 * (k - 1) as f64 + rng.gen_range(-0.03..0.03))
                .clamp(0.05, 0.98);
            position.push(synth_column(&mut rng, &difficulty, skill, calibration));
        }
        columns.push(position);
    }

    // The original head must get something right for a_ori > 0.
    let head = &mut columns[position_count - 1][0];
    if !head.correct.iter().any(|&c| c) {
        let best = (0..sample_count)
            .max_by(|&a, &b| head.confidence[a].total_cmp(&head.confidence[b]))
            .unwrap_or(0);
        head.correct[best] = true;
    }

    let raw: Vec<f64> = (0..position_count).map(|_| rng.gen_range(0.5..1.5)).collect();
    let total: f64 = raw.iter().sum();
    let segment_cost: Vec<f64> = raw.iter().map(|s| s / total).collect();

    let exit_cost = candidates
        .iter()
        .enumerate()
        .map(|(n, &k_count)| {
            let last = n + 1 == position_count;
            std::iter::once(0.0)
                .chain((1..=k_count).map(|k| {
                    if last && k == 1 {
                        0.0
                    } else {
                        0.003 * k as f64 * rng.gen_range(0.5..1.5)
                    }
                }))
                .collect()
        })
        .collect();

    let trace = ExitTrace::new(sample_count, columns)?;
    let costs = CostModel {
        segment_cost,
        exit_cost,
        base_accuracy: trace.final_accuracy(),
    };
    costs.validate(Some(&trace))?;
    Ok((trace, costs))
}

fn synth_column(rng: &mut ChaCha8Rng, difficulty: &[f64], skill: f64, calibration: f64) -> ExitColumn {
    let confidence: Vec<f64> = difficulty
        .iter()
        .map(|d| {
            let z = 8.0 * (skill - d) + rng.gen_range(-1.5..1.5);
            let c = 1.0 / (1.0 + (-z).exp());
            ((c / CONFIDENCE_QUANTUM).round() * CONFIDENCE_QUANTUM).clamp(0.0, 1.0)
        })
        .collect();

    let mut sorted = confidence.clone();
    sorted.sort_by(f64::total_cmp);
    let wrong = ((1.0 - skill) * sorted.len() as f64).floor() as usize;
    let quantile = sorted.get(wrong).copied().unwrap_or(f64::INFINITY);

    let correct = confidence
        .iter()
        .map(|&c| {
            if rng.gen::<f64>() < calibration {
                c >= quantile
            } else {
                rng.gen::<f64>() < skill
            }
        })
        .collect();
    ExitColumn { confidence, correct }
}
