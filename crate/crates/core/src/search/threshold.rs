use crate::error::{Error, Result};
use crate::metrics::{check_lambda, check_shapes, evaluate, score, ExitConfig, DISABLED_THRESHOLD};
use crate::search::{SearchSettings, ThresholdMethod};
use crate::trace::{CostModel, ExitTrace};

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Finds the threshold minimizing the objective when exit `candidate` is
/// placed at 0-based `position`, every other position of `config` unchanged.
///
/// Returns `(t_c, f_c)`. `candidate = 0` disables the position and returns
/// `(1.0, f)`. Among equal objectives the lowest threshold wins.
pub fn minimize_threshold(
    trace: &ExitTrace,
    costs: &CostModel,
    config: &ExitConfig,
    position: usize,
    candidate: usize,
    lambda: f64,
    settings: &SearchSettings,
) -> Result<(f64, f64)> {
    check_lambda(lambda)?;
    check_shapes(trace, costs, config)?;
    let n_pos = trace.position_count();
    if position + 1 >= n_pos {
        return Err(Error::PositionOutOfRange {
            position: position + 1,
            max: n_pos - 1,
        });
    }
    if candidate > trace.candidates(position) {
        return Err(Error::CandidateOutOfRange {
            position: position + 1,
            candidate,
            available: trace.candidates(position),
        });
    }
    if candidate == 0 {
        let disabled = config.with_action(position, 0, DISABLED_THRESHOLD);
        let f = evaluate(trace, costs, &disabled, lambda)?.objective;
        return Ok((DISABLED_THRESHOLD, f));
    }
    match settings.threshold_method {
        ThresholdMethod::ExactScan => Ok(exact_scan(trace, costs, config, position, candidate, lambda)),
        ThresholdMethod::GoldenSection => golden_section(
            trace,
            costs,
            config,
            position,
            candidate,
            lambda,
            settings.golden_tolerance,
        ),
    }
}

/// First enabled position in `range` whose exit fires for `sample`.
fn first_exit(
    trace: &ExitTrace,
    config: &ExitConfig,
    sample: usize,
    range: std::ops::Range<usize>,
) -> Option<(usize, bool)> {
    range.into_iter().find_map(|n| {
        let k = config.k[n];
        (k != 0 && trace.confidence(sample, n, k) >= config.t[n]).then(|| (n, trace.correct(sample, n, k)))
    })
}

struct Reached {
    confidence: f64,
    exit_correct: bool,
    downstream: usize,
    downstream_correct: bool,
}

// Samples that exit upstream of `position` are fixed. Each sample reaching
// it either exits there (confidence >= t) or falls through to its exit under
// the rest of the config. Lowering t from above the largest confidence moves
// those samples over one confidence group at a time, and the objective only
// changes at group boundaries, so scoring every group is exhaustive.
fn exact_scan(
    trace: &ExitTrace,
    costs: &CostModel,
    config: &ExitConfig,
    position: usize,
    candidate: usize,
    lambda: f64,
) -> (f64, f64) {
    let n_pos = trace.position_count();
    let probe = config.with_action(position, candidate, 0.0);
    let column = trace.column(position, candidate);
    let mut exit_count = vec![0usize; n_pos];
    let mut exit_correct = vec![0usize; n_pos];
    let mut reached = Vec::new();

    for m in 0..trace.sample_count() {
        if let Some((n, correct)) = first_exit(trace, config, m, 0..position) {
            exit_count[n] += 1;
            exit_correct[n] += usize::from(correct);
            continue;
        }
        let (downstream, downstream_correct) =
            first_exit(trace, config, m, position + 1..n_pos).expect("final exit has threshold 0");
        exit_count[downstream] += 1;
        exit_correct[downstream] += usize::from(downstream_correct);
        reached.push(Reached {
            confidence: column.confidence[m],
            exit_correct: column.correct[m],
            downstream,
            downstream_correct,
        });
    }
    reached.sort_by(|a, b| b.confidence.total_cmp(&a.confidence));

    let objective = |e: &[usize], ec: &[usize]| score(e, ec, costs, &probe.k, lambda).2;
    let mut best: Option<(f64, f64)> = None;
    // t = 1.0 with nothing above it: the exit runs but never fires.
    if reached.first().is_none_or(|r| r.confidence < 1.0) {
        best = Some((1.0, objective(&exit_count, &exit_correct)));
    }
    let mut i = 0;
    while i < reached.len() {
        let group = reached[i].confidence;
        while i < reached.len() && reached[i].confidence == group {
            let r = &reached[i];
            exit_count[r.downstream] -= 1;
            exit_correct[r.downstream] -= usize::from(r.downstream_correct);
            exit_count[position] += 1;
            exit_correct[position] += usize::from(r.exit_correct);
            i += 1;
        }
        let f = objective(&exit_count, &exit_correct);
        if best.is_none_or(|(_, best_f)| f <= best_f) {
            best = Some((group, f));
        }
    }
    best.expect("either no sample reaches 1.0 or at least one group exists")
}

fn golden_section(
    trace: &ExitTrace,
    costs: &CostModel,
    config: &ExitConfig,
    position: usize,
    candidate: usize,
    lambda: f64,
    tolerance: f64,
) -> Result<(f64, f64)> {
    let f = |t: f64| -> Result<f64> {
        Ok(evaluate(trace, costs, &config.with_action(position, candidate, t), lambda)?.objective)
    };
    let mut best = (f64::NAN, f64::INFINITY);
    let mut record = |t: f64, v: f64| {
        if v < best.1 || (v == best.1 && t < best.0) {
            best = (t, v);
        }
    };

    let (mut a, mut b) = (0.0_f64, 1.0_f64);
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    record(x1, f1);
    record(x2, f2);
    while b - a > tolerance {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1)?;
            record(x1, f1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2)?;
            record(x2, f2);
        }
    }
    let mid = 0.5 * (a + b);
    record(mid, f(mid)?);
    Ok(best)
}
