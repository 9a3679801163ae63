//! Trace-driven configuration search for multi-exit models.
//!
//! A segmented backbone with candidate exit functions attached after each
//! segment is described entirely by an [`ExitTrace`] (recorded confidences and
//! correctness flags) and a [`CostModel`] (normalized MACs). From those two
//! inputs this crate computes the accuracy/complexity metrics of any
//! [`ExitConfig`], searches for configurations minimizing
//! `λ(1 − A) + (1 − λ)C`, sweeps `λ` to build a selectable frontier, and
//! replays the run-time exit controller sample by sample.

pub mod error;
pub mod io;
pub mod metrics;
pub mod runtime;
pub mod search;
pub mod synth;
pub mod trace;

pub use error::{Error, Result};
pub use metrics::{evaluate, exit_partition, ExitConfig, MetricsReport};
pub use runtime::{simulate, walk_sample, ConfigStore, SampleOutcome, SwitchRequest};
pub use search::{
    iterative_search, minimize_threshold, single_pass_search, standalone_exits, sweep_lambda,
    uniform_baseline, Algorithm, FrontierEntry, SearchAction, SearchResult, SearchSettings,
    StandaloneExit, Sweep, ThresholdMethod,
};
pub use synth::synthesize_trace;
pub use trace::{CostModel, ExitColumn, ExitTrace};
