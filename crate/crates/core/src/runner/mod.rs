//! The simulation loop and its configuration.

mod checker;
mod config;
mod run;

pub use checker::{check_compilable, BundledChecker, CheckerSpec, CompilabilityCheck, ExternalChecker, Verdict};
pub use config::{Comparison, Distribution, Metric, Preset, RunConfig, Termination, TreeMetrics};
pub use run::{
    attach_donors, iteration_rng, load_system, run, simulate, AttemptLog, AttemptOutcome, GeneratorStats, HistorySink,
    NullSink, RunSummary, StopReason,
};
