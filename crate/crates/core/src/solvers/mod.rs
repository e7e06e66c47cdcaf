//! First-order solvers for the analysis LASSO and its relaxations.

mod analysis;
pub mod engine;
pub mod trace;

pub use analysis::{
    continuation, dfista, sfista, solve, AnalysisProblem, ContinuationConfig, EnvelopeGradientAt, LinearImages,
    Relaxation, SmoothedAnalysis, SolverConfig, SplitAnalysis, NORM_SAFETY, POWER_ITERS,
};
pub use engine::{mfista, next_momentum, proximal_gradient, CompositeProblem, FnProblem, Monitor, RunOptions};
pub use trace::{read_trace_csv, CsvOptions, IterateTrace, TraceRow};
