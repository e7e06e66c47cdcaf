//! Experiment generation, sweeps, solver comparisons, the phantom
//! reconstruction and the command-line front end.

pub mod certification;
pub mod cli;
pub mod config;
pub mod experiments;
pub mod manifest;
pub mod phantom;

pub use certification::{certify_all, certify_trial, CertifiedTrial, CertifySpec};
pub use config::ConfigMap;
pub use manifest::RunManifest;
pub use experiments::{
    compare_solvers, grid_dimensions, make_problem, phase_diagram, Comparison, ExperimentConfig, GridCell, GridResult,
    SolverKind,
};
pub use phantom::{ellipse_phantom, phantom_experiment, phantom_problem, PartialFourier, PhantomSolver, PhantomSpec};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "COSPARSE_OUT_DIR";
