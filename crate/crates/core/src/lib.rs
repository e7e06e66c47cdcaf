//! Analysis-model sparse recovery with monotone FISTA.
//!
//! The analysis LASSO `½‖Ax − b‖² + λ‖D*x‖₁` has no closed-form proximal
//! step for the `‖D*x‖₁` term, so this crate solves it through two relaxed
//! models that only need the prox of `λ‖·‖₁`:
//!
//! * smoothing: replace `λ‖·‖₁` by its Moreau envelope (a sum of Huber
//!   functions) and run monotone FISTA on the smooth objective
//!   ([`solvers::sfista`]);
//! * decomposition: split `z = D*x` with a quadratic penalty and run monotone
//!   FISTA jointly on `(x, z)` ([`solvers::dfista`]).
//!
//! Around the solvers sit operator plumbing ([`linops`]), frame and signal
//! generators ([`frames`]), recovery-guarantee checks based on the
//! restricted isometry property adapted to `D` ([`certify`]) and an
//! experiment harness with CSV persistence and a CLI ([`harness`]).

pub mod certify;
pub mod error;
pub mod flatbin;
pub mod frames;
pub mod harness;
pub mod linops;
pub mod prox;
pub mod rng;
pub mod solvers;
pub mod vector;

pub use error::{Error, Result};
