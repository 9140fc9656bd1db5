//! Sparse high-dimensional estimation via iterative hard thresholding (IHT).
//!
//! The crate bundles everything needed to run and benchmark IHT with adaptive
//! step sizes on sparse regression problems:
//!
//! - [`linalg`]: dense vector/matrix primitives, the hard-thresholding
//!   projection and support extraction;
//! - [`svd`]: a truncated SVD and the rank-s spectral projection used for
//!   low-rank matrix regression;
//! - [`objective`]: least-squares, logistic and matrix-regression objectives
//!   with analytic gradients;
//! - [`step`]: interchangeable step-size strategies (fixed, Polyak,
//!   restricted Polyak) behind a common trait, selectable by name;
//! - [`solver`]: the IHT iteration with per-iteration tracing, plus the
//!   double-loop variant that refines a lower bound on the optimal value;
//! - [`datagen`]: seeded synthetic instances (AR(1) designs, sparse ground
//!   truths, low-rank sensing);
//! - [`metrics`]: estimation error, support recovery and closed-form step
//!   bounds for the fixed-step baseline.
//!
//! All floating-point work is in `f64`. Runs are deterministic: the same
//! instance, configuration and seed produce bitwise-identical traces.

pub mod datagen;
pub mod error;
pub mod linalg;
pub mod metrics;
pub mod objective;
pub mod rng;
pub mod solver;
pub mod step;
pub mod svd;

pub use error::Error;
pub use linalg::{hard_threshold, support, DenseMatrix, DenseVector, SupportSet};
pub use objective::{ModelKind, ObjectiveEval, ProblemInstance};
pub use solver::{
    run_adaptive, run_iht, AdaptiveConfig, AdaptiveRun, IterationRecord, ProjectionOp, RunTrace,
    SolverConfig, Termination,
};
pub use step::{build_step_rule, StepContext, StepOutcome, StepRule, StepRuleSpec};
pub use svd::{rank_project, truncated_svd};
