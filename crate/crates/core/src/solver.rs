//! The hard-thresholded gradient iteration with pluggable step rules, and
//! the double-loop variant that maintains an adaptive lower bound on the
//! target value.
//!
//! One iteration moves along the negative gradient and projects back onto
//! the constraint set:
//!
//! ```text
//! theta_{t+1} = P_s(theta_t - gamma_t * grad f(theta_t))
//! ```
//!
//! where `P_s` is hard thresholding for the vector models and the rank-s
//! spectral projection for matrix regression. A run terminates when the
//! iteration budget is exhausted, when the gap `f(theta_t) - f_target`
//! drops to the configured tolerance, or when the step size is zero (the
//! gap clamp makes every further iteration a no-op). Every iterate,
//! including the initial and final ones, is recorded in the trace.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{self, DenseMatrix, DenseVector, SupportSet};
use crate::objective::{self, ProblemInstance};
use crate::step::{SparsePolyak, StepContext, StepOutcome, StepRule};
use crate::svd;

/// Sparsity projection used by the update: coordinatewise hard thresholding
/// or, for matrix parameters, the rank projection of the reshaped vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProjectionOp {
    /// Keep the `k` largest-magnitude coordinates.
    Sparsity,
    /// Reshape to `side x side` and keep the top `k` singular triplets.
    LowRank { side: usize },
}

impl ProjectionOp {
    pub fn for_instance(p: &ProblemInstance) -> ProjectionOp {
        match p.matrix_side() {
            Some(side) => ProjectionOp::LowRank { side },
            None => ProjectionOp::Sparsity,
        }
    }

    /// Euclidean projection of `v` onto the budget-`k` constraint set.
    pub fn project(&self, v: &DenseVector, k: usize) -> Result<DenseVector> {
        match self {
            ProjectionOp::Sparsity => linalg::hard_threshold(v, k.min(v.len())),
            ProjectionOp::LowRank { side } => {
                let m = DenseMatrix::from_row_major(*side, *side, v.as_slice().to_vec())?;
                Ok(DenseVector::new(
                    svd::rank_project(&m, k)?.as_slice().to_vec(),
                ))
            }
        }
    }

    /// Squared norm of the projection of `v` at budget `k`, without
    /// materializing it.
    pub fn restricted_norm_sq(&self, v: &DenseVector, k: usize) -> Result<f64> {
        match self {
            ProjectionOp::Sparsity => Ok(linalg::top_k_norm_sq(v, k)),
            ProjectionOp::LowRank { side } => {
                let m = DenseMatrix::from_row_major(*side, *side, v.as_slice().to_vec())?;
                svd::top_k_singular_energy(&m, k)
            }
        }
    }

    /// Budget consumed by `v`: support size, or rank for matrix mode.
    fn budget_used(&self, v: &DenseVector) -> Result<usize> {
        match self {
            ProjectionOp::Sparsity => Ok(v.nnz()),
            ProjectionOp::LowRank { side } => {
                if v.iter().all(|x| *x == 0.0) {
                    return Ok(0);
                }
                let m = DenseMatrix::from_row_major(*side, *side, v.as_slice().to_vec())?;
                let (sigmas, _, _) = svd::truncated_svd(&m, *side)?;
                let cutoff = 1e-10 * sigmas[0].max(1.0);
                Ok(sigmas.iter().filter(|s| **s > cutoff).count())
            }
        }
    }
}

/// Parameters of one solver run.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Sparsity budget (rank budget in matrix mode); at least 1.
    pub budget: usize,
    /// Target objective value the step rule aims at.
    pub f_target: f64,
    /// Maximum number of gradient steps.
    pub max_iters: usize,
    /// Terminate once `f(theta_t) - f_target <= tol_f` (with a positive
    /// gap); must be nonnegative.
    pub tol_f: f64,
    /// Seed recorded in emitted traces; the iteration itself draws no
    /// randomness.
    pub seed: u64,
    /// Step-size strategy.
    pub rule: Arc<dyn StepRule>,
}

impl SolverConfig {
    fn validate(&self) -> Result<()> {
        if self.budget == 0 {
            return Err(Error::Parameter("budget must be at least 1".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::Parameter("max_iters must be at least 1".into()));
        }
        if !(self.tol_f.is_finite() && self.tol_f >= 0.0) {
            return Err(Error::Parameter(format!(
                "tol_f must be nonnegative, got {}",
                self.tol_f
            )));
        }
        if !self.f_target.is_finite() {
            return Err(Error::Parameter(format!(
                "f_target must be finite, got {}",
                self.f_target
            )));
        }
        Ok(())
    }
}

/// Why a run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// The iteration budget ran out.
    MaxIters,
    /// The step size was zero (gap at or below target, or a vanishing
    /// denominator), so the iterate can no longer move.
    Stalled,
    /// The gap reached `tol_f` while still positive.
    ToleranceReached,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::MaxIters => "max_iters",
            Termination::Stalled => "stalled",
            Termination::ToleranceReached => "tolerance",
        }
    }
}

/// Observations for one iterate.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Objective value at this iterate.
    pub f_value: f64,
    /// Step proposed at this iterate (zero on the terminal stalled record).
    pub gamma: f64,
    /// Squared norm of the budget-thresholded gradient.
    pub restricted_grad_norm_sq: f64,
    /// Squared distance to the reference vector, when one was supplied.
    pub error_sq: Option<f64>,
    pub support: SupportSet,
}

/// Full history of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub records: Vec<IterationRecord>,
    pub final_theta: DenseVector,
    pub termination: Termination,
    /// Target value the run was configured with, for gap computations.
    pub f_target: f64,
    /// Index of the best (lowest-f) recorded iterate.
    pub best_iteration: usize,
    /// Best objective value over all recorded iterates.
    pub best_f: f64,
    /// The best iterate itself.
    pub best_theta: DenseVector,
}

impl RunTrace {
    pub fn final_f(&self) -> f64 {
        self.records.last().expect("trace is never empty").f_value
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// One gradient step: evaluates the objective at `theta`, applies the step
/// rule and projects. Returns the next iterate and the record for `theta`.
///
/// A zero `gamma` in the record means the rule clamped (gap at or below
/// target) or stalled; the returned iterate then equals `theta` exactly,
/// because the projection of an in-budget iterate reproduces it verbatim.
pub fn iht_step(
    p: &ProblemInstance,
    theta: &DenseVector,
    cfg: &SolverConfig,
    theta_ref: Option<&DenseVector>,
    iteration: usize,
) -> Result<(DenseVector, IterationRecord)> {
    let projector = ProjectionOp::for_instance(p);
    let eval = objective::eval(p, theta).map_err(|e| at_iteration(e, iteration))?;
    let restricted_grad_norm_sq = projector.restricted_norm_sq(&eval.gradient, cfg.budget)?;
    let outcome = cfg.rule.step_size(&StepContext {
        f_value: eval.value,
        f_target: cfg.f_target,
        gradient: &eval.gradient,
        grad_norm_sq: eval.gradient.norm_sq(),
        restricted_grad_norm_sq,
        budget: cfg.budget,
        projector: &projector,
    })?;
    let gamma = match outcome {
        StepOutcome::Step(g) => g,
        StepOutcome::Stall => 0.0,
    };
    let error_sq = match theta_ref {
        Some(r) => Some(crate::metrics::estimation_error(theta, r)?),
        None => None,
    };
    let record = IterationRecord {
        iteration,
        f_value: eval.value,
        gamma,
        restricted_grad_norm_sq,
        error_sq,
        support: linalg::support(theta),
    };
    let next = if gamma == 0.0 {
        theta.clone()
    } else {
        let moved = theta.axpy(-gamma, &eval.gradient);
        let projected = projector.project(&moved, cfg.budget)?;
        projected
            .ensure_finite("iterate")
            .map_err(|_| at_iteration(Error::Numeric("iterate became non-finite".into()), iteration))?;
        projected
    };
    Ok((next, record))
}

fn at_iteration(e: Error, iteration: usize) -> Error {
    match e {
        Error::Numeric(msg) => Error::Numeric(format!("at iteration {iteration}: {msg}")),
        other => other,
    }
}

/// Runs the thresholded gradient iteration from `theta0`.
///
/// `theta_ref` only feeds the `error_sq` trace column; it never influences
/// the iteration. The trace records every iterate from `theta_0` up to and
/// including the final one.
pub fn run_iht(
    p: &ProblemInstance,
    theta0: &DenseVector,
    cfg: &SolverConfig,
    theta_ref: Option<&DenseVector>,
) -> Result<RunTrace> {
    cfg.validate()?;
    if theta0.len() != p.ambient_dim() {
        return Err(Error::Parameter(format!(
            "initial iterate has length {}, ambient dimension is {}",
            theta0.len(),
            p.ambient_dim()
        )));
    }
    theta0.ensure_finite("initial iterate")?;
    let projector = ProjectionOp::for_instance(p);
    let used = projector.budget_used(theta0)?;
    if used > cfg.budget {
        return Err(Error::Parameter(format!(
            "initial iterate uses budget {used}, limit is {}",
            cfg.budget
        )));
    }

    let mut theta = theta0.clone();
    let mut records = Vec::new();
    let mut best_iteration = 0usize;
    let mut best_f = f64::INFINITY;
    let mut best_theta = theta.clone();
    let termination;

    let mut t = 0usize;
    loop {
        let (next, record) = iht_step(p, &theta, cfg, theta_ref, t)?;
        let gap = record.f_value - cfg.f_target;
        let gamma = record.gamma;
        if record.f_value < best_f {
            best_f = record.f_value;
            best_iteration = t;
            best_theta = theta.clone();
        }
        records.push(record);
        if gamma == 0.0 {
            termination = Termination::Stalled;
            break;
        }
        if gap <= cfg.tol_f {
            termination = Termination::ToleranceReached;
            break;
        }
        if t == cfg.max_iters {
            termination = Termination::MaxIters;
            break;
        }
        theta = next;
        t += 1;
    }

    Ok(RunTrace {
        records,
        final_theta: theta,
        termination,
        f_target: cfg.f_target,
        best_iteration,
        best_f,
        best_theta,
    })
}

/// Parameters of the double-loop run.
///
/// Each of the `outer_epochs` epochs runs `inner_iters` steps of the
/// restricted Polyak rule at denominator scale 10 against the current lower
/// bound, then averages the bound toward the best value seen and restarts
/// from the best iterate.
#[derive(Debug, Clone)]
pub struct AdaptiveConfig {
    /// Initial lower bound on the attainable objective value (0 is valid
    /// for all bundled models).
    pub f_lower: f64,
    pub inner_iters: usize,
    pub outer_epochs: usize,
    /// Sparsity (or rank) budget.
    pub budget: usize,
    /// Seed recorded in emitted traces.
    pub seed: u64,
}

/// Scale of the inner-loop denominator; twice the single-loop default,
/// which keeps the inner step at least half of the oracle step whenever the
/// lower bound is valid.
pub const ADAPTIVE_DENOM_SCALE: f64 = 10.0;

/// One epoch of the double-loop run.
#[derive(Debug, Clone)]
pub struct AdaptiveEpoch {
    /// Lower bound used by this epoch's step sizes.
    pub f_lower: f64,
    pub trace: RunTrace,
}

impl AdaptiveEpoch {
    /// Best objective value reached within the epoch.
    pub fn best_f(&self) -> f64 {
        self.trace.best_f
    }
}

/// Result of [`run_adaptive`].
#[derive(Debug, Clone)]
pub struct AdaptiveRun {
    pub epochs: Vec<AdaptiveEpoch>,
    /// Best iterate across all epochs.
    pub final_theta: DenseVector,
    /// Objective value of `final_theta`.
    pub final_f: f64,
}

/// Double-loop iteration for when the target value is unknown: epoch `k`
/// runs the inner iteration against lower bound `lb_k`, then
/// `lb_{k+1} = (best_f_k + lb_k) / 2` and the next epoch restarts from the
/// best iterate. Returns the per-epoch traces and the overall best iterate.
pub fn run_adaptive(
    p: &ProblemInstance,
    theta0: &DenseVector,
    cfg: &AdaptiveConfig,
    theta_ref: Option<&DenseVector>,
) -> Result<AdaptiveRun> {
    if cfg.outer_epochs == 0 {
        return Err(Error::Parameter("outer_epochs must be at least 1".into()));
    }
    if cfg.inner_iters == 0 {
        return Err(Error::Parameter("inner_iters must be at least 1".into()));
    }
    let rule: Arc<dyn StepRule> = Arc::new(
        SparsePolyak::new(ADAPTIVE_DENOM_SCALE).expect("scale is positive"),
    );
    let mut f_lower = cfg.f_lower;
    let mut start = theta0.clone();
    let mut epochs = Vec::with_capacity(cfg.outer_epochs);
    let mut final_theta = theta0.clone();
    let mut final_f = f64::INFINITY;

    for _ in 0..cfg.outer_epochs {
        let inner = SolverConfig {
            budget: cfg.budget,
            f_target: f_lower,
            max_iters: cfg.inner_iters,
            tol_f: 0.0,
            seed: cfg.seed,
            rule: Arc::clone(&rule),
        };
        let trace = run_iht(p, &start, &inner, theta_ref)?;
        let best_f = trace.best_f;
        let best_theta = trace.best_theta.clone();
        if best_f < final_f {
            final_f = best_f;
            final_theta = best_theta.clone();
        }
        f_lower = 0.5 * (best_f + f_lower);
        start = best_theta;
        epochs.push(AdaptiveEpoch { f_lower: inner.f_target, trace });
    }

    Ok(AdaptiveRun {
        epochs,
        final_theta,
        final_f,
    })
}
