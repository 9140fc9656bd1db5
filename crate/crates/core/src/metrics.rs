//! Estimation error, support recovery and closed-form step bounds.

use crate::datagen::GenSpec;
use crate::error::{Error, Result};
use crate::linalg::{hard_threshold, support, DenseVector, SupportSet};
use crate::objective::ModelKind;
use crate::solver::RunTrace;

/// Squared Euclidean distance `||theta - theta_ref||^2` (squared Frobenius
/// for flattened matrices).
pub fn estimation_error(theta: &DenseVector, theta_ref: &DenseVector) -> Result<f64> {
    if theta.len() != theta_ref.len() {
        return Err(Error::Parameter(format!(
            "length mismatch: {} vs {}",
            theta.len(),
            theta_ref.len()
        )));
    }
    Ok(theta
        .iter()
        .zip(theta_ref.iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum())
}

/// Confusion counts of a recovered support against the true one.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportMetrics {
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// True when the true support is contained in the recovered one.
    pub contains_star: bool,
}

/// Compares `supp(theta)` against the true support.
pub fn support_metrics(theta: &DenseVector, support_star: &SupportSet) -> SupportMetrics {
    let recovered = support(theta);
    let tp = recovered.intersection_size(support_star);
    let fp = recovered.len() - tp;
    let fn_ = support_star.len() - tp;
    let precision = if tp + fp > 0 {
        tp as f64 / (tp + fp) as f64
    } else if support_star.is_empty() {
        1.0
    } else {
        0.0
    };
    let recall = if tp + fn_ > 0 {
        tp as f64 / (tp + fn_) as f64
    } else {
        1.0
    };
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    SupportMetrics {
        true_positives: tp,
        false_positives: fp,
        false_negatives: fn_,
        precision,
        recall,
        f1,
        contains_star: fn_ == 0,
    }
}

/// Margin of the minimum-signal condition
/// `|theta*|_min >= 7 ||HT_s(grad f(theta*))|| / mu_bar`.
///
/// Positive means exact support recovery is guaranteed once the iterates
/// enter the statistical-precision neighborhood. `|theta*|_min` is taken
/// over nonzero entries (0 for the zero vector); `mu_bar` is an oracle
/// curvature value supplied by the caller, never estimated from data.
pub fn snr_margin(
    theta_star: &DenseVector,
    grad_at_star: &DenseVector,
    budget: usize,
    mu_bar: f64,
) -> Result<f64> {
    if !(mu_bar.is_finite() && mu_bar > 0.0) {
        return Err(Error::Parameter(format!(
            "mu_bar must be positive, got {mu_bar}"
        )));
    }
    let min_signal = theta_star
        .iter()
        .filter(|v| **v != 0.0)
        .map(|v| v.abs())
        .fold(f64::INFINITY, f64::min);
    let min_signal = if min_signal.is_finite() { min_signal } else { 0.0 };
    let restricted = hard_threshold(grad_at_star, budget.min(grad_at_star.len()))?;
    Ok(min_signal - 7.0 * restricted.norm() / mu_bar)
}

/// Closed-form bounds for the AR(1) designs, used to pick the fixed-step
/// baseline without touching the data.
#[derive(Debug, Clone, PartialEq)]
pub struct TheoryBounds {
    /// Upper bound on the top covariance eigenvalue:
    /// `2 / ((1 - omega)^2 (1 + omega))`.
    pub lmax_bound: f64,
    /// Restricted-smoothness bound
    /// `lmax * (3 + 2(2s + s_star) / (s alpha))`, quartered for logistic.
    pub l_bar_bound: f64,
    /// The fixed-step baseline `2 / (3 l_bar)`.
    pub fixed_step: f64,
    /// Max diagonal of the feature covariance (stationary AR(1) variance).
    pub zeta: f64,
}

/// Computes [`TheoryBounds`] for an alpha-sized linear or logistic spec at
/// solver budget `s`.
pub fn theory_bounds(spec: &GenSpec, budget: usize) -> Result<TheoryBounds> {
    let alpha = spec.alpha().ok_or_else(|| {
        Error::Parameter("theory bounds require alpha-mode sample sizing".into())
    })?;
    if budget == 0 {
        return Err(Error::Parameter("budget must be at least 1".into()));
    }
    let lmax_bound = lmax_upper_bound(spec.omega);
    let linear_l_bar = lmax_bound
        * (3.0 + 2.0 * (2.0 * budget as f64 + spec.s_star as f64) / (budget as f64 * alpha));
    let l_bar_bound = match spec.model {
        ModelKind::Linear => linear_l_bar,
        ModelKind::Logistic => linear_l_bar / 4.0,
        ModelKind::Matrix => {
            return Err(Error::Parameter(
                "theory bounds are defined for the linear and logistic models".into(),
            ))
        }
    };
    Ok(TheoryBounds {
        lmax_bound,
        l_bar_bound,
        fixed_step: 2.0 / (3.0 * l_bar_bound),
        zeta: 1.0 / (1.0 - spec.omega * spec.omega),
    })
}

/// `lambda_max(Sigma) <= 2 / ((1 - omega)^2 (1 + omega))` for the AR(1)
/// feature covariance.
pub fn lmax_upper_bound(omega: f64) -> f64 {
    2.0 / ((1.0 - omega) * (1.0 - omega) * (1.0 + omega))
}

/// Smallest recorded iteration whose gap `f - f_target` is at or below
/// `threshold`, if any.
pub fn iters_to_threshold(trace: &RunTrace, threshold: f64) -> Option<usize> {
    trace
        .records
        .iter()
        .find(|r| r.f_value - trace.f_target <= threshold)
        .map(|r| r.iteration)
}
