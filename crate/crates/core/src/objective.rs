//! Smooth empirical-loss objectives with analytic gradients.
//!
//! Three models share one interface:
//!
//! - linear least squares, `f(theta) = ||X theta - y||^2 / (2n)`;
//! - logistic regression, `f(theta) = (1/n) sum log(1 + exp(x_i' theta))
//!   - y_i x_i' theta` with labels in {0, 1};
//! - low-rank matrix regression, `f(Theta) = (1/2n) sum (y_i - <X_i,
//!   Theta>)^2`, stored flattened so the solver stays model-agnostic.
//!
//! Matrix regression is algebraically least squares on `vec(Theta)` against
//! rows `vec(X_i)`; the two share the residual code path. Neither regression
//! model carries an intercept term.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, DenseVector};

/// Statistical model family of an instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    /// Gaussian-noise linear regression under squared loss.
    Linear,
    /// Bernoulli responses under logistic loss.
    Logistic,
    /// Trace-regression with a low-rank matrix parameter, squared loss.
    Matrix,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Linear => "linear",
            ModelKind::Logistic => "logistic",
            ModelKind::Matrix => "matrix",
        }
    }
}

/// An immutable dataset plus model kind; exposes loss values and gradients.
///
/// `design` has one sample per row: `n x d` for the vector models, and
/// `n x d^2` rows of flattened (row-major) sensing matrices for matrix
/// regression. Instances are safe to share across threads.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    kind: ModelKind,
    design: DenseMatrix,
    design_t: DenseMatrix,
    responses: DenseVector,
    matrix_side: Option<usize>,
}

impl ProblemInstance {
    /// Validates shapes and labels, and caches the transposed design for
    /// fast gradient accumulation.
    pub fn new(kind: ModelKind, design: DenseMatrix, responses: DenseVector) -> Result<Self> {
        if design.rows() != responses.len() {
            return Err(Error::Input(format!(
                "design has {} rows but there are {} responses",
                design.rows(),
                responses.len()
            )));
        }
        if design.rows() == 0 {
            return Err(Error::Input("instance has no samples".into()));
        }
        design.ensure_finite("design matrix")?;
        responses.ensure_finite("responses")?;
        if kind == ModelKind::Logistic {
            if let Some(bad) = responses.iter().position(|y| *y != 0.0 && *y != 1.0) {
                return Err(Error::Input(format!(
                    "logistic response at sample {bad} is {}, expected exactly 0 or 1",
                    responses[bad]
                )));
            }
        }
        let matrix_side = if kind == ModelKind::Matrix {
            let side = (design.cols() as f64).sqrt().round() as usize;
            if side * side != design.cols() {
                return Err(Error::Input(format!(
                    "matrix-regression design has {} columns, not a perfect square",
                    design.cols()
                )));
            }
            Some(side)
        } else {
            None
        };
        let design_t = design.transpose();
        Ok(Self {
            kind,
            design,
            design_t,
            responses,
            matrix_side,
        })
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    /// Parameter dimension: `d` for vector models, `d^2` for matrices.
    pub fn ambient_dim(&self) -> usize {
        self.design.cols()
    }

    pub fn sample_count(&self) -> usize {
        self.design.rows()
    }

    /// Side length of the parameter matrix (matrix regression only).
    pub fn matrix_side(&self) -> Option<usize> {
        self.matrix_side
    }

    pub fn design(&self) -> &DenseMatrix {
        &self.design
    }

    pub fn responses(&self) -> &DenseVector {
        &self.responses
    }

    fn check_theta(&self, theta: &DenseVector) -> Result<()> {
        if theta.len() != self.ambient_dim() {
            return Err(Error::Parameter(format!(
                "parameter length {} does not match ambient dimension {}",
                theta.len(),
                self.ambient_dim()
            )));
        }
        Ok(())
    }
}

/// A loss value together with its gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveEval {
    pub value: f64,
    pub gradient: DenseVector,
}

/// Empirical loss at `theta`.
pub fn value(p: &ProblemInstance, theta: &DenseVector) -> Result<f64> {
    p.check_theta(theta)?;
    let scores = p.design.matvec(theta);
    let v = match p.kind {
        ModelKind::Linear | ModelKind::Matrix => squared_loss(&scores, &p.responses),
        ModelKind::Logistic => logistic_loss(&scores, &p.responses),
    };
    if !v.is_finite() {
        return Err(Error::Numeric(format!("loss value is {v}")));
    }
    Ok(v)
}

/// Gradient of the empirical loss at `theta`.
pub fn gradient(p: &ProblemInstance, theta: &DenseVector) -> Result<DenseVector> {
    Ok(eval(p, theta)?.gradient)
}

/// Loss and gradient in one pass; the forward scores are shared.
pub fn eval(p: &ProblemInstance, theta: &DenseVector) -> Result<ObjectiveEval> {
    p.check_theta(theta)?;
    let n = p.sample_count() as f64;
    let scores = p.design.matvec(theta);
    let (value, mut residual) = match p.kind {
        ModelKind::Linear | ModelKind::Matrix => {
            let value = squared_loss(&scores, &p.responses);
            let residual: Vec<f64> = scores
                .iter()
                .zip(p.responses.iter())
                .map(|(s, y)| s - y)
                .collect();
            (value, DenseVector::new(residual))
        }
        ModelKind::Logistic => {
            let value = logistic_loss(&scores, &p.responses);
            let residual: Vec<f64> = scores
                .iter()
                .zip(p.responses.iter())
                .map(|(s, y)| sigmoid(*s) - y)
                .collect();
            (value, DenseVector::new(residual))
        }
    };
    for r in residual.as_mut_slice() {
        *r /= n;
    }
    let gradient = p.design_t.matvec(&residual);
    if !value.is_finite() {
        return Err(Error::Numeric(format!("loss value is {value}")));
    }
    gradient.ensure_finite("gradient").map_err(|_| {
        Error::Numeric("gradient has non-finite entries".into())
    })?;
    Ok(ObjectiveEval { value, gradient })
}

fn squared_loss(scores: &DenseVector, responses: &DenseVector) -> f64 {
    let n = responses.len() as f64;
    scores
        .iter()
        .zip(responses.iter())
        .map(|(s, y)| (s - y) * (s - y))
        .sum::<f64>()
        / (2.0 * n)
}

fn logistic_loss(scores: &DenseVector, responses: &DenseVector) -> f64 {
    let n = responses.len() as f64;
    scores
        .iter()
        .zip(responses.iter())
        .map(|(a, y)| log1p_exp(*a) - y * a)
        .sum::<f64>()
        / n
}

/// `log(1 + exp(a))` without overflow: `max(a, 0) + log1p(exp(-|a|))`.
pub fn log1p_exp(a: f64) -> f64 {
    a.max(0.0) + (-a.abs()).exp().ln_1p()
}

/// Overflow-safe logistic function.
pub fn sigmoid(a: f64) -> f64 {
    if a >= 0.0 {
        1.0 / (1.0 + (-a).exp())
    } else {
        let e = a.exp();
        e / (1.0 + e)
    }
}
