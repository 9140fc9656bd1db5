//! Seeded synthetic instances for the benchmark experiments.
//!
//! Vector models draw each sample as an AR(1) path across the feature axis:
//! the first coordinate is `e_1 / sqrt(1 - omega^2)` and subsequent ones
//! follow `x_{t+1} = omega * x_t + e_t` with fresh standard normals, so
//! every coordinate sits at the stationary variance `1 / (1 - omega^2)`.
//! Responses are `y = x' theta_star + noise` (linear) or Bernoulli draws
//! from the logistic probability. Matrix regression uses i.i.d. standard
//! normal sensing matrices against a rank-`s_star` target `A B'`.
//!
//! Each random quantity consumes its own substream of the instance seed
//! (design, support, coefficient values, noise, in that tag order), so e.g.
//! changing the noise variance never changes the design or the ground
//! truth. When sized by `alpha`, the sample count is
//! `n = ceil(alpha * s * ln d)` with `s` the solver budget, natural log.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{support, DenseMatrix, DenseVector, SupportSet};
use crate::objective::{self, ModelKind, ProblemInstance};
use crate::rng::{substream, Xoshiro256PlusPlus};

/// Substream tags; the order is part of the on-disk reproducibility story.
mod stream_tag {
    pub const DESIGN: u64 = 0;
    pub const SUPPORT: u64 = 1;
    pub const VALUES: u64 = 2;
    pub const NOISE: u64 = 3;
}

/// Sample-count policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleSize {
    /// `n = ceil(alpha * budget * ln d)`.
    Alpha(f64),
    /// Explicit sample count.
    #[serde(rename = "n")]
    Count(usize),
}

/// Recipe for one synthetic instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenSpec {
    /// Ambient dimension `d` (matrix side length for the matrix model).
    pub dim: usize,
    /// True sparsity (true rank for the matrix model).
    pub s_star: usize,
    /// Sample-count policy.
    pub samples: SampleSize,
    /// AR(1) feature correlation in `[0, 1)`; ignored by the matrix model,
    /// whose sensors are i.i.d. standard normal.
    pub omega: f64,
    /// Response noise variance (linear and matrix models).
    pub noise_var: f64,
    pub model: ModelKind,
    pub seed: u64,
}

impl GenSpec {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::Parameter("dim must be at least 1".into()));
        }
        if self.s_star == 0 || self.s_star > self.dim {
            return Err(Error::Parameter(format!(
                "s_star must lie in 1..={}, got {}",
                self.dim, self.s_star
            )));
        }
        if !(0.0..1.0).contains(&self.omega) {
            return Err(Error::Parameter(format!(
                "omega must lie in [0, 1), got {}",
                self.omega
            )));
        }
        if !(self.noise_var >= 0.0 && self.noise_var.is_finite()) {
            return Err(Error::Parameter(format!(
                "noise_var must be nonnegative, got {}",
                self.noise_var
            )));
        }
        if let SampleSize::Alpha(alpha) = self.samples {
            if !(alpha > 0.0 && alpha.is_finite()) {
                return Err(Error::Parameter(format!(
                    "alpha must be positive, got {alpha}"
                )));
            }
        }
        if let SampleSize::Count(n) = self.samples {
            if n == 0 {
                return Err(Error::Parameter("sample count must be at least 1".into()));
            }
        }
        Ok(())
    }

    /// Resolves the sample count for a given solver budget.
    pub fn sample_count(&self, budget: usize) -> Result<usize> {
        self.validate()?;
        match self.samples {
            SampleSize::Count(n) => Ok(n),
            SampleSize::Alpha(alpha) => {
                if budget == 0 {
                    return Err(Error::Parameter(
                        "alpha-sized specs need a positive budget".into(),
                    ));
                }
                let n = (alpha * budget as f64 * (self.dim as f64).ln()).ceil();
                if !(n.is_finite() && n >= 1.0) {
                    return Err(Error::Parameter(format!(
                        "alpha sizing produced invalid sample count {n}"
                    )));
                }
                Ok(n as usize)
            }
        }
    }

    /// Alpha of the sizing rule, when configured.
    pub fn alpha(&self) -> Option<f64> {
        match self.samples {
            SampleSize::Alpha(a) => Some(a),
            SampleSize::Count(_) => None,
        }
    }
}

/// The generated truth: parameter, its support and its objective value on
/// the generated instance.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    /// `theta_star`, flattened row-major for the matrix model.
    pub theta_star: DenseVector,
    pub support_star: SupportSet,
    /// `f(theta_star)` on the generated instance (0 exactly when noiseless
    /// under squared loss).
    pub f_star: f64,
}

/// AR(1) design: `n` samples as rows, each an independent length-`d`
/// stationary AR(1) path over the feature axis.
pub fn gen_ar1_design(
    d: usize,
    n: usize,
    omega: f64,
    rng: &mut Xoshiro256PlusPlus,
) -> Result<DenseMatrix> {
    if !(0.0..1.0).contains(&omega) {
        return Err(Error::Parameter(format!(
            "omega must lie in [0, 1), got {omega}"
        )));
    }
    let scale = 1.0 / (1.0 - omega * omega).sqrt();
    let mut data = Vec::with_capacity(n * d);
    for _ in 0..n {
        let mut prev = rng.next_normal() * scale;
        data.push(prev);
        for _ in 1..d {
            prev = omega * prev + rng.next_normal();
            data.push(prev);
        }
    }
    DenseMatrix::from_row_major(n, d, data)
}

/// Sparse ground-truth vector: a uniformly random size-`s_star` support
/// with i.i.d. standard normal values. Support and values come from the
/// two distinct streams handed in.
pub fn gen_theta_star(
    d: usize,
    s_star: usize,
    support_rng: &mut Xoshiro256PlusPlus,
    value_rng: &mut Xoshiro256PlusPlus,
) -> Result<DenseVector> {
    if s_star > d {
        return Err(Error::Parameter(format!(
            "s_star {s_star} exceeds dimension {d}"
        )));
    }
    // Partial Fisher-Yates: the first s_star entries are a uniform draw
    // without replacement.
    let mut pool: Vec<usize> = (0..d).collect();
    for i in 0..s_star {
        let j = i + support_rng.next_index(d - i);
        pool.swap(i, j);
    }
    let mut theta = DenseVector::zeros(d);
    for &idx in &pool[..s_star] {
        let mut v = value_rng.next_normal();
        while v == 0.0 {
            v = value_rng.next_normal();
        }
        theta[idx] = v;
    }
    Ok(theta)
}

/// Responses for the vector models: Gaussian noise around the linear
/// predictor, or Bernoulli draws from the logistic probability.
pub fn gen_responses(
    model: ModelKind,
    design: &DenseMatrix,
    theta_star: &DenseVector,
    noise_var: f64,
    rng: &mut Xoshiro256PlusPlus,
) -> Result<DenseVector> {
    if design.cols() != theta_star.len() {
        return Err(Error::Parameter(format!(
            "design has {} columns but theta_star has length {}",
            design.cols(),
            theta_star.len()
        )));
    }
    let scores = design.matvec(theta_star);
    let data = match model {
        ModelKind::Linear | ModelKind::Matrix => {
            let sd = noise_var.sqrt();
            scores
                .iter()
                .map(|s| s + sd * rng.next_normal())
                .collect::<Vec<f64>>()
        }
        ModelKind::Logistic => scores
            .iter()
            .map(|s| {
                if rng.next_f64() < objective::sigmoid(*s) {
                    1.0
                } else {
                    0.0
                }
            })
            .collect(),
    };
    Ok(DenseVector::new(data))
}

/// Low-rank matrix instance: `theta_star = A B'` with standard normal
/// factors (rank `s_star` almost surely), i.i.d. standard normal sensors,
/// responses `y_i = <X_i, Theta*> + eps_i`.
pub fn gen_matrix_instance(
    d: usize,
    s_star: usize,
    n: usize,
    noise_var: f64,
    design_rng: &mut Xoshiro256PlusPlus,
    value_rng: &mut Xoshiro256PlusPlus,
    noise_rng: &mut Xoshiro256PlusPlus,
) -> Result<(ProblemInstance, GroundTruth)> {
    if s_star > d {
        return Err(Error::Parameter(format!(
            "s_star {s_star} exceeds side length {d}"
        )));
    }
    let design = {
        let data = (0..n * d * d).map(|_| design_rng.next_normal()).collect();
        DenseMatrix::from_row_major(n, d * d, data)?
    };
    let a: Vec<f64> = (0..d * s_star).map(|_| value_rng.next_normal()).collect();
    let b: Vec<f64> = (0..d * s_star).map(|_| value_rng.next_normal()).collect();
    let mut theta = DenseVector::zeros(d * d);
    for r in 0..d {
        for c in 0..d {
            let mut acc = 0.0;
            for k in 0..s_star {
                acc += a[r * s_star + k] * b[c * s_star + k];
            }
            theta[r * d + c] = acc;
        }
    }
    let responses = gen_responses(ModelKind::Matrix, &design, &theta, noise_var, noise_rng)?;
    let instance = ProblemInstance::new(ModelKind::Matrix, design, responses)?;
    let f_star = objective::value(&instance, &theta)?;
    let support_star = support(&theta);
    Ok((
        instance,
        GroundTruth {
            theta_star: theta,
            support_star,
            f_star,
        },
    ))
}

/// Generates the full instance described by `spec`, wiring the substreams.
/// `budget` is the solver's sparsity budget, consumed by alpha sizing.
pub fn generate(spec: &GenSpec, budget: usize) -> Result<(ProblemInstance, GroundTruth)> {
    spec.validate()?;
    let n = spec.sample_count(budget)?;
    let mut design_rng = substream(spec.seed, stream_tag::DESIGN);
    let mut support_rng = substream(spec.seed, stream_tag::SUPPORT);
    let mut value_rng = substream(spec.seed, stream_tag::VALUES);
    let mut noise_rng = substream(spec.seed, stream_tag::NOISE);

    match spec.model {
        ModelKind::Matrix => gen_matrix_instance(
            spec.dim,
            spec.s_star,
            n,
            spec.noise_var,
            &mut design_rng,
            &mut value_rng,
            &mut noise_rng,
        ),
        ModelKind::Linear | ModelKind::Logistic => {
            let design = gen_ar1_design(spec.dim, n, spec.omega, &mut design_rng)?;
            let theta_star =
                gen_theta_star(spec.dim, spec.s_star, &mut support_rng, &mut value_rng)?;
            let responses = gen_responses(
                spec.model,
                &design,
                &theta_star,
                spec.noise_var,
                &mut noise_rng,
            )?;
            let instance = ProblemInstance::new(spec.model, design, responses)?;
            let f_star = objective::value(&instance, &theta_star)?;
            let support_star = support(&theta_star);
            Ok((
                instance,
                GroundTruth {
                    theta_star,
                    support_star,
                    f_star,
                },
            ))
        }
    }
}
