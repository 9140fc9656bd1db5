//! Step-size strategies for the hard-thresholded gradient iteration.
//!
//! Every rule implements [`StepRule`] and is registered under a stable name,
//! so configs and the CLI select strategies at runtime:
//!
//! | name                | step size                                              |
//! |---------------------|--------------------------------------------------------|
//! | `fixed`             | a constant `gamma > 0`                                  |
//! | `classical-polyak`  | `max(f - f_target, 0) / (scale * ||g||^2)`              |
//! | `sparse-polyak`     | `max(f - f_target, 0) / (scale * ||HT_s(g)||^2)`        |
//! | `sparse-polyak-2s`  | `max(f - f_target, 0) / (scale * ||HT_2s(g)||^2)`       |
//!
//! The restricted rules replace the full gradient norm of the classical
//! Polyak step with the norm of the hard-thresholded gradient. The full norm
//! can exceed the restricted one by a factor up to `sqrt(d/s)` (with
//! equality when all gradient coordinates have identical magnitude), so the
//! classical step collapses as the ambient dimension grows while the
//! restricted step does not. `scale` defaults to 5 for the restricted rules
//! and to 1 (the textbook rule) for `classical-polyak`; the `-2s` variant
//! widens the thresholding to `2s` for generalized linear models and is only
//! ever selected explicitly. In matrix mode the thresholded norm becomes the
//! energy of the top singular values of the reshaped gradient.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::DenseVector;
use crate::solver::ProjectionOp;

/// Denominators below this are treated as a stall rather than divided by.
pub const STALL_DENOMINATOR: f64 = 1e-300;

/// Everything a rule may consult when proposing a step.
///
/// `restricted_grad_norm_sq` is `||proj_s(gradient)||^2` for the configured
/// budget `s`; the solver computes it once per iteration for its trace.
pub struct StepContext<'a> {
    pub f_value: f64,
    pub f_target: f64,
    pub gradient: &'a DenseVector,
    pub grad_norm_sq: f64,
    pub restricted_grad_norm_sq: f64,
    pub budget: usize,
    pub projector: &'a ProjectionOp,
}

/// Outcome of a step-size computation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepOutcome {
    /// A finite, nonnegative step size.
    Step(f64),
    /// The numerator is positive but the denominator is numerically zero;
    /// the iteration cannot make progress.
    Stall,
}

/// A step-size policy. Implementations are stateless and shareable.
pub trait StepRule: fmt::Debug + Send + Sync {
    /// Registered name of this rule.
    fn name(&self) -> &'static str;

    /// Proposes the step for the current iterate.
    fn step_size(&self, ctx: &StepContext<'_>) -> Result<StepOutcome>;
}

/// Ratio-form Polyak step shared by the adaptive rules.
fn polyak_step(gap: f64, denominator: f64) -> StepOutcome {
    if gap <= 0.0 {
        return StepOutcome::Step(0.0);
    }
    if denominator < STALL_DENOMINATOR {
        return StepOutcome::Stall;
    }
    StepOutcome::Step(gap / denominator)
}

/// Constant step size.
#[derive(Debug, Clone)]
pub struct FixedStep {
    gamma: f64,
}

impl FixedStep {
    pub fn new(gamma: f64) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::Parameter(format!(
                "fixed step size must be positive and finite, got {gamma}"
            )));
        }
        Ok(Self { gamma })
    }
}

impl StepRule for FixedStep {
    fn name(&self) -> &'static str {
        "fixed"
    }

    fn step_size(&self, _ctx: &StepContext<'_>) -> Result<StepOutcome> {
        Ok(StepOutcome::Step(self.gamma))
    }
}

/// Textbook Polyak step with the full gradient norm in the denominator.
#[derive(Debug, Clone)]
pub struct ClassicalPolyak {
    denom_scale: f64,
}

impl ClassicalPolyak {
    pub const DEFAULT_SCALE: f64 = 1.0;

    pub fn new(denom_scale: f64) -> Result<Self> {
        check_scale(denom_scale)?;
        Ok(Self { denom_scale })
    }
}

impl StepRule for ClassicalPolyak {
    fn name(&self) -> &'static str {
        "classical-polyak"
    }

    fn step_size(&self, ctx: &StepContext<'_>) -> Result<StepOutcome> {
        Ok(polyak_step(
            ctx.f_value - ctx.f_target,
            self.denom_scale * ctx.grad_norm_sq,
        ))
    }
}

/// Polyak step with the hard-thresholded gradient norm in the denominator.
///
/// `width_factor` widens the thresholding window to `width_factor * s`
/// (clamped to the ambient dimension); 1 is the standard rule, 2 the GLM
/// variant.
#[derive(Debug, Clone)]
pub struct SparsePolyak {
    denom_scale: f64,
    width_factor: usize,
}

impl SparsePolyak {
    pub const DEFAULT_SCALE: f64 = 5.0;

    pub fn new(denom_scale: f64) -> Result<Self> {
        check_scale(denom_scale)?;
        Ok(Self {
            denom_scale,
            width_factor: 1,
        })
    }

    pub fn with_doubled_width(denom_scale: f64) -> Result<Self> {
        check_scale(denom_scale)?;
        Ok(Self {
            denom_scale,
            width_factor: 2,
        })
    }
}

impl StepRule for SparsePolyak {
    fn name(&self) -> &'static str {
        if self.width_factor == 1 {
            "sparse-polyak"
        } else {
            "sparse-polyak-2s"
        }
    }

    fn step_size(&self, ctx: &StepContext<'_>) -> Result<StepOutcome> {
        let restricted_sq = if self.width_factor == 1 {
            ctx.restricted_grad_norm_sq
        } else {
            let width = (self.width_factor * ctx.budget).min(ctx.gradient.len());
            ctx.projector.restricted_norm_sq(ctx.gradient, width)?
        };
        Ok(polyak_step(
            ctx.f_value - ctx.f_target,
            self.denom_scale * restricted_sq,
        ))
    }
}

fn check_scale(scale: f64) -> Result<()> {
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::Parameter(format!(
            "denominator scale must be positive and finite, got {scale}"
        )));
    }
    Ok(())
}

/// Declarative step-rule selection, as it appears in configs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StepRuleSpec {
    /// Registered rule name.
    pub rule: String,
    /// Step size for `fixed`; rejected elsewhere.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    /// Denominator scale for the Polyak rules; each rule has its default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub denom_scale: Option<f64>,
}

impl StepRuleSpec {
    pub fn named(rule: &str) -> Self {
        Self {
            rule: rule.to_string(),
            gamma: None,
            denom_scale: None,
        }
    }

    pub fn fixed(gamma: f64) -> Self {
        Self {
            rule: "fixed".to_string(),
            gamma: Some(gamma),
            denom_scale: None,
        }
    }
}

type RuleBuilder = fn(&StepRuleSpec) -> Result<Arc<dyn StepRule>>;

/// Name -> builder table; extend here to register a new strategy.
const REGISTRY: &[(&str, RuleBuilder)] = &[
    ("fixed", build_fixed),
    ("classical-polyak", build_classical),
    ("sparse-polyak", build_sparse),
    ("sparse-polyak-2s", build_sparse_2s),
];

fn build_fixed(spec: &StepRuleSpec) -> Result<Arc<dyn StepRule>> {
    let gamma = spec.gamma.ok_or_else(|| {
        Error::Parameter("step rule `fixed` requires a `gamma` value".into())
    })?;
    if spec.denom_scale.is_some() {
        return Err(Error::Parameter(
            "step rule `fixed` does not take `denom_scale`".into(),
        ));
    }
    Ok(Arc::new(FixedStep::new(gamma)?))
}

fn build_classical(spec: &StepRuleSpec) -> Result<Arc<dyn StepRule>> {
    reject_gamma(spec)?;
    let scale = spec.denom_scale.unwrap_or(ClassicalPolyak::DEFAULT_SCALE);
    Ok(Arc::new(ClassicalPolyak::new(scale)?))
}

fn build_sparse(spec: &StepRuleSpec) -> Result<Arc<dyn StepRule>> {
    reject_gamma(spec)?;
    let scale = spec.denom_scale.unwrap_or(SparsePolyak::DEFAULT_SCALE);
    Ok(Arc::new(SparsePolyak::new(scale)?))
}

fn build_sparse_2s(spec: &StepRuleSpec) -> Result<Arc<dyn StepRule>> {
    reject_gamma(spec)?;
    let scale = spec.denom_scale.unwrap_or(SparsePolyak::DEFAULT_SCALE);
    Ok(Arc::new(SparsePolyak::with_doubled_width(scale)?))
}

fn reject_gamma(spec: &StepRuleSpec) -> Result<()> {
    if spec.gamma.is_some() {
        return Err(Error::Parameter(format!(
            "step rule `{}` does not take `gamma`",
            spec.rule
        )));
    }
    Ok(())
}

/// Instantiates the rule named by `spec` from the registry.
pub fn build_step_rule(spec: &StepRuleSpec) -> Result<Arc<dyn StepRule>> {
    for (name, builder) in REGISTRY {
        if *name == spec.rule {
            return builder(spec);
        }
    }
    Err(Error::Parameter(format!(
        "unknown step rule `{}`; registered rules: {}",
        spec.rule,
        registered_rule_names().join(", ")
    )))
}

/// Names of all registered step rules.
pub fn registered_rule_names() -> Vec<&'static str> {
    REGISTRY.iter().map(|(name, _)| *name).collect()
}

/// One-off step computation from raw ingredients, for callers outside the
/// solver loop. The solver itself passes precomputed norms through
/// [`StepContext`]; both paths perform identical arithmetic.
pub fn compute_step(
    rule: &dyn StepRule,
    f_value: f64,
    f_target: f64,
    gradient: &DenseVector,
    budget: usize,
    projector: &ProjectionOp,
) -> Result<StepOutcome> {
    let ctx = StepContext {
        f_value,
        f_target,
        gradient,
        grad_norm_sq: gradient.norm_sq(),
        restricted_grad_norm_sq: projector.restricted_norm_sq(gradient, budget)?,
        budget,
        projector,
    };
    rule.step_size(&ctx)
}
