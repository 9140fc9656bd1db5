//! Experiment configuration: JSON schema and resolution into runnable
//! solver setups.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use iht_core::datagen::GenSpec;
use iht_core::metrics::theory_bounds;
use iht_core::step::{build_step_rule, StepRuleSpec};
use iht_core::{SolverConfig, StepRule};

use crate::error::{CliError, Result};

/// Top-level experiment description.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    /// Synthetic-instance recipe; exactly one of `gen`/`instance`.
    #[serde(default)]
    pub gen: Option<GenSpec>,
    /// Path to a persisted instance manifest (from `generate` or `ingest`).
    #[serde(default)]
    pub instance: Option<String>,
    /// Budget used for alpha-mode sample sizing at generation time.
    #[serde(default)]
    pub budget: Option<usize>,
    /// Labeled solver runs.
    pub runs: Vec<RunConfig>,
    /// Seeds per cell: instance seeds are `gen.seed + seed_offset + i`.
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    /// Optional dimension sweep for `bench`.
    #[serde(default)]
    pub sweep: Option<Vec<usize>>,
    /// How `s_star` and the run budgets follow the sweep dimension.
    #[serde(default)]
    pub sweep_scaling: SweepScaling,
    /// Threshold for iterations-to-precision summaries in `bench`.
    #[serde(default)]
    pub threshold: ThresholdConfig,
}

fn default_repeats() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SweepScaling {
    /// Scale `s_star` and budgets proportionally with the dimension.
    #[default]
    Proportional,
    /// Keep `s_star` and budgets fixed while the dimension grows.
    Fixed,
}

/// One labeled run: exactly one of `solver`/`adaptive`.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub label: String,
    #[serde(default)]
    pub solver: Option<SolverSection>,
    #[serde(default)]
    pub adaptive: Option<AdaptiveSection>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub budget: usize,
    /// A number, or `"oracle"` for the generated truth's objective value.
    pub f_target: TargetValue,
    pub max_iters: usize,
    #[serde(default)]
    pub tol_f: f64,
    pub step_rule: StepRuleConfig,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct AdaptiveSection {
    pub budget: usize,
    /// Initial lower bound on the attainable objective value.
    #[serde(default)]
    pub f_lower: f64,
    pub inner_iters: usize,
    pub outer_epochs: usize,
}

/// Target objective value: literal or the generated instance's oracle.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize, Serialize)]
#[serde(untagged)]
pub enum TargetValue {
    Literal(f64),
    Keyword(TargetKeyword),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetKeyword {
    Oracle,
}

/// Step-rule selection; `gamma` may be the keyword `"theory"` to use the
/// closed-form fixed step `2 / (3 l_bar)` of the instance's generator.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct StepRuleConfig {
    pub rule: String,
    #[serde(default)]
    pub gamma: Option<GammaValue>,
    #[serde(default)]
    pub denom_scale: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize, Serialize)]
#[serde(untagged)]
pub enum GammaValue {
    Literal(f64),
    Keyword(GammaKeyword),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GammaKeyword {
    Theory,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(tag = "mode", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ThresholdConfig {
    /// Smallest iteration with objective gap at or below `value`.
    Fixed { value: f64 },
    /// Smallest iteration whose squared error is within `factor` of the
    /// reference run's best; the reference is the labeled long run.
    LongRunRelative { factor: f64, reference: String },
}

impl Default for ThresholdConfig {
    fn default() -> Self {
        ThresholdConfig::LongRunRelative {
            factor: 1.05,
            reference: String::new(),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::io(path.display().to_string(), e))?;
        let cfg: ExperimentConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs.is_empty() {
            return Err(CliError::Config("config needs at least one entry in `runs`".into()));
        }
        if self.repeats == 0 {
            return Err(CliError::Config("`repeats` must be at least 1".into()));
        }
        match (&self.gen, &self.instance) {
            (None, None) => {
                return Err(CliError::Config(
                    "config needs `gen` or `instance`".into(),
                ))
            }
            (Some(_), Some(_)) => {
                return Err(CliError::Config(
                    "config takes `gen` or `instance`, not both".into(),
                ))
            }
            _ => {}
        }
        if let Some(gen) = &self.gen {
            gen.validate().map_err(CliError::from)?;
        }
        let mut seen = std::collections::BTreeSet::new();
        for run in &self.runs {
            if run.label.is_empty()
                || run.label.contains(',')
                || run.label.contains('\n')
            {
                return Err(CliError::Config(format!(
                    "run label `{}` must be nonempty and contain no commas or newlines",
                    run.label
                )));
            }
            if !seen.insert(run.label.clone()) {
                return Err(CliError::Config(format!(
                    "duplicate run label `{}`",
                    run.label
                )));
            }
            match (&run.solver, &run.adaptive) {
                (Some(_), None) | (None, Some(_)) => {}
                _ => {
                    return Err(CliError::Config(format!(
                        "run `{}` needs exactly one of `solver`/`adaptive`",
                        run.label
                    )))
                }
            }
        }
        if let Some(sweep) = &self.sweep {
            if sweep.is_empty() {
                return Err(CliError::Config("`sweep` must not be empty".into()));
            }
            if self.gen.is_none() {
                return Err(CliError::Config(
                    "`sweep` requires a `gen` section".into(),
                ));
            }
        }
        if let ThresholdConfig::LongRunRelative { factor, reference } = &self.threshold {
            if !(factor.is_finite() && *factor >= 1.0) {
                return Err(CliError::Config(format!(
                    "threshold `factor` must be at least 1, got {factor}"
                )));
            }
            if !reference.is_empty() && !self.runs.iter().any(|r| &r.label == reference) {
                return Err(CliError::Config(format!(
                    "threshold `reference` names unknown run label `{reference}`"
                )));
            }
        }
        Ok(())
    }

    /// Label of the run that anchors long-run-relative thresholds:
    /// explicit `reference`, else the first run.
    pub fn reference_label(&self) -> &str {
        if let ThresholdConfig::LongRunRelative { reference, .. } = &self.threshold {
            if !reference.is_empty() {
                return reference;
            }
        }
        &self.runs[0].label
    }

    /// The gen spec scaled to sweep dimension `dim`.
    pub fn scaled_gen(&self, dim: usize) -> Result<GenSpec> {
        let base = self
            .gen
            .as_ref()
            .ok_or_else(|| CliError::Config("sweep requires `gen`".into()))?;
        let mut out = base.clone();
        out.dim = dim;
        if self.sweep_scaling == SweepScaling::Proportional {
            out.s_star = scale_count(base.s_star, dim, base.dim);
        }
        Ok(out)
    }

    /// A run budget scaled to sweep dimension `dim`.
    pub fn scaled_budget(&self, budget: usize, dim: usize) -> usize {
        match (&self.gen, self.sweep_scaling) {
            (Some(base), SweepScaling::Proportional) => scale_count(budget, dim, base.dim),
            _ => budget,
        }
    }
}

fn scale_count(value: usize, dim: usize, base_dim: usize) -> usize {
    (((value * dim) as f64 / base_dim as f64).round() as usize).max(1)
}

impl SolverSection {
    /// Resolves keywords against the (possibly scaled) gen spec and oracle
    /// value, producing a runnable solver configuration.
    pub fn resolve(
        &self,
        gen: Option<&GenSpec>,
        f_star: Option<f64>,
        seed: u64,
        budget_override: Option<usize>,
    ) -> Result<SolverConfig> {
        let budget = budget_override.unwrap_or(self.budget);
        let f_target = match self.f_target {
            TargetValue::Literal(v) => v,
            TargetValue::Keyword(TargetKeyword::Oracle) => f_star.ok_or_else(|| {
                CliError::Config(
                    "`f_target: \"oracle\"` requires a generated instance with a ground truth"
                        .into(),
                )
            })?,
        };
        let rule = self.step_rule.resolve(gen, budget)?;
        Ok(SolverConfig {
            budget,
            f_target,
            max_iters: self.max_iters,
            tol_f: self.tol_f,
            seed,
            rule,
        })
    }
}

impl StepRuleConfig {
    pub fn resolve(&self, gen: Option<&GenSpec>, budget: usize) -> Result<Arc<dyn StepRule>> {
        let gamma = match self.gamma {
            None => None,
            Some(GammaValue::Literal(v)) => Some(v),
            Some(GammaValue::Keyword(GammaKeyword::Theory)) => {
                let gen = gen.ok_or_else(|| {
                    CliError::Config(
                        "`gamma: \"theory\"` requires a generated instance".into(),
                    )
                })?;
                Some(theory_bounds(gen, budget).map_err(CliError::from)?.fixed_step)
            }
        };
        let spec = StepRuleSpec {
            rule: self.rule.clone(),
            gamma,
            denom_scale: self.denom_scale,
        };
        build_step_rule(&spec).map_err(CliError::from)
    }
}
