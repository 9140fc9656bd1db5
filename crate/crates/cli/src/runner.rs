//! Shared machinery for executing labeled runs and collecting trace rows.

use iht_core::datagen::{generate, GenSpec, GroundTruth};
use iht_core::solver::AdaptiveConfig;
use iht_core::{run_adaptive, run_iht, DenseVector, ProblemInstance, RunTrace};

use crate::config::{ExperimentConfig, RunConfig};
use crate::error::{CliError, Result};

/// One trace row, ready for CSV emission.
#[derive(Debug, Clone)]
pub struct TraceRow {
    pub label: String,
    pub seed: u64,
    pub t: usize,
    pub f: f64,
    pub gamma: f64,
    pub grad_ht_norm_sq: f64,
    pub err_sq_to_star: Option<f64>,
    pub support_size: usize,
    pub tp: Option<usize>,
    pub fp: Option<usize>,
    pub fn_: Option<usize>,
}

/// Builds the synthetic instance for one cell. The effective seed is
/// `gen.seed + seed_offset + repeat`.
pub fn materialize(
    gen: &GenSpec,
    budget: usize,
    seed_offset: u64,
    repeat: u64,
) -> Result<(ProblemInstance, GroundTruth, u64)> {
    let mut spec = gen.clone();
    let seed = gen
        .seed
        .wrapping_add(seed_offset)
        .wrapping_add(repeat);
    spec.seed = seed;
    let (problem, truth) = generate(&spec, budget).map_err(CliError::from)?;
    Ok((problem, truth, seed))
}

/// Executes one labeled run and returns its rows plus the trace(s).
///
/// Adaptive runs are flattened: `t` keeps counting across epochs so a
/// trace stays a single series per label.
pub fn execute_run(
    run: &RunConfig,
    config: &ExperimentConfig,
    problem: &ProblemInstance,
    truth: Option<&GroundTruth>,
    gen: Option<&GenSpec>,
    seed: u64,
    budget_override: Option<usize>,
) -> Result<(Vec<TraceRow>, Vec<RunTrace>)> {
    let theta0 = DenseVector::zeros(problem.ambient_dim());
    let theta_ref = truth.map(|t| &t.theta_star);
    let traces: Vec<RunTrace> = if let Some(solver) = &run.solver {
        let cfg = solver.resolve(gen, truth.map(|t| t.f_star), seed, budget_override)?;
        vec![run_iht(problem, &theta0, &cfg, theta_ref).map_err(CliError::from)?]
    } else if let Some(adaptive) = &run.adaptive {
        let cfg = AdaptiveConfig {
            f_lower: adaptive.f_lower,
            inner_iters: adaptive.inner_iters,
            outer_epochs: adaptive.outer_epochs,
            budget: budget_override.unwrap_or(adaptive.budget),
            seed,
        };
        let result = run_adaptive(problem, &theta0, &cfg, theta_ref).map_err(CliError::from)?;
        result.epochs.into_iter().map(|e| e.trace).collect()
    } else {
        return Err(CliError::Config(format!(
            "run `{}` has no solver section",
            run.label
        )));
    };
    let _ = config;

    let mut rows = Vec::new();
    let mut t_global = 0usize;
    for trace in &traces {
        for record in &trace.records {
            let (tp, fp, fn_) = match truth {
                Some(truth) => {
                    let tp = record.support.intersection_size(&truth.support_star);
                    (
                        Some(tp),
                        Some(record.support.len() - tp),
                        Some(truth.support_star.len() - tp),
                    )
                }
                None => (None, None, None),
            };
            rows.push(TraceRow {
                label: run.label.clone(),
                seed,
                t: t_global,
                f: record.f_value,
                gamma: record.gamma,
                grad_ht_norm_sq: record.restricted_grad_norm_sq,
                err_sq_to_star: record.error_sq,
                support_size: record.support.len(),
                tp,
                fp,
                fn_,
            });
            t_global += 1;
        }
    }
    Ok((rows, traces))
}
