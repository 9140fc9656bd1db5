//! `generate`: materialize a synthetic instance and persist it.

use std::path::Path;

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};
use crate::instance::save_instance;
use crate::runner::materialize;

pub fn run(config: &ExperimentConfig, out_dir: &Path, seed_offset: u64) -> Result<()> {
    let gen = config
        .gen
        .as_ref()
        .ok_or_else(|| CliError::Config("`generate` requires a `gen` section".into()))?;
    let budget = effective_budget(config)?;
    let (problem, truth, seed) = materialize(gen, budget, seed_offset, 0)?;
    let mut stamped = gen.clone();
    stamped.seed = seed;
    let manifest = save_instance(out_dir, &problem, Some(&truth), Some(&stamped), Some(budget))?;
    eprintln!(
        "generated {} instance: d={}, n={}, f_star={:.6e} -> {}",
        stamped.model.as_str(),
        problem.ambient_dim(),
        problem.sample_count(),
        truth.f_star,
        manifest.display()
    );
    Ok(())
}

/// Budget used for alpha-mode sample sizing: the explicit `budget` field,
/// or the single budget shared by every run.
pub fn effective_budget(config: &ExperimentConfig) -> Result<usize> {
    if let Some(b) = config.budget {
        return Ok(b);
    }
    let budgets: std::collections::BTreeSet<usize> = config
        .runs
        .iter()
        .filter_map(|r| {
            r.solver
                .as_ref()
                .map(|s| s.budget)
                .or_else(|| r.adaptive.as_ref().map(|a| a.budget))
        })
        .collect();
    match budgets.len() {
        1 => Ok(*budgets.iter().next().unwrap()),
        _ => Err(CliError::Config(
            "field `budget` is required when runs use different budgets".into(),
        )),
    }
}
