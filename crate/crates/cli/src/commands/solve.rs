//! `solve`: run every labeled solver on the configured instance(s) and
//! emit one trace CSV.

use std::path::Path;

use rayon::prelude::*;

use crate::commands::write_trace_csv;
use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};
use crate::instance::load_instance;
use crate::runner::{execute_run, materialize, TraceRow};

pub fn run(config: &ExperimentConfig, out_dir: &Path, seed_offset: u64) -> Result<()> {
    let rows = collect_rows(config, seed_offset)?;
    std::fs::create_dir_all(out_dir)
        .map_err(|e| CliError::io(out_dir.display().to_string(), e))?;
    let path = out_dir.join("trace.csv");
    let n_rows = rows.len();
    write_trace_csv(&path, rows)?;
    eprintln!("wrote {} trace rows -> {}", n_rows, path.display());
    Ok(())
}

pub fn collect_rows(config: &ExperimentConfig, seed_offset: u64) -> Result<Vec<TraceRow>> {
    if let Some(path) = &config.instance {
        if config.repeats != 1 {
            return Err(CliError::Config(
                "`repeats` > 1 needs a `gen` section; a file instance is fixed".into(),
            ));
        }
        let loaded = load_instance(Path::new(path))?;
        let seed = loaded.gen.as_ref().map(|g| g.seed).unwrap_or(0);
        let mut rows = Vec::new();
        for run in &config.runs {
            let (mut r, _) = execute_run(
                run,
                config,
                &loaded.problem,
                loaded.truth.as_ref(),
                loaded.gen.as_ref(),
                seed.wrapping_add(seed_offset),
                None,
            )?;
            rows.append(&mut r);
        }
        return Ok(rows);
    }

    let gen = config.gen.as_ref().expect("validated: gen or instance");
    let budget = crate::commands::generate::effective_budget(config)?;
    let cells: Vec<(usize, u64)> = (0..config.repeats as u64)
        .flat_map(|rep| (0..config.runs.len()).map(move |i| (i, rep)))
        .collect();
    let results: Vec<Result<Vec<TraceRow>>> = cells
        .par_iter()
        .map(|&(run_idx, rep)| {
            let (problem, truth, seed) = materialize(gen, budget, seed_offset, rep)?;
            let (rows, _) = execute_run(
                &config.runs[run_idx],
                config,
                &problem,
                Some(&truth),
                Some(gen),
                seed,
                None,
            )?;
            Ok(rows)
        })
        .collect();
    let mut rows = Vec::new();
    for r in results {
        rows.append(&mut r?);
    }
    Ok(rows)
}
