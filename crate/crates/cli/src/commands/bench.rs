//! `bench`: run the experiment grid and summarize iterations-to-precision,
//! final accuracy and support recovery per (dimension, label).

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;

use crate::config::{ExperimentConfig, ThresholdConfig};
use crate::csvio::{format_f64, write_csv};
use crate::error::{CliError, Result};
use crate::runner::{execute_run, materialize};

/// Per-(dimension, label, seed) measurements.
#[derive(Debug, Clone)]
struct CellResult {
    dim: usize,
    label: String,
    n: usize,
    s_star: usize,
    budget: usize,
    /// Iterations to the configured precision threshold; censored runs are
    /// infinity.
    iters: f64,
    final_gap: f64,
    final_err_sq: f64,
    final_f1: f64,
}

pub fn run(config: &ExperimentConfig, out_dir: &Path, seed_offset: u64, threads: usize) -> Result<()> {
    let results = run_grid(config, seed_offset, threads)?;
    std::fs::create_dir_all(out_dir)
        .map_err(|e| CliError::io(out_dir.display().to_string(), e))?;
    let path = out_dir.join("summary.csv");
    let rows = summarize(config, &results);
    let header = vec![
        "d",
        "label",
        "n",
        "s_star",
        "budget",
        "seeds",
        "iters_median",
        "iters_iqr",
        "final_gap_median",
        "final_err_sq_median",
        "support_f1_median",
        "rate_ratio",
    ];
    write_csv(&path, &header, &rows)?;
    eprintln!("wrote {} summary rows -> {}", rows.len(), path.display());
    Ok(())
}

fn run_grid(config: &ExperimentConfig, seed_offset: u64, threads: usize) -> Result<Vec<CellResult>> {
    let gen = config.gen.as_ref().ok_or_else(|| {
        CliError::Config("`bench` requires a `gen` section".into())
    })?;
    let dims: Vec<usize> = config.sweep.clone().unwrap_or_else(|| vec![gen.dim]);
    let reference = config.reference_label().to_string();

    let cells: Vec<(usize, u64)> = dims
        .iter()
        .flat_map(|&d| (0..config.repeats as u64).map(move |rep| (d, rep)))
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;

    let nested: Vec<Result<Vec<CellResult>>> = pool.install(|| {
        cells
            .par_iter()
            .map(|&(dim, rep)| run_cell(config, dim, rep, seed_offset, &reference))
            .collect()
    });
    let mut results = Vec::new();
    for r in nested {
        results.extend(r?);
    }
    Ok(results)
}

/// Runs every label on one seeded instance; the reference label runs first
/// and anchors the precision threshold for the whole cell.
fn run_cell(
    config: &ExperimentConfig,
    dim: usize,
    rep: u64,
    seed_offset: u64,
    reference: &str,
) -> Result<Vec<CellResult>> {
    let scaled_gen = config.scaled_gen(dim)?;
    let gen_budget = config.scaled_budget(
        crate::commands::generate::effective_budget(config)?,
        dim,
    );
    let (problem, truth, seed) = materialize(&scaled_gen, gen_budget, seed_offset, rep)?;

    let mut order: Vec<usize> = (0..config.runs.len()).collect();
    order.sort_by_key(|&i| (config.runs[i].label != reference, i));

    let mut err_threshold: Option<f64> = None;
    let mut out = Vec::with_capacity(config.runs.len());
    for idx in order {
        let run_cfg = &config.runs[idx];
        let run_budget = config.scaled_budget(
            run_cfg
                .solver
                .as_ref()
                .map(|s| s.budget)
                .or_else(|| run_cfg.adaptive.as_ref().map(|a| a.budget))
                .unwrap_or(gen_budget),
            dim,
        );
        let (rows, _) = execute_run(
            run_cfg,
            config,
            &problem,
            Some(&truth),
            Some(&scaled_gen),
            seed,
            Some(run_budget),
        )?;
        let min_err = rows
            .iter()
            .filter_map(|r| r.err_sq_to_star)
            .fold(f64::INFINITY, f64::min);
        if run_cfg.label == reference {
            if let ThresholdConfig::LongRunRelative { factor, .. } = &config.threshold {
                err_threshold = Some(factor * min_err);
            }
        }
        let iters = match &config.threshold {
            ThresholdConfig::Fixed { value } => rows
                .iter()
                .find(|r| r.f - truth.f_star <= *value)
                .map(|r| r.t as f64)
                .unwrap_or(f64::INFINITY),
            ThresholdConfig::LongRunRelative { .. } => {
                let threshold = err_threshold.ok_or_else(|| {
                    CliError::Config(format!(
                        "threshold reference `{reference}` produced no error trace"
                    ))
                })?;
                rows.iter()
                    .find(|r| r.err_sq_to_star.map(|e| e <= threshold).unwrap_or(false))
                    .map(|r| r.t as f64)
                    .unwrap_or(f64::INFINITY)
            }
        };
        let last = rows.last().expect("traces are never empty");
        // Re-run final state for support metrics comes from the trace rows.
        out.push(CellResult {
            dim,
            label: run_cfg.label.clone(),
            n: problem.sample_count(),
            s_star: scaled_gen.s_star,
            budget: run_budget,
            iters,
            final_gap: last.f - truth.f_star,
            final_err_sq: last.err_sq_to_star.unwrap_or(f64::NAN),
            final_f1: {
                // Recompute from the final support counts in the last row.
                let tp = last.tp.unwrap_or(0) as f64;
                let fp = last.fp.unwrap_or(0) as f64;
                let fn_ = last.fn_.unwrap_or(0) as f64;
                if 2.0 * tp + fp + fn_ > 0.0 {
                    2.0 * tp / (2.0 * tp + fp + fn_)
                } else {
                    1.0
                }
            },
        });
    }
    Ok(out)
}

fn summarize(config: &ExperimentConfig, results: &[CellResult]) -> Vec<Vec<String>> {
    let mut groups: BTreeMap<(usize, String), Vec<&CellResult>> = BTreeMap::new();
    for r in results {
        groups.entry((r.dim, r.label.clone())).or_default().push(r);
    }
    // Label order follows the config; dimensions ascend.
    let label_rank: BTreeMap<&str, usize> = config
        .runs
        .iter()
        .enumerate()
        .map(|(i, r)| (r.label.as_str(), i))
        .collect();
    let mut keys: Vec<&(usize, String)> = groups.keys().collect();
    keys.sort_by_key(|(d, l)| (*d, label_rank.get(l.as_str()).copied().unwrap_or(usize::MAX)));

    let min_dim = results.iter().map(|r| r.dim).min().unwrap_or(0);
    let mut base_iters: BTreeMap<String, f64> = BTreeMap::new();
    for ((d, label), cells) in &groups {
        if *d == min_dim {
            base_iters.insert(
                label.clone(),
                median(&mut cells.iter().map(|c| c.iters).collect::<Vec<_>>()),
            );
        }
    }

    keys.iter()
        .map(|key| {
            let cells = &groups[*key];
            let (d, label) = key;
            let mut iters: Vec<f64> = cells.iter().map(|c| c.iters).collect();
            let iters_median = median(&mut iters);
            let iqr = interquartile_range(&mut iters);
            let gap_median = median(&mut cells.iter().map(|c| c.final_gap).collect::<Vec<_>>());
            let err_median =
                median(&mut cells.iter().map(|c| c.final_err_sq).collect::<Vec<_>>());
            let f1_median = median(&mut cells.iter().map(|c| c.final_f1).collect::<Vec<_>>());
            let rate_ratio = match base_iters.get(label.as_str()) {
                Some(base) if base.is_finite() && *base > 0.0 => iters_median / base,
                Some(base) if base.is_infinite() && iters_median.is_infinite() => 1.0,
                Some(_) => f64::INFINITY,
                None => f64::NAN,
            };
            let sample = cells[0];
            vec![
                d.to_string(),
                label.clone(),
                sample.n.to_string(),
                sample.s_star.to_string(),
                sample.budget.to_string(),
                cells.len().to_string(),
                format_f64(iters_median),
                format_f64(iqr),
                format_f64(gap_median),
                format_f64(err_median),
                format_f64(f1_median),
                format_f64(rate_ratio),
            ]
        })
        .collect()
}

/// Median with censored (infinite) values sorting last.
fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        midpoint(values[n / 2 - 1], values[n / 2])
    }
}

fn interquartile_range(values: &mut [f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    values.sort_by(|a, b| a.total_cmp(b));
    let q1 = quantile(values, 0.25);
    let q3 = quantile(values, 0.75);
    if q1.is_infinite() && q3.is_infinite() {
        0.0
    } else {
        q3 - q1
    }
}

/// Linear-interpolation quantile on sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    let pos = q * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        let t = pos - lo as f64;
        if t == 0.0 {
            sorted[lo]
        } else if t == 1.0 {
            sorted[hi]
        } else if sorted[lo].is_infinite() || sorted[hi].is_infinite() {
            midpoint(sorted[lo], sorted[hi])
        } else {
            sorted[lo] + t * (sorted[hi] - sorted[lo])
        }
    }
}

fn midpoint(a: f64, b: f64) -> f64 {
    if a.is_infinite() || b.is_infinite() {
        // At least one censored value censors the midpoint.
        f64::INFINITY
    } else {
        0.5 * (a + b)
    }
}
