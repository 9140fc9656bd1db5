//! `ingest`: validate external design/response CSVs and persist them as a
//! solvable instance (no ground truth).

use std::path::Path;

use iht_core::linalg::{DenseMatrix, DenseVector};
use iht_core::objective::ModelKind;
use iht_core::ProblemInstance;

use crate::csvio::read_numeric_csv;
use crate::error::{CliError, Result};
use crate::instance::save_instance;

pub fn run(
    design_path: &Path,
    responses_path: &Path,
    model: ModelKind,
    out_dir: &Path,
) -> Result<()> {
    let design_table = read_numeric_csv(design_path)?;
    let responses_table = read_numeric_csv(responses_path)?;
    if responses_table.cols != 1 {
        return Err(CliError::Config(format!(
            "{}: responses must be a single column, found {}",
            responses_path.display(),
            responses_table.cols
        )));
    }
    if responses_table.rows != design_table.rows {
        return Err(CliError::Config(format!(
            "design has {} samples but responses has {}",
            design_table.rows, responses_table.rows
        )));
    }
    if model == ModelKind::Logistic {
        let header_offset = if responses_table.had_header { 2 } else { 1 };
        for (i, y) in responses_table.data.iter().enumerate() {
            if *y != 0.0 && *y != 1.0 {
                return Err(CliError::Config(format!(
                    "{}: logistic response {} at row {} is outside {{0, 1}}",
                    responses_path.display(),
                    y,
                    i + header_offset
                )));
            }
        }
    }

    let design =
        DenseMatrix::from_row_major(design_table.rows, design_table.cols, design_table.data)
            .map_err(CliError::from)?;
    let responses = DenseVector::new(responses_table.data);
    let problem = ProblemInstance::new(model, design, responses).map_err(CliError::from)?;
    let manifest = save_instance(out_dir, &problem, None, None, None)?;
    eprintln!(
        "ingested {} instance: n={}, d={} -> {}",
        model.as_str(),
        problem.sample_count(),
        problem.ambient_dim(),
        manifest.display()
    );
    Ok(())
}
