//! Persisted problem instances: CSV data files plus a JSON manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use iht_core::datagen::{GenSpec, GroundTruth};
use iht_core::linalg::{DenseMatrix, DenseVector, SupportSet};
use iht_core::objective::ModelKind;
use iht_core::ProblemInstance;

use crate::csvio::{format_f64, read_numeric_csv, write_csv};
use crate::error::{CliError, Result};

pub const MANIFEST_FORMAT: &str = "iht-instance/1";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Sidecar metadata for one persisted instance.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub format: String,
    pub model: ModelKind,
    /// Sample count.
    pub n: usize,
    /// Ambient parameter dimension (side squared for matrix regression).
    pub ambient_dim: usize,
    /// Generation recipe, when the instance is synthetic.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gen: Option<GenSpec>,
    /// Budget used for alpha-mode sample sizing.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<usize>,
    /// Objective value at the generated truth.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_star: Option<f64>,
    /// Support of the generated truth.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub support_star: Option<Vec<usize>>,
    pub files: ManifestFiles,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestFiles {
    pub design: String,
    pub responses: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_star: Option<String>,
}

/// An instance ready to solve, with whatever truth is known.
pub struct LoadedInstance {
    pub problem: ProblemInstance,
    pub truth: Option<GroundTruth>,
    pub gen: Option<GenSpec>,
}

/// Writes design/responses (and truth, when present) as headered CSV plus
/// the manifest. Returns the manifest path.
pub fn save_instance(
    dir: &Path,
    problem: &ProblemInstance,
    truth: Option<&GroundTruth>,
    gen: Option<&GenSpec>,
    budget: Option<usize>,
) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir.display().to_string(), e))?;
    let d = problem.ambient_dim();

    let design_header: Vec<String> = (0..d).map(|j| format!("x{j}")).collect();
    let design_header_refs: Vec<&str> = design_header.iter().map(|s| s.as_str()).collect();
    let design_rows: Vec<Vec<String>> = (0..problem.sample_count())
        .map(|r| problem.design().row(r).iter().map(|v| format_f64(*v)).collect())
        .collect();
    write_csv(&dir.join("design.csv"), &design_header_refs, &design_rows)?;

    let response_rows: Vec<Vec<String>> = problem
        .responses()
        .iter()
        .map(|v| vec![format_f64(*v)])
        .collect();
    write_csv(&dir.join("responses.csv"), &["y"], &response_rows)?;

    let mut theta_file = None;
    if let Some(truth) = truth {
        let rows: Vec<Vec<String>> = truth
            .theta_star
            .iter()
            .map(|v| vec![format_f64(*v)])
            .collect();
        write_csv(&dir.join("theta_star.csv"), &["theta"], &rows)?;
        theta_file = Some("theta_star.csv".to_string());
    }

    let manifest = Manifest {
        format: MANIFEST_FORMAT.to_string(),
        model: problem.kind(),
        n: problem.sample_count(),
        ambient_dim: d,
        gen: gen.cloned(),
        budget,
        f_star: truth.map(|t| t.f_star),
        support_star: truth.map(|t| t.support_star.indices().to_vec()),
        files: ManifestFiles {
            design: "design.csv".to_string(),
            responses: "responses.csv".to_string(),
            theta_star: theta_file,
        },
    };
    let manifest_path = dir.join(MANIFEST_FILE);
    let json = serde_json::to_string_pretty(&manifest)
        .map_err(|e| CliError::Config(format!("manifest serialization: {e}")))?;
    fs::write(&manifest_path, json)
        .map_err(|e| CliError::io(manifest_path.display().to_string(), e))?;
    Ok(manifest_path)
}

/// Loads an instance from a manifest path (or a directory containing one).
pub fn load_instance(path: &Path) -> Result<LoadedInstance> {
    let manifest_path = if path.is_dir() {
        path.join(MANIFEST_FILE)
    } else {
        path.to_path_buf()
    };
    let text = fs::read_to_string(&manifest_path)
        .map_err(|e| CliError::io(manifest_path.display().to_string(), e))?;
    let manifest: Manifest = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", manifest_path.display())))?;
    if manifest.format != MANIFEST_FORMAT {
        return Err(CliError::Config(format!(
            "{}: unsupported manifest format `{}`",
            manifest_path.display(),
            manifest.format
        )));
    }
    let base = manifest_path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_default();

    let design_table = read_numeric_csv(&base.join(&manifest.files.design))?;
    let responses_table = read_numeric_csv(&base.join(&manifest.files.responses))?;
    if responses_table.cols != 1 {
        return Err(CliError::Config(format!(
            "responses file has {} columns, expected 1",
            responses_table.cols
        )));
    }
    let design = DenseMatrix::from_row_major(design_table.rows, design_table.cols, design_table.data)
        .map_err(CliError::from)?;
    let responses = DenseVector::new(responses_table.data);
    let problem =
        ProblemInstance::new(manifest.model, design, responses).map_err(CliError::from)?;
    if problem.sample_count() != manifest.n || problem.ambient_dim() != manifest.ambient_dim {
        return Err(CliError::Config(format!(
            "manifest says {}x{}, files contain {}x{}",
            manifest.n,
            manifest.ambient_dim,
            problem.sample_count(),
            problem.ambient_dim()
        )));
    }

    let truth = match (&manifest.files.theta_star, manifest.f_star) {
        (Some(theta_file), Some(f_star)) => {
            let theta_table = read_numeric_csv(&base.join(theta_file))?;
            if theta_table.cols != 1 || theta_table.rows != manifest.ambient_dim {
                return Err(CliError::Config(format!(
                    "theta_star file shape {}x{} does not match ambient dimension {}",
                    theta_table.rows, theta_table.cols, manifest.ambient_dim
                )));
            }
            let theta_star = DenseVector::new(theta_table.data);
            let support_star = match &manifest.support_star {
                Some(indices) => SupportSet::new(indices.clone()).map_err(CliError::from)?,
                None => iht_core::support(&theta_star),
            };
            Some(GroundTruth {
                theta_star,
                support_star,
                f_star,
            })
        }
        _ => None,
    };

    Ok(LoadedInstance {
        problem,
        truth,
        gen: manifest.gen,
    })
}
