//! Batch front-end for the estimators: single fits, synthetic sweeps and
//! sweeps over labelled datasets, written as CSV tables.

pub mod bench;
pub mod config;
pub mod error;
pub mod fit;
pub mod report;

use std::path::{Path, PathBuf};

use magsac_core::io::{labels_path, load_correspondences};
use magsac_core::{PointSet, ProblemDef};

pub use bench::{run_sweep, BenchOutcome, RunRecord, Scene, SceneSource, Variant};
pub use config::BenchConfig;
pub use error::{CliError, Result};
pub use fit::{fit, FitReport};

/// Process exit status of a sweep: 0 when every run executed, 2 otherwise.
pub fn exit_code(outcome: &BenchOutcome) -> i32 {
    if outcome.failures.is_empty() {
        0
    } else {
        2
    }
}

/// Dataset files of a directory, sorted by name. Label sidecars and hidden
/// files are skipped.
pub fn dataset_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
        if path.is_file() && !name.starts_with('.') && !name.ends_with(".labels") {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

/// Loads every dataset of `dir` as a scene named after its file stem. Each
/// must match the problem and carry ground-truth labels.
pub fn dataset_scenes(dir: &Path, problem: &ProblemDef) -> Result<Vec<Scene>> {
    let mut scenes = Vec::new();
    for path in dataset_files(dir)? {
        let points: PointSet = load_correspondences(&path)?;
        problem.check_points(&points)?;
        if points.gt_inlier_mask().is_none() {
            return Err(CliError::Core(magsac_core::Error::InvalidInput(format!(
                "{} has no labels file {}",
                path.display(),
                labels_path(&path).display()
            ))));
        }
        let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("dataset").to_string();
        scenes.push(Scene {
            name,
            source: SceneSource::Dataset(points),
        });
    }
    if scenes.is_empty() {
        return Err(CliError::Core(magsac_core::Error::InvalidInput(format!(
            "no datasets found in {}",
            dir.display()
        ))));
    }
    Ok(scenes)
}
