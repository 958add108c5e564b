use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{AblationParam, RunResult};
use crate::error::{Error, Result};
use crate::graph::Dataset;
use crate::kernel::{hidden_adjacency, SwagParams};
use crate::lga::{Augmenter, AugmenterKind};
use crate::tu::write_tu_dataset;

#[derive(Serialize)]
struct FoldRow {
    fold: usize,
    accuracy: f64,
    epochs_to_best: usize,
    seconds: f64,
}

/// One row per fold: `fold,accuracy,epochs_to_best,seconds`.
pub fn write_fold_csv(result: &RunResult, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for f in &result.folds {
        w.serialize(FoldRow {
            fold: f.fold,
            accuracy: f.test_accuracy,
            epochs_to_best: f.best_epoch,
            seconds: f.seconds,
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `result.json` and `folds.csv` into `dir`.
pub fn write_run_reports(result: &RunResult, dir: impl AsRef<Path>) -> Result<(PathBuf, PathBuf)> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let json = dir.join("result.json");
    fs::write(&json, serde_json::to_string_pretty(result)?)?;
    let csv = dir.join("folds.csv");
    write_fold_csv(result, fs::File::create(&csv)?)?;
    Ok((json, csv))
}

#[derive(Serialize)]
struct AblationRow {
    parameter: &'static str,
    value: f64,
    mean: f64,
    std: f64,
}

/// `parameter,value,mean,std`, one row per swept value.
pub fn ablation_csv(param: AblationParam, values: &[f64], results: &[RunResult], out: impl Write) -> Result<()> {
    if values.len() != results.len() {
        return Err(Error::contract("ablation_csv", "one result per value is required"));
    }
    let name = match param {
        AblationParam::Tau => "tau",
        AblationParam::NumHidden => "num_hidden",
    };
    let mut w = csv::Writer::from_writer(out);
    for (&value, r) in values.iter().zip(results) {
        w.serialize(AblationRow {
            parameter: name,
            value,
            mean: r.mean_accuracy,
            std: r.std_accuracy,
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `hidden_<m>.json` (effective adjacency as nested rows) and
/// `hidden_<m>.dot` (edges with weight `>= threshold`) for every hidden graph.
pub fn export_hidden_graphs(params: &SwagParams, threshold: f64, out: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let out = out.as_ref();
    fs::create_dir_all(out)?;
    let mut written = Vec::new();
    for (m, h) in params.hidden_graphs.iter().enumerate() {
        let a = hidden_adjacency(h);
        let rows: Vec<Vec<f64>> = a.rows().into_iter().map(|r| r.to_vec()).collect();
        let json = out.join(format!("hidden_{m}.json"));
        fs::write(&json, serde_json::to_string(&rows)?)?;

        let mut dot = format!("graph hidden_{m} {{\n");
        for i in 0..a.nrows() {
            writeln!(dot, "  {i};").expect("writing to a String");
        }
        for i in 0..a.nrows() {
            for j in i + 1..a.ncols() {
                if a[[i, j]] >= threshold {
                    writeln!(dot, "  {i} -- {j} [weight={:.4}];", a[[i, j]]).expect("writing to a String");
                }
            }
        }
        dot.push_str("}\n");
        let dot_path = out.join(format!("hidden_{m}.dot"));
        fs::write(&dot_path, dot)?;
        written.push(json);
        written.push(dot_path);
    }
    Ok(written)
}

/// Reads a `hidden_<m>.json` file back into a matrix.
pub fn read_hidden_adjacency(path: impl AsRef<Path>) -> Result<Array2<f64>> {
    let path = path.as_ref();
    let rows: Vec<Vec<f64>> = serde_json::from_str(&fs::read_to_string(path)?)?;
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(Error::Load {
            path: path.to_path_buf(),
            reason: "adjacency rows have unequal lengths".into(),
        });
    }
    Ok(Array2::from_shape_fn((n, n), |(i, j)| rows[i][j]))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentManifest {
    pub dataset: String,
    pub augmenter: AugmenterKind,
    pub seed: u64,
    /// Spectral components kept per graph (LGA only).
    pub kept_ranks: Option<Vec<usize>>,
}

/// Draws one augmented view of every graph and writes it as TU files named
/// `name` under `dir`, plus `<name>_manifest.json`.
pub fn augment_dataset(ds: &Dataset, kind: AugmenterKind, seed: u64, dir: impl AsRef<Path>, name: &str) -> Result<AugmentManifest> {
    let dir = dir.as_ref();
    let mut augmenter = Augmenter::new(kind, seed)?;
    let mut graphs = Vec::with_capacity(ds.len());
    let mut kept = Vec::with_capacity(ds.len());
    for (i, g) in ds.graphs.iter().enumerate() {
        graphs.push(augmenter.augment(i, g, 0)?);
        if let Some(est) = augmenter.estimate(i, g)? {
            kept.push(est.kept);
        }
    }
    let out = Dataset {
        name: name.to_string(),
        graphs,
        ..ds.clone()
    };
    write_tu_dataset(&out, dir, name)?;
    let manifest = AugmentManifest {
        dataset: ds.name.clone(),
        augmenter: kind,
        seed,
        kept_ranks: matches!(kind, AugmenterKind::Lga { .. }).then_some(kept),
    };
    fs::write(dir.join(format!("{name}_manifest.json")), serde_json::to_string_pretty(&manifest)?)?;
    Ok(manifest)
}
