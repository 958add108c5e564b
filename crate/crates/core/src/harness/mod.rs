//! Cross-validated experiments: supervised training, self-supervised
//! pretraining with probe or fine-tune adaptation, ablation sweeps, and the
//! files they produce.

mod files;
mod train;

pub use files::{
    ablation_csv, augment_dataset, export_hidden_graphs, read_hidden_adjacency, write_fold_csv, write_run_reports,
    AugmentManifest,
};
pub use train::{
    ablate, adapt, adapt_best, pretrain_ssl, run, train_supervised, train_supervised_with_encoders, AblationParam,
};

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Dataset;
use crate::kernel::{KernelConfig, SwagParams};
use crate::lga::AugmenterKind;
use crate::mlp::Mlp;
use crate::ssl::Objective;
use crate::tu::load_tu_dataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Supervised,
    Pretrain,
    Probe,
    Finetune,
}

/// Largest walk length and diffusion depth accepted.
pub const MAX_WALK: usize = 3;
pub const MAX_DIFFUSION_DEPTH: usize = 3;
/// USVT threshold used when none is given.
pub const DEFAULT_TAU: f64 = 0.3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// TU dataset name, or `toy` for the built-in eight-graph set.
    pub dataset: String,
    pub data_dir: PathBuf,
    pub mode: Mode,
    pub kernel: KernelConfig,
    pub lr: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Pretraining epochs; `epochs` when unset.
    pub pretrain_epochs: Option<usize>,
    pub objective: Objective,
    pub augmenter: AugmenterKind,
    pub folds: usize,
    pub seed: u64,
    /// Also record the printed (untransformed) forms of the SSL objectives.
    pub literal_objective: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            dataset: "MUTAG".into(),
            data_dir: PathBuf::from("data"),
            mode: Mode::Supervised,
            kernel: KernelConfig::default(),
            lr: 0.01,
            batch_size: 64,
            epochs: 200,
            pretrain_epochs: None,
            objective: Objective::InfoNce,
            augmenter: AugmenterKind::Lga { tau: DEFAULT_TAU },
            folds: 10,
            seed: 0,
            literal_objective: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.kernel.validate()?;
        self.augmenter.validate()?;
        if self.kernel.max_walk > MAX_WALK {
            return Err(Error::Config(format!(
                "walk length {} exceeds {MAX_WALK}",
                self.kernel.max_walk
            )));
        }
        if self.kernel.diffusion.depth > MAX_DIFFUSION_DEPTH {
            return Err(Error::Config(format!(
                "diffusion depth {} exceeds {MAX_DIFFUSION_DEPTH}",
                self.kernel.diffusion.depth
            )));
        }
        if self.epochs < 1 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::Config(format!("learning rate must be positive, got {}", self.lr)));
        }
        if self.batch_size < 1 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        if self.folds < 2 {
            return Err(Error::Config("need at least 2 folds".into()));
        }
        Ok(())
    }

    pub fn pretrain_epochs(&self) -> usize {
        self.pretrain_epochs.unwrap_or(self.epochs)
    }

    /// Loads the configured dataset; `toy` is built in.
    pub fn load_dataset(&self) -> Result<Dataset> {
        if self.dataset == "toy" {
            return Ok(Dataset::toy());
        }
        load_tu_dataset(self.data_dir.join(&self.dataset), &self.dataset)
    }
}

/// Outcome of one cross-validation fold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    /// Test accuracy at the selected epoch.
    pub test_accuracy: f64,
    /// Best validation accuracy, reached first at `best_epoch`.
    pub val_accuracy: f64,
    /// Accuracy on the training split after the last epoch.
    pub train_accuracy: f64,
    /// 1-based epoch whose checkpoint is reported.
    pub best_epoch: usize,
    pub seconds: f64,
    /// Mean training loss per epoch.
    pub losses: Vec<f64>,
    /// Mean pretraining loss per epoch (empty without pretraining).
    pub pretrain_losses: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub config: TrainConfig,
    pub folds: Vec<FoldResult>,
    pub mean_accuracy: f64,
    /// Population standard deviation of the per-fold test accuracies.
    pub std_accuracy: f64,
    pub mean_val_accuracy: f64,
    pub wall_seconds: f64,
}

/// Mean and population standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

impl RunResult {
    pub fn from_folds(config: TrainConfig, folds: Vec<FoldResult>, wall_seconds: f64) -> Self {
        let acc: Vec<f64> = folds.iter().map(|f| f.test_accuracy).collect();
        let val: Vec<f64> = folds.iter().map(|f| f.val_accuracy).collect();
        let (mean_accuracy, std_accuracy) = mean_std(&acc);
        Self {
            config,
            folds,
            mean_accuracy,
            std_accuracy,
            mean_val_accuracy: mean_std(&val).0,
            wall_seconds,
        }
    }

    /// Recomputes the aggregate fields from the per-fold entries.
    pub fn recomputed(&self) -> (f64, f64) {
        mean_std(&self.folds.iter().map(|f| f.test_accuracy).collect::<Vec<_>>())
    }

    /// Errors if the stored mean or std differs from recomputation by more than `1e-12`.
    pub fn check_consistency(&self) -> Result<()> {
        let (mean, std) = self.recomputed();
        if (mean - self.mean_accuracy).abs() > 1e-12 || (std - self.std_accuracy).abs() > 1e-12 {
            return Err(Error::Numerical(format!(
                "stored mean/std {}/{} but folds give {mean}/{std}",
                self.mean_accuracy, self.std_accuracy
            )));
        }
        Ok(())
    }

    pub fn min_train_accuracy(&self) -> f64 {
        self.folds.iter().map(|f| f.train_accuracy).fold(f64::INFINITY, f64::min)
    }
}

/// Pretrained weights for one fold, trained on that fold's training split only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PretrainedFold {
    pub fold: usize,
    pub train_idx: Vec<usize>,
    pub encoder: SwagParams,
    pub head: Mlp,
    pub losses: Vec<f64>,
    /// Printed objective values per epoch when `literal_objective` is set.
    pub literal_losses: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pretrained {
    pub config: TrainConfig,
    pub folds: Vec<PretrainedFold>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn population_std() {
        let (m, s) = mean_std(&[1.0, 0.5, 0.75, 0.75]);
        assert_eq!(m, 0.75);
        assert!((s - (0.125f64 / 4.0).sqrt()).abs() < 1e-15);
        assert!(mean_std(&[]).0.is_nan());
    }

    #[test]
    fn config_json_round_trip_and_partial_files() {
        let cfg = TrainConfig::default();
        let json = serde_json::to_string(&cfg).unwrap();
        assert_eq!(serde_json::from_str::<TrainConfig>(&json).unwrap(), cfg);
        let partial: TrainConfig = serde_json::from_str(r#"{"epochs": 5, "augmenter": {"kind": "edge-drop", "rate": 0.2}}"#).unwrap();
        assert_eq!(partial.epochs, 5);
        assert_eq!(partial.augmenter, AugmenterKind::EdgeDrop { rate: 0.2 });
        assert_eq!(partial.batch_size, 64);
        assert!(serde_json::from_str::<TrainConfig>(r#"{"epochz": 5}"#).is_err());
    }

    #[test]
    fn config_limits() {
        let mut cfg = TrainConfig::default();
        cfg.validate().unwrap();
        cfg.kernel.max_walk = 4;
        assert!(cfg.validate().is_err());
        let mut cfg = TrainConfig::default();
        cfg.kernel.diffusion.depth = 4;
        assert!(cfg.validate().is_err());
        let cfg = TrainConfig {
            epochs: 0,
            ..TrainConfig::default()
        };
        assert!(cfg.validate().is_err());
    }
}
