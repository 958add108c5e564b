use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use kgnn::harness::{self, ablation_csv, AblationParam, Mode, Pretrained, RunResult, TrainConfig};
use kgnn::lga::AugmenterKind;
use kgnn::ssl::Objective;
use kgnn::SwagParams;

#[derive(Parser)]
#[command(name = "kgnn", version, about = "Kernel graph neural networks with latent graph augmentation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Supervised cross-validated training.
    Train(Common),
    /// Self-supervised pretraining, one encoder per fold.
    Pretrain(Common),
    /// Train a classifier on frozen pretrained encodings.
    Probe(Adapt),
    /// Fine-tune pretrained encoders together with a classifier.
    Finetune(Adapt),
    /// Sweep the USVT threshold or the number of hidden graphs.
    Ablate(Ablate),
    /// Write one augmented view of every graph in TU format.
    Augment(Common),
    /// Dump hidden-graph adjacencies as JSON and DOT.
    ExportHidden(Export),
    /// Recompute summary statistics of a saved run.
    Report(Report),
}

#[derive(Clone, Copy, ValueEnum)]
enum AugmenterArg {
    Lga,
    EdgeDrop,
    Identity,
}

#[derive(Clone, Copy, ValueEnum)]
enum ObjectiveArg {
    Infonce,
    Simsiam,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON file with TrainConfig fields; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    dataset: Option<String>,
    #[arg(long)]
    data_dir: Option<PathBuf>,
    #[arg(long = "hidden-graphs")]
    hidden_graphs: Option<usize>,
    #[arg(long)]
    hidden_nodes: Option<usize>,
    #[arg(long)]
    hidden_dim: Option<usize>,
    #[arg(long)]
    walk_len: Option<usize>,
    #[arg(long)]
    diff_steps: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    /// Edge removal probability for `--augmenter edge-drop`.
    #[arg(long, default_value_t = 0.2)]
    drop_rate: f64,
    #[arg(long, value_enum)]
    augmenter: Option<AugmenterArg>,
    #[arg(long, value_enum)]
    objective: Option<ObjectiveArg>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    pretrain_epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct Adapt {
    #[command(flatten)]
    common: Common,
    /// Pretrained weights written by `pretrain`.
    #[arg(long)]
    pretrained: Option<PathBuf>,
    /// Run both probe and fine-tune; report the better validation performer.
    #[arg(long)]
    best_of_both: bool,
}

#[derive(Args)]
struct Ablate {
    #[command(flatten)]
    common: Common,
    /// `tau` or `num-hidden`.
    #[arg(long)]
    param: String,
    /// Comma-separated values.
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<f64>,
    /// Run mode for each value; defaults to finetune for tau, supervised otherwise.
    #[arg(long)]
    mode: Option<String>,
}

#[derive(Args)]
struct Export {
    /// A `pretrained.json` or `encoders.json` file, or a bare encoder JSON.
    #[arg(long)]
    params: PathBuf,
    #[arg(long, default_value_t = 0)]
    fold: usize,
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
    #[arg(long, default_value = "hidden")]
    out: PathBuf,
}

#[derive(Args)]
struct Report {
    /// `result.json` written by a run.
    #[arg(long)]
    input: PathBuf,
    /// Also write the per-fold CSV here.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn config(&self, mode: Mode) -> Result<TrainConfig> {
        let mut cfg = match &self.config {
            Some(path) => serde_json::from_str(
                &fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?,
            )
            .with_context(|| format!("parsing {}", path.display()))?,
            None => TrainConfig::default(),
        };
        cfg.mode = mode;
        if let Some(v) = &self.dataset {
            cfg.dataset = v.clone();
        }
        if let Some(v) = &self.data_dir {
            cfg.data_dir = v.clone();
        }
        if let Some(v) = self.hidden_graphs {
            cfg.kernel.num_hidden = v;
        }
        if let Some(v) = self.hidden_nodes {
            cfg.kernel.hidden_nodes = v;
        }
        if let Some(v) = self.hidden_dim {
            cfg.kernel.hidden_dim = v;
        }
        if let Some(v) = self.walk_len {
            cfg.kernel.max_walk = v;
        }
        if let Some(v) = self.diff_steps {
            cfg.kernel.diffusion.depth = v;
        }
        if let Some(v) = self.alpha {
            cfg.kernel.diffusion.alpha = v;
        }
        match self.augmenter {
            Some(AugmenterArg::Identity) => cfg.augmenter = AugmenterKind::Identity,
            Some(AugmenterArg::EdgeDrop) => cfg.augmenter = AugmenterKind::EdgeDrop { rate: self.drop_rate },
            Some(AugmenterArg::Lga) => {
                let tau = match (self.tau, cfg.augmenter) {
                    (Some(t), _) => t,
                    (None, AugmenterKind::Lga { tau }) => tau,
                    (None, _) => harness::DEFAULT_TAU,
                };
                cfg.augmenter = AugmenterKind::Lga { tau };
            }
            None => {
                if let (Some(tau), AugmenterKind::Lga { .. }) = (self.tau, cfg.augmenter) {
                    cfg.augmenter = AugmenterKind::Lga { tau };
                }
            }
        }
        if let Some(v) = self.objective {
            cfg.objective = match v {
                ObjectiveArg::Infonce => Objective::InfoNce,
                ObjectiveArg::Simsiam => Objective::SimSiam,
            };
        }
        if let Some(v) = self.epochs {
            cfg.epochs = v;
        }
        if self.pretrain_epochs.is_some() {
            cfg.pretrain_epochs = self.pretrain_epochs;
        }
        if let Some(v) = self.lr {
            cfg.lr = v;
        }
        if let Some(v) = self.batch_size {
            cfg.batch_size = v;
        }
        if let Some(v) = self.folds {
            cfg.folds = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn summarize(r: &RunResult) {
    println!(
        "{} {:?}: accuracy {:.4} ± {:.4} over {} folds ({:.1}s)",
        r.config.dataset,
        r.config.mode,
        r.mean_accuracy,
        r.std_accuracy,
        r.folds.len(),
        r.wall_seconds
    );
}

fn write_text(path: &Path, text: String) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn load_params(path: &Path, fold: usize) -> Result<SwagParams> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    if let Ok(p) = serde_json::from_str::<Pretrained>(&text) {
        return Ok(p
            .folds
            .into_iter()
            .nth(fold)
            .with_context(|| format!("no fold {fold} in {}", path.display()))?
            .encoder);
    }
    if let Ok(list) = serde_json::from_str::<Vec<SwagParams>>(&text) {
        return list
            .into_iter()
            .nth(fold)
            .with_context(|| format!("no fold {fold} in {}", path.display()));
    }
    serde_json::from_str::<SwagParams>(&text).with_context(|| format!("{} holds no encoder parameters", path.display()))
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::Train(c) => {
            let cfg = c.config(Mode::Supervised)?;
            let ds = cfg.load_dataset()?;
            let (result, encoders) = harness::train_supervised_with_encoders(&cfg, &ds)?;
            harness::write_run_reports(&result, &c.out)?;
            write_text(&c.out.join("encoders.json"), serde_json::to_string(&encoders)?)?;
            summarize(&result);
        }
        Command::Pretrain(c) => {
            let cfg = c.config(Mode::Pretrain)?;
            let ds = cfg.load_dataset()?;
            let pretrained = harness::pretrain_ssl(&cfg, &ds)?;
            let path = c.out.join("pretrained.json");
            write_text(&path, serde_json::to_string(&pretrained)?)?;
            println!("wrote {}", path.display());
        }
        Command::Probe(a) => adapt(a, Mode::Probe)?,
        Command::Finetune(a) => adapt(a, Mode::Finetune)?,
        Command::Ablate(a) => {
            let param: AblationParam = a.param.parse()?;
            let mode = match a.mode.as_deref() {
                None if param == AblationParam::Tau => Mode::Finetune,
                None | Some("supervised") => Mode::Supervised,
                Some("probe") => Mode::Probe,
                Some("finetune") => Mode::Finetune,
                Some(other) => bail!("unknown ablation mode {other:?}"),
            };
            let cfg = a.common.config(mode)?;
            let ds = cfg.load_dataset()?;
            let results = harness::ablate(&cfg, &ds, param, &a.values)?;
            fs::create_dir_all(&a.common.out)?;
            for (v, r) in a.values.iter().zip(&results) {
                harness::write_run_reports(r, a.common.out.join(format!("value_{v}")))?;
                summarize(r);
            }
            let path = a.common.out.join("ablation.csv");
            ablation_csv(param, &a.values, &results, fs::File::create(&path)?)?;
            println!("wrote {}", path.display());
        }
        Command::Augment(c) => {
            let cfg = c.config(Mode::Pretrain)?;
            let ds = cfg.load_dataset()?;
            let manifest = harness::augment_dataset(&ds, cfg.augmenter, cfg.seed, &c.out, &ds.name)?;
            println!("wrote {} graphs to {} ({:?})", ds.len(), c.out.display(), manifest.augmenter);
        }
        Command::ExportHidden(e) => {
            let params = load_params(&e.params, e.fold)?;
            let files = harness::export_hidden_graphs(&params, e.threshold, &e.out)?;
            println!("wrote {} files to {}", files.len(), e.out.display());
        }
        Command::Report(r) => {
            let text = fs::read_to_string(&r.input).with_context(|| format!("reading {}", r.input.display()))?;
            let result: RunResult = serde_json::from_str(&text)?;
            result.check_consistency()?;
            let (mean, std) = result.recomputed();
            println!("fold,accuracy,epochs_to_best,seconds");
            for f in &result.folds {
                println!("{},{},{},{:.3}", f.fold, f.test_accuracy, f.best_epoch, f.seconds);
            }
            println!("mean {mean:.6} std {std:.6}");
            if let Some(out) = r.out {
                if let Some(dir) = out.parent() {
                    fs::create_dir_all(dir)?;
                }
                harness::write_fold_csv(&result, fs::File::create(&out)?)?;
            }
        }
    }
    Ok(())
}

fn adapt(a: Adapt, mode: Mode) -> Result<()> {
    let path = a
        .pretrained
        .context("--pretrained is required: run `kgnn pretrain` first and pass its pretrained.json")?;
    let pretrained: Pretrained = serde_json::from_str(
        &fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?,
    )
    .with_context(|| format!("parsing {}", path.display()))?;
    let cfg = a.common.config(mode)?;
    let ds = cfg.load_dataset()?;
    let result = if a.best_of_both {
        harness::adapt_best(&pretrained, &cfg, &ds)?
    } else {
        harness::adapt(&pretrained, &cfg, &ds, mode)?
    };
    harness::write_run_reports(&result, &a.common.out)?;
    summarize(&result);
    Ok(())
}
