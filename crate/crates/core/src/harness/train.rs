use std::time::Instant;

use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{FoldResult, Mode, Pretrained, PretrainedFold, RunResult, TrainConfig};
use crate::autograd::{Adam, Tape};
use crate::error::{Error, Result};
use crate::folds::{stratified_folds, FoldSplit};
use crate::graph::{Dataset, Graph};
use crate::kernel::{encode_all, encode_batch, prepare_all, PreparedGraph, SwagParams};
use crate::lga::{Augmenter, AugmenterKind};
use crate::mlp::{argmax_rows, batch_standardize, cross_entropy, ColumnStats, Mlp, HIDDEN_WIDTH};
use crate::rng::{self, tag};
use crate::ssl::{literal_objective, positive_views, ssl_loss};

/// Output width of the self-supervised heads.
const HEAD_OUTPUT: usize = 32;

fn initial_encoder(cfg: &TrainConfig, input_dim: usize, fold: usize) -> Result<SwagParams> {
    SwagParams::init(&cfg.kernel, input_dim, &mut rng::stream(cfg.seed, &[tag::ENCODER, fold as u64]))
}

fn check_finite(loss: f64, what: &str, fold: usize, epoch: usize) -> Result<()> {
    if !loss.is_finite() {
        return Err(Error::Numerical(format!(
            "{what} loss became {loss} in fold {fold}, epoch {}",
            epoch + 1
        )));
    }
    Ok(())
}

/// Splits a shuffled order into batches. A trailing batch smaller than
/// `min_len` is merged into the previous one.
fn batches(order: &[usize], size: usize, min_len: usize) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = order.chunks(size).map(<[usize]>::to_vec).collect();
    if out.len() >= 2 && out.last().is_some_and(|b| b.len() < min_len) {
        let last = out.pop().expect("non-empty");
        out.last_mut().expect("non-empty").extend(last);
    }
    out
}

fn shuffled(idx: &[usize], seed: u64, parts: &[u64]) -> Vec<usize> {
    let mut order = idx.to_vec();
    order.shuffle(&mut rng::stream(seed, parts));
    order
}

fn accuracy(pred: &[usize], labels: &[usize], idx: &[usize]) -> f64 {
    if idx.is_empty() {
        return f64::NAN;
    }
    idx.iter().filter(|&&i| pred[i] == labels[i]).count() as f64 / idx.len() as f64
}

struct Fold<'a> {
    cfg: &'a TrainConfig,
    ds: &'a Dataset,
    prepared: &'a [PreparedGraph],
    split: &'a FoldSplit,
    fold: usize,
}

/// Trains a fresh predictor, and the encoder too when `train_encoder`, with
/// epoch-level model selection on validation accuracy. Encodings are
/// standardized per batch in training and with train-split statistics in evaluation.
fn fit(f: &Fold, encoder: &mut SwagParams, train_encoder: bool) -> Result<FoldResult> {
    let start = Instant::now();
    let cfg = f.cfg;
    let labels = f.ds.labels();
    let all: Vec<&PreparedGraph> = f.prepared.iter().collect();
    let mut predictor = Mlp::init(
        cfg.kernel.output_dim(),
        HIDDEN_WIDTH,
        f.ds.num_classes,
        &mut rng::stream(cfg.seed, &[tag::PREDICTOR, f.fold as u64]),
    );
    let mut adam = Adam::new(cfg.lr);
    let frozen = if train_encoder {
        None
    } else {
        Some(encode_all(encoder, &all, &cfg.kernel)?)
    };

    let mut losses = Vec::with_capacity(cfg.epochs);
    let (mut best_val, mut best_epoch, mut test_at_best) = (f64::NEG_INFINITY, 0, f64::NAN);
    let mut train_accuracy = f64::NAN;
    let mut tape = Tape::new();
    for epoch in 0..cfg.epochs {
        let order = shuffled(&f.split.train_idx, cfg.seed, &[tag::SHUFFLE, f.fold as u64, epoch as u64]);
        let mut total = 0.0;
        for batch in batches(&order, cfg.batch_size, 2) {
            tape.reset();
            let batch_labels: Vec<usize> = batch.iter().map(|&i| labels[i]).collect();
            let enc_vars = train_encoder.then(|| encoder.bind(&mut tape, true));
            let x = match (&enc_vars, &frozen) {
                (Some(ev), _) => {
                    let graphs: Vec<&PreparedGraph> = batch.iter().map(|&i| &f.prepared[i]).collect();
                    encode_batch(&mut tape, ev, &graphs, &cfg.kernel)?
                }
                (None, Some(enc)) => tape.constant(enc.select(Axis(0), &batch)),
                (None, None) => unreachable!("frozen encodings exist when the encoder is not trained"),
            };
            let x = batch_standardize(&mut tape, x);
            let pv = predictor.bind(&mut tape, true);
            let logits = pv.forward(&mut tape, x)?;
            let loss = cross_entropy(&mut tape, logits, &batch_labels)?;
            total += tape.scalar(loss) * batch.len() as f64;
            let grads = tape.backward(loss)?;

            let mut vars = enc_vars.map(|ev| ev.vars()).unwrap_or_default();
            vars.extend(pv.vars());
            let g: Vec<Array2<f64>> = vars.iter().map(|&v| grads.wrt(v)).collect();
            let mut params = if train_encoder { encoder.arrays_mut() } else { Vec::new() };
            params.extend(predictor.arrays_mut());
            adam.step(&mut params, &g)?;
        }
        let epoch_loss = total / f.split.train_idx.len() as f64;
        check_finite(epoch_loss, "training", f.fold, epoch)?;
        losses.push(epoch_loss);

        let encodings = match &frozen {
            Some(enc) => enc.clone(),
            None => encode_all(encoder, &all, &cfg.kernel)?,
        };
        let stats = ColumnStats::of(&encodings.select(Axis(0), &f.split.train_idx));
        let pred = argmax_rows(&predictor.apply(&stats.apply(&encodings))?);
        let val = accuracy(&pred, &labels, &f.split.val_idx);
        if val > best_val {
            best_val = val;
            best_epoch = epoch + 1;
            test_at_best = accuracy(&pred, &labels, &f.split.test_idx);
        }
        train_accuracy = accuracy(&pred, &labels, &f.split.train_idx);
        log::debug!(
            "fold {} epoch {}: loss {epoch_loss:.4} train {train_accuracy:.3} val {val:.3}",
            f.fold,
            epoch + 1
        );
    }
    log::info!(
        "fold {}: test {test_at_best:.4} at epoch {best_epoch} (val {best_val:.4})",
        f.fold
    );
    Ok(FoldResult {
        fold: f.fold,
        test_accuracy: test_at_best,
        val_accuracy: best_val,
        train_accuracy,
        best_epoch,
        seconds: start.elapsed().as_secs_f64(),
        losses,
        pretrain_losses: Vec::new(),
    })
}

fn splits_for(cfg: &TrainConfig, ds: &Dataset) -> Result<Vec<FoldSplit>> {
    cfg.validate()?;
    stratified_folds(ds, cfg.folds, cfg.seed)
}

/// Trains encoder and predictor jointly on every fold.
pub fn train_supervised(cfg: &TrainConfig, ds: &Dataset) -> Result<RunResult> {
    Ok(train_supervised_with_encoders(cfg, ds)?.0)
}

/// As [`train_supervised`], also returning each fold's encoder after the last epoch.
pub fn train_supervised_with_encoders(cfg: &TrainConfig, ds: &Dataset) -> Result<(RunResult, Vec<SwagParams>)> {
    let start = Instant::now();
    let splits = splits_for(cfg, ds)?;
    let prepared = prepare_all(&ds.graphs, &cfg.kernel);
    let mut folds = Vec::with_capacity(splits.len());
    let mut encoders = Vec::with_capacity(splits.len());
    for (fold, split) in splits.iter().enumerate() {
        let mut encoder = initial_encoder(cfg, ds.feature_dim, fold)?;
        let f = Fold {
            cfg,
            ds,
            prepared: &prepared,
            split,
            fold,
        };
        folds.push(fit(&f, &mut encoder, true)?);
        encoders.push(encoder);
    }
    let mut config = cfg.clone();
    config.mode = Mode::Supervised;
    Ok((RunResult::from_folds(config, folds, start.elapsed().as_secs_f64()), encoders))
}

fn pretrain_fold(cfg: &TrainConfig, ds: &Dataset, prepared: &[PreparedGraph], split: &FoldSplit, fold: usize) -> Result<PretrainedFold> {
    let mut encoder = initial_encoder(cfg, ds.feature_dim, fold)?;
    let mut head = Mlp::init(
        cfg.kernel.output_dim(),
        HIDDEN_WIDTH,
        HEAD_OUTPUT,
        &mut rng::stream(cfg.seed, &[tag::HEAD, fold as u64]),
    );
    let mut augmenter = Augmenter::new(cfg.augmenter, rng::derive_seed(cfg.seed, &[tag::AUGMENT, fold as u64]))?;
    let mut adam = Adam::new(cfg.lr);
    let epochs = cfg.pretrain_epochs();
    let mut losses = Vec::with_capacity(epochs);
    let mut literal_losses = Vec::new();
    let mut tape = Tape::new();
    for epoch in 0..epochs {
        let order = shuffled(&split.train_idx, cfg.seed, &[tag::PRETRAIN_SHUFFLE, fold as u64, epoch as u64]);
        let (mut total, mut literal_total) = (0.0, 0.0);
        // Batch statistics and InfoNCE negatives both need two graphs, so a
        // trailing single graph joins the previous batch.
        for batch in batches(&order, cfg.batch_size, 2) {
            let views: Vec<Graph> = positive_views(&ds.graphs, &batch, &mut augmenter, epoch)?;
            let view_prep: Vec<PreparedGraph> = views
                .iter()
                .map(|g| PreparedGraph::new(g, &cfg.kernel.diffusion, cfg.kernel.max_walk))
                .collect();
            let anchors: Vec<&PreparedGraph> = batch.iter().map(|&i| &prepared[i]).collect();
            let positives: Vec<&PreparedGraph> = view_prep.iter().collect();

            tape.reset();
            let ev = encoder.bind(&mut tape, true);
            let hv = head.bind(&mut tape, true);
            let za = encode_batch(&mut tape, &ev, &anchors, &cfg.kernel)?;
            let zp = encode_batch(&mut tape, &ev, &positives, &cfg.kernel)?;
            let za = batch_standardize(&mut tape, za);
            let zp = batch_standardize(&mut tape, zp);
            let loss = ssl_loss(&mut tape, cfg.objective, za, zp, &hv)?;
            total += tape.scalar(loss) * batch.len() as f64;
            if cfg.literal_objective {
                let lit = literal_objective(&mut tape, cfg.objective, za, zp, &hv)?;
                literal_total += tape.scalar(lit) * batch.len() as f64;
            }
            let grads = tape.backward(loss)?;
            let mut vars = ev.vars();
            vars.extend(hv.vars());
            let g: Vec<Array2<f64>> = vars.iter().map(|&v| grads.wrt(v)).collect();
            let mut params = encoder.arrays_mut();
            params.extend(head.arrays_mut());
            adam.step(&mut params, &g)?;
        }
        let n = split.train_idx.len() as f64;
        check_finite(total / n, "pretraining", fold, epoch)?;
        losses.push(total / n);
        if cfg.literal_objective {
            literal_losses.push(literal_total / n);
        }
        log::debug!("fold {fold} pretrain epoch {}: loss {:.4}", epoch + 1, total / n);
    }
    Ok(PretrainedFold {
        fold,
        train_idx: split.train_idx.clone(),
        encoder,
        head,
        losses,
        literal_losses,
    })
}

/// Self-supervised pretraining of one encoder per fold, on that fold's
/// training split. Labels are not used.
pub fn pretrain_ssl(cfg: &TrainConfig, ds: &Dataset) -> Result<Pretrained> {
    let splits = splits_for(cfg, ds)?;
    let prepared = prepare_all(&ds.graphs, &cfg.kernel);
    let mut folds = Vec::with_capacity(splits.len());
    for (fold, split) in splits.iter().enumerate() {
        let p = pretrain_fold(cfg, ds, &prepared, split, fold)?;
        log::info!(
            "fold {fold}: pretraining loss {:.4} -> {:.4}",
            p.losses.first().copied().unwrap_or(f64::NAN),
            p.losses.last().copied().unwrap_or(f64::NAN)
        );
        folds.push(p);
    }
    let mut config = cfg.clone();
    config.mode = Mode::Pretrain;
    Ok(Pretrained { config, folds })
}

/// Probes (frozen encoder) or fine-tunes each fold's pretrained encoder.
pub fn adapt(pretrained: &Pretrained, cfg: &TrainConfig, ds: &Dataset, mode: Mode) -> Result<RunResult> {
    let train_encoder = match mode {
        Mode::Probe => false,
        Mode::Finetune => true,
        other => return Err(Error::Config(format!("adapt needs probe or finetune mode, got {other:?}"))),
    };
    let start = Instant::now();
    let splits = splits_for(cfg, ds)?;
    if pretrained.folds.len() != splits.len() {
        return Err(Error::Config(format!(
            "pretrained weights cover {} folds, run uses {}",
            pretrained.folds.len(),
            splits.len()
        )));
    }
    let prepared = prepare_all(&ds.graphs, &cfg.kernel);
    let mut folds = Vec::with_capacity(splits.len());
    for (fold, (split, p)) in splits.iter().zip(&pretrained.folds).enumerate() {
        if p.train_idx != split.train_idx {
            return Err(Error::Config(format!(
                "fold {fold} of the pretrained weights used a different training split"
            )));
        }
        p.encoder.check(&cfg.kernel, ds.feature_dim)?;
        let mut encoder = p.encoder.clone();
        let f = Fold {
            cfg,
            ds,
            prepared: &prepared,
            split,
            fold,
        };
        let mut result = fit(&f, &mut encoder, train_encoder)?;
        result.pretrain_losses = p.losses.clone();
        folds.push(result);
    }
    let mut config = cfg.clone();
    config.mode = mode;
    Ok(RunResult::from_folds(config, folds, start.elapsed().as_secs_f64()))
}

/// Runs both probe and fine-tune and reports the one with the higher mean
/// validation accuracy (probe on ties).
pub fn adapt_best(pretrained: &Pretrained, cfg: &TrainConfig, ds: &Dataset) -> Result<RunResult> {
    let probe = adapt(pretrained, cfg, ds, Mode::Probe)?;
    let finetune = adapt(pretrained, cfg, ds, Mode::Finetune)?;
    Ok(if finetune.mean_val_accuracy > probe.mean_val_accuracy {
        finetune
    } else {
        probe
    })
}

/// One complete run in `cfg.mode`: supervised training, or pretraining
/// followed by probe or fine-tune.
pub fn run(cfg: &TrainConfig, ds: &Dataset) -> Result<RunResult> {
    match cfg.mode {
        Mode::Supervised => train_supervised(cfg, ds),
        Mode::Probe | Mode::Finetune => {
            let pretrained = pretrain_ssl(cfg, ds)?;
            adapt(&pretrained, cfg, ds, cfg.mode)
        }
        Mode::Pretrain => Err(Error::Config("pretrain mode yields weights, not a run result".into())),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AblationParam {
    Tau,
    NumHidden,
}

impl std::str::FromStr for AblationParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tau" => Ok(AblationParam::Tau),
            "num_hidden" | "num-hidden" | "hidden-graphs" => Ok(AblationParam::NumHidden),
            other => Err(Error::Config(format!("cannot ablate {other:?}; use tau or num_hidden"))),
        }
    }
}

/// One full run per value, all sharing folds and seeds.
pub fn ablate(cfg: &TrainConfig, ds: &Dataset, param: AblationParam, values: &[f64]) -> Result<Vec<RunResult>> {
    let mut out = Vec::with_capacity(values.len());
    for &value in values {
        let mut c = cfg.clone();
        match param {
            AblationParam::Tau => {
                if !matches!(c.mode, Mode::Probe | Mode::Finetune) {
                    return Err(Error::Config("a tau sweep needs probe or finetune mode".into()));
                }
                if !(0.3..=4.2).contains(&value) {
                    log::warn!("tau {value} lies outside the usual range [0.3, 4.2]");
                }
                c.augmenter = AugmenterKind::Lga { tau: value };
            }
            AblationParam::NumHidden => {
                if value < 1.0 || value.fract() != 0.0 {
                    return Err(Error::Config(format!("number of hidden graphs must be a positive integer, got {value}")));
                }
                if !(2.0..=24.0).contains(&value) {
                    log::warn!("{value} hidden graphs lies outside the usual range [2, 24]");
                }
                c.kernel.num_hidden = value as usize;
            }
        }
        out.push(run(&c, ds)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_cfg() -> TrainConfig {
        let mut cfg = TrainConfig {
            dataset: "toy".into(),
            folds: 4,
            epochs: 60,
            batch_size: 4,
            ..TrainConfig::default()
        };
        cfg.kernel.num_hidden = 2;
        cfg.kernel.hidden_nodes = 3;
        cfg.kernel.hidden_dim = 4;
        cfg
    }

    #[test]
    fn batching_keeps_partial_and_merges_singletons() {
        let order: Vec<usize> = (0..7).collect();
        assert_eq!(batches(&order, 3, 1), vec![vec![0, 1, 2], vec![3, 4, 5], vec![6]]);
        assert_eq!(batches(&order, 3, 2), vec![vec![0, 1, 2], vec![3, 4, 5, 6]]);
        assert_eq!(batches(&order[..1], 3, 2), vec![vec![0]]);
    }

    #[test]
    fn toy_supervised_fits_training_data() {
        let r = train_supervised(&toy_cfg(), &Dataset::toy()).unwrap();
        assert_eq!(r.folds.len(), 4);
        assert_eq!(r.min_train_accuracy(), 1.0);
        r.check_consistency().unwrap();
        for f in &r.folds {
            assert_eq!(f.losses.len(), 60);
            assert!((1..=60).contains(&f.best_epoch));
        }
    }

    #[test]
    fn runs_are_deterministic() {
        let cfg = TrainConfig {
            epochs: 5,
            ..toy_cfg()
        };
        let a = train_supervised(&cfg, &Dataset::toy()).unwrap();
        let b = train_supervised(&cfg, &Dataset::toy()).unwrap();
        for (x, y) in a.folds.iter().zip(&b.folds) {
            assert_eq!(x.losses, y.losses);
            assert_eq!(x.test_accuracy, y.test_accuracy);
            assert_eq!(x.best_epoch, y.best_epoch);
        }
    }

    #[test]
    fn probe_leaves_pretrained_weights_alone() {
        let cfg = TrainConfig {
            epochs: 10,
            pretrain_epochs: Some(3),
            augmenter: AugmenterKind::Identity,
            mode: Mode::Probe,
            ..toy_cfg()
        };
        let ds = Dataset::toy();
        let pretrained = pretrain_ssl(&cfg, &ds).unwrap();
        let before = serde_json::to_string(&pretrained).unwrap();
        let r = adapt(&pretrained, &cfg, &ds, Mode::Probe).unwrap();
        assert_eq!(serde_json::to_string(&pretrained).unwrap(), before);
        assert!(r.mean_accuracy >= 0.5);
        assert_eq!(r.folds[0].pretrain_losses.len(), 3);
    }

    #[test]
    fn zero_epoch_pretraining_is_random_initialization() {
        let cfg = TrainConfig {
            epochs: 8,
            pretrain_epochs: Some(0),
            ..toy_cfg()
        };
        let ds = Dataset::toy();
        let pretrained = pretrain_ssl(&cfg, &ds).unwrap();
        let splits = stratified_folds(&ds, cfg.folds, cfg.seed).unwrap();
        for (fold, p) in pretrained.folds.iter().enumerate() {
            assert_eq!(p.encoder, initial_encoder(&cfg, ds.feature_dim, fold).unwrap());
            assert_eq!(p.train_idx, splits[fold].train_idx);
        }
        let a = adapt(&pretrained, &cfg, &ds, Mode::Probe).unwrap();
        let b = adapt(&pretrained, &cfg, &ds, Mode::Probe).unwrap();
        for (x, y) in a.folds.iter().zip(&b.folds) {
            assert_eq!((&x.losses, x.test_accuracy), (&y.losses, y.test_accuracy));
        }
    }

    #[test]
    fn adapt_rejects_bad_inputs() {
        let cfg = TrainConfig {
            pretrain_epochs: Some(0),
            ..toy_cfg()
        };
        let ds = Dataset::toy();
        let pretrained = pretrain_ssl(&cfg, &ds).unwrap();
        assert!(matches!(adapt(&pretrained, &cfg, &ds, Mode::Supervised), Err(Error::Config(_))));
        let other = TrainConfig { seed: 99, ..cfg.clone() };
        assert!(matches!(adapt(&pretrained, &other, &ds, Mode::Probe), Err(Error::Config(_))));
        let mut short = pretrained.clone();
        short.folds.pop();
        assert!(matches!(adapt(&short, &cfg, &ds, Mode::Probe), Err(Error::Config(_))));
    }

    #[test]
    fn identity_infonce_loss_drops_below_log_batch() {
        let graphs = vec![
            Graph::complete(4).with_label(0),
            Graph::path(4).with_label(0),
            Graph::star(4).with_label(1),
            Graph::cycle(4).with_label(1),
        ];
        let ds = Dataset::from_graphs("four", graphs).unwrap();
        let cfg = TrainConfig {
            augmenter: AugmenterKind::Identity,
            pretrain_epochs: Some(50),
            batch_size: 4,
            ..toy_cfg()
        };
        let prepared = prepare_all(&ds.graphs, &cfg.kernel);
        let split = FoldSplit {
            train_idx: vec![0, 1, 2, 3],
            val_idx: vec![],
            test_idx: vec![],
        };
        let p = pretrain_fold(&cfg, &ds, &prepared, &split, 0).unwrap();
        assert!(*p.losses.last().unwrap() < 4f64.ln(), "{:?}", p.losses.last());
    }

    #[test]
    fn lga_on_complete_graphs_matches_identity() {
        let graphs: Vec<Graph> = (0..8).map(|i| Graph::complete(3 + i % 4).with_label(i % 2)).collect();
        let ds = Dataset::from_graphs("complete", graphs).unwrap();
        let base = TrainConfig {
            pretrain_epochs: Some(4),
            ..toy_cfg()
        };
        let lga = pretrain_ssl(&TrainConfig { augmenter: AugmenterKind::Lga { tau: 0.3 }, ..base.clone() }, &ds).unwrap();
        let id = pretrain_ssl(&TrainConfig { augmenter: AugmenterKind::Identity, ..base }, &ds).unwrap();
        for (a, b) in lga.folds.iter().zip(&id.folds) {
            assert_eq!(a.losses, b.losses);
            assert_eq!(a.encoder, b.encoder);
        }
    }

    #[test]
    fn simsiam_losses_stay_in_cosine_range() {
        let cfg = TrainConfig {
            objective: crate::ssl::Objective::SimSiam,
            augmenter: AugmenterKind::EdgeDrop { rate: 0.3 },
            pretrain_epochs: Some(10),
            literal_objective: true,
            ..toy_cfg()
        };
        let p = pretrain_ssl(&cfg, &Dataset::toy()).unwrap();
        for f in &p.folds {
            assert!(f.losses.iter().all(|l| (-1.0..=1.0).contains(l)));
            assert_eq!(f.literal_losses.len(), 10);
        }
    }

    #[test]
    fn ablation_shares_folds_and_validates() {
        let cfg = TrainConfig {
            epochs: 3,
            pretrain_epochs: Some(2),
            mode: Mode::Finetune,
            ..toy_cfg()
        };
        let ds = Dataset::toy();
        let rs = ablate(&cfg, &ds, AblationParam::Tau, &[0.5, 5.0]).unwrap();
        assert_eq!(rs.len(), 2);
        assert_eq!(rs[1].config.augmenter, AugmenterKind::Lga { tau: 5.0 });
        let sup = TrainConfig { mode: Mode::Supervised, ..cfg.clone() };
        assert!(ablate(&sup, &ds, AblationParam::Tau, &[1.0]).is_err());
        assert!(ablate(&sup, &ds, AblationParam::NumHidden, &[2.5]).is_err());
        let rs = ablate(&sup, &ds, AblationParam::NumHidden, &[2.0, 3.0]).unwrap();
        assert_eq!(rs[1].config.kernel.num_hidden, 3);
        assert_eq!("tau".parse::<AblationParam>().unwrap(), AblationParam::Tau);
    }
}
