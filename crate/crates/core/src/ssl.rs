//! Self-supervised objectives over (anchor, positive) encoding pairs.
//!
//! * InfoNCE: similarities `⟨φ(a_i), φ(p_j)⟩`; row `i` is a softmax over all
//!   positives in the batch, the matching one being the target.
//! * Non-contrastive: `-cos(ψ(a_i), sg(ψ(p_i)))`, gradient through the anchor
//!   branch only.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::autograd::{Tape, Var};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::kernel::{encode_all, KernelConfig, PreparedGraph, SwagParams};
use crate::lga::Augmenter;
use crate::mlp::{Mlp, MlpVars};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    #[serde(rename = "infonce")]
    InfoNce,
    #[serde(rename = "simsiam")]
    SimSiam,
}

impl std::str::FromStr for Objective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "infonce" => Ok(Objective::InfoNce),
            "simsiam" => Ok(Objective::SimSiam),
            other => Err(Error::Config(format!("unknown objective {other:?}"))),
        }
    }
}

/// Paired encodings: row `i` of `positives` is the augmented view of row `i` of `anchors`.
#[derive(Debug, Clone, PartialEq)]
pub struct SslBatch {
    pub anchors: Array2<f64>,
    pub positives: Array2<f64>,
}

impl SslBatch {
    pub fn new(anchors: Array2<f64>, positives: Array2<f64>) -> Result<Self> {
        if anchors.dim() != positives.dim() {
            return Err(Error::contract(
                "ssl_batch",
                format!("anchors {:?} and positives {:?} differ", anchors.dim(), positives.dim()),
            ));
        }
        Ok(Self { anchors, positives })
    }

    pub fn len(&self) -> usize {
        self.anchors.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn diagonal_mask(tape: &mut Tape, n: usize, value: f64) -> Var {
    tape.constant(Array2::from_shape_fn((n, n), |(i, j)| if i == j { value } else { 0.0 }))
}

/// InfoNCE given the similarity matrix directly (`scores[i][i]` is the positive).
pub fn infonce_from_scores(tape: &mut Tape, scores: Var) -> Result<Var> {
    let (b, c) = tape.shape(scores);
    if b != c {
        return Err(Error::contract("infonce_loss", format!("score matrix is {b}x{c}")));
    }
    if b < 2 {
        return Err(Error::contract("infonce_loss", "batch of size 1 has no negatives"));
    }
    let logp = tape.log_softmax_rows(scores);
    let mask = diagonal_mask(tape, b, -1.0 / b as f64);
    let picked = tape.mul(logp, mask)?;
    Ok(tape.sum(picked))
}

/// `-mean_i log softmax_i(φ(A) φ(P)ᵀ)_ii`.
pub fn infonce_loss(tape: &mut Tape, anchors: Var, positives: Var, head: &MlpVars) -> Result<Var> {
    check_pair(tape, anchors, positives)?;
    let za = head.forward(tape, anchors)?;
    let zp = head.forward(tape, positives)?;
    let zpt = tape.transpose(zp);
    let scores = tape.matmul(za, zpt)?;
    infonce_from_scores(tape, scores)
}

/// `-mean_i cos(a_i, sg(b_i))`; a zero row contributes a cosine of 0.
pub fn negative_cosine(tape: &mut Tape, a: Var, b: Var) -> Result<Var> {
    check_pair(tape, a, b)?;
    let rows = tape.shape(a).0;
    if rows == 0 {
        return Err(Error::contract("noncontrastive_loss", "empty batch"));
    }
    let na = tape.l2_normalize_rows(a);
    let nb = tape.l2_normalize_rows(b);
    let target = tape.stop_gradient(nb);
    let prod = tape.mul(na, target)?;
    let total = tape.sum(prod);
    Ok(tape.scale(total, -1.0 / rows as f64))
}

/// `-mean_i cos(ψ(a_i), sg(ψ(p_i)))`.
pub fn noncontrastive_loss(tape: &mut Tape, anchors: Var, positives: Var, head: &MlpVars) -> Result<Var> {
    check_pair(tape, anchors, positives)?;
    let pa = head.forward(tape, anchors)?;
    let pp = head.forward(tape, positives)?;
    negative_cosine(tape, pa, pp)
}

/// The printed forms, for comparison only: the mean positive softmax
/// probability for InfoNCE, and the mean raw inner product `⟨ψ(a_i), ψ(p_i)⟩`
/// for the non-contrastive objective. Neither is a sensible quantity to
/// minimize.
pub fn literal_objective(
    tape: &mut Tape,
    objective: Objective,
    anchors: Var,
    positives: Var,
    head: &MlpVars,
) -> Result<Var> {
    check_pair(tape, anchors, positives)?;
    let b = tape.shape(anchors).0;
    let za = head.forward(tape, anchors)?;
    let zp = head.forward(tape, positives)?;
    match objective {
        Objective::InfoNce => {
            if b < 2 {
                return Err(Error::contract("infonce_loss", "batch of size 1 has no negatives"));
            }
            let zpt = tape.transpose(zp);
            let scores = tape.matmul(za, zpt)?;
            let probs = tape.softmax_rows(scores);
            let mask = diagonal_mask(tape, b, 1.0 / b as f64);
            let picked = tape.mul(probs, mask)?;
            Ok(tape.sum(picked))
        }
        Objective::SimSiam => {
            let target = tape.stop_gradient(zp);
            let prod = tape.mul(za, target)?;
            let total = tape.sum(prod);
            Ok(tape.scale(total, 1.0 / b.max(1) as f64))
        }
    }
}

/// Dispatches on the objective.
pub fn ssl_loss(tape: &mut Tape, objective: Objective, anchors: Var, positives: Var, head: &MlpVars) -> Result<Var> {
    match objective {
        Objective::InfoNce => infonce_loss(tape, anchors, positives, head),
        Objective::SimSiam => noncontrastive_loss(tape, anchors, positives, head),
    }
}

fn check_pair(tape: &Tape, a: Var, b: Var) -> Result<()> {
    if tape.shape(a) != tape.shape(b) {
        return Err(Error::contract(
            "ssl_batch",
            format!("anchors {:?} and positives {:?} differ", tape.shape(a), tape.shape(b)),
        ));
    }
    Ok(())
}

/// Evaluates a loss on a plain batch without keeping gradients.
pub fn batch_loss(batch: &SslBatch, objective: Objective, head: &Mlp) -> Result<f64> {
    let mut tape = Tape::new();
    let vars = head.bind(&mut tape, false);
    let a = tape.constant(batch.anchors.clone());
    let p = tape.constant(batch.positives.clone());
    let loss = ssl_loss(&mut tape, objective, a, p, &vars)?;
    Ok(tape.scalar(loss))
}

/// Positive views of `graphs[indices]` for `epoch`. Augmenter cache keys are
/// the dataset indices.
pub fn positive_views(graphs: &[Graph], indices: &[usize], augmenter: &mut Augmenter, epoch: usize) -> Result<Vec<Graph>> {
    indices
        .iter()
        .map(|&i| augmenter.augment(i, &graphs[i], epoch))
        .collect()
}

/// Encodes anchors and fresh positives with the same parameters.
pub fn make_ssl_batch(
    graphs: &[Graph],
    indices: &[usize],
    augmenter: &mut Augmenter,
    params: &SwagParams,
    cfg: &KernelConfig,
    epoch: usize,
) -> Result<SslBatch> {
    let positives = positive_views(graphs, indices, augmenter, epoch)?;
    let prep = |g: &Graph| PreparedGraph::new(g, &cfg.diffusion, cfg.max_walk);
    let anchor_prep: Vec<PreparedGraph> = indices.iter().map(|&i| prep(&graphs[i])).collect();
    let positive_prep: Vec<PreparedGraph> = positives.iter().map(prep).collect();
    let a = encode_all(params, &anchor_prep.iter().collect::<Vec<_>>(), cfg)?;
    let p = encode_all(params, &positive_prep.iter().collect::<Vec<_>>(), cfg)?;
    SslBatch::new(a, p)
}
