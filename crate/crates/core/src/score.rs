//! Logistic-regression threat-relevance scorer.
//!
//! Loss is mean binary cross-entropy plus `(l2_lambda / 2)·‖w‖²` (the bias
//! is not regularized), minimized by full-batch gradient descent from zero
//! weights. Sums run in example order, then index order, so training is
//! bit-reproducible.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::store::DocId;
use crate::textfeat::{TermVector, VocabHash, Vocabulary};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScoreError {
    #[error("vector bound to vocabulary {found} but model expects {expected}")]
    VocabMismatch { expected: VocabHash, found: VocabHash },
    #[error("training data needs both relevant and irrelevant examples")]
    DegenerateLabels,
    #[error("empty batch")]
    EmptyBatch,
    #[error("model file: {0}")]
    Format(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub learning_rate: f64,
    pub epochs: u32,
    pub l2_lambda: f64,
    /// Recorded for provenance; zero initialization makes training RNG-free.
    pub seed: u64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            epochs: 1000,
            l2_lambda: 1e-4,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThreatModel {
    pub version: u64,
    pub hyperparams: Hyperparams,
    pub vocab_hash: VocabHash,
    pub bias: f64,
    pub weights: Vec<f64>,
}

/// Keep-suggestion threshold for round-two filtering.
pub const DECISION_THRESHOLD: f64 = 0.5;

/// Logits are clamped to this magnitude so scores stay strictly inside (0, 1).
const LOGIT_CLAMP: f64 = 36.0;

pub fn sigmoid(z: f64) -> f64 {
    let z = z.clamp(-LOGIT_CLAMP, LOGIT_CLAMP);
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossGradient {
    pub loss: f64,
    pub grad_w: Vec<f64>,
    pub grad_b: f64,
}

impl ThreatModel {
    /// All-zero model for `vocab`; version 0 means never trained.
    pub fn zeros(vocab: &Vocabulary, hyperparams: Hyperparams) -> Self {
        Self::zeros_for(vocab.hash(), vocab.len(), hyperparams)
    }

    pub fn zeros_for(vocab_hash: VocabHash, dim: usize, hyperparams: Hyperparams) -> Self {
        Self {
            version: 0,
            hyperparams,
            vocab_hash,
            bias: 0.0,
            weights: vec![0.0; dim],
        }
    }

    fn check(&self, v: &TermVector) -> Result<(), ScoreError> {
        if v.vocab() != self.vocab_hash || v.dim() != self.weights.len() {
            return Err(ScoreError::VocabMismatch {
                expected: self.vocab_hash,
                found: v.vocab(),
            });
        }
        Ok(())
    }

    fn logit(&self, v: &TermVector) -> f64 {
        v.dot_dense(&self.weights) + self.bias
    }

    pub fn predict_score(&self, v: &TermVector) -> Result<f64, ScoreError> {
        self.check(v)?;
        Ok(sigmoid(self.logit(v)))
    }

    pub fn loss_and_gradient(&self, batch: &[(TermVector, bool)]) -> Result<LossGradient, ScoreError> {
        if batch.is_empty() {
            return Err(ScoreError::EmptyBatch);
        }
        for (v, _) in batch {
            self.check(v)?;
        }
        let n = batch.len() as f64;
        let mut loss = 0.0;
        let mut grad_w = vec![0.0; self.weights.len()];
        let mut grad_b = 0.0;
        for (v, label) in batch {
            let y = if *label { 1.0 } else { 0.0 };
            let z = self.logit(v);
            loss += softplus(z) - y * z;
            let residual = sigmoid_unclamped(z) - y;
            grad_b += residual;
            for &(i, x) in v.entries() {
                grad_w[i as usize] += residual * x;
            }
        }
        let lambda = self.hyperparams.l2_lambda;
        let reg: f64 = self.weights.iter().map(|w| w * w).sum::<f64>() * lambda / 2.0;
        for (g, w) in grad_w.iter_mut().zip(&self.weights) {
            *g = *g / n + lambda * w;
        }
        Ok(LossGradient {
            loss: loss / n + reg,
            grad_w,
            grad_b: grad_b / n,
        })
    }

    pub fn save_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn load_json(text: &str) -> Result<Self, ScoreError> {
        let m: ThreatModel =
            serde_json::from_str(text).map_err(|e| ScoreError::Format(e.to_string()))?;
        if !m.bias.is_finite() || m.weights.iter().any(|w| !w.is_finite()) {
            return Err(ScoreError::Format("non-finite weight".into()));
        }
        Ok(m)
    }
}

/// Exact logistic used inside the gradient so it matches the loss it
/// differentiates.
fn sigmoid_unclamped(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub model: ThreatModel,
    /// Loss before each gradient step, then the final loss:
    /// `epochs + 1` values.
    pub loss_history: Vec<f64>,
}

/// Full-batch gradient descent from zero weights.
///
/// The returned model's version is `previous_version + 1`.
pub fn train(
    examples: &[(TermVector, bool)],
    hyperparams: Hyperparams,
    previous_version: u64,
) -> Result<TrainOutcome, ScoreError> {
    let positives = examples.iter().filter(|(_, y)| *y).count();
    if positives == 0 || positives == examples.len() {
        return Err(ScoreError::DegenerateLabels);
    }
    let first = &examples[0].0;
    let mut model = ThreatModel::zeros_for(first.vocab(), first.dim(), hyperparams);
    model.version = previous_version + 1;

    let mut loss_history = Vec::with_capacity(hyperparams.epochs as usize + 1);
    for _ in 0..hyperparams.epochs {
        let step = model.loss_and_gradient(examples)?;
        loss_history.push(step.loss);
        for (w, g) in model.weights.iter_mut().zip(&step.grad_w) {
            *w -= hyperparams.learning_rate * g;
        }
        model.bias -= hyperparams.learning_rate * step.grad_b;
    }
    loss_history.push(model.loss_and_gradient(examples)?.loss);
    Ok(TrainOutcome {
        model,
        loss_history,
    })
}

/// Ids by descending score, ties by ascending id. Non-finite scores sort last.
pub fn rank_by_score(scored: &[(DocId, f64)]) -> Vec<DocId> {
    let mut items: Vec<&(DocId, f64)> = scored.iter().collect();
    items.sort_by(|(ia, a), (ib, b)| {
        let a = if a.is_finite() { *a } else { f64::NEG_INFINITY };
        let b = if b.is_finite() { *b } else { f64::NEG_INFINITY };
        b.total_cmp(&a).then_with(|| ia.cmp(ib))
    });
    items.into_iter().map(|(id, _)| id.clone()).collect()
}

/// Scores each (id, vector) pair with `model` and ranks them.
pub fn rank_documents(docs: &[(DocId, TermVector)], model: &ThreatModel) -> Result<Vec<DocId>, ScoreError> {
    let scored = docs
        .iter()
        .map(|(id, v)| Ok((id.clone(), model.predict_score(v)?)))
        .collect::<Result<Vec<_>, ScoreError>>()?;
    Ok(rank_by_score(&scored))
}
