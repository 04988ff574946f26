//! The analyst review loop: a score-ranked queue of unlabeled documents,
//! label submission and retraining on every label collected so far.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::score::{train, Hyperparams, ScoreError, ThreatModel};
use crate::store::{DocId, Document, Label, Store, StoreError};
use crate::textfeat::{build_vocabulary, tag_text, tfidf_vector, KeywordLexicon, TextError, Vocabulary};

pub const EXCERPT_CHARS: usize = 400;

#[derive(Debug, Error)]
pub enum TriageError {
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Text(#[from] TextError),
    #[error(transparent)]
    Score(#[from] ScoreError),
}

impl TriageError {
    /// Stable machine-readable code for API error bodies.
    pub fn code(&self) -> &'static str {
        match self {
            TriageError::Store(StoreError::UnknownDoc(_)) => "unknown-doc",
            TriageError::Store(_) => "store-error",
            TriageError::Text(TextError::EmptyCorpus) => "empty-corpus",
            TriageError::Text(_) => "text-error",
            TriageError::Score(ScoreError::DegenerateLabels) => "degenerate-labels",
            TriageError::Score(ScoreError::EmptyBatch) => "degenerate-labels",
            TriageError::Score(_) => "score-error",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriageItem {
    pub doc_id: DocId,
    pub url: String,
    pub score: f64,
    pub score_model_version: u64,
    pub excerpt: String,
    pub keyword_tags: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetrainSummary {
    pub model_version: u64,
    pub train_size: usize,
}

/// A trained model plus the scores it assigns, computed without touching
/// the store so that reads can continue while it is built.
#[derive(Debug, Clone)]
pub struct RetrainPlan {
    pub model: ThreatModel,
    pub vocabulary: Vocabulary,
    pub train_size: usize,
    pub scores: Vec<(DocId, f64)>,
    pub loss_history: Vec<f64>,
}

#[derive(Debug)]
pub struct Triage {
    store: Store,
    lexicon: KeywordLexicon,
}

pub fn excerpt(text: &str) -> String {
    text.chars().take(EXCERPT_CHARS).collect()
}

impl Triage {
    pub fn new(store: Store, lexicon: KeywordLexicon) -> Self {
        Self { store, lexicon }
    }

    pub fn store(&self) -> &Store {
        &self.store
    }

    pub fn store_mut(&mut self) -> &mut Store {
        &mut self.store
    }

    pub fn into_store(self) -> Store {
        self.store
    }

    pub fn lexicon(&self) -> &KeywordLexicon {
        &self.lexicon
    }

    pub fn item(&self, doc: &Document) -> Option<TriageItem> {
        Some(TriageItem {
            doc_id: doc.id.clone(),
            url: doc.url.clone(),
            score: doc.score?,
            score_model_version: doc.score_model_version?,
            excerpt: excerpt(&doc.text),
            keyword_tags: tag_text(&doc.text, &self.lexicon),
        })
    }

    /// Scored, unlabeled documents by descending score, at most `limit`.
    pub fn queue(&self, limit: usize) -> Vec<TriageItem> {
        self.store
            .list_unlabeled()
            .into_iter()
            .filter_map(|d| self.item(d))
            .take(limit)
            .collect()
    }

    /// Records `label`. Repeating the current label is acknowledged
    /// without writing a new event.
    pub fn label(&mut self, id: &DocId, label: Label, analyst: &str, at: i64) -> Result<(), TriageError> {
        let doc = self
            .store
            .get(id)
            .ok_or_else(|| StoreError::UnknownDoc(id.clone()))?;
        if doc.label != Some(label) {
            self.store.apply_label(id, label, analyst, at)?;
        }
        Ok(())
    }

    /// Version of the newest saved model, if any.
    pub fn model_version(&self) -> Result<Option<u64>, TriageError> {
        Ok(self.store.latest_model_version()?)
    }

    pub fn plan_retrain(&self, hyperparams: Hyperparams) -> Result<RetrainPlan, TriageError> {
        let docs = self.store.documents();
        let vocabulary = build_vocabulary(docs)?;
        let examples: Vec<_> = docs
            .iter()
            .filter_map(|d| Some((tfidf_vector(d, &vocabulary), d.label?.is_relevant())))
            .collect();
        let outcome = train(&examples, hyperparams, self.model_version()?.unwrap_or(0))?;
        let scores = docs
            .iter()
            .filter(|d| d.label.is_none())
            .map(|d| Ok((d.id.clone(), outcome.model.predict_score(&tfidf_vector(d, &vocabulary))?)))
            .collect::<Result<Vec<_>, ScoreError>>()?;
        Ok(RetrainPlan {
            model: outcome.model,
            vocabulary,
            train_size: examples.len(),
            scores,
            loss_history: outcome.loss_history,
        })
    }

    pub fn apply_retrain(&mut self, plan: &RetrainPlan) -> Result<RetrainSummary, TriageError> {
        self.store.save_model(&plan.model, &plan.vocabulary)?;
        for (id, score) in &plan.scores {
            self.store.set_score(id, *score, plan.model.version)?;
        }
        Ok(RetrainSummary {
            model_version: plan.model.version,
            train_size: plan.train_size,
        })
    }

    /// Trains on every labeled document, saves the model as the next
    /// version and rescores all unlabeled documents.
    pub fn retrain(&mut self, hyperparams: Hyperparams) -> Result<RetrainSummary, TriageError> {
        let plan = self.plan_retrain(hyperparams)?;
        self.apply_retrain(&plan)
    }

    /// Scores unlabeled documents with the latest saved model. Returns the
    /// number scored, or `None` when no model exists.
    pub fn rescore(&mut self) -> Result<Option<usize>, TriageError> {
        let Some((model, vocabulary)) = self.store.latest_model()? else {
            return Ok(None);
        };
        let pending: Vec<(DocId, f64)> = self
            .store
            .documents()
            .iter()
            .filter(|d| d.label.is_none())
            .map(|d| Ok((d.id.clone(), model.predict_score(&tfidf_vector(d, &vocabulary))?)))
            .collect::<Result<_, ScoreError>>()?;
        for (id, score) in &pending {
            self.store.set_score(id, *score, model.version)?;
        }
        Ok(Some(pending.len()))
    }
}
