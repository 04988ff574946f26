//! Core library for `darkwatch`, a desk-scale threat-intelligence pipeline.
//!
//! Pages are collected from seeded sources ([`collection`]), persisted in a
//! content-addressed store ([`store`]), filtered and scored for threat
//! relevance with TF-IDF features and logistic regression ([`textfeat`],
//! [`score`]), clustered ([`cluster`]), summarized per forum ([`forum`]) and
//! correlated with device exposure from an internet-device search service
//! ([`device`], [`correlate`]). The analyst triage loop lives in [`triage`].

pub mod clock;
pub mod cluster;
pub mod collection;
pub mod correlate;
pub mod device;
pub mod fixtures;
pub mod forum;
pub mod score;
pub mod store;
pub mod textfeat;
pub mod triage;

mod csvfmt;

pub use clock::{Clock, SystemClock, VirtualClock};
pub use cluster::{ClusterModel, ClusterReport};
pub use collection::{normalize_url, CrawlConfig, Fetcher, SearchHit, SearchProvider};
pub use correlate::{ClassMentions, RiskReport};
pub use device::{DeviceRecord, ExposureSummary, ScanResult, Transport};
pub use forum::{ForumStats, Post};
pub use score::{Hyperparams, ThreatModel};
pub use store::{Category, DocId, Document, Label, LabelEvent, RawDocument, Source, Store};
pub use textfeat::{KeywordLexicon, TermVector, VocabHash, Vocabulary};
pub use triage::{Triage, TriageItem};
