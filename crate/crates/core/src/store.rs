//! Content-addressed, append-only corpus store.
//!
//! Layout under the store root:
//!
//! ```text
//! docs.jsonl            one document record per line; later records for an id supersede earlier ones
//! labels.jsonl          one label event per line
//! blobs/<first2>/<hash> raw page bytes, addressed by their SHA-256
//! models/v<NNNNNN>.json trained threat models with their vocabulary
//! ```
//!
//! The store is single-writer. Everything is loaded at [`Store::open`], so a
//! reader holds a consistent snapshot of the files as they were at open time.

use std::collections::HashMap;
use std::fmt;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::collection::normalize_url;
use crate::score::ThreatModel;
use crate::textfeat::Vocabulary;

const DOCS_FILE: &str = "docs.jsonl";
const LABELS_FILE: &str = "labels.jsonl";
const BLOBS_DIR: &str = "blobs";
const MODELS_DIR: &str = "models";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("storage i/o on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("url is not in normalized form: {0}")]
    InvalidUrl(String),
    #[error("unknown document {0}")]
    UnknownDoc(DocId),
    #[error("document id {id} does not match the hash of its url and raw bytes")]
    IdMismatch { id: DocId },
    #[error("score {0} outside [0, 1]")]
    ScoreOutOfRange(f64),
    #[error("corrupt record in {file} line {line}: {message}")]
    Corrupt {
        file: &'static str,
        line: usize,
        message: String,
    },
}

pub type Result<T, E = StoreError> = std::result::Result<T, E>;

fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> StoreError {
    let path = path.into();
    move |source| StoreError::Io { path, source }
}

/// Hex SHA-256 of `normalized_url || 0x00 || raw`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DocId(String);

impl DocId {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for DocId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for DocId {
    fn from(s: &str) -> Self {
        DocId(s.to_owned())
    }
}

impl From<String> for DocId {
    fn from(s: String) -> Self {
        DocId(s)
    }
}

pub fn content_id(url: &str, raw: &[u8]) -> DocId {
    let mut hasher = Sha256::new();
    hasher.update(url.as_bytes());
    hasher.update([0u8]);
    hasher.update(raw);
    DocId(hex::encode(hasher.finalize()))
}

fn is_digest(s: &str) -> bool {
    s.len() == 64 && s.bytes().all(|b| b.is_ascii_hexdigit())
}

fn blob_hash(raw: &[u8]) -> String {
    hex::encode(Sha256::digest(raw))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Source {
    SeedCrawl,
    Backlink,
    Metasearch,
    Manual,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Category {
    Market,
    Forum,
    Ideology,
    TerrorSuspect,
    Blog,
    Other,
}

impl Category {
    pub fn as_str(self) -> &'static str {
        match self {
            Category::Market => "market",
            Category::Forum => "forum",
            Category::Ideology => "ideology",
            Category::TerrorSuspect => "terror-suspect",
            Category::Blog => "blog",
            Category::Other => "other",
        }
    }
}

impl std::str::FromStr for Category {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "market" => Category::Market,
            "forum" => Category::Forum,
            "ideology" => Category::Ideology,
            "terror-suspect" => Category::TerrorSuspect,
            "blog" => Category::Blog,
            "other" => Category::Other,
            _ => return Err(format!("unknown category {s:?}")),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Label {
    Relevant,
    Irrelevant,
}

impl Label {
    pub fn is_relevant(self) -> bool {
        self == Label::Relevant
    }
}

impl std::str::FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "relevant" => Ok(Label::Relevant),
            "irrelevant" => Ok(Label::Irrelevant),
            _ => Err(format!("unknown label {s:?}")),
        }
    }
}

/// One collected page.
///
/// `label` is never written to `docs.jsonl`; it is the effective label
/// derived from the label log when the store is loaded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub id: DocId,
    pub url: String,
    pub source: Source,
    pub fetched_at: i64,
    pub raw_ref: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lang: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<Category>,
    #[serde(skip)]
    pub label: Option<Label>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score_model_version: Option<u64>,
}

/// A document together with the raw bytes it was extracted from.
#[derive(Debug, Clone, PartialEq)]
pub struct RawDocument {
    pub document: Document,
    pub raw: Vec<u8>,
}

impl RawDocument {
    /// Builds a document for `url`, which must already be normalized.
    pub fn new(
        url: &str,
        raw: Vec<u8>,
        source: Source,
        fetched_at: i64,
        text: String,
    ) -> Result<Self> {
        ensure_normalized(url)?;
        let document = Document {
            id: content_id(url, &raw),
            url: url.to_owned(),
            source,
            fetched_at,
            raw_ref: blob_hash(&raw),
            text,
            lang: None,
            category: None,
            label: None,
            score: None,
            score_model_version: None,
        };
        Ok(Self { document, raw })
    }
}

fn ensure_normalized(url: &str) -> Result<()> {
    match normalize_url(url) {
        Ok(n) if n == url => Ok(()),
        _ => Err(StoreError::InvalidUrl(url.to_owned())),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelEvent {
    /// Position in the label log; breaks timestamp ties.
    pub seq: u64,
    pub doc_id: DocId,
    pub label: Label,
    pub analyst: String,
    pub at: i64,
}

#[derive(Debug, Serialize, Deserialize)]
struct ModelArtifact {
    model: ThreatModel,
    vocabulary: Vocabulary,
}

#[derive(Debug)]
pub struct Store {
    root: PathBuf,
    docs: Vec<Document>,
    index: HashMap<DocId, usize>,
    events: Vec<LabelEvent>,
}

impl Store {
    /// Opens the store at `root`, creating the layout if it does not exist.
    pub fn open(root: impl AsRef<Path>) -> Result<Self> {
        let root = root.as_ref().to_path_buf();
        fs::create_dir_all(root.join(BLOBS_DIR)).map_err(io_err(&root))?;
        for file in [DOCS_FILE, LABELS_FILE] {
            let path = root.join(file);
            OpenOptions::new()
                .create(true)
                .append(true)
                .open(&path)
                .map_err(io_err(&path))?;
        }

        let mut store = Store {
            root,
            docs: Vec::new(),
            index: HashMap::new(),
            events: Vec::new(),
        };
        for (line, doc) in read_jsonl::<Document>(&store.root.join(DOCS_FILE), DOCS_FILE)? {
            let id = doc.id.as_str();
            if !is_digest(id) || !is_digest(&doc.raw_ref) {
                return Err(StoreError::Corrupt {
                    file: DOCS_FILE,
                    line,
                    message: "malformed id".into(),
                });
            }
            store.upsert_in_memory(doc);
        }
        store.events = read_jsonl::<LabelEvent>(&store.root.join(LABELS_FILE), LABELS_FILE)?
            .into_iter()
            .map(|(_, e)| e)
            .collect();
        let ids: Vec<DocId> = store.events.iter().map(|e| e.doc_id.clone()).collect();
        for id in ids {
            store.refresh_label(&id);
        }
        Ok(store)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    /// Documents in first-insertion order.
    pub fn documents(&self) -> &[Document] {
        &self.docs
    }

    pub fn get(&self, id: &DocId) -> Option<&Document> {
        self.index.get(id).map(|&i| &self.docs[i])
    }

    pub fn contains(&self, id: &DocId) -> bool {
        self.index.contains_key(id)
    }

    pub fn label_events(&self) -> &[LabelEvent] {
        &self.events
    }

    /// Appends a document. Re-putting identical content is a no-op that
    /// returns the existing id.
    pub fn put_document(&mut self, doc: &RawDocument) -> Result<DocId> {
        let d = &doc.document;
        ensure_normalized(&d.url)?;
        if content_id(&d.url, &doc.raw) != d.id || blob_hash(&doc.raw) != d.raw_ref {
            return Err(StoreError::IdMismatch { id: d.id.clone() });
        }
        if let Some(score) = d.score {
            check_score(score)?;
        }
        if self.contains(&d.id) {
            return Ok(d.id.clone());
        }

        self.write_blob(&d.raw_ref, &doc.raw)?;
        let mut record = d.clone();
        record.label = None;
        self.append_record(DOCS_FILE, &record)?;
        let id = record.id.clone();
        self.upsert_in_memory(record);
        self.refresh_label(&id);
        Ok(id)
    }

    pub fn raw_bytes(&self, id: &DocId) -> Result<Vec<u8>> {
        let doc = self
            .get(id)
            .ok_or_else(|| StoreError::UnknownDoc(id.clone()))?;
        let path = self.blob_path(&doc.raw_ref);
        fs::read(&path).map_err(io_err(path))
    }

    pub fn apply_label(
        &mut self,
        doc_id: &DocId,
        label: Label,
        analyst: &str,
        at: i64,
    ) -> Result<LabelEvent> {
        if !self.contains(doc_id) {
            return Err(StoreError::UnknownDoc(doc_id.clone()));
        }
        let event = LabelEvent {
            seq: self.events.len() as u64,
            doc_id: doc_id.clone(),
            label,
            analyst: analyst.to_owned(),
            at,
        };
        self.append_record(LABELS_FILE, &event)?;
        self.events.push(event.clone());
        self.refresh_label(doc_id);
        Ok(event)
    }

    /// Unlabeled documents, highest score first, unscored last, ties by id.
    pub fn list_unlabeled(&self) -> Vec<&Document> {
        let mut out: Vec<&Document> = self.docs.iter().filter(|d| d.label.is_none()).collect();
        out.sort_by(|a, b| {
            let sa = a.score.unwrap_or(f64::NEG_INFINITY);
            let sb = b.score.unwrap_or(f64::NEG_INFINITY);
            sb.total_cmp(&sa).then_with(|| a.id.cmp(&b.id))
        });
        out
    }

    pub fn set_score(&mut self, id: &DocId, score: f64, model_version: u64) -> Result<()> {
        check_score(score)?;
        self.update(id, |d| {
            d.score = Some(score);
            d.score_model_version = Some(model_version);
        })
    }

    pub fn set_category(&mut self, id: &DocId, category: Category) -> Result<()> {
        self.update(id, |d| d.category = Some(category))
    }

    pub fn set_lang(&mut self, id: &DocId, lang: &str) -> Result<()> {
        let lang = lang.to_owned();
        self.update(id, move |d| d.lang = Some(lang))
    }

    pub fn save_model(&self, model: &ThreatModel, vocabulary: &Vocabulary) -> Result<PathBuf> {
        let dir = self.root.join(MODELS_DIR);
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        let path = dir.join(format!("v{:06}.json", model.version));
        let artifact = ModelArtifact {
            model: model.clone(),
            vocabulary: vocabulary.clone(),
        };
        let body = serde_json::to_vec_pretty(&artifact).expect("model serializes");
        write_atomic(&path, &body)?;
        Ok(path)
    }

    fn latest_model_file(&self) -> Result<Option<(u64, PathBuf)>> {
        let dir = self.root.join(MODELS_DIR);
        if !dir.exists() {
            return Ok(None);
        }
        let mut best = None;
        for entry in fs::read_dir(&dir).map_err(io_err(&dir))? {
            let entry = entry.map_err(io_err(&dir))?;
            let Ok(name) = entry.file_name().into_string() else {
                continue;
            };
            let version = name
                .strip_prefix('v')
                .and_then(|n| n.strip_suffix(".json"))
                .and_then(|n| n.parse::<u64>().ok());
            if let Some(v) = version {
                if best.as_ref().is_none_or(|(b, _)| v > *b) {
                    best = Some((v, entry.path()));
                }
            }
        }
        Ok(best)
    }

    /// Version of the newest saved model without loading it.
    pub fn latest_model_version(&self) -> Result<Option<u64>> {
        Ok(self.latest_model_file()?.map(|(v, _)| v))
    }

    /// The highest-versioned saved model, if any.
    pub fn latest_model(&self) -> Result<Option<(ThreatModel, Vocabulary)>> {
        let Some((_, path)) = self.latest_model_file()? else {
            return Ok(None);
        };
        let body = fs::read(&path).map_err(io_err(&path))?;
        let artifact: ModelArtifact =
            serde_json::from_slice(&body).map_err(|e| StoreError::Corrupt {
                file: MODELS_DIR,
                line: e.line(),
                message: e.to_string(),
            })?;
        Ok(Some((artifact.model, artifact.vocabulary)))
    }

    fn update(&mut self, id: &DocId, f: impl FnOnce(&mut Document)) -> Result<()> {
        let idx = *self
            .index
            .get(id)
            .ok_or_else(|| StoreError::UnknownDoc(id.clone()))?;
        let mut record = self.docs[idx].clone();
        f(&mut record);
        record.label = None;
        self.append_record(DOCS_FILE, &record)?;
        let label = self.docs[idx].label;
        self.docs[idx] = Document { label, ..record };
        Ok(())
    }

    fn upsert_in_memory(&mut self, doc: Document) {
        match self.index.get(&doc.id) {
            Some(&i) => self.docs[i] = doc,
            None => {
                self.index.insert(doc.id.clone(), self.docs.len());
                self.docs.push(doc);
            }
        }
    }

    fn refresh_label(&mut self, id: &DocId) {
        let Some(&idx) = self.index.get(id) else {
            return;
        };
        let latest = self
            .events
            .iter()
            .filter(|e| &e.doc_id == id)
            .max_by(|a, b| a.at.cmp(&b.at).then(a.seq.cmp(&b.seq)));
        self.docs[idx].label = latest.map(|e| e.label);
    }

    fn blob_path(&self, hash: &str) -> PathBuf {
        self.root.join(BLOBS_DIR).join(&hash[..2]).join(hash)
    }

    fn write_blob(&self, hash: &str, raw: &[u8]) -> Result<()> {
        let path = self.blob_path(hash);
        if path.exists() {
            return Ok(());
        }
        let dir = path.parent().expect("blob path has a parent");
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        write_atomic(&path, raw)
    }

    fn append_record<T: Serialize>(&self, file: &str, record: &T) -> Result<()> {
        let path = self.root.join(file);
        let mut line = serde_json::to_vec(record).expect("record serializes");
        line.push(b'\n');
        let mut f = OpenOptions::new()
            .append(true)
            .open(&path)
            .map_err(io_err(&path))?;
        f.write_all(&line).map_err(io_err(&path))?;
        f.sync_data().map_err(io_err(&path))
    }
}

fn check_score(score: f64) -> Result<()> {
    if (0.0..=1.0).contains(&score) {
        Ok(())
    } else {
        Err(StoreError::ScoreOutOfRange(score))
    }
}

fn write_atomic(path: &Path, body: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = File::create(&tmp).map_err(io_err(&tmp))?;
        f.write_all(body).map_err(io_err(&tmp))?;
        f.sync_data().map_err(io_err(&tmp))?;
    }
    fs::rename(&tmp, path).map_err(io_err(path))
}

fn read_jsonl<T: for<'de> Deserialize<'de>>(
    path: &Path,
    file: &'static str,
) -> Result<Vec<(usize, T)>> {
    let f = File::open(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|e| StoreError::Corrupt {
            file,
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push((i + 1, record));
    }
    Ok(out)
}
