//! Tokenization, keyword tagging and TF-IDF features.
//!
//! Weights use smoothed inverse document frequency,
//! `idf(t) = ln((1 + n_docs) / (1 + df(t))) + 1`, so no vocabulary term ever
//! gets a zero or negative weight. Vectors are L2-normalized.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

use crate::store::Document;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TextError {
    #[error("cannot build a vocabulary from an empty corpus")]
    EmptyCorpus,
    #[error("lexicon class {0:?} has an empty phrase")]
    EmptyPhrase(String),
    #[error("lexicon has an unnamed class")]
    EmptyClassName,
    #[error("lexicon parse error: {0}")]
    Parse(String),
}

/// NFC-normalized, lowercased text.
pub fn fold(text: &str) -> String {
    text.nfc().flat_map(char::to_lowercase).collect()
}

/// Lowercase alphanumeric runs of at least two characters.
pub fn tokenize(text: &str) -> Vec<String> {
    fold(text)
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| t.chars().count() >= 2)
        .map(str::to_owned)
        .collect()
}

/// Digest identifying a vocabulary; models and vectors carry it so they are
/// never mixed across vocabularies.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct VocabHash(pub [u8; 32]);

impl fmt::Debug for VocabHash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "VocabHash({})", &hex::encode(self.0)[..12])
    }
}

impl fmt::Display for VocabHash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&hex::encode(self.0))
    }
}

impl Serialize for VocabHash {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(self.0))
    }
}

impl<'de> Deserialize<'de> for VocabHash {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        let bytes = hex::decode(&s).map_err(serde::de::Error::custom)?;
        let arr: [u8; 32] = bytes
            .try_into()
            .map_err(|_| serde::de::Error::custom("vocabulary hash must be 32 bytes"))?;
        Ok(VocabHash(arr))
    }
}

/// Term index with document frequencies. Terms are ordered by descending
/// df, then lexicographically; indices are dense.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "VocabularyFile", into = "VocabularyFile")]
pub struct Vocabulary {
    terms: Vec<String>,
    df: Vec<u32>,
    n_docs: usize,
    index: HashMap<String, usize>,
    hash: VocabHash,
}

#[derive(Serialize, Deserialize)]
struct VocabularyFile {
    n_docs: usize,
    terms: Vec<String>,
    df: Vec<u32>,
}

impl TryFrom<VocabularyFile> for Vocabulary {
    type Error = String;

    fn try_from(f: VocabularyFile) -> Result<Self, Self::Error> {
        if f.terms.len() != f.df.len() {
            return Err("terms and df differ in length".into());
        }
        if f.df.iter().any(|&d| d == 0 || d as usize > f.n_docs) {
            return Err("document frequency outside [1, n_docs]".into());
        }
        Ok(Vocabulary::from_parts(f.terms, f.df, f.n_docs))
    }
}

impl From<Vocabulary> for VocabularyFile {
    fn from(v: Vocabulary) -> Self {
        VocabularyFile {
            n_docs: v.n_docs,
            terms: v.terms,
            df: v.df,
        }
    }
}

impl Vocabulary {
    pub fn build<'a>(texts: impl IntoIterator<Item = &'a str>) -> Result<Self, TextError> {
        let mut df: HashMap<String, u32> = HashMap::new();
        let mut n_docs = 0usize;
        for text in texts {
            n_docs += 1;
            let unique: HashSet<String> = tokenize(text).into_iter().collect();
            for t in unique {
                *df.entry(t).or_default() += 1;
            }
        }
        if n_docs == 0 {
            return Err(TextError::EmptyCorpus);
        }
        let mut entries: Vec<(String, u32)> = df.into_iter().collect();
        entries.sort_by(|(ta, da), (tb, db)| db.cmp(da).then_with(|| ta.cmp(tb)));
        let (terms, df) = entries.into_iter().unzip();
        Ok(Self::from_parts(terms, df, n_docs))
    }

    fn from_parts(terms: Vec<String>, df: Vec<u32>, n_docs: usize) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(format!("{n_docs}\n"));
        for (t, d) in terms.iter().zip(&df) {
            hasher.update(format!("{t}\t{d}\n"));
        }
        let hash = VocabHash(hasher.finalize().into());
        let index = terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Self {
            terms,
            df,
            n_docs,
            index,
            hash,
        }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn hash(&self) -> VocabHash {
        self.hash
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn term(&self, index: usize) -> Option<&str> {
        self.terms.get(index).map(String::as_str)
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn df(&self, term: &str) -> Option<u32> {
        self.index_of(term).map(|i| self.df[i])
    }

    pub fn idf_at(&self, index: usize) -> f64 {
        smoothed_idf(self.n_docs, self.df[index] as usize)
    }
}

pub fn build_vocabulary(corpus: &[Document]) -> Result<Vocabulary, TextError> {
    Vocabulary::build(corpus.iter().map(|d| d.text.as_str()))
}

pub fn smoothed_idf(n_docs: usize, df: usize) -> f64 {
    ((1.0 + n_docs as f64) / (1.0 + df as f64)).ln() + 1.0
}

/// Sparse non-negative vector bound to one vocabulary, unit L2 norm unless
/// empty. Entries are sorted by index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermVector {
    vocab: VocabHash,
    dim: usize,
    entries: Vec<(u32, f64)>,
}

impl TermVector {
    pub fn empty(vocab: VocabHash, dim: usize) -> Self {
        Self {
            vocab,
            dim,
            entries: Vec::new(),
        }
    }

    /// Builds a vector from raw non-negative weights and L2-normalizes it.
    /// Zero, negative, non-finite and out-of-range entries are dropped;
    /// repeated indices are summed.
    pub fn normalized(vocab: VocabHash, dim: usize, weights: impl IntoIterator<Item = (usize, f64)>) -> Self {
        let mut acc: BTreeMap<u32, f64> = BTreeMap::new();
        for (i, w) in weights {
            if i < dim && w.is_finite() && w > 0.0 {
                *acc.entry(i as u32).or_default() += w;
            }
        }
        let mut entries: Vec<(u32, f64)> = acc.into_iter().collect();
        let norm = entries.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
        if norm > 0.0 && norm.is_finite() {
            for (_, w) in &mut entries {
                *w /= norm;
            }
        } else {
            entries.clear();
        }
        Self { vocab, dim, entries }
    }

    pub fn vocab(&self) -> VocabHash {
        self.vocab
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[(u32, f64)] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, index: usize) -> f64 {
        self.entries
            .binary_search_by_key(&(index as u32), |&(i, _)| i)
            .map(|p| self.entries[p].1)
            .unwrap_or(0.0)
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|(_, w)| w * w).sum::<f64>().sqrt()
    }

    /// Dot product with a dense vector of length `dim`, summed in index order.
    pub fn dot_dense(&self, dense: &[f64]) -> f64 {
        self.entries
            .iter()
            .map(|&(i, w)| w * dense[i as usize])
            .sum()
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for &(i, w) in &self.entries {
            out[i as usize] = w;
        }
        out
    }
}

pub fn tfidf_text(text: &str, vocab: &Vocabulary) -> TermVector {
    let tokens = tokenize(text);
    if tokens.is_empty() {
        return TermVector::empty(vocab.hash(), vocab.len());
    }
    let total = tokens.len() as f64;
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for t in &tokens {
        if let Some(i) = vocab.index_of(t) {
            *counts.entry(i).or_default() += 1;
        }
    }
    let weights = counts
        .into_iter()
        .map(|(i, c)| (i, (c as f64 / total) * vocab.idf_at(i)));
    TermVector::normalized(vocab.hash(), vocab.len(), weights)
}

pub fn tfidf_vector(doc: &Document, vocab: &Vocabulary) -> TermVector {
    tfidf_text(&doc.text, vocab)
}

/// Keyword classes and their phrases, e.g. `iot-exploit -> ["botnet", ...]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeywordLexicon {
    classes: BTreeMap<String, Vec<String>>,
}

impl KeywordLexicon {
    /// Phrases are folded to lowercase; empty phrases are rejected.
    pub fn new(classes: BTreeMap<String, Vec<String>>) -> Result<Self, TextError> {
        let mut out = BTreeMap::new();
        for (class, phrases) in classes {
            if class.trim().is_empty() {
                return Err(TextError::EmptyClassName);
            }
            let mut folded = Vec::with_capacity(phrases.len());
            for p in phrases {
                let p = fold(p.trim());
                if p.is_empty() {
                    return Err(TextError::EmptyPhrase(class));
                }
                if !folded.contains(&p) {
                    folded.push(p);
                }
            }
            out.insert(class, folded);
        }
        Ok(Self { classes: out })
    }

    /// Parses a lexicon file:
    ///
    /// ```toml
    /// [classes]
    /// iot-exploit = ["internet of things", "botnet"]
    /// ```
    pub fn from_toml(text: &str) -> Result<Self, TextError> {
        #[derive(Deserialize)]
        struct File {
            classes: BTreeMap<String, Vec<String>>,
        }
        let f: File = toml::from_str(text).map_err(|e| TextError::Parse(e.to_string()))?;
        Self::new(f.classes)
    }

    pub fn bundled() -> Self {
        Self::from_toml(crate::fixtures::LEXICON_TOML).expect("bundled lexicon is valid")
    }

    pub fn classes(&self) -> impl Iterator<Item = &str> {
        self.classes.keys().map(String::as_str)
    }

    pub fn phrases(&self, class: &str) -> Option<&[String]> {
        self.classes.get(class).map(Vec::as_slice)
    }

    pub fn has_class(&self, class: &str) -> bool {
        self.classes.contains_key(class)
    }
}

/// Per-class phrase occurrence counts over the folded text. Each phrase is
/// counted by non-overlapping occurrences and a class sums its phrases.
/// Classes with no hits are omitted.
pub fn tag_text(text: &str, lexicon: &KeywordLexicon) -> BTreeMap<String, usize> {
    let folded = fold(text);
    lexicon
        .classes
        .iter()
        .filter_map(|(class, phrases)| {
            let n: usize = phrases.iter().map(|p| folded.matches(p.as_str()).count()).sum();
            (n > 0).then(|| (class.clone(), n))
        })
        .collect()
}

pub fn tag_keywords(doc: &Document, lexicon: &KeywordLexicon) -> BTreeMap<String, usize> {
    tag_text(&doc.text, lexicon)
}

/// Whether `text` contains any of `phrases` (folded, substring match).
pub fn mentions_any(text: &str, phrases: &[String]) -> bool {
    let folded = fold(text);
    phrases.iter().any(|p| {
        let p = fold(p);
        !p.is_empty() && folded.contains(p.as_str())
    })
}
