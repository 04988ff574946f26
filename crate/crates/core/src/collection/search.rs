//! Back-link discovery and meta-search over pluggable search providers.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use super::fetcher::Fetcher;
use super::url::normalize_url;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchHit {
    pub provider: String,
    pub query: String,
    pub url: String,
    /// 1 is the best rank.
    pub rank: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProviderError {
    #[error("provider {provider} unavailable: {message}")]
    Unavailable { provider: String, message: String },
    #[error("provider {provider} returned an unreadable response: {message}")]
    BadResponse { provider: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SearchError {
    #[error("meta-search needs at least one keyword")]
    NoKeywords,
    #[error("back-link search needs a target domain")]
    EmptyDomain,
}

pub trait SearchProvider {
    fn name(&self) -> &str;

    /// Result URLs for `query`, best first.
    fn search(&self, query: &str) -> Result<Vec<String>, ProviderError>;

    /// The provider's query for pages linking to `domain`.
    fn backlink_query(&self, domain: &str) -> String;
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProviderFailure {
    pub provider: String,
    pub query: String,
    pub error: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub hits: Vec<SearchHit>,
    pub failures: Vec<ProviderFailure>,
}

/// Provider descriptor file.
///
/// ```toml
/// name = "ahmia"
/// endpoint = "http://ahmia.test/search/?q={query}"
/// backlink_query = "link:{domain}"
/// result_path = "results[].url"
/// ```
///
/// `result_path` walks the JSON response: dotted object keys, `[]` to fan
/// out over an array. A bare `[]` means the body is an array of URLs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProviderDescriptor {
    pub name: String,
    pub endpoint: String,
    #[serde(default = "default_backlink")]
    pub backlink_query: String,
    pub result_path: String,
}

fn default_backlink() -> String {
    "link:{domain}".into()
}

#[derive(Debug, Error)]
pub enum DescriptorError {
    #[error("reading provider descriptor {path}: {message}")]
    Read { path: String, message: String },
    #[error("provider descriptor {name}: endpoint lacks a {{query}} placeholder")]
    NoPlaceholder { name: String },
}

impl ProviderDescriptor {
    pub fn from_toml(text: &str, origin: &str) -> Result<Self, DescriptorError> {
        let d: ProviderDescriptor = toml::from_str(text).map_err(|e| DescriptorError::Read {
            path: origin.to_owned(),
            message: e.to_string(),
        })?;
        if !d.endpoint.contains("{query}") {
            return Err(DescriptorError::NoPlaceholder { name: d.name });
        }
        Ok(d)
    }

    pub fn load(path: &Path) -> Result<Self, DescriptorError> {
        let text = fs::read_to_string(path).map_err(|e| DescriptorError::Read {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_toml(&text, &path.display().to_string())
    }

    pub fn request_url(&self, query: &str) -> String {
        let encoded: String = url::form_urlencoded::byte_serialize(query.as_bytes()).collect();
        self.endpoint.replace("{query}", &encoded)
    }
}

/// A descriptor-driven provider that issues its requests through a [`Fetcher`].
pub struct HttpProvider<F> {
    descriptor: ProviderDescriptor,
    fetcher: F,
}

impl<F: Fetcher> HttpProvider<F> {
    pub fn new(descriptor: ProviderDescriptor, fetcher: F) -> Self {
        Self {
            descriptor,
            fetcher,
        }
    }
}

impl<F: Fetcher> SearchProvider for HttpProvider<F> {
    fn name(&self) -> &str {
        &self.descriptor.name
    }

    fn search(&self, query: &str) -> Result<Vec<String>, ProviderError> {
        let page = self
            .fetcher
            .fetch(&self.descriptor.request_url(query))
            .map_err(|e| ProviderError::Unavailable {
                provider: self.descriptor.name.clone(),
                message: e.to_string(),
            })?;
        let body: Value =
            serde_json::from_slice(&page.body).map_err(|e| ProviderError::BadResponse {
                provider: self.descriptor.name.clone(),
                message: e.to_string(),
            })?;
        Ok(extract_path(&body, &self.descriptor.result_path))
    }

    fn backlink_query(&self, domain: &str) -> String {
        self.descriptor.backlink_query.replace("{domain}", domain)
    }
}

fn extract_path(value: &Value, path: &str) -> Vec<String> {
    let mut current = vec![value];
    for segment in path.split('.').filter(|s| !s.is_empty()) {
        let (key, fan_out) = match segment.strip_suffix("[]") {
            Some(k) => (k, true),
            None => (segment, false),
        };
        let mut next = Vec::new();
        for v in current {
            let v = if key.is_empty() { Some(v) } else { v.get(key) };
            match (v, fan_out) {
                (Some(Value::Array(items)), true) => next.extend(items.iter()),
                (Some(v), false) => next.push(v),
                _ => {}
            }
        }
        current = next;
    }
    current
        .into_iter()
        .filter_map(|v| v.as_str().map(str::to_owned))
        .collect()
}

/// An in-memory provider answering from a fixed query table; queries not
/// in the table return no results.
#[derive(Debug, Clone, Default)]
pub struct StaticProvider {
    name: String,
    results: HashMap<String, Vec<String>>,
    unavailable: bool,
}

impl StaticProvider {
    pub fn new(name: &str) -> Self {
        Self {
            name: name.to_owned(),
            ..Self::default()
        }
    }

    pub fn with(mut self, query: &str, urls: &[&str]) -> Self {
        self.results
            .insert(query.to_owned(), urls.iter().map(|u| u.to_string()).collect());
        self
    }

    pub fn offline(mut self) -> Self {
        self.unavailable = true;
        self
    }
}

impl SearchProvider for StaticProvider {
    fn name(&self) -> &str {
        &self.name
    }

    fn search(&self, query: &str) -> Result<Vec<String>, ProviderError> {
        if self.unavailable {
            return Err(ProviderError::Unavailable {
                provider: self.name.clone(),
                message: "offline".into(),
            });
        }
        Ok(self.results.get(query).cloned().unwrap_or_default())
    }

    fn backlink_query(&self, domain: &str) -> String {
        format!("link:{domain}")
    }
}

/// Runs one query against one provider, normalizing URLs and ranking the
/// surviving results 1..n. Unparseable and repeated URLs are dropped.
fn ranked_hits(
    provider: &dyn SearchProvider,
    query: &str,
) -> Result<Vec<SearchHit>, ProviderFailure> {
    let urls = provider.search(query).map_err(|e| ProviderFailure {
        provider: provider.name().to_owned(),
        query: query.to_owned(),
        error: e.to_string(),
    })?;
    let mut seen = HashSet::new();
    Ok(urls
        .iter()
        .filter_map(|u| normalize_url(u).ok())
        .filter(|u| seen.insert(u.clone()))
        .enumerate()
        .map(|(i, url)| SearchHit {
            provider: provider.name().to_owned(),
            query: query.to_owned(),
            url,
            rank: i as u32 + 1,
        })
        .collect())
}

/// Pages linking to `target_domain`, per provider. A failing provider is
/// recorded and the others still contribute.
pub fn backlink_search(
    target_domain: &str,
    providers: &[&dyn SearchProvider],
) -> Result<SearchOutcome, SearchError> {
    let domain = target_domain.trim();
    if domain.is_empty() {
        return Err(SearchError::EmptyDomain);
    }
    let mut outcome = SearchOutcome::default();
    for provider in providers {
        let query = provider.backlink_query(domain);
        match ranked_hits(*provider, &query) {
            Ok(hits) => outcome.hits.extend(hits),
            Err(f) => outcome.failures.push(f),
        }
    }
    Ok(outcome)
}

/// Union of every provider's results for every keyword, deduplicated by
/// normalized URL.
///
/// A URL returned several times keeps its best rank; its attribution is the
/// (provider, query) pair that produced that rank, smallest pair on ties.
/// Output is sorted by (rank, url) and independent of provider order.
pub fn meta_search(
    keywords: &[String],
    providers: &[&dyn SearchProvider],
) -> Result<SearchOutcome, SearchError> {
    if keywords.iter().all(|k| k.trim().is_empty()) {
        return Err(SearchError::NoKeywords);
    }
    let mut best: HashMap<String, SearchHit> = HashMap::new();
    let mut failures = Vec::new();
    for keyword in keywords.iter().filter(|k| !k.trim().is_empty()) {
        for provider in providers {
            match ranked_hits(*provider, keyword) {
                Ok(hits) => {
                    for hit in hits {
                        match best.get(&hit.url) {
                            Some(cur)
                                if (cur.rank, &cur.provider, &cur.query)
                                    <= (hit.rank, &hit.provider, &hit.query) => {}
                            _ => {
                                best.insert(hit.url.clone(), hit);
                            }
                        }
                    }
                }
                Err(f) => failures.push(f),
            }
        }
    }
    let mut hits: Vec<SearchHit> = best.into_values().collect();
    hits.sort_by(|a, b| a.rank.cmp(&b.rank).then_with(|| a.url.cmp(&b.url)));
    failures.sort_by(|a: &ProviderFailure, b| (&a.provider, &a.query).cmp(&(&b.provider, &b.query)));
    Ok(SearchOutcome { hits, failures })
}
