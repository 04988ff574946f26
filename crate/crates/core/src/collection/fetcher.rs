use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Deserialize;
use thiserror::Error;

use super::url::normalize_url;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FetchedPage {
    pub url: String,
    pub status: u16,
    pub content_type: Option<String>,
    pub body: Vec<u8>,
    /// Recording time for fixture pages; live fetches leave this to the clock.
    pub fetched_at: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FetchError {
    #[error("no page at {0}")]
    NotFound(String),
    #[error("{url} answered with status {status}")]
    Status { url: String, status: u16 },
    #[error("transport failure for {url}: {message}")]
    Transport { url: String, message: String },
}

pub trait Fetcher: Send + Sync {
    fn fetch(&self, url: &str) -> Result<FetchedPage, FetchError>;
}

impl<F: Fetcher + ?Sized> Fetcher for &F {
    fn fetch(&self, url: &str) -> Result<FetchedPage, FetchError> {
        (**self).fetch(url)
    }
}

impl<F: Fetcher + ?Sized> Fetcher for Box<F> {
    fn fetch(&self, url: &str) -> Result<FetchedPage, FetchError> {
        (**self).fetch(url)
    }
}

#[derive(Debug, Error)]
pub enum FixtureError {
    #[error("reading fixture {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("fixture index {path}: {message}")]
    Index { path: PathBuf, message: String },
}

#[derive(Debug, Deserialize)]
struct FixtureIndex {
    pages: Vec<FixtureEntry>,
}

#[derive(Debug, Clone, Deserialize)]
struct FixtureEntry {
    url: String,
    #[serde(default)]
    file: Option<String>,
    #[serde(default = "ok_status")]
    status: u16,
    #[serde(default)]
    content_type: Option<String>,
    #[serde(default)]
    fetched_at: Option<i64>,
}

fn ok_status() -> u16 {
    200
}

/// Serves recorded pages from a directory.
///
/// `index.json` in the root maps URLs to files:
///
/// ```json
/// {"pages": [{"url": "http://a.onion/", "file": "a.html", "fetched_at": 1719792000},
///            {"url": "http://down.onion/", "status": 503}]}
/// ```
///
/// Entries without a `file` answer with their `status` and no body.
#[derive(Debug, Clone)]
pub struct FixtureFetcher {
    root: PathBuf,
    pages: HashMap<String, FixtureEntry>,
}

impl FixtureFetcher {
    pub fn open(root: impl AsRef<Path>) -> Result<Self, FixtureError> {
        let root = root.as_ref().to_path_buf();
        let index_path = root.join("index.json");
        let body = fs::read(&index_path).map_err(|source| FixtureError::Io {
            path: index_path.clone(),
            source,
        })?;
        let index: FixtureIndex =
            serde_json::from_slice(&body).map_err(|e| FixtureError::Index {
                path: index_path.clone(),
                message: e.to_string(),
            })?;
        let mut pages = HashMap::new();
        for entry in index.pages {
            let url = normalize_url(&entry.url).map_err(|e| FixtureError::Index {
                path: index_path.clone(),
                message: e.to_string(),
            })?;
            pages.insert(url, entry);
        }
        Ok(Self { root, pages })
    }

    pub fn urls(&self) -> impl Iterator<Item = &str> {
        self.pages.keys().map(String::as_str)
    }
}

impl Fetcher for FixtureFetcher {
    fn fetch(&self, url: &str) -> Result<FetchedPage, FetchError> {
        let key = normalize_url(url).map_err(|_| FetchError::NotFound(url.to_owned()))?;
        let entry = self
            .pages
            .get(&key)
            .ok_or_else(|| FetchError::NotFound(key.clone()))?;
        let Some(file) = &entry.file else {
            return Err(FetchError::Status {
                url: key,
                status: entry.status,
            });
        };
        if !(200..300).contains(&entry.status) {
            return Err(FetchError::Status {
                url: key,
                status: entry.status,
            });
        }
        let path = self.root.join(file);
        let body = fs::read(&path).map_err(|e| FetchError::Transport {
            url: key.clone(),
            message: format!("{}: {e}", path.display()),
        })?;
        Ok(FetchedPage {
            url: key,
            status: entry.status,
            content_type: entry.content_type.clone(),
            body,
            fetched_at: entry.fetched_at,
        })
    }
}

#[derive(Debug, Clone)]
pub struct LiveFetcherConfig {
    /// e.g. `socks5h://127.0.0.1:9050` for onion routing.
    pub proxy: Option<String>,
    pub timeout: Duration,
    pub user_agent: String,
    pub max_body_bytes: u64,
}

impl Default for LiveFetcherConfig {
    fn default() -> Self {
        Self {
            proxy: None,
            timeout: Duration::from_secs(30),
            user_agent: format!("darkwatch/{}", env!("CARGO_PKG_VERSION")),
            max_body_bytes: 8 * 1024 * 1024,
        }
    }
}

/// HTTP fetcher, optionally routed through a SOCKS proxy.
pub struct LiveFetcher {
    agent: ureq::Agent,
    max_body_bytes: u64,
}

impl LiveFetcher {
    pub fn new(config: &LiveFetcherConfig) -> Result<Self, FetchError> {
        let proxy = match &config.proxy {
            Some(p) => Some(ureq::Proxy::new(p).map_err(|e| FetchError::Transport {
                url: p.clone(),
                message: e.to_string(),
            })?),
            None => None,
        };
        let agent = ureq::Agent::config_builder()
            .proxy(proxy)
            .timeout_global(Some(config.timeout))
            .user_agent(config.user_agent.as_str())
            .http_status_as_error(false)
            .build()
            .into();
        Ok(Self {
            agent,
            max_body_bytes: config.max_body_bytes,
        })
    }
}

impl Fetcher for LiveFetcher {
    fn fetch(&self, url: &str) -> Result<FetchedPage, FetchError> {
        let transport = |e: ureq::Error| FetchError::Transport {
            url: url.to_owned(),
            message: e.to_string(),
        };
        let mut resp = self.agent.get(url).call().map_err(transport)?;
        let status = resp.status().as_u16();
        if !(200..300).contains(&status) {
            return Err(FetchError::Status {
                url: url.to_owned(),
                status,
            });
        }
        let content_type = resp
            .headers()
            .get("content-type")
            .and_then(|v| v.to_str().ok())
            .map(str::to_owned);
        let body = resp
            .body_mut()
            .with_config()
            .limit(self.max_body_bytes)
            .read_to_vec()
            .map_err(transport)?;
        Ok(FetchedPage {
            url: url.to_owned(),
            status,
            content_type,
            body,
            fetched_at: None,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixture_fetcher_serves_index() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("a.html"), "<p>a</p>").unwrap();
        fs::write(
            dir.path().join("index.json"),
            r#"{"pages": [
                {"url": "HTTP://A.test/?b=1&a=2", "file": "a.html", "fetched_at": 7},
                {"url": "http://down.test/", "status": 503}
            ]}"#,
        )
        .unwrap();
        let f = FixtureFetcher::open(dir.path()).unwrap();
        let page = f.fetch("http://a.test/?a=2&b=1").unwrap();
        assert_eq!(page.body, b"<p>a</p>");
        assert_eq!(page.fetched_at, Some(7));
        assert_eq!(
            f.fetch("http://down.test/"),
            Err(FetchError::Status {
                url: "http://down.test/".into(),
                status: 503
            })
        );
        assert!(matches!(f.fetch("http://missing.test/"), Err(FetchError::NotFound(_))));
    }

    #[test]
    fn missing_index_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(FixtureFetcher::open(dir.path()), Err(FixtureError::Io { .. })));
    }
}
