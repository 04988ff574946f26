//! Pipeline configuration file.
//!
//! A TOML document; `${NAME}` anywhere in the text is replaced by the
//! environment variable `NAME` before parsing, so secrets such as API keys
//! stay out of the file. Relative paths are resolved against the directory
//! holding the config file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use darkwatch_core::collection::Scope;
use darkwatch_core::score::Hyperparams;
use darkwatch_core::Category;
use serde::Deserialize;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    /// Run directory; `--run-dir` takes precedence.
    pub run_dir: Option<PathBuf>,
    /// Unix seconds used for every timestamp the pipeline writes. Set it
    /// to make repeated runs byte-identical.
    pub fixed_time: Option<i64>,
    /// Lexicon file; the bundled lexicon when absent.
    pub lexicon: Option<PathBuf>,
    #[serde(default)]
    pub collection: Collection,
    #[serde(default)]
    pub search: Search,
    #[serde(default)]
    pub filter: Filter,
    #[serde(default)]
    pub training: Training,
    #[serde(default)]
    pub cluster: Cluster,
    #[serde(default)]
    pub forums: Forums,
    #[serde(default)]
    pub scan: Scan,
    #[serde(default)]
    pub correlate: Correlate,
    #[serde(default)]
    pub service: Service,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FetcherKind {
    #[default]
    Fixture,
    Live,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Collection {
    pub fetcher: FetcherKind,
    /// Directory with an `index.json` of recorded pages.
    pub fixture_dir: Option<PathBuf>,
    /// SOCKS or HTTP proxy for live fetching, e.g. `socks5h://127.0.0.1:9050`.
    pub proxy: Option<String>,
    pub timeout_secs: u64,
    pub seeds: Vec<String>,
    pub keywords: Vec<String>,
    pub max_depth: u32,
    pub max_pages: usize,
    pub per_host_delay_ms: u64,
    pub scope: Scope,
    pub honor_robots: bool,
    /// JSON list of `{url, name, description, category}` entries.
    pub annotations: Option<PathBuf>,
}

impl Default for Collection {
    fn default() -> Self {
        let crawl = darkwatch_core::CrawlConfig::default();
        Self {
            fetcher: FetcherKind::Fixture,
            fixture_dir: None,
            proxy: None,
            timeout_secs: 60,
            seeds: Vec::new(),
            keywords: Vec::new(),
            max_depth: crawl.max_depth,
            max_pages: crawl.max_pages,
            per_host_delay_ms: crawl.per_host_delay_ms,
            scope: crawl.scope,
            honor_robots: crawl.honor_robots,
            annotations: None,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Search {
    /// Provider descriptor files.
    pub providers: Vec<PathBuf>,
    /// Recorded provider responses; when set no request leaves the machine.
    pub fixture_dir: Option<PathBuf>,
    pub keywords: Vec<String>,
    pub backlink_domains: Vec<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Filter {
    pub drop_categories: Vec<Category>,
    /// Drop documents without any lexicon hit in round one.
    pub require_lexicon_hit: bool,
}

impl Default for Filter {
    fn default() -> Self {
        Self {
            drop_categories: vec![Category::Other],
            require_lexicon_hit: true,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Training {
    /// JSONL of `{url, text, label}` seed examples.
    pub seeds: Option<PathBuf>,
    pub learning_rate: f64,
    pub epochs: u32,
    pub l2_lambda: f64,
}

impl Default for Training {
    fn default() -> Self {
        let hp = Hyperparams::default();
        Self {
            seeds: None,
            learning_rate: hp.learning_rate,
            epochs: hp.epochs,
            l2_lambda: hp.l2_lambda,
        }
    }
}

impl Training {
    pub fn hyperparams(&self) -> Hyperparams {
        Hyperparams {
            learning_rate: self.learning_rate,
            epochs: self.epochs,
            l2_lambda: self.l2_lambda,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Cluster {
    pub k: usize,
    pub seed: u64,
    pub top_terms: usize,
}

impl Default for Cluster {
    fn default() -> Self {
        Self {
            k: darkwatch_core::cluster::DEFAULT_K,
            seed: 0,
            top_terms: 8,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Forums {
    /// JSONL of `{forum, post_id, text, posted_at?}` posts.
    pub posts: Option<PathBuf>,
    pub roster: Vec<String>,
    /// Class whose per-forum share is reported.
    pub class: String,
    /// JSON list of `{forum, keywords}` searches.
    pub queries: Option<PathBuf>,
}

impl Default for Forums {
    fn default() -> Self {
        Self {
            posts: None,
            roster: Vec::new(),
            class: darkwatch_core::fixtures::SHARE_CLASS.to_owned(),
            queries: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransportKind {
    #[default]
    Fixture,
    Http,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scan {
    pub transport: TransportKind,
    pub fixture_dir: Option<PathBuf>,
    pub base_url: String,
    pub api_key: Option<String>,
    pub pages: u32,
    pub min_interval_ms: u64,
    /// Keep only records on this port in the exported CSV.
    pub port_filter: Option<u16>,
}

impl Default for Scan {
    fn default() -> Self {
        Self {
            transport: TransportKind::Fixture,
            fixture_dir: None,
            base_url: "https://api.shodan.io".into(),
            api_key: None,
            pages: 1,
            min_interval_ms: 1000,
            port_filter: None,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Correlate {
    /// Lexicon class -> device search query measuring its exposure.
    pub classes: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Service {
    pub bind: String,
    pub ui_dir: Option<PathBuf>,
}

impl Default for Service {
    fn default() -> Self {
        Self {
            bind: "127.0.0.1:8700".into(),
            ui_dir: None,
        }
    }
}

/// Replaces `${NAME}` with the value of environment variable `NAME`.
pub fn interpolate(text: &str, lookup: impl Fn(&str) -> Option<String>) -> Result<String> {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(start) = rest.find("${") {
        out.push_str(&rest[..start]);
        let after = &rest[start + 2..];
        let end = after
            .find('}')
            .ok_or_else(|| anyhow!("unterminated ${{ in config"))?;
        let name = &after[..end];
        if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            bail!("invalid variable name {name:?} in config");
        }
        let value = lookup(name).ok_or_else(|| anyhow!("environment variable {name} is not set"))?;
        out.push_str(&value);
        rest = &after[end + 1..];
    }
    out.push_str(rest);
    Ok(out)
}

impl Config {
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let text = interpolate(text, |k| std::env::var(k).ok())?;
        let mut cfg: Config = toml::from_str(&text).context("parsing config")?;
        cfg.resolve(base);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(path) = p {
                if path.is_relative() {
                    *path = base.join(&*path);
                }
            }
        };
        fix(&mut self.run_dir);
        fix(&mut self.lexicon);
        fix(&mut self.collection.fixture_dir);
        fix(&mut self.collection.annotations);
        fix(&mut self.search.fixture_dir);
        for p in &mut self.search.providers {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        fix(&mut self.training.seeds);
        fix(&mut self.forums.posts);
        fix(&mut self.forums.queries);
        fix(&mut self.scan.fixture_dir);
        fix(&mut self.service.ui_dir);
    }

    fn validate(&self) -> Result<()> {
        if self.collection.fetcher == FetcherKind::Fixture
            && self.collection.fixture_dir.is_none()
            && !self.collection.seeds.is_empty()
        {
            bail!("collection.fetcher = \"fixture\" needs collection.fixture_dir");
        }
        if self.scan.transport == TransportKind::Http && self.scan.api_key.is_none() {
            bail!("scan.transport = \"http\" needs scan.api_key");
        }
        if self.cluster.k == 0 {
            bail!("cluster.k must be positive");
        }
        if self.training.epochs == 0 || self.training.learning_rate.is_nan() || self.training.learning_rate <= 0.0 || self.training.l2_lambda < 0.0 {
            bail!("training needs epochs > 0, learning_rate > 0 and l2_lambda >= 0");
        }
        self.service
            .bind
            .parse::<std::net::SocketAddr>()
            .with_context(|| format!("service.bind {:?}", self.service.bind))?;
        Ok(())
    }
}
