use std::collections::{HashMap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use super::fetcher::{FetchedPage, Fetcher};
use super::html;
use super::url::{host_of, normalize_url, registrable_domain, resolve_link};
use crate::clock::Clock;
use crate::store::{RawDocument, Source};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scope {
    #[default]
    SameHost,
    SameRegistrableDomain,
    Unrestricted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CrawlConfig {
    pub seeds: Vec<String>,
    /// When non-empty, links are only followed out of pages mentioning one
    /// of these keywords (case-insensitive). Every fetched page is kept.
    pub keywords: Vec<String>,
    pub max_depth: u32,
    pub max_pages: usize,
    pub per_host_delay_ms: u64,
    pub scope: Scope,
    pub honor_robots: bool,
}

impl Default for CrawlConfig {
    fn default() -> Self {
        Self {
            seeds: Vec::new(),
            keywords: Vec::new(),
            max_depth: 2,
            max_pages: 1000,
            per_host_delay_ms: 500,
            scope: Scope::SameHost,
            honor_robots: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrawlFailure {
    pub url: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FetchRecord {
    pub url: String,
    pub host: String,
    pub at_ms: u64,
}

#[derive(Debug, Default)]
pub struct CrawlOutcome {
    pub documents: Vec<RawDocument>,
    pub failures: Vec<CrawlFailure>,
    /// Every request issued, in order, with the clock time it was sent.
    pub fetch_log: Vec<FetchRecord>,
}

struct Politeness<'a> {
    clock: &'a dyn Clock,
    delay_ms: u64,
    last: HashMap<String, u64>,
}

impl Politeness<'_> {
    fn wait_for(&mut self, host: &str) -> u64 {
        if let Some(&last) = self.last.get(host) {
            let ready = last + self.delay_ms;
            let now = self.clock.now_ms();
            if now < ready {
                self.clock.sleep_ms(ready - now);
            }
        }
        let at = self.clock.now_ms();
        self.last.insert(host.to_owned(), at);
        at
    }
}

/// Breadth-first crawl from the configured seeds.
///
/// Each normalized URL is requested at most once. Fetch failures are
/// recorded in the outcome and never abort the crawl.
pub fn crawl(config: &CrawlConfig, fetcher: &dyn Fetcher, clock: &dyn Clock) -> CrawlOutcome {
    let mut outcome = CrawlOutcome::default();
    let mut polite = Politeness {
        clock,
        delay_ms: config.per_host_delay_ms,
        last: HashMap::new(),
    };
    let keywords: Vec<String> = config.keywords.iter().map(|k| k.to_lowercase()).collect();

    let mut seen: HashSet<String> = HashSet::new();
    let mut frontier: VecDeque<(String, u32)> = VecDeque::new();
    let mut seed_hosts: HashSet<String> = HashSet::new();
    for seed in &config.seeds {
        match normalize_url(seed) {
            Ok(url) => {
                if let Some(h) = host_of(&url) {
                    seed_hosts.insert(h);
                }
                if seen.insert(url.clone()) {
                    frontier.push_back((url, 0));
                }
            }
            Err(e) => outcome.failures.push(CrawlFailure {
                url: seed.clone(),
                error: e.to_string(),
            }),
        }
    }
    let seed_domains: HashSet<String> = seed_hosts
        .iter()
        .map(|h| registrable_domain(h).to_owned())
        .collect();
    let in_scope = |url: &str| -> bool {
        let Some(host) = host_of(url) else {
            return false;
        };
        match config.scope {
            Scope::SameHost => seed_hosts.contains(&host),
            Scope::SameRegistrableDomain => seed_domains.contains(registrable_domain(&host)),
            Scope::Unrestricted => true,
        }
    };

    let mut robots: HashMap<String, Vec<String>> = HashMap::new();

    while let Some((url, depth)) = frontier.pop_front() {
        if outcome.documents.len() >= config.max_pages {
            break;
        }
        let host = host_of(&url).unwrap_or_default();

        if config.honor_robots {
            let rules = robots.entry(host.clone()).or_insert_with(|| {
                let robots_url = robots_url(&url);
                let at_ms = polite.wait_for(&host);
                outcome.fetch_log.push(FetchRecord {
                    url: robots_url.clone(),
                    host: host.clone(),
                    at_ms,
                });
                fetcher
                    .fetch(&robots_url)
                    .map(|p| parse_robots(&String::from_utf8_lossy(&p.body)))
                    .unwrap_or_default()
            });
            if is_disallowed(rules, &url) {
                outcome.failures.push(CrawlFailure {
                    url,
                    error: "disallowed by robots.txt".into(),
                });
                continue;
            }
        }

        let at_ms = polite.wait_for(&host);
        outcome.fetch_log.push(FetchRecord {
            url: url.clone(),
            host,
            at_ms,
        });
        let page = match fetcher.fetch(&url) {
            Ok(p) => p,
            Err(e) => {
                outcome.failures.push(CrawlFailure {
                    url,
                    error: e.to_string(),
                });
                continue;
            }
        };

        let (text, links) = page_content(&page);
        let fetched_at = page.fetched_at.unwrap_or_else(|| clock.now_secs());
        match RawDocument::new(&url, page.body, Source::SeedCrawl, fetched_at, text.clone()) {
            Ok(doc) => outcome.documents.push(doc),
            Err(e) => {
                outcome.failures.push(CrawlFailure {
                    url,
                    error: e.to_string(),
                });
                continue;
            }
        }

        if depth >= config.max_depth {
            continue;
        }
        if !keywords.is_empty() {
            let lower = text.to_lowercase();
            if !keywords.iter().any(|k| lower.contains(k.as_str())) {
                continue;
            }
        }
        for href in links {
            let Some(link) = resolve_link(&url, &href) else {
                continue;
            };
            if in_scope(&link) && seen.insert(link.clone()) {
                frontier.push_back((link, depth + 1));
            }
        }
    }
    outcome
}

/// Visible text and raw hrefs of a fetched page.
pub fn page_content(page: &FetchedPage) -> (String, Vec<String>) {
    let body = String::from_utf8_lossy(&page.body);
    let is_html = page
        .content_type
        .as_deref()
        .map(|c| c.contains("html"))
        .unwrap_or_else(|| body.trim_start().starts_with('<'));
    if is_html {
        let ex = html::extract(&body);
        (ex.text, ex.links)
    } else {
        (body.split_whitespace().collect::<Vec<_>>().join(" "), Vec::new())
    }
}

fn robots_url(url: &str) -> String {
    match url::Url::parse(url) {
        Ok(mut u) => {
            u.set_path("/robots.txt");
            u.set_query(None);
            u.into()
        }
        Err(_) => url.to_owned(),
    }
}

/// Disallow prefixes from the `User-agent: *` groups.
fn parse_robots(body: &str) -> Vec<String> {
    let mut rules = Vec::new();
    let mut applies = false;
    let mut in_agents = false;
    for line in body.lines() {
        let line = line.split('#').next().unwrap_or("").trim();
        let Some((key, value)) = line.split_once(':') else {
            continue;
        };
        let (key, value) = (key.trim().to_ascii_lowercase(), value.trim());
        match key.as_str() {
            "user-agent" => {
                if !in_agents {
                    applies = false;
                }
                in_agents = true;
                applies |= value == "*";
            }
            "disallow" => {
                in_agents = false;
                if applies && !value.is_empty() {
                    rules.push(value.to_owned());
                }
            }
            _ => in_agents = false,
        }
    }
    rules
}

fn is_disallowed(rules: &[String], url: &str) -> bool {
    let Ok(u) = url::Url::parse(url) else {
        return false;
    };
    let path = match u.query() {
        Some(q) => format!("{}?{q}", u.path()),
        None => u.path().to_owned(),
    };
    rules.iter().any(|r| path.starts_with(r.as_str()))
}
