//! The pipeline stages behind each subcommand. Every stage reads and
//! writes under the run directory: the store lives in `store/` and each
//! stage leaves its artifacts next to it.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use anyhow::{anyhow, bail, Context, Result};
use darkwatch_core::cluster::{cluster_report, kmeans_fit};
use darkwatch_core::collection::{
    backlink_search, crawl, meta_search, page_content, Fetcher, FixtureFetcher, HttpProvider, LiveFetcher,
    LiveFetcherConfig, ProviderDescriptor, SearchOutcome, SearchProvider,
};
use darkwatch_core::correlate::{correlate_risk, write_risk_csv};
use darkwatch_core::device::{
    exposure_summary, export_device_csv, filter_by_port, query_devices, FixtureTransport, HttpTransport, ScanResult,
};
use darkwatch_core::fixtures;
use darkwatch_core::forum::{export_stats_csv, forum_keyword_stats, load_posts, query_hit_counts, write_hits_csv, ForumQuery, Post};
use darkwatch_core::textfeat::{tag_text, tfidf_text};
use darkwatch_core::{
    normalize_url, Category, ClassMentions, Clock, CrawlConfig, DocId, KeywordLexicon, Label, RawDocument, Source,
    Store, SystemClock, Triage, Transport, Vocabulary, VirtualClock,
};
use serde::{Deserialize, Serialize};

use crate::config::{Config, FetcherKind, TransportKind};

pub const STORE_DIR: &str = "store";
pub const LOCK_FILE: &str = ".lock";
pub const ROUND1_ANALYST: &str = "round-1-filter";
pub const SEED_ANALYST: &str = "seed-set";

/// Everything a stage needs: the parsed config, the run directory, the
/// lexicon and the clock all timestamps come from.
pub struct RunContext {
    pub config: Config,
    pub run_dir: PathBuf,
    pub lexicon: KeywordLexicon,
    pub clock: Arc<dyn Clock>,
}

impl RunContext {
    pub fn new(config: Config, run_dir: Option<PathBuf>) -> Result<Self> {
        let run_dir = run_dir
            .or_else(|| config.run_dir.clone())
            .unwrap_or_else(|| PathBuf::from("run"));
        let lexicon = match &config.lexicon {
            Some(path) => {
                let text = fs::read_to_string(path).with_context(|| format!("reading lexicon {}", path.display()))?;
                KeywordLexicon::from_toml(&text)?
            }
            None => KeywordLexicon::bundled(),
        };
        let clock: Arc<dyn Clock> = match config.fixed_time {
            Some(t) => Arc::new(VirtualClock::starting_at(t as u64 * 1000)),
            None => Arc::new(SystemClock),
        };
        Ok(Self {
            config,
            run_dir,
            lexicon,
            clock,
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.run_dir.join(name)
    }

    pub fn open_store(&self) -> Result<Store> {
        Ok(Store::open(self.path(STORE_DIR))?)
    }

    fn now(&self) -> i64 {
        self.clock.now_secs()
    }
}

/// Exclusive hold on a run directory, released on drop.
#[derive(Debug)]
pub struct RunLock {
    path: PathBuf,
}

impl RunLock {
    pub fn acquire(run_dir: &Path) -> Result<Self> {
        fs::create_dir_all(run_dir).with_context(|| format!("creating {}", run_dir.display()))?;
        let path = run_dir.join(LOCK_FILE);
        fs::OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&path)
            .map_err(|e| match e.kind() {
                std::io::ErrorKind::AlreadyExists => {
                    anyhow!("{} is locked by another run (remove {} if it is stale)", run_dir.display(), path.display())
                }
                _ => anyhow!("creating lock {}: {e}", path.display()),
            })?;
        Ok(Self { path })
    }
}

impl Drop for RunLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut body = serde_json::to_vec_pretty(value)?;
    body.push(b'\n');
    fs::write(path, body).with_context(|| format!("writing {}", path.display()))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let body = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_slice(&body).with_context(|| format!("parsing {}", path.display()))
}

/// File-name form of a query: lowercase ASCII alphanumerics, everything
/// else collapsed to `-`.
pub fn slug(query: &str) -> String {
    let mut out = String::new();
    for c in query.chars() {
        if c.is_ascii_alphanumeric() {
            out.push(c.to_ascii_lowercase());
        } else if !out.ends_with('-') {
            out.push('-');
        }
    }
    let out = out.trim_matches('-');
    if out.is_empty() { "query".into() } else { out.to_owned() }
}

fn collection_fetcher(ctx: &RunContext) -> Result<Box<dyn Fetcher>> {
    let c = &ctx.config.collection;
    Ok(match c.fetcher {
        FetcherKind::Fixture => {
            let dir = c
                .fixture_dir
                .as_ref()
                .ok_or_else(|| anyhow!("collection.fixture_dir is not set"))?;
            Box::new(FixtureFetcher::open(dir)?)
        }
        FetcherKind::Live => Box::new(LiveFetcher::new(&LiveFetcherConfig {
            proxy: c.proxy.clone(),
            timeout: Duration::from_secs(c.timeout_secs),
            ..LiveFetcherConfig::default()
        })?),
    })
}

#[derive(Debug, Deserialize)]
struct SiteAnnotation {
    url: String,
    category: Category,
}

fn annotations(ctx: &RunContext) -> Result<HashMap<String, Category>> {
    let Some(path) = &ctx.config.collection.annotations else {
        return Ok(HashMap::new());
    };
    let sites: Vec<SiteAnnotation> = read_json(path)?;
    sites
        .into_iter()
        .map(|s| Ok((normalize_url(&s.url)?, s.category)))
        .collect()
}

fn store_documents(ctx: &RunContext, store: &mut Store, docs: &[RawDocument]) -> Result<Vec<DocId>> {
    let cats = annotations(ctx)?;
    let mut ids = Vec::with_capacity(docs.len());
    for doc in docs {
        let id = store.put_document(doc)?;
        if let Some(&cat) = cats.get(&doc.document.url) {
            if store.get(&id).and_then(|d| d.category) != Some(cat) {
                store.set_category(&id, cat)?;
            }
        }
        ids.push(id);
    }
    Ok(ids)
}

#[derive(Debug, Serialize)]
struct StoredDoc<'a> {
    id: &'a DocId,
    url: &'a str,
}

pub fn crawl_stage(ctx: &RunContext) -> Result<String> {
    let c = &ctx.config.collection;
    if c.seeds.is_empty() {
        bail!("collection.seeds is empty");
    }
    let config = CrawlConfig {
        seeds: c.seeds.clone(),
        keywords: c.keywords.clone(),
        max_depth: c.max_depth,
        max_pages: c.max_pages,
        per_host_delay_ms: c.per_host_delay_ms,
        scope: c.scope,
        honor_robots: c.honor_robots,
    };
    let fetcher = collection_fetcher(ctx)?;
    let outcome = crawl(&config, fetcher.as_ref(), ctx.clock.as_ref());
    let mut store = ctx.open_store()?;
    let ids = store_documents(ctx, &mut store, &outcome.documents)?;
    let stored: Vec<StoredDoc> = ids
        .iter()
        .zip(&outcome.documents)
        .map(|(id, d)| StoredDoc { id, url: &d.document.url })
        .collect();
    write_json(
        &ctx.path("crawl.json"),
        &serde_json::json!({
            "documents": stored,
            "failures": outcome.failures,
            "fetch_log": outcome.fetch_log,
        }),
    )?;
    Ok(format!("crawled {} pages, {} failures", ids.len(), outcome.failures.len()))
}

fn providers(ctx: &RunContext) -> Result<Vec<HttpProvider<Box<dyn Fetcher>>>> {
    let s = &ctx.config.search;
    if s.providers.is_empty() {
        bail!("search.providers is empty");
    }
    s.providers
        .iter()
        .map(|path| {
            let fetcher: Box<dyn Fetcher> = match &s.fixture_dir {
                Some(dir) => Box::new(FixtureFetcher::open(dir)?),
                None => Box::new(LiveFetcher::new(&LiveFetcherConfig {
                    proxy: ctx.config.collection.proxy.clone(),
                    ..LiveFetcherConfig::default()
                })?),
            };
            Ok(HttpProvider::new(ProviderDescriptor::load(path)?, fetcher))
        })
        .collect()
}

#[derive(Debug, Serialize)]
struct FetchFailure {
    url: String,
    error: String,
}

/// Fetches and stores every distinct hit URL.
fn ingest_hits(ctx: &RunContext, outcome: &SearchOutcome, source: Source) -> Result<serde_json::Value> {
    let fetcher = collection_fetcher(ctx)?;
    let urls: BTreeSet<&str> = outcome.hits.iter().map(|h| h.url.as_str()).collect();
    let mut docs = Vec::new();
    let mut failures = Vec::new();
    for url in urls {
        match fetcher.fetch(url) {
            Ok(page) => {
                let (text, _) = page_content(&page);
                let at = page.fetched_at.unwrap_or_else(|| ctx.now());
                docs.push(RawDocument::new(&page.url, page.body, source, at, text)?);
            }
            Err(e) => failures.push(FetchFailure {
                url: url.to_owned(),
                error: e.to_string(),
            }),
        }
    }
    let mut store = ctx.open_store()?;
    let ids = store_documents(ctx, &mut store, &docs)?;
    let stored: Vec<StoredDoc> = ids
        .iter()
        .zip(&docs)
        .map(|(id, d)| StoredDoc { id, url: &d.document.url })
        .collect();
    Ok(serde_json::json!({
        "hits": outcome.hits,
        "provider_failures": outcome.failures,
        "stored": stored,
        "fetch_failures": failures,
    }))
}

pub fn metasearch_stage(ctx: &RunContext) -> Result<String> {
    let ps = providers(ctx)?;
    let refs: Vec<&dyn SearchProvider> = ps.iter().map(|p| p as &dyn SearchProvider).collect();
    let outcome = meta_search(&ctx.config.search.keywords, &refs)?;
    let report = ingest_hits(ctx, &outcome, Source::Metasearch)?;
    write_json(&ctx.path("metasearch.json"), &report)?;
    Ok(format!(
        "{} unique results, {} provider failures",
        outcome.hits.len(),
        outcome.failures.len()
    ))
}

pub fn backlinks_stage(ctx: &RunContext) -> Result<String> {
    let ps = providers(ctx)?;
    let refs: Vec<&dyn SearchProvider> = ps.iter().map(|p| p as &dyn SearchProvider).collect();
    let domains = &ctx.config.search.backlink_domains;
    if domains.is_empty() {
        bail!("search.backlink_domains is empty");
    }
    let mut all = SearchOutcome::default();
    for domain in domains {
        let out = backlink_search(domain, &refs)?;
        all.hits.extend(out.hits);
        all.failures.extend(out.failures);
    }
    let report = ingest_hits(ctx, &all, Source::Backlink)?;
    write_json(&ctx.path("backlinks.json"), &report)?;
    Ok(format!("{} back-link results, {} provider failures", all.hits.len(), all.failures.len()))
}

#[derive(Debug, Deserialize)]
struct Seed {
    url: String,
    text: String,
    label: Label,
}

pub fn train_stage(ctx: &RunContext) -> Result<String> {
    let mut store = ctx.open_store()?;
    let mut seeded = 0;
    if let Some(path) = &ctx.config.training.seeds {
        let body = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        for (i, line) in body.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let seed: Seed = serde_json::from_str(line).with_context(|| format!("{} line {}", path.display(), i + 1))?;
            let url = normalize_url(&seed.url)?;
            let raw = RawDocument::new(&url, seed.text.clone().into_bytes(), Source::Manual, ctx.now(), seed.text)?;
            let id = store.put_document(&raw)?;
            if store.get(&id).and_then(|d| d.label) != Some(seed.label) {
                store.apply_label(&id, seed.label, SEED_ANALYST, ctx.now())?;
            }
            seeded += 1;
        }
    }
    let mut triage = Triage::new(store, ctx.lexicon.clone());
    let plan = triage.plan_retrain(ctx.config.training.hyperparams())?;
    let summary = triage.apply_retrain(&plan)?;
    write_json(
        &ctx.path("train.json"),
        &serde_json::json!({
            "model_version": summary.model_version,
            "train_size": summary.train_size,
            "seed_examples": seeded,
            "initial_loss": plan.loss_history.first(),
            "final_loss": plan.loss_history.last(),
        }),
    )?;
    Ok(format!(
        "model v{} trained on {} labeled documents",
        summary.model_version, summary.train_size
    ))
}

pub fn filter_stage(ctx: &RunContext) -> Result<String> {
    let f = &ctx.config.filter;
    let mut store = ctx.open_store()?;
    let mut dropped = Vec::new();
    let candidates: Vec<(DocId, String, Option<Category>, bool)> = store
        .documents()
        .iter()
        .filter(|d| d.source != Source::Manual && d.label.is_none())
        .map(|d| (d.id.clone(), d.url.clone(), d.category, tag_text(&d.text, &ctx.lexicon).is_empty()))
        .collect();
    for (id, url, category, no_hits) in candidates {
        let reason = match category {
            Some(c) if f.drop_categories.contains(&c) => format!("category {}", c.as_str()),
            _ if f.require_lexicon_hit && no_hits => "no lexicon hit".to_owned(),
            _ => continue,
        };
        store.apply_label(&id, Label::Irrelevant, ROUND1_ANALYST, ctx.now())?;
        dropped.push(serde_json::json!({"doc_id": id, "url": url, "reason": reason}));
    }

    let mut triage = Triage::new(store, ctx.lexicon.clone());
    if triage.rescore()?.is_none() {
        bail!("no trained model in the store; run `darkwatch train` first");
    }
    let store = triage.store();
    let mut w = csv::Writer::from_path(ctx.path("filter.csv"))?;
    w.write_record(["doc_id", "url", "category", "score", "suggestion", "tags"])?;
    let mut kept = 0;
    for d in store.list_unlabeled().into_iter().filter(|d| d.source != Source::Manual) {
        let score = d.score.unwrap_or(0.0);
        let keep = score >= darkwatch_core::score::DECISION_THRESHOLD;
        kept += keep as usize;
        let tags: Vec<String> = tag_text(&d.text, &ctx.lexicon)
            .into_iter()
            .map(|(c, n)| format!("{c}:{n}"))
            .collect();
        w.write_record([
            d.id.as_str(),
            &d.url,
            d.category.map_or("", Category::as_str),
            &format!("{score:.6}"),
            if keep { "keep" } else { "review" },
            &tags.join(";"),
        ])?;
    }
    w.flush()?;
    let remaining = store.list_unlabeled().into_iter().filter(|d| d.source != Source::Manual).count();
    write_json(
        &ctx.path("filter.json"),
        &serde_json::json!({"round1_dropped": dropped, "round2_scored": remaining, "round2_suggested_keep": kept}),
    )?;
    Ok(format!("round 1 dropped {}, round 2 scored {remaining} ({kept} above threshold)", dropped.len()))
}

pub fn cluster_stage(ctx: &RunContext) -> Result<String> {
    let store = ctx.open_store()?;
    let docs: Vec<_> = store
        .documents()
        .iter()
        .filter(|d| d.source != Source::Manual && d.label != Some(Label::Irrelevant))
        .collect();
    if docs.is_empty() {
        bail!("no documents to cluster; run crawl and filter first");
    }
    let vocab = Vocabulary::build(docs.iter().map(|d| d.text.as_str()))?;
    let vectors: Vec<_> = docs.iter().map(|d| tfidf_text(&d.text, &vocab)).collect();
    let cfg = &ctx.config.cluster;
    let k = cfg.k.min(vectors.len());
    let fit = kmeans_fit(&vectors, k, cfg.seed)?;
    let members: Vec<(DocId, Option<Category>)> = docs.iter().map(|d| (d.id.clone(), d.category)).collect();
    let report = cluster_report(&fit, &members, &vocab, cfg.top_terms)?;
    write_json(&ctx.path("clusters.json"), &report)?;
    Ok(format!("{} documents in {k} clusters, inertia {:.6}", docs.len(), report.inertia))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ForumFixture {
    Searches,
    Shares,
}

fn class_mentions(posts: &[Post], roster: &[String], lexicon: &KeywordLexicon) -> Vec<ClassMentions> {
    let considered: Vec<&Post> = posts.iter().filter(|p| roster.contains(&p.forum)).collect();
    let tags: Vec<BTreeMap<String, usize>> = considered.iter().map(|p| tag_text(&p.text, lexicon)).collect();
    lexicon
        .classes()
        .map(|class| ClassMentions {
            class: class.to_owned(),
            matching_posts: tags.iter().filter(|t| t.contains_key(class)).count() as u64,
            total_posts: considered.len() as u64,
        })
        .collect()
}

fn forum_share_outputs(ctx: &RunContext, posts: &[Post], roster: &[String], class: &str) -> Result<String> {
    let stats = forum_keyword_stats(posts, &ctx.lexicon, class, roster)?;
    export_stats_csv(&stats, &ctx.path("forum_stats.csv"))?;
    write_json(&ctx.path("forum_stats.json"), &stats)?;
    write_json(&ctx.path("class_mentions.json"), &class_mentions(posts, roster, &ctx.lexicon))?;
    Ok(stats
        .iter()
        .map(|s| format!("{}: {}/{} ({}%)", s.forum, s.matching_posts, s.total_posts, pct(s.matching_posts, s.total_posts)))
        .collect::<Vec<_>>()
        .join("\n"))
}

fn pct(num: u64, den: u64) -> String {
    let scaled = if den == 0 { 0 } else { (num as u128 * 1000 * 2 + den as u128) / (2 * den as u128) };
    format!("{}.{}", scaled / 10, scaled % 10)
}

fn query_outputs(ctx: &RunContext, posts: &[Post], queries: &[ForumQuery]) -> Result<String> {
    let hits = query_hit_counts(posts, queries)?;
    write_hits_csv(&hits, fs::File::create(ctx.path("query_hits.csv"))?)?;
    write_json(&ctx.path("query_hits.json"), &hits)?;
    Ok(hits
        .iter()
        .map(|h| format!("{} [{}]: {}", h.forum, h.keywords.join("; "), h.hit_posts))
        .collect::<Vec<_>>()
        .join("\n"))
}

pub fn stats_stage(ctx: &RunContext, fixture: Option<ForumFixture>) -> Result<String> {
    match fixture {
        Some(ForumFixture::Searches) => query_outputs(ctx, &fixtures::search_posts(), &fixtures::search_queries()),
        Some(ForumFixture::Shares) => {
            forum_share_outputs(ctx, &fixtures::share_posts(), &fixtures::share_roster(), fixtures::SHARE_CLASS)
        }
        None => {
            let f = &ctx.config.forums;
            let path = f.posts.as_ref().ok_or_else(|| anyhow!("forums.posts is not set"))?;
            let posts = load_posts(path)?;
            let roster = if f.roster.is_empty() {
                posts.iter().map(|p| p.forum.clone()).collect::<BTreeSet<_>>().into_iter().collect()
            } else {
                f.roster.clone()
            };
            let mut out = forum_share_outputs(ctx, &posts, &roster, &f.class)?;
            if let Some(qpath) = &f.queries {
                let queries: Vec<ForumQuery> = read_json(qpath)?;
                out.push('\n');
                out.push_str(&query_outputs(ctx, &posts, &queries)?);
            }
            Ok(out)
        }
    }
}

pub struct ScanOptions {
    pub queries: Vec<String>,
    pub fixture: Option<PathBuf>,
    pub pages: Option<u32>,
    pub port: Option<u16>,
}

fn scan_transport(ctx: &RunContext, fixture: Option<&Path>) -> Result<Box<dyn Transport>> {
    let s = &ctx.config.scan;
    let fixture_dir = fixture.map(Path::to_path_buf).or_else(|| match s.transport {
        TransportKind::Fixture => s.fixture_dir.clone(),
        TransportKind::Http => None,
    });
    if let Some(dir) = fixture_dir {
        let key = match &s.api_key {
            Some(k) => k.clone(),
            None => FixtureTransport::default_key(&dir)?,
        };
        return Ok(Box::new(FixtureTransport::open(&dir, &key)?));
    }
    match s.transport {
        TransportKind::Http => {
            let key = s.api_key.as_deref().ok_or_else(|| anyhow!("scan.api_key is not set"))?;
            Ok(Box::new(HttpTransport::new(&s.base_url, key, Duration::from_millis(s.min_interval_ms))))
        }
        TransportKind::Fixture => bail!("scan.fixture_dir is not set"),
    }
}

pub fn scan_file(query: &str) -> String {
    format!("scan_{}.json", slug(query))
}

pub fn scan_stage(ctx: &RunContext, opts: &ScanOptions) -> Result<String> {
    let queries: Vec<String> = if opts.queries.is_empty() {
        ctx.config.correlate.classes.values().cloned().collect::<BTreeSet<_>>().into_iter().collect()
    } else {
        opts.queries.clone()
    };
    if queries.is_empty() {
        bail!("no query given and correlate.classes is empty");
    }
    let transport = scan_transport(ctx, opts.fixture.as_deref())?;
    let pages = opts.pages.unwrap_or(ctx.config.scan.pages);
    let port = opts.port.or(ctx.config.scan.port_filter);
    let mut lines = Vec::new();
    let mut totals = BTreeMap::new();
    let mut records = Vec::new();
    for q in &queries {
        let result: ScanResult = query_devices(q, transport.as_ref(), pages)?;
        lines.push(format!("Results found: {}", result.total));
        let exported = match port {
            Some(p) => filter_by_port(&result.records, p),
            None => result.records.clone(),
        };
        export_device_csv(&exported, &ctx.path(&format!("scan_{}.csv", slug(q))))?;
        write_json(&ctx.path(&scan_file(q)), &result)?;
        totals.insert(q.clone(), result.total);
        records.extend(result.records);
    }
    write_json(
        &ctx.path("exposure.json"),
        &serde_json::json!({"totals": totals, "summary": exposure_summary(&records)}),
    )?;
    Ok(lines.join("\n"))
}

pub fn correlate_stage(ctx: &RunContext) -> Result<String> {
    let classes = &ctx.config.correlate.classes;
    if classes.is_empty() {
        bail!("correlate.classes is empty");
    }
    let mentions_path = ctx.path("class_mentions.json");
    if !mentions_path.exists() {
        bail!("{} is missing; run `darkwatch stats` first", mentions_path.display());
    }
    let all: Vec<ClassMentions> = read_json(&mentions_path)?;
    let mentions: Vec<ClassMentions> = all.into_iter().filter(|m| classes.contains_key(&m.class)).collect();
    let mut exposure = BTreeMap::new();
    for (class, query) in classes {
        let path = ctx.path(&scan_file(query));
        if !path.exists() {
            bail!("{} is missing; run `darkwatch scan` first", path.display());
        }
        let result: ScanResult = read_json(&path)?;
        exposure.insert(class.clone(), result.total);
    }
    let reports = correlate_risk(&mentions, &exposure)?;
    write_risk_csv(&reports, fs::File::create(ctx.path("risk.csv"))?)?;
    write_json(&ctx.path("risk.json"), &reports)?;
    Ok(reports
        .iter()
        .map(|r| format!("{}: risk {:.6} (mentions {:.6}, exposure {:.6})", r.class, r.risk, r.mention_share, r.exposure_share))
        .collect::<Vec<_>>()
        .join("\n"))
}

pub fn report_stage(ctx: &RunContext) -> Result<String> {
    let reports = darkwatch_service::load_reports(&ctx.run_dir)
        .map_err(|e| anyhow!("{e:?}"))?
        .ok_or_else(|| anyhow!("no report artifacts in {}; run the pipeline stages first", ctx.run_dir.display()))?;
    write_json(&ctx.path("reports.json"), &reports)?;
    let missing = reports["not_computed"]
        .as_array()
        .map(|a| a.iter().filter_map(|v| v.as_str()).collect::<Vec<_>>().join(", "))
        .unwrap_or_default();
    Ok(if missing.is_empty() {
        "all report sections present".to_owned()
    } else {
        format!("not computed: {missing}")
    })
}

pub fn serve_stage(ctx: &RunContext) -> Result<()> {
    let addr: std::net::SocketAddr = ctx.config.service.bind.parse()?;
    let triage = Triage::new(ctx.open_store()?, ctx.lexicon.clone());
    let state = darkwatch_service::AppState::new(triage, &ctx.run_dir, ctx.config.training.hyperparams(), Arc::clone(&ctx.clock));
    let app = darkwatch_service::router(state, ctx.config.service.ui_dir.as_deref());
    let runtime = tokio::runtime::Runtime::new()?;
    eprintln!("serving on http://{addr}");
    runtime.block_on(darkwatch_service::serve(addr, app))?;
    Ok(())
}
