use std::collections::BTreeSet;

use darkwatch_core::collection::{
    backlink_search, crawl, meta_search, CrawlConfig, FixtureFetcher, HttpProvider, ProviderDescriptor, Scope,
    SearchProvider,
};
use darkwatch_core::fixtures::fixture_root;
use darkwatch_core::VirtualClock;

const HOST: &str = "http://forum.fixture.onion";

fn site_config() -> CrawlConfig {
    CrawlConfig {
        seeds: vec![format!("{HOST}/")],
        max_depth: 2,
        per_host_delay_ms: 500,
        ..CrawlConfig::default()
    }
}

#[test]
fn crawl_reaches_the_five_pages_within_depth() {
    let fetcher = FixtureFetcher::open(fixture_root().join("crawl")).unwrap();
    let clock = VirtualClock::starting_at(1_000);
    let out = crawl(&site_config(), &fetcher, &clock);

    let urls: Vec<&str> = out.documents.iter().map(|d| d.document.url.as_str()).collect();
    let expected: BTreeSet<String> = ["/", "/boards/iot.html", "/boards/market.html", "/boards/thread-1.html", "/boards/thread-2.html"]
        .iter()
        .map(|p| format!("{HOST}{p}"))
        .collect();
    assert_eq!(urls.iter().map(|u| u.to_string()).collect::<BTreeSet<_>>(), expected);
    assert_eq!(urls.len(), 5);
    assert!(out.failures.is_empty(), "{:?}", out.failures);

    let fetched: Vec<&str> = out.fetch_log.iter().map(|r| r.url.as_str()).collect();
    let unique: BTreeSet<&str> = fetched.iter().copied().collect();
    assert_eq!(unique.len(), fetched.len(), "duplicate fetch in {fetched:?}");
    assert!(fetched.iter().all(|u| u.starts_with(HOST)));
    assert!(!fetched.iter().any(|u| u.ends_with("/archive/deep.html")));

    for pair in out.fetch_log.windows(2) {
        assert!(pair[1].at_ms >= pair[0].at_ms + 500, "{pair:?}");
    }
    assert!(out.documents.iter().all(|d| d.document.fetched_at == 1_719_792_000));
}

#[test]
fn crawl_scope_and_depth_options() {
    let fetcher = FixtureFetcher::open(fixture_root().join("crawl")).unwrap();
    let clock = VirtualClock::starting_at(0);

    let open = CrawlConfig { scope: Scope::Unrestricted, max_depth: 3, ..site_config() };
    let out = crawl(&open, &fetcher, &clock);
    let urls: BTreeSet<String> = out.documents.iter().map(|d| d.document.url.clone()).collect();
    assert!(urls.contains("http://other.fixture.onion/"));
    assert!(urls.contains(&format!("{HOST}/archive/deep.html")));
    assert_eq!(urls.len(), 7);

    let shallow = CrawlConfig { max_depth: 0, ..site_config() };
    assert_eq!(crawl(&shallow, &fetcher, &clock).documents.len(), 1);

    let capped = CrawlConfig { max_pages: 2, ..site_config() };
    assert_eq!(crawl(&capped, &fetcher, &clock).documents.len(), 2);
}

#[test]
fn crawl_is_deterministic() {
    let fetcher = FixtureFetcher::open(fixture_root().join("crawl")).unwrap();
    let urls = |c: &CrawlConfig| {
        crawl(c, &fetcher, &VirtualClock::starting_at(0))
            .documents
            .into_iter()
            .map(|d| d.document.id)
            .collect::<Vec<_>>()
    };
    assert_eq!(urls(&site_config()), urls(&site_config()));
}

fn providers(fetcher: &FixtureFetcher) -> Vec<HttpProvider<&FixtureFetcher>> {
    ["torch", "grams", "ahmia"]
        .iter()
        .map(|name| {
            let path = fixture_root().join("search/providers").join(format!("{name}.toml"));
            HttpProvider::new(ProviderDescriptor::load(&path).unwrap(), fetcher)
        })
        .collect()
}

#[test]
fn meta_search_over_three_engines() {
    let fetcher = FixtureFetcher::open(fixture_root().join("search")).unwrap();
    let ps = providers(&fetcher);
    let refs: Vec<&dyn SearchProvider> = ps.iter().map(|p| p as &dyn SearchProvider).collect();

    let out = meta_search(&["freedom fighters".to_string()], &refs).unwrap();
    let urls: BTreeSet<&str> = out.hits.iter().map(|h| h.url.as_str()).collect();
    assert_eq!(
        urls,
        BTreeSet::from([
            "http://anonymzn3twqpxq5.onion/read.php?2",
            "http://duskgytldkxiuqc6.onion/comsense.html",
            "http://hackhound.org/forums/page/index.html",
            "http://opnju4nyz7wbypme.onion/weblog/index.html",
        ])
    );
    assert!(out.failures.is_empty());
    assert!(out.hits.windows(2).all(|w| (w[0].rank, &w[0].url) <= (w[1].rank, &w[1].url)));

    let reversed: Vec<&dyn SearchProvider> = refs.iter().rev().copied().collect();
    assert_eq!(meta_search(&["freedom fighters".to_string()], &reversed).unwrap(), out);

    let both = meta_search(&["freedom fighters".into(), "digital robin hood".into()], &refs).unwrap();
    assert_eq!(both.hits.len(), 4);
    // grams and ahmia have no answer recorded for this query
    assert_eq!(both.failures.len(), 2);

    let markets = meta_search(&["hacking services".into()], &refs).unwrap();
    assert!(markets.hits.iter().any(|h| h.url == "http://hansamkt2rr6nfg3.onion/search/?c=59&q=hacker"));
}

#[test]
fn backlinks_with_a_failing_engine() {
    let fetcher = FixtureFetcher::open(fixture_root().join("search")).unwrap();
    let ps = providers(&fetcher);
    let refs: Vec<&dyn SearchProvider> = ps.iter().map(|p| p as &dyn SearchProvider).collect();
    let out = backlink_search("hackhound.org", &refs).unwrap();
    let by: Vec<(&str, &str)> = out.hits.iter().map(|h| (h.provider.as_str(), h.url.as_str())).collect();
    assert_eq!(
        by,
        [
            ("torch", "http://zw3crggtadila2sg.onion/imageboard/"),
            ("torch", "http://rrcc5uuudhh4oz3c.onion/"),
            ("grams", "http://rrcc5uuudhh4oz3c.onion/"),
        ]
    );
    assert_eq!(out.failures.len(), 1);
    assert_eq!(out.failures[0].provider, "ahmia");
}
