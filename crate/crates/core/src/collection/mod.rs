//! Candidate page collection: crawling from seeds, back-link discovery and
//! meta-search. All network access goes through [`Fetcher`].

mod crawl;
mod fetcher;
mod html;
mod search;
mod url;

pub use self::crawl::{crawl, page_content, CrawlConfig, CrawlFailure, CrawlOutcome, FetchRecord, Scope};
pub use self::fetcher::{
    FetchError, FetchedPage, Fetcher, FixtureError, FixtureFetcher, LiveFetcher, LiveFetcherConfig,
};
pub use self::html::{extract as extract_html, Extracted};
pub use self::search::{
    backlink_search, meta_search, DescriptorError, HttpProvider, ProviderDescriptor, ProviderError,
    ProviderFailure, SearchError, SearchHit, SearchOutcome, SearchProvider, StaticProvider,
};
pub use self::url::{host_of, normalize_url, registrable_domain, resolve_link, UrlError};
