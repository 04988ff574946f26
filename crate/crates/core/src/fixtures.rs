//! Bundled fixture data: the default lexicon, forum post sets and the
//! recorded responses used by tests and the `--fixtures` CLI options.

use std::path::PathBuf;

use crate::forum::{read_posts, ForumQuery, Post};

pub const LEXICON_TOML: &str = include_str!("../fixtures/lexicon.toml");
pub const SEARCH_POSTS: &str = include_str!("../fixtures/forums/searches.jsonl");
pub const SEARCH_QUERIES: &str = include_str!("../fixtures/forums/search_queries.json");
pub const SHARE_POSTS: &str = include_str!("../fixtures/forums/shares.jsonl");

/// Timestamp stamped on every fixture fetch: 2024-07-01T00:00:00Z.
pub const FIXTURE_TIME: i64 = 1_719_792_000;

/// The keyword class counted for the seven-forum set.
pub const SHARE_CLASS: &str = "iot-exploit";

pub const SHARE_ROSTER: [&str; 7] = [
    "HackerWeb",
    "HackHound",
    "Hackers Tribe",
    "School-of-HackNet",
    "iC0de",
    "Rhyliv",
    "TorChan",
];

/// API key accepted by the recorded device-search responses.
pub const SCAN_KEY: &str = "fixture-key";

/// Directory holding the on-disk fixtures of this crate.
pub fn fixture_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

pub fn search_posts() -> Vec<Post> {
    read_posts(SEARCH_POSTS.as_bytes()).expect("bundled posts parse")
}

pub fn search_queries() -> Vec<ForumQuery> {
    serde_json::from_str(SEARCH_QUERIES).expect("bundled queries parse")
}

pub fn share_posts() -> Vec<Post> {
    read_posts(SHARE_POSTS.as_bytes()).expect("bundled posts parse")
}

pub fn share_roster() -> Vec<String> {
    SHARE_ROSTER.iter().map(|s| s.to_string()).collect()
}
