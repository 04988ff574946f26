//! Per-forum keyword discussion statistics.
//!
//! One post is one discussion. Shares are kept as exact counts and only
//! rendered to a fixed number of decimals at the edges.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::csvfmt::ratio_decimal;
use crate::textfeat::{mentions_any, tag_text, KeywordLexicon};

#[derive(Debug, Error)]
pub enum ForumError {
    #[error("forum {0:?} is on the roster but has no posts")]
    EmptyForum(String),
    #[error("unknown forum {0:?}")]
    UnknownForum(String),
    #[error("lexicon has no class {0:?}")]
    UnknownClass(String),
    #[error("posts file line {line}: {message}")]
    BadPost { line: usize, message: String },
    #[error("stats csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("stats csv row {row}: {message}")]
    BadRow { row: usize, message: String },
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Post {
    pub forum: String,
    pub post_id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub posted_at: Option<String>,
}

/// Reads line-delimited post records.
pub fn read_posts(reader: impl Read) -> Result<Vec<Post>, ForumError> {
    let mut posts = Vec::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let post = serde_json::from_str(&line).map_err(|e| ForumError::BadPost {
            line: i + 1,
            message: e.to_string(),
        })?;
        posts.push(post);
    }
    Ok(posts)
}

pub fn load_posts(path: &Path) -> Result<Vec<Post>, ForumError> {
    read_posts(File::open(path)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForumStats {
    pub forum: String,
    pub total_posts: u64,
    pub matching_posts: u64,
    pub share: f64,
}

impl ForumStats {
    pub fn new(forum: &str, total_posts: u64, matching_posts: u64) -> Self {
        assert!(matching_posts <= total_posts, "more matches than posts");
        let share = if total_posts == 0 {
            0.0
        } else {
            matching_posts as f64 / total_posts as f64
        };
        Self {
            forum: forum.to_owned(),
            total_posts,
            matching_posts,
            share,
        }
    }

    /// Exact test `matching / total == num / den`.
    pub fn share_equals(&self, num: u64, den: u64) -> bool {
        self.matching_posts as u128 * den as u128 == num as u128 * self.total_posts as u128
    }

    /// Exact test `lo <= share <= hi` for rational bounds `(num, den)`.
    pub fn share_within(&self, lo: (u64, u64), hi: (u64, u64)) -> bool {
        let m = self.matching_posts as u128;
        let t = self.total_posts as u128;
        m * lo.1 as u128 >= lo.0 as u128 * t && m * hi.1 as u128 <= hi.0 as u128 * t
    }

    pub fn share_decimal(&self, digits: u32) -> String {
        ratio_decimal(self.matching_posts, self.total_posts, digits)
    }
}

/// Share of posts per forum whose `class` keyword count is positive, sorted
/// by forum name. Every roster forum must have at least one post.
pub fn forum_keyword_stats(
    posts: &[Post],
    lexicon: &KeywordLexicon,
    class: &str,
    roster: &[String],
) -> Result<Vec<ForumStats>, ForumError> {
    if !lexicon.has_class(class) {
        return Err(ForumError::UnknownClass(class.to_owned()));
    }
    let mut counts: BTreeMap<&str, (u64, u64)> = BTreeMap::new();
    for name in roster {
        counts.entry(name.as_str()).or_default();
    }
    for post in posts {
        let entry = counts.entry(post.forum.as_str()).or_default();
        entry.0 += 1;
        if tag_text(&post.text, lexicon).get(class).is_some_and(|&n| n > 0) {
            entry.1 += 1;
        }
    }
    counts
        .into_iter()
        .map(|(forum, (total, matching))| {
            if total == 0 {
                Err(ForumError::EmptyForum(forum.to_owned()))
            } else {
                Ok(ForumStats::new(forum, total, matching))
            }
        })
        .collect()
}

pub const STATS_HEADER: [&str; 4] = ["forum", "total_posts", "matching_posts", "share"];

pub fn write_stats_csv(stats: &[ForumStats], out: impl Write) -> Result<(), ForumError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(STATS_HEADER)?;
    for s in stats {
        w.write_record([
            s.forum.clone(),
            s.total_posts.to_string(),
            s.matching_posts.to_string(),
            s.share_decimal(6),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn export_stats_csv(stats: &[ForumStats], path: &Path) -> Result<(), ForumError> {
    write_stats_csv(stats, File::create(path)?)
}

pub fn read_stats_csv(input: impl Read) -> Result<Vec<ForumStats>, ForumError> {
    let mut r = csv::Reader::from_reader(input);
    if !r.headers()?.iter().eq(STATS_HEADER) {
        return Err(ForumError::BadRow {
            row: 0,
            message: "unexpected header".into(),
        });
    }
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let bad = |message: &str| ForumError::BadRow {
            row: i + 1,
            message: message.to_owned(),
        };
        let total: u64 = rec[1].parse().map_err(|_| bad("total_posts"))?;
        let matching: u64 = rec[2].parse().map_err(|_| bad("matching_posts"))?;
        if matching > total {
            return Err(bad("matching_posts exceeds total_posts"));
        }
        let s = ForumStats::new(&rec[0], total, matching);
        if s.share_decimal(6) != rec[3] {
            return Err(bad("share disagrees with counts"));
        }
        out.push(s);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForumQuery {
    pub forum: String,
    pub keywords: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryHits {
    pub forum: String,
    pub keywords: Vec<String>,
    pub hit_posts: u64,
}

/// For each query, the number of the forum's posts mentioning any of its
/// keywords. A post matching several keywords counts once.
pub fn query_hit_counts(posts: &[Post], queries: &[ForumQuery]) -> Result<Vec<QueryHits>, ForumError> {
    let forums: BTreeSet<&str> = posts.iter().map(|p| p.forum.as_str()).collect();
    queries
        .iter()
        .map(|q| {
            if !forums.contains(q.forum.as_str()) {
                return Err(ForumError::UnknownForum(q.forum.clone()));
            }
            let hits = posts
                .iter()
                .filter(|p| p.forum == q.forum && mentions_any(&p.text, &q.keywords))
                .count() as u64;
            Ok(QueryHits {
                forum: q.forum.clone(),
                keywords: q.keywords.clone(),
                hit_posts: hits,
            })
        })
        .collect()
}

pub fn write_hits_csv(hits: &[QueryHits], out: impl Write) -> Result<(), ForumError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["forum", "searched", "hit_posts"])?;
    for h in hits {
        w.write_record([h.forum.clone(), h.keywords.join("; "), h.hit_posts.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
