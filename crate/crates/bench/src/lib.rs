//! Synthetic, seeded workloads shared by the benchmarks.

use darkwatch_core::textfeat::tfidf_text;
use darkwatch_core::{TermVector, Vocabulary};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const WORDS: [&str; 32] = [
    "botnet", "mirai", "sensor", "firmware", "exploit", "kit", "hacker", "hire", "escrow", "vendor", "webcam",
    "scada", "modbus", "market", "forum", "thread", "reply", "listing", "price", "bitcoin", "telnet", "default",
    "password", "panel", "loader", "ddos", "service", "freedom", "world", "guide", "tutorial", "access",
];

/// `n` pseudo-posts of 20 to 120 words each.
pub fn corpus(n: usize, seed: u64) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let len = rng.random_range(20..120);
            (0..len).map(|_| *WORDS.choose(&mut rng).unwrap()).collect::<Vec<_>>().join(" ")
        })
        .collect()
}

/// Corpus vectors with alternating labels.
pub fn labeled_vectors(n: usize, seed: u64) -> (Vocabulary, Vec<(TermVector, bool)>) {
    let texts = corpus(n, seed);
    let vocab = Vocabulary::build(texts.iter().map(String::as_str)).unwrap();
    let examples = texts
        .iter()
        .enumerate()
        .map(|(i, t)| (tfidf_text(t, &vocab), i % 2 == 0))
        .collect();
    (vocab, examples)
}

/// Mixed-case URLs with default ports, fragments and dot segments.
pub fn messy_urls(n: usize, seed: u64) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let port = if rng.random_bool(0.5) { ":80" } else { "" };
            format!("HTTP://Site{i}.Onion{port}/a/./b/../Thread-{}.html#post", rng.random_range(0..1000))
        })
        .collect()
}
