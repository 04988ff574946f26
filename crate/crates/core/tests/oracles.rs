//! Model numerics checked against independent evaluations written here.

use std::collections::HashMap;

use darkwatch_core::cluster::{adjusted_rand_index, kmeans_fit};
use darkwatch_core::score::{train, Hyperparams, ThreatModel};
use darkwatch_core::textfeat::{tfidf_text, tokenize};
use darkwatch_core::{TermVector, VocabHash, Vocabulary};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn naive_loss(w: &[f64], b: f64, lambda: f64, batch: &[(Vec<f64>, bool)]) -> f64 {
    let mut total = 0.0;
    for (x, y) in batch {
        let z: f64 = x.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() + b;
        let p = 1.0 / (1.0 + (-z).exp());
        total += if *y { -p.ln() } else { -(1.0 - p).ln() };
    }
    total / batch.len() as f64 + 0.5 * lambda * w.iter().map(|v| v * v).sum::<f64>()
}

fn random_instance(rng: &mut ChaCha8Rng) -> (ThreatModel, Vec<(TermVector, bool)>) {
    let dim = rng.random_range(2..8);
    let hash = VocabHash([7; 32]);
    let hp = Hyperparams { l2_lambda: rng.random_range(0.0..0.1), ..Hyperparams::default() };
    let mut model = ThreatModel::zeros_for(hash, dim, hp);
    model.weights = (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect();
    model.bias = rng.random_range(-1.0..1.0);
    let n = rng.random_range(2..10);
    let batch = (0..n)
        .map(|_| {
            let mut weights = Vec::new();
            for i in 0..dim {
                if rng.random_bool(0.6) {
                    weights.push((i, rng.random_range(0.05..1.0)));
                }
            }
            (TermVector::normalized(hash, dim, weights), rng.random_bool(0.5))
        })
        .collect();
    (model, batch)
}

#[test]
fn gradient_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let (model, batch) = random_instance(&mut rng);
        let dense: Vec<(Vec<f64>, bool)> = batch.iter().map(|(v, y)| (v.to_dense(), *y)).collect();
        let lambda = model.hyperparams.l2_lambda;
        let analytic = model.loss_and_gradient(&batch).unwrap();
        let loss = naive_loss(&model.weights, model.bias, lambda, &dense);
        assert!((analytic.loss - loss).abs() <= 1e-12 * loss.max(1.0));

        let rel = |a: f64, n: f64| (a - n).abs() / a.abs().max(n.abs()).max(1e-6);
        for j in 0..model.weights.len() {
            let mut plus = model.weights.clone();
            let mut minus = model.weights.clone();
            plus[j] += h;
            minus[j] -= h;
            let numeric = (naive_loss(&plus, model.bias, lambda, &dense) - naive_loss(&minus, model.bias, lambda, &dense)) / (2.0 * h);
            worst = worst.max(rel(analytic.grad_w[j], numeric));
        }
        let numeric_b = (naive_loss(&model.weights, model.bias + h, lambda, &dense)
            - naive_loss(&model.weights, model.bias - h, lambda, &dense))
            / (2.0 * h);
        worst = worst.max(rel(analytic.grad_b, numeric_b));
    }
    assert!(worst <= 1e-5, "max relative error {worst:e}");
}

#[test]
fn separable_seed_set_is_learned() {
    #[derive(serde::Deserialize)]
    struct Seed {
        text: String,
        label: String,
    }
    let body = std::fs::read_to_string(darkwatch_core::fixtures::fixture_root().join("seeds/labeled.jsonl")).unwrap();
    let seeds: Vec<Seed> = body.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(seeds.len(), 20);
    let vocab = Vocabulary::build(seeds.iter().map(|s| s.text.as_str())).unwrap();
    let examples: Vec<(TermVector, bool)> = seeds
        .iter()
        .map(|s| (tfidf_text(&s.text, &vocab), s.label == "relevant"))
        .collect();
    let hp = Hyperparams { learning_rate: 0.5, epochs: 500, l2_lambda: 0.0, seed: 0 };
    let out = train(&examples, hp, 0).unwrap();
    assert_eq!(out.loss_history.len(), 501);
    assert!(out.loss_history.windows(2).all(|w| w[1] <= w[0]));
    let correct = examples
        .iter()
        .filter(|(v, y)| (out.model.predict_score(v).unwrap() >= 0.5) == *y)
        .count();
    assert_eq!(correct, 20);
}

/// Straight evaluation of the weighting: tf = count / tokens, idf =
/// ln((1 + N) / (1 + df)) + 1, then scale to unit length.
fn brute_tfidf(doc: &str, corpus: &[&str]) -> HashMap<String, f64> {
    let n = corpus.len() as f64;
    let tokens = tokenize(doc);
    let mut raw = HashMap::new();
    for t in &tokens {
        if raw.contains_key(t) {
            continue;
        }
        let count = tokens.iter().filter(|x| *x == t).count() as f64;
        let df = corpus.iter().filter(|d| tokenize(d).contains(t)).count() as f64;
        raw.insert(t.clone(), count / tokens.len() as f64 * (((1.0 + n) / (1.0 + df)).ln() + 1.0));
    }
    let norm = raw.values().map(|v| v * v).sum::<f64>().sqrt();
    raw.into_iter().map(|(k, v)| (k, v / norm)).collect()
}

#[test]
fn tfidf_matches_brute_force() {
    let corpus = [
        "Botnet rental: botnet panels and botnet loaders",
        "Sensor dashboards exposed; sensor logins default",
        "Hacking services for hire, escrow accepted",
        "The free world needs freedom fighters",
        "botnet sensor hacking free",
    ];
    let vocab = Vocabulary::build(corpus).unwrap();
    for doc in corpus {
        let v = tfidf_text(doc, &vocab);
        let oracle = brute_tfidf(doc, &corpus);
        assert_eq!(v.entries().len(), oracle.len());
        for (term, expected) in &oracle {
            let got = v.get(vocab.index_of(term).unwrap());
            assert!((got - expected).abs() <= 1e-12, "{term}: {got} vs {expected}");
        }
        assert!((v.norm() - 1.0).abs() <= 1e-12);
    }
}

fn blobs(seed: u64) -> (Vec<TermVector>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hash = VocabHash([1; 32]);
    let mut points = Vec::new();
    let mut truth = Vec::new();
    for i in 0..15 {
        let c = i % 3;
        let w: Vec<(usize, f64)> = (0..3)
            .map(|d| (d, if d == c { 1.0 } else { rng.random_range(0.0..0.15) }))
            .collect();
        points.push(TermVector::normalized(hash, 3, w));
        truth.push(c);
    }
    (points, truth)
}

#[test]
fn kmeans_recovers_blobs() {
    for seed in 0..5 {
        let (points, truth) = blobs(seed);
        let fit = kmeans_fit(&points, 3, seed).unwrap();
        assert_eq!(adjusted_rand_index(&fit.assignments, &truth), 1.0);
        assert!(fit.inertia_history.windows(2).all(|w| w[1] <= w[0] + 1e-12));
        let all = kmeans_fit(&points, points.len(), seed).unwrap();
        assert_eq!(all.model.inertia, 0.0);
    }
}
