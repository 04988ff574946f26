//! Seeded k-means over TF-IDF vectors.
//!
//! Points are put in a canonical order (by their sparse entries) before
//! k-means++ seeding, so the fitted partition does not depend on the order
//! the caller passes them in. Distances are squared Euclidean against dense
//! centroids.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::store::{Category, DocId};
use crate::textfeat::{TermVector, VocabHash, Vocabulary};

pub const MAX_ITERATIONS: usize = 300;
pub const DEFAULT_K: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClusterError {
    #[error("k must be in 1..={n}, got {k}")]
    BadK { k: usize, n: usize },
    #[error("vector dimension {found} does not match model dimension {expected}")]
    DimMismatch { expected: usize, found: usize },
    #[error("no cluster {0}")]
    BadCluster(usize),
    #[error("vocabulary does not match the clustered vectors")]
    VocabMismatch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    pub k: usize,
    pub centroids: Vec<Vec<f64>>,
    pub seed: u64,
    pub inertia: f64,
    pub vocab: VocabHash,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterFit {
    pub model: ClusterModel,
    /// Cluster of each input vector, in input order.
    pub assignments: Vec<usize>,
    /// Inertia after every assignment step, starting with the seeding.
    pub inertia_history: Vec<f64>,
}

fn squared_distance(v: &TermVector, centroid: &[f64]) -> f64 {
    let mut total = 0.0;
    let mut entries = v.entries().iter().peekable();
    for (j, &c) in centroid.iter().enumerate() {
        let x = match entries.peek() {
            Some(&&(i, w)) if i as usize == j => {
                entries.next();
                w
            }
            _ => 0.0,
        };
        let d = x - c;
        total += d * d;
    }
    total
}

fn canonical_cmp(a: &TermVector, b: &TermVector) -> Ordering {
    for (x, y) in a.entries().iter().zip(b.entries()) {
        let o = x.0.cmp(&y.0).then_with(|| x.1.total_cmp(&y.1));
        if o != Ordering::Equal {
            return o;
        }
    }
    a.entries().len().cmp(&b.entries().len())
}

fn nearest(v: &TermVector, centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (id, c) in centroids.iter().enumerate() {
        let d = squared_distance(v, c);
        if d < best.1 {
            best = (id, d);
        }
    }
    best
}

fn assign_all(points: &[&TermVector], centroids: &[Vec<f64>]) -> (Vec<usize>, Vec<f64>) {
    points.iter().map(|p| nearest(p, centroids)).unzip()
}

fn plus_plus_init(points: &[&TermVector], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut chosen = vec![false; n];
    let first = rng.random_range(0..n);
    chosen[first] = true;
    let mut centroids = vec![points[first].to_dense()];
    let mut d2: Vec<f64> = points.iter().map(|p| squared_distance(p, &centroids[0])).collect();

    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &d) in d2.iter().enumerate() {
                acc += d;
                if d > 0.0 && acc > target {
                    pick = Some(i);
                    break;
                }
            }
            // rounding can leave the target just past the final sum
            pick.unwrap_or_else(|| d2.iter().rposition(|&d| d > 0.0).expect("total > 0"))
        } else {
            chosen.iter().position(|&c| !c).expect("k <= n")
        };
        chosen[pick] = true;
        let c = points[pick].to_dense();
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(squared_distance(p, &c));
        }
        centroids.push(c);
    }
    centroids
}

fn update_centroids(
    points: &[&TermVector],
    assignments: &[usize],
    distances: &[f64],
    k: usize,
    dim: usize,
) -> Vec<Vec<f64>> {
    let mut sums = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (p, &a) in points.iter().zip(assignments) {
        counts[a] += 1;
        for &(i, w) in p.entries() {
            sums[a][i as usize] += w;
        }
    }
    let mut taken = distances.to_vec();
    for (sum, &count) in sums.iter_mut().zip(&counts) {
        if count > 0 {
            let n = count as f64;
            sum.iter_mut().for_each(|x| *x /= n);
            continue;
        }
        // empty cluster: move it onto the point farthest from its centroid
        let far = (0..points.len())
            .max_by(|&a, &b| taken[a].total_cmp(&taken[b]).then(b.cmp(&a)))
            .expect("points non-empty");
        taken[far] = f64::NEG_INFINITY;
        *sum = points[far].to_dense();
    }
    sums
}

/// Fits `k` clusters with k-means++ seeding and Lloyd iterations, stopping
/// when assignments stop changing or after [`MAX_ITERATIONS`].
pub fn kmeans_fit(vectors: &[TermVector], k: usize, seed: u64) -> Result<ClusterFit, ClusterError> {
    let n = vectors.len();
    if k == 0 || k > n {
        return Err(ClusterError::BadK { k, n });
    }
    let dim = vectors[0].dim();
    let vocab = vectors[0].vocab();
    if let Some(v) = vectors.iter().find(|v| v.dim() != dim) {
        return Err(ClusterError::DimMismatch {
            expected: dim,
            found: v.dim(),
        });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| canonical_cmp(&vectors[a], &vectors[b]));
    let points: Vec<&TermVector> = order.iter().map(|&i| &vectors[i]).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = plus_plus_init(&points, k, &mut rng);
    let (mut assignments, mut distances) = assign_all(&points, &centroids);
    let mut history = vec![distances.iter().sum::<f64>()];

    for _ in 0..MAX_ITERATIONS {
        centroids = update_centroids(&points, &assignments, &distances, k, dim);
        let (next, next_dist) = assign_all(&points, &centroids);
        history.push(next_dist.iter().sum());
        let stable = next == assignments;
        assignments = next;
        distances = next_dist;
        if stable {
            break;
        }
    }

    let mut by_input = vec![0; n];
    for (canon, &input) in order.iter().enumerate() {
        by_input[input] = assignments[canon];
    }
    let inertia = *history.last().expect("history non-empty");
    Ok(ClusterFit {
        model: ClusterModel {
            k,
            centroids,
            seed,
            inertia,
            vocab,
        },
        assignments: by_input,
        inertia_history: history,
    })
}

impl ClusterModel {
    pub fn dim(&self) -> usize {
        self.centroids.first().map_or(0, Vec::len)
    }

    /// Nearest centroid; ties go to the lowest cluster id.
    pub fn assign(&self, v: &TermVector) -> Result<usize, ClusterError> {
        if v.dim() != self.dim() {
            return Err(ClusterError::DimMismatch {
                expected: self.dim(),
                found: v.dim(),
            });
        }
        Ok(nearest(v, &self.centroids).0)
    }

    /// The `m` heaviest centroid terms, ties broken lexicographically.
    pub fn top_terms(&self, cluster: usize, vocab: &Vocabulary, m: usize) -> Result<Vec<String>, ClusterError> {
        let centroid = self.centroids.get(cluster).ok_or(ClusterError::BadCluster(cluster))?;
        if vocab.hash() != self.vocab || vocab.len() != centroid.len() {
            return Err(ClusterError::VocabMismatch);
        }
        let mut idx: Vec<usize> = (0..centroid.len()).collect();
        idx.sort_by(|&a, &b| {
            centroid[b]
                .total_cmp(&centroid[a])
                .then_with(|| vocab.term(a).cmp(&vocab.term(b)))
        });
        Ok(idx
            .into_iter()
            .take(m)
            .filter_map(|i| vocab.term(i).map(str::to_owned))
            .collect())
    }
}

/// Adjusted Rand index between two labelings of the same points.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len(), "labelings differ in length");
    let n = a.len() as f64;
    let comb2 = |x: f64| x * (x - 1.0) / 2.0;
    let mut table: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let mut rows: BTreeMap<usize, f64> = BTreeMap::new();
    let mut cols: BTreeMap<usize, f64> = BTreeMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *table.entry((x, y)).or_default() += 1.0;
        *rows.entry(x).or_default() += 1.0;
        *cols.entry(y).or_default() += 1.0;
    }
    let index: f64 = table.values().map(|&c| comb2(c)).sum();
    let sum_rows: f64 = rows.values().map(|&c| comb2(c)).sum();
    let sum_cols: f64 = cols.values().map(|&c| comb2(c)).sum();
    let expected = sum_rows * sum_cols / comb2(n);
    let max = (sum_rows + sum_cols) / 2.0;
    if max == expected {
        return 1.0;
    }
    (index - expected) / (max - expected)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSummary {
    pub id: usize,
    pub size: usize,
    pub top_terms: Vec<String>,
    /// Majority category among members that have one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub category: Option<Category>,
    pub members: Vec<DocId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterReport {
    pub k: usize,
    pub seed: u64,
    pub inertia: f64,
    pub clusters: Vec<ClusterSummary>,
}

/// Summarizes a fit for the analyst; `members[i]` is the document behind
/// the i-th clustered vector.
pub fn cluster_report(
    fit: &ClusterFit,
    members: &[(DocId, Option<Category>)],
    vocab: &Vocabulary,
    top_m: usize,
) -> Result<ClusterReport, ClusterError> {
    let mut clusters = Vec::with_capacity(fit.model.k);
    for id in 0..fit.model.k {
        let mut ids: Vec<DocId> = Vec::new();
        let mut votes: BTreeMap<Category, usize> = BTreeMap::new();
        for ((doc, cat), &a) in members.iter().zip(&fit.assignments) {
            if a == id {
                ids.push(doc.clone());
                if let Some(c) = cat {
                    *votes.entry(*c).or_default() += 1;
                }
            }
        }
        ids.sort();
        let category = votes
            .iter()
            .max_by(|x, y| x.1.cmp(y.1).then(y.0.cmp(x.0)))
            .map(|(c, _)| *c);
        clusters.push(ClusterSummary {
            id,
            size: ids.len(),
            top_terms: fit.model.top_terms(id, vocab, top_m)?,
            category,
            members: ids,
        });
    }
    Ok(ClusterReport {
        k: fit.model.k,
        seed: fit.model.seed,
        inertia: fit.model.inertia,
        clusters,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h() -> VocabHash {
        VocabHash([3; 32])
    }

    fn pt(dim: usize, w: &[(usize, f64)]) -> TermVector {
        TermVector::normalized(h(), dim, w.iter().copied())
    }

    #[test]
    fn bad_k() {
        let pts = vec![pt(2, &[(0, 1.0)])];
        assert_eq!(kmeans_fit(&pts, 0, 1), Err(ClusterError::BadK { k: 0, n: 1 }));
        assert_eq!(kmeans_fit(&pts, 2, 1), Err(ClusterError::BadK { k: 2, n: 1 }));
        assert!(kmeans_fit(&[], 1, 1).is_err());
    }

    #[test]
    fn single_cluster_is_the_mean() {
        let pts = vec![pt(2, &[(0, 1.0)]), pt(2, &[(1, 1.0)]), pt(2, &[(0, 1.0), (1, 1.0)])];
        let fit = kmeans_fit(&pts, 1, 9).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mean = [(1.0 + s) / 3.0, (1.0 + s) / 3.0];
        for (c, m) in fit.model.centroids[0].iter().zip(mean) {
            assert!((c - m).abs() < 1e-15);
        }
        assert!(fit.assignments.iter().all(|&a| a == 0));
    }

    #[test]
    fn one_cluster_per_point_has_zero_inertia() {
        let pts: Vec<_> = (0..6).map(|i| pt(6, &[(i, 1.0), ((i + 1) % 6, 0.5)])).collect();
        let fit = kmeans_fit(&pts, 6, 11).unwrap();
        assert_eq!(fit.model.inertia, 0.0);
        // duplicates still work: every cluster ends up exact
        let dup = vec![pts[0].clone(), pts[0].clone(), pts[1].clone()];
        assert_eq!(kmeans_fit(&dup, 3, 2).unwrap().model.inertia, 0.0);
    }

    #[test]
    fn assign_ties_and_bounds() {
        let model = ClusterModel {
            k: 3,
            centroids: vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![0.0, 1.0]],
            seed: 0,
            inertia: 0.0,
            vocab: h(),
        };
        assert_eq!(model.assign(&pt(2, &[(1, 1.0)])).unwrap(), 1);
        assert_eq!(model.assign(&pt(2, &[(0, 1.0), (1, 1.0)])).unwrap(), 0);
        assert_eq!(model.assign(&pt(2, &[(0, 1.0)])).unwrap(), 0);
        assert_eq!(
            model.assign(&pt(3, &[(0, 1.0)])),
            Err(ClusterError::DimMismatch { expected: 2, found: 3 })
        );
    }

    #[test]
    fn top_terms_rules() {
        let vocab = Vocabulary::build(["market listing vendor", "market forum"]).unwrap();
        let dim = vocab.len();
        let idx = |t: &str| vocab.index_of(t).unwrap();
        let mut centroid = vec![0.0; dim];
        centroid[idx("market")] = 0.7;
        centroid[idx("vendor")] = 0.2;
        centroid[idx("listing")] = 0.2;
        let model = ClusterModel {
            k: 1,
            centroids: vec![centroid],
            seed: 0,
            inertia: 0.0,
            vocab: vocab.hash(),
        };
        assert_eq!(model.top_terms(0, &vocab, 3).unwrap(), ["market", "listing", "vendor"]);
        assert!(model.top_terms(0, &vocab, 0).unwrap().is_empty());
        assert_eq!(model.top_terms(0, &vocab, 99).unwrap().len(), dim);
        assert_eq!(model.top_terms(1, &vocab, 1), Err(ClusterError::BadCluster(1)));
    }

    #[test]
    fn ari_reference_values() {
        assert_eq!(adjusted_rand_index(&[0, 0, 1, 1], &[1, 1, 0, 0]), 1.0);
        // standard example: ARI([0,0,1,1],[0,0,1,2]) = 0.5714285714...
        let v = adjusted_rand_index(&[0, 0, 1, 1], &[0, 0, 1, 2]);
        assert!((v - 4.0 / 7.0).abs() < 1e-12, "{v}");
        assert_eq!(adjusted_rand_index(&[0, 0, 0], &[0, 0, 0]), 1.0);
    }
}
