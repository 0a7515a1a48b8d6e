//! Synthetic data and scoring helpers shared by the integration tests.
#![allow(dead_code)]

use std::time::Instant;

use fuzzytopic::{Document, EmbeddingSet};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// `per` Gaussian samples around each center; ground-truth labels follow
/// center order.
pub fn gaussian_blobs(centers: &[Vec<f64>], per: usize, sigma: f64, seed: u64) -> (EmbeddingSet, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, sigma).unwrap();
    let mut rows = Vec::with_capacity(centers.len() * per);
    let mut labels = Vec::with_capacity(centers.len() * per);
    for (k, c) in centers.iter().enumerate() {
        for _ in 0..per {
            rows.push(c.iter().map(|&v| v + noise.sample(&mut rng)).collect::<Vec<f64>>());
            labels.push(k);
        }
    }
    let docs = (0..rows.len())
        .map(|i| Document::new(i as i64 + 1, format!("synthetic document {i}")))
        .collect();
    (EmbeddingSet::from_rows(docs, &rows).unwrap(), labels)
}

/// `k` centers in `dim` dimensions, pairwise exactly `spacing` apart.
pub fn simplex_centers(k: usize, dim: usize, spacing: f64) -> Vec<Vec<f64>> {
    assert!(k <= dim);
    let scale = spacing / 2f64.sqrt();
    (0..k)
        .map(|c| (0..dim).map(|j| if j == c { scale } else { 0.0 }).collect())
        .collect()
}

/// Adjusted Rand index between two labelings of the same points.
pub fn adjusted_rand_index<A: Ord + Copy, B: Ord + Copy>(a: &[A], b: &[B]) -> f64 {
    use std::collections::BTreeMap;
    assert_eq!(a.len(), b.len());
    let n = a.len() as f64;
    let choose2 = |x: f64| x * (x - 1.0) / 2.0;
    let mut table: BTreeMap<(A, B), f64> = BTreeMap::new();
    let mut rows: BTreeMap<A, f64> = BTreeMap::new();
    let mut cols: BTreeMap<B, f64> = BTreeMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *table.entry((x, y)).or_default() += 1.0;
        *rows.entry(x).or_default() += 1.0;
        *cols.entry(y).or_default() += 1.0;
    }
    let index: f64 = table.values().map(|&v| choose2(v)).sum();
    let sum_a: f64 = rows.values().map(|&v| choose2(v)).sum();
    let sum_b: f64 = cols.values().map(|&v| choose2(v)).sum();
    let expected = sum_a * sum_b / choose2(n);
    let max = (sum_a + sum_b) / 2.0;
    if (max - expected).abs() < f64::EPSILON {
        return 1.0;
    }
    (index - expected) / (max - expected)
}

/// Prints one acceptance line and returns whether it passed.
pub fn report(id: &str, passed: bool, start: Instant, detail: impl std::fmt::Display) -> bool {
    // Written to the raw handle so the line shows without --nocapture.
    let line = format!(
        "{id} {} ({:.1}s) {detail}\n",
        if passed { "PASS" } else { "FAIL" },
        start.elapsed().as_secs_f64()
    );
    let _ = std::io::Write::write_all(&mut std::io::stderr(), line.as_bytes());
    passed
}
