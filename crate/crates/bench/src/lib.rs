//! Shared fixtures for the criterion benchmarks.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use hypcse_core::graph::WeightedGraph;

/// Points in the open unit ball, mildly spread in radius so the distance
/// kernel sees a realistic mix of magnitudes.
pub fn ball_points(n: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let radius = rng.gen_range(0.2..0.95);
            loop {
                let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let norm = v.iter().map(|c| c * c).sum::<f64>().sqrt();
                if norm > 1e-9 {
                    return v.iter().map(|c| c / norm * radius).collect();
                }
            }
        })
        .collect()
}

/// Feature matrix with uniform entries, the raw input of the graph builder.
pub fn feature_matrix(n: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect()
}

/// A connected sparse graph: a random spanning tree plus extra edges.
pub fn sparse_graph(n: usize, extra: usize, seed: u64) -> WeightedGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::with_capacity(n - 1 + extra);
    for v in 1..n {
        let u = rng.gen_range(0..v);
        edges.push((u, v, rng.gen_range(0.2..2.0)));
    }
    for _ in 0..extra {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        if a != b {
            edges.push((a.min(b), a.max(b), rng.gen_range(0.2..2.0)));
        }
    }
    WeightedGraph::from_edges(n, &edges).expect("benchmark graph must be valid")
}
