//! Weighted undirected graphs: kNN construction from feature vectors,
//! volumes, cuts, exhaustive conductance, and seeded subgraph sampling.

use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("graph must have at least one vertex")]
    Empty,
    #[error("k must be at least 1, got {0}")]
    InvalidK(usize),
    #[error("feature rows have inconsistent lengths: {0} vs {1}")]
    RaggedFeatures(usize, usize),
    #[error("sigma must be positive, got {0}")]
    InvalidSigma(f64),
    #[error("exhaustive conductance supports n <= {limit}, got {n}")]
    TooLargeForExhaustive { n: usize, limit: usize },
    #[error("vertex index {0} out of range for graph of {1} vertices")]
    VertexOutOfRange(usize, usize),
}

/// Undirected graph with positive edge weights. Edges are stored once with
/// `u < v`; weighted degrees are cached at construction.
#[derive(Debug, Clone)]
pub struct WeightedGraph {
    n: usize,
    edges: Vec<(usize, usize, f64)>,
    degrees: Vec<f64>,
    adj: Vec<Vec<(usize, f64)>>,
}

impl WeightedGraph {
    /// Builds a graph from an edge list; parallel edges are summed and
    /// self-loops rejected by debug assertion.
    pub fn from_edges(n: usize, raw: &[(usize, usize, f64)]) -> Result<Self, GraphError> {
        if n == 0 {
            return Err(GraphError::Empty);
        }
        let mut dedup = std::collections::BTreeMap::new();
        for &(a, b, w) in raw {
            debug_assert!(a != b, "self-loop {a}");
            if a >= n || b >= n {
                return Err(GraphError::VertexOutOfRange(a.max(b), n));
            }
            let key = (a.min(b), a.max(b));
            *dedup.entry(key).or_insert(0.0) += w;
        }
        let edges: Vec<(usize, usize, f64)> =
            dedup.into_iter().map(|((a, b), w)| (a, b, w)).collect();
        let mut degrees = vec![0.0; n];
        let mut adj = vec![Vec::new(); n];
        for &(a, b, w) in &edges {
            degrees[a] += w;
            degrees[b] += w;
            adj[a].push((b, w));
            adj[b].push((a, w));
        }
        for list in &mut adj {
            list.sort_by(|x, y| x.0.cmp(&y.0));
        }
        Ok(Self {
            n,
            edges,
            degrees,
            adj,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Edges as `(u, v, w)` with `u < v`, sorted lexicographically.
    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn degree(&self, v: usize) -> f64 {
        self.degrees[v]
    }

    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    /// Neighbors of `v` sorted by index, with edge weights.
    pub fn neighbors(&self, v: usize) -> &[(usize, f64)] {
        &self.adj[v]
    }

    /// Total volume: sum of all weighted degrees (twice the edge weight sum).
    pub fn total_volume(&self) -> f64 {
        self.degrees.iter().sum()
    }

    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return false;
        }
        let mut seen = vec![false; self.n];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for &(v, _) in &self.adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    stack.push(v);
                }
            }
        }
        count == self.n
    }
}

/// Subset of vertices, used for volume/cut/conductance queries.
#[derive(Debug, Clone)]
pub struct VertexSubset {
    bits: Vec<bool>,
    count: usize,
}

impl VertexSubset {
    pub fn new(n: usize) -> Self {
        Self {
            bits: vec![false; n],
            count: 0,
        }
    }

    pub fn from_indices(n: usize, members: &[usize]) -> Self {
        let mut s = Self::new(n);
        for &m in members {
            s.insert(m);
        }
        s
    }

    pub fn insert(&mut self, v: usize) {
        if !self.bits[v] {
            self.bits[v] = true;
            self.count += 1;
        }
    }

    pub fn contains(&self, v: usize) -> bool {
        self.bits[v]
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }
}

/// Sum of weighted degrees over the subset.
pub fn volume(g: &WeightedGraph, s: &VertexSubset) -> f64 {
    (0..g.n()).filter(|&v| s.contains(v)).map(|v| g.degree(v)).sum()
}

/// Total weight of edges with exactly one endpoint in the subset.
pub fn cut(g: &WeightedGraph, s: &VertexSubset) -> f64 {
    g.edges()
        .iter()
        .filter(|&&(u, v, _)| s.contains(u) != s.contains(v))
        .map(|&(_, _, w)| w)
        .sum()
}

const CONDUCTANCE_LIMIT: usize = 20;

/// Exhaustive conductance `min_S cut(S) / min(vol(S), vol(V\S))` over all
/// nonempty proper subsets. Exponential; restricted to `n <= 20`.
/// Disconnected graphs return 0 (with a warning log).
pub fn conductance(g: &WeightedGraph) -> Result<f64, GraphError> {
    let n = g.n();
    if n > CONDUCTANCE_LIMIT {
        return Err(GraphError::TooLargeForExhaustive {
            n,
            limit: CONDUCTANCE_LIMIT,
        });
    }
    if !g.is_connected() {
        log::warn!("conductance of a disconnected graph is 0 by convention");
        return Ok(0.0);
    }
    if n < 2 {
        return Ok(0.0);
    }
    let total = g.total_volume();
    let mut best = f64::INFINITY;
    // Fixing vertex 0 inside S halves the enumeration (S vs complement).
    for mask in 0u32..(1u32 << (n - 1)) {
        let mut in_s = vec![false; n];
        in_s[0] = true;
        let mut vol_s = g.degree(0);
        for i in 0..n - 1 {
            if mask >> i & 1 == 1 {
                in_s[i + 1] = true;
                vol_s += g.degree(i + 1);
            }
        }
        if vol_s >= total {
            continue; // S = V
        }
        let cut_s: f64 = g
            .edges()
            .iter()
            .filter(|&&(u, v, _)| in_s[u] != in_s[v])
            .map(|&(_, _, w)| w)
            .sum();
        let denom = vol_s.min(total - vol_s);
        if denom > 0.0 {
            best = best.min(cut_s / denom);
        }
    }
    Ok(best)
}

/// Standardizes columns to zero mean, unit variance. Constant columns are
/// centered and left at scale 1 to avoid dividing by zero.
pub fn standardize(features: &[Vec<f64>]) -> Vec<Vec<f64>> {
    if features.is_empty() {
        return Vec::new();
    }
    let n = features.len() as f64;
    let d = features[0].len();
    let mut mean = vec![0.0; d];
    for row in features {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v / n;
        }
    }
    let mut var = vec![0.0; d];
    for row in features {
        for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
            *s += (v - m) * (v - m) / n;
        }
    }
    let std: Vec<f64> = var
        .iter()
        .map(|&v| if v.sqrt() > 1e-12 { v.sqrt() } else { 1.0 })
        .collect();
    features
        .iter()
        .map(|row| {
            row.iter()
                .zip(&mean)
                .zip(&std)
                .map(|((v, m), s)| (v - m) / s)
                .collect()
        })
        .collect()
}

/// Builds a symmetrized kNN similarity graph with Gaussian edge weights
/// `exp(-||x_i - x_j||^2 / (2 sigma^2))`.
///
/// Each vertex nominates its `k` most similar others (ties broken toward the
/// lower index); the edge set is the union of nominations, so the result has
/// between `k*n/2` and `k*n` edges for `k <= n-1`.
pub fn build_knn_graph(
    features: &[Vec<f64>],
    k: usize,
    sigma: f64,
    standardize_features: bool,
) -> Result<WeightedGraph, GraphError> {
    let n = features.len();
    if n == 0 {
        return Err(GraphError::Empty);
    }
    if k == 0 {
        return Err(GraphError::InvalidK(k));
    }
    if !(sigma > 0.0) {
        return Err(GraphError::InvalidSigma(sigma));
    }
    let d = features[0].len();
    for row in features {
        if row.len() != d {
            return Err(GraphError::RaggedFeatures(d, row.len()));
        }
    }
    let data = if standardize_features {
        standardize(features)
    } else {
        features.to_vec()
    };
    let k = k.min(n.saturating_sub(1));
    let mut edges = Vec::new();
    let mut weights = vec![0.0; n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let d2: f64 = data[i]
                    .iter()
                    .zip(&data[j])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                weights[j] = (-d2 / (2.0 * sigma * sigma)).exp();
            }
        }
        let mut order: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        order.sort_by(|&a, &b| {
            weights[b]
                .partial_cmp(&weights[a])
                .unwrap()
                .then(a.cmp(&b))
        });
        for &j in order.iter().take(k) {
            edges.push((i.min(j), i.max(j), weights[j]));
        }
    }
    edges.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
    edges.dedup_by(|a, b| a.0 == b.0 && a.1 == b.1);
    WeightedGraph::from_edges(n, &edges)
}

/// One sampled subgraph: original vertex ids plus the induced graph.
#[derive(Debug, Clone)]
pub struct SubgraphSample {
    /// Original vertex id of each local vertex.
    pub vertices: Vec<usize>,
    pub graph: WeightedGraph,
}

/// Partitions an epoch into `floor(n / n_prime)` induced subgraphs of exactly
/// `n_prime` vertices, sampled without replacement: each subgraph draws
/// `n_seed` random seeds from the remaining pool and grows by breadth-first
/// expansion (neighbors in weight-descending, then index order), reseeding
/// randomly when expansion stalls. If `n_prime > n` the whole graph is
/// returned as the single sample.
pub fn subgraph_sample<R: Rng>(
    g: &WeightedGraph,
    n_prime: usize,
    n_seed: usize,
    rng: &mut R,
) -> Vec<SubgraphSample> {
    let n = g.n();
    if n_prime >= n {
        return vec![SubgraphSample {
            vertices: (0..n).collect(),
            graph: g.clone(),
        }];
    }
    let count = n / n_prime;
    let mut available = vec![true; n];
    let mut pool: Vec<usize> = (0..n).collect();
    let draw = |pool: &mut Vec<usize>, available: &[bool], rng: &mut R| -> Option<usize> {
        while !pool.is_empty() {
            let idx = rng.gen_range(0..pool.len());
            let v = pool.swap_remove(idx);
            if available[v] {
                return Some(v);
            }
        }
        None
    };
    let mut samples = Vec::with_capacity(count);
    for _ in 0..count {
        let mut taken = Vec::with_capacity(n_prime);
        let mut queue = std::collections::VecDeque::new();
        let take = |v: usize,
                        available: &mut [bool],
                        taken: &mut Vec<usize>,
                        queue: &mut std::collections::VecDeque<usize>| {
            available[v] = false;
            taken.push(v);
            queue.push_back(v);
        };
        for _ in 0..n_seed.min(n_prime) {
            match draw(&mut pool, &available, rng) {
                Some(v) => take(v, &mut available, &mut taken, &mut queue),
                None => break,
            }
        }
        while taken.len() < n_prime {
            match queue.pop_front() {
                Some(u) => {
                    let mut nbrs: Vec<(usize, f64)> = g
                        .neighbors(u)
                        .iter()
                        .copied()
                        .filter(|&(v, _)| available[v])
                        .collect();
                    nbrs.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
                    for (v, _) in nbrs {
                        if taken.len() >= n_prime {
                            break;
                        }
                        if available[v] {
                            take(v, &mut available, &mut taken, &mut queue);
                        }
                    }
                }
                None => match draw(&mut pool, &available, rng) {
                    Some(v) => take(v, &mut available, &mut taken, &mut queue),
                    None => break,
                },
            }
        }
        taken.sort_unstable();
        let local: std::collections::HashMap<usize, usize> = taken
            .iter()
            .enumerate()
            .map(|(local, &orig)| (orig, local))
            .collect();
        let sub_edges: Vec<(usize, usize, f64)> = g
            .edges()
            .iter()
            .filter_map(|&(u, v, w)| match (local.get(&u), local.get(&v)) {
                (Some(&a), Some(&b)) => Some((a, b, w)),
                _ => None,
            })
            .collect();
        let graph = WeightedGraph::from_edges(taken.len(), &sub_edges)
            .expect("induced subgraph is nonempty");
        samples.push(SubgraphSample {
            vertices: taken,
            graph,
        });
    }
    samples
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn triangle() -> WeightedGraph {
        WeightedGraph::from_edges(3, &[(0, 1, 1.0), (0, 2, 1.0), (1, 2, 1.0)]).unwrap()
    }

    #[test]
    fn triangle_volume_fixture() {
        let g = triangle();
        let all = VertexSubset::from_indices(3, &[0, 1, 2]);
        let one = VertexSubset::from_indices(3, &[0]);
        assert_eq!(volume(&g, &all), 6.0);
        assert_eq!(volume(&g, &one), 2.0);
    }

    #[test]
    fn path_cut_fixture() {
        let g = WeightedGraph::from_edges(3, &[(0, 1, 1.0), (1, 2, 1.0)]).unwrap();
        let mid = VertexSubset::from_indices(3, &[1]);
        assert_eq!(cut(&g, &mid), 2.0);
    }

    #[test]
    fn bridge_conductance_fixture() {
        let g = WeightedGraph::from_edges(
            6,
            &[
                (0, 1, 1.0),
                (0, 2, 1.0),
                (1, 2, 1.0),
                (3, 4, 1.0),
                (3, 5, 1.0),
                (4, 5, 1.0),
                (2, 3, 1.0),
            ],
        )
        .unwrap();
        let phi = conductance(&g).unwrap();
        assert!((phi - 1.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn disconnected_conductance_is_zero() {
        let g = WeightedGraph::from_edges(4, &[(0, 1, 1.0), (2, 3, 1.0)]).unwrap();
        assert_eq!(conductance(&g).unwrap(), 0.0);
    }
}
