//! Dendrogram decoding from ball embeddings.
//!
//! Embeddings are first pushed out to a common radius, so pairwise structure
//! is purely angular. Cluster closeness is the largest geodesic-origin
//! distance over cross pairs. A larger value means the connecting geodesic
//! stays far from the origin, i.e. the points are angularly close, so
//! agglomeration repeatedly merges the argmax pair (single linkage over a
//! similarity). The fast path runs Kruskal over the negated values: a
//! minimum spanning tree of the distance form, whose accepted-edge order
//! reproduces the naive merge sequence when all values are distinct.

use log::warn;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::entropy::{Hierarchy, TreeError};
use crate::geometry;

#[derive(Debug, Error)]
pub enum DecodeError {
    #[error("decoding needs at least two points, got {0}")]
    TooFewPoints(usize),
    #[error("newick parse error at byte {0}: {1}")]
    Newick(usize, String),
    #[error("newick leaf name '{0}' is not an index in 0..{1}")]
    BadLeafName(String, usize),
    #[error("merge {0} breaks the id convention (a < b < new_id = n_leaves + step)")]
    BadMerge(usize),
    #[error(transparent)]
    Tree(#[from] TreeError),
}

/// How a tree is decoded from embeddings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecodeMode {
    /// Quadratic-memory agglomeration, exact argmax at every step.
    Naive,
    /// kNN candidate edges plus spanning-tree insertion.
    Fast,
}

/// Binary merge history over `n` leaves: leaves are ids `0..n`, merge `t`
/// creates id `n + t`, and the last merge is the root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dendrogram {
    n_leaves: usize,
    merges: Vec<(usize, usize, usize)>,
}

impl Dendrogram {
    pub fn new(n_leaves: usize, merges: Vec<(usize, usize, usize)>) -> Result<Self, DecodeError> {
        if n_leaves < 2 {
            return Err(DecodeError::TooFewPoints(n_leaves));
        }
        let mut parent = vec![None; 2 * n_leaves - 1];
        for (t, &(a, b, c)) in merges.iter().enumerate() {
            if c != n_leaves + t || a >= b || b >= c {
                return Err(DecodeError::BadMerge(t));
            }
            parent[a] = Some(c);
            parent[b] = Some(c);
        }
        // Delegate the remaining structure checks (single root, coverage).
        Hierarchy::from_parents(n_leaves, parent)?;
        Ok(Self { n_leaves, merges })
    }

    pub fn n_leaves(&self) -> usize {
        self.n_leaves
    }

    pub fn merges(&self) -> &[(usize, usize, usize)] {
        &self.merges
    }

    pub fn to_hierarchy(&self) -> Hierarchy {
        let mut parent = vec![None; 2 * self.n_leaves - 1];
        for &(a, b, c) in &self.merges {
            parent[a] = Some(c);
            parent[b] = Some(c);
        }
        Hierarchy::from_parents(self.n_leaves, parent).expect("validated at construction")
    }

    /// Newick text with leaf names from `labels` (row indices by default).
    pub fn to_newick(&self, labels: Option<&[String]>) -> String {
        let mut names: Vec<String> = (0..self.n_leaves)
            .map(|i| match labels {
                Some(ls) => ls[i].clone(),
                None => i.to_string(),
            })
            .collect();
        names.reserve(self.merges.len());
        for &(a, b, _) in &self.merges {
            let merged = format!("({},{})", names[a], names[b]);
            names.push(merged);
        }
        let mut out = names.pop().expect("at least one node");
        out.push(';');
        out
    }

    /// JSON merge list `[[a, b, new_id], ...]`.
    pub fn merges_json(&self) -> String {
        serde_json::to_string(&self.merges).expect("plain integers serialize")
    }
}

/// Parses a Newick tree (arbitrary arity, branch lengths ignored) whose leaf
/// names are the vertex indices `0..n`.
pub fn parse_newick(text: &str) -> Result<Hierarchy, DecodeError> {
    enum Node {
        Leaf(String),
        Internal(Vec<Node>),
    }

    struct Parser<'a> {
        bytes: &'a [u8],
        pos: usize,
    }

    impl<'a> Parser<'a> {
        fn error(&self, msg: &str) -> DecodeError {
            DecodeError::Newick(self.pos, msg.to_string())
        }

        fn skip_ws(&mut self) {
            while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
                self.pos += 1;
            }
        }

        fn node(&mut self) -> Result<Node, DecodeError> {
            self.skip_ws();
            if self.pos < self.bytes.len() && self.bytes[self.pos] == b'(' {
                self.pos += 1;
                let mut children = vec![self.node()?];
                loop {
                    self.skip_ws();
                    match self.bytes.get(self.pos) {
                        Some(b',') => {
                            self.pos += 1;
                            children.push(self.node()?);
                        }
                        Some(b')') => {
                            self.pos += 1;
                            break;
                        }
                        _ => return Err(self.error("expected ',' or ')'")),
                    }
                }
                // Optional internal label and branch length are ignored.
                self.name();
                self.length();
                if children.len() < 2 {
                    return Err(self.error("internal node needs at least two children"));
                }
                Ok(Node::Internal(children))
            } else {
                let name = self.name();
                if name.is_empty() {
                    return Err(self.error("expected a leaf name"));
                }
                self.length();
                Ok(Node::Leaf(name))
            }
        }

        fn name(&mut self) -> String {
            let start = self.pos;
            while self.pos < self.bytes.len()
                && !matches!(self.bytes[self.pos], b'(' | b')' | b',' | b':' | b';')
                && !self.bytes[self.pos].is_ascii_whitespace()
            {
                self.pos += 1;
            }
            String::from_utf8_lossy(&self.bytes[start..self.pos]).into_owned()
        }

        fn length(&mut self) {
            self.skip_ws();
            if self.bytes.get(self.pos) == Some(&b':') {
                self.pos += 1;
                while self.pos < self.bytes.len()
                    && matches!(self.bytes[self.pos], b'0'..=b'9' | b'.' | b'-' | b'+' | b'e' | b'E')
                {
                    self.pos += 1;
                }
            }
        }
    }

    let mut p = Parser { bytes: text.as_bytes(), pos: 0 };
    let root = p.node()?;
    p.skip_ws();
    if p.bytes.get(p.pos) == Some(&b';') {
        p.pos += 1;
        p.skip_ws();
    }
    if p.pos != p.bytes.len() {
        return Err(p.error("trailing characters after tree"));
    }

    // Count leaves, then assign ids: leaves by parsed index, internals after.
    fn count_leaves(node: &Node) -> usize {
        match node {
            Node::Leaf(_) => 1,
            Node::Internal(ch) => ch.iter().map(count_leaves).sum(),
        }
    }
    let n = count_leaves(&root);
    if n == 0 {
        return Err(DecodeError::Newick(0, "empty tree".into()));
    }
    let mut internal_count = 0usize;
    fn count_internals(node: &Node, acc: &mut usize) {
        if let Node::Internal(ch) = node {
            *acc += 1;
            for c in ch {
                count_internals(c, acc);
            }
        }
    }
    count_internals(&root, &mut internal_count);

    let mut parent = vec![None; n + internal_count];
    let mut next_internal = n;
    let mut seen = vec![false; n];
    fn assign(
        node: &Node,
        parent_of: Option<usize>,
        parent: &mut Vec<Option<usize>>,
        next_internal: &mut usize,
        seen: &mut Vec<bool>,
        n: usize,
    ) -> Result<(), DecodeError> {
        match node {
            Node::Leaf(name) => {
                let idx: usize = name
                    .parse()
                    .map_err(|_| DecodeError::BadLeafName(name.clone(), n))?;
                if idx >= n || seen[idx] {
                    return Err(DecodeError::BadLeafName(name.clone(), n));
                }
                seen[idx] = true;
                parent[idx] = parent_of;
                Ok(())
            }
            Node::Internal(ch) => {
                let id = *next_internal;
                *next_internal += 1;
                parent[id] = parent_of;
                for c in ch {
                    assign(c, Some(id), parent, next_internal, seen, n)?;
                }
                Ok(())
            }
        }
    }
    assign(&root, None, &mut parent, &mut next_internal, &mut seen, n)?;
    Ok(Hierarchy::from_parents(n, parent)?)
}

/// Rescales every point to Euclidean norm `rho_max`, keeping directions.
/// Zero-norm points receive a deterministic pseudo-random direction seeded
/// by their index (with a warning), so decoding stays reproducible.
pub fn normalize_to_boundary(points: &[Vec<f64>], rho_max: f64) -> Vec<Vec<f64>> {
    assert!(rho_max > 0.0 && rho_max < 1.0, "rho_max must lie in (0, 1)");
    points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let norm = p.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm < 1e-15 {
                warn!("point {i} has zero norm; assigning a seeded direction");
                let mut rng = ChaCha8Rng::seed_from_u64(i as u64);
                let dir = loop {
                    let cand: Vec<f64> =
                        (0..p.len()).map(|_| rng.gen_range(-1.0..=1.0)).collect();
                    let n2: f64 = cand.iter().map(|v| v * v).sum();
                    if n2 > 1e-4 && n2 <= 1.0 {
                        break cand;
                    }
                };
                let dn = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
                dir.iter().map(|v| v * rho_max / dn).collect()
            } else {
                p.iter().map(|v| v * rho_max / norm).collect()
            }
        })
        .collect()
}

/// Cluster closeness: the largest geodesic-origin distance over cross pairs.
pub fn closeness(a: &[usize], b: &[usize], z: &[Vec<f64>]) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for &i in a {
        for &j in b {
            best = best.max(geometry::geodesic_origin_distance(&z[i], &z[j]));
        }
    }
    best
}

/// Single-linkage agglomeration over a symmetric similarity matrix:
/// repeatedly merge the pair of clusters with the largest cross-pair value
/// (ties go to the smallest `(min_id, max_id)` pair of cluster ids) while
/// more than two clusters remain, then attach the final two to the root.
pub fn single_linkage(similarity: &[Vec<f64>]) -> Result<Dendrogram, DecodeError> {
    let n = similarity.len();
    if n < 2 {
        return Err(DecodeError::TooFewPoints(n));
    }
    let total = 2 * n - 1;
    // Pairwise value between live cluster ids; single linkage lets the
    // merged row be the elementwise max of its parents.
    let mut value = vec![vec![f64::NEG_INFINITY; total]; total];
    for i in 0..n {
        for j in i + 1..n {
            value[i][j] = similarity[i][j];
            value[j][i] = similarity[i][j];
        }
    }
    let mut live: Vec<usize> = (0..n).collect();
    let mut merges = Vec::with_capacity(n - 1);
    let mut next = n;
    while live.len() > 2 {
        let (mut ba, mut bb, mut bv) = (usize::MAX, usize::MAX, f64::NEG_INFINITY);
        for (s, &a) in live.iter().enumerate() {
            for &b in &live[s + 1..] {
                let v = value[a.min(b)][a.max(b)];
                if v > bv {
                    (ba, bb, bv) = (a.min(b), a.max(b), v);
                }
            }
        }
        let c = next;
        next += 1;
        for &other in &live {
            if other == ba || other == bb {
                continue;
            }
            let v = value[ba][other].max(value[bb][other]);
            value[c][other] = v;
            value[other][c] = v;
        }
        live.retain(|&x| x != ba && x != bb);
        live.push(c);
        merges.push((ba, bb, c));
    }
    let (a, b) = (live[0].min(live[1]), live[0].max(live[1]));
    merges.push((a, b, next));
    Ok(Dendrogram { n_leaves: n, merges })
}

/// Exact decoding: single linkage under cluster closeness (the largest
/// geodesic-origin distance over cross pairs). Expects boundary-normalized
/// points.
pub fn decode_tree_naive(z: &[Vec<f64>]) -> Result<Dendrogram, DecodeError> {
    let n = z.len();
    if n < 2 {
        return Err(DecodeError::TooFewPoints(n));
    }
    let mut value = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let d = geometry::geodesic_origin_distance(&z[i], &z[j]);
            value[i][j] = d;
            value[j][i] = d;
        }
    }
    single_linkage(&value)
}

/// Candidate edges for the fast path: per vertex, the `k` partners with the
/// largest geodesic-origin distance. With all points on one radius the value
/// is strictly decreasing in angular separation, so in two dimensions the
/// search is an angular-sort sweep; higher dimensions fall back to brute
/// force.
fn knn_candidates(z: &[Vec<f64>], k: usize) -> Vec<(usize, usize, f64)> {
    let n = z.len();
    let k = k.max(1).min(n - 1);
    let mut picked = std::collections::BTreeMap::new();
    if z[0].len() == 2 {
        let mut order: Vec<usize> = (0..n).collect();
        let angle: Vec<f64> = z.iter().map(|p| p[1].atan2(p[0])).collect();
        order.sort_by(|&a, &b| angle[a].partial_cmp(&angle[b]).unwrap().then(a.cmp(&b)));
        let gap = |x: f64, y: f64| {
            let d = (x - y).abs() % std::f64::consts::TAU;
            d.min(std::f64::consts::TAU - d)
        };
        for (pos, &i) in order.iter().enumerate() {
            // k angular neighbors on each side cover the k closest.
            let mut cands: Vec<(usize, f64)> = (1..=k.min(n - 1))
                .flat_map(|step| {
                    let fwd = order[(pos + step) % n];
                    let bwd = order[(pos + n - step) % n];
                    [fwd, bwd]
                })
                .filter(|&j| j != i)
                .map(|j| (j, gap(angle[i], angle[j])))
                .collect();
            cands.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)));
            cands.dedup_by_key(|c| c.0);
            for &(j, _) in cands.iter().take(k) {
                let key = (i.min(j), i.max(j));
                picked
                    .entry(key)
                    .or_insert_with(|| geometry::geodesic_origin_distance(&z[key.0], &z[key.1]));
            }
        }
    } else {
        for i in 0..n {
            let mut cands: Vec<(usize, f64)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| (j, geometry::geodesic_origin_distance(&z[i], &z[j])))
                .collect();
            cands.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
            for &(j, d) in cands.iter().take(k) {
                picked.entry((i.min(j), i.max(j))).or_insert(d);
            }
        }
    }
    picked.into_iter().map(|((a, b), d)| (a, b, d)).collect()
}

struct UnionFind {
    parent: Vec<usize>,
    cluster: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect(), cluster: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn cluster_of(&mut self, x: usize) -> usize {
        let r = self.find(x);
        self.cluster[r]
    }

    fn union(&mut self, a: usize, b: usize, new_cluster: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        self.parent[ra] = rb;
        self.cluster[rb] = new_cluster;
    }
}

/// Spanning-tree decoding over kNN candidate edges. Equivalent to the naive
/// agglomeration when `k = n - 1` and all pairwise values are distinct. If
/// the candidate graph is disconnected the remaining components are joined
/// through their best cross pairs (with a warning).
pub fn decode_tree_fast(z: &[Vec<f64>], k: usize) -> Result<Dendrogram, DecodeError> {
    let n = z.len();
    if n < 2 {
        return Err(DecodeError::TooFewPoints(n));
    }
    let mut edges = knn_candidates(z, k);
    // Descending similarity = ascending distance form (Kruskal order).
    edges.sort_by(|a, b| b.2.partial_cmp(&a.2).unwrap().then((a.0, a.1).cmp(&(b.0, b.1))));
    let mut uf = UnionFind::new(n);
    let mut merges = Vec::with_capacity(n - 1);
    let mut next = n;
    for &(a, b, _) in &edges {
        if merges.len() == n - 1 {
            break;
        }
        if uf.find(a) != uf.find(b) {
            let (ca, cb) = (uf.cluster_of(a), uf.cluster_of(b));
            merges.push((ca.min(cb), ca.max(cb), next));
            uf.union(a, b, next);
            next += 1;
        }
    }
    if merges.len() < n - 1 {
        warn!(
            "kNN candidate graph is disconnected ({} merges of {}); joining components by best cross pairs",
            merges.len(),
            n - 1
        );
        while merges.len() < n - 1 {
            let mut best: Option<(usize, usize, f64)> = None;
            for i in 0..n {
                for j in i + 1..n {
                    if uf.find(i) == uf.find(j) {
                        continue;
                    }
                    let d = geometry::geodesic_origin_distance(&z[i], &z[j]);
                    if best.map_or(true, |(_, _, bd)| d > bd) {
                        best = Some((i, j, d));
                    }
                }
            }
            let (i, j, _) = best.expect("disconnected components have cross pairs");
            let (ca, cb) = (uf.cluster_of(i), uf.cluster_of(j));
            merges.push((ca.min(cb), ca.max(cb), next));
            uf.union(i, j, next);
            next += 1;
        }
    }
    Ok(Dendrogram { n_leaves: n, merges })
}

/// Normalizes a copy of the embeddings and decodes with the chosen mode.
pub fn decode_embeddings(
    ball: &[Vec<f64>],
    mode: DecodeMode,
    k: usize,
    rho_max: f64,
) -> Result<Dendrogram, DecodeError> {
    let z = normalize_to_boundary(ball, rho_max);
    match mode {
        DecodeMode::Naive => decode_tree_naive(&z),
        DecodeMode::Fast => decode_tree_fast(&z, k),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn on_circle(deg: f64, rho: f64) -> Vec<f64> {
        let a = deg.to_radians();
        vec![rho * a.cos(), rho * a.sin()]
    }

    #[test]
    fn normalization_scales_and_preserves_direction() {
        let pts = vec![vec![0.2, 0.0], vec![0.1, 0.1], vec![-0.3, 0.4]];
        let out = normalize_to_boundary(&pts, 0.99);
        assert!((out[0][0] - 0.99).abs() < 1e-12 && out[0][1].abs() < 1e-12);
        for (p, q) in pts.iter().zip(&out) {
            let nq = q.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((nq - 0.99).abs() < 1e-12);
            let cross = p[0] * q[1] - p[1] * q[0];
            assert!(cross.abs() < 1e-12, "direction changed");
            assert!(p[0] * q[0] + p[1] * q[1] > 0.0, "direction flipped");
        }
    }

    #[test]
    fn zero_norm_points_get_stable_directions() {
        let pts = vec![vec![0.0, 0.0], vec![0.5, 0.0]];
        let a = normalize_to_boundary(&pts, 0.9);
        let b = normalize_to_boundary(&pts, 0.9);
        assert_eq!(a, b);
        let n0 = a[0].iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((n0 - 0.9).abs() < 1e-12);
    }

    #[test]
    fn closeness_of_singletons_is_the_pair_value() {
        let z = normalize_to_boundary(&[on_circle(0.0, 0.5), on_circle(30.0, 0.5)], 0.999);
        let want = geometry::geodesic_origin_distance(&z[0], &z[1]);
        assert_eq!(closeness(&[0], &[1], &z), want);
        // Swapped order changes the inversion center, so only the math (not
        // the bits) is symmetric.
        assert!((closeness(&[1], &[0], &z) - want).abs() < 1e-9);
    }

    #[test]
    fn near_pair_scores_above_antipodal_pair() {
        // Two nearly antipodal points and one close to the first.
        let z = vec![on_circle(0.0, 0.999), on_circle(12.0, 0.999), on_circle(178.0, 0.999)];
        let near = geometry::geodesic_origin_distance(&z[0], &z[1]);
        let far = geometry::geodesic_origin_distance(&z[0], &z[2]);
        assert!(near > far);
        for (x, y) in [(0usize, 1usize), (0, 2)] {
            let direct = geometry::geodesic_origin_distance(&z[x], &z[y]);
            let sampled = geometry::sampled_origin_distance(&z[x], &z[y], 4000);
            assert!((direct - sampled).abs() < 1e-6, "{direct} vs {sampled}");
        }
    }

    #[test]
    fn two_points_make_the_forced_tree() {
        let z = normalize_to_boundary(&[on_circle(10.0, 0.4), on_circle(200.0, 0.4)], 0.999);
        let d = decode_tree_naive(&z).unwrap();
        assert_eq!(d.merges(), &[(0, 1, 2)]);
        let f = decode_tree_fast(&z, 5).unwrap();
        assert_eq!(f.merges(), &[(0, 1, 2)]);
    }

    #[test]
    fn clearly_closest_pair_merges_first() {
        let z = normalize_to_boundary(
            &[on_circle(0.0, 0.7), on_circle(8.0, 0.7), on_circle(140.0, 0.7)],
            0.999,
        );
        let d01 = geometry::sampled_origin_distance(&z[0], &z[1], 4000);
        let d02 = geometry::sampled_origin_distance(&z[0], &z[2], 4000);
        let d12 = geometry::sampled_origin_distance(&z[1], &z[2], 4000);
        assert!(d01 > d02.max(d12));
        let d = decode_tree_naive(&z).unwrap();
        assert_eq!(d.merges(), &[(0, 1, 3), (2, 3, 4)]);
    }

    #[test]
    fn exact_ties_break_toward_lower_indices() {
        // Points 2 and 3 are the exact negations of points 0 and 1, so the
        // two tight pairs evaluate to bitwise-identical scores (negation is
        // exact) and the merge order must fall back to the id tie-break.
        let a = on_circle(20.0, 0.999);
        let b = on_circle(55.0, 0.999);
        let neg = |p: &[f64]| p.iter().map(|v| -v).collect::<Vec<f64>>();
        let z = vec![a.clone(), b.clone(), neg(&a), neg(&b)];
        let d01 = geometry::geodesic_origin_distance(&z[0], &z[1]);
        let d23 = geometry::geodesic_origin_distance(&z[2], &z[3]);
        assert_eq!(d01.to_bits(), d23.to_bits(), "fixture must tie exactly");
        let d = decode_tree_naive(&z).unwrap();
        assert_eq!(d.merges(), &[(0, 1, 4), (2, 3, 5), (4, 5, 6)]);
        let f = decode_tree_fast(&z, 3).unwrap();
        assert_eq!(f.merges(), d.merges());
    }

    #[test]
    fn fast_matches_naive_on_random_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(40);
        for trial in 0..10 {
            let n = rng.gen_range(2..=40);
            let pts: Vec<Vec<f64>> = (0..n)
                .map(|_| {
                    let a: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                    let r: f64 = rng.gen_range(0.05..0.9);
                    vec![r * a.cos(), r * a.sin()]
                })
                .collect();
            let z = normalize_to_boundary(&pts, 0.999);
            let naive = decode_tree_naive(&z).unwrap();
            let fast = decode_tree_fast(&z, n - 1).unwrap();
            assert_eq!(naive.merges(), fast.merges(), "trial {trial}, n={n}");
        }
    }

    #[test]
    fn disconnected_candidates_fall_back_gracefully() {
        // Two tight pairs; k=1 keeps the candidate graph in two components.
        let z = normalize_to_boundary(
            &[on_circle(0.0, 0.5), on_circle(4.0, 0.5), on_circle(180.0, 0.5), on_circle(184.0, 0.5)],
            0.999,
        );
        let fast = decode_tree_fast(&z, 1).unwrap();
        let naive = decode_tree_naive(&z).unwrap();
        assert_eq!(fast.merges().len(), 3);
        assert_eq!(fast.merges(), naive.merges());
    }

    #[test]
    fn rotation_does_not_change_the_tree() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let pts: Vec<Vec<f64>> = (0..12)
            .map(|_| {
                let a: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                let r: f64 = rng.gen_range(0.1..0.9);
                vec![r * a.cos(), r * a.sin()]
            })
            .collect();
        let theta: f64 = 1.234;
        let rot: Vec<Vec<f64>> = pts
            .iter()
            .map(|p| {
                vec![
                    p[0] * theta.cos() - p[1] * theta.sin(),
                    p[0] * theta.sin() + p[1] * theta.cos(),
                ]
            })
            .collect();
        let a = decode_embeddings(&pts, DecodeMode::Naive, 0, 0.999).unwrap();
        let b = decode_embeddings(&rot, DecodeMode::Naive, 0, 0.999).unwrap();
        assert_eq!(a.merges(), b.merges());
    }

    #[test]
    fn dendrogram_is_binary_and_newick_round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let pts: Vec<Vec<f64>> = (0..9)
            .map(|_| {
                let a: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                vec![0.6 * a.cos(), 0.6 * a.sin()]
            })
            .collect();
        let d = decode_embeddings(&pts, DecodeMode::Fast, 3, 0.999).unwrap();
        let h = d.to_hierarchy();
        assert_eq!(h.node_count(), 2 * 9 - 1);
        for node in 9..h.node_count() {
            assert_eq!(h.children(node).len(), 2);
        }

        let text = d.to_newick(None);
        let parsed = parse_newick(&text).unwrap();
        // Compare leaf-pair lca depths: identical values pin the same shape.
        let dh = h.depths();
        let dp = parsed.depths();
        for i in 0..9 {
            for j in i + 1..9 {
                assert_eq!(dh[h.lca(i, j)], dp[parsed.lca(i, j)], "pair ({i},{j})");
            }
        }
    }

    #[test]
    fn newick_parser_handles_arity_names_and_lengths() {
        let h = parse_newick("((0:0.5,1:0.5)inner:1.0,2:1.5,3:0.1)root;").unwrap();
        assert_eq!(h.n_leaves(), 4);
        assert_eq!(h.children(h.root()).len(), 3);
        assert!(parse_newick("((0,1),0);").is_err(), "duplicate leaf");
        assert!(parse_newick("((0,1),5);").is_err(), "out of range leaf");
        assert!(parse_newick("(0,1);extra").is_err(), "trailing text");
    }

    #[test]
    fn merge_json_round_trips() {
        let d = Dendrogram::new(3, vec![(0, 2, 3), (1, 3, 4)]).unwrap();
        let text = d.merges_json();
        let back: Vec<(usize, usize, usize)> = serde_json::from_str(&text).unwrap();
        assert_eq!(back, d.merges().to_vec());
    }
}
