//! Discrete structural entropy of a graph under a rooted hierarchy, plus
//! exhaustive enumeration of hierarchies for small leaf counts.
//!
//! The entropy of graph `G` under hierarchy `T` is
//! `H = -sum_a (g_a / V) * log2(vol_a / vol_parent(a))` over all non-root
//! nodes `a`, where `g_a` is the weight crossing the subtree boundary,
//! `vol_a` the summed degrees of leaves below `a`, and `V` the total volume.
//! An equivalent form sums `w_ij * log2(vol_lca(i,j))` over edges and
//! subtracts the degree entropy; both are provided and cross-checked.

use crate::graph::{GraphError, WeightedGraph};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("expected {0} labels, got {1}")]
    LabelCount(usize, usize),
    #[error("dendrogram purity is undefined: no two points share a label")]
    NoSameLabelPair,
}

#[derive(Debug, Error)]
pub enum TreeError {
    #[error("hierarchy must have exactly one root, found {0}")]
    RootCount(usize),
    #[error("node {0} has a parent index {1} out of range")]
    BadParent(usize, usize),
    #[error("leaf {0} may not have children")]
    LeafWithChildren(usize),
    #[error("internal node {0} has {1} children; at least 2 required")]
    UnaryNode(usize, usize),
    #[error("hierarchy contains a cycle or unreachable node {0}")]
    Unreachable(usize),
    #[error("leaf count {0} exceeds enumeration limit {1}")]
    EnumerationTooLarge(usize, usize),
}

/// Rooted hierarchy over `n` labeled leaves. Nodes `0..n` are the leaves
/// (leaf `i` is graph vertex `i`); higher indices are internal nodes. Every
/// internal node has at least two children.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hierarchy {
    n_leaves: usize,
    parent: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
    root: usize,
}

impl Hierarchy {
    /// Builds and validates a hierarchy from per-node parent links.
    /// `parent[i] = None` marks the root; exactly one is required.
    pub fn from_parents(n_leaves: usize, parent: Vec<Option<usize>>) -> Result<Self, TreeError> {
        let m = parent.len();
        let mut children = vec![Vec::new(); m];
        let mut root = None;
        let mut roots = 0;
        for (i, &p) in parent.iter().enumerate() {
            match p {
                None => {
                    roots += 1;
                    root = Some(i);
                }
                Some(p) => {
                    if p >= m {
                        return Err(TreeError::BadParent(i, p));
                    }
                    children[p].push(i);
                }
            }
        }
        if roots != 1 {
            return Err(TreeError::RootCount(roots));
        }
        let root = root.unwrap();
        for i in 0..m {
            if i < n_leaves {
                if !children[i].is_empty() {
                    return Err(TreeError::LeafWithChildren(i));
                }
            } else if children[i].len() < 2 {
                return Err(TreeError::UnaryNode(i, children[i].len()));
            }
        }
        // Reachability doubles as the cycle check.
        let mut seen = vec![false; m];
        let mut stack = vec![root];
        seen[root] = true;
        while let Some(u) = stack.pop() {
            for &c in &children[u] {
                if !seen[c] {
                    seen[c] = true;
                    stack.push(c);
                }
            }
        }
        if let Some(i) = seen.iter().position(|&s| !s) {
            return Err(TreeError::Unreachable(i));
        }
        Ok(Self {
            n_leaves,
            parent,
            children,
            root,
        })
    }

    /// Root with all leaves as direct children (the one-level hierarchy).
    pub fn flat(n_leaves: usize) -> Self {
        if n_leaves == 1 {
            return Self {
                n_leaves: 1,
                parent: vec![None],
                children: vec![Vec::new()],
                root: 0,
            };
        }
        let mut parent = vec![Some(n_leaves); n_leaves];
        parent.push(None);
        Self::from_parents(n_leaves, parent).expect("flat hierarchy is valid")
    }

    pub fn n_leaves(&self) -> usize {
        self.n_leaves
    }

    pub fn node_count(&self) -> usize {
        self.parent.len()
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn parent(&self, node: usize) -> Option<usize> {
        self.parent[node]
    }

    pub fn parents(&self) -> &[Option<usize>] {
        &self.parent
    }

    pub fn children(&self, node: usize) -> &[usize] {
        &self.children[node]
    }

    pub fn is_leaf(&self, node: usize) -> bool {
        node < self.n_leaves
    }

    /// Depth of each node, root at 0.
    pub fn depths(&self) -> Vec<usize> {
        let mut depth = vec![0usize; self.node_count()];
        let mut stack = vec![self.root];
        while let Some(u) = stack.pop() {
            for &c in &self.children[u] {
                depth[c] = depth[u] + 1;
                stack.push(c);
            }
        }
        depth
    }

    /// Lowest common ancestor of two nodes.
    pub fn lca(&self, a: usize, b: usize) -> usize {
        let depth = self.depths();
        self.lca_with_depths(a, b, &depth)
    }

    fn lca_with_depths(&self, mut a: usize, mut b: usize, depth: &[usize]) -> usize {
        while depth[a] > depth[b] {
            a = self.parent[a].expect("non-root has parent");
        }
        while depth[b] > depth[a] {
            b = self.parent[b].expect("non-root has parent");
        }
        while a != b {
            a = self.parent[a].expect("non-root has parent");
            b = self.parent[b].expect("non-root has parent");
        }
        a
    }

    /// Subtree volume of every node: sum of `degrees` over the leaves below.
    pub fn subtree_volumes(&self, degrees: &[f64]) -> Vec<f64> {
        assert_eq!(degrees.len(), self.n_leaves, "one degree per leaf");
        let mut vol = vec![0.0; self.node_count()];
        for (i, &d) in degrees.iter().enumerate() {
            vol[i] = d;
        }
        for &node in self.postorder().iter() {
            if !self.is_leaf(node) {
                vol[node] = self.children[node].iter().map(|&c| vol[c]).sum();
            }
        }
        vol
    }

    /// Nodes ordered children-before-parents.
    pub fn postorder(&self) -> Vec<usize> {
        let mut order = Vec::with_capacity(self.node_count());
        let mut stack = vec![self.root];
        while let Some(u) = stack.pop() {
            order.push(u);
            for &c in &self.children[u] {
                stack.push(c);
            }
        }
        order.reverse();
        order
    }
}

fn check_leaves(g: &WeightedGraph, h: &Hierarchy) {
    assert_eq!(
        g.n(),
        h.n_leaves(),
        "hierarchy must have one leaf per graph vertex"
    );
}

/// Boundary weight `g_a` for every tree node: the total weight of graph
/// edges with exactly one endpoint below the node.
pub fn boundary_weights(g: &WeightedGraph, h: &Hierarchy) -> Vec<f64> {
    check_leaves(g, h);
    let depth = h.depths();
    let mut cut = vec![0.0; h.node_count()];
    for &(u, v, w) in g.edges() {
        let l = h.lca_with_depths(u, v, &depth);
        let mut walk = |mut x: usize| {
            while x != l {
                cut[x] += w;
                x = h.parent(x).expect("lca is an ancestor");
            }
        };
        walk(u);
        walk(v);
    }
    cut
}

/// Structural entropy from the definition: each non-root node `a` with
/// positive boundary weight contributes `-(g_a / V) * log2(vol_a / vol_p)`.
pub fn structural_entropy(g: &WeightedGraph, h: &Hierarchy) -> f64 {
    check_leaves(g, h);
    let total = g.total_volume();
    if total <= 0.0 {
        return 0.0;
    }
    let vol = h.subtree_volumes(g.degrees());
    let cut = boundary_weights(g, h);
    let mut sum = 0.0;
    for node in 0..h.node_count() {
        let Some(p) = h.parent(node) else { continue };
        if cut[node] > 0.0 {
            sum -= cut[node] / total * (vol[node] / vol[p]).log2();
        }
    }
    sum
}

/// Structural entropy in the edge/LCA form:
/// `(2/V) * sum_edges w * log2(vol_lca) - (1/V) * sum_i d_i * log2(d_i)`.
/// Agrees with [`structural_entropy`] on every graph and hierarchy.
pub fn structural_entropy_lca(g: &WeightedGraph, h: &Hierarchy) -> f64 {
    check_leaves(g, h);
    let total = g.total_volume();
    if total <= 0.0 {
        return 0.0;
    }
    let degree_term: f64 = g
        .degrees()
        .iter()
        .filter(|&&d| d > 0.0)
        .map(|&d| d * d.log2())
        .sum();
    2.0 / total * se_cost(g, h) - degree_term / total
}

/// The edge cost `sum_edges w_ij * log2(vol_lca(i,j))`. Structural entropy
/// is an affine function of this quantity, so minimizing one minimizes the
/// other for a fixed graph.
pub fn se_cost(g: &WeightedGraph, h: &Hierarchy) -> f64 {
    check_leaves(g, h);
    let vol = h.subtree_volumes(g.degrees());
    let depth = h.depths();
    g.edges()
        .iter()
        .map(|&(u, v, w)| w * vol[h.lca_with_depths(u, v, &depth)].log2())
        .sum()
}

/// One-dimensional structural entropy: the Shannon entropy of the degree
/// distribution, equal to the entropy of the flat hierarchy.
pub fn one_dim_entropy(g: &WeightedGraph) -> f64 {
    let total = g.total_volume();
    if total <= 0.0 {
        return 0.0;
    }
    g.degrees()
        .iter()
        .filter(|&&d| d > 0.0)
        .map(|&d| -(d / total) * (d / total).log2())
        .sum()
}

const ENUMERATION_LIMIT: usize = 8;

/// All rooted hierarchies over `n` labeled leaves with no unary internal
/// nodes. Counts grow as 1, 1, 4, 26, 236, 2752, 39208 for n = 1..=7.
pub fn enumerate_hierarchies(n: usize) -> Result<Vec<Hierarchy>, TreeError> {
    if n > ENUMERATION_LIMIT {
        return Err(TreeError::EnumerationTooLarge(n, ENUMERATION_LIMIT));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    if n == 1 {
        return Ok(vec![Hierarchy::flat(1)]);
    }
    let leaves: Vec<usize> = (0..n).collect();
    let shapes = shapes_over(&leaves);
    Ok(shapes.iter().map(|s| shape_to_hierarchy(n, s)).collect())
}

/// All full binary hierarchies over `n` labeled leaves, streamed to a
/// callback. Counts are the double factorials (2n-3)!!: 1, 3, 15, 105 for
/// n = 2..=5.
pub fn for_each_binary_hierarchy<F: FnMut(&Hierarchy)>(n: usize, mut f: F) {
    if n == 0 {
        return;
    }
    if n == 1 {
        f(&Hierarchy::flat(1));
        return;
    }
    // A binary tree on k leaves arises from exactly one tree on k-1 leaves
    // by splitting one of its 2k-3 edges (counting a virtual root edge), so
    // iterating the mixed-radix tuple of edge choices enumerates each tree
    // once.
    let mut choice = vec![0usize; n.saturating_sub(2)];
    loop {
        f(&binary_from_choices(n, &choice));
        let mut k = 0;
        loop {
            if k == choice.len() {
                return;
            }
            choice[k] += 1;
            if choice[k] < 2 * (k + 3) - 3 {
                break;
            }
            choice[k] = 0;
            k += 1;
        }
    }
}

/// Materialized [`for_each_binary_hierarchy`], for small `n`.
pub fn enumerate_binary_hierarchies(n: usize) -> Result<Vec<Hierarchy>, TreeError> {
    if n > ENUMERATION_LIMIT {
        return Err(TreeError::EnumerationTooLarge(n, ENUMERATION_LIMIT));
    }
    let mut out = Vec::new();
    for_each_binary_hierarchy(n, |h| out.push(h.clone()));
    Ok(out)
}

const BINARY_ENUMERATION_LIMIT: usize = 9;

/// Exhaustive minimum structural entropy with a witness tree. With
/// `binary_only` the search covers full binary hierarchies (feasible up to
/// 9 leaves); otherwise all hierarchies (up to 8 leaves).
pub fn min_se_bruteforce(
    g: &WeightedGraph,
    binary_only: bool,
) -> Result<(Hierarchy, f64), TreeError> {
    let n = g.n();
    let mut best: Option<(f64, Hierarchy)> = None;
    let consider = |h: &Hierarchy, best: &mut Option<(f64, Hierarchy)>| {
        let e = structural_entropy(g, h);
        if best.as_ref().map_or(true, |(b, _)| e < *b) {
            *best = Some((e, h.clone()));
        }
    };
    if binary_only {
        if n > BINARY_ENUMERATION_LIMIT {
            return Err(TreeError::EnumerationTooLarge(n, BINARY_ENUMERATION_LIMIT));
        }
        for_each_binary_hierarchy(n, |h| consider(h, &mut best));
    } else {
        for h in enumerate_hierarchies(n)? {
            consider(&h, &mut best);
        }
    }
    let (e, h) = best.expect("at least one hierarchy exists");
    Ok((h, e))
}

/// Checks the conductance lower bound: the normalized entropy
/// `structural_entropy / one_dim_entropy` of any hierarchy is at least the
/// graph conductance (up to 1e-9 slack).
pub fn check_conductance_bound(g: &WeightedGraph, h: &Hierarchy) -> Result<bool, GraphError> {
    let phi = crate::graph::conductance(g)?;
    let h1 = one_dim_entropy(g);
    if h1 <= 0.0 {
        return Ok(true); // edgeless graph: both sides are zero
    }
    Ok(structural_entropy(g, h) / h1 >= phi - 1e-9)
}

/// Leaf count below every node.
fn subtree_leaf_counts(h: &Hierarchy) -> Vec<usize> {
    let mut count = vec![0usize; h.node_count()];
    for leaf in 0..h.n_leaves() {
        count[leaf] = 1;
    }
    for &node in h.postorder().iter() {
        if !h.is_leaf(node) {
            count[node] = h.children(node).iter().map(|&c| count[c]).sum();
        }
    }
    count
}

/// Dendrogram purity: the mean, over all unordered same-label leaf pairs,
/// of the label's fraction among the leaves under the pair's LCA.
pub fn dendrogram_purity(h: &Hierarchy, labels: &[usize]) -> Result<f64, MetricError> {
    let n = h.n_leaves();
    if labels.len() != n {
        return Err(MetricError::LabelCount(n, labels.len()));
    }
    let classes = labels.iter().map(|&l| l + 1).max().unwrap_or(0);
    let mut per_class: Vec<Vec<f64>> = vec![vec![0.0; classes]; h.node_count()];
    for (leaf, &l) in labels.iter().enumerate() {
        per_class[leaf][l] = 1.0;
    }
    for &node in h.postorder().iter() {
        if !h.is_leaf(node) {
            for c in 0..classes {
                per_class[node][c] = h.children(node).iter().map(|&ch| per_class[ch][c]).sum();
            }
        }
    }
    let leaf_count = subtree_leaf_counts(h);
    let depth = h.depths();
    let mut total = 0.0;
    let mut pairs = 0usize;
    for i in 0..n {
        for j in i + 1..n {
            if labels[i] != labels[j] {
                continue;
            }
            let a = h.lca_with_depths(i, j, &depth);
            total += per_class[a][labels[i]] / leaf_count[a] as f64;
            pairs += 1;
        }
    }
    if pairs == 0 {
        return Err(MetricError::NoSameLabelPair);
    }
    Ok(total / pairs as f64)
}

/// Dasgupta's cost in the similarity form: `sum_edges w_ij * |leaves(lca)|`.
/// Lower is better for similarity weights.
pub fn dasgupta_cost(g: &WeightedGraph, h: &Hierarchy) -> f64 {
    check_leaves(g, h);
    let leaf_count = subtree_leaf_counts(h);
    let depth = h.depths();
    g.edges()
        .iter()
        .map(|&(u, v, w)| w * leaf_count[h.lca_with_depths(u, v, &depth)] as f64)
        .sum()
}

enum Shape {
    Leaf(usize),
    Node(Vec<Shape>),
}

/// Trees over a labeled leaf set, via the root partition: every tree is a
/// set partition of the leaves into >= 2 blocks with a tree on each block.
fn shapes_over(leaves: &[usize]) -> Vec<Shape> {
    if leaves.len() == 1 {
        return vec![Shape::Leaf(leaves[0])];
    }
    let mut out = Vec::new();
    for partition in set_partitions(leaves.len()) {
        let block_count = partition.iter().max().map_or(0, |&b| b + 1);
        if block_count < 2 {
            continue;
        }
        let mut blocks: Vec<Vec<usize>> = vec![Vec::new(); block_count];
        for (i, &b) in partition.iter().enumerate() {
            blocks[b].push(leaves[i]);
        }
        let per_block: Vec<Vec<Shape>> = blocks.iter().map(|b| shapes_over(b)).collect();
        let mut index = vec![0usize; block_count];
        'combos: loop {
            let children: Vec<Shape> = per_block
                .iter()
                .zip(&index)
                .map(|(opts, &i)| clone_shape(&opts[i]))
                .collect();
            out.push(Shape::Node(children));
            let mut k = 0;
            loop {
                if k == block_count {
                    break 'combos;
                }
                index[k] += 1;
                if index[k] < per_block[k].len() {
                    break;
                }
                index[k] = 0;
                k += 1;
            }
        }
    }
    out
}

fn clone_shape(s: &Shape) -> Shape {
    match s {
        Shape::Leaf(i) => Shape::Leaf(*i),
        Shape::Node(c) => Shape::Node(c.iter().map(clone_shape).collect()),
    }
}

/// Restricted growth strings of length `m`: canonical encodings of all set
/// partitions of `m` elements.
fn set_partitions(m: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut rgs = vec![0usize; m];
    fn rec(rgs: &mut Vec<usize>, pos: usize, max_used: usize, out: &mut Vec<Vec<usize>>) {
        if pos == rgs.len() {
            out.push(rgs.clone());
            return;
        }
        for b in 0..=max_used + 1 {
            rgs[pos] = b;
            rec(rgs, pos + 1, max_used.max(b), out);
        }
    }
    if m > 0 {
        rgs[0] = 0;
        rec(&mut rgs, 1, 0, &mut out);
    }
    out
}

fn shape_to_hierarchy(n_leaves: usize, shape: &Shape) -> Hierarchy {
    let mut parent: Vec<Option<usize>> = vec![None; n_leaves];
    fn assign(shape: &Shape, parent_of: Option<usize>, parents: &mut Vec<Option<usize>>) {
        match shape {
            Shape::Leaf(i) => parents[*i] = parent_of,
            Shape::Node(children) => {
                let id = parents.len();
                parents.push(parent_of);
                for c in children {
                    assign(c, Some(id), parents);
                }
            }
        }
    }
    assign(shape, None, &mut parent);
    Hierarchy::from_parents(n_leaves, parent).expect("enumerated shape is a valid hierarchy")
}

fn binary_from_choices(n: usize, choice: &[usize]) -> Hierarchy {
    // Scratch arena ids; remapped so leaves occupy 0..n at the end.
    let mut parent: Vec<Option<usize>> = vec![Some(2), Some(2), None];
    let mut edge_nodes = vec![0usize, 1];
    let mut leaf_ids = vec![0usize, 1];
    let mut root = 2usize;
    for (step, &c) in choice.iter().enumerate() {
        debug_assert!(c < 2 * (step + 3) - 3);
        let m = parent.len();
        let l = m + 1;
        if c < edge_nodes.len() {
            let x = edge_nodes[c];
            parent.push(parent[x]);
            parent.push(Some(m));
            parent[x] = Some(m);
            edge_nodes.push(m);
        } else {
            parent.push(None);
            parent.push(Some(m));
            parent[root] = Some(m);
            edge_nodes.push(root);
            root = m;
        }
        edge_nodes.push(l);
        leaf_ids.push(l);
    }
    let total = parent.len();
    let mut remap = vec![usize::MAX; total];
    for (leaf, &id) in leaf_ids.iter().enumerate() {
        remap[id] = leaf;
    }
    let mut next = n;
    for id in 0..total {
        if remap[id] == usize::MAX {
            remap[id] = next;
            next += 1;
        }
    }
    let mut remapped = vec![None; total];
    for (id, &p) in parent.iter().enumerate() {
        remapped[remap[id]] = p.map(|p| remap[p]);
    }
    Hierarchy::from_parents(n, remapped).expect("edge-split construction is valid")
}
