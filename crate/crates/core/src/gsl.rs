//! Graph structure learning: learner-graph candidates from embedding
//! affinities, bootstrapped anchor-graph updates, stochastic augmentation,
//! and the hyperbolic contrastive loss between two encoded views.

use std::collections::BTreeMap;

use log::warn;
use rand::Rng;
use thiserror::Error;

use crate::graph::{GraphError, WeightedGraph};
use crate::model::tape::{Tape, Var};

#[derive(Debug, Error)]
pub enum GslError {
    #[error("view sizes differ: {0} vs {1}")]
    ViewMismatch(usize, usize),
    #[error("decay rate tau must lie in (0, 1], got {0}")]
    InvalidTau(f64),
    #[error("{name} must lie in [0, 1), got {value}")]
    InvalidRate { name: &'static str, value: f64 },
}

/// Pairwise similarity used to score candidate edges.
#[derive(Debug, Clone, Copy)]
pub enum Affinity {
    /// Cosine similarity; zero vectors score 0 against everything.
    Cosine,
    /// Gaussian kernel `exp(-|a-b|^2 / (2 sigma^2))`.
    Gaussian { sigma: f64 },
}

impl Affinity {
    fn score(&self, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            Affinity::Cosine => {
                let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
                let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
                if na < 1e-15 || nb < 1e-15 {
                    0.0
                } else {
                    dot / (na * nb)
                }
            }
            Affinity::Gaussian { sigma } => {
                let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                (-d2 / (2.0 * sigma * sigma)).exp()
            }
        }
    }
}

/// Candidate edge set: for every vertex the `p` highest-affinity partners
/// (ties broken toward the smaller index), symmetrized by union. Weights are
/// the affinity values. Deterministic given the embeddings.
pub fn build_learner_graph(
    embeddings: &[Vec<f64>],
    p: usize,
    affinity: Affinity,
) -> Vec<(usize, usize, f64)> {
    let n = embeddings.len();
    assert!(n >= 2, "learner graph needs at least two vertices");
    assert!(p >= 1, "top-p must be positive");
    let mut picked: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for i in 0..n {
        let mut cands: Vec<(usize, f64)> = (0..n)
            .filter(|&j| j != i)
            .map(|j| (j, affinity.score(&embeddings[i], &embeddings[j])))
            .collect();
        cands.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        for &(j, w) in cands.iter().take(p) {
            picked.entry((i.min(j), i.max(j))).or_insert(w);
        }
    }
    picked.into_iter().map(|((a, b), w)| (a, b, w)).collect()
}

/// Anchor graph plus the current learner candidates and update knobs.
#[derive(Debug, Clone)]
pub struct AnchorState {
    pub anchor: WeightedGraph,
    pub learner_edges: Vec<(usize, usize, f64)>,
    pub tau: f64,
    pub top_p: usize,
}

impl AnchorState {
    pub fn new(anchor: WeightedGraph, tau: f64, top_p: usize) -> Result<Self, GslError> {
        if !(tau > 0.0 && tau <= 1.0) {
            return Err(GslError::InvalidTau(tau));
        }
        Ok(Self { anchor, learner_edges: Vec::new(), tau, top_p })
    }

    /// Bootstrapped update: keep each anchor edge with probability `tau`,
    /// adopt each learner edge with probability `1 - tau`. An edge present
    /// in both sampled sets keeps its anchor weight; adopted learner edges
    /// carry their affinity weight (nonpositive affinities are skipped since
    /// they carry no volume). If sampling empties the edge set the previous
    /// anchor is kept and a warning is logged.
    pub fn update_anchor<R: Rng>(&mut self, rng: &mut R) -> Result<(), GraphError> {
        let mut kept: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for &(a, b, w) in self.anchor.edges() {
            if rng.gen_bool(self.tau) {
                kept.insert((a, b), w);
            }
        }
        let adopt = 1.0 - self.tau;
        for &(a, b, w) in &self.learner_edges {
            if a == b {
                continue;
            }
            if rng.gen_bool(adopt) && w > 0.0 {
                kept.entry((a.min(b), a.max(b))).or_insert(w);
            }
        }
        if kept.is_empty() {
            warn!("anchor update sampled an empty edge set; keeping previous anchor");
            return Ok(());
        }
        let edges: Vec<(usize, usize, f64)> =
            kept.into_iter().map(|((a, b), w)| (a, b, w)).collect();
        self.anchor = WeightedGraph::from_edges(self.anchor.n(), &edges)?;
        Ok(())
    }
}

/// Stochastic view augmentation rates.
#[derive(Debug, Clone, Copy)]
pub struct AugmentConfig {
    pub edge_drop: f64,
    pub feature_mask: f64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self { edge_drop: 0.2, feature_mask: 0.2 }
    }
}

impl AugmentConfig {
    pub fn validate(&self) -> Result<(), GslError> {
        for (name, value) in
            [("edge_drop", self.edge_drop), ("feature_mask", self.feature_mask)]
        {
            if !(0.0..1.0).contains(&value) {
                return Err(GslError::InvalidRate { name, value });
            }
        }
        Ok(())
    }
}

/// One stochastic view: each edge dropped independently, each feature entry
/// zeroed independently. Deterministic given the generator state.
pub fn augment<R: Rng>(
    graph: &WeightedGraph,
    features: &[Vec<f64>],
    cfg: &AugmentConfig,
    rng: &mut R,
) -> Result<(WeightedGraph, Vec<Vec<f64>>), GraphError> {
    let edges: Vec<(usize, usize, f64)> = graph
        .edges()
        .iter()
        .filter(|_| !rng.gen_bool(cfg.edge_drop))
        .copied()
        .collect();
    let g = WeightedGraph::from_edges(graph.n(), &edges)?;
    let feats = features
        .iter()
        .map(|row| {
            row.iter()
                .map(|&v| if rng.gen_bool(cfg.feature_mask) { 0.0 } else { v })
                .collect()
        })
        .collect();
    Ok((g, feats))
}

/// Symmetrized InfoNCE over Lorentz distances between the two projected
/// views: `(1/2n) sum_i [L(l_i -> a) + L(a_i -> l)]` where each `L` is the
/// negative log-softmax of `(r2 - d_L)/t2` scores against all n candidates.
pub fn contrastive_loss_var(
    tape: &mut Tape,
    proj_l: &[Vec<Var>],
    proj_a: &[Vec<Var>],
    t2: f64,
    r2: f64,
) -> Result<Var, GslError> {
    if proj_l.len() != proj_a.len() {
        return Err(GslError::ViewMismatch(proj_l.len(), proj_a.len()));
    }
    let n = proj_l.len();
    assert!(n >= 1, "contrastive loss needs at least one pair");
    assert!(t2 > 0.0, "t2 must be positive");
    // scores[i][k] = (r2 - d_L(proj_l[i], proj_a[k])) / t2.
    let mut scores = vec![Vec::with_capacity(n); n];
    for i in 0..n {
        for k in 0..n {
            let md = tape.minkowski_dot(&proj_l[i], &proj_a[k]);
            let neg = tape.neg(md);
            let d = tape.arcosh_c(neg);
            let nd = tape.neg(d);
            let off = tape.add_c(nd, r2);
            scores[i].push(tape.scale(off, 1.0 / t2));
        }
    }
    let lse = |tape: &mut Tape, row: &[Var]| -> Var {
        let m = row.iter().map(|&s| tape.val(s)).fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<Var> = row
            .iter()
            .map(|&s| {
                let sh = tape.add_c(s, -m);
                tape.exp(sh)
            })
            .collect();
        let z = tape.sum(&exps);
        let l = tape.ln(z);
        tape.add_c(l, m)
    };
    let mut parts = Vec::with_capacity(2 * n);
    for i in 0..n {
        let row: Vec<Var> = scores[i].clone();
        let l1 = lse(tape, &row);
        let t1 = tape.sub(l1, scores[i][i]);
        parts.push(t1);
        // Opposite direction reuses the transposed distance matrix.
        let col: Vec<Var> = (0..n).map(|k| scores[k][i]).collect();
        let l2 = lse(tape, &col);
        let t2v = tape.sub(l2, scores[i][i]);
        parts.push(t2v);
    }
    let total = tape.sum(&parts);
    Ok(tape.scale(total, 1.0 / (2.0 * n as f64)))
}

/// [`contrastive_loss_var`] on plain Lorentz rows.
pub fn contrastive_loss(
    proj_l: &[Vec<f64>],
    proj_a: &[Vec<f64>],
    t2: f64,
    r2: f64,
) -> Result<f64, GslError> {
    let mut tape = Tape::new();
    let as_vars = |tape: &mut Tape, rows: &[Vec<f64>]| -> Vec<Vec<Var>> {
        rows.iter()
            .map(|r| r.iter().map(|&v| tape.constant(v)).collect())
            .collect()
    };
    let l = as_vars(&mut tape, proj_l);
    let a = as_vars(&mut tape, proj_a);
    let v = contrastive_loss_var(&mut tape, &l, &a, t2, r2)?;
    Ok(tape.val(v))
}
