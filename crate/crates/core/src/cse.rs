//! Continuous structural entropy: a differentiable surrogate for the
//! discrete tree cost, plus the centroid regularizer and total-loss
//! combination.
//!
//! The soft ancestor volume for an edge `(i, j)` replaces the discrete
//! "is `k` below the merge of `i` and `j`" indicator with the first
//! component of a temperature-scaled softmax over geodesic-origin-distance
//! scores. As the temperature drops the loss approaches the discrete cost
//! `sum_edges w * log2(volume(lca))` of the tree realized by the embedding
//! geometry.

use std::collections::HashMap;

use log::warn;

use crate::entropy::Hierarchy;
use crate::geometry::{self, GeometryError};
use crate::graph::WeightedGraph;
use crate::model::tape::{Tape, Var};

/// Scale/offset constants of the training objective.
#[derive(Debug, Clone, Copy)]
pub struct CseConfig {
    /// Softmax temperature of the soft ancestor volume; positive.
    pub t1: f64,
    /// Score offset for the soft ancestor volume.
    pub r1: f64,
    /// Contrastive softmax temperature; positive.
    pub t2: f64,
    /// Contrastive score offset.
    pub r2: f64,
    /// Weight of the contrastive term in the total loss.
    pub eta1: f64,
    /// Weight of the centroid term in the total loss.
    pub eta2: f64,
}

impl Default for CseConfig {
    fn default() -> Self {
        Self { t1: 1000.0, r1: 2.0, t2: 1.0, r2: 0.0, eta1: 1.0, eta2: 1.0 }
    }
}

/// Vertex embeddings in both hyperbolic charts plus per-leaf volumes.
///
/// `ball[i]` and `lorentz[i]` describe the same point; `leaf_volumes[i]` is
/// the degree of vertex `i` in the graph the loss is evaluated against.
#[derive(Debug, Clone)]
pub struct EmbeddingSet {
    pub ball: Vec<Vec<f64>>,
    pub lorentz: Vec<Vec<f64>>,
    pub leaf_volumes: Vec<f64>,
}

impl EmbeddingSet {
    /// Mirrors Lorentz points into the ball and takes volumes from degrees.
    pub fn from_lorentz(lorentz: Vec<Vec<f64>>, graph: &WeightedGraph) -> Self {
        assert_eq!(lorentz.len(), graph.n(), "one embedding per vertex");
        let ball = lorentz.iter().map(|z| geometry::lorentz_to_poincare(z)).collect();
        Self { ball, lorentz, leaf_volumes: graph.degrees().to_vec() }
    }

    /// Ball points with volumes given directly (used by tests and tools).
    pub fn from_ball(ball: Vec<Vec<f64>>, leaf_volumes: Vec<f64>) -> Result<Self, GeometryError> {
        assert_eq!(ball.len(), leaf_volumes.len());
        let lorentz = ball
            .iter()
            .map(|u| geometry::poincare_to_lorentz(u))
            .collect::<Result<_, _>>()?;
        Ok(Self { ball, lorentz, leaf_volumes })
    }

    pub fn n(&self) -> usize {
        self.ball.len()
    }
}

fn softmax3_first(s: [f64; 3], t: f64) -> f64 {
    let m = s[0].max(s[1]).max(s[2]);
    let e: [f64; 3] = [((s[0] - m) / t).exp(), ((s[1] - m) / t).exp(), ((s[2] - m) / t).exp()];
    e[0] / (e[0] + e[1] + e[2])
}

/// Soft volume below the implied merge point of `i` and `j`: every other
/// vertex `k` contributes its leaf volume weighted by the first softmax
/// component over the scores `(s_ij, s_ik, s_jk)`, `s_ab = r1 - d_o(a, b)`.
pub fn soft_lca_volume(i: usize, j: usize, z: &EmbeddingSet, cfg: &CseConfig) -> f64 {
    debug_assert!(i != j);
    let d_ij = geometry::geodesic_origin_distance(&z.ball[i], &z.ball[j]);
    let s_ij = cfg.r1 - d_ij;
    let mut total = 0.0;
    for k in 0..z.n() {
        if k == i || k == j {
            continue;
        }
        let s_ik = cfg.r1 - geometry::geodesic_origin_distance(&z.ball[i], &z.ball[k]);
        let s_jk = cfg.r1 - geometry::geodesic_origin_distance(&z.ball[j], &z.ball[k]);
        total += z.leaf_volumes[k] * softmax3_first([s_ij, s_ik, s_jk], cfg.t1);
    }
    total
}

/// Continuous structural entropy cost over the edges of `g`:
/// `sum w_ij * log2(V_i + V_j + soft_lca_volume(i, j))`, with the log
/// argument clamped below at 1. An empty edge set yields 0 with a warning.
pub fn cse_loss(g: &WeightedGraph, z: &EmbeddingSet, cfg: &CseConfig) -> f64 {
    assert_eq!(g.n(), z.n(), "graph and embeddings disagree on vertex count");
    if g.edges().is_empty() {
        warn!("cse loss over an empty edge set is 0");
        return 0.0;
    }
    g.edges()
        .iter()
        .map(|&(i, j, w)| {
            let vol = z.leaf_volumes[i] + z.leaf_volumes[j] + soft_lca_volume(i, j, z, cfg);
            w * vol.max(1.0).log2()
        })
        .sum()
}

/// Discrete form of the soft indicator: is leaf `k` a descendant of the
/// lowest common ancestor of `i` and `j`? Characterized through root
/// distances: `depth(lca(i,j)) <= depth(lca(i,k))` and likewise for `j,k`.
pub fn descendant_indicator_discrete(t: &Hierarchy, i: usize, j: usize, k: usize) -> bool {
    debug_assert!(i != j && j != k && i != k);
    let depth = t.depths();
    let d_ij = depth[t.lca(i, j)];
    d_ij <= depth[t.lca(i, k)] && d_ij <= depth[t.lca(j, k)]
}

/// Lorentz distance from the normalized embedding centroid to the origin.
///
/// The centroid is `sum(z) / |lorentz_norm(sum(z))|`; for on-manifold inputs
/// the loss is `arcosh` of its time coordinate. Errors when the summed
/// vector has (numerically) zero Lorentz norm modulus.
pub fn centroid_loss(z: &EmbeddingSet) -> Result<f64, GeometryError> {
    centroid_loss_rows(&z.lorentz)
}

/// [`centroid_loss`] over raw Lorentz rows.
pub fn centroid_loss_rows(rows: &[Vec<f64>]) -> Result<f64, GeometryError> {
    assert!(!rows.is_empty(), "centroid of an empty embedding set");
    let dim = rows[0].len();
    let mut sum = vec![0.0; dim];
    for row in rows {
        for (s, v) in sum.iter_mut().zip(row) {
            *s += v;
        }
    }
    let inner = geometry::lorentz_inner(&sum, &sum)?;
    let modulus = inner.abs().sqrt();
    if modulus < 1e-15 {
        return Err(GeometryError::ZeroLorentzNorm);
    }
    Ok((sum[0] / modulus).max(1.0).acosh())
}

/// Weighted combination of the three loss parts.
pub fn total_loss(cse: f64, con: f64, cen: f64, cfg: &CseConfig) -> f64 {
    cse + cfg.eta1 * con + cfg.eta2 * cen
}

// ---------------------------------------------------------------------------
// Tape twins. Each function mirrors its f64 counterpart branch for branch
// (branches are decided from current values), so evaluated values agree
// exactly and gradients follow the taken branch.
// ---------------------------------------------------------------------------

fn vals(tape: &Tape, xs: &[Var]) -> Vec<f64> {
    xs.iter().map(|&v| tape.val(v)).collect()
}

fn sqnorm_f(u: &[f64]) -> f64 {
    u.iter().map(|v| v * v).sum()
}

fn point_value_var(tape: &mut Tape, n2: Var) -> Var {
    let a = tape.artanh_c(n2);
    tape.scale(a, 0.5)
}

fn klein_var(tape: &mut Tape, x: &[Var], nx2: Var) -> Vec<Var> {
    let den = tape.add_c(nx2, 1.0);
    let two = tape.constant(2.0);
    let c = tape.div(two, den);
    x.iter().map(|&v| tape.mul(c, v)).collect()
}

/// Tape version of [`geometry::geodesic_origin_distance`] on ball points.
pub fn geodesic_origin_distance_var(tape: &mut Tape, x: &[Var], y: &[Var]) -> Var {
    debug_assert_eq!(x.len(), y.len());
    let xv = vals(tape, x);
    let yv = vals(tape, y);
    let nx2v = sqnorm_f(&xv);
    let ny2v = sqnorm_f(&yv);
    if nx2v < 1e-24 || ny2v < 1e-24 {
        return tape.constant(0.0);
    }
    let nx2 = tape.sqnorm(x);
    let ny2 = tape.sqnorm(y);
    let diff2: f64 = xv.iter().zip(&yv).map(|(a, b)| (a - b) * (a - b)).sum();
    if diff2 < 1e-24 {
        return point_value_var(tape, nx2);
    }
    let dv: f64 = xv.iter().zip(&yv).map(|(a, b)| a * b).sum();
    let cross2 = (nx2v * ny2v - dv * dv).max(0.0);
    if cross2.sqrt() < 1e-10 {
        if dv < 0.0 {
            return tape.constant(0.0);
        }
        let nearer = if nx2v <= ny2v { nx2 } else { ny2 };
        return point_value_var(tape, nearer);
    }

    // Inversion sending x to the origin, then reflection of the origin's
    // image across the straight image of the geodesic, inverted back.
    let one = tape.constant(1.0);
    let q = tape.div(one, nx2);
    let rho2 = tape.add_c(q, -1.0);
    let r: Vec<Var> = x.iter().map(|&v| tape.div(v, nx2)).collect();
    let ymr: Vec<Var> = y.iter().zip(&r).map(|(&a, &b)| tape.sub(a, b)).collect();
    let ymr2 = tape.sqnorm(&ymr);
    let c1 = tape.div(rho2, ymr2);
    let y_inv: Vec<Var> = ymr.iter().zip(&r).map(|(&a, &b)| tape.fma(c1, a, b)).collect();

    let yi2 = tape.sqnorm(&y_inv);
    if tape.val(yi2) < 1e-30 {
        let nearer = if nx2v <= ny2v { nx2 } else { ny2 };
        return point_value_var(tape, nearer);
    }
    let dxy = tape.dot(x, &y_inv);
    let dxy2 = tape.scale(dxy, 2.0);
    let s = tape.div(dxy2, yi2);
    let o_invref: Vec<Var> = y_inv
        .iter()
        .zip(x)
        .map(|(&a, &b)| {
            let sa = tape.mul(s, a);
            tape.sub(sa, b)
        })
        .collect();
    let oimr: Vec<Var> = o_invref.iter().zip(&r).map(|(&a, &b)| tape.sub(a, b)).collect();
    let oimr2 = tape.sqnorm(&oimr);
    let c2 = tape.div(rho2, oimr2);
    let o_ref: Vec<Var> = oimr.iter().zip(&r).map(|(&a, &b)| tape.fma(c2, a, b)).collect();

    // h = 1 + sqrt(max(1 - |o_ref|^2, 0)); the flat sqrt mirrors the clamp.
    let no2 = tape.sqnorm(&o_ref);
    let mno2 = tape.neg(no2);
    let om = tape.add_c(mno2, 1.0);
    let sq = tape.sqrt(om);
    let h = tape.add_c(sq, 1.0);
    let p: Vec<Var> = o_ref.iter().map(|&v| tape.div(v, h)).collect();

    let a = klein_var(tape, x, nx2);
    let b = klein_var(tape, y, ny2);
    let np2 = tape.sqnorm(&p);
    let pk = klein_var(tape, &p, np2);
    let bma: Vec<Var> = b.iter().zip(&a).map(|(&u, &v)| tape.sub(u, v)).collect();
    let pma: Vec<Var> = pk.iter().zip(&a).map(|(&u, &v)| tape.sub(u, v)).collect();
    let ab2 = tape.sqnorm(&bma);
    let num = tape.dot(&pma, &bma);
    let t = tape.div(num, ab2);
    let tv = tape.val(t);
    if tv <= 0.0 {
        point_value_var(tape, nx2)
    } else if tv >= 1.0 {
        point_value_var(tape, ny2)
    } else {
        point_value_var(tape, np2)
    }
}

/// Ambient Lorentz point to ball coordinates on the tape.
pub fn lorentz_to_poincare_var(tape: &mut Tape, x: &[Var]) -> Vec<Var> {
    let den = tape.add_c(x[0], 1.0);
    x[1..].iter().map(|&v| tape.div(v, den)).collect()
}

/// Cache of pairwise geodesic-origin-distance nodes, keyed by unordered pair.
pub struct PairScores<'a> {
    ball: &'a [Vec<Var>],
    cache: HashMap<(usize, usize), Var>,
}

impl<'a> PairScores<'a> {
    pub fn new(ball: &'a [Vec<Var>]) -> Self {
        Self { ball, cache: HashMap::new() }
    }

    pub fn get(&mut self, tape: &mut Tape, a: usize, b: usize) -> Var {
        let key = (a.min(b), a.max(b));
        if let Some(&v) = self.cache.get(&key) {
            return v;
        }
        let v = geodesic_origin_distance_var(tape, &self.ball[key.0], &self.ball[key.1]);
        self.cache.insert(key, v);
        v
    }
}

/// Tape version of [`cse_loss`]; `volumes` are per-vertex constants.
pub fn cse_loss_var(
    tape: &mut Tape,
    g: &WeightedGraph,
    ball: &[Vec<Var>],
    volumes: &[f64],
    cfg: &CseConfig,
) -> Var {
    assert_eq!(g.n(), ball.len());
    if g.edges().is_empty() {
        warn!("cse loss over an empty edge set is 0");
        return tape.constant(0.0);
    }
    let n = ball.len();
    let mut scores = PairScores::new(ball);
    let mut terms = Vec::with_capacity(g.edges().len());
    let mut weights = Vec::with_capacity(g.edges().len());
    for &(i, j, w) in g.edges() {
        let d_ij = scores.get(tape, i, j);
        let s_ij = score_var(tape, d_ij, cfg);
        let mut contributions = Vec::new();
        let mut vols = Vec::new();
        for k in 0..n {
            if k == i || k == j {
                continue;
            }
            let d_ik = scores.get(tape, i, k);
            let d_jk = scores.get(tape, j, k);
            let s_ik = score_var(tape, d_ik, cfg);
            let s_jk = score_var(tape, d_jk, cfg);
            let p = tape.softmax3_first([s_ij, s_ik, s_jk], cfg.t1);
            contributions.push(p);
            vols.push(volumes[k]);
        }
        let soft = if contributions.is_empty() {
            tape.constant(0.0)
        } else {
            tape.wsum(&contributions, &vols)
        };
        let vol = tape.add_c(soft, volumes[i] + volumes[j]);
        let term = tape.log2_clamp1(vol);
        terms.push(term);
        weights.push(w);
    }
    tape.wsum(&terms, &weights)
}

fn score_var(tape: &mut Tape, d: Var, cfg: &CseConfig) -> Var {
    let nd = tape.neg(d);
    tape.add_c(nd, cfg.r1)
}

/// Tape version of [`centroid_loss`] over ambient Lorentz rows.
pub fn centroid_loss_var(tape: &mut Tape, rows: &[Vec<Var>]) -> Result<Var, GeometryError> {
    assert!(!rows.is_empty());
    let dim = rows[0].len();
    let sum: Vec<Var> = (0..dim)
        .map(|c| {
            let col: Vec<Var> = rows.iter().map(|r| r[c]).collect();
            tape.sum(&col)
        })
        .collect();
    let inner = tape.minkowski_dot(&sum, &sum);
    let iv = tape.val(inner);
    if iv.abs().sqrt() < 1e-15 {
        return Err(GeometryError::ZeroLorentzNorm);
    }
    // |inner| branches on the sign; on-manifold sums are timelike (inner < 0).
    let pos = if iv < 0.0 { tape.neg(inner) } else { inner };
    let modulus = tape.sqrt(pos);
    let c0 = tape.div(sum[0], modulus);
    Ok(tape.arcosh_c(c0))
}

/// Tape version of [`total_loss`].
pub fn total_loss_var(tape: &mut Tape, cse: Var, con: Var, cen: Var, cfg: &CseConfig) -> Var {
    let wcon = tape.scale(con, cfg.eta1);
    let wcen = tape.scale(cen, cfg.eta2);
    let partial = tape.add(cse, wcon);
    tape.add(partial, wcen)
}
