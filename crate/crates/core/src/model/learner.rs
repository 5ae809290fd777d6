//! Graph learner networks producing Euclidean vertex embeddings whose
//! pairwise affinities nominate candidate edges.
//!
//! Two variants: a two-layer graph convolution (symmetric degree-normalized
//! propagation with self-loops) and a two-layer dense network. Outputs are
//! row-normalized; zero rows are left as zeros.

use rand::Rng;

use crate::graph::WeightedGraph;

use super::layers::{Activation, LEAKY_SLOPE};
use super::params::{BoundParams, ParamId, ParamStore};
use super::tape::{Tape, Var};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LearnerVariant {
    Gcn,
    Mlp,
}

#[derive(Debug, Clone)]
pub struct GraphLearner {
    pub variant: LearnerVariant,
    pub w1: ParamId,
    pub b1: ParamId,
    pub w2: ParamId,
    pub b2: ParamId,
    pub in_dim: usize,
    pub hidden: usize,
    pub out_dim: usize,
}

impl GraphLearner {
    pub fn new<R: Rng>(
        store: &mut ParamStore,
        variant: LearnerVariant,
        in_dim: usize,
        hidden: usize,
        out_dim: usize,
        rng: &mut R,
    ) -> Self {
        let w1 = store.matrix("gsl.w1", hidden, in_dim, rng);
        let b1 = store.zeros("gsl.b1", hidden);
        let w2 = store.matrix("gsl.w2", out_dim, hidden, rng);
        let b2 = store.zeros("gsl.b2", out_dim);
        Self { variant, w1, b1, w2, b2, in_dim, hidden, out_dim }
    }

    /// Symmetric normalized adjacency rows including self-loops:
    /// `a_ij = w_ij / sqrt(deg_i * deg_j)` with unit self-weight.
    fn propagation_rows(graph: &WeightedGraph) -> Vec<Vec<(usize, f64)>> {
        let n = graph.n();
        let deg: Vec<f64> = (0..n).map(|v| graph.degree(v) + 1.0).collect();
        (0..n)
            .map(|i| {
                let mut row = vec![(i, 1.0 / deg[i])];
                row.extend(
                    graph
                        .neighbors(i)
                        .iter()
                        .map(|&(j, w)| (j, w / (deg[i] * deg[j]).sqrt())),
                );
                row
            })
            .collect()
    }

    fn dense(
        &self,
        tape: &mut Tape,
        bound: &BoundParams,
        w: ParamId,
        rows: usize,
        cols: usize,
        x: &[Var],
    ) -> Vec<Var> {
        (0..rows)
            .map(|r| {
                let wr = bound.row(w, r, cols);
                tape.dot(wr, x)
            })
            .collect()
    }

    fn finish_layer(
        &self,
        tape: &mut Tape,
        bound: &BoundParams,
        b: ParamId,
        act: Activation,
        z: Vec<Var>,
    ) -> Vec<Var> {
        z.into_iter()
            .enumerate()
            .map(|(j, v)| {
                let biased = tape.add(v, bound.vars(b)[j]);
                match act {
                    Activation::LeakyRelu => tape.leaky_relu(biased, LEAKY_SLOPE),
                    Activation::Identity => biased,
                }
            })
            .collect()
    }

    /// Embed every vertex on the tape; rows are L2-normalized.
    pub fn forward(
        &self,
        tape: &mut Tape,
        bound: &BoundParams,
        features: &[Vec<f64>],
        graph: &WeightedGraph,
    ) -> Vec<Vec<Var>> {
        let n = features.len();
        debug_assert_eq!(n, graph.n());
        let xs: Vec<Vec<Var>> = features
            .iter()
            .map(|r| r.iter().map(|&v| tape.constant(v)).collect())
            .collect();

        let prop = match self.variant {
            LearnerVariant::Gcn => Some(Self::propagation_rows(graph)),
            LearnerVariant::Mlp => None,
        };
        let aggregate = |tape: &mut Tape, hs: Vec<Vec<Var>>| -> Vec<Vec<Var>> {
            match &prop {
                None => hs,
                Some(rows) => rows
                    .iter()
                    .map(|row| {
                        let dim = hs[0].len();
                        (0..dim)
                            .map(|c| {
                                let vars: Vec<Var> = row.iter().map(|&(j, _)| hs[j][c]).collect();
                                let ws: Vec<f64> = row.iter().map(|&(_, w)| w).collect();
                                tape.wsum(&vars, &ws)
                            })
                            .collect()
                    })
                    .collect(),
            }
        };

        let h1: Vec<Vec<Var>> = xs
            .iter()
            .map(|x| self.dense(tape, bound, self.w1, self.hidden, self.in_dim, x))
            .collect();
        let h1 = aggregate(tape, h1);
        let h1: Vec<Vec<Var>> = h1
            .into_iter()
            .map(|z| self.finish_layer(tape, bound, self.b1, Activation::LeakyRelu, z))
            .collect();

        let h2: Vec<Vec<Var>> = h1
            .iter()
            .map(|x| self.dense(tape, bound, self.w2, self.out_dim, self.hidden, x))
            .collect();
        let h2 = aggregate(tape, h2);
        let h2: Vec<Vec<Var>> = h2
            .into_iter()
            .map(|z| self.finish_layer(tape, bound, self.b2, Activation::Identity, z))
            .collect();

        h2.into_iter()
            .map(|row| {
                let sq = tape.sqnorm(&row);
                if tape.val(sq) < 1e-24 {
                    return row;
                }
                let nrm = tape.sqrt(sq);
                row.iter().map(|&v| tape.div(v, nrm)).collect()
            })
            .collect()
    }

    /// Convenience evaluation without keeping the tape.
    pub fn forward_values(
        &self,
        store: &ParamStore,
        features: &[Vec<f64>],
        graph: &WeightedGraph,
    ) -> Vec<Vec<f64>> {
        let mut tape = Tape::new();
        let bound = store.bind(&mut tape);
        self.forward(&mut tape, &bound, features, graph)
            .iter()
            .map(|row| row.iter().map(|&v| tape.val(v)).collect())
            .collect()
    }
}
