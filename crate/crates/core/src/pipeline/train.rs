//! The training loop: anchor graph construction, per-epoch structure
//! learning, two-view encoding, loss assembly, optimization, bootstrapped
//! anchor updates, and per-epoch decode/evaluate with argmin-SE model
//! selection.

use std::path::Path;
use std::time::Instant;

use log::{debug, warn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cse::{self, CseConfig};
use crate::decode::{self, Dendrogram, DecodeError};
use crate::entropy::{self, Hierarchy};
use crate::geometry;
use crate::graph::{self, SubgraphSample, WeightedGraph};
use crate::gsl::{self, Affinity, AnchorState, AugmentConfig};
use crate::model::{
    Adam, AdamConfig, Encoder, GraphLearner, LearnerVariant, ParamStore, Projector, Tape, Var,
};

use super::config::{ConfigError, RunConfig};
use super::dataset::{self, DataError};
use super::PipelineError;

/// Datasets larger than this train on sampled subgraphs instead of the full
/// graph; evaluation always runs a full-graph forward pass.
pub const SUBGRAPH_THRESHOLD: usize = 2000;

/// One epoch of the losses CSV: training losses plus the per-epoch decode
/// evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossRow {
    pub epoch: usize,
    pub cse: f64,
    pub con: f64,
    pub cen: f64,
    pub total: f64,
    pub se: f64,
    pub dp: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalMetrics {
    pub dp: f64,
    pub se: f64,
    pub dasgupta: f64,
}

/// Everything a finished run reports and exports.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub losses: Vec<LossRow>,
    pub best_epoch: usize,
    /// Metrics of the best (argmin decoded-tree SE) epoch.
    pub metrics: EvalMetrics,
    pub wall_seconds: f64,
    pub best_tree: Dendrogram,
    /// Ball embeddings at the best epoch (drives the disk plot).
    pub best_ball: Vec<Vec<f64>>,
    /// Lorentz embeddings after the final epoch.
    pub final_lorentz: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    /// The frozen epoch-0 anchor graph all SE numbers refer to.
    pub anchor0: WeightedGraph,
    pub config: RunConfig,
}

/// Scores a partitioning tree against the frozen anchor graph and labels.
pub fn evaluate(
    h: &Hierarchy,
    g0: &WeightedGraph,
    labels: &[usize],
) -> Result<EvalMetrics, PipelineError> {
    let se = entropy::structural_entropy(g0, h);
    let dp = entropy::dendrogram_purity(h, labels)?;
    let dasgupta = entropy::dasgupta_cost(g0, h);
    Ok(EvalMetrics { dp, se, dasgupta })
}

/// Single-linkage baseline over raw feature distances (similarity is the
/// negated Euclidean distance), used as an evaluation reference.
pub fn single_linkage_reference(features: &[Vec<f64>]) -> Result<Dendrogram, DecodeError> {
    let n = features.len();
    let mut sim = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let d2: f64 = features[i]
                .iter()
                .zip(&features[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            sim[i][j] = -d2.sqrt();
            sim[j][i] = sim[i][j];
        }
    }
    decode::single_linkage(&sim)
}

struct Model {
    enc_store: ParamStore,
    lrn_store: ParamStore,
    encoder: Encoder,
    projector: Projector,
    learner: GraphLearner,
    opt_enc: Adam,
    opt_lrn: Adam,
}

impl Model {
    fn new(cfg: &RunConfig, in_features: usize, rng: &mut ChaCha8Rng) -> Self {
        let mut enc_store = ParamStore::new();
        let encoder =
            Encoder::new(&mut enc_store, in_features, cfg.hidden, cfg.embed, cfg.layers, rng);
        let projector = Projector::new(&mut enc_store, cfg.embed, rng);
        let mut lrn_store = ParamStore::new();
        let learner = GraphLearner::new(
            &mut lrn_store,
            cfg.learner,
            in_features,
            cfg.hidden,
            cfg.embed,
            rng,
        );
        let opt_enc = Adam::new(&enc_store, AdamConfig::with_lr(cfg.lr_encoder));
        let opt_lrn = Adam::new(&lrn_store, AdamConfig::with_lr(cfg.lr_learner));
        Self { enc_store, lrn_store, encoder, projector, learner, opt_enc, opt_lrn }
    }
}

fn affinity_for(variant: LearnerVariant) -> Affinity {
    match variant {
        LearnerVariant::Gcn => Affinity::Cosine,
        LearnerVariant::Mlp => Affinity::Gaussian { sigma: 1.0 },
    }
}

fn row_values(tape: &Tape, rows: &[Vec<Var>]) -> Vec<Vec<f64>> {
    rows.iter().map(|row| row.iter().map(|&v| tape.val(v)).collect()).collect()
}

struct StepLoss {
    cse: f64,
    con: f64,
    cen: f64,
    total: f64,
}

/// One optimization step on one (sub)graph view pair. Returns the step's
/// losses and the learner edges (local vertex ids) for the anchor update.
#[allow(clippy::too_many_arguments)]
fn train_step(
    model: &mut Model,
    cse_cfg: &CseConfig,
    aug: &AugmentConfig,
    cfg: &RunConfig,
    epoch: usize,
    feats: &[Vec<f64>],
    ga: &WeightedGraph,
    rng: &mut ChaCha8Rng,
) -> Result<(StepLoss, Vec<(usize, usize, f64)>), PipelineError> {
    let n = feats.len();
    let mut tape = Tape::new();
    let enc_bound = model.enc_store.bind(&mut tape);
    let lrn_bound = model.lrn_store.bind(&mut tape);

    // Learner pass: its embedding values shape the learner graph. The graph
    // build is discrete, so no loss gradient reaches the learner; keeping it
    // on the tape still exercises its optimizer group each step.
    let lrn_vars = model.learner.forward(&mut tape, &lrn_bound, feats, ga);
    let lrn_emb = row_values(&tape, &lrn_vars);
    let learner_edges = if n >= 2 {
        gsl::build_learner_graph(&lrn_emb, cfg.p, affinity_for(cfg.learner))
    } else {
        Vec::new()
    };
    let gl = WeightedGraph::from_edges(n, &learner_edges)?;

    // Two augmented views: the anchor graph and the learner graph.
    let (ga_aug, xa) = gsl::augment(ga, feats, aug, rng)?;
    let (gl_aug, xl) = gsl::augment(&gl, feats, aug, rng)?;
    let za = model.encoder.forward(&mut tape, &enc_bound, &xa, &ga_aug);
    let zl = model.encoder.forward(&mut tape, &enc_bound, &xl, &gl_aug);

    // Structural-entropy term on the anchor view against the (un-augmented)
    // anchor graph; volumes are anchor degrees.
    let ball_a: Vec<Vec<Var>> =
        za.iter().map(|z| cse::lorentz_to_poincare_var(&mut tape, z)).collect();
    let cse_var = cse::cse_loss_var(&mut tape, ga, &ball_a, ga.degrees(), cse_cfg);
    let pl = model.projector.forward(&mut tape, &enc_bound, &zl);
    let pa = model.projector.forward(&mut tape, &enc_bound, &za);
    let con_var = gsl::contrastive_loss_var(&mut tape, &pl, &pa, cfg.t2, cfg.r2)?;
    let cen_var = cse::centroid_loss_var(&mut tape, &za)?;
    let total_var = cse::total_loss_var(&mut tape, cse_var, con_var, cen_var, cse_cfg);

    let loss = StepLoss {
        cse: tape.val(cse_var),
        con: tape.val(con_var),
        cen: tape.val(cen_var),
        total: tape.val(total_var),
    };
    if !loss.total.is_finite() {
        return Err(PipelineError::NumericFailure { epoch });
    }

    let grads = tape.backward(total_var);
    let enc_grads = model.enc_store.collect_grads(&enc_bound, &grads)?;
    let lrn_grads = model.lrn_store.collect_grads(&lrn_bound, &grads)?;
    model.opt_enc.step(&mut model.enc_store, &enc_grads)?;
    model.opt_lrn.step(&mut model.lrn_store, &lrn_grads)?;
    Ok((loss, learner_edges))
}

/// Un-augmented full-graph forward, decode, and evaluation against the
/// frozen anchor graph.
fn eval_epoch(
    model: &Model,
    features: &[Vec<f64>],
    eval_graph: &WeightedGraph,
    g0: &WeightedGraph,
    labels: &[usize],
    cfg: &RunConfig,
) -> Result<(EvalMetrics, Dendrogram, Vec<Vec<f64>>, Vec<Vec<f64>>), PipelineError> {
    let mut tape = Tape::new();
    let bound = model.enc_store.bind(&mut tape);
    let zs = model.encoder.forward(&mut tape, &bound, features, eval_graph);
    let lorentz = row_values(&tape, &zs);
    let ball: Vec<Vec<f64>> = lorentz.iter().map(|r| geometry::lorentz_to_poincare(r)).collect();
    let tree = decode::decode_embeddings(&ball, cfg.decode, cfg.decode_k, cfg.rho_max)?;
    let metrics = evaluate(&tree.to_hierarchy(), g0, labels)?;
    Ok((metrics, tree, ball, lorentz))
}

/// Loads the configured dataset and trains on it.
pub fn run_training(cfg: &RunConfig) -> Result<RunReport, PipelineError> {
    if cfg.data.is_empty() {
        return Err(ConfigError::Missing("data").into());
    }
    let ds = dataset::load_dataset(Path::new(&cfg.data), &cfg.label_column)?;
    train_on(&ds.features, &ds.labels, cfg)
}

/// Runs the full loop on an in-memory dataset.
pub fn train_on(
    features_raw: &[Vec<f64>],
    labels: &[usize],
    cfg: &RunConfig,
) -> Result<RunReport, PipelineError> {
    cfg.validate()?;
    let n = features_raw.len();
    if n < 2 {
        return Err(DataError::TooFewRows(n).into());
    }
    if labels.len() != n {
        return Err(entropy::MetricError::LabelCount(n, labels.len()).into());
    }
    let start = Instant::now();
    // The standardize flag is scoped to the kNN kernel; the encoder and the
    // learner always see the raw feature rows.
    let features = features_raw.to_vec();
    let g0 = graph::build_knn_graph(&features, cfg.k, cfg.sigma, cfg.standardize)?;
    if !g0.is_connected() {
        warn!("anchor graph is disconnected; continuing");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut init_rng = ChaCha8Rng::seed_from_u64(rng.gen());
    let mut model = Model::new(cfg, features[0].len(), &mut init_rng);
    let mut state = AnchorState::new(g0.clone(), cfg.tau, cfg.p)?;
    let cse_cfg = CseConfig {
        t1: cfg.t1,
        r1: cfg.r1,
        t2: cfg.t2,
        r2: cfg.r2,
        eta1: cfg.eta1,
        eta2: cfg.eta2,
    };
    let aug = AugmentConfig { edge_drop: cfg.edge_drop, feature_mask: cfg.feature_mask };

    let mut losses = Vec::with_capacity(cfg.epochs);
    // (epoch, metrics, tree, ball) of the argmin-SE epoch; ties keep the
    // earliest epoch.
    let mut best: Option<(usize, EvalMetrics, Dendrogram, Vec<Vec<f64>>)> = None;

    if cfg.epochs == 0 {
        let (metrics, tree, ball, lorentz) =
            eval_epoch(&model, &features, &state.anchor, &g0, labels, cfg)?;
        return Ok(RunReport {
            losses,
            best_epoch: 0,
            metrics,
            wall_seconds: start.elapsed().as_secs_f64(),
            best_tree: tree,
            best_ball: ball,
            final_lorentz: lorentz,
            labels: labels.to_vec(),
            anchor0: g0,
            config: cfg.clone(),
        });
    }

    for epoch in 0..cfg.epochs {
        let samples = if n > SUBGRAPH_THRESHOLD {
            graph::subgraph_sample(&state.anchor, cfg.n_prime, cfg.n_seed, &mut rng)
        } else {
            vec![SubgraphSample { vertices: (0..n).collect(), graph: state.anchor.clone() }]
        };
        let mut sums = StepLoss { cse: 0.0, con: 0.0, cen: 0.0, total: 0.0 };
        let mut harvested = Vec::new();
        for sample in &samples {
            let local_feats: Vec<Vec<f64>> =
                sample.vertices.iter().map(|&v| features[v].clone()).collect();
            let (loss, local_edges) = train_step(
                &mut model, &cse_cfg, &aug, cfg, epoch, &local_feats, &sample.graph, &mut rng,
            )?;
            sums.cse += loss.cse;
            sums.con += loss.con;
            sums.cen += loss.cen;
            sums.total += loss.total;
            harvested.extend(local_edges.into_iter().map(|(a, b, w)| {
                let (ga, gb) = (sample.vertices[a], sample.vertices[b]);
                (ga.min(gb), ga.max(gb), w)
            }));
        }
        let m = samples.len() as f64;
        state.learner_edges = harvested;
        state.update_anchor(&mut rng)?;

        let (metrics, tree, ball, lorentz) =
            eval_epoch(&model, &features, &state.anchor, &g0, labels, cfg)?;
        losses.push(LossRow {
            epoch,
            cse: sums.cse / m,
            con: sums.con / m,
            cen: sums.cen / m,
            total: sums.total / m,
            se: metrics.se,
            dp: metrics.dp,
        });
        debug!(
            "epoch {epoch}: total {:.6} se {:.6} dp {:.4}",
            sums.total / m,
            metrics.se,
            metrics.dp
        );
        if best.as_ref().map_or(true, |(_, bm, _, _)| metrics.se < bm.se) {
            best = Some((epoch, metrics, tree, ball));
        }
        if epoch + 1 == cfg.epochs {
            let (best_epoch, metrics, best_tree, best_ball) = best.expect("at least one epoch");
            return Ok(RunReport {
                losses,
                best_epoch,
                metrics,
                wall_seconds: start.elapsed().as_secs_f64(),
                best_tree,
                best_ball,
                final_lorentz: lorentz,
                labels: labels.to_vec(),
                anchor0: g0,
                config: cfg.clone(),
            });
        }
    }
    unreachable!("loop returns on its last epoch")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blob_dataset() -> (Vec<Vec<f64>>, Vec<usize>) {
        // Two far-apart blobs, 10 points each. Both coordinates carry the
        // center offset so the gap survives per-feature standardization.
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for (center, label) in [(0.0, 0usize), (50.0, 1usize)] {
            for _ in 0..10 {
                features.push(vec![
                    center + rng.gen_range(-0.5..0.5),
                    center + rng.gen_range(-0.5..0.5),
                ]);
                labels.push(label);
            }
        }
        (features, labels)
    }

    fn tiny_config() -> RunConfig {
        let mut cfg = RunConfig::default();
        cfg.epochs = 5;
        cfg.k = 3;
        cfg.p = 3;
        cfg.hidden = 4;
        cfg.embed = 2;
        cfg.layers = 2;
        cfg.decode = crate::decode::DecodeMode::Naive;
        cfg
    }

    #[test]
    fn blob_fixture_is_perfectly_separated() {
        let (features, labels) = blob_dataset();
        let report = train_on(&features, &labels, &tiny_config()).unwrap();
        assert_eq!(report.metrics.dp, 1.0, "blobs must decode into pure subtrees");
        let flat = entropy::structural_entropy(&report.anchor0, &Hierarchy::flat(20));
        assert!(
            report.metrics.se <= flat + 1e-9,
            "decoded SE {} vs flat {}",
            report.metrics.se,
            flat
        );
    }

    #[test]
    fn report_metrics_reproduce_from_the_best_tree() {
        let (features, labels) = blob_dataset();
        let report = train_on(&features, &labels, &tiny_config()).unwrap();
        let again = evaluate(&report.best_tree.to_hierarchy(), &report.anchor0, &labels).unwrap();
        assert_eq!(again, report.metrics);
        let best_row = report.losses[report.best_epoch];
        assert_eq!(best_row.se, report.metrics.se);
        assert_eq!(
            report.metrics.se,
            report.losses.iter().map(|r| r.se).fold(f64::INFINITY, f64::min)
        );
    }

    #[test]
    fn zero_epochs_reports_the_untrained_decode() {
        let (features, labels) = blob_dataset();
        let mut cfg = tiny_config();
        cfg.epochs = 0;
        let report = train_on(&features, &labels, &cfg).unwrap();
        assert!(report.losses.is_empty());
        assert_eq!(report.best_epoch, 0);
        assert_eq!(report.best_tree.n_leaves(), 20);
        assert_eq!(report.final_lorentz.len(), 20);
    }

    #[test]
    fn same_seed_gives_bitwise_identical_losses() {
        let (features, labels) = blob_dataset();
        let mut cfg = tiny_config();
        cfg.epochs = 3;
        let a = train_on(&features, &labels, &cfg).unwrap();
        let b = train_on(&features, &labels, &cfg).unwrap();
        for (ra, rb) in a.losses.iter().zip(&b.losses) {
            assert_eq!(ra.total.to_bits(), rb.total.to_bits());
            assert_eq!(ra.cse.to_bits(), rb.cse.to_bits());
            assert_eq!(ra.se.to_bits(), rb.se.to_bits());
        }
        cfg.seed = 1;
        let c = train_on(&features, &labels, &cfg).unwrap();
        assert!(
            a.losses.iter().zip(&c.losses).any(|(x, y)| x.total != y.total),
            "different seeds should differ somewhere"
        );
    }

    #[test]
    fn training_embeddings_stay_on_the_hyperboloid() {
        let (features, labels) = blob_dataset();
        let report = train_on(&features, &labels, &tiny_config()).unwrap();
        for z in &report.final_lorentz {
            let inner = geometry::lorentz_inner(z, z).unwrap();
            assert!((inner + 1.0).abs() < 1e-5, "<z,z> = {inner}");
        }
    }

    #[test]
    fn random_binary_trees_score_half_purity_on_balanced_labels() {
        // Permutation baseline: balanced 2-class labels against random
        // binary trees.
        let n = 16;
        let labels: Vec<usize> = (0..n).map(|i| i % 2).collect();
        let mut sum = 0.0;
        let trials = 100;
        for seed in 0..trials {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut live: Vec<usize> = (0..n).collect();
            let mut merges = Vec::new();
            let mut next = n;
            while live.len() > 1 {
                let i = rng.gen_range(0..live.len());
                let a = live.swap_remove(i);
                let j = rng.gen_range(0..live.len());
                let b = live.swap_remove(j);
                merges.push((a.min(b), a.max(b), next));
                live.push(next);
                next += 1;
            }
            let d = Dendrogram::new(n, merges).unwrap();
            sum += entropy::dendrogram_purity(&d.to_hierarchy(), &labels).unwrap();
        }
        let mean = sum / trials as f64;
        assert!((mean - 0.5).abs() < 0.1, "mean purity {mean}");
    }

    #[test]
    fn single_linkage_reference_separates_blobs() {
        let (features, labels) = blob_dataset();
        let tree = single_linkage_reference(&features).unwrap();
        let dp = entropy::dendrogram_purity(&tree.to_hierarchy(), &labels).unwrap();
        assert_eq!(dp, 1.0);
    }

    #[test]
    fn label_count_mismatch_is_rejected() {
        let (features, _) = blob_dataset();
        let err = train_on(&features, &[0, 1], &tiny_config()).unwrap_err();
        assert!(matches!(err, PipelineError::Metric(_)));
    }
}
