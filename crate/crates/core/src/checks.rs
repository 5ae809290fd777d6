//! Property suites behind `hypcse oracle --check <name>`. Each suite
//! stresses one mathematical contract against an independent oracle
//! (exhaustive enumeration, dense geodesic sampling, or finite differences)
//! and reports its worst observed deviation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cse::{self, CseConfig};
use crate::entropy::{self, Hierarchy};
use crate::geometry;
use crate::graph::{self, WeightedGraph};
use crate::gsl;
use crate::model::{BoundParams, Encoder, ParamStore, Projector, Tape, Var};

/// Outcome of one property suite.
#[derive(Debug, Clone)]
pub struct CheckReport {
    pub name: &'static str,
    /// Individual comparisons performed.
    pub trials: usize,
    /// Worst deviation (or smallest margin, for inequality checks).
    pub worst: f64,
    pub pass: bool,
    pub detail: String,
}

impl std::fmt::Display for CheckReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let status = if self.pass { "PASS" } else { "FAIL" };
        write!(
            f,
            "{}: {} ({} comparisons, worst {:.3e}; {})",
            self.name, status, self.trials, self.worst, self.detail
        )
    }
}

/// Random connected graph: a random spanning tree plus extra edges.
fn random_connected_graph(n: usize, rng: &mut ChaCha8Rng) -> WeightedGraph {
    let mut pairs = std::collections::BTreeSet::new();
    for v in 1..n {
        let u = rng.gen_range(0..v);
        pairs.insert((u, v));
    }
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(0.4) {
                pairs.insert((i, j));
            }
        }
    }
    let edges: Vec<(usize, usize, f64)> = pairs
        .into_iter()
        .map(|(u, v)| (u, v, rng.gen_range(0.2..2.0)))
        .collect();
    WeightedGraph::from_edges(n, &edges).expect("valid edges")
}

/// Random partitioning tree built by merging random live subsets.
fn random_hierarchy(n: usize, rng: &mut ChaCha8Rng) -> Hierarchy {
    let mut live: Vec<usize> = (0..n).collect();
    let mut parent: Vec<Option<usize>> = vec![None; n];
    let mut next = n;
    while live.len() > 1 {
        let k = rng.gen_range(2..=live.len());
        parent.push(None);
        for _ in 0..k {
            let i = rng.gen_range(0..live.len());
            let m = live.swap_remove(i);
            parent[m] = Some(next);
        }
        live.push(next);
        next += 1;
    }
    Hierarchy::from_parents(n, parent).expect("constructed bottom-up")
}

/// Definitional structural entropy vs the LCA reformulation, on every
/// hierarchy of 50 random graphs with up to 5 vertices.
pub fn check_theorem4(seed: u64) -> CheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trials = 0;
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let n = rng.gen_range(2..=5);
        let g = random_connected_graph(n, &mut rng);
        for h in entropy::enumerate_hierarchies(n).expect("within enumeration limit") {
            let direct = entropy::structural_entropy(&g, &h);
            let via_lca = entropy::structural_entropy_lca(&g, &h);
            worst = worst.max((direct - via_lca).abs());
            trials += 1;
        }
    }
    CheckReport {
        name: "theorem4",
        trials,
        worst,
        pass: worst < 1e-9,
        detail: "definitional SE vs LCA form on exhaustive hierarchies".into(),
    }
}

/// Binary trees attain the minimum structural entropy: brute-force minimum
/// over binary trees vs over all partitioning trees on 50 random graphs.
pub fn check_lemma2(seed: u64) -> CheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let trials = 50;
    for _ in 0..trials {
        let n = rng.gen_range(2..=5);
        let g = random_connected_graph(n, &mut rng);
        let (_, best_binary) = entropy::min_se_bruteforce(&g, true).expect("small n");
        let (_, best_any) = entropy::min_se_bruteforce(&g, false).expect("small n");
        worst = worst.max(best_binary - best_any);
    }
    CheckReport {
        name: "lemma2",
        trials,
        worst,
        pass: worst < 1e-9,
        detail: "binary-tree minimum SE equals the unrestricted minimum".into(),
    }
}

/// Entropy ratio dominates conductance: `SE/H1 >= conductance` on 500
/// random (graph, tree) pairs, conductance by exhaustive bipartition.
pub fn check_lemma3(seed: u64) -> CheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let trials = 500;
    let mut worst_margin = f64::INFINITY;
    let mut pass = true;
    for _ in 0..trials {
        let n = rng.gen_range(2..=8);
        let g = random_connected_graph(n, &mut rng);
        let h = random_hierarchy(n, &mut rng);
        pass &= entropy::check_conductance_bound(&g, &h).expect("connected graph");
        let phi = graph::conductance(&g).expect("connected graph");
        let h1 = entropy::one_dim_entropy(&g);
        if h1 > 0.0 {
            worst_margin = worst_margin.min(entropy::structural_entropy(&g, &h) / h1 - phi);
        }
    }
    CheckReport {
        name: "lemma3",
        trials,
        worst: worst_margin,
        pass,
        detail: "smallest ratio-minus-conductance margin".into(),
    }
}

fn random_ball_point(dim: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let radius = rng.gen_range(0.05..0.9);
    loop {
        let dir: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let n2: f64 = dir.iter().map(|v| v * v).sum();
        if n2 > 1e-4 && n2 <= 1.0 {
            let scale = radius / n2.sqrt();
            return dir.iter().map(|v| v * scale).collect();
        }
    }
}

/// Closed-form geodesic-origin distance vs dense sampling with ternary
/// refinement, on 500 non-degenerate pairs in 2 and 3 dimensions.
pub fn check_lemma6(seed: u64) -> CheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let trials = 500;
    let mut worst = 0.0f64;
    for t in 0..trials {
        let dim = if t % 2 == 0 { 2 } else { 3 };
        let (x, y) = loop {
            let x = random_ball_point(dim, &mut rng);
            let y = random_ball_point(dim, &mut rng);
            // Skip documented degeneracies: coincident or origin-collinear
            // pairs (the formula handles them by convention, the sampler by
            // grid luck).
            let nx2: f64 = x.iter().map(|v| v * v).sum();
            let ny2: f64 = y.iter().map(|v| v * v).sum();
            let d: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
            let cross2 = nx2 * ny2 - d * d;
            let diff2: f64 = x.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum();
            if cross2 > 1e-6 && diff2 > 1e-6 {
                break (x, y);
            }
        };
        let formula = geometry::geodesic_origin_distance(&x, &y);
        let sampled = geometry::sampled_origin_distance(&x, &y, 4000);
        worst = worst.max((formula - sampled).abs());
    }
    CheckReport {
        name: "lemma6",
        trials,
        worst,
        pass: worst < 1e-6,
        detail: "inversion-chain formula vs sampled geodesic minimum".into(),
    }
}

/// The fixed 6-vertex instance used by the gradient check.
fn gradcheck_graph() -> (WeightedGraph, WeightedGraph) {
    let edges = [
        (0, 1, 1.0),
        (1, 2, 1.0),
        (2, 3, 1.0),
        (3, 4, 1.0),
        (4, 5, 1.0),
        (1, 4, 0.5),
    ];
    let ga = WeightedGraph::from_edges(6, &edges).unwrap();
    let gl = WeightedGraph::from_edges(6, &edges[..5]).unwrap();
    (ga, gl)
}

struct LossProbe {
    tape: Tape,
    bound: BoundParams,
    losses: [Var; 3],
}

fn build_losses(
    store: &ParamStore,
    encoder: &Encoder,
    projector: &Projector,
    ga: &WeightedGraph,
    gl: &WeightedGraph,
    feats_a: &[Vec<f64>],
    feats_l: &[Vec<f64>],
    cse_cfg: &CseConfig,
) -> LossProbe {
    let mut tape = Tape::new();
    let bound = store.bind(&mut tape);
    let za = encoder.forward(&mut tape, &bound, feats_a, ga);
    let zl = encoder.forward(&mut tape, &bound, feats_l, gl);
    let ball: Vec<Vec<Var>> =
        za.iter().map(|z| cse::lorentz_to_poincare_var(&mut tape, z)).collect();
    let cse_v = cse::cse_loss_var(&mut tape, ga, &ball, ga.degrees(), cse_cfg);
    let pa = projector.forward(&mut tape, &bound, &za);
    let pl = projector.forward(&mut tape, &bound, &zl);
    let con_v = gsl::contrastive_loss_var(&mut tape, &pl, &pa, cse_cfg.t2, cse_cfg.r2)
        .expect("views have equal length");
    let cen_v = cse::centroid_loss_var(&mut tape, &za).expect("points are timelike");
    LossProbe { tape, bound, losses: [cse_v, con_v, cen_v] }
}

/// Analytic tape gradients of the three losses through the full 3-layer
/// encoder vs central finite differences, over `draws` random parameter
/// draws; two coordinates per tensor per draw are probed.
pub fn check_gradients_with(seed: u64, draws: usize) -> CheckReport {
    let (ga, gl) = gradcheck_graph();
    let cse_cfg = CseConfig { t1: 1.0, r1: 2.0, t2: 0.7, r2: 0.3, eta1: 1.0, eta2: 1.0 };
    let h = 1e-5;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let mut worst_at = String::new();
    let mut trials = 0;
    for _ in 0..draws {
        let mut store = ParamStore::new();
        let encoder = Encoder::new(&mut store, 4, 6, 3, 3, &mut rng);
        let projector = Projector::new(&mut store, 3, &mut rng);
        let feats_a: Vec<Vec<f64>> =
            (0..6).map(|_| (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let feats_l: Vec<Vec<f64>> =
            feats_a.iter().map(|row| row.iter().map(|v| v + 0.05).collect()).collect();

        let probe = build_losses(&store, &encoder, &projector, &ga, &gl, &feats_a, &feats_l, &cse_cfg);
        let analytic: Vec<Vec<Vec<f64>>> = probe
            .losses
            .iter()
            .map(|&loss| {
                let grads = probe.tape.backward(loss);
                store.collect_grads(&probe.bound, &grads).expect("finite gradients")
            })
            .collect();

        for id in store.ids().collect::<Vec<_>>() {
            let len = store.values(id).len();
            for _ in 0..2 {
                let coord = rng.gen_range(0..len);
                let original = store.values(id)[coord];
                store.values_mut(id)[coord] = original + h;
                let plus = build_losses(
                    &store, &encoder, &projector, &ga, &gl, &feats_a, &feats_l, &cse_cfg,
                );
                let plus_vals: Vec<f64> =
                    plus.losses.iter().map(|&l| plus.tape.val(l)).collect();
                store.values_mut(id)[coord] = original - h;
                let minus = build_losses(
                    &store, &encoder, &projector, &ga, &gl, &feats_a, &feats_l, &cse_cfg,
                );
                let minus_vals: Vec<f64> =
                    minus.losses.iter().map(|&l| minus.tape.val(l)).collect();
                store.values_mut(id)[coord] = original;

                for (l, grads) in analytic.iter().enumerate() {
                    let a = grads[id.index()][coord];
                    let fd = (plus_vals[l] - minus_vals[l]) / (2.0 * h);
                    // Central differences at h=1e-5 divide forward-pass rounding
                    // scatter (observed up to ~3e-10) by 2h, so the fd noise
                    // floor is ~1.5e-5; gradients below the 1e-1 denominator
                    // floor are held to the absolute bound 1e-4 instead of a
                    // relative one.
                    let rel = (a - fd).abs() / a.abs().max(fd.abs()).max(1e-1);
                    if rel > worst {
                        worst = rel;
                        worst_at = format!(
                            "loss {} at {}[{coord}]: analytic {a:.6e} vs fd {fd:.6e}",
                            ["cse", "con", "cen"][l],
                            store.name(id),
                        );
                    }
                    trials += 1;
                }
            }
        }
    }
    let mut detail = format!("{draws} parameter draws, central differences h={h:.0e}");
    if !worst_at.is_empty() && worst >= 1e-3 {
        detail.push_str(&format!("; {worst_at}"));
    }
    CheckReport { name: "gradcheck", trials, worst, pass: worst < 1e-3, detail }
}

/// [`check_gradients_with`] at the contract's 50 draws.
pub fn check_gradients(seed: u64) -> CheckReport {
    check_gradients_with(seed, 50)
}

/// Runs the named suite; `None` for an unknown name.
pub fn run_named(name: &str, seed: u64) -> Option<CheckReport> {
    match name {
        "theorem4" => Some(check_theorem4(seed)),
        "lemma2" => Some(check_lemma2(seed)),
        "lemma3" => Some(check_lemma3(seed)),
        "lemma6" => Some(check_lemma6(seed)),
        "gradcheck" => Some(check_gradients(seed)),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_graphs_are_connected_and_trees_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let n = rng.gen_range(2..=8);
            let g = random_connected_graph(n, &mut rng);
            assert!(g.is_connected());
            let h = random_hierarchy(n, &mut rng);
            assert_eq!(h.n_leaves(), n);
        }
    }

    #[test]
    fn quick_gradcheck_passes() {
        // The full 50-draw sweep runs in the acceptance suite; two draws
        // keep the unit test fast while covering the machinery.
        let report = check_gradients_with(11, 2);
        assert!(report.pass, "{report}");
    }

    #[test]
    fn named_dispatch_rejects_unknown_checks() {
        // The named suites themselves run in the acceptance tests.
        assert!(run_named("lemma7", 0).is_none());
        assert!(run_named("", 0).is_none());
    }
}
