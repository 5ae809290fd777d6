//! Run artifacts: metrics, tree serializations, the loss curve, and the
//! 2-dimensional disk plot.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use log::info;
use serde_json::json;

use super::train::RunReport;
use super::PipelineError;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

/// Loss curve CSV, one row per epoch.
pub fn losses_csv(report: &RunReport) -> String {
    let mut out = String::from("epoch,cse,con,cen,total,se,dp\n");
    for row in &report.losses {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            row.epoch, row.cse, row.con, row.cen, row.total, row.se, row.dp
        )
        .expect("string writes cannot fail");
    }
    out
}

/// Poincare disk scatter of 2-dimensional ball embeddings, colored by label.
pub fn disk_svg(ball: &[Vec<f64>], labels: &[usize]) -> String {
    let size = 640.0;
    let c = size / 2.0;
    let r = c - 20.0;
    let mut out = String::new();
    writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{size}\" height=\"{size}\" viewBox=\"0 0 {size} {size}\">"
    )
    .unwrap();
    writeln!(
        out,
        "  <circle cx=\"{c}\" cy=\"{c}\" r=\"{r}\" fill=\"white\" stroke=\"#333\" stroke-width=\"1.5\"/>"
    )
    .unwrap();
    for (p, &label) in ball.iter().zip(labels) {
        let x = c + r * p[0];
        let y = c - r * p[1];
        let color = PALETTE[label % PALETTE.len()];
        writeln!(out, "  <circle cx=\"{x:.3}\" cy=\"{y:.3}\" r=\"4\" fill=\"{color}\" fill-opacity=\"0.85\"/>")
            .unwrap();
    }
    writeln!(out, "</svg>").unwrap();
    out
}

/// Writes `metrics.json`, `tree.newick`, `merges.json`, `losses.csv`, and
/// (for 2-dimensional embeddings) `disk.svg` into `out_dir`. Returns the
/// created paths.
pub fn export_run(report: &RunReport, out_dir: &Path) -> Result<Vec<PathBuf>, PipelineError> {
    std::fs::create_dir_all(out_dir)?;
    let mut created = Vec::new();
    let emit = |name: &str, content: String, created: &mut Vec<PathBuf>| {
        let path = out_dir.join(name);
        std::fs::write(&path, content).map(|_| created.push(path))
    };

    let metrics = json!({
        "dp": report.metrics.dp,
        "se": report.metrics.se,
        "dasgupta": report.metrics.dasgupta,
        "best_epoch": report.best_epoch,
        "config": report.config.to_json(),
    });
    let mut metrics_text = serde_json::to_string_pretty(&metrics).expect("plain values");
    metrics_text.push('\n');
    emit("metrics.json", metrics_text, &mut created)?;
    emit("tree.newick", report.best_tree.to_newick(None) + "\n", &mut created)?;
    emit("merges.json", report.best_tree.merges_json() + "\n", &mut created)?;
    emit("losses.csv", losses_csv(report), &mut created)?;

    let dim = report.best_ball.first().map_or(0, Vec::len);
    if dim == 2 {
        emit("disk.svg", disk_svg(&report.best_ball, &report.labels), &mut created)?;
    } else {
        info!("skipping disk.svg: embedding dimension is {dim}, not 2");
    }
    Ok(created)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decode::{parse_newick, Dendrogram};
    use crate::graph::WeightedGraph;
    use crate::pipeline::config::RunConfig;
    use crate::pipeline::train::{EvalMetrics, LossRow};

    fn sample_report(embed_dim: usize) -> RunReport {
        let ball = vec![vec![0.1; embed_dim], vec![-0.2; embed_dim], vec![0.3; embed_dim]];
        RunReport {
            losses: vec![
                LossRow { epoch: 0, cse: 2.0, con: 1.0, cen: 0.5, total: 3.5, se: 1.9, dp: 0.8 },
                LossRow { epoch: 1, cse: 1.5, con: 0.9, cen: 0.4, total: 2.8, se: 1.7, dp: 0.9 },
            ],
            best_epoch: 1,
            metrics: EvalMetrics { dp: 0.9, se: 1.7, dasgupta: 12.0 },
            wall_seconds: 0.5,
            best_tree: Dendrogram::new(3, vec![(0, 1, 3), (2, 3, 4)]).unwrap(),
            best_ball: ball.clone(),
            final_lorentz: ball,
            labels: vec![0, 1, 0],
            anchor0: WeightedGraph::from_edges(3, &[(0, 1, 1.0), (1, 2, 1.0)]).unwrap(),
            config: RunConfig::default(),
        }
    }

    #[test]
    fn metrics_json_has_exactly_the_contract_keys() {
        let dir = tempfile::tempdir().unwrap();
        export_run(&sample_report(2), dir.path()).unwrap();
        let text = std::fs::read_to_string(dir.path().join("metrics.json")).unwrap();
        let value: serde_json::Value = serde_json::from_str(&text).unwrap();
        let obj = value.as_object().unwrap();
        let mut keys: Vec<&str> = obj.keys().map(String::as_str).collect();
        keys.sort_unstable();
        assert_eq!(keys, ["best_epoch", "config", "dasgupta", "dp", "se"]);
    }

    #[test]
    fn newick_export_round_trips_through_the_parser() {
        let dir = tempfile::tempdir().unwrap();
        export_run(&sample_report(2), dir.path()).unwrap();
        let text = std::fs::read_to_string(dir.path().join("tree.newick")).unwrap();
        let h = parse_newick(text.trim()).unwrap();
        assert_eq!(h.n_leaves(), 3);
    }

    #[test]
    fn svg_emitted_only_for_two_dimensional_embeddings() {
        let dir = tempfile::tempdir().unwrap();
        let created = export_run(&sample_report(2), dir.path()).unwrap();
        assert!(created.iter().any(|p| p.ends_with("disk.svg")));
        let dir3 = tempfile::tempdir().unwrap();
        let created3 = export_run(&sample_report(3), dir3.path()).unwrap();
        assert!(!created3.iter().any(|p| p.ends_with("disk.svg")));
        assert!(!dir3.path().join("disk.svg").exists());
    }

    #[test]
    fn losses_csv_lists_every_epoch_in_order() {
        let text = losses_csv(&sample_report(2));
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "epoch,cse,con,cen,total,se,dp");
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("0,"));
        assert!(lines[2].starts_with("1,"));
    }
}
