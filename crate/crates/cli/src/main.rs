//! `hypcse`: train hyperbolic structural-entropy embeddings, evaluate
//! decoded hierarchies, and run the oracle property suites.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hypcse_core::checks;
use hypcse_core::decode;
use hypcse_core::pipeline::{self, PipelineError, RunConfig};

#[derive(Parser)]
#[command(
    name = "hypcse",
    version,
    about = "Hyperbolic continuous structural entropy hierarchical clustering"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train on a dataset and export the decoded hierarchy.
    Run(RunArgs),
    /// Score an existing Newick tree against a graph and labels.
    Eval(EvalArgs),
    /// Run one property suite against its independent oracle.
    Oracle(OracleArgs),
}

macro_rules! override_args {
    ($($field:ident),* $(,)?) => {
        #[derive(Args)]
        struct RunArgs {
            /// Flat `key = value` config file; the flags below override it.
            #[arg(long)]
            config: Option<PathBuf>,
            $(
                #[arg(long, allow_hyphen_values = true)]
                $field: Option<String>,
            )*
        }

        impl RunArgs {
            fn overrides(&self) -> Vec<(&'static str, &str)> {
                let mut out = Vec::new();
                $(
                    if let Some(v) = &self.$field {
                        out.push((stringify!($field), v.as_str()));
                    }
                )*
                out
            }
        }
    };
}

override_args!(
    data,
    label_column,
    out,
    seed,
    epochs,
    k,
    sigma,
    standardize,
    p,
    tau,
    t1,
    r1,
    t2,
    r2,
    eta1,
    eta2,
    hidden,
    embed,
    layers,
    learner,
    lr_encoder,
    lr_learner,
    edge_drop,
    feature_mask,
    n_prime,
    n_seed,
    decode,
    decode_k,
    rho_max,
);

#[derive(Args)]
struct EvalArgs {
    /// Newick tree whose leaf names are vertex indices.
    #[arg(long)]
    tree: PathBuf,
    /// Edge list CSV: rows `u,v[,w]`.
    #[arg(long)]
    graph: PathBuf,
    /// Label file: one label per line, in vertex order.
    #[arg(long)]
    labels: PathBuf,
}

#[derive(Args)]
struct OracleArgs {
    /// One of: theorem4, lemma2, lemma3, lemma6, gradcheck.
    #[arg(long)]
    check: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn cmd_run(args: &RunArgs) -> Result<(), PipelineError> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    for (key, value) in args.overrides() {
        cfg.apply(key, value)?;
    }
    cfg.validate()?;
    let report = pipeline::run_training(&cfg)?;
    let created = pipeline::export_run(&report, Path::new(&cfg.out))?;
    println!(
        "best epoch {}: dp {:.4} se {:.4} dasgupta {:.4} ({:.1}s)",
        report.best_epoch,
        report.metrics.dp,
        report.metrics.se,
        report.metrics.dasgupta,
        report.wall_seconds
    );
    for path in created {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_eval(args: &EvalArgs) -> Result<(), PipelineError> {
    let text = std::fs::read_to_string(&args.tree)?;
    let tree = decode::parse_newick(text.trim())?;
    let (labels, _) = pipeline::load_labels(&args.labels)?;
    let graph = pipeline::load_edge_list(&args.graph, labels.len())?;
    if graph.n() != tree.n_leaves() {
        return Err(pipeline::DataError::Shape(format!(
            "graph has {} vertices but the tree has {} leaves",
            graph.n(),
            tree.n_leaves()
        ))
        .into());
    }
    let metrics = pipeline::evaluate(&tree, &graph, &labels)?;
    let json = serde_json::json!({
        "dp": metrics.dp,
        "se": metrics.se,
        "dasgupta": metrics.dasgupta,
    });
    println!("{json}");
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are successes; everything else is a
            // usage error (exit 1 by contract, not clap's default 2).
            let code = if e.exit_code() == 0 { 0 } else { 1 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let result = match &cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Oracle(args) => match checks::run_named(&args.check, args.seed) {
            None => {
                eprintln!(
                    "unknown check '{}'; expected theorem4, lemma2, lemma3, lemma6, or gradcheck",
                    args.check
                );
                return ExitCode::from(1);
            }
            Some(report) => {
                println!("{report}");
                return if report.pass { ExitCode::SUCCESS } else { ExitCode::from(3) };
            }
        },
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
