//! Dataset ingestion, configuration, the training loop, evaluation, model
//! selection, and run exports.

pub mod config;
pub mod dataset;
pub mod export;
pub mod train;

pub use config::{ConfigError, RunConfig};
pub use dataset::{load_dataset, load_edge_list, load_labels, DataError, Dataset};
pub use export::{disk_svg, export_run, losses_csv};
pub use train::{
    evaluate, run_training, single_linkage_reference, train_on, EvalMetrics, LossRow, RunReport,
    SUBGRAPH_THRESHOLD,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Graph(#[from] crate::graph::GraphError),
    #[error(transparent)]
    Geometry(#[from] crate::geometry::GeometryError),
    #[error(transparent)]
    Tree(#[from] crate::entropy::TreeError),
    #[error(transparent)]
    Metric(#[from] crate::entropy::MetricError),
    #[error(transparent)]
    Decode(#[from] crate::decode::DecodeError),
    #[error(transparent)]
    Gsl(#[from] crate::gsl::GslError),
    #[error(transparent)]
    Param(#[from] crate::model::ParamError),
    #[error("cannot write output: {0}")]
    Io(#[from] std::io::Error),
    #[error("loss became non-finite at epoch {epoch}")]
    NumericFailure { epoch: usize },
}

impl PipelineError {
    /// Process exit code bucket: 1 usage, 2 data, 3 numeric failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => 1,
            PipelineError::Data(_)
            | PipelineError::Graph(_)
            | PipelineError::Tree(_)
            | PipelineError::Metric(_)
            | PipelineError::Decode(_)
            | PipelineError::Gsl(_)
            | PipelineError::Io(_) => 2,
            PipelineError::Geometry(_)
            | PipelineError::Param(_)
            | PipelineError::NumericFailure { .. } => 3,
        }
    }
}
