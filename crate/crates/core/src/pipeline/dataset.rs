//! CSV ingestion: feature/label tables plus edge lists and label files for
//! standalone evaluation.

use std::path::Path;

use thiserror::Error;

use crate::graph::{GraphError, WeightedGraph};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("cannot read dataset: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("dataset is empty")]
    Empty,
    #[error("label column '{0}' not found")]
    BadLabelColumn(String),
    #[error("row {row}: non-numeric value '{value}' in column {column}")]
    NonNumeric { row: usize, column: usize, value: String },
    #[error("row {0} has {1} fields, expected {2}")]
    RaggedRow(usize, usize, usize),
    #[error("need at least two rows, got {0}")]
    TooFewRows(usize),
    #[error("edge row {0}: {1}")]
    BadEdge(usize, String),
    #[error("{0}")]
    Shape(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Numeric features with dense integer labels; `label_names[l]` recovers the
/// original label text of class id `l`.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub label_names: Vec<String>,
}

impl Dataset {
    pub fn n(&self) -> usize {
        self.features.len()
    }

    pub fn n_features(&self) -> usize {
        self.features.first().map_or(0, Vec::len)
    }

    pub fn n_classes(&self) -> usize {
        self.label_names.len()
    }
}

fn read_rows(path: &Path) -> Result<Vec<(usize, Vec<String>)>, DataError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let cells: Vec<String> = record.iter().map(str::to_string).collect();
        if cells.iter().all(|c| c.is_empty()) {
            continue;
        }
        rows.push((i + 1, cells));
    }
    Ok(rows)
}

/// Loads a feature/label CSV. The label column is selected by header name or
/// by zero-based index; a header row is consumed when the label column is a
/// name, or detected (any non-numeric feature cell) when it is an index.
pub fn load_dataset(path: &Path, label_column: &str) -> Result<Dataset, DataError> {
    let mut rows = read_rows(path)?;
    if rows.is_empty() {
        return Err(DataError::Empty);
    }
    let width = rows[0].1.len();
    let label_idx = match label_column.parse::<usize>() {
        Ok(idx) => {
            if idx >= width {
                return Err(DataError::BadLabelColumn(label_column.to_string()));
            }
            // Header row: any feature cell that is not a number.
            let looks_like_header = rows[0]
                .1
                .iter()
                .enumerate()
                .any(|(c, cell)| c != idx && cell.parse::<f64>().is_err());
            if looks_like_header {
                rows.remove(0);
            }
            idx
        }
        Err(_) => {
            let header = rows.remove(0);
            header
                .1
                .iter()
                .position(|c| c == label_column)
                .ok_or_else(|| DataError::BadLabelColumn(label_column.to_string()))?
        }
    };
    if rows.len() < 2 {
        return Err(DataError::TooFewRows(rows.len()));
    }

    let mut features = Vec::with_capacity(rows.len());
    let mut labels = Vec::with_capacity(rows.len());
    let mut label_names: Vec<String> = Vec::new();
    for (file_row, cells) in &rows {
        if cells.len() != width {
            return Err(DataError::RaggedRow(*file_row, cells.len(), width));
        }
        let mut row = Vec::with_capacity(width - 1);
        for (c, cell) in cells.iter().enumerate() {
            if c == label_idx {
                continue;
            }
            let v: f64 = cell.parse().map_err(|_| DataError::NonNumeric {
                row: *file_row,
                column: c,
                value: cell.clone(),
            })?;
            row.push(v);
        }
        features.push(row);
        let name = &cells[label_idx];
        let id = match label_names.iter().position(|l| l == name) {
            Some(id) => id,
            None => {
                label_names.push(name.clone());
                label_names.len() - 1
            }
        };
        labels.push(id);
    }
    Ok(Dataset { features, labels, label_names })
}

/// Loads a weighted edge list: rows `u,v[,w]` with optional header, vertex
/// count inferred from the largest index (or forced by `min_n`).
pub fn load_edge_list(path: &Path, min_n: usize) -> Result<WeightedGraph, DataError> {
    let mut rows = read_rows(path)?;
    if !rows.is_empty() && rows[0].1.iter().any(|c| c.parse::<f64>().is_err()) {
        rows.remove(0);
    }
    let mut edges = Vec::with_capacity(rows.len());
    let mut n = min_n;
    for (file_row, cells) in &rows {
        if cells.len() != 2 && cells.len() != 3 {
            return Err(DataError::BadEdge(*file_row, format!("{} fields", cells.len())));
        }
        let parse_ix = |cell: &str| {
            cell.parse::<usize>()
                .map_err(|_| DataError::BadEdge(*file_row, format!("bad vertex '{cell}'")))
        };
        let u = parse_ix(&cells[0])?;
        let v = parse_ix(&cells[1])?;
        let w = match cells.get(2) {
            Some(cell) => cell
                .parse::<f64>()
                .map_err(|_| DataError::BadEdge(*file_row, format!("bad weight '{cell}'")))?,
            None => 1.0,
        };
        n = n.max(u + 1).max(v + 1);
        edges.push((u, v, w));
    }
    if n == 0 {
        return Err(DataError::Empty);
    }
    Ok(WeightedGraph::from_edges(n, &edges)?)
}

/// Loads one label per line (no header) and densifies to integer class ids.
pub fn load_labels(path: &Path) -> Result<(Vec<usize>, Vec<String>), DataError> {
    let text = std::fs::read_to_string(path)?;
    let mut labels = Vec::new();
    let mut names: Vec<String> = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let id = match names.iter().position(|l| l == line) {
            Some(id) => id,
            None => {
                names.push(line.to_string());
                names.len() - 1
            }
        };
        labels.push(id);
    }
    if labels.is_empty() {
        return Err(DataError::Empty);
    }
    Ok((labels, names))
}
