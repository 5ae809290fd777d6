//! Named parameter tensors: initialization, tape binding, gradient
//! collection, and a plain-text checkpoint format.

use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;
use thiserror::Error;

use super::tape::{Grads, Tape, Var};

#[derive(Debug, Error)]
pub enum ParamError {
    #[error("checkpoint io: {0}")]
    Io(#[from] std::io::Error),
    #[error("checkpoint parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("checkpoint tensor '{name}' has shape {got_rows}x{got_cols}, expected {want_rows}x{want_cols}")]
    ShapeMismatch {
        name: String,
        got_rows: usize,
        got_cols: usize,
        want_rows: usize,
        want_cols: usize,
    },
    #[error("checkpoint is missing tensor '{0}'")]
    MissingTensor(String),
    #[error("checkpoint contains unknown tensor '{0}'")]
    UnknownTensor(String),
    #[error("gradient for parameter '{0}' is not finite")]
    NonFiniteGrad(String),
    #[error("update for parameter '{0}' left the Lorentz manifold")]
    ManifoldDrift(String),
}

/// Handle to one tensor inside a [`ParamStore`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ParamId(usize);

impl ParamId {
    pub(crate) fn index(self) -> usize {
        self.0
    }
}

/// Flat storage for every trainable tensor in a model, addressed by name.
///
/// Tensors are row-major `(rows, cols)`; vectors use `cols == 1`. Creation
/// order is the canonical order used by [`ParamStore::bind`] and the
/// optimizer, so a store rebuilt with the same calls lines up with a
/// checkpoint written by an earlier run.
#[derive(Debug, Clone, Default)]
pub struct ParamStore {
    names: Vec<String>,
    shapes: Vec<(usize, usize)>,
    values: Vec<Vec<f64>>,
}

/// Tape leaves for every tensor of a store, in store order.
pub struct BoundParams {
    vars: Vec<Vec<Var>>,
}

impl BoundParams {
    pub fn vars(&self, id: ParamId) -> &[Var] {
        &self.vars[id.0]
    }

    /// One row of a bound matrix.
    pub fn row(&self, id: ParamId, row: usize, cols: usize) -> &[Var] {
        &self.vars[id.0][row * cols..(row + 1) * cols]
    }
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of tensors.
    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// Matrix with entries drawn uniformly from `[-1/sqrt(cols), 1/sqrt(cols)]`.
    pub fn matrix<R: Rng>(&mut self, name: &str, rows: usize, cols: usize, rng: &mut R) -> ParamId {
        let scale = 1.0 / (cols as f64).sqrt();
        let values = (0..rows * cols)
            .map(|_| rng.gen_range(-scale..=scale))
            .collect();
        self.push(name, (rows, cols), values)
    }

    /// Zero-initialized vector (bias).
    pub fn zeros(&mut self, name: &str, len: usize) -> ParamId {
        self.push(name, (len, 1), vec![0.0; len])
    }

    fn push(&mut self, name: &str, shape: (usize, usize), values: Vec<f64>) -> ParamId {
        debug_assert!(!self.names.iter().any(|n| n == name), "duplicate tensor name");
        debug_assert_eq!(values.len(), shape.0 * shape.1);
        self.names.push(name.to_string());
        self.shapes.push(shape);
        self.values.push(values);
        ParamId(self.names.len() - 1)
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.names[id.0]
    }

    pub fn shape(&self, id: ParamId) -> (usize, usize) {
        self.shapes[id.0]
    }

    pub fn values(&self, id: ParamId) -> &[f64] {
        &self.values[id.0]
    }

    pub fn values_mut(&mut self, id: ParamId) -> &mut [f64] {
        &mut self.values[id.0]
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.names.len()).map(ParamId)
    }

    /// Push every tensor entry onto the tape as a leaf.
    pub fn bind(&self, tape: &mut Tape) -> BoundParams {
        let vars = self
            .values
            .iter()
            .map(|vals| vals.iter().map(|&v| tape.leaf(v)).collect())
            .collect();
        BoundParams { vars }
    }

    /// Collect per-tensor gradients after a backward pass.
    ///
    /// Errors with the tensor name if any component is NaN or infinite.
    pub fn collect_grads(
        &self,
        bound: &BoundParams,
        grads: &Grads,
    ) -> Result<Vec<Vec<f64>>, ParamError> {
        let mut out = Vec::with_capacity(self.values.len());
        for (i, vars) in bound.vars.iter().enumerate() {
            let g: Vec<f64> = vars.iter().map(|&v| grads.get(v)).collect();
            if g.iter().any(|x| !x.is_finite()) {
                return Err(ParamError::NonFiniteGrad(self.names[i].clone()));
            }
            out.push(g);
        }
        Ok(out)
    }

    /// Write all tensors to a plain-text checkpoint.
    pub fn save(&self, path: &Path) -> Result<(), ParamError> {
        let mut out = String::from("hypcse-params v1\n");
        for i in 0..self.names.len() {
            let (rows, cols) = self.shapes[i];
            writeln!(out, "tensor {} {} {}", self.names[i], rows, cols).unwrap();
            for r in 0..rows {
                let row = &self.values[i][r * cols..(r + 1) * cols];
                let line: Vec<String> = row.iter().map(|v| format!("{v:.17e}")).collect();
                out.push_str(&line.join(" "));
                out.push('\n');
            }
        }
        std::fs::write(path, out)?;
        Ok(())
    }

    /// Load a checkpoint written by [`ParamStore::save`] into an existing
    /// store with identical tensor names and shapes.
    pub fn load(&mut self, path: &Path) -> Result<(), ParamError> {
        let text = std::fs::read_to_string(path)?;
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, "hypcse-params v1")) => {}
            other => {
                return Err(ParamError::Parse {
                    line: 1,
                    msg: format!("bad header {:?}", other.map(|(_, l)| l)),
                })
            }
        }
        let mut seen = vec![false; self.names.len()];
        while let Some((ln, line)) = lines.next() {
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            if parts.next() != Some("tensor") {
                return Err(ParamError::Parse {
                    line: ln + 1,
                    msg: format!("expected tensor header, got '{line}'"),
                });
            }
            let name = parts
                .next()
                .ok_or_else(|| ParamError::Parse { line: ln + 1, msg: "missing name".into() })?;
            let rows: usize = parts
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| ParamError::Parse { line: ln + 1, msg: "bad rows".into() })?;
            let cols: usize = parts
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| ParamError::Parse { line: ln + 1, msg: "bad cols".into() })?;
            let idx = self
                .names
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| ParamError::UnknownTensor(name.to_string()))?;
            let (want_rows, want_cols) = self.shapes[idx];
            if (rows, cols) != (want_rows, want_cols) {
                return Err(ParamError::ShapeMismatch {
                    name: name.to_string(),
                    got_rows: rows,
                    got_cols: cols,
                    want_rows,
                    want_cols,
                });
            }
            let mut values = Vec::with_capacity(rows * cols);
            for _ in 0..rows {
                let (rln, row) = lines.next().ok_or_else(|| ParamError::Parse {
                    line: ln + 1,
                    msg: format!("tensor '{name}' truncated"),
                })?;
                for tok in row.split_whitespace() {
                    let v: f64 = tok.parse().map_err(|_| ParamError::Parse {
                        line: rln + 1,
                        msg: format!("bad float '{tok}'"),
                    })?;
                    values.push(v);
                }
            }
            if values.len() != rows * cols {
                return Err(ParamError::Parse {
                    line: ln + 1,
                    msg: format!(
                        "tensor '{name}' has {} values, expected {}",
                        values.len(),
                        rows * cols
                    ),
                });
            }
            self.values[idx] = values;
            seen[idx] = true;
        }
        if let Some(missing) = seen.iter().position(|&s| !s) {
            return Err(ParamError::MissingTensor(self.names[missing].clone()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn init_respects_fan_in_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut store = ParamStore::new();
        let w = store.matrix("w", 8, 25, &mut rng);
        let bound = 1.0 / 5.0;
        assert!(store.values(w).iter().all(|v| v.abs() <= bound));
        // Same seed reproduces the same tensor.
        let mut rng2 = ChaCha8Rng::seed_from_u64(7);
        let mut store2 = ParamStore::new();
        let w2 = store2.matrix("w", 8, 25, &mut rng2);
        assert_eq!(store.values(w), store2.values(w2));
    }

    #[test]
    fn checkpoint_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut store = ParamStore::new();
        store.matrix("layer.weight", 3, 4, &mut rng);
        store.zeros("layer.bias", 3);
        let dir = std::env::temp_dir().join("hypcse-params-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("ckpt.txt");
        store.save(&path).unwrap();

        let mut rng2 = ChaCha8Rng::seed_from_u64(99);
        let mut other = ParamStore::new();
        let w = other.matrix("layer.weight", 3, 4, &mut rng2);
        let b = other.zeros("layer.bias", 3);
        other.values_mut(b)[1] = 5.0;
        other.load(&path).unwrap();
        assert_eq!(other.values(w), store.values(ParamId(0)));
        assert_eq!(other.values(b), vec![0.0; 3]);
        std::fs::remove_file(&path).unwrap();
    }

    #[test]
    fn load_rejects_shape_mismatch() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut store = ParamStore::new();
        store.matrix("w", 2, 2, &mut rng);
        let dir = std::env::temp_dir().join("hypcse-params-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("bad.txt");
        store.save(&path).unwrap();

        let mut other = ParamStore::new();
        other.matrix("w", 2, 3, &mut rng);
        assert!(matches!(
            other.load(&path),
            Err(ParamError::ShapeMismatch { .. })
        ));
        std::fs::remove_file(&path).unwrap();
    }

    #[test]
    fn non_finite_gradients_name_the_tensor() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut store = ParamStore::new();
        let w = store.matrix("enc.theta", 1, 1, &mut rng);
        store.values_mut(w)[0] = 0.0;
        let mut tape = Tape::new();
        let bound = store.bind(&mut tape);
        // 1/w at w = 0 produces an infinite gradient.
        let r = tape.recip(bound.vars(w)[0]);
        let grads = tape.backward(r);
        match store.collect_grads(&bound, &grads) {
            Err(ParamError::NonFiniteGrad(name)) => assert_eq!(name, "enc.theta"),
            other => panic!("expected NonFiniteGrad, got {other:?}"),
        }
    }
}
