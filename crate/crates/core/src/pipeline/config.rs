//! Run configuration: a flat `key = value` file plus CLI overrides.

use std::path::Path;

use serde_json::json;
use thiserror::Error;

use crate::decode::DecodeMode;
use crate::model::LearnerVariant;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
    #[error("config line {0}: expected 'key = value'")]
    BadLine(usize),
    #[error("unknown config key '{0}'")]
    UnknownKey(String),
    #[error("invalid value '{1}' for '{0}': {2}")]
    BadValue(String, String, String),
    #[error("missing required setting '{0}'")]
    Missing(&'static str),
}

/// Every knob of a training run. Constructed from [`RunConfig::default`],
/// then layered with a config file and `--key value` CLI overrides.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Dataset CSV path (required for `run`).
    pub data: String,
    /// Label column, by header name or zero-based index.
    pub label_column: String,
    /// Output directory for exports.
    pub out: String,
    pub seed: u64,
    pub epochs: usize,
    /// Anchor kNN graph: neighbors per vertex.
    pub k: usize,
    /// Anchor kNN graph: Gaussian kernel width.
    pub sigma: f64,
    /// Z-score feature columns before kernel evaluation. Scoped to the kNN
    /// kernel only: the encoder and the learner always see the raw rows.
    pub standardize: bool,
    /// Learner graph: affinities kept per vertex.
    pub p: usize,
    /// Anchor bootstrap retention probability.
    pub tau: f64,
    /// Softmax temperature of the soft descendant indicator.
    pub t1: f64,
    /// Score offset of the soft descendant indicator.
    pub r1: f64,
    /// Contrastive temperature.
    pub t2: f64,
    /// Contrastive score offset.
    pub r2: f64,
    /// Contrastive loss weight.
    pub eta1: f64,
    /// Centroid regularizer weight.
    pub eta2: f64,
    /// Spatial width of hidden encoder layers.
    pub hidden: usize,
    /// Spatial width of the embedding layer. Set to 2 to get the disk plot;
    /// the default 16 favors clustering quality over visualization.
    pub embed: usize,
    /// Encoder depth.
    pub layers: usize,
    pub learner: LearnerVariant,
    pub lr_encoder: f64,
    pub lr_learner: f64,
    pub edge_drop: f64,
    pub feature_mask: f64,
    /// Subgraph size when sampling is active (datasets above the threshold).
    pub n_prime: usize,
    /// Seeds per sampled subgraph.
    pub n_seed: usize,
    pub decode: DecodeMode,
    /// Neighbor count for the fast decoder.
    pub decode_k: usize,
    /// Radius points are pushed to before decoding.
    pub rho_max: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            data: String::new(),
            label_column: "class".into(),
            out: "out".into(),
            seed: 0,
            epochs: 200,
            k: 10,
            sigma: 1.0,
            standardize: true,
            p: 10,
            tau: 0.9999,
            t1: 1000.0,
            r1: 2.0,
            t2: 1.0,
            r2: 0.0,
            eta1: 1.0,
            eta2: 1.0,
            hidden: 16,
            embed: 16,
            layers: 3,
            learner: LearnerVariant::Gcn,
            lr_encoder: 1e-2,
            lr_learner: 1e-3,
            edge_drop: 0.2,
            feature_mask: 0.2,
            n_prime: 1024,
            n_seed: 16,
            decode: DecodeMode::Naive,
            decode_k: 10,
            rho_max: 0.999,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e: T::Err| {
        ConfigError::BadValue(key.to_string(), value.to_string(), e.to_string())
    })
}

impl RunConfig {
    /// Defaults layered with the given config file.
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        let text = std::fs::read_to_string(path)?;
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(ConfigError::BadLine(no + 1))?;
            cfg.apply(key.trim(), value.trim())?;
        }
        Ok(cfg)
    }

    /// Sets one field from its textual form; unknown keys are rejected.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        match key {
            "data" => self.data = value.to_string(),
            "label_column" => self.label_column = value.to_string(),
            "out" => self.out = value.to_string(),
            "seed" => self.seed = parse_num(key, value)?,
            "epochs" => self.epochs = parse_num(key, value)?,
            "k" => self.k = parse_num(key, value)?,
            "sigma" => self.sigma = parse_num(key, value)?,
            "standardize" => self.standardize = parse_num(key, value)?,
            "p" => self.p = parse_num(key, value)?,
            "tau" => self.tau = parse_num(key, value)?,
            "t1" => self.t1 = parse_num(key, value)?,
            "r1" => self.r1 = parse_num(key, value)?,
            "t2" => self.t2 = parse_num(key, value)?,
            "r2" => self.r2 = parse_num(key, value)?,
            "eta1" => self.eta1 = parse_num(key, value)?,
            "eta2" => self.eta2 = parse_num(key, value)?,
            "hidden" => self.hidden = parse_num(key, value)?,
            "embed" => self.embed = parse_num(key, value)?,
            "layers" => self.layers = parse_num(key, value)?,
            "learner" => {
                self.learner = match value {
                    "gcn" => LearnerVariant::Gcn,
                    "mlp" => LearnerVariant::Mlp,
                    _ => {
                        return Err(ConfigError::BadValue(
                            key.into(),
                            value.into(),
                            "expected 'gcn' or 'mlp'".into(),
                        ))
                    }
                }
            }
            "lr_encoder" => self.lr_encoder = parse_num(key, value)?,
            "lr_learner" => self.lr_learner = parse_num(key, value)?,
            "edge_drop" => self.edge_drop = parse_num(key, value)?,
            "feature_mask" => self.feature_mask = parse_num(key, value)?,
            "n_prime" => self.n_prime = parse_num(key, value)?,
            "n_seed" => self.n_seed = parse_num(key, value)?,
            "decode" => {
                self.decode = match value {
                    "naive" => DecodeMode::Naive,
                    "fast" => DecodeMode::Fast,
                    _ => {
                        return Err(ConfigError::BadValue(
                            key.into(),
                            value.into(),
                            "expected 'naive' or 'fast'".into(),
                        ))
                    }
                }
            }
            "decode_k" => self.decode_k = parse_num(key, value)?,
            "rho_max" => self.rho_max = parse_num(key, value)?,
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    /// Range checks; call after all overrides are applied.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |key: &str, value: String, why: &str| {
            Err(ConfigError::BadValue(key.into(), value, why.into()))
        };
        if self.k == 0 {
            return bad("k", self.k.to_string(), "must be at least 1");
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return bad("sigma", self.sigma.to_string(), "must be positive");
        }
        if self.p == 0 {
            return bad("p", self.p.to_string(), "must be at least 1");
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return bad("tau", self.tau.to_string(), "must lie in (0, 1]");
        }
        for (key, value) in [("t1", self.t1), ("t2", self.t2)] {
            if !(value > 0.0 && value.is_finite()) {
                return bad(key, value.to_string(), "temperature must be positive");
            }
        }
        for (key, value) in [("r1", self.r1), ("r2", self.r2)] {
            if !value.is_finite() {
                return bad(key, value.to_string(), "must be finite");
            }
        }
        for (key, value) in [("eta1", self.eta1), ("eta2", self.eta2)] {
            if !(value >= 0.0 && value.is_finite()) {
                return bad(key, value.to_string(), "weight must be nonnegative");
            }
        }
        for (key, value) in [("hidden", self.hidden), ("embed", self.embed), ("layers", self.layers)]
        {
            if value == 0 {
                return bad(key, value.to_string(), "must be at least 1");
            }
        }
        for (key, value) in [("lr_encoder", self.lr_encoder), ("lr_learner", self.lr_learner)] {
            if !(value > 0.0 && value.is_finite()) {
                return bad(key, value.to_string(), "learning rate must be positive");
            }
        }
        for (key, value) in [("edge_drop", self.edge_drop), ("feature_mask", self.feature_mask)] {
            if !(0.0..1.0).contains(&value) {
                return bad(key, value.to_string(), "rate must lie in [0, 1)");
            }
        }
        if self.n_prime < 2 {
            return bad("n_prime", self.n_prime.to_string(), "must be at least 2");
        }
        if self.n_seed == 0 {
            return bad("n_seed", self.n_seed.to_string(), "must be at least 1");
        }
        if self.decode_k == 0 {
            return bad("decode_k", self.decode_k.to_string(), "must be at least 1");
        }
        if !(self.rho_max > 0.0 && self.rho_max < 1.0) {
            return bad("rho_max", self.rho_max.to_string(), "must lie in (0, 1)");
        }
        Ok(())
    }

    /// Full echo of the configuration for the metrics export.
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "data": self.data,
            "label_column": self.label_column,
            "out": self.out,
            "seed": self.seed,
            "epochs": self.epochs,
            "k": self.k,
            "sigma": self.sigma,
            "standardize": self.standardize,
            "p": self.p,
            "tau": self.tau,
            "t1": self.t1,
            "r1": self.r1,
            "t2": self.t2,
            "r2": self.r2,
            "eta1": self.eta1,
            "eta2": self.eta2,
            "hidden": self.hidden,
            "embed": self.embed,
            "layers": self.layers,
            "learner": match self.learner {
                LearnerVariant::Gcn => "gcn",
                LearnerVariant::Mlp => "mlp",
            },
            "lr_encoder": self.lr_encoder,
            "lr_learner": self.lr_learner,
            "edge_drop": self.edge_drop,
            "feature_mask": self.feature_mask,
            "n_prime": self.n_prime,
            "n_seed": self.n_seed,
            "decode": match self.decode {
                DecodeMode::Naive => "naive",
                DecodeMode::Fast => "fast",
            },
            "decode_k": self.decode_k,
            "rho_max": self.rho_max,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn defaults_match_the_documented_values() {
        let cfg = RunConfig::default();
        assert_eq!(cfg.t1, 1000.0);
        assert_eq!(cfg.r1, 2.0);
        assert_eq!(cfg.t2, 1.0);
        assert_eq!(cfg.r2, 0.0);
        assert_eq!(cfg.tau, 0.9999);
        assert_eq!(cfg.k, 10);
        assert_eq!(cfg.sigma, 1.0);
        assert_eq!(cfg.eta1, 1.0);
        assert_eq!(cfg.eta2, 1.0);
        assert_eq!(cfg.epochs, 200);
        assert_eq!(cfg.layers, 3);
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn file_layering_and_comments() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        let mut f = std::fs::File::create(&path).unwrap();
        writeln!(f, "# training setup").unwrap();
        writeln!(f, "data = data/zoo.csv").unwrap();
        writeln!(f, "epochs = 50   # short run").unwrap();
        writeln!(f, "tau=0.5").unwrap();
        writeln!(f).unwrap();
        drop(f);
        let cfg = RunConfig::from_file(&path).unwrap();
        assert_eq!(cfg.data, "data/zoo.csv");
        assert_eq!(cfg.epochs, 50);
        assert_eq!(cfg.tau, 0.5);
        assert_eq!(cfg.k, 10, "untouched fields keep defaults");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let mut cfg = RunConfig::default();
        let err = cfg.apply("t3", "1").unwrap_err();
        assert!(matches!(err, ConfigError::UnknownKey(k) if k == "t3"));
    }

    #[test]
    fn bad_values_name_the_key() {
        let mut cfg = RunConfig::default();
        assert!(matches!(
            cfg.apply("epochs", "many"),
            Err(ConfigError::BadValue(k, v, _)) if k == "epochs" && v == "many"
        ));
        assert!(cfg.apply("learner", "transformer").is_err());
        assert!(cfg.apply("decode", "greedy").is_err());
    }

    #[test]
    fn validation_rejects_out_of_range_settings() {
        for (key, value) in [
            ("tau", "0"),
            ("tau", "1.5"),
            ("t1", "0"),
            ("sigma", "-1"),
            ("edge_drop", "1"),
            ("rho_max", "1"),
            ("layers", "0"),
            ("lr_encoder", "0"),
        ] {
            let mut cfg = RunConfig::default();
            cfg.apply(key, value).unwrap();
            assert!(cfg.validate().is_err(), "{key}={value} should fail");
        }
    }

    #[test]
    fn json_echo_round_trips_every_key() {
        let cfg = RunConfig::default();
        let echo = cfg.to_json();
        let map = echo.as_object().unwrap();
        let mut back = RunConfig::default();
        back.epochs = 1; // scribble, then restore from the echo
        for (key, value) in map {
            let text = match value {
                serde_json::Value::String(s) => s.clone(),
                other => other.to_string(),
            };
            back.apply(key, &text).unwrap();
        }
        assert_eq!(back, cfg);
    }
}
