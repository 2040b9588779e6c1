//! Experiment configuration files.
//!
//! Configs are TOML. Top-level keys describe the sweep; a table named after
//! the regime overrides its model parameters; `[cluster]`, `[constants]` and
//! `[dataset]` tables are optional.
//!
//! ```toml
//! regime = "sparse_ssbm"
//! n_grid = [200, 800, 3200]
//! epsilon_grid = [0.5, 2, inf]
//! replications = 20
//! seed = 7
//!
//! [sparse_ssbm]
//! k = 2
//! p = 1.5
//! r = 0.15
//! exponent = -0.3
//! ```

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Deserialize;

use crate::block_model::SymmetricSpec;
use crate::cluster::ClusterConfig;
use crate::error::{Error, Result};
use crate::mechanism::PrivacyBudget;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    DenseSsbm,
    SparseSsbm,
    DenseSdcbm,
    SparseSdcbm,
    Dataset,
}

impl Regime {
    pub const ALL: [Regime; 5] = [
        Regime::DenseSsbm,
        Regime::SparseSsbm,
        Regime::DenseSdcbm,
        Regime::SparseSdcbm,
        Regime::Dataset,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Regime::DenseSsbm => "dense_ssbm",
            Regime::SparseSsbm => "sparse_ssbm",
            Regime::DenseSdcbm => "dense_sdcbm",
            Regime::SparseSdcbm => "sparse_sdcbm",
            Regime::Dataset => "dataset",
        }
    }

    pub fn is_degree_corrected(self) -> bool {
        matches!(self, Regime::DenseSdcbm | Regime::SparseSdcbm)
    }

    /// Default simulation parameters; `None` for the dataset regime.
    pub fn default_model(self) -> Option<ModelRule> {
        let (k, p, r, a, exponent) = match self {
            Regime::DenseSsbm => (3, 0.2, 0.05, None, 0.0),
            Regime::SparseSsbm => (2, 1.5, 0.15, None, -0.3),
            Regime::DenseSdcbm => (3, 0.4, 0.05, Some(0.3), 0.0),
            Regime::SparseSdcbm => (2, 2.0, 0.1, Some(0.3), -0.25),
            Regime::Dataset => return None,
        };
        Some(ModelRule { k, p, r, a, exponent })
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Regime::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown regime {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Algorithm {
    KMeans,
    KMedians,
    /// k-means for SBM regimes, k-medians for degree-corrected and dataset runs.
    #[default]
    Auto,
}

impl Algorithm {
    pub fn resolve(self, regime: Regime) -> Algorithm {
        match self {
            Algorithm::Auto if regime.is_degree_corrected() || regime == Regime::Dataset => Algorithm::KMedians,
            Algorithm::Auto => Algorithm::KMeans,
            other => other,
        }
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kmeans" => Ok(Algorithm::KMeans),
            "kmedians" => Ok(Algorithm::KMedians),
            "auto" => Ok(Algorithm::Auto),
            _ => Err(Error::Config(format!("unknown algorithm {s:?}"))),
        }
    }
}

/// Symmetric model parameters as functions of `n`:
/// `p_n = p n^exponent`, `r_n = r n^exponent`.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelRule {
    pub k: usize,
    pub p: f64,
    pub r: f64,
    /// Degree-parameter lower bound; required for degree-corrected regimes.
    #[serde(default)]
    pub a: Option<f64>,
    #[serde(default)]
    pub exponent: f64,
}

impl ModelRule {
    pub fn spec(&self, n: usize) -> SymmetricSpec {
        let scale = (n as f64).powf(self.exponent);
        SymmetricSpec {
            n,
            k: self.k,
            p: self.p * scale,
            r: self.r * scale,
            a: self.a.unwrap_or(1.0),
        }
    }
}

/// Constants of the misclassification bounds; the defaults are placeholders.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Constants {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub gamma: f64,
}

impl Default for Constants {
    fn default() -> Self {
        Constants {
            c0: 1.0,
            c1: 1.0,
            c2: 1.0,
            gamma: 0.05,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VertexFormat {
    /// Integer ids with one label line per node.
    #[default]
    Index,
    /// Arbitrary vertex tokens with `name label` lines.
    Name,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSpec {
    pub edges: PathBuf,
    pub labels: PathBuf,
    pub symmetrize: bool,
    pub zero_based: bool,
    pub vertex_format: VertexFormat,
    /// Cluster count; defaults to the number of distinct labels.
    pub k: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub regime: Regime,
    /// Ignored by the dataset regime.
    pub n_grid: Vec<usize>,
    pub epsilon_grid: Vec<PrivacyBudget>,
    pub replications: usize,
    pub seed: u64,
    pub algorithm: Algorithm,
    /// `None` for the dataset regime.
    pub model: Option<ModelRule>,
    pub cluster: ClusterConfig,
    pub constants: Constants,
    pub dataset: Option<DatasetSpec>,
    /// Record wall-clock runtimes; off keeps output byte-reproducible.
    pub timing: bool,
}

/// Budgets used by the published simulation grid.
pub fn standard_epsilon_grid() -> Vec<PrivacyBudget> {
    [0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 4.0]
        .into_iter()
        .map(|e| PrivacyBudget::finite(e).expect("positive"))
        .chain([PrivacyBudget::INFINITE])
        .collect()
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCluster {
    restarts: Option<usize>,
    max_iterations: Option<usize>,
    tolerance: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDataset {
    edges: PathBuf,
    labels: PathBuf,
    #[serde(default = "default_true")]
    symmetrize: bool,
    #[serde(default)]
    zero_based: bool,
    #[serde(default)]
    vertex_format: Option<String>,
    k: Option<usize>,
}

fn default_true() -> bool {
    true
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    regime: String,
    #[serde(default)]
    n_grid: Vec<usize>,
    epsilon_grid: Vec<toml::Value>,
    replications: usize,
    #[serde(default)]
    seed: u64,
    algorithm: Option<String>,
    #[serde(default)]
    timing: bool,
    cluster: Option<RawCluster>,
    #[serde(default)]
    constants: Constants,
    dataset: Option<RawDataset>,
    dense_ssbm: Option<ModelRule>,
    sparse_ssbm: Option<ModelRule>,
    dense_sdcbm: Option<ModelRule>,
    sparse_sdcbm: Option<ModelRule>,
}

fn parse_budget(value: &toml::Value) -> Result<PrivacyBudget> {
    match value {
        toml::Value::Float(f) if f.is_infinite() && *f > 0.0 => Ok(PrivacyBudget::INFINITE),
        toml::Value::Float(f) => PrivacyBudget::finite(*f),
        toml::Value::Integer(i) => PrivacyBudget::finite(*i as f64),
        toml::Value::String(s) => s.parse(),
        other => Err(Error::Config(format!("invalid epsilon {other}"))),
    }
}

impl ExperimentConfig {
    /// A simulation config with the regime's default model, the standard
    /// budget grid and 100 replications.
    pub fn preset(regime: Regime, n_grid: Vec<usize>) -> Self {
        let model = regime.default_model();
        ExperimentConfig {
            regime,
            n_grid,
            epsilon_grid: standard_epsilon_grid(),
            replications: 100,
            seed: 0,
            algorithm: Algorithm::Auto,
            model,
            cluster: ClusterConfig::new(model.map_or(2, |m| m.k)),
            constants: Constants::default(),
            dataset: None,
            timing: false,
        }
    }

    /// Parses a config; relative dataset paths resolve against `base_dir`.
    pub fn from_toml_str(text: &str, base_dir: &Path) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let regime: Regime = raw.regime.parse()?;
        let epsilon_grid = raw
            .epsilon_grid
            .iter()
            .map(parse_budget)
            .collect::<Result<Vec<_>>>()?;
        let algorithm = match raw.algorithm {
            Some(a) => a.parse()?,
            None => Algorithm::Auto,
        };
        let override_model = match regime {
            Regime::DenseSsbm => raw.dense_ssbm,
            Regime::SparseSsbm => raw.sparse_ssbm,
            Regime::DenseSdcbm => raw.dense_sdcbm,
            Regime::SparseSdcbm => raw.sparse_sdcbm,
            Regime::Dataset => None,
        };
        let model = override_model.or(regime.default_model());
        let dataset = match raw.dataset {
            Some(d) => Some(DatasetSpec {
                edges: base_dir.join(d.edges),
                labels: base_dir.join(d.labels),
                symmetrize: d.symmetrize,
                zero_based: d.zero_based,
                vertex_format: match d.vertex_format.as_deref() {
                    None | Some("index") => VertexFormat::Index,
                    Some("name") => VertexFormat::Name,
                    Some(other) => return Err(Error::Config(format!("unknown vertex_format {other:?}"))),
                },
                k: d.k,
            }),
            None => None,
        };
        let k = model.map(|m| m.k).or(dataset.as_ref().and_then(|d| d.k)).unwrap_or(2);
        let mut cluster = ClusterConfig::new(k);
        if let Some(c) = raw.cluster {
            cluster.restarts = c.restarts.unwrap_or(cluster.restarts);
            cluster.max_iterations = c.max_iterations.unwrap_or(cluster.max_iterations);
            cluster.tolerance = c.tolerance.unwrap_or(cluster.tolerance);
        }
        cluster.gamma = raw.constants.gamma;
        let config = ExperimentConfig {
            regime,
            n_grid: raw.n_grid,
            epsilon_grid,
            replications: raw.replications,
            seed: raw.seed,
            algorithm,
            model,
            cluster,
            constants: raw.constants,
            dataset,
            timing: raw.timing,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml_str(&text, base)
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::Config("replications must be at least 1".into()));
        }
        if self.epsilon_grid.is_empty() {
            return Err(Error::Config("epsilon_grid is empty".into()));
        }
        self.cluster.validate()?;
        for (name, c) in [("c0", self.constants.c0), ("c1", self.constants.c1), ("c2", self.constants.c2)] {
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {c}")));
            }
        }
        if self.regime == Regime::Dataset {
            if self.dataset.is_none() {
                return Err(Error::Config("dataset regime needs a [dataset] table with edges and labels".into()));
            }
            return Ok(());
        }
        let model = self
            .model
            .ok_or_else(|| Error::Config(format!("regime {} needs model parameters", self.regime)))?;
        if self.n_grid.is_empty() {
            return Err(Error::Config("n_grid is empty".into()));
        }
        if self.regime.is_degree_corrected() && model.a.is_none() {
            return Err(Error::Config(format!("regime {} needs the degree bound a", self.regime)));
        }
        if model.k != self.cluster.k {
            return Err(Error::Config(format!(
                "cluster k = {} differs from model k = {}",
                self.cluster.k, model.k
            )));
        }
        for &n in &self.n_grid {
            let spec = model.spec(n);
            spec.validate().map_err(|e| Error::Config(format!("n = {n}: {e}")))?;
            if let Some(a) = model.a {
                if !(a > 0.0 && a <= 1.0) {
                    return Err(Error::Config(format!("a = {a} not in (0, 1]")));
                }
            }
        }
        Ok(())
    }
}
