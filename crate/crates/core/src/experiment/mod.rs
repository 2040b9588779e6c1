//! Seeded replication sweeps, dataset evaluations, result CSVs and
//! aggregate tables.

mod config;
mod table;

pub use config::{
    standard_epsilon_grid, Algorithm, Constants, DatasetSpec, ExperimentConfig, ModelRule, Regime, VertexFormat,
};
pub use table::{
    aggregate, format_float, loglog_slope, read_csv, write_aggregate_csv, write_csv, AggregateRow, CSV_HEADER,
};

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;

use crate::block_model::{expected_matrix, make_symmetric_dcbm, make_symmetric_sbm, sample, BlockModelParams};
use crate::cluster::{ef_spectral_kmeans, ef_spectral_kmedians, ClusterConfig};
use crate::error::{Error, Result};
use crate::graph::{Graph, LabelVector};
use crate::io::{load_edge_list, load_label_file, load_named_edge_list, load_named_labels, EdgeListOptions};
use crate::mechanism::{edge_flip, PrivacyBudget};
use crate::metrics::{
    dcbm_bound_report, overall_misclassification, procrustes_scale, sbm_bound_report, worstcase_misclassification,
    BoundReport,
};
use crate::rng::{hash_words, purpose, stream};
use crate::spectral::{leading_eigvecs, procrustes_distance, spectral_embed};

/// One replication. Missing values are NaN (or `None`).
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub regime: String,
    pub n: usize,
    pub epsilon: PrivacyBudget,
    pub replication: usize,
    pub seed: u64,
    pub l: f64,
    pub l_tilde: f64,
    pub runtime_ms: Option<f64>,
    pub condition_value: f64,
    pub l_bound: f64,
    pub l_tilde_bound: f64,
    pub condition_met: Option<bool>,
    /// Failure message for error rows; not serialized.
    pub error: Option<String>,
}

impl ResultRow {
    fn new(regime: &str, n: usize, epsilon: PrivacyBudget, replication: usize, seed: u64) -> Self {
        ResultRow {
            regime: regime.to_string(),
            n,
            epsilon,
            replication,
            seed,
            l: f64::NAN,
            l_tilde: f64::NAN,
            runtime_ms: None,
            condition_value: f64::NAN,
            l_bound: f64::NAN,
            l_tilde_bound: f64::NAN,
            condition_met: None,
            error: None,
        }
    }

    fn set_bounds(&mut self, report: &BoundReport) {
        self.condition_value = report.condition_value;
        self.l_bound = report.l_bound;
        self.l_tilde_bound = report.l_tilde_bound;
        self.condition_met = Some(report.condition_met);
    }

    pub fn is_error(&self) -> bool {
        self.l.is_nan()
    }
}

/// Seed of one replication: `base XOR hash(n, epsilon, replication)`.
pub fn replication_seed(base: u64, n: usize, epsilon: PrivacyBudget, replication: usize) -> u64 {
    base ^ hash_words(&[n as u64, epsilon.key(), replication as u64])
}

fn thread_pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {threads} worker threads: {e}")))
}

/// Model for one replication; degree parameters come from the seed.
pub fn replication_params(config: &ExperimentConfig, n: usize, seed: u64) -> Result<BlockModelParams> {
    let model = config
        .model
        .ok_or_else(|| Error::Config(format!("regime {} has no model", config.regime)))?;
    let spec = model.spec(n);
    if config.regime.is_degree_corrected() {
        make_symmetric_dcbm(&spec, &mut stream(seed, purpose::DEGREES))
    } else {
        make_symmetric_sbm(&spec)
    }
}

fn cluster_observed(
    graph: &Graph,
    budget: PrivacyBudget,
    algorithm: Algorithm,
    config: &ClusterConfig,
    seed: u64,
) -> Result<LabelVector> {
    let mut rng = stream(seed, purpose::CLUSTER);
    match algorithm {
        Algorithm::KMedians => ef_spectral_kmedians(graph, budget, config, &mut rng),
        _ => ef_spectral_kmeans(graph, budget, config, &mut rng),
    }
}

fn simulate(config: &ExperimentConfig, row: &mut ResultRow) -> Result<()> {
    let params = replication_params(config, row.n, row.seed)?;
    let truth = params.labels();
    let graph = sample(&params, &mut stream(row.seed, purpose::GRAPH));
    let observed = edge_flip(&graph, row.epsilon, &mut stream(row.seed, purpose::FLIP));
    let algorithm = config.algorithm.resolve(config.regime);
    let estimate = cluster_observed(&observed, row.epsilon, algorithm, &config.cluster, row.seed)?;
    row.l = overall_misclassification(truth, &estimate)?;
    row.l_tilde = worstcase_misclassification(truth, &estimate)?;
    let c = config.constants;
    let report = match algorithm {
        Algorithm::KMedians => dcbm_bound_report(&params, c.gamma, row.epsilon, c.c2),
        _ => sbm_bound_report(&params, c.gamma, row.epsilon, c.c1),
    };
    match report {
        Ok(r) => row.set_bounds(&r),
        Err(e) => log::warn!("n = {} eps = {}: no bound report: {e}", row.n, row.epsilon),
    }
    Ok(())
}

fn finish(mut row: ResultRow, outcome: Result<()>, started: Instant, timing: bool) -> ResultRow {
    if let Err(e) = outcome {
        log::warn!(
            "{} n = {} eps = {} replication {}: {e}",
            row.regime,
            row.n,
            row.epsilon,
            row.replication
        );
        let mut failed = ResultRow::new(&row.regime, row.n, row.epsilon, row.replication, row.seed);
        failed.error = Some(e.to_string());
        row = failed;
    }
    if timing {
        row.runtime_ms = Some(started.elapsed().as_secs_f64() * 1e3);
    }
    row
}

/// Runs every `(n, epsilon, replication)` of a simulation regime on
/// `threads` workers. Rows come back ordered by n, then epsilon, then
/// replication; failed replications become error rows.
pub fn run_sweep(config: &ExperimentConfig, threads: usize) -> Result<Vec<ResultRow>> {
    config.validate()?;
    if config.regime == Regime::Dataset {
        return Err(Error::Config("use run_dataset for the dataset regime".into()));
    }
    let mut tasks = Vec::new();
    for &n in &config.n_grid {
        for &eps in &config.epsilon_grid {
            for rep in 0..config.replications {
                tasks.push((n, eps, rep));
            }
        }
    }
    let pool = thread_pool(threads)?;
    Ok(pool.install(|| {
        tasks
            .par_iter()
            .map(|&(n, eps, rep)| {
                let started = Instant::now();
                let seed = replication_seed(config.seed, n, eps, rep);
                let mut row = ResultRow::new(config.regime.name(), n, eps, rep, seed);
                let outcome = simulate(config, &mut row);
                finish(row, outcome, started, config.timing)
            })
            .collect()
    }))
}

/// Observed network with ground-truth labels.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub graph: Graph,
    pub labels: LabelVector,
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))
}

fn with_path<T>(path: &Path, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

pub fn load_dataset(spec: &DatasetSpec) -> Result<Dataset> {
    let edges = read(&spec.edges)?;
    let labels = read(&spec.labels)?;
    match spec.vertex_format {
        VertexFormat::Index => {
            let labels = with_path(&spec.labels, load_label_file(&labels))?;
            let options = EdgeListOptions {
                symmetrize: spec.symmetrize,
                zero_based: spec.zero_based,
            };
            let loaded = with_path(&spec.edges, load_edge_list(&edges, labels.len(), options))?;
            Ok(Dataset {
                graph: loaded.graph,
                labels,
            })
        }
        VertexFormat::Name => {
            let named = with_path(&spec.edges, load_named_edge_list(&edges, spec.symmetrize))?;
            let labels = with_path(&spec.labels, load_named_labels(&labels, &named))?;
            Ok(Dataset {
                graph: named.loaded.graph,
                labels,
            })
        }
    }
}

/// Repeatedly privatizes and clusters an observed network. Bounds are not
/// reported because the generating model is unknown.
pub fn run_dataset(config: &ExperimentConfig, threads: usize) -> Result<Vec<ResultRow>> {
    config.validate()?;
    let spec = config
        .dataset
        .as_ref()
        .ok_or_else(|| Error::Config("no [dataset] table".into()))?;
    let data = load_dataset(spec)?;
    run_on_dataset(config, &data, threads)
}

/// [`run_dataset`] on an already loaded network.
pub fn run_on_dataset(config: &ExperimentConfig, data: &Dataset, threads: usize) -> Result<Vec<ResultRow>> {
    let n = data.graph.node_count();
    let mut cluster = config.cluster;
    cluster.k = config
        .dataset
        .as_ref()
        .and_then(|d| d.k)
        .unwrap_or(data.labels.k());
    let algorithm = config.algorithm.resolve(Regime::Dataset);
    let tasks: Vec<(PrivacyBudget, usize)> = config
        .epsilon_grid
        .iter()
        .flat_map(|&eps| (0..config.replications).map(move |rep| (eps, rep)))
        .collect();
    let pool = thread_pool(threads)?;
    Ok(pool.install(|| {
        tasks
            .par_iter()
            .map(|&(eps, rep)| {
                let started = Instant::now();
                let seed = replication_seed(config.seed, n, eps, rep);
                let mut row = ResultRow::new(Regime::Dataset.name(), n, eps, rep, seed);
                let outcome = (|| {
                    let observed = edge_flip(&data.graph, eps, &mut stream(seed, purpose::FLIP));
                    let estimate = cluster_observed(&observed, eps, algorithm, &cluster, seed)?;
                    row.l = overall_misclassification(&data.labels, &estimate)?;
                    row.l_tilde = worstcase_misclassification(&data.labels, &estimate)?;
                    Ok(())
                })();
                finish(row, outcome, started, config.timing)
            })
            .collect()
    }))
}

/// Observed Procrustes deviation of the private embedding from the expected
/// one, next to its theoretical scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmbeddingDeviation {
    /// `min_Q ||U_hat - U Q||_F`.
    pub distance: f64,
    /// `2 sqrt(2 k n g) / (n~_min lambda_B)`.
    pub reference: f64,
}

impl EmbeddingDeviation {
    pub fn ratio(&self) -> f64 {
        self.distance / self.reference
    }
}

/// Samples, privatizes and embeds one graph from `params`, then aligns the
/// embedding with the leading eigenvectors of the expected adjacency.
pub fn embedding_deviation(params: &BlockModelParams, budget: PrivacyBudget, seed: u64) -> Result<EmbeddingDeviation> {
    let k = params.k();
    let expected = leading_eigvecs(&expected_matrix(params), k)?;
    let graph = sample(params, &mut stream(seed, purpose::GRAPH));
    let observed = edge_flip(&graph, budget, &mut stream(seed, purpose::FLIP));
    let embedding = spectral_embed(&observed, k, budget)?;
    let fit = procrustes_distance(&embedding.vectors, &expected.vectors)?;
    Ok(EmbeddingDeviation {
        distance: fit.distance,
        reference: procrustes_scale(params, budget)?,
    })
}
