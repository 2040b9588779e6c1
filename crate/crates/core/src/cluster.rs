//! k-means and k-medians solvers, the edge-flip spectral clustering
//! pipelines built on them, and an exhaustive oracle for small inputs.

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{Graph, LabelVector};
use crate::mechanism::PrivacyBudget;
use crate::rng::{self, purpose};
use crate::spectral::{row_normalize, spectral_embed, Embedding};

/// Distance below which a Weiszfeld iterate counts as sitting on a data point.
const COLLISION_RADIUS: f64 = 1e-12;
const WEISZFELD_TOLERANCE: f64 = 1e-9;
const WEISZFELD_MAX_STEPS: usize = 200;
/// Largest input accepted by [`brute_force_cluster`].
pub const BRUTE_FORCE_MAX_POINTS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterConfig {
    pub k: usize,
    pub restarts: usize,
    pub max_iterations: usize,
    /// Stop once the relative objective decrease falls below this.
    pub tolerance: f64,
    /// Declared approximation factor `1 + gamma`; used by bound reports only.
    pub gamma: f64,
}

impl ClusterConfig {
    pub fn new(k: usize) -> Self {
        ClusterConfig {
            k,
            restarts: 20,
            max_iterations: 300,
            tolerance: 1e-9,
            gamma: 0.05,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::invalid("k must be at least 1"));
        }
        if self.restarts == 0 || self.max_iterations == 0 {
            return Err(Error::invalid("restarts and max_iterations must be positive"));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::invalid(format!("tolerance must be positive, got {}", self.tolerance)));
        }
        if !(self.gamma >= 0.0) {
            return Err(Error::invalid(format!("gamma must be non-negative, got {}", self.gamma)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterResult {
    pub labels: LabelVector,
    /// `k x d`, one centroid per row.
    pub centroids: DMatrix<f64>,
    /// Sum of squared distances (k-means) or of distances (k-medians).
    pub objective: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    KMeans,
    KMedians,
}

impl Objective {
    fn cost(self, squared_distance: f64) -> f64 {
        match self {
            Objective::KMeans => squared_distance,
            Objective::KMedians => squared_distance.sqrt(),
        }
    }
}

/// Row-major point set.
struct Points {
    d: usize,
    data: Vec<f64>,
}

impl Points {
    fn from_matrix(m: &DMatrix<f64>) -> Self {
        let (n, d) = m.shape();
        let mut data = Vec::with_capacity(n * d);
        for i in 0..n {
            data.extend(m.row(i).iter());
        }
        Points { d, data }
    }

    fn len(&self) -> usize {
        if self.d == 0 {
            0
        } else {
            self.data.len() / self.d
        }
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Nearest centroid, ties to the lower index.
fn nearest(x: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centroids.iter().enumerate() {
        let d = sq_dist(x, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

fn assign(points: &Points, centroids: &[Vec<f64>], objective: Objective, labels: &mut [usize]) -> f64 {
    let mut total = 0.0;
    for (i, label) in labels.iter_mut().enumerate() {
        let (j, d) = nearest(points.row(i), centroids);
        *label = j;
        total += objective.cost(d);
    }
    total
}

/// k-means++ style seeding with `D^2` (k-means) or `D` (k-medians) weights.
fn seed_centroids<R: Rng>(points: &Points, k: usize, objective: Objective, rng: &mut R) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut centroids = vec![points.row(rng.random_range(0..n)).to_vec()];
    let mut weight: Vec<f64> = (0..n)
        .map(|i| objective.cost(sq_dist(points.row(i), &centroids[0])))
        .collect();
    while centroids.len() < k {
        let total: f64 = weight.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, &w) in weight.iter().enumerate() {
                if target < w {
                    pick = i;
                    break;
                }
                target -= w;
            }
            pick
        } else {
            rng.random_range(0..n)
        };
        let c = points.row(pick).to_vec();
        for (i, w) in weight.iter_mut().enumerate() {
            *w = w.min(objective.cost(sq_dist(points.row(i), &c)));
        }
        centroids.push(c);
    }
    centroids
}

/// Geometric median by Weiszfeld iteration from `start`, using the
/// Vardi-Zhang step when the iterate coincides with data points.
fn geometric_median(members: &[&[f64]], start: &[f64]) -> Vec<f64> {
    let d = start.len();
    let mut y = start.to_vec();
    for _ in 0..WEISZFELD_MAX_STEPS {
        let mut num = vec![0.0; d];
        let mut den = 0.0;
        let mut collisions = 0usize;
        for x in members {
            let dist = sq_dist(x, &y).sqrt();
            if dist < COLLISION_RADIUS {
                collisions += 1;
            } else {
                let w = 1.0 / dist;
                den += w;
                for (nc, xc) in num.iter_mut().zip(x.iter()) {
                    *nc += w * xc;
                }
            }
        }
        if den == 0.0 {
            return y;
        }
        let t: Vec<f64> = num.iter().map(|v| v / den).collect();
        let next = if collisions == 0 {
            t
        } else {
            // |R(y)| where R(y) = sum (x - y) / |x - y| over non-colliding x
            let r = sq_dist(&t, &y).sqrt() * den;
            if r <= collisions as f64 {
                return y;
            }
            let g = collisions as f64 / r;
            t.iter().zip(&y).map(|(tc, yc)| (1.0 - g) * tc + g * yc).collect()
        };
        let step = sq_dist(&next, &y).sqrt();
        let scale = y.iter().map(|v| v * v).sum::<f64>().sqrt().max(1.0);
        y = next;
        if step <= WEISZFELD_TOLERANCE * scale {
            break;
        }
    }
    y
}

fn mean(members: &[&[f64]], d: usize) -> Vec<f64> {
    let mut m = vec![0.0; d];
    for x in members {
        for (mc, xc) in m.iter_mut().zip(x.iter()) {
            *mc += xc;
        }
    }
    let count = members.len() as f64;
    m.iter_mut().for_each(|v| *v /= count);
    m
}

/// One restart: alternate assignment and centroid updates from the given
/// seeds. Returns the result and the objective after every assignment.
fn alternate(
    points: &Points,
    mut centroids: Vec<Vec<f64>>,
    objective: Objective,
    config: &ClusterConfig,
) -> (Vec<usize>, Vec<Vec<f64>>, Vec<f64>) {
    let n = points.len();
    let k = centroids.len();
    let mut labels = vec![0; n];
    let mut current = assign(points, &centroids, objective, &mut labels);
    let mut trace = vec![current];
    for _ in 0..config.max_iterations {
        let mut groups: Vec<Vec<&[f64]>> = vec![Vec::new(); k];
        for (i, &l) in labels.iter().enumerate() {
            groups[l].push(points.row(i));
        }
        for (j, members) in groups.iter().enumerate() {
            if !members.is_empty() {
                centroids[j] = match objective {
                    Objective::KMeans => mean(members, points.d),
                    Objective::KMedians => geometric_median(members, &centroids[j]),
                };
            }
        }
        let mut sizes: Vec<usize> = groups.iter().map(Vec::len).collect();
        for j in 0..k {
            if sizes[j] > 0 {
                continue;
            }
            // farthest point from its own centroid among clusters that can spare one
            let mut far = None;
            let mut far_d = -1.0;
            for i in 0..n {
                if sizes[labels[i]] > 1 {
                    let d = sq_dist(points.row(i), &centroids[labels[i]]);
                    if d > far_d {
                        far_d = d;
                        far = Some(i);
                    }
                }
            }
            if let Some(i) = far {
                sizes[labels[i]] -= 1;
                labels[i] = j;
                sizes[j] = 1;
                centroids[j] = points.row(i).to_vec();
            }
        }
        let next = assign(points, &centroids, objective, &mut labels);
        trace.push(next);
        let done = current - next <= config.tolerance * current;
        current = next;
        if done {
            break;
        }
    }
    (labels, centroids, trace)
}

fn best_of_restarts<R: Rng>(
    points: &DMatrix<f64>,
    config: &ClusterConfig,
    objective: Objective,
    rng: &mut R,
) -> Result<ClusterResult> {
    config.validate()?;
    let (n, d) = points.shape();
    let k = config.k;
    if n < k {
        return Err(Error::invalid(format!("need at least k = {k} points, got {n}")));
    }
    let pts = Points::from_matrix(points);
    let seeds: Vec<u64> = (0..config.restarts).map(|_| rng.random()).collect();
    let runs: Vec<(Vec<usize>, Vec<Vec<f64>>, f64)> = seeds
        .par_iter()
        .map(|&seed| {
            let mut stream = rng::stream(seed, purpose::CLUSTER);
            let init = seed_centroids(&pts, k, objective, &mut stream);
            let (labels, centroids, trace) = alternate(&pts, init, objective, config);
            (labels, centroids, *trace.last().expect("trace is never empty"))
        })
        .collect();
    let (labels, centroids, value) = runs
        .into_iter()
        .enumerate()
        .min_by(|(ia, a), (ib, b)| a.2.total_cmp(&b.2).then(ia.cmp(ib)))
        .map(|(_, run)| run)
        .expect("at least one restart");
    Ok(ClusterResult {
        labels: LabelVector::new(labels, k)?,
        centroids: DMatrix::from_fn(k, d, |j, c| centroids[j][c]),
        objective: value,
    })
}

/// Best of `config.restarts` runs of k-means++ seeding plus Lloyd iterations
/// on the rows of `points`.
pub fn kmeans<R: Rng>(points: &DMatrix<f64>, config: &ClusterConfig, rng: &mut R) -> Result<ClusterResult> {
    best_of_restarts(points, config, Objective::KMeans, rng)
}

/// k-medians by alternating nearest-centroid assignment and Weiszfeld
/// geometric-median updates; objective is the sum of l2 distances.
pub fn kmedians<R: Rng>(points: &DMatrix<f64>, config: &ClusterConfig, rng: &mut R) -> Result<ClusterResult> {
    best_of_restarts(points, config, Objective::KMedians, rng)
}

/// k-means on the embedding rows.
pub fn label_embedding_kmeans<R: Rng>(
    embedding: &Embedding,
    config: &ClusterConfig,
    rng: &mut R,
) -> Result<LabelVector> {
    Ok(kmeans(&embedding.vectors, config, rng)?.labels)
}

/// k-medians on the unit-normalized nonzero rows; zero rows get label 0.
pub fn label_embedding_kmedians<R: Rng>(
    embedding: &Embedding,
    config: &ClusterConfig,
    rng: &mut R,
) -> Result<LabelVector> {
    let normalized = row_normalize(embedding);
    let result = kmedians(&normalized.rows, config, rng)?;
    let mut labels = vec![0; embedding.vectors.nrows()];
    for (row, &node) in normalized.index_map.iter().enumerate() {
        labels[node] = result.labels.get(row);
    }
    LabelVector::new(labels, config.k)
}

/// Downshift, embed and run k-means.
pub fn ef_spectral_kmeans<R: Rng>(
    graph: &Graph,
    budget: PrivacyBudget,
    config: &ClusterConfig,
    rng: &mut R,
) -> Result<LabelVector> {
    config.validate()?;
    let embedding = spectral_embed(graph, config.k, budget)?;
    label_embedding_kmeans(&embedding, config, rng)
}

/// Downshift, embed, row-normalize and run k-medians.
pub fn ef_spectral_kmedians<R: Rng>(
    graph: &Graph,
    budget: PrivacyBudget,
    config: &ClusterConfig,
    rng: &mut R,
) -> Result<LabelVector> {
    config.validate()?;
    let embedding = spectral_embed(graph, config.k, budget)?;
    label_embedding_kmedians(&embedding, config, rng)
}

/// Exact optimum over all partitions of at most 12 points into at most `k`
/// parts. k-medians parts use Weiszfeld medians.
pub fn brute_force_cluster(points: &DMatrix<f64>, k: usize, objective: Objective) -> Result<ClusterResult> {
    let (m, d) = points.shape();
    if m > BRUTE_FORCE_MAX_POINTS {
        return Err(Error::TooLarge(m, BRUTE_FORCE_MAX_POINTS));
    }
    if k == 0 || m < k {
        return Err(Error::invalid(format!("need 1 <= k <= m, got k = {k}, m = {m}")));
    }
    let pts = Points::from_matrix(points);
    let part_cost = |members: &[&[f64]]| -> (Vec<f64>, f64) {
        let mu = mean(members, d);
        let c = match objective {
            Objective::KMeans => mu,
            Objective::KMedians => geometric_median(members, &mu),
        };
        let cost = members.iter().map(|x| objective.cost(sq_dist(x, &c))).sum();
        (c, cost)
    };

    // restricted growth strings: s[0] = 0, s[i] <= 1 + max(s[..i]), values < k
    let mut s = vec![0usize; m];
    let mut best: Option<(Vec<usize>, Vec<Vec<f64>>, f64)> = None;
    loop {
        let parts = s.iter().max().map_or(0, |v| v + 1);
        let mut groups: Vec<Vec<&[f64]>> = vec![Vec::new(); parts];
        for (i, &l) in s.iter().enumerate() {
            groups[l].push(pts.row(i));
        }
        let mut centroids = Vec::with_capacity(k);
        let mut total = 0.0;
        for g in &groups {
            let (c, cost) = part_cost(g);
            centroids.push(c);
            total += cost;
        }
        if best.as_ref().is_none_or(|b| total < b.2) {
            while centroids.len() < k {
                centroids.push(pts.row(0).to_vec());
            }
            best = Some((s.clone(), centroids, total));
        }
        // advance to the next restricted growth string
        let mut i = m - 1;
        loop {
            if i == 0 {
                let (labels, centroids, objective) = best.expect("at least one partition");
                return Ok(ClusterResult {
                    labels: LabelVector::new(labels, k)?,
                    centroids: DMatrix::from_fn(k, d, |j, c| centroids[j][c]),
                    objective,
                });
            }
            let prefix_max = s[..i].iter().copied().max().unwrap_or(0);
            if s[i] <= prefix_max && s[i] + 1 < k {
                s[i] += 1;
                s[i + 1..].iter_mut().for_each(|v| *v = 0);
                break;
            }
            i -= 1;
        }
    }
}
