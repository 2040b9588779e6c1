//! Stochastic block models and their degree-corrected extension.
//!
//! Edge `(i, j)` is present with probability `psi_i * psi_j * B[theta_i, theta_j]`.
//! A plain SBM is the special case `psi = 1`.

use std::fmt;

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::{Graph, LabelVector};

/// Eigenvalues of `B` smaller than this in magnitude count as zero.
pub const LAMBDA_ZERO_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct BlockModelParams {
    labels: LabelVector,
    psi: Vec<f64>,
    b: DMatrix<f64>,
}

impl BlockModelParams {
    pub fn sbm(labels: LabelVector, b: DMatrix<f64>) -> Result<Self> {
        let n = labels.len();
        Self::dcbm(labels, vec![1.0; n], b)
    }

    /// Degree-corrected model with arbitrary `psi`. The misclassification
    /// bounds additionally need `max psi = 1` within each block, see
    /// [`BlockModelParams::is_block_normalized`].
    pub fn dcbm(labels: LabelVector, psi: Vec<f64>, b: DMatrix<f64>) -> Result<Self> {
        let k = labels.k();
        if b.nrows() != k || b.ncols() != k {
            return Err(Error::ShapeMismatch(format!(
                "B is {}x{} but labels have k = {k}",
                b.nrows(),
                b.ncols()
            )));
        }
        for i in 0..k {
            for j in 0..k {
                let v = b[(i, j)];
                if !(v > 0.0 && v <= 1.0) {
                    return Err(Error::invalid(format!("B[{i},{j}] = {v} not in (0, 1]")));
                }
                if (v - b[(j, i)]).abs() > 1e-12 {
                    return Err(Error::NotSymmetric((v - b[(j, i)]).abs()));
                }
            }
        }
        if psi.len() != labels.len() {
            return Err(Error::ShapeMismatch(format!(
                "psi has length {} but there are {} nodes",
                psi.len(),
                labels.len()
            )));
        }
        if let Some((i, v)) = psi.iter().enumerate().find(|(_, &v)| !(v > 0.0 && v <= 1.0)) {
            return Err(Error::invalid(format!("psi[{i}] = {v} not in (0, 1]")));
        }
        Ok(BlockModelParams { labels, psi, b })
    }

    pub fn labels(&self) -> &LabelVector {
        &self.labels
    }

    pub fn psi(&self) -> &[f64] {
        &self.psi
    }

    pub fn connectivity(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn k(&self) -> usize {
        self.labels.k()
    }

    pub fn is_sbm(&self) -> bool {
        self.psi.iter().all(|&p| p == 1.0)
    }

    /// Whether every nonempty block has `max psi = 1`.
    pub fn is_block_normalized(&self) -> bool {
        self.labels
            .blocks()
            .iter()
            .filter(|b| !b.is_empty())
            .all(|b| b.iter().map(|&i| self.psi[i]).fold(0.0, f64::max) == 1.0)
    }

    pub fn edge_probability(&self, i: usize, j: usize) -> f64 {
        self.psi[i] * self.psi[j] * self.b[(self.labels.get(i), self.labels.get(j))]
    }

    /// Plain-text parameter dump.
    pub fn dump(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for BlockModelParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let k = self.k();
        writeln!(f, "n = {}", self.node_count())?;
        writeln!(f, "k = {k}")?;
        writeln!(f, "model = {}", if self.is_sbm() { "sbm" } else { "dcbm" })?;
        for i in 0..k {
            let row: Vec<String> = (0..k).map(|j| format!("{}", self.b[(i, j)])).collect();
            writeln!(f, "B[{}] = {}", i + 1, row.join(" "))?;
        }
        for (i, (&l, &p)) in self.labels.as_slice().iter().zip(&self.psi).enumerate() {
            writeln!(f, "node {} block {} psi {}", i + 1, l + 1, p)?;
        }
        Ok(())
    }
}

/// Symmetric model: `k` equal blocks with `B = p I + r 1 1^T`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetricSpec {
    pub n: usize,
    pub k: usize,
    pub p: f64,
    pub r: f64,
    /// Lower bound of the degree parameters; ignored for the plain SBM.
    pub a: f64,
}

impl SymmetricSpec {
    pub fn sbm(n: usize, k: usize, p: f64, r: f64) -> Self {
        SymmetricSpec { n, k, p, r, a: 1.0 }
    }

    pub fn dcbm(n: usize, k: usize, p: f64, r: f64, a: f64) -> Self {
        SymmetricSpec { n, k, p, r, a }
    }

    pub fn connectivity(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.k, self.k, |i, j| if i == j { self.p + self.r } else { self.r })
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.n % self.k != 0 {
            return Err(Error::invalid(format!(
                "k = {} must divide n = {}",
                self.k, self.n
            )));
        }
        if !(self.p > 0.0) || !(self.r > 0.0) {
            return Err(Error::invalid(format!(
                "p = {} and r = {} must be positive",
                self.p, self.r
            )));
        }
        if self.p + self.r > 1.0 {
            return Err(Error::invalid(format!(
                "p + r = {} exceeds 1",
                self.p + self.r
            )));
        }
        Ok(())
    }
}

pub fn make_symmetric_sbm(spec: &SymmetricSpec) -> Result<BlockModelParams> {
    spec.validate()?;
    let labels = LabelVector::contiguous_blocks(spec.n, spec.k)?;
    BlockModelParams::sbm(labels, spec.connectivity())
}

/// Symmetric DCBM: `psi = 1` at the first node of each block and
/// `Uniform[a, 1)` elsewhere, drawn in node order.
pub fn make_symmetric_dcbm<R: Rng + ?Sized>(
    spec: &SymmetricSpec,
    rng: &mut R,
) -> Result<BlockModelParams> {
    spec.validate()?;
    if !(spec.a > 0.0 && spec.a <= 1.0) {
        return Err(Error::invalid(format!("a = {} not in (0, 1]", spec.a)));
    }
    let labels = LabelVector::contiguous_blocks(spec.n, spec.k)?;
    let size = spec.n / spec.k;
    let psi = (0..spec.n)
        .map(|i| {
            if i % size == 0 || spec.a == 1.0 {
                1.0
            } else {
                rng.random_range(spec.a..1.0)
            }
        })
        .collect();
    BlockModelParams::dcbm(labels, psi, spec.connectivity())
}

/// Draws one graph, one uniform per pair in row-major upper-triangle order.
pub fn sample<R: Rng + ?Sized>(params: &BlockModelParams, rng: &mut R) -> Graph {
    Graph::from_upper_fn(params.node_count(), |i, j| {
        rng.random::<f64>() < params.edge_probability(i, j)
    })
}

/// `P_ij = psi_i psi_j B[theta_i, theta_j]`, diagonal included.
pub fn expected_matrix(params: &BlockModelParams) -> DMatrix<f64> {
    let n = params.node_count();
    DMatrix::from_fn(n, n, |i, j| params.edge_probability(i, j))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelDerived {
    /// Effective block sizes `sum_{i in C_j} psi_i^2`.
    pub effective_sizes: Vec<f64>,
    /// Degree heterogeneity `n_j^-2 (sum psi^-2)(sum psi^2)` per block.
    pub heterogeneity: Vec<f64>,
    pub n_tilde_min: f64,
    /// Smallest nonzero `|eigenvalue|` of `B`.
    pub lambda_b: f64,
    pub max_b: f64,
}

pub fn model_derived(params: &BlockModelParams) -> Result<ModelDerived> {
    let blocks = params.labels().blocks();
    let psi = params.psi();
    let mut effective_sizes = Vec::with_capacity(blocks.len());
    let mut heterogeneity = Vec::with_capacity(blocks.len());
    for block in &blocks {
        let sq: f64 = block.iter().map(|&i| psi[i] * psi[i]).sum();
        let inv_sq: f64 = block.iter().map(|&i| 1.0 / (psi[i] * psi[i])).sum();
        let nj = block.len() as f64;
        effective_sizes.push(sq);
        heterogeneity.push(if block.is_empty() { 1.0 } else { inv_sq * sq / (nj * nj) });
    }
    let n_tilde_min = blocks
        .iter()
        .zip(&effective_sizes)
        .filter(|(b, _)| !b.is_empty())
        .map(|(_, &s)| s)
        .fold(f64::INFINITY, f64::min);

    let eig = params.connectivity().clone().symmetric_eigen();
    let lambda_b = eig
        .eigenvalues
        .iter()
        .map(|v| v.abs())
        .filter(|&v| v >= LAMBDA_ZERO_THRESHOLD)
        .fold(f64::INFINITY, f64::min);
    if !lambda_b.is_finite() {
        return Err(Error::RankDeficient);
    }
    let max_b = params.connectivity().max();
    Ok(ModelDerived {
        effective_sizes,
        heterogeneity,
        n_tilde_min,
        lambda_b,
        max_b,
    })
}
