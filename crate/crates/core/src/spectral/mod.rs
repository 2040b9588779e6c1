//! Leading eigenpairs, spectral embeddings and Procrustes alignment.
//!
//! "Leading" always means largest `|eigenvalue|`: downshifting can move
//! informative eigenvalues below zero.

mod lanczos;

pub use lanczos::{lanczos, LanczosOptions};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::mechanism::{downshift, DownshiftedMatrix, PrivacyBudget};

/// Dimensions up to this use a dense decomposition under [`EigenMethod::Auto`].
pub const DENSE_CUTOFF: usize = 64;

/// Rows with an l2 norm below this count as zero.
pub const ZERO_ROW_THRESHOLD: f64 = 1e-12;

/// Tolerance of the symmetry check on explicit matrices.
pub const SYMMETRY_TOLERANCE: f64 = 1e-10;

/// A real symmetric linear operator.
pub trait SymmetricOperator {
    fn dim(&self) -> usize;
    /// `y = A x`.
    fn apply(&self, x: &[f64], y: &mut [f64]);
    fn to_dense(&self) -> DMatrix<f64>;
}

impl SymmetricOperator for DMatrix<f64> {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.nrows();
        y.iter_mut().for_each(|v| *v = 0.0);
        // column-major storage: accumulate column by column
        for (j, &xj) in x.iter().enumerate() {
            if xj != 0.0 {
                let col = &self.as_slice()[j * n..(j + 1) * n];
                for (yi, &a) in y.iter_mut().zip(col) {
                    *yi += a * xj;
                }
            }
        }
    }

    fn to_dense(&self) -> DMatrix<f64> {
        self.clone()
    }
}

impl SymmetricOperator for DownshiftedMatrix<'_> {
    fn dim(&self) -> usize {
        DownshiftedMatrix::dim(self)
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.matvec(x, y)
    }

    fn to_dense(&self) -> DMatrix<f64> {
        DownshiftedMatrix::to_dense(self)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum EigenMethod {
    /// Dense below [`DENSE_CUTOFF`], Lanczos above.
    #[default]
    Auto,
    Dense,
    Lanczos,
}

/// Leading eigenvectors as columns of an `n x k` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub vectors: DMatrix<f64>,
    /// Eigenvalues, non-increasing in magnitude.
    pub values: Vec<f64>,
    pub zero_rows: Vec<usize>,
    pub positive_rows: Vec<usize>,
}

impl Embedding {
    /// Wraps an arbitrary `n x k` matrix, classifying its rows.
    pub fn from_parts(vectors: DMatrix<f64>, values: Vec<f64>) -> Self {
        let (zero_rows, positive_rows) =
            (0..vectors.nrows()).partition(|&i| vectors.row(i).norm() < ZERO_ROW_THRESHOLD);
        Embedding {
            vectors,
            values,
            zero_rows,
            positive_rows,
        }
    }

    pub fn k(&self) -> usize {
        self.vectors.ncols()
    }
}

/// Flips `v` so its largest-magnitude entry (first on ties) is positive.
fn fix_sign(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v.get(best).is_some_and(|&x| x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// The `k` eigenpairs of largest magnitude of a symmetric operator.
pub fn leading_eigenpairs<O: SymmetricOperator + ?Sized>(
    op: &O,
    k: usize,
    method: EigenMethod,
) -> Result<Embedding> {
    let n = op.dim();
    if k == 0 || k > n {
        return Err(Error::invalid(format!("need 1 <= k <= n, got k = {k}, n = {n}")));
    }
    let options = LanczosOptions::for_k(k);
    let use_dense = match method {
        EigenMethod::Dense => true,
        EigenMethod::Lanczos => false,
        EigenMethod::Auto => n <= DENSE_CUTOFF,
    } || k + 2 > options.basis.min(n.saturating_sub(1));

    let (values, mut vectors) = if use_dense {
        let eig = op.to_dense().symmetric_eigen();
        let theta: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        let order = lanczos::order_by_magnitude(&theta);
        let values = order[..k].iter().map(|&i| theta[i]).collect();
        let vectors = order[..k]
            .iter()
            .map(|&i| eig.eigenvectors.column(i).iter().copied().collect())
            .collect();
        (values, vectors)
    } else {
        lanczos(op, k, &options)?
    };
    for v in vectors.iter_mut() {
        fix_sign(v);
    }
    let matrix = DMatrix::from_fn(n, k, |i, j| vectors[j][i]);
    Ok(Embedding::from_parts(matrix, values))
}

/// Leading eigenpairs of an explicit symmetric matrix.
pub fn leading_eigvecs(matrix: &DMatrix<f64>, k: usize) -> Result<Embedding> {
    if !matrix.is_square() {
        return Err(Error::ShapeMismatch(format!(
            "expected a square matrix, got {}x{}",
            matrix.nrows(),
            matrix.ncols()
        )));
    }
    let asym = (matrix - matrix.transpose()).abs().max();
    if asym > SYMMETRY_TOLERANCE {
        return Err(Error::NotSymmetric(asym));
    }
    leading_eigenpairs(matrix, k, EigenMethod::Auto)
}

/// Embedding of the downshifted observed graph.
pub fn spectral_embed(graph: &Graph, k: usize, budget: PrivacyBudget) -> Result<Embedding> {
    leading_eigenpairs(&downshift(graph, budget), k, EigenMethod::Auto)
}

/// Unit-norm rows over the nonzero rows of an embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedRows {
    /// `|I+| x k` matrix.
    pub rows: DMatrix<f64>,
    /// `index_map[i]` is the embedding row behind output row `i`.
    pub index_map: Vec<usize>,
}

pub fn row_normalize(embedding: &Embedding) -> NormalizedRows {
    let k = embedding.k();
    let index_map = embedding.positive_rows.clone();
    let mut rows = DMatrix::zeros(index_map.len(), k);
    for (out, &src) in index_map.iter().enumerate() {
        let row = embedding.vectors.row(src);
        let norm = row.norm();
        for c in 0..k {
            rows[(out, c)] = row[c] / norm;
        }
    }
    NormalizedRows { rows, index_map }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Procrustes {
    /// Orthogonal `k x k` matrix minimizing `||observed - expected Q||_F`.
    pub rotation: DMatrix<f64>,
    pub distance: f64,
}

/// Orthogonal Procrustes alignment of `expected` onto `observed`.
pub fn procrustes_distance(observed: &DMatrix<f64>, expected: &DMatrix<f64>) -> Result<Procrustes> {
    if observed.shape() != expected.shape() {
        return Err(Error::ShapeMismatch(format!(
            "observed is {:?}, expected is {:?}",
            observed.shape(),
            expected.shape()
        )));
    }
    let cross = expected.transpose() * observed;
    let svd = cross.svd(true, true);
    let rotation = svd.u.expect("requested U") * svd.v_t.expect("requested V^T");
    let distance = (observed - expected * &rotation).norm();
    Ok(Procrustes { rotation, distance })
}
