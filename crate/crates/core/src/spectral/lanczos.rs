//! Thick-restart Lanczos for the eigenpairs of largest magnitude.
//!
//! Full re-orthogonalization (two Gram-Schmidt passes) keeps the basis
//! orthonormal, so the projected matrix is computed directly from the
//! orthogonalization coefficients. Restarts retain the Ritz vectors of
//! largest `|theta|`, which lets one run converge both ends of the spectrum.
//! When the Krylov space becomes invariant (exact low-rank input, repeated
//! eigenvalues) a fresh random direction is injected.

use nalgebra::DMatrix;
use rand::Rng;

use super::SymmetricOperator;
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LanczosOptions {
    /// Krylov basis size before a restart.
    pub basis: usize,
    /// Residual tolerance relative to `max(1, |theta|)`.
    pub tolerance: f64,
    pub max_restarts: usize,
    pub seed: u64,
}

impl LanczosOptions {
    pub fn for_k(k: usize) -> Self {
        LanczosOptions {
            basis: (2 * k + 24).max(k + 8),
            tolerance: 1e-8,
            max_restarts: 300,
            seed: 0x5eed_1a2c,
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Two-pass classical Gram-Schmidt of `w` against `basis`; returns the
/// accumulated coefficients.
fn orthogonalize(basis: &[Vec<f64>], w: &mut [f64]) -> Vec<f64> {
    let mut h = vec![0.0; basis.len()];
    for _ in 0..2 {
        let c: Vec<f64> = basis.iter().map(|v| dot(v, w)).collect();
        for (v, &ci) in basis.iter().zip(&c) {
            axpy(-ci, v, w);
        }
        for (hi, ci) in h.iter_mut().zip(c) {
            *hi += ci;
        }
    }
    h
}

fn random_orthogonal<R: Rng>(basis: &[Vec<f64>], n: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let mut w: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        orthogonalize(basis, &mut w);
        let nw = norm(&w);
        if nw > 1e-8 {
            w.iter_mut().for_each(|x| *x /= nw);
            return w;
        }
    }
}

/// Indices of `values` by descending `|value|`; exact ties favour the
/// positive value, then the lower index.
pub(crate) fn order_by_magnitude(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| {
        values[b]
            .abs()
            .total_cmp(&values[a].abs())
            .then_with(|| (values[b] > 0.0).cmp(&(values[a] > 0.0)))
            .then(a.cmp(&b))
    });
    idx
}

/// Computes the `k` eigenpairs of largest magnitude. Returns eigenvalues in
/// the selection order and the matching unit eigenvectors.
pub fn lanczos<O: SymmetricOperator + ?Sized>(
    op: &O,
    k: usize,
    options: &LanczosOptions,
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = op.dim();
    let m = options.basis.min(n - 1);
    assert!(k < m, "basis of {m} too small for k = {k}");
    let mut rng = rng::stream(options.seed, 0);

    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
    basis.push(random_orthogonal(&[], n, &mut rng));
    let mut t = DMatrix::<f64>::zeros(m, m);
    let mut start = 0;
    let mut w = vec![0.0; n];

    for restart in 0..=options.max_restarts {
        let mut beta = 0.0;
        let mut residual = Vec::new();
        for col in start..m {
            op.apply(&basis[col], &mut w);
            let h = orthogonalize(&basis, &mut w);
            for (i, &hi) in h.iter().enumerate() {
                t[(i, col)] = hi;
                t[(col, i)] = hi;
            }
            beta = norm(&w);
            let breakdown = beta <= 1e-12 * t[(col, col)].abs().max(1.0);
            if col + 1 < m {
                if breakdown {
                    basis.push(random_orthogonal(&basis, n, &mut rng));
                } else {
                    basis.push(w.iter().map(|x| x / beta).collect());
                }
            } else {
                if breakdown {
                    beta = 0.0;
                }
                residual = w.clone();
            }
        }

        let eig = t.clone().symmetric_eigen();
        let theta: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        let order = order_by_magnitude(&theta);
        let resid = |i: usize| (beta * eig.eigenvectors[(m - 1, i)]).abs();
        let converged = order[..k]
            .iter()
            .all(|&i| resid(i) <= options.tolerance * theta[i].abs().max(1.0));

        let ritz = |i: usize| -> Vec<f64> {
            let mut x = vec![0.0; n];
            for (l, v) in basis.iter().take(m).enumerate() {
                axpy(eig.eigenvectors[(l, i)], v, &mut x);
            }
            x
        };

        if converged {
            let values = order[..k].iter().map(|&i| theta[i]).collect();
            let vectors = order[..k].iter().map(|&i| ritz(i)).collect();
            return Ok((values, vectors));
        }
        if restart == options.max_restarts {
            break;
        }

        let keep = (k + (m - k) / 2).min(m - 1);
        let kept: Vec<Vec<f64>> = order[..keep].iter().map(|&i| ritz(i)).collect();
        t.fill(0.0);
        for (slot, &i) in order[..keep].iter().enumerate() {
            t[(slot, slot)] = theta[i];
        }
        basis = kept;
        let next = if beta > 0.0 {
            let mut r = residual;
            // re-orthogonalize against the rotated basis before normalizing
            orthogonalize(&basis, &mut r);
            let nr = norm(&r);
            if nr > 1e-12 * beta.max(1.0) {
                r.iter_mut().for_each(|x| *x /= nr);
                r
            } else {
                random_orthogonal(&basis, n, &mut rng)
            }
        } else {
            random_orthogonal(&basis, n, &mut rng)
        };
        basis.push(next);
        start = keep;
    }
    Err(Error::NoConvergence(options.max_restarts))
}
