//! Misclassification rates, the privacy cost factor `g_eps(B)`, and the
//! finite-sample bound reports for SBM and DCBM clustering.

use std::fmt;

use nalgebra::DMatrix;

use crate::block_model::{model_derived, BlockModelParams};
use crate::error::{Error, Result};
use crate::graph::{community_stats, LabelVector};
use crate::mechanism::PrivacyBudget;

/// Largest `k` for which `overall_misclassification` enumerates permutations.
pub const ENUMERATION_MAX_K: usize = 6;

/// `counts[t][e]` = number of nodes with true label `t` and estimate `e`,
/// over `max(k_truth, k_estimate)` labels.
pub fn confusion(truth: &LabelVector, estimate: &LabelVector) -> Result<Vec<Vec<u64>>> {
    if truth.len() != estimate.len() {
        return Err(Error::LabelCount {
            expected: truth.len(),
            found: estimate.len(),
        });
    }
    if truth.is_empty() {
        return Err(Error::EmptyInput("label vector"));
    }
    let k = truth.k().max(estimate.k());
    let mut counts = vec![vec![0u64; k]; k];
    for (&t, &e) in truth.as_slice().iter().zip(estimate.as_slice()) {
        counts[t][e] += 1;
    }
    Ok(counts)
}

/// Calls `f` on every permutation of `0..k` (Heap's algorithm).
fn for_each_permutation(k: usize, mut f: impl FnMut(&[usize])) {
    let mut perm: Vec<usize> = (0..k).collect();
    let mut c = vec![0; k];
    f(&perm);
    let mut i = 0;
    while i < k {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            f(&perm);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

/// Largest `sum_t counts[t][sigma(t)]` by enumerating all permutations.
fn max_agreement_enumerated(counts: &[Vec<u64>]) -> u64 {
    let mut best = 0;
    for_each_permutation(counts.len(), |perm| {
        let agree = perm.iter().enumerate().map(|(t, &e)| counts[t][e]).sum();
        best = best.max(agree);
    });
    best
}

/// Largest `sum_t counts[t][sigma(t)]` by the Hungarian method.
fn max_agreement_hungarian(counts: &[Vec<u64>]) -> u64 {
    let k = counts.len();
    let cost = |i: usize, j: usize| -(counts[i - 1][j - 1] as i64);
    // potentials u (rows), v (columns); p[j] = row matched to column j; 1-based
    let mut u = vec![0i64; k + 1];
    let mut v = vec![0i64; k + 1];
    let mut p = vec![0usize; k + 1];
    let mut way = vec![0usize; k + 1];
    for i in 1..=k {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![i64::MAX; k + 1];
        let mut used = vec![false; k + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = i64::MAX;
            let mut j1 = 0;
            for j in 1..=k {
                if !used[j] {
                    let cur = cost(i0, j) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=k {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    (1..=k).map(|j| counts[p[j] - 1][j - 1]).sum()
}

fn mismatch_share(n: usize, agree: u64) -> f64 {
    (n as u64 - agree) as f64 / n as f64
}

/// `L` via enumeration of all `k!` label permutations.
pub fn overall_misclassification_enumerated(truth: &LabelVector, estimate: &LabelVector) -> Result<f64> {
    let counts = confusion(truth, estimate)?;
    Ok(mismatch_share(truth.len(), max_agreement_enumerated(&counts)))
}

/// `L` via maximum-agreement assignment on the confusion matrix.
pub fn overall_misclassification_hungarian(truth: &LabelVector, estimate: &LabelVector) -> Result<f64> {
    let counts = confusion(truth, estimate)?;
    Ok(mismatch_share(truth.len(), max_agreement_hungarian(&counts)))
}

/// Overall misclassification `L`: the smallest fraction of mismatched nodes
/// over relabelings of the estimate.
pub fn overall_misclassification(truth: &LabelVector, estimate: &LabelVector) -> Result<f64> {
    if truth.k().max(estimate.k()) <= ENUMERATION_MAX_K {
        overall_misclassification_enumerated(truth, estimate)
    } else {
        overall_misclassification_hungarian(truth, estimate)
    }
}

/// Worst-case misclassification `L~`: the largest per-block error, where a
/// block's error is one minus the share of its most common estimated label.
/// Empty true blocks are skipped.
pub fn worstcase_misclassification(truth: &LabelVector, estimate: &LabelVector) -> Result<f64> {
    let counts = confusion(truth, estimate)?;
    Ok(counts
        .iter()
        .filter_map(|row| {
            let size: u64 = row.iter().sum();
            let top = *row.iter().max()?;
            (size > 0).then(|| (size - top) as f64 / size as f64)
        })
        .fold(0.0, f64::max))
}

/// `L~` with the inner minimum taken over all `k!` permutations per block.
pub fn worstcase_misclassification_enumerated(truth: &LabelVector, estimate: &LabelVector) -> Result<f64> {
    let counts = confusion(truth, estimate)?;
    let mut worst: f64 = 0.0;
    for (j, row) in counts.iter().enumerate() {
        let size: u64 = row.iter().sum();
        if size == 0 {
            continue;
        }
        let mut best = u64::MAX;
        // sigma maps estimated labels to true labels; count nodes with sigma(e) != j
        for_each_permutation(counts.len(), |sigma| {
            let wrong = (0..counts.len()).filter(|&e| sigma[e] != j).map(|e| row[e]).sum();
            best = best.min(wrong);
        });
        worst = worst.max(best as f64 / size as f64);
    }
    Ok(worst)
}

/// Cost-of-privacy factor: `max B` without privacy, otherwise
/// `(e^eps + 1)/(e^eps - 1) * (max B + 1/(e^eps - 1))`.
pub fn g_eps(b: &DMatrix<f64>, budget: PrivacyBudget) -> f64 {
    g_eps_from_max(b.max(), budget)
}

/// [`g_eps`] given `max B` directly.
pub fn g_eps_from_max(max_b: f64, budget: PrivacyBudget) -> f64 {
    if budget.is_infinite() {
        return max_b;
    }
    let zeta = budget.zeta();
    (max_b + 1.0 / zeta) / budget.signal_scale()
}

/// Upper envelope `max B + 3/zeta + 2/zeta^2` of `g_eps` for finite budgets.
pub fn g_eps_envelope(max_b: f64, budget: PrivacyBudget) -> f64 {
    if budget.is_infinite() {
        return max_b;
    }
    let z = budget.zeta();
    max_b + 3.0 / z + 2.0 / (z * z)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundKind {
    Sbm,
    Dcbm,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub kind: BoundKind,
    /// Left-hand side of the sufficient condition.
    pub condition_value: f64,
    /// Right-hand side: `1/c1` (SBM) or `n_min / (c2 sqrt(sum n_j^2 nu_j))` (DCBM).
    pub threshold: f64,
    pub condition_met: bool,
    pub l_bound: f64,
    pub l_tilde_bound: f64,
    /// `l_tilde_bound` is `(n/n_min) * l_bound` rather than a direct bound.
    pub l_tilde_via_fallback: bool,
    /// `c1` or `c2`.
    pub constant: f64,
    pub gamma: f64,
    pub g_eps: f64,
}

impl fmt::Display for BoundReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self.kind {
            BoundKind::Sbm => "c1",
            BoundKind::Dcbm => "c2",
        };
        write!(
            f,
            "{:?} condition {:.6e} < {:.6e}: {} ({name} = {}, gamma = {}, g = {:.6e}); L <= {:.6e}, L~ <= {:.6e}{}",
            self.kind,
            self.condition_value,
            self.threshold,
            self.condition_met,
            self.constant,
            self.gamma,
            self.g_eps,
            self.l_bound,
            self.l_tilde_bound,
            if self.l_tilde_via_fallback { " (n/n_min fallback)" } else { "" }
        )
    }
}

fn check_constant(c: f64, gamma: f64) -> Result<()> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::invalid(format!("bound constant must be positive, got {c}")));
    }
    if !(gamma >= 0.0) {
        return Err(Error::invalid(format!("gamma must be non-negative, got {gamma}")));
    }
    Ok(())
}

/// SBM condition and bounds for k-means spectral clustering.
pub fn sbm_bound_report(
    params: &BlockModelParams,
    gamma: f64,
    budget: PrivacyBudget,
    c1: f64,
) -> Result<BoundReport> {
    check_constant(c1, gamma)?;
    if !params.is_sbm() {
        return Err(Error::invalid("SBM bound requires psi = 1 for every node"));
    }
    let derived = model_derived(params)?;
    let stats = community_stats(params.labels());
    let g = g_eps_from_max(derived.max_b, budget);
    let n = params.node_count() as f64;
    let k = params.k() as f64;
    let n_min = stats.n_min as f64;
    let per_n = (2.0 + gamma) * k / (n_min * n_min * derived.lambda_b * derived.lambda_b) * g;
    let condition_value = per_n * n;
    let threshold = 1.0 / c1;
    Ok(BoundReport {
        kind: BoundKind::Sbm,
        condition_value,
        threshold,
        condition_met: condition_value < threshold,
        l_bound: c1 * per_n * stats.n_max_prime as f64,
        l_tilde_bound: c1 * condition_value,
        l_tilde_via_fallback: false,
        constant: c1,
        gamma,
        g_eps: g,
    })
}

/// DCBM condition and `L` bound for normalized k-medians spectral clustering;
/// `L~` comes from `(n/n_min) L`.
pub fn dcbm_bound_report(
    params: &BlockModelParams,
    gamma: f64,
    budget: PrivacyBudget,
    c2: f64,
) -> Result<BoundReport> {
    check_constant(c2, gamma)?;
    if !params.is_block_normalized() {
        log::warn!("degree parameters do not reach 1 in every block; DCBM bound assumptions fail");
    }
    let derived = model_derived(params)?;
    let stats = community_stats(params.labels());
    let g = g_eps_from_max(derived.max_b, budget);
    let n = params.node_count() as f64;
    let k = params.k() as f64;
    let n_min = stats.n_min as f64;
    let weighted: f64 = stats
        .block_sizes
        .iter()
        .zip(&derived.heterogeneity)
        .map(|(&nj, &nu)| (nj * nj) as f64 * nu)
        .sum();
    let scale = (2.5 + gamma) / (derived.n_tilde_min * derived.lambda_b);
    let condition_value = scale * (k * n * g).sqrt();
    let threshold = n_min / (c2 * weighted.sqrt());
    let l_bound = c2 * scale * (k / n * weighted * g).sqrt();
    Ok(BoundReport {
        kind: BoundKind::Dcbm,
        condition_value,
        threshold,
        condition_met: condition_value < threshold,
        l_bound,
        l_tilde_bound: n / n_min * l_bound,
        l_tilde_via_fallback: true,
        constant: c2,
        gamma,
        g_eps: g,
    })
}

/// Asymptotic DCBM rate `k sqrt(g) / (a^3 lambda_B sqrt(n))`.
pub fn dcbm_rate(k: usize, n: usize, g: f64, a: f64, lambda_b: f64) -> f64 {
    k as f64 * g.sqrt() / (a.powi(3) * lambda_b * (n as f64).sqrt())
}

/// Embedding deviation scale `2 sqrt(2 k n g) / (n~_min lambda_B)`, the
/// Procrustes distance bound up to its universal constant.
pub fn procrustes_scale(params: &BlockModelParams, budget: PrivacyBudget) -> Result<f64> {
    let derived = model_derived(params)?;
    let g = g_eps_from_max(derived.max_b, budget);
    let kn = (params.k() * params.node_count()) as f64;
    Ok(2.0 * (2.0 * kn * g).sqrt() / (derived.n_tilde_min * derived.lambda_b))
}
