//! The symmetric edge-flip mechanism and the transforms built around it.
//!
//! Each pair `i < j` is reported by node `i`, which keeps its true bit with
//! probability `e^eps / (1 + e^eps)` and reports the complement otherwise.
//! The output is symmetrized from those row reports. An infinite budget is the
//! identity mechanism.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Above this budget the flip probability is below `2.4e-16` and the
/// mechanism is applied as the identity.
pub const IDENTITY_CUTOFF: f64 = 36.0;

/// Privacy-loss budget `eps > 0`, or no privacy at all.
#[derive(Clone, Copy, PartialEq)]
pub struct PrivacyBudget {
    eps: Option<f64>,
}

impl PrivacyBudget {
    pub const INFINITE: PrivacyBudget = PrivacyBudget { eps: None };

    pub fn finite(eps: f64) -> Result<Self> {
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(Error::invalid(format!(
                "privacy budget must be a positive finite number, got {eps}"
            )));
        }
        Ok(PrivacyBudget { eps: Some(eps) })
    }

    pub fn epsilon(&self) -> Option<f64> {
        self.eps
    }

    pub fn is_infinite(&self) -> bool {
        self.eps.is_none()
    }

    /// `1 / (1 + e^eps)`; zero for the infinite budget. This is also the
    /// downshift amount.
    pub fn flip_probability(&self) -> f64 {
        match self.eps {
            Some(e) => 1.0 / (1.0 + e.exp()),
            None => 0.0,
        }
    }

    pub fn retention_probability(&self) -> f64 {
        1.0 - self.flip_probability()
    }

    /// `(e^eps - 1) / (e^eps + 1)`, the factor relating the downshifted
    /// expectation to the original one.
    pub fn signal_scale(&self) -> f64 {
        match self.eps {
            Some(e) => (e / 2.0).tanh(),
            None => 1.0,
        }
    }

    /// `zeta = e^eps - 1`.
    pub fn zeta(&self) -> f64 {
        match self.eps {
            Some(e) => e.exp_m1(),
            None => f64::INFINITY,
        }
    }

    /// Stable bit pattern for hashing; `u64::MAX` for the infinite budget.
    pub fn key(&self) -> u64 {
        self.eps.map_or(u64::MAX, f64::to_bits)
    }
}

impl fmt::Display for PrivacyBudget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.eps {
            Some(e) => write!(f, "{e}"),
            None => f.write_str("inf"),
        }
    }
}

impl fmt::Debug for PrivacyBudget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PrivacyBudget({self})")
    }
}

impl FromStr for PrivacyBudget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().trim_matches('"');
        match t.to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "+inf" | "∞" => Ok(PrivacyBudget::INFINITE),
            other => {
                let e: f64 = other
                    .parse()
                    .map_err(|_| Error::invalid(format!("invalid privacy budget {s:?}")))?;
                if e.is_infinite() && e > 0.0 {
                    Ok(PrivacyBudget::INFINITE)
                } else {
                    PrivacyBudget::finite(e)
                }
            }
        }
    }
}

/// Applies the symmetric edge-flip mechanism.
///
/// Randomness is consumed one uniform per pair in row-major upper-triangle
/// order: row `i` is node `i`'s local report on its pairs `j > i`.
pub fn edge_flip<R: Rng + ?Sized>(graph: &Graph, budget: PrivacyBudget, rng: &mut R) -> Graph {
    let Some(eps) = budget.epsilon() else {
        return graph.clone();
    };
    if eps > IDENTITY_CUTOFF {
        log::warn!("eps = {eps} > {IDENTITY_CUTOFF}: flip probability underflows, using identity");
        return graph.clone();
    }
    let flip = budget.flip_probability();
    Graph::from_upper_fn(graph.node_count(), |i, j| {
        let bit = graph.has_edge(i, j);
        if rng.random::<f64>() < flip {
            !bit
        } else {
            bit
        }
    })
}

/// Draws from the mixture representation of the edge-flip output: with
/// probability `2 / (e^eps + 1)` a pair is replaced by a fair coin, otherwise
/// it keeps its true value. Distributionally identical to [`edge_flip`].
pub fn mixture_sample<R: Rng + ?Sized>(
    graph: &Graph,
    budget: PrivacyBudget,
    rng: &mut R,
) -> Result<Graph> {
    let Some(eps) = budget.epsilon() else {
        return Err(Error::invalid("mixture form is undefined for an infinite budget"));
    };
    let resample = 2.0 / (eps.exp() + 1.0);
    Ok(Graph::from_upper_fn(graph.node_count(), |i, j| {
        if rng.random::<f64>() < resample {
            rng.random::<bool>()
        } else {
            graph.has_edge(i, j)
        }
    }))
}

/// Downshifted view `A - s (1 1^T - I)` of an observed graph, with
/// `s = 1 / (e^eps + 1)`. Never materialized unless asked.
#[derive(Debug, Clone, Copy)]
pub struct DownshiftedMatrix<'a> {
    graph: &'a Graph,
    budget: PrivacyBudget,
}

pub fn downshift(graph: &Graph, budget: PrivacyBudget) -> DownshiftedMatrix<'_> {
    DownshiftedMatrix { graph, budget }
}

impl<'a> DownshiftedMatrix<'a> {
    pub fn graph(&self) -> &'a Graph {
        self.graph
    }

    pub fn budget(&self) -> PrivacyBudget {
        self.budget
    }

    pub fn shift(&self) -> f64 {
        self.budget.flip_probability()
    }

    pub fn dim(&self) -> usize {
        self.graph.node_count()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            0.0
        } else {
            self.graph.has_edge(i, j) as u8 as f64 - self.shift()
        }
    }

    /// `y = (A - s J + s I) x`.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        self.graph.adjacency_matvec(x, y);
        let s = self.shift();
        if s != 0.0 {
            let total: f64 = x.iter().sum();
            for (yi, &xi) in y.iter_mut().zip(x) {
                *yi += s * (xi - total);
            }
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        let s = self.shift();
        let mut m = DMatrix::from_element(n, n, -s);
        for i in 0..n {
            m[(i, i)] = 0.0;
        }
        for (i, j) in self.graph.edges() {
            m[(i, j)] += 1.0;
            m[(j, i)] += 1.0;
        }
        m
    }
}

/// Connectivity matrix of the edge-flipped SBM:
/// `(e^eps + 1)^-1 1 1^T + (e^eps - 1)/(e^eps + 1) B`.
pub fn tau_eps(b: &DMatrix<f64>, budget: PrivacyBudget) -> DMatrix<f64> {
    if budget.is_infinite() {
        return b.clone();
    }
    let s = budget.flip_probability();
    let scale = budget.signal_scale();
    b.map(|v| s + scale * v)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditReport {
    pub n: usize,
    /// Largest `P(M(Y) = A) / P(M(Y') = A)` over neighbouring `Y, Y'` and
    /// outputs `A`.
    pub max_ratio: f64,
    /// Smallest per-pair maximum; equals `max_ratio` when every edge
    /// position leaks the same amount.
    pub min_pair_ratio: f64,
    pub neighbor_pairs: usize,
    pub outputs: usize,
}

pub const AUDIT_MAX_NODES: usize = 4;

/// Exhaustive likelihood-ratio audit of the edge-flip mechanism on every
/// graph with `2 <= n <= 4` nodes.
pub fn privacy_audit(n: usize, budget: PrivacyBudget) -> Result<AuditReport> {
    if n > AUDIT_MAX_NODES {
        return Err(Error::TooLarge(n, AUDIT_MAX_NODES));
    }
    if n < 2 {
        return Err(Error::invalid(format!("audit needs at least 2 nodes, got {n}")));
    }
    if budget.is_infinite() {
        return Err(Error::invalid("audit needs a finite budget"));
    }
    let pairs = n * n.saturating_sub(1) / 2;
    let graphs = 1u32 << pairs;
    let flip = budget.flip_probability();
    let keep = budget.retention_probability();
    let likelihood = |y: u32, a: u32| -> f64 {
        let diff = y ^ a;
        (0..pairs)
            .map(|e| if diff >> e & 1 == 1 { flip } else { keep })
            .product()
    };

    let mut max_ratio: f64 = 0.0;
    let mut min_pair_ratio = f64::INFINITY;
    let mut neighbor_pairs = 0;
    for y in 0..graphs {
        for e in 0..pairs {
            let y2 = y ^ (1 << e);
            neighbor_pairs += 1;
            let pair_max = (0..graphs)
                .map(|a| likelihood(y, a) / likelihood(y2, a))
                .fold(0.0, f64::max);
            max_ratio = max_ratio.max(pair_max);
            min_pair_ratio = min_pair_ratio.min(pair_max);
        }
    }
    Ok(AuditReport {
        n,
        max_ratio,
        min_pair_ratio,
        neighbor_pairs,
        outputs: graphs as usize,
    })
}
