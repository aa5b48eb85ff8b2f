//! End-to-end learning, evaluation against a known model, and the
//! diagnostics that indicate whether a model is learnable from a graph.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::comparison_graph::ComparisonGraph;
use crate::error::{Error, Result, StageExt};
use crate::matrix_altmin::RANK_TOLERANCE;
use crate::mnl_model::{MixedMnlModel, ObservationBatch};
use crate::moments::incoherence_of_basis;
use crate::rank_centrality::rank_centrality;
use crate::spectral_dist::{
    consistency_from_model, spectral_dist, MixtureMomentsEstimate, MomentDiagnostics,
    SpectralDistOptions, SpectralTrace,
};

/// Largest `r` matched by enumerating all permutations.
pub const EXHAUSTIVE_MATCH_LIMIT: usize = 8;
pub const DEFAULT_DELTA: f64 = 0.1;
pub const DEFAULT_EPSILON: f64 = 0.1;
pub const SAMPLE_SIZE_NOTE: &str = "order-of-magnitude, constants omitted";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LearnConfig {
    pub r: usize,
    /// Matrix-completion steps; `⌈ln(N·|S|)⌉` when unset.
    pub t1: Option<usize>,
    /// Power-iteration steps for the ranking; chosen adaptively when unset.
    pub t2: Option<usize>,
    pub seed: u64,
}

impl LearnConfig {
    pub fn new(r: usize) -> Self {
        Self {
            r,
            t1: None,
            t2: None,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RankingDiagnostics {
    pub t2: usize,
    pub last_change: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct LearnDiagnostics {
    pub moments: MomentDiagnostics,
    pub ranking: Vec<RankingDiagnostics>,
}

#[derive(Clone, Debug)]
pub struct ComponentEstimates {
    pub q_hat: Vec<f64>,
    /// One weight vector per component, each summing to 1.
    pub w_hat: Vec<Vec<f64>>,
    /// `N × r` expected outcomes before clamping.
    pub p_hat: DMatrix<f64>,
    pub diagnostics: LearnDiagnostics,
    pub trace: SpectralTrace,
}

/// Moment estimation followed by one ranking per component.
pub fn learn_mixed_mnl(
    batch: &ObservationBatch,
    g: &ComparisonGraph,
    cfg: &LearnConfig,
) -> Result<ComponentEstimates> {
    if batch.num_pairs() != g.num_pairs() {
        return Err(Error::invalid(format!(
            "batch is over {} pairs but the graph has {}",
            batch.num_pairs(),
            g.num_pairs()
        )));
    }
    let opts = SpectralDistOptions {
        t1: cfg.t1,
        seed: cfg.seed,
        ..Default::default()
    };
    let est = spectral_dist(batch, cfg.r, &opts)?;
    rank_components(est, g, cfg)
}

/// The same pipeline with the moments computed exactly from `model`.
pub fn learn_from_model(
    model: &MixedMnlModel,
    g: &ComparisonGraph,
    cfg: &LearnConfig,
) -> Result<ComponentEstimates> {
    let est = consistency_from_model(model, g, cfg.r, cfg.seed)?;
    rank_components(est, g, cfg)
}

fn rank_components(
    est: MixtureMomentsEstimate,
    g: &ComparisonGraph,
    cfg: &LearnConfig,
) -> Result<ComponentEstimates> {
    let mut w_hat = Vec::with_capacity(cfg.r);
    let mut ranking = Vec::with_capacity(cfg.r);
    for a in 0..cfg.r {
        let col: Vec<f64> = est.p_hat.column(a).iter().copied().collect();
        let out = rank_centrality(g, &col, cfg.t2).stage("ranking")?;
        ranking.push(RankingDiagnostics {
            t2: out.t2,
            last_change: out.last_change,
        });
        w_hat.push(out.weights);
    }
    Ok(ComponentEstimates {
        q_hat: est.q_hat,
        w_hat,
        p_hat: est.p_hat,
        diagnostics: LearnDiagnostics {
            moments: est.diagnostics,
            ranking,
        },
        trace: est.trace,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct EvaluationReport {
    /// `permutation[a]` is the estimated component matched to true component `a`.
    pub permutation: Vec<usize>,
    pub q_errors: Vec<f64>,
    /// `‖ŵ − w‖ / ‖w‖` per true component.
    pub weight_errors: Vec<f64>,
    /// Sum of both error kinds over components; the matching minimizes it.
    pub total_error: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub conditions: Option<ConditionReport>,
}

impl EvaluationReport {
    pub fn max_q_error(&self) -> f64 {
        self.q_errors.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_weight_error(&self) -> f64 {
        self.weight_errors.iter().copied().fold(0.0, f64::max)
    }
}

fn relative_error(est: &[f64], truth: &[f64]) -> f64 {
    let diff: f64 = est.iter().zip(truth).map(|(a, b)| (a - b).powi(2)).sum();
    let norm: f64 = truth.iter().map(|b| b * b).sum();
    (diff / norm).sqrt()
}

/// Pairs estimated components with true ones so that the summed
/// `|q̂ − q| + ‖ŵ − w‖/‖w‖` is minimal.
pub fn match_components(
    q_hat: &[f64],
    w_hat: &[Vec<f64>],
    truth: &MixedMnlModel,
) -> Result<EvaluationReport> {
    let r = truth.r();
    if q_hat.len() != r || w_hat.len() != r {
        return Err(Error::invalid(format!(
            "estimate has {} / {} components, truth has {r}",
            q_hat.len(),
            w_hat.len()
        )));
    }
    if let Some(w) = w_hat.iter().find(|w| w.len() != truth.n()) {
        return Err(Error::invalid(format!(
            "estimated weight vector has {} items, truth has {}",
            w.len(),
            truth.n()
        )));
    }
    let q_err = DMatrix::from_fn(r, r, |a, b| (q_hat[b] - truth.q()[a]).abs());
    let w_err = DMatrix::from_fn(r, r, |a, b| relative_error(&w_hat[b], truth.weights(a)));
    let cost = &q_err + &w_err;
    let permutation = if r <= EXHAUSTIVE_MATCH_LIMIT {
        brute_force_assignment(&cost)
    } else {
        hungarian(&cost)
    };
    let q_errors: Vec<f64> = (0..r).map(|a| q_err[(a, permutation[a])]).collect();
    let weight_errors: Vec<f64> = (0..r).map(|a| w_err[(a, permutation[a])]).collect();
    let total_error = (0..r).map(|a| cost[(a, permutation[a])]).sum();
    Ok(EvaluationReport {
        permutation,
        q_errors,
        weight_errors,
        total_error,
        conditions: None,
    })
}

/// Minimum-cost assignment by enumerating every permutation (Heap's algorithm).
pub fn brute_force_assignment(cost: &DMatrix<f64>) -> Vec<usize> {
    let r = cost.nrows();
    let eval = |p: &[usize]| (0..r).map(|a| cost[(a, p[a])]).sum::<f64>();
    let mut perm: Vec<usize> = (0..r).collect();
    let mut best = perm.clone();
    let mut best_cost = eval(&perm);
    let mut c = vec![0usize; r];
    let mut i = 1;
    while i < r {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            let v = eval(&perm);
            if v < best_cost {
                best_cost = v;
                best.clone_from(&perm);
            }
            c[i] += 1;
            i = 1;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    best
}

/// Minimum-cost assignment by the potential-based Hungarian method, `O(r³)`.
pub fn hungarian(cost: &DMatrix<f64>) -> Vec<usize> {
    let n = cost.nrows();
    // 1-based arrays with a sentinel column 0.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[(i0 - 1, j - 1)] - u[i0] - v[j];
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
            for j in 0..=n {
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
    let mut assignment = vec![0; n];
    for j in 1..=n {
        if p[j] > 0 {
            assignment[p[j] - 1] = j - 1;
        }
    }
    assignment
}

/// Learnability diagnostics of a model on a graph.
#[derive(Clone, Debug, Serialize)]
pub struct ConditionReport {
    pub r: usize,
    pub num_pairs: usize,
    /// Numerical rank of `M₂`.
    pub rank: usize,
    pub rank_deficient: bool,
    /// Leading eigenvalues of `M₂`, descending.
    pub sigma: Vec<f64>,
    pub sigma_ratio: f64,
    pub mu: f64,
    pub spectral_gap: f64,
    pub connected: bool,
    pub bipartite: bool,
    pub dynamic_range: f64,
    pub d_min: usize,
    pub d_max: usize,
    pub ell: usize,
    pub delta: f64,
    pub epsilon: f64,
    pub sample_size: f64,
    pub sample_size_note: &'static str,
}

/// The nonzero eigenpairs of `M₂ = P Q Pᵀ` via the `r × r` Gram matrix
/// `Q^{1/2} PᵀP Q^{1/2} = W Λ Wᵀ`: the eigenvalues are `Λ` and the
/// eigenvectors `P Q^{1/2} W Λ^{-1/2}`.
pub fn m2_eigenpairs(
    model: &MixedMnlModel,
    g: &ComparisonGraph,
) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let mut pq = model.p_matrix(g)?;
    for (a, &qa) in model.q().iter().enumerate() {
        pq.column_mut(a).scale_mut(qa.sqrt());
    }
    let gram = pq.transpose() * &pq;
    let eig = SymmetricEigen::new(gram);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values: Vec<f64> = order.iter().map(|&j| eig.eigenvalues[j].max(0.0)).collect();
    let mut u = DMatrix::zeros(pq.nrows(), order.len());
    for (c, &j) in order.iter().enumerate() {
        let col = &pq * eig.eigenvectors.column(j);
        let lam = eig.eigenvalues[j];
        if lam > 0.0 {
            u.column_mut(c).copy_from(&(col / lam.sqrt()));
        }
    }
    Ok((values, u))
}

#[allow(clippy::too_many_arguments)]
/// `r N⁴ ln(N/δ) / (q_min σ₁² ε²) · (1/ℓ² + σ₁/(ℓN) + r⁴σ₁⁴/σ_r⁵)`.
pub fn sample_size_expression(
    r: usize,
    num_pairs: usize,
    ell: usize,
    q_min: f64,
    sigma1: f64,
    sigma_r: f64,
    delta: f64,
    epsilon: f64,
) -> f64 {
    let (r, n, l) = (r as f64, num_pairs as f64, ell as f64);
    let prefactor =
        r * n.powi(4) * (n / delta).ln() / (q_min * sigma1 * sigma1 * epsilon * epsilon);
    prefactor * (1.0 / (l * l) + sigma1 / (l * n) + r.powi(4) * sigma1.powi(4) / sigma_r.powi(5))
}

/// Rank and conditioning of `M₂`, its incoherence, the graph's spectral
/// gap and connectivity, the dynamic range, and the sample-size expression
/// with unit constants.
pub fn check_conditions(
    model: &MixedMnlModel,
    g: &ComparisonGraph,
    ell: usize,
) -> Result<ConditionReport> {
    let r = model.r();
    let (sigma, u) = m2_eigenpairs(model, g)?;
    let top = sigma[0];
    let rank = sigma
        .iter()
        .filter(|&&s| s > RANK_TOLERANCE * top && top > 0.0)
        .count();
    let inc = incoherence_of_basis(&u, &sigma);
    let diag = g.diagnostics();
    let sigma_r = sigma[r - 1];
    Ok(ConditionReport {
        r,
        num_pairs: g.num_pairs(),
        rank,
        rank_deficient: rank < r || inc.rank_deficient,
        sigma_ratio: if sigma_r > 0.0 {
            top / sigma_r
        } else {
            f64::INFINITY
        },
        mu: inc.mu,
        spectral_gap: diag.spectral_gap,
        connected: diag.connected,
        bipartite: diag.bipartite,
        dynamic_range: model.dynamic_range(),
        d_min: diag.d_min,
        d_max: diag.d_max,
        ell,
        delta: DEFAULT_DELTA,
        epsilon: DEFAULT_EPSILON,
        sample_size: sample_size_expression(
            r,
            g.num_pairs(),
            ell,
            model.q_min(),
            top,
            sigma_r,
            DEFAULT_DELTA,
            DEFAULT_EPSILON,
        ),
        sample_size_note: SAMPLE_SIZE_NOTE,
        sigma,
    })
}
