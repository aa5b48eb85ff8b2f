//! Moment-based recovery of the mixture weights `q` and the per-component
//! expected-outcome vectors `P_a` from a batch of partial observations.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::comparison_graph::ComparisonGraph;
use crate::error::{Error, Result, StageExt};
use crate::linalg::Tensor3;
use crate::matrix_altmin::{matrix_alt_min, symmetrize_and_eig, ConvergenceReport};
use crate::mnl_model::{MixedMnlModel, ObservationBatch};
use crate::moments::{empirical_s2, exact_m2, incoherence_of_basis, split_halves, WhiteningBasis};
use crate::tensor_estimation::{
    default_restarts, rtpm, tensor_ls, TensorEigenpairs, DEFAULT_POWER_ITERS,
};

/// `Σ q̂_a` outside this band is reported as suspicious.
pub const Q_SUM_BAND: (f64, f64) = (0.5, 1.5);

#[derive(Clone, Debug, Default)]
pub struct SpectralDistOptions {
    /// Alternating-minimization steps; `⌈ln(N·|S|)⌉` when unset.
    pub t1: Option<usize>,
    /// Power-method restarts per round; `⌈20 r ln(r + 1)⌉` when unset.
    pub restarts: Option<usize>,
    /// Power iterations per restart; 50 when unset.
    pub power_iters: Option<usize>,
    /// Seed for the power-method starting points.
    pub seed: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct MomentDiagnostics {
    pub sigma1: f64,
    pub sigma_r: f64,
    pub mu: f64,
    pub rank_deficient: bool,
    pub q_sum: f64,
    pub q_sum_in_band: bool,
    pub t1: Option<usize>,
    pub altmin: Option<ConvergenceReport>,
    pub tensor_condition: Option<f64>,
    pub pseudo_inverse: bool,
}

/// Intermediate quantities kept for inspection.
#[derive(Clone, Debug, Serialize)]
pub struct SpectralTrace {
    pub sigma: Vec<f64>,
    pub whitened_tensor: Vec<f64>,
    pub eigenpairs: TensorEigenpairs,
}

#[derive(Clone, Debug)]
pub struct MixtureMomentsEstimate {
    /// Raw `λ̂_a^{-2}`; not renormalized.
    pub q_hat: Vec<f64>,
    /// `N × r`.
    pub p_hat: DMatrix<f64>,
    pub diagnostics: MomentDiagnostics,
    pub trace: SpectralTrace,
}

/// `⌈ln(N·|S|)⌉`, at least 1.
pub fn default_t1(num_pairs: usize, samples: usize) -> usize {
    ((num_pairs as f64 * samples as f64).ln().ceil() as usize).max(1)
}

/// Full moment pipeline: the first half of the batch estimates the second
/// moment, its diagonal is completed, and the whitening basis is applied to
/// the third-moment statistic of the second half.
pub fn spectral_dist(
    batch: &ObservationBatch,
    r: usize,
    opts: &SpectralDistOptions,
) -> Result<MixtureMomentsEstimate> {
    if r == 0 {
        return Err(Error::invalid("number of components must be positive"));
    }
    if batch.len() < 2 {
        return Err(Error::invalid(format!(
            "need at least 2 samples to split the batch, got {}",
            batch.len()
        )));
    }
    if batch.ell() < 3 {
        return Err(Error::invalid(format!(
            "third-moment estimation needs at least 3 pairs per observation, got {}",
            batch.ell()
        )));
    }
    let (first, second) = split_halves(batch.len());
    let s2 = empirical_s2(batch, first).stage("second moment")?;
    let t1 = opts
        .t1
        .unwrap_or_else(|| default_t1(batch.num_pairs(), batch.len()));
    let (completed, report) = matrix_alt_min(&s2, r, t1).stage("matrix completion")?;
    let basis = symmetrize_and_eig(&completed, r).stage("whitening")?;
    let ls = tensor_ls(batch, second, &basis).stage("tensor estimation")?;
    let mut est = decompose(&basis, &ls.tensor, r, opts).stage("tensor decomposition")?;
    est.diagnostics.t1 = Some(t1);
    est.diagnostics.altmin = Some(report);
    est.diagnostics.tensor_condition = Some(ls.condition_number);
    est.diagnostics.pseudo_inverse = ls.pseudo_inverse;
    Ok(est)
}

/// Recovery from exact moments: eigendecompose `M₂`, whiten the full `M₃`,
/// and decompose.
pub fn consistency_from_exact(
    m2: &DMatrix<f64>,
    m3: &Tensor3,
    r: usize,
    seed: u64,
) -> Result<MixtureMomentsEstimate> {
    if m3.dim() != m2.nrows() {
        return Err(Error::invalid(
            "second and third moments disagree in dimension",
        ));
    }
    let basis = symmetrize_and_eig(m2, r).stage("whitening")?;
    let h = m3.multilinear(&basis.whitening());
    let opts = SpectralDistOptions {
        seed,
        ..Default::default()
    };
    decompose(&basis, &h, r, &opts).stage("tensor decomposition")
}

/// Same as [`consistency_from_exact`] but whitens `M₃` component by
/// component, so no `N³` tensor is formed.
pub fn consistency_from_model(
    m: &MixedMnlModel,
    g: &ComparisonGraph,
    r: usize,
    seed: u64,
) -> Result<MixtureMomentsEstimate> {
    let m2 = exact_m2(m, g)?;
    let basis = symmetrize_and_eig(&m2, r).stage("whitening")?;
    let p = m.p_matrix(g)?;
    let projected = basis.whitening().transpose() * p;
    let h = Tensor3::symmetric_sum(m.q(), &projected);
    let opts = SpectralDistOptions {
        seed,
        ..Default::default()
    };
    decompose(&basis, &h, r, &opts).stage("tensor decomposition")
}

/// `P̂ = B V̂ Λ̂` and `q̂ = λ̂^{-2}` from the eigenpairs of the whitened tensor.
fn decompose(
    basis: &WhiteningBasis,
    h: &Tensor3,
    r: usize,
    opts: &SpectralDistOptions,
) -> Result<MixtureMomentsEstimate> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let restarts = opts.restarts.unwrap_or_else(|| default_restarts(r));
    let iters = opts.power_iters.unwrap_or(DEFAULT_POWER_ITERS);
    let pairs = rtpm(h, r, restarts, iters, &mut rng)?;
    let v = pairs.vector_matrix();
    let lambda = DVector::from_vec(pairs.values.clone());
    let mut p_hat = basis.unwhitening() * v;
    for (a, &l) in lambda.iter().enumerate() {
        p_hat.column_mut(a).scale_mut(l);
    }
    let q_hat: Vec<f64> = lambda.iter().map(|l| l.powi(-2)).collect();
    let q_sum: f64 = q_hat.iter().sum();
    let inc = incoherence_of_basis(&basis.u, &basis.sigma);
    let diagnostics = MomentDiagnostics {
        sigma1: basis.sigma[0],
        sigma_r: basis.sigma[r - 1],
        mu: inc.mu,
        rank_deficient: inc.rank_deficient,
        q_sum,
        q_sum_in_band: (Q_SUM_BAND.0..=Q_SUM_BAND.1).contains(&q_sum),
        t1: None,
        altmin: None,
        tensor_condition: None,
        pseudo_inverse: false,
    };
    Ok(MixtureMomentsEstimate {
        q_hat,
        p_hat,
        diagnostics,
        trace: SpectralTrace {
            sigma: basis.sigma.clone(),
            whitened_tensor: h.as_slice().to_vec(),
            eigenpairs: pairs,
        },
    })
}
