//! Population moments of the observation vectors and their unbiased
//! empirical counterparts on the off-diagonal index sets.
//!
//! With `ℓ` distinct pairs drawn without replacement out of `N`, two distinct
//! pairs are both observed with probability `ℓ(ℓ−1) / (N(N−1))` and three with
//! probability `ℓ(ℓ−1)(ℓ−2) / (N(N−1)(N−2))`. The empirical estimators divide
//! those factors out, so their off-diagonal expectations equal `M₂` and `M₃`.

use std::ops::Range;

use nalgebra::DMatrix;

use crate::comparison_graph::ComparisonGraph;
use crate::error::{Error, Result};
use crate::linalg::{top_eigenpairs_by_magnitude, Tensor3};
use crate::mnl_model::{MixedMnlModel, ObservationBatch};

/// Default cap on `N` for materializing `N × N × N` tensors.
pub const DEFAULT_M3_CAP: usize = 60;

/// Scaled, off-diagonal empirical second moment.
#[derive(Clone, Debug)]
pub struct SecondMomentEstimate {
    /// `N × N`, symmetric, zero diagonal.
    pub matrix: DMatrix<f64>,
    pub sample_count: usize,
}

/// Leading eigenpairs of a (completed) second moment: `M ≈ U diag(σ) Uᵀ`.
#[derive(Clone, Debug)]
pub struct WhiteningBasis {
    /// `N × r`, orthonormal columns.
    pub u: DMatrix<f64>,
    /// Strictly positive, descending.
    pub sigma: Vec<f64>,
}

impl WhiteningBasis {
    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    /// `Q̂ = U Σ^{-1/2}`.
    pub fn whitening(&self) -> DMatrix<f64> {
        self.scaled_columns(|s| 1.0 / s.sqrt())
    }

    /// `B = U Σ^{1/2}`, the left inverse of `Q̂ᵀ` on the column span.
    pub fn unwhitening(&self) -> DMatrix<f64> {
        self.scaled_columns(f64::sqrt)
    }

    fn scaled_columns(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let mut out = self.u.clone();
        for (a, &s) in self.sigma.iter().enumerate() {
            out.column_mut(a).scale_mut(f(s));
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Incoherence {
    pub mu: f64,
    /// Set when fewer than `r` of the leading eigenvalues are numerically nonzero.
    pub rank_deficient: bool,
}

/// `M₂ = P diag(q) Pᵀ`, diagonal included.
pub fn exact_m2(m: &MixedMnlModel, g: &ComparisonGraph) -> Result<DMatrix<f64>> {
    let p = m.p_matrix(g)?;
    let mut pq = p.clone();
    for (a, &qa) in m.q().iter().enumerate() {
        pq.column_mut(a).scale_mut(qa);
    }
    Ok(pq * p.transpose())
}

/// `M₃ = Σ_a q_a P_a ⊗ P_a ⊗ P_a`, refused when `N > cap`.
pub fn exact_m3(m: &MixedMnlModel, g: &ComparisonGraph, cap: usize) -> Result<Tensor3> {
    if g.num_pairs() > cap {
        return Err(Error::TooLarge {
            what: "third-moment tensor",
            size: g.num_pairs(),
            cap,
        });
    }
    let p = m.p_matrix(g)?;
    Ok(Tensor3::symmetric_sum(m.q(), &p))
}

/// `𝒫_{Ω₃}(M₃)[W, W, W]` without materializing `M₃`.
pub fn exact_projected_m3(
    m: &MixedMnlModel,
    g: &ComparisonGraph,
    w: &DMatrix<f64>,
) -> Result<Tensor3> {
    let p = m.p_matrix(g)?;
    check_transform(w, p.nrows())?;
    let mut acc = ProjectedCubeAccumulator::new(w.ncols());
    for (a, &qa) in m.q().iter().enumerate() {
        let col = p.column(a);
        acc.add(w, col.iter().copied().enumerate(), qa);
    }
    Ok(acc.finish())
}

/// Index ranges of the two halves of a batch: `⌈S/2⌉` then `⌊S/2⌋` samples.
pub fn split_halves(len: usize) -> (Range<usize>, Range<usize>) {
    let first = len.div_ceil(2);
    (0..first, first..len)
}

pub fn s2_scale(num_pairs: usize, ell: usize) -> f64 {
    let (n, l) = (num_pairs as f64, ell as f64);
    n * (n - 1.0) / (l * (l - 1.0))
}

pub fn s3_scale(num_pairs: usize, ell: usize) -> f64 {
    let (n, l) = (num_pairs as f64, ell as f64);
    n * (n - 1.0) * (n - 2.0) / (l * (l - 1.0) * (l - 2.0))
}

fn check_range(batch: &ObservationBatch, range: &Range<usize>) -> Result<()> {
    if range.start >= range.end {
        return Err(Error::invalid("sample range is empty"));
    }
    if range.end > batch.len() {
        return Err(Error::invalid(format!(
            "sample range {range:?} exceeds batch of {}",
            batch.len()
        )));
    }
    Ok(())
}

fn check_transform(w: &DMatrix<f64>, num_pairs: usize) -> Result<()> {
    if w.nrows() != num_pairs {
        return Err(Error::invalid(format!(
            "whitening map has {} rows, expected {num_pairs}",
            w.nrows()
        )));
    }
    Ok(())
}

/// `N(N−1)/(ℓ(ℓ−1)) · (1/|range|) Σ_t x_t x_tᵀ` with the diagonal zeroed.
///
/// Products of `±1` outcomes are summed as integers, so the result does not
/// depend on sample order and is exactly symmetric.
pub fn empirical_s2(batch: &ObservationBatch, range: Range<usize>) -> Result<SecondMomentEstimate> {
    if batch.ell() < 2 {
        return Err(Error::invalid(format!(
            "second-moment scaling needs at least 2 pairs per observation, got {}",
            batch.ell()
        )));
    }
    check_range(batch, &range)?;
    let n = batch.num_pairs();
    let mut counts = vec![0i64; n * n];
    for obs in &batch.observations()[range.clone()] {
        let e = &obs.entries;
        for (p, &(k, sk)) in e.iter().enumerate() {
            for &(m, sm) in &e[p + 1..] {
                let v = (sk * sm) as i64;
                counts[k * n + m] += v;
                counts[m * n + k] += v;
            }
        }
    }
    let count = range.len();
    let factor = s2_scale(n, batch.ell()) / count as f64;
    let matrix = DMatrix::from_fn(n, n, |i, j| counts[i * n + j] as f64 * factor);
    Ok(SecondMomentEstimate {
        matrix,
        sample_count: count,
    })
}

/// The scaled average of the per-sample statistic
/// `Y^t = 𝒫_{Ω₃}(x_t ⊗ x_t ⊗ x_t)[W, W, W]`, expanded by inclusion–exclusion
/// over the coincident-index classes so that only `r × r × r` work is done per
/// sample.
pub fn projected_s3_statistic(
    batch: &ObservationBatch,
    range: Range<usize>,
    w: &DMatrix<f64>,
) -> Result<Tensor3> {
    if batch.ell() < 3 {
        return Err(Error::invalid(format!(
            "third-moment scaling needs at least 3 pairs per observation, got {}",
            batch.ell()
        )));
    }
    check_range(batch, &range)?;
    check_transform(w, batch.num_pairs())?;
    let mut acc = ProjectedCubeAccumulator::new(w.ncols());
    for obs in &batch.observations()[range.clone()] {
        acc.add(w, obs.entries.iter().map(|&(k, s)| (k, s as f64)), 1.0);
    }
    let mut out = acc.finish();
    out.scale(s3_scale(batch.num_pairs(), batch.ell()) / range.len() as f64);
    Ok(out)
}

/// Per-sample contraction of `𝒫_{Ω₃}(x ⊗ x ⊗ x)` by `W` on every mode.
pub fn projected_cube(x: impl Iterator<Item = (usize, f64)>, w: &DMatrix<f64>) -> Tensor3 {
    let mut acc = ProjectedCubeAccumulator::new(w.ncols());
    acc.add(w, x, 1.0);
    acc.finish()
}

/// Accumulates `Σ weight · [y⊗y⊗y − (C⊗y + two permutations) + 2D]` where,
/// for a vector `x`, `y = Wᵀx`, `C = Σ_i x_i² W_i W_iᵀ` and
/// `D = Σ_i x_i³ W_i⊗W_i⊗W_i`.
struct ProjectedCubeAccumulator {
    r: usize,
    sum: Tensor3,
    y: Vec<f64>,
    c: Vec<f64>,
    cube: Tensor3,
}

impl ProjectedCubeAccumulator {
    fn new(r: usize) -> Self {
        Self {
            r,
            sum: Tensor3::zeros(r),
            y: vec![0.0; r],
            c: vec![0.0; r * r],
            cube: Tensor3::zeros(r),
        }
    }

    fn add(&mut self, w: &DMatrix<f64>, x: impl Iterator<Item = (usize, f64)>, weight: f64) {
        let r = self.r;
        self.y.iter_mut().for_each(|v| *v = 0.0);
        self.c.iter_mut().for_each(|v| *v = 0.0);
        self.cube.as_mut_slice().iter_mut().for_each(|v| *v = 0.0);
        let mut row = vec![0.0; r];
        for (i, xi) in x {
            if xi == 0.0 {
                continue;
            }
            for a in 0..r {
                row[a] = w[(i, a)];
            }
            let x2 = xi * xi;
            for a in 0..r {
                self.y[a] += xi * row[a];
                for b in 0..r {
                    self.c[a * r + b] += x2 * row[a] * row[b];
                }
            }
            self.cube.add_cube(x2 * xi, &row);
        }
        let (y, c, cube) = (&self.y, &self.c, &self.cube);
        let out = self.sum.as_mut_slice();
        for a in 0..r {
            for b in 0..r {
                for cc in 0..r {
                    let v = y[a] * y[b] * y[cc]
                        - c[a * r + b] * y[cc]
                        - c[a * r + cc] * y[b]
                        - y[a] * c[b * r + cc]
                        + 2.0 * cube.get(a, b, cc);
                    out[(a * r + b) * r + cc] += weight * v;
                }
            }
        }
    }

    fn finish(self) -> Tensor3 {
        self.sum
    }
}

/// `μ(M) = √(N/r) · max_i ‖U_i‖` over the rows of the top-`r` eigenvectors.
pub fn incoherence(m: &DMatrix<f64>, r: usize) -> Result<Incoherence> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::invalid("incoherence needs a square matrix"));
    }
    if r == 0 || r > n {
        return Err(Error::invalid(format!("rank {r} must lie in [1, {n}]")));
    }
    let eig = top_eigenpairs_by_magnitude(m, r);
    Ok(incoherence_of_basis(
        &eig.vectors,
        &eig.values.iter().copied().collect::<Vec<_>>(),
    ))
}

/// Incoherence of an orthonormal basis `U` (`N × r`), flagging rank deficiency
/// from the accompanying eigenvalues.
pub fn incoherence_of_basis(u: &DMatrix<f64>, values: &[f64]) -> Incoherence {
    let (n, r) = (u.nrows(), u.ncols());
    let max_row = (0..n).map(|i| u.row(i).norm()).fold(0.0, f64::max);
    let top = values.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let rank_deficient = top == 0.0 || values.iter().any(|v| v.abs() <= 1e-10 * top);
    Incoherence {
        mu: (n as f64 / r as f64).sqrt() * max_row,
        rank_deficient,
    }
}

/// `E‖P_a‖²/N` for weights i.i.d. uniform on `[1, 2]`: `ln(3²⁰/2³⁶) + 3`.
pub fn uniform_12_p_norm_constant() -> f64 {
    (3486784401.0f64 / 68719476736.0).ln() + 3.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mnl_model::Observation;

    fn triangle_model() -> (MixedMnlModel, ComparisonGraph) {
        let g = ComparisonGraph::complete(3);
        let m = MixedMnlModel::new(
            vec![vec![1.0, 2.0, 3.0], vec![3.0, 2.0, 1.0]],
            vec![0.5, 0.5],
        )
        .unwrap();
        (m, g)
    }

    #[test]
    fn m2_rank_one_for_single_component() {
        let g = ComparisonGraph::complete(4);
        let m = MixedMnlModel::new(vec![vec![1.0, 2.0, 3.0, 5.0]], vec![1.0]).unwrap();
        let m2 = exact_m2(&m, &g).unwrap();
        let p = m.component_p_vector(0, &g).unwrap();
        assert!((&m2 - &p * p.transpose()).abs().max() < 1e-15);
        let sv = m2.singular_values();
        assert_eq!(sv.iter().filter(|&&s| s > 1e-12).count(), 1);
    }

    #[test]
    fn m2_zero_for_equal_weights() {
        let g = ComparisonGraph::complete(2);
        let m = MixedMnlModel::new(vec![vec![1.0, 1.0]], vec![1.0]).unwrap();
        let m2 = exact_m2(&m, &g).unwrap();
        assert_eq!(m2.shape(), (1, 1));
        assert_eq!(m2[(0, 0)], 0.0);
    }

    #[test]
    fn m2_entrywise_on_triangle() {
        let (m, g) = triangle_model();
        let m2 = exact_m2(&m, &g).unwrap();
        let w1 = [1.0 / 6.0, 2.0 / 6.0, 3.0 / 6.0];
        let w2 = [3.0 / 6.0, 2.0 / 6.0, 1.0 / 6.0];
        let pk = |w: &[f64; 3], (i, j): (usize, usize)| (w[j] - w[i]) / (w[j] + w[i]);
        for k in 0..3 {
            for l in 0..3 {
                let e = 0.5 * pk(&w1, g.edge(k)) * pk(&w1, g.edge(l))
                    + 0.5 * pk(&w2, g.edge(k)) * pk(&w2, g.edge(l));
                assert!((m2[(k, l)] - e).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn m3_diagonal_entries_and_cap() {
        let (m, g) = triangle_model();
        let m3 = exact_m3(&m, &g, DEFAULT_M3_CAP).unwrap();
        let p = m.p_matrix(&g).unwrap();
        for k in 0..3 {
            let e = 0.5 * p[(k, 0)].powi(3) + 0.5 * p[(k, 1)].powi(3);
            assert!((m3.get(k, k, k) - e).abs() < 1e-15);
        }
        assert!(matches!(exact_m3(&m, &g, 2), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn single_observation_s2() {
        let obs = Observation::new(vec![(1, 1), (3, -1), (4, 1)]).unwrap();
        let batch = ObservationBatch::new(6, 3, vec![obs]).unwrap();
        let s2 = empirical_s2(&batch, 0..1).unwrap();
        let c = 6.0 * 5.0 / (3.0 * 2.0);
        assert_eq!(s2.matrix[(1, 3)], -c);
        assert_eq!(s2.matrix[(3, 1)], -c);
        assert_eq!(s2.matrix[(1, 4)], c);
        assert_eq!(s2.matrix[(3, 4)], -c);
        assert_eq!(s2.matrix[(1, 1)], 0.0);
        assert_eq!(s2.matrix[(0, 2)], 0.0);
        assert!(empirical_s2(&batch, 0..0).is_err());
        assert!(empirical_s2(&batch, 0..2).is_err());
    }

    #[test]
    fn s2_needs_two_pairs() {
        let obs = Observation::new(vec![(0, 1)]).unwrap();
        let batch = ObservationBatch::new(3, 1, vec![obs]).unwrap();
        assert!(empirical_s2(&batch, 0..1).is_err());
    }

    #[test]
    fn s3_single_pair_is_fully_excluded() {
        let obs = Observation::new(vec![(0, 1), (1, -1), (2, 1)]).unwrap();
        let batch = ObservationBatch::new(5, 3, vec![obs]).unwrap();
        let mut w = DMatrix::zeros(5, 1);
        w[(0, 0)] = 1.0;
        let y = projected_s3_statistic(&batch, 0..1, &w).unwrap();
        assert_eq!(y.get(0, 0, 0), 0.0);
    }

    #[test]
    fn s3_needs_three_pairs() {
        let obs = Observation::new(vec![(0, 1), (1, 1)]).unwrap();
        let batch = ObservationBatch::new(3, 2, vec![obs]).unwrap();
        let w = DMatrix::identity(3, 1);
        assert!(projected_s3_statistic(&batch, 0..1, &w).is_err());
    }

    #[test]
    fn incoherence_extremes() {
        let n = 9;
        let mut spike = DMatrix::zeros(n, n);
        spike[(0, 0)] = 1.0;
        assert!((incoherence(&spike, 1).unwrap().mu - 3.0).abs() < 1e-12);
        let flat = DMatrix::from_element(n, n, 1.0);
        assert!((incoherence(&flat, 1).unwrap().mu - 1.0).abs() < 1e-12);
        assert!(incoherence(&spike, 2).unwrap().rank_deficient);
    }

    #[test]
    fn halves() {
        assert_eq!(split_halves(5), (0..3, 3..5));
        assert_eq!(split_halves(4), (0..2, 2..4));
        assert_eq!(split_halves(1), (0..1, 1..1));
    }

    #[test]
    fn p_norm_constant_value() {
        assert!((uniform_12_p_norm_constant() - 0.0189).abs() < 5e-5);
    }
}
