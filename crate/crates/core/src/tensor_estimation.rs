//! Estimation of the whitened third moment by least squares on the
//! off-diagonal index set, and its orthogonal decomposition by the tensor
//! power method with deflation.

use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::Tensor3;
use crate::mnl_model::ObservationBatch;
use crate::moments::{projected_s3_statistic, WhiteningBasis};

/// Systems with a larger condition number are solved by pseudo-inverse.
pub const MAX_CONDITION: f64 = 1e12;
/// Candidates with `|λ|` below this are treated as zero.
pub const DEGENERATE_THRESHOLD: f64 = 1e-12;
pub const DEFAULT_POWER_ITERS: usize = 50;
const EARLY_EXIT: f64 = 1e-12;

/// The symmetric `r × r × r` tensor `H̃` to be decomposed.
pub type WhitenedTensor = Tensor3;

#[derive(Clone, Debug)]
pub struct TensorLsOutput {
    pub tensor: WhitenedTensor,
    /// Ratio of extreme singular values of the materialized operator.
    pub condition_number: f64,
    /// Set when the condition number exceeded [`MAX_CONDITION`].
    pub pseudo_inverse: bool,
}

/// Orthogonal eigenpairs `(λ_a, v_a)` with `λ_a > 0`, sorted by descending `λ`.
#[derive(Clone, Debug, Serialize)]
pub struct TensorEigenpairs {
    pub values: Vec<f64>,
    /// One unit vector per entry of `values`.
    pub vectors: Vec<Vec<f64>>,
}

impl TensorEigenpairs {
    /// `r × r` matrix with the eigenvectors as columns.
    pub fn vector_matrix(&self) -> DMatrix<f64> {
        let r = self.vectors.first().map_or(0, Vec::len);
        DMatrix::from_fn(r, self.vectors.len(), |i, a| self.vectors[a][i])
    }
}

/// `⌈20 r ln(r + 1)⌉` random restarts per deflation round.
pub fn default_restarts(r: usize) -> usize {
    (20.0 * r as f64 * ((r + 1) as f64).ln()).ceil().max(1.0) as usize
}

/// Least-squares estimate of the whitened tensor from the samples in `range`.
///
/// The right-hand side is the scaled projected third-moment statistic. The
/// operator maps `Z` to `𝒫_{Ω₃}(Z[B, B, B])[Q̂, Q̂, Q̂]` with `B = U Σ^{1/2}` and
/// `Q̂ = U Σ^{-1/2}`; it is materialized column by column through
/// inclusion–exclusion over coincident indices, so nothing of size `N³` is
/// formed.
pub fn tensor_ls(
    batch: &ObservationBatch,
    range: Range<usize>,
    basis: &WhiteningBasis,
) -> Result<TensorLsOutput> {
    let q = basis.whitening();
    let rhs = projected_s3_statistic(batch, range, &q)?;
    tensor_ls_from_rhs(&rhs, basis)
}

/// Solves for `Z` given an already computed right-hand side.
pub fn tensor_ls_from_rhs(rhs: &Tensor3, basis: &WhiteningBasis) -> Result<TensorLsOutput> {
    let r = basis.rank();
    if rhs.dim() != r {
        return Err(Error::invalid(format!(
            "right-hand side has dimension {}, basis has rank {r}",
            rhs.dim()
        )));
    }
    let op = projected_operator(&basis.unwhitening(), &basis.whitening());
    let b = DVector::from_column_slice(rhs.as_slice());
    let svd = op.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let condition_number = if smin > 0.0 {
        smax / smin
    } else {
        f64::INFINITY
    };
    let pseudo_inverse = condition_number.is_nan() || condition_number > MAX_CONDITION;
    let z = if pseudo_inverse {
        svd.solve(&b, smax * f64::EPSILON * (r * r * r) as f64)
            .map_err(Error::invalid)?
    } else {
        let qr = op.qr();
        let y = qr.q().transpose() * &b;
        qr.r()
            .solve_upper_triangular(&y)
            .ok_or_else(|| Error::invalid("triangular solve failed"))?
    };
    let tensor = Tensor3::from_fn(r, |a, bb, c| z[(a * r + bb) * r + c]).symmetrized();
    Ok(TensorLsOutput {
        tensor,
        condition_number,
        pseudo_inverse,
    })
}

/// The `r³ × r³` matrix with rows indexed by `(d, e, f)` and columns by
/// `(a, b, c)`:
///
/// `K_ad K_be K_cf − F_{ab,de} K_cf − K_ad F_{bc,ef} − F_{ac,df} K_be
///  + 2 Σ_i B_ia B_ib B_ic Q_id Q_ie Q_if`
///
/// where `K = BᵀQ` and `F_{ab,de} = Σ_i B_ia B_ib Q_id Q_ie`.
pub fn projected_operator(b: &DMatrix<f64>, q: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, r) = (b.nrows(), b.ncols());
    let k = b.transpose() * q;
    let pairs =
        |m: &DMatrix<f64>| DMatrix::from_fn(n, r * r, |i, ab| m[(i, ab / r)] * m[(i, ab % r)]);
    let cubes = |m: &DMatrix<f64>| {
        DMatrix::from_fn(n, r * r * r, |i, abc| {
            m[(i, abc / (r * r))] * m[(i, (abc / r) % r)] * m[(i, abc % r)]
        })
    };
    // f[(ab, de)]
    let f = pairs(b).transpose() * pairs(q);
    // diag[(def, abc)]
    let diag = cubes(q).transpose() * cubes(b);
    let r3 = r * r * r;
    let idx = |x: usize, y: usize| x * r + y;
    DMatrix::from_fn(r3, r3, |row, col| {
        let (d, e, ff) = (row / (r * r), (row / r) % r, row % r);
        let (a, bb, c) = (col / (r * r), (col / r) % r, col % r);
        k[(a, d)] * k[(bb, e)] * k[(c, ff)]
            - f[(idx(a, bb), idx(d, e))] * k[(c, ff)]
            - k[(a, d)] * f[(idx(bb, c), idx(e, ff))]
            - f[(idx(a, c), idx(d, ff))] * k[(bb, e)]
            + 2.0 * diag[(row, col)]
    })
}

/// `v_a = Σ_{b,c} T_abc u_b u_c`.
pub fn apply_tensor(t: &Tensor3, u: &[f64]) -> Result<Vec<f64>> {
    let r = t.dim();
    if u.len() != r {
        return Err(Error::invalid(format!(
            "vector of length {} applied to a tensor of dimension {r}",
            u.len()
        )));
    }
    if u.iter().all(|&x| x == 0.0) {
        return Err(Error::invalid("cannot apply a tensor to the zero vector"));
    }
    Ok(contract2(t, u))
}

fn contract2(t: &Tensor3, u: &[f64]) -> Vec<f64> {
    let r = t.dim();
    let s = t.as_slice();
    (0..r)
        .map(|a| {
            let mut acc = 0.0;
            for b in 0..r {
                let row = &s[(a * r + b) * r..(a * r + b + 1) * r];
                let inner: f64 = row.iter().zip(u).map(|(x, y)| x * y).sum();
                acc += u[b] * inner;
            }
            acc
        })
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = dot(v, v).sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

/// Robust tensor power method: `r` deflation rounds, each keeping the
/// best of `restarts` random starts powered up to `iters` times.
pub fn rtpm<R: Rng + ?Sized>(
    t: &WhitenedTensor,
    r: usize,
    restarts: usize,
    iters: usize,
    rng: &mut R,
) -> Result<TensorEigenpairs> {
    let dim = t.dim();
    if r == 0 || r > dim {
        return Err(Error::invalid(format!(
            "cannot extract {r} pairs from dimension {dim}"
        )));
    }
    if restarts == 0 || iters == 0 {
        return Err(Error::invalid("restarts and iterations must be positive"));
    }
    let mut work = t.clone();
    let mut pairs: Vec<(f64, Vec<f64>)> = Vec::with_capacity(r);
    for _ in 0..r {
        let mut best: Option<(f64, Vec<f64>)> = None;
        for _ in 0..restarts {
            let mut u: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
            if normalize(&mut u) == 0.0 {
                continue;
            }
            for _ in 0..iters {
                let mut v = contract2(&work, &u);
                if normalize(&mut v) == 0.0 {
                    break;
                }
                let same: f64 = v.iter().zip(&u).map(|(x, y)| (x - y).powi(2)).sum();
                let flip: f64 = v.iter().zip(&u).map(|(x, y)| (x + y).powi(2)).sum();
                u = v;
                if same.min(flip).sqrt() < EARLY_EXIT {
                    break;
                }
            }
            let lambda = dot(&contract2(&work, &u), &u);
            if best.as_ref().is_none_or(|(l, _)| lambda.abs() > l.abs()) {
                best = Some((lambda, u));
            }
        }
        let (mut lambda, mut u) = best.ok_or(Error::DegenerateTensor {
            threshold: DEGENERATE_THRESHOLD,
        })?;
        if lambda.is_nan() || lambda.abs() < DEGENERATE_THRESHOLD {
            return Err(Error::DegenerateTensor {
                threshold: DEGENERATE_THRESHOLD,
            });
        }
        if lambda < 0.0 {
            lambda = -lambda;
            u.iter_mut().for_each(|x| *x = -*x);
        }
        work.add_cube(-lambda, &u);
        pairs.push((lambda, u));
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    Ok(TensorEigenpairs {
        values: pairs.iter().map(|p| p.0).collect(),
        vectors: pairs.into_iter().map(|p| p.1).collect(),
    })
}
