//! Completion of the unobserved diagonal of a low-rank symmetric matrix by
//! alternating least squares on the off-diagonal entries, followed by the
//! eigendecomposition that yields the whitening basis.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::top_eigenpairs_by_magnitude;
use crate::moments::{SecondMomentEstimate, WhiteningBasis};

/// Ridge added to a row's normal equations when they are singular.
pub const RIDGE: f64 = 1e-12;
/// Target accuracy used by [`default_iterations`].
pub const DEFAULT_TARGET: f64 = 1e-8;
/// Eigenvalues at or below this fraction of the largest magnitude count as zero.
pub const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Debug, Default, Serialize)]
pub struct ConvergenceReport {
    /// `‖𝒫_Ω(M̂ − Û_s U_{s−1}ᵀ)‖²_F` after each least-squares step.
    pub objective: Vec<f64>,
    /// `(step, row)` pairs whose normal equations needed the ridge.
    pub ridge_rows: Vec<(usize, usize)>,
}

/// `⌈log₂(2‖M‖_F / ε)⌉` with `ε = 1e-8`, at least 1.
pub fn default_iterations(m: &DMatrix<f64>) -> usize {
    let f = m.norm();
    if f <= 0.0 {
        return 1;
    }
    ((2.0 * f / DEFAULT_TARGET).log2().ceil() as usize).max(1)
}

/// Runs [`alt_min`] on a scaled empirical second moment.
pub fn matrix_alt_min(
    offdiag: &SecondMomentEstimate,
    r: usize,
    iterations: usize,
) -> Result<(DMatrix<f64>, ConvergenceReport)> {
    alt_min(&offdiag.matrix, r, iterations)
}

/// Fits `M ≈ Û Uᵀ` on the off-diagonal entries of the symmetric matrix `m`
/// (its diagonal is ignored) and returns the completed `Û_T U_{T−1}ᵀ`.
///
/// `U₀` spans the `r` eigenvectors of largest magnitude. Step `s` solves, row
/// by row, `Û_s = argmin_X ‖𝒫_Ω(M − X U_{s−1}ᵀ)‖_F` and sets `U_s = qr(Û_s)`.
/// Because `M` and the mask are symmetric, the objective never increases.
pub fn alt_min(
    m: &DMatrix<f64>,
    r: usize,
    iterations: usize,
) -> Result<(DMatrix<f64>, ConvergenceReport)> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::invalid("matrix completion needs a square matrix"));
    }
    if r == 0 || r >= n {
        return Err(Error::invalid(format!("rank {r} must lie in [1, {n})")));
    }
    if iterations == 0 {
        return Err(Error::invalid(
            "matrix completion needs at least one iteration",
        ));
    }
    let mut offdiag = m.clone();
    offdiag.fill_diagonal(0.0);

    let mut u = top_eigenpairs_by_magnitude(&offdiag, r).vectors;
    let mut report = ConvergenceReport::default();
    let mut u_hat = DMatrix::zeros(n, r);
    for step in 1..=iterations {
        u_hat = least_squares_step(&offdiag, &u, step, &mut report.ridge_rows);
        report
            .objective
            .push(offdiag_residual(&offdiag, &u_hat, &u));
        if step < iterations {
            u = u_hat.clone().qr().q();
        }
    }
    Ok((&u_hat * u.transpose(), report))
}

/// Row `i` solves `(UᵀU − U_iU_iᵀ) x = Σ_{j≠i} M_ij U_j`.
fn least_squares_step(
    offdiag: &DMatrix<f64>,
    u: &DMatrix<f64>,
    step: usize,
    ridge_rows: &mut Vec<(usize, usize)>,
) -> DMatrix<f64> {
    let (n, r) = (u.nrows(), u.ncols());
    let gram = u.transpose() * u;
    let rhs = offdiag * u;
    let mut out = DMatrix::zeros(n, r);
    for i in 0..n {
        let ui: DVector<f64> = u.row(i).transpose();
        let mut a = &gram - &ui * ui.transpose();
        let b: DVector<f64> = rhs.row(i).transpose();
        let singular = 1.0 - ui.norm_squared() <= RIDGE || a.clone().cholesky().is_none();
        if singular {
            for d in 0..r {
                a[(d, d)] += RIDGE;
            }
            ridge_rows.push((step, i));
        }
        let x = match a.clone().cholesky() {
            Some(ch) => ch.solve(&b),
            None => a.lu().solve(&b).unwrap_or_else(|| DVector::zeros(r)),
        };
        out.row_mut(i).copy_from(&x.transpose());
    }
    out
}

fn offdiag_residual(offdiag: &DMatrix<f64>, x: &DMatrix<f64>, u: &DMatrix<f64>) -> f64 {
    let fit = x * u.transpose();
    let mut s = 0.0;
    for j in 0..offdiag.ncols() {
        for i in 0..offdiag.nrows() {
            if i != j {
                let d = offdiag[(i, j)] - fit[(i, j)];
                s += d * d;
            }
        }
    }
    s
}

/// Top-`r` positive eigenpairs of `(M + Mᵀ)/2`, descending.
///
/// Fails with the observed spectrum when fewer than `r` eigenvalues exceed
/// [`RANK_TOLERANCE`] times the largest magnitude.
pub fn symmetrize_and_eig(m: &DMatrix<f64>, r: usize) -> Result<WhiteningBasis> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::invalid("eigendecomposition needs a square matrix"));
    }
    if r == 0 || r > n {
        return Err(Error::invalid(format!("rank {r} must lie in [1, {n}]")));
    }
    let sym = (m + m.transpose()) * 0.5;
    let eig = top_eigenpairs_by_magnitude(&sym, (2 * r + 4).min(n));
    let scale = eig.values.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let mut positive: Vec<usize> = (0..eig.values.len())
        .filter(|&j| eig.values[j] > RANK_TOLERANCE * scale && scale > 0.0)
        .collect();
    positive.sort_by(|&a, &b| eig.values[b].total_cmp(&eig.values[a]));
    if positive.len() < r {
        return Err(Error::RankDeficient {
            needed: r,
            spectrum: eig.values.iter().copied().collect(),
        });
    }
    positive.truncate(r);
    let u = DMatrix::from_columns(
        &positive
            .iter()
            .map(|&j| eig.vectors.column(j).into_owned())
            .collect::<Vec<_>>(),
    );
    Ok(WhiteningBasis {
        u,
        sigma: positive.iter().map(|&j| eig.values[j]).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_one_diagonal_recovered() {
        let v = DVector::from_element(4, 0.5);
        let mut m = &v * v.transpose();
        m.fill_diagonal(0.0);
        let (out, report) = alt_min(&m, 1, 30).unwrap();
        for i in 0..4 {
            assert!((out[(i, i)] - 0.25).abs() < 1e-6, "{}", out[(i, i)]);
        }
        assert_eq!(report.objective.len(), 30);
    }

    #[test]
    fn zero_iterations_rejected() {
        let m = DMatrix::from_element(3, 3, 1.0);
        assert!(alt_min(&m, 1, 0).is_err());
    }

    #[test]
    fn eig_of_psd_rank_two() {
        let a = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 1.0, 1.0, 0.0, 1.0, 1.0, -1.0]);
        let m = &a * a.transpose();
        let basis = symmetrize_and_eig(&m, 2).unwrap();
        let rebuilt = &basis.u
            * DMatrix::from_diagonal(&DVector::from_vec(basis.sigma.clone()))
            * basis.u.transpose();
        assert!((rebuilt - &m).abs().max() < 1e-12);
        assert!(basis.sigma[0] >= basis.sigma[1]);
    }

    #[test]
    fn too_few_positive_eigenvalues() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, -1.0, 0.0]));
        assert!(matches!(
            symmetrize_and_eig(&m, 2),
            Err(Error::RankDeficient { needed: 2, .. })
        ));
    }

    #[test]
    fn default_iterations_formula() {
        let m = DMatrix::from_element(2, 2, 0.5);
        // ‖M‖_F = 1
        assert_eq!(default_iterations(&m), (2e8f64).log2().ceil() as usize);
    }
}
