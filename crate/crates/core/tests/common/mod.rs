#![allow(dead_code)]

use mixmnl::pipeline::brute_force_assignment;
use mixmnl::{ComparisonGraph, MixedMnlModel};
use nalgebra::DMatrix;
use rand::Rng;

/// Weights uniform on `[lo, hi]`, mixture probabilities uniform on `[1, 2]`
/// before normalization.
pub fn random_model<R: Rng>(n: usize, r: usize, lo: f64, hi: f64, rng: &mut R) -> MixedMnlModel {
    let weights = (0..r)
        .map(|_| (0..n).map(|_| rng.gen_range(lo..hi)).collect())
        .collect();
    let q = (0..r).map(|_| rng.gen_range(1.0..2.0)).collect();
    MixedMnlModel::new(weights, q).unwrap()
}

/// Largest error in `q` and in the columns of `P` after the best matching.
pub fn matched_moment_error(
    q_hat: &[f64],
    p_hat: &DMatrix<f64>,
    model: &MixedMnlModel,
    g: &ComparisonGraph,
) -> (f64, f64) {
    let p = model.p_matrix(g).unwrap();
    let r = model.r();
    let q_err = DMatrix::from_fn(r, r, |a, b| (q_hat[b] - model.q()[a]).abs());
    let p_err = DMatrix::from_fn(r, r, |a, b| (p_hat.column(b) - p.column(a)).amax());
    let perm = brute_force_assignment(&(&q_err + &p_err));
    let qe = (0..r).map(|a| q_err[(a, perm[a])]).fold(0.0, f64::max);
    let pe = (0..r).map(|a| p_err[(a, perm[a])]).fold(0.0, f64::max);
    (qe, pe)
}

/// `Σ_{i,j,k distinct} x_i x_j x_k W_ia W_jb W_kc` by explicit triple loop.
pub fn brute_projected_cube(x: &[f64], w: &DMatrix<f64>) -> Vec<f64> {
    let (n, r) = (w.nrows(), w.ncols());
    let mut out = vec![0.0; r * r * r];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                if i == j || j == k || i == k {
                    continue;
                }
                let v = x[i] * x[j] * x[k];
                if v == 0.0 {
                    continue;
                }
                for a in 0..r {
                    for b in 0..r {
                        for c in 0..r {
                            out[(a * r + b) * r + c] += v * w[(i, a)] * w[(j, b)] * w[(k, c)];
                        }
                    }
                }
            }
        }
    }
    out
}

/// A random symmetric tensor `Σ λ_a v_a⊗³` with orthonormal `v_a` in `R^dim`.
pub fn orthogonal_tensor<R: Rng>(
    dim: usize,
    lambdas: &[f64],
    rng: &mut R,
) -> (mixmnl::Tensor3, DMatrix<f64>) {
    let g = DMatrix::from_fn(dim, dim, |_, _| rng.gen_range(-1.0..1.0));
    let v = g.qr().q();
    let mut t = mixmnl::Tensor3::zeros(dim);
    for (a, &l) in lambdas.iter().enumerate() {
        t.add_cube(l, v.column(a).as_slice());
    }
    (t, v)
}
