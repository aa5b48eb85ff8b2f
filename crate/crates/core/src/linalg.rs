//! Dense linear-algebra helpers shared by the estimation stages: a cubic
//! tensor type, multilinear transforms, and top-k symmetric eigensolvers.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

/// Matrices at or below this order are always eigendecomposed densely.
const DENSE_EIGEN_LIMIT: usize = 400;
const SUBSPACE_MAX_ITERS: usize = 500;
const SUBSPACE_TOL: f64 = 1e-11;

/// A dense `d × d × d` array, stored row-major (`(a, b, c)` at `a·d² + b·d + c`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tensor3 {
    dim: usize,
    data: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * dim * dim],
        }
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut t = Self::zeros(dim);
        for a in 0..dim {
            for b in 0..dim {
                for c in 0..dim {
                    t.data[(a * dim + b) * dim + c] = f(a, b, c);
                }
            }
        }
        t
    }

    /// `Σ_k weights[k] · (v_k ⊗ v_k ⊗ v_k)` for the columns `v_k` of `vectors`.
    pub fn symmetric_sum(weights: &[f64], vectors: &DMatrix<f64>) -> Self {
        let d = vectors.nrows();
        let mut t = Self::zeros(d);
        for (k, &w) in weights.iter().enumerate() {
            t.add_cube(w, vectors.column(k).as_slice());
        }
        t
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize, c: usize) -> f64 {
        self.data[(a * self.dim + b) * self.dim + c]
    }

    #[inline]
    pub fn set(&mut self, a: usize, b: usize, c: usize, v: f64) {
        self.data[(a * self.dim + b) * self.dim + c] = v;
    }

    /// `self += w · (v ⊗ v ⊗ v)`.
    pub fn add_cube(&mut self, w: f64, v: &[f64]) {
        let d = self.dim;
        for a in 0..d {
            let wa = w * v[a];
            for b in 0..d {
                let wab = wa * v[b];
                let row = &mut self.data[(a * d + b) * d..(a * d + b + 1) * d];
                for (x, &vc) in row.iter_mut().zip(v) {
                    *x += wab * vc;
                }
            }
        }
    }

    pub fn scale(&mut self, s: f64) {
        self.data.iter_mut().for_each(|x| *x *= s);
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &Tensor3) -> f64 {
        assert_eq!(self.dim, other.dim);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Average over the six index permutations.
    pub fn symmetrized(&self) -> Tensor3 {
        Tensor3::from_fn(self.dim, |a, b, c| {
            (self.get(a, b, c)
                + self.get(a, c, b)
                + self.get(b, a, c)
                + self.get(b, c, a)
                + self.get(c, a, b)
                + self.get(c, b, a))
                / 6.0
        })
    }

    /// `T[W, W, W]_{abc} = Σ_{ijk} T_{ijk} W_{ia} W_{jb} W_{kc}`, one mode at a time.
    pub fn multilinear(&self, w: &DMatrix<f64>) -> Tensor3 {
        let d = self.dim;
        assert_eq!(w.nrows(), d, "transform rows must match tensor dimension");
        let r = w.ncols();
        // mode 3: d×d×r
        let mut t1 = vec![0.0; d * d * r];
        for ij in 0..d * d {
            let src = &self.data[ij * d..(ij + 1) * d];
            for c in 0..r {
                let col = w.column(c);
                t1[ij * r + c] = src.iter().zip(col.iter()).map(|(x, y)| x * y).sum();
            }
        }
        // mode 2: d×r×r
        let mut t2 = vec![0.0; d * r * r];
        for i in 0..d {
            for j in 0..d {
                for b in 0..r {
                    let wjb = w[(j, b)];
                    if wjb == 0.0 {
                        continue;
                    }
                    for c in 0..r {
                        t2[(i * r + b) * r + c] += wjb * t1[(i * d + j) * r + c];
                    }
                }
            }
        }
        // mode 1: r×r×r
        let mut out = Tensor3::zeros(r);
        for i in 0..d {
            for a in 0..r {
                let wia = w[(i, a)];
                if wia == 0.0 {
                    continue;
                }
                for bc in 0..r * r {
                    out.data[a * r * r + bc] += wia * t2[i * r * r + bc];
                }
            }
        }
        out
    }
}

/// Eigenpairs of a symmetric matrix; `vectors` holds one eigenvector per column.
#[derive(Clone, Debug)]
pub struct Eigenpairs {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

impl Eigenpairs {
    fn select(values: &[f64], vectors: &DMatrix<f64>, order: &[usize]) -> Self {
        let vals = DVector::from_iterator(order.len(), order.iter().map(|&i| values[i]));
        let vecs = DMatrix::from_columns(
            &order
                .iter()
                .map(|&i| vectors.column(i).into_owned())
                .collect::<Vec<_>>(),
        );
        Eigenpairs {
            values: vals,
            vectors: vecs,
        }
    }
}

/// Full symmetric eigendecomposition sorted by descending (signed) eigenvalue.
pub fn symmetric_eigen_desc(m: &DMatrix<f64>) -> Eigenpairs {
    let eig = SymmetricEigen::new(m.clone());
    let vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]));
    Eigenpairs::select(&vals, &eig.eigenvectors, &order)
}

/// The `k` eigenpairs of largest magnitude, sorted by descending `|λ|`.
///
/// Small matrices go through a dense solve. Larger ones use block subspace
/// iteration with Rayleigh–Ritz extraction, falling back to the dense solve if
/// the Ritz residuals do not settle.
pub fn top_eigenpairs_by_magnitude(m: &DMatrix<f64>, k: usize) -> Eigenpairs {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "matrix must be square");
    let k = k.min(n);
    if n <= DENSE_EIGEN_LIMIT || 4 * k >= n {
        return dense_top_by_magnitude(m, k);
    }
    subspace_iteration(m, k).unwrap_or_else(|| dense_top_by_magnitude(m, k))
}

fn dense_top_by_magnitude(m: &DMatrix<f64>, k: usize) -> Eigenpairs {
    let eig = SymmetricEigen::new(m.clone());
    let vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&a, &b| vals[b].abs().total_cmp(&vals[a].abs()));
    order.truncate(k);
    Eigenpairs::select(&vals, &eig.eigenvectors, &order)
}

fn subspace_iteration(m: &DMatrix<f64>, k: usize) -> Option<Eigenpairs> {
    let n = m.nrows();
    let block = (2 * k + 8).min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_e16e);
    let start = DMatrix::from_fn(n, block, |_, _| StandardNormal.sample(&mut rng));
    let mut x = start.qr().q();
    for _ in 0..SUBSPACE_MAX_ITERS {
        let y = m * &x;
        let mut t = x.transpose() * &y;
        t = (&t + t.transpose()) * 0.5;
        let eig = SymmetricEigen::new(t);
        let vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        let mut order: Vec<usize> = (0..vals.len()).collect();
        order.sort_by(|&a, &b| vals[b].abs().total_cmp(&vals[a].abs()));
        let scale = vals[order[0]].abs().max(f64::MIN_POSITIVE);
        let converged = order[..k].iter().all(|&j| {
            let w = eig.eigenvectors.column(j);
            let resid = &y * w - (&x * w) * vals[j];
            resid.norm() <= SUBSPACE_TOL * scale
        });
        if converged {
            let ritz = &x * &eig.eigenvectors;
            order.truncate(k);
            return Some(Eigenpairs::select(&vals, &ritz, &order));
        }
        x = y.qr().q();
    }
    None
}

/// Largest singular value.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().max()
}

/// Orthonormal basis of the column space via thin QR.
pub fn orthonormalize(m: &DMatrix<f64>) -> DMatrix<f64> {
    m.clone().qr().q()
}
