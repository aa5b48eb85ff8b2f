//! Mixed MNL ground truth and pairwise-comparison sampling.
//!
//! Sign convention: an outcome of `+1` on pair `k = (i, j)` means the second
//! endpoint `j` was preferred. Under component `a` its expectation is
//! `P_ka = (w_j − w_i) / (w_j + w_i)`.

use nalgebra::{DMatrix, DVector};
use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::comparison_graph::ComparisonGraph;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct MixedMnlModel {
    weights: Vec<Vec<f64>>,
    q: Vec<f64>,
}

/// Wire form: `{"q": [..], "weights": [[..], ..]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub q: Vec<f64>,
    pub weights: Vec<Vec<f64>>,
}

impl MixedMnlModel {
    /// Validates and normalizes: each weight vector and `q` are rescaled to sum to 1.
    pub fn new(weights: Vec<Vec<f64>>, q: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::invalid("a model needs at least one component"));
        }
        if weights.len() != q.len() {
            return Err(Error::invalid(format!(
                "{} weight vectors but {} mixture probabilities",
                weights.len(),
                q.len()
            )));
        }
        let n = weights[0].len();
        if n < 2 {
            return Err(Error::invalid("a model needs at least two items"));
        }
        for (a, w) in weights.iter().enumerate() {
            if w.len() != n {
                return Err(Error::invalid(format!(
                    "component {a} has {} weights, expected {n}",
                    w.len()
                )));
            }
            if let Some(i) = w.iter().position(|&x| !(x > 0.0 && x.is_finite())) {
                return Err(Error::invalid(format!(
                    "weight {i} of component {a} is {} (must be positive)",
                    w[i]
                )));
            }
        }
        if let Some(a) = q.iter().position(|&x| !(x > 0.0 && x.is_finite())) {
            return Err(Error::invalid(format!(
                "mixture probability {a} is {} (must be positive)",
                q[a]
            )));
        }
        let weights = weights.into_iter().map(normalized).collect();
        Ok(Self {
            weights,
            q: normalized(q),
        })
    }

    /// The illustration family: weights drawn uniformly from `[lo, hi]` per
    /// component and item, uniform mixture.
    pub fn random_uniform<R: Rng + ?Sized>(
        n: usize,
        r: usize,
        lo: f64,
        hi: f64,
        rng: &mut R,
    ) -> Result<Self> {
        if !(lo > 0.0 && hi >= lo) {
            return Err(Error::invalid(format!(
                "weight range [{lo}, {hi}] is invalid"
            )));
        }
        let weights = (0..r)
            .map(|_| (0..n).map(|_| rng.gen_range(lo..=hi)).collect())
            .collect();
        Self::new(weights, vec![1.0; r])
    }

    pub fn n(&self) -> usize {
        self.weights[0].len()
    }

    pub fn r(&self) -> usize {
        self.q.len()
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn weights(&self, a: usize) -> &[f64] {
        &self.weights[a]
    }

    pub fn all_weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn q_max(&self) -> f64 {
        self.q.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn q_min(&self) -> f64 {
        self.q.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Dynamic range `b = max_a max_{i,j} w_i / w_j`.
    pub fn dynamic_range(&self) -> f64 {
        self.weights
            .iter()
            .map(|w| {
                let hi = w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let lo = w.iter().copied().fold(f64::INFINITY, f64::min);
                hi / lo
            })
            .fold(1.0, f64::max)
    }

    /// Probability that item `i` beats item `j` under component `a`.
    pub fn pairwise_win_prob(&self, a: usize, i: usize, j: usize) -> Result<f64> {
        self.check_component(a)?;
        let n = self.n();
        if i >= n || j >= n {
            return Err(Error::InvalidPair {
                i,
                j,
                n,
                reason: "item index out of range",
            });
        }
        if i == j {
            return Err(Error::InvalidPair {
                i,
                j,
                n,
                reason: "an item cannot be compared with itself",
            });
        }
        let w = &self.weights[a];
        Ok(w[i] / (w[i] + w[j]))
    }

    /// Expected outcome of the oriented pair `(i, j)` under component `a`.
    #[inline]
    pub fn pair_expectation(&self, a: usize, i: usize, j: usize) -> f64 {
        let w = &self.weights[a];
        (w[j] - w[i]) / (w[j] + w[i])
    }

    /// Column `P_a`: entry `k` is the expected outcome of pair `k`.
    pub fn component_p_vector(&self, a: usize, g: &ComparisonGraph) -> Result<DVector<f64>> {
        self.check_component(a)?;
        self.check_graph(g)?;
        Ok(DVector::from_iterator(
            g.num_pairs(),
            g.edges()
                .iter()
                .map(|&(i, j)| self.pair_expectation(a, i, j)),
        ))
    }

    /// The `N × r` matrix `P = [P_1 … P_r]`.
    pub fn p_matrix(&self, g: &ComparisonGraph) -> Result<DMatrix<f64>> {
        self.check_graph(g)?;
        let cols = (0..self.r())
            .map(|a| self.component_p_vector(a, g))
            .collect::<Result<Vec<_>>>()?;
        Ok(DMatrix::from_columns(&cols))
    }

    pub fn sample_observation<R: Rng + ?Sized>(
        &self,
        g: &ComparisonGraph,
        ell: usize,
        rng: &mut R,
    ) -> Result<Observation> {
        self.check_graph(g)?;
        check_ell(ell, g.num_pairs())?;
        let chooser = WeightedIndex::new(&self.q).expect("q validated at construction");
        Ok(self.draw(g, ell, &chooser, rng))
    }

    pub fn sample_batch<R: Rng + ?Sized>(
        &self,
        g: &ComparisonGraph,
        ell: usize,
        count: usize,
        rng: &mut R,
    ) -> Result<ObservationBatch> {
        self.check_graph(g)?;
        check_ell(ell, g.num_pairs())?;
        let chooser = WeightedIndex::new(&self.q).expect("q validated at construction");
        let observations = (0..count)
            .map(|_| self.draw(g, ell, &chooser, rng))
            .collect();
        Ok(ObservationBatch {
            num_pairs: g.num_pairs(),
            ell,
            observations,
        })
    }

    fn draw<R: Rng + ?Sized>(
        &self,
        g: &ComparisonGraph,
        ell: usize,
        chooser: &WeightedIndex<f64>,
        rng: &mut R,
    ) -> Observation {
        let a = chooser.sample(rng);
        let w = &self.weights[a];
        let mut pairs = rand::seq::index::sample(rng, g.num_pairs(), ell).into_vec();
        pairs.sort_unstable();
        let entries = pairs
            .into_iter()
            .map(|k| {
                let (i, j) = g.edge(k);
                let second_wins = w[j] / (w[i] + w[j]);
                let s = if rng.gen::<f64>() < second_wins {
                    1
                } else {
                    -1
                };
                (k, s)
            })
            .collect();
        Observation { entries }
    }

    fn check_component(&self, a: usize) -> Result<()> {
        if a >= self.r() {
            return Err(Error::invalid(format!(
                "component {a} out of range (r = {})",
                self.r()
            )));
        }
        Ok(())
    }

    fn check_graph(&self, g: &ComparisonGraph) -> Result<()> {
        if g.n() != self.n() {
            return Err(Error::invalid(format!(
                "model has {} items but graph has {} vertices",
                self.n(),
                g.n()
            )));
        }
        Ok(())
    }

    pub fn to_spec(&self) -> ModelSpec {
        ModelSpec {
            q: self.q.clone(),
            weights: self.weights.clone(),
        }
    }

    pub fn from_spec(spec: &ModelSpec) -> Result<Self> {
        Self::new(spec.weights.clone(), spec.q.clone())
    }
}

// Vectors already on the simplex are kept bit-for-bit so that loading a
// saved model reproduces the same file.
fn normalized(v: Vec<f64>) -> Vec<f64> {
    let s: f64 = v.iter().sum();
    if (s - 1.0).abs() <= 4.0 * f64::EPSILON * v.len() as f64 {
        return v;
    }
    v.into_iter().map(|x| x / s).collect()
}

fn check_ell(ell: usize, num_pairs: usize) -> Result<()> {
    if ell == 0 || ell > num_pairs {
        return Err(Error::invalid(format!(
            "pairs per observation must lie in [1, {num_pairs}], got {ell}"
        )));
    }
    Ok(())
}

/// One sparse observation: `(pair index, ±1)` for each of its `ℓ` pairs,
/// strictly increasing in pair index. Unlisted pairs are zero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Observation {
    pub entries: Vec<(usize, i8)>,
}

impl Observation {
    pub fn new(entries: Vec<(usize, i8)>) -> Result<Self> {
        if entries.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::invalid(
                "observation pair indices must be strictly increasing",
            ));
        }
        if let Some(&(k, s)) = entries.iter().find(|e| e.1 != 1 && e.1 != -1) {
            return Err(Error::invalid(format!("outcome {s} on pair {k} is not ±1")));
        }
        Ok(Self { entries })
    }

    pub fn to_dense(&self, num_pairs: usize) -> DVector<f64> {
        let mut x = DVector::zeros(num_pairs);
        for &(k, s) in &self.entries {
            x[k] = s as f64;
        }
        x
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ObservationBatch {
    num_pairs: usize,
    ell: usize,
    observations: Vec<Observation>,
}

impl ObservationBatch {
    pub fn new(num_pairs: usize, ell: usize, observations: Vec<Observation>) -> Result<Self> {
        check_ell(ell, num_pairs)?;
        for (t, obs) in observations.iter().enumerate() {
            if obs.entries.len() != ell {
                return Err(Error::invalid(format!(
                    "observation {t} has {} pairs, expected {ell}",
                    obs.entries.len()
                )));
            }
            if let Some(&(k, _)) = obs.entries.iter().find(|e| e.0 >= num_pairs) {
                return Err(Error::invalid(format!(
                    "observation {t} references pair {k} but only {num_pairs} exist"
                )));
            }
        }
        Ok(Self {
            num_pairs,
            ell,
            observations,
        })
    }

    pub fn num_pairs(&self) -> usize {
        self.num_pairs
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }
}

/// Pairwise marginals of the two four-item mixtures that no pairwise (or
/// three-wise) data can tell apart. Items `a, b, c, d` are indices `0..4`;
/// entry `[u][v]` is the probability that `u` is ranked above `v`.
pub fn fig1_pairwise_marginals() -> ([[f64; 4]; 4], [[f64; 4]; 4]) {
    const A: usize = 0;
    const B: usize = 1;
    const C: usize = 2;
    const D: usize = 3;
    let first = [[A, B, C, D], [B, A, D, C]];
    let second = [[B, A, C, D], [A, B, D, C]];
    (
        permutation_mixture_marginals(&first),
        permutation_mixture_marginals(&second),
    )
}

/// Marginals of a uniform mixture of deterministic rankings (best first).
pub fn permutation_mixture_marginals<const M: usize>(rankings: &[[usize; M]]) -> [[f64; M]; M] {
    let mut out = [[0.0; M]; M];
    let weight = 1.0 / rankings.len() as f64;
    for ranking in rankings {
        let mut pos = [0; M];
        for (p, &item) in ranking.iter().enumerate() {
            pos[item] = p;
        }
        for u in 0..M {
            for v in 0..M {
                if u != v && pos[u] < pos[v] {
                    out[u][v] += weight;
                }
            }
        }
    }
    out
}
