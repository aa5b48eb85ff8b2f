//! Item weights from expected pairwise outcomes: the stationary distribution
//! of a random walk that moves toward the preferred item of each edge.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::comparison_graph::ComparisonGraph;
use crate::error::{Error, Result};

/// Accuracy used in the default iteration count.
pub const DEFAULT_EPSILON: f64 = 1e-8;
/// Upper limit on the number of power iterations chosen automatically.
pub const MAX_AUTO_T2: usize = 2_000_000;
/// Largest chain handled by [`exact_stationary`].
pub const EXACT_LIMIT: usize = 2000;
/// Cap on the dynamic range plugged into the default iteration count.
const MAX_RANGE_ESTIMATE: f64 = 1e4;

/// Row-stochastic matrix supported on the graph edges and the diagonal.
#[derive(Clone, Debug)]
pub struct TransitionMatrix {
    /// Off-diagonal `(j, p_ij)` per row `i`, in neighbor order.
    rows: Vec<Vec<(usize, f64)>>,
    diag: Vec<f64>,
}

impl TransitionMatrix {
    pub fn n(&self) -> usize {
        self.diag.len()
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diag
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return self.diag[i];
        }
        self.rows[i]
            .iter()
            .find(|&&(k, _)| k == j)
            .map_or(0.0, |&(_, p)| p)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.n();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = self.diag[i];
            for &(j, p) in &self.rows[i] {
                m[(i, j)] = p;
            }
        }
        m
    }

    /// `πᵀ p`.
    pub fn left_multiply(&self, pi: &[f64]) -> Vec<f64> {
        let mut out: Vec<f64> = pi.iter().zip(&self.diag).map(|(a, b)| a * b).collect();
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, p) in row {
                out[j] += pi[i] * p;
            }
        }
        out
    }

    fn strongly_connected(&self) -> bool {
        let n = self.n();
        let mut reverse = vec![Vec::new(); n];
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, p) in row {
                if p > 0.0 {
                    reverse[j].push(i);
                }
            }
        }
        let forward: Vec<Vec<usize>> = self
            .rows
            .iter()
            .map(|row| row.iter().filter(|e| e.1 > 0.0).map(|e| e.0).collect())
            .collect();
        reaches_all(&forward) && reaches_all(&reverse)
    }
}

fn reaches_all(adj: &[Vec<usize>]) -> bool {
    if adj.is_empty() {
        return true;
    }
    let mut seen = vec![false; adj.len()];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(v) = stack.pop() {
        for &w in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

/// Entrywise clamp to `[−1, 1]`.
pub fn project_p(p: &[f64]) -> Result<Vec<f64>> {
    p.iter()
        .enumerate()
        .map(|(k, &x)| {
            if x.is_finite() {
                Ok(x.clamp(-1.0, 1.0))
            } else {
                Err(Error::invalid(format!("entry {k} is not finite: {x}")))
            }
        })
        .collect()
}

/// For edge `k = (i, j)`: `p_ij = (1 + P_k)/(2 d_max)`,
/// `p_ji = (1 − P_k)/(2 d_max)`, with the remaining mass on the diagonal.
pub fn build_transition(g: &ComparisonGraph, p: &[f64]) -> Result<TransitionMatrix> {
    if p.len() != g.num_pairs() {
        return Err(Error::invalid(format!(
            "expected {} pair values, got {}",
            g.num_pairs(),
            p.len()
        )));
    }
    if let Some((k, &x)) = p
        .iter()
        .enumerate()
        .find(|(_, x)| !(-1.0..=1.0).contains(*x))
    {
        return Err(Error::invalid(format!(
            "pair value {x} at {k} lies outside [-1, 1]"
        )));
    }
    let n = g.n();
    let dmax = g.d_max().max(1) as f64;
    let mut rows = vec![Vec::new(); n];
    for (k, &(i, j)) in g.edges().iter().enumerate() {
        rows[i].push((j, (1.0 + p[k]) / (2.0 * dmax)));
        rows[j].push((i, (1.0 - p[k]) / (2.0 * dmax)));
    }
    let diag = rows
        .iter()
        .map(|row| (1.0 - row.iter().map(|e| e.1).sum::<f64>()).max(0.0))
        .collect();
    Ok(TransitionMatrix { rows, diag })
}

#[derive(Clone, Debug, Serialize)]
pub struct StationaryEstimate {
    pub distribution: Vec<f64>,
    /// `‖π_T − π_{T−1}‖₂`.
    pub last_change: f64,
    pub iterations: usize,
}

/// `T2` steps of `πᵀ ← πᵀ p`, renormalized to sum 1 after each step.
pub fn stationary_power(
    tm: &TransitionMatrix,
    t2: usize,
    init: &[f64],
) -> Result<StationaryEstimate> {
    if t2 == 0 {
        return Err(Error::invalid("power iteration needs at least one step"));
    }
    check_distribution(init, tm.n())?;
    let mut pi = init.to_vec();
    let mut last_change = 0.0;
    for _ in 0..t2 {
        last_change = power_step(tm, &mut pi);
    }
    Ok(StationaryEstimate {
        distribution: pi,
        last_change,
        iterations: t2,
    })
}

fn power_step(tm: &TransitionMatrix, pi: &mut Vec<f64>) -> f64 {
    let mut next = tm.left_multiply(pi);
    let s: f64 = next.iter().sum();
    next.iter_mut().for_each(|x| *x /= s);
    let change = next
        .iter()
        .zip(pi.iter())
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt();
    *pi = next;
    change
}

fn check_distribution(p: &[f64], n: usize) -> Result<()> {
    if p.len() != n {
        return Err(Error::invalid(format!(
            "initial distribution has length {}, expected {n}",
            p.len()
        )));
    }
    if p.iter().any(|&x| x < 0.0 || x.is_nan()) || (p.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(
            "initial vector is not a probability distribution",
        ));
    }
    Ok(())
}

/// Solves `πᵀ(p − I) = 0`, `Σπ = 1` directly.
pub fn exact_stationary(tm: &TransitionMatrix) -> Result<Vec<f64>> {
    let n = tm.n();
    if n > EXACT_LIMIT {
        return Err(Error::TooLarge {
            what: "dense stationary solve",
            size: n,
            cap: EXACT_LIMIT,
        });
    }
    if !tm.strongly_connected() {
        return Err(Error::Reducible);
    }
    let mut a = tm.to_dense().transpose();
    for i in 0..n {
        a[(i, i)] -= 1.0;
    }
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut b = nalgebra::DVector::zeros(n);
    b[n - 1] = 1.0;
    let x = a.lu().solve(&b).ok_or(Error::Reducible)?;
    Ok(x.iter().copied().collect())
}

/// `⌈b² d_max (ln n + ln(1/ε)) / (ξ d_min)⌉`; `None` when the spectral gap
/// is zero.
pub fn default_t2(g: &ComparisonGraph, b: f64, spectral_gap: f64, epsilon: f64) -> Option<usize> {
    if spectral_gap.is_nan() || spectral_gap <= 0.0 || g.d_min() == 0 {
        return None;
    }
    let v = b * b * g.d_max() as f64 * ((g.n() as f64).ln() + (1.0 / epsilon).ln())
        / (spectral_gap * g.d_min() as f64);
    Some((v.ceil() as usize).max(1))
}

#[derive(Clone, Debug, Serialize)]
pub struct RankCentralityOutput {
    /// Sums to 1.
    pub weights: Vec<f64>,
    pub t2: usize,
    pub last_change: f64,
}

/// Clamp, build the chain, and power-iterate from the uniform distribution.
///
/// With `t2 = None` the iteration count follows [`default_t2`]. The dynamic
/// range `b` it needs is unknown up front, so it starts from the largest
/// per-edge ratio `(1 + |P_k|)/(1 − |P_k|)` and is re-estimated from the
/// current iterate; iteration continues while the implied count grows.
pub fn rank_centrality(
    g: &ComparisonGraph,
    p_hat: &[f64],
    t2: Option<usize>,
) -> Result<RankCentralityOutput> {
    let p = project_p(p_hat)?;
    let tm = build_transition(g, &p)?;
    let n = g.n();
    let uniform = vec![1.0 / n as f64; n];
    if let Some(t2) = t2 {
        let est = stationary_power(&tm, t2, &uniform)?;
        return Ok(RankCentralityOutput {
            weights: est.distribution,
            t2,
            last_change: est.last_change,
        });
    }
    let gap = g.diagnostics().spectral_gap;
    let edge_range = p
        .iter()
        .map(|x| {
            let a = x.abs().min(1.0 - 1e-12);
            (1.0 + a) / (1.0 - a)
        })
        .fold(1.0, f64::max);
    let target = |b: f64| {
        default_t2(g, b.min(MAX_RANGE_ESTIMATE), gap, DEFAULT_EPSILON)
            .unwrap_or(MAX_AUTO_T2)
            .min(MAX_AUTO_T2)
    };
    let mut goal = target(edge_range);
    let mut pi = uniform;
    let mut done = 0;
    let mut last_change = 0.0;
    loop {
        while done < goal {
            last_change = power_step(&tm, &mut pi);
            done += 1;
        }
        let (lo, hi) = pi.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        });
        let b = if lo > 0.0 { hi / lo } else { f64::INFINITY };
        let next = target(b.max(edge_range));
        if next <= goal {
            break;
        }
        goal = next;
    }
    Ok(RankCentralityOutput {
        weights: pi,
        t2: done,
        last_change,
    })
}
