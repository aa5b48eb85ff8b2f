//! Comparison graphs: the fixed set of item pairs on which outcomes can be
//! observed, together with the spectral diagnostics the learning guarantees
//! depend on.
//!
//! Vertices are 0-based. Every edge is stored as `(i, j)` with `i < j`, and
//! the edge list is sorted lexicographically; the position of an edge in that
//! list is its pair index `k`.

use std::collections::{BTreeSet, VecDeque};

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::symmetric_eigen_desc;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComparisonGraph {
    n: usize,
    edges: Vec<(usize, usize)>,
    degrees: Vec<usize>,
    neighbors: Vec<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphDiagnostics {
    pub connected: bool,
    pub bipartite: bool,
    /// `ξ = 1 − max{λ₂, −λₙ}` of `D⁻¹A`; zero for disconnected or bipartite graphs.
    pub spectral_gap: f64,
    pub d_min: usize,
    pub d_max: usize,
}

/// Wire form: `{"n": int, "edges": [[i, j], ...]}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphSpec {
    pub n: usize,
    pub edges: Vec<[usize; 2]>,
}

impl ComparisonGraph {
    /// Builds a graph from arbitrary pairs; `(i, j)` and `(j, i)` are the same pair.
    pub fn from_edges(n: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        let mut set = BTreeSet::new();
        for &(i, j) in pairs {
            if i >= n || j >= n {
                return Err(Error::InvalidPair {
                    i,
                    j,
                    n,
                    reason: "vertex index out of range",
                });
            }
            if i == j {
                return Err(Error::InvalidPair {
                    i,
                    j,
                    n,
                    reason: "self-loop",
                });
            }
            set.insert((i.min(j), i.max(j)));
        }
        Ok(Self::from_sorted(n, set.into_iter().collect()))
    }

    fn from_sorted(n: usize, edges: Vec<(usize, usize)>) -> Self {
        let mut degrees = vec![0; n];
        let mut neighbors = vec![Vec::new(); n];
        for &(i, j) in &edges {
            degrees[i] += 1;
            degrees[j] += 1;
            neighbors[i].push(j);
            neighbors[j].push(i);
        }
        Self {
            n,
            edges,
            degrees,
            neighbors,
        }
    }

    /// G(n, p) with `p = dbar / n`, resampled until connected and non-bipartite.
    pub fn erdos_renyi<R: Rng + ?Sized>(
        n: usize,
        dbar: f64,
        rng: &mut R,
        max_retries: usize,
    ) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid(format!("erdos_renyi needs n >= 2, got {n}")));
        }
        if !(dbar > 0.0 && dbar <= n as f64) {
            return Err(Error::invalid(format!(
                "mean degree {dbar} must lie in (0, {n}]"
            )));
        }
        if max_retries == 0 {
            return Err(Error::invalid("max_retries must be at least 1"));
        }
        let p = dbar / n as f64;
        let mut last = None;
        for _ in 0..max_retries {
            let mut edges = Vec::new();
            for i in 0..n {
                for j in i + 1..n {
                    if rng.gen::<f64>() < p {
                        edges.push((i, j));
                    }
                }
            }
            let g = Self::from_sorted(n, edges);
            if g.is_connected() && !g.is_bipartite() {
                return Ok(g);
            }
            last = Some(g);
        }
        let last = last.expect("at least one attempt was made");
        Err(Error::GraphGeneration {
            attempts: max_retries,
            last: last.diagnostics(),
        })
    }

    pub fn complete(n: usize) -> Self {
        let edges = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .collect();
        Self::from_sorted(n, edges)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of pairs `N`.
    pub fn num_pairs(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge(&self, k: usize) -> (usize, usize) {
        self.edges[k]
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn d_max(&self) -> usize {
        self.degrees.iter().copied().max().unwrap_or(0)
    }

    pub fn d_min(&self) -> usize {
        self.degrees.iter().copied().min().unwrap_or(0)
    }

    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return true;
        }
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = queue.pop_front() {
            for &u in &self.neighbors[v] {
                if !seen[u] {
                    seen[u] = true;
                    count += 1;
                    queue.push_back(u);
                }
            }
        }
        count == self.n
    }

    /// Two-colours every component; true iff no odd cycle exists.
    pub fn is_bipartite(&self) -> bool {
        let mut color: Vec<Option<bool>> = vec![None; self.n];
        for s in 0..self.n {
            if color[s].is_some() {
                continue;
            }
            color[s] = Some(false);
            let mut queue = VecDeque::from([s]);
            while let Some(v) = queue.pop_front() {
                let cv = color[v].unwrap();
                for &u in &self.neighbors[v] {
                    match color[u] {
                        None => {
                            color[u] = Some(!cv);
                            queue.push_back(u);
                        }
                        Some(cu) if cu == cv => return false,
                        _ => {}
                    }
                }
            }
        }
        true
    }

    /// `D^{-1/2} A D^{-1/2}`, which shares its spectrum with `D⁻¹A`.
    /// Rows of isolated vertices are left at zero.
    pub fn normalized_adjacency(&self) -> DMatrix<f64> {
        let inv_sqrt: Vec<f64> = self
            .degrees
            .iter()
            .map(|&d| if d == 0 { 0.0 } else { 1.0 / (d as f64).sqrt() })
            .collect();
        let mut s = DMatrix::zeros(self.n, self.n);
        for &(i, j) in &self.edges {
            let v = inv_sqrt[i] * inv_sqrt[j];
            s[(i, j)] = v;
            s[(j, i)] = v;
        }
        s
    }

    /// Eigenvalues of `D⁻¹A` in descending order.
    pub fn transition_spectrum(&self) -> Vec<f64> {
        symmetric_eigen_desc(&self.normalized_adjacency())
            .values
            .iter()
            .copied()
            .collect()
    }

    pub fn diagnostics(&self) -> GraphDiagnostics {
        let connected = self.is_connected();
        let bipartite = self.is_bipartite();
        let spectral_gap = if !connected || bipartite || self.n < 2 {
            0.0
        } else {
            let spec = self.transition_spectrum();
            let lambda2 = spec[1];
            let lambda_n = spec[self.n - 1];
            (1.0 - lambda2.max(-lambda_n)).clamp(0.0, 1.0)
        };
        GraphDiagnostics {
            connected,
            bipartite,
            spectral_gap,
            d_min: self.d_min(),
            d_max: self.d_max(),
        }
    }

    pub fn to_spec(&self) -> GraphSpec {
        GraphSpec {
            n: self.n,
            edges: self.edges.iter().map(|&(i, j)| [i, j]).collect(),
        }
    }

    pub fn from_spec(spec: &GraphSpec) -> Result<Self> {
        let pairs: Vec<(usize, usize)> = spec.edges.iter().map(|e| (e[0], e[1])).collect();
        Self::from_edges(spec.n, &pairs)
    }
}
