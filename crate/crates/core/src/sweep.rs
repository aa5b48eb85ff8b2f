//! Error-versus-sample-size experiments on synthetic models.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::comparison_graph::ComparisonGraph;
use crate::error::Result;
use crate::mnl_model::MixedMnlModel;
use crate::pipeline::{learn_mixed_mnl, match_components, LearnConfig};

/// Retries allowed when drawing a connected, non-bipartite random graph.
pub const GRAPH_RETRIES: usize = 100;

#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    pub n: usize,
    pub dbar: f64,
    pub ell: usize,
    pub r: usize,
    /// Weights are drawn uniformly from this interval before normalization.
    pub weight_range: (f64, f64),
    pub t1: Option<usize>,
    pub t2: Option<usize>,
    pub seed: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            n: 30,
            dbar: 8.0,
            ell: 10,
            r: 2,
            weight_range: (1.0, 2.0),
            t1: None,
            t2: None,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub kind: &'static str,
    pub samples: usize,
    pub seed: u64,
    pub status: &'static str,
    pub q_error: Option<f64>,
    pub w_error: Option<f64>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SweepTable {
    pub runs: Vec<SweepRow>,
    pub medians: Vec<SweepRow>,
}

impl SweepTable {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        for row in self.runs.iter().chain(&self.medians) {
            out.serialize(row)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn median_for(&self, samples: usize) -> Option<&SweepRow> {
        self.medians.iter().find(|m| m.samples == samples)
    }
}

/// SplitMix64 finalizer, used to derive independent sub-seeds.
pub fn mix_seed(base: u64, coords: &[u64]) -> u64 {
    let mut z = base;
    for &c in coords {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15).wrapping_add(c);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^= z >> 31;
    }
    z
}

/// The model and graph for one seed; shared by every sample size.
pub fn instance(cfg: &SweepConfig, seed: u64) -> Result<(MixedMnlModel, ComparisonGraph)> {
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(cfg.seed, &[seed, 0]));
    let g = ComparisonGraph::erdos_renyi(cfg.n, cfg.dbar, &mut rng, GRAPH_RETRIES)?;
    let (lo, hi) = cfg.weight_range;
    let m = MixedMnlModel::random_uniform(cfg.n, cfg.r, lo, hi, &mut rng)?;
    Ok((m, g))
}

/// Learns once and reports the matched maximum errors over components.
pub fn run_cell(cfg: &SweepConfig, samples: usize, seed: u64) -> Result<(f64, f64)> {
    let (m, g) = instance(cfg, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(cfg.seed, &[seed, samples as u64, 1]));
    let batch = m.sample_batch(&g, cfg.ell, samples, &mut rng)?;
    let learn = LearnConfig {
        r: cfg.r,
        t1: cfg.t1,
        t2: cfg.t2,
        seed: mix_seed(cfg.seed, &[seed, samples as u64, 2]),
    };
    let est = learn_mixed_mnl(&batch, &g, &learn)?;
    let report = match_components(&est.q_hat, &est.w_hat, &m)?;
    Ok((report.max_q_error(), report.max_weight_error()))
}

/// Every `(samples, seed)` cell, failures recorded as rows, followed by
/// per-sample-size medians over the successful runs.
pub fn run_sweep(cfg: &SweepConfig, sample_sizes: &[usize], seeds: &[u64]) -> SweepTable {
    let mut table = SweepTable::default();
    if seeds.is_empty() {
        return table;
    }
    for &samples in sample_sizes {
        let mut q_errs = Vec::new();
        let mut w_errs = Vec::new();
        for &seed in seeds {
            let row = match run_cell(cfg, samples, seed) {
                Ok((q, w)) => {
                    q_errs.push(q);
                    w_errs.push(w);
                    SweepRow {
                        kind: "run",
                        samples,
                        seed,
                        status: "ok",
                        q_error: Some(q),
                        w_error: Some(w),
                        error: None,
                    }
                }
                Err(e) => SweepRow {
                    kind: "run",
                    samples,
                    seed,
                    status: "failed",
                    q_error: None,
                    w_error: None,
                    error: Some(e.to_string()),
                },
            };
            table.runs.push(row);
        }
        table.medians.push(SweepRow {
            kind: "median",
            samples,
            seed: cfg.seed,
            status: if q_errs.len() == seeds.len() {
                "ok"
            } else {
                "partial"
            },
            q_error: median(&q_errs),
            w_error: median(&w_errs),
            error: None,
        });
    }
    table
}

pub fn median(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_seed_list_gives_empty_table() {
        let t = run_sweep(&SweepConfig::default(), &[100, 200], &[]);
        assert!(t.runs.is_empty() && t.medians.is_empty());
    }

    #[test]
    fn median_values() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0]), Some(2.5));
        assert_eq!(median(&[]), None);
    }

    #[test]
    fn sub_seeds_differ() {
        assert_ne!(mix_seed(1, &[0, 1]), mix_seed(1, &[1, 0]));
        assert_eq!(mix_seed(5, &[2]), mix_seed(5, &[2]));
    }
}
