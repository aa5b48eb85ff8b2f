//! JSON file formats for datasets and learning results.
//!
//! Dataset: `{"n", "ell", "graph": {"n", "edges"}, "observations":
//! [[[k, s], ...], ...], "ground_truth"?: {"q", "weights"}}` with `s = ±1`.
//! Output is compact and deterministic, so parse-then-write reproduces a
//! written file byte for byte.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::comparison_graph::{ComparisonGraph, GraphSpec};
use crate::error::{Error, Result};
use crate::mnl_model::{MixedMnlModel, ModelSpec, Observation, ObservationBatch};
use crate::pipeline::{ComponentEstimates, EvaluationReport, LearnDiagnostics};
use crate::spectral_dist::SpectralTrace;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetFile {
    pub n: usize,
    pub ell: usize,
    pub graph: GraphSpec,
    pub observations: Vec<Vec<(usize, i8)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth: Option<ModelSpec>,
}

/// A validated dataset.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub graph: ComparisonGraph,
    pub batch: ObservationBatch,
    pub ground_truth: Option<MixedMnlModel>,
}

impl Dataset {
    pub fn to_file(&self) -> DatasetFile {
        DatasetFile {
            n: self.graph.n(),
            ell: self.batch.ell(),
            graph: self.graph.to_spec(),
            observations: self
                .batch
                .observations()
                .iter()
                .map(|o| o.entries.clone())
                .collect(),
            ground_truth: self.ground_truth.as_ref().map(MixedMnlModel::to_spec),
        }
    }

    pub fn from_file(file: DatasetFile) -> Result<Self> {
        if file.graph.n != file.n {
            return Err(Error::invalid(format!(
                "dataset declares {} items but its graph has {}",
                file.n, file.graph.n
            )));
        }
        let graph = ComparisonGraph::from_spec(&file.graph)?;
        if graph.num_pairs() != file.graph.edges.len() {
            return Err(Error::invalid("graph edge list contains duplicate pairs"));
        }
        if graph
            .edges()
            .iter()
            .zip(&file.graph.edges)
            .any(|(&(i, j), e)| [i, j] != *e)
        {
            return Err(Error::invalid(
                "graph edges must be listed as sorted (i, j) pairs with i < j",
            ));
        }
        let observations = file
            .observations
            .into_iter()
            .map(Observation::new)
            .collect::<Result<Vec<_>>>()?;
        let batch = ObservationBatch::new(graph.num_pairs(), file.ell, observations)?;
        let ground_truth = file
            .ground_truth
            .as_ref()
            .map(MixedMnlModel::from_spec)
            .transpose()?;
        if let Some(m) = &ground_truth {
            if m.n() != graph.n() {
                return Err(Error::invalid(
                    "ground truth and graph disagree on the item count",
                ));
            }
        }
        Ok(Self {
            graph,
            batch,
            ground_truth,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.to_file())?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Self::from_file(serde_json::from_str(s)?)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }
}

/// `{"q_hat", "w_hat", "p_hat", "diagnostics", "matching"?}`; `p_hat` is one
/// row per component.
#[derive(Clone, Debug, Serialize)]
pub struct ResultsFile {
    pub q_hat: Vec<f64>,
    pub w_hat: Vec<Vec<f64>>,
    pub p_hat: Vec<Vec<f64>>,
    pub diagnostics: LearnDiagnostics,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matching: Option<EvaluationReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub intermediates: Option<SpectralTrace>,
}

impl ResultsFile {
    pub fn new(est: &ComponentEstimates, matching: Option<EvaluationReport>, dump: bool) -> Self {
        Self {
            q_hat: est.q_hat.clone(),
            w_hat: est.w_hat.clone(),
            p_hat: est
                .p_hat
                .column_iter()
                .map(|c| c.iter().copied().collect())
                .collect(),
            diagnostics: est.diagnostics.clone(),
            matching,
            intermediates: dump.then(|| est.trace.clone()),
        }
    }

    /// Compact JSON.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

/// Reads just the estimates back out of a results file.
#[derive(Clone, Debug, Deserialize)]
pub struct ResultsEstimates {
    pub q_hat: Vec<f64>,
    pub w_hat: Vec<Vec<f64>>,
}

impl ResultsEstimates {
    pub fn read(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    fs::write(path, s)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_byte_identical() {
        let graph = ComparisonGraph::complete(3);
        let batch = ObservationBatch::new(
            3,
            2,
            vec![
                Observation::new(vec![(0, 1), (2, -1)]).unwrap(),
                Observation::new(vec![(1, -1), (2, -1)]).unwrap(),
            ],
        )
        .unwrap();
        let truth = MixedMnlModel::new(vec![vec![0.1, 0.3, 0.6]], vec![1.0]).unwrap();
        let ds = Dataset {
            graph,
            batch,
            ground_truth: Some(truth),
        };
        let text = ds.to_json().unwrap();
        assert!(text.starts_with(r#"{"n":3,"ell":2,"graph":{"n":3,"edges":[[0,1],[0,2],[1,2]]},"observations":[[[0,1],[2,-1]]"#));
        let again = Dataset::from_json(&text).unwrap().to_json().unwrap();
        assert_eq!(text, again);
    }

    #[test]
    fn rejects_bad_outcome() {
        let text = r#"{"n":2,"ell":1,"graph":{"n":2,"edges":[[0,1]]},"observations":[[[0,2]]]}"#;
        assert!(Dataset::from_json(text).is_err());
    }

    #[test]
    fn rejects_unsorted_edges() {
        let text = r#"{"n":3,"ell":1,"graph":{"n":3,"edges":[[1,2],[0,1]]},"observations":[]}"#;
        assert!(Dataset::from_json(text).is_err());
    }
}
