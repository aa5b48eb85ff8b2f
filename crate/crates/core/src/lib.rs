//! Learning mixtures of MultiNomial Logit models from partial pairwise
//! comparisons.
//!
//! Each observation reveals the outcomes of `ℓ` random pairs out of a fixed
//! comparison graph, all drawn from one latent MNL component. The learner
//! first recovers the mixture weights and the per-pair expected outcomes of
//! every component from the second and third moments of the observations
//! ([`spectral_dist`]), then turns each component's expected outcomes into
//! item weights with a random-walk ranking ([`rank_centrality`]).
//!
//! ```
//! use mixmnl::{ComparisonGraph, LearnConfig, MixedMnlModel, learn_mixed_mnl};
//! use rand::SeedableRng;
//!
//! let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
//! let graph = ComparisonGraph::complete(6);
//! let model = MixedMnlModel::new(
//!     vec![vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0], vec![6.0, 5.0, 4.0, 3.0, 2.0, 1.0]],
//!     vec![0.5, 0.5],
//! )?;
//! let batch = model.sample_batch(&graph, 5, 20_000, &mut rng)?;
//! let est = learn_mixed_mnl(&batch, &graph, &LearnConfig::new(2))?;
//! assert_eq!(est.q_hat.len(), 2);
//! # Ok::<(), mixmnl::Error>(())
//! ```

pub mod comparison_graph;
pub mod error;
pub mod io;
pub mod linalg;
pub mod matrix_altmin;
pub mod mnl_model;
pub mod moments;
pub mod pipeline;
pub mod rank_centrality;
pub mod spectral_dist;
pub mod sweep;
pub mod tensor_estimation;

pub use comparison_graph::{ComparisonGraph, GraphDiagnostics};
pub use error::{Error, Result};
pub use linalg::Tensor3;
pub use mnl_model::{MixedMnlModel, Observation, ObservationBatch};
pub use pipeline::{
    check_conditions, learn_mixed_mnl, match_components, ComponentEstimates, ConditionReport,
    EvaluationReport, LearnConfig,
};
pub use spectral_dist::{spectral_dist, MixtureMomentsEstimate, SpectralDistOptions};
