//! Threshold-free robust model estimation.
//!
//! The crate provides MAGSAC, which scores hypotheses by a log-likelihood
//! marginalized over the noise scale and polishes them with σ-consensus,
//! together with RANSAC, MSAC and their locally optimized variants as
//! baselines. Three problems are supported: 2D lines, homographies and
//! fundamental matrices.

pub mod error;
pub mod estimators;
pub mod geometry;
pub mod io;
pub mod metrics;
pub mod points;
pub mod scoring;
pub mod sigma_consensus;
pub mod synthetic;

pub use error::{Error, Result};
pub use estimators::{
    estimate, local_optimization, magsac, ransac_family, EstimationResult, Method, QualityKind, SolverConfig,
};
pub use geometry::{FundamentalMatrix, Homography, Line2D, Model, ProblemDef, ProblemKind};
pub use metrics::{evaluate, Evaluation};
pub use points::PointSet;
pub use scoring::{NoiseConfig, NoiseModel, ResidualProfile};
pub use sigma_consensus::{post_process, sigma_consensus, Parallelism, SigmaConsensusResult};
pub use synthetic::SyntheticScene;


