//! Uncertainty decomposition for multi-modal trajectory-prediction ensembles.
//!
//! Each ensemble member's modes become a 2-D Gaussian mixture over
//! endpoints; total, aleatoric and epistemic uncertainty are Monte-Carlo
//! estimates of the entropy of the averaged mixture, the mean member
//! entropy, and their difference (the mutual information).

pub mod analysis;
pub mod ensemble;
pub mod error;
pub mod gmm;
pub mod metrics;
pub mod perturb;
pub mod scene;
pub mod seed;
pub mod synth;
pub mod uncertainty;

pub use analysis::{
    correlate, delta_metrics, ood_separation, pearson, quartiles, ReportRow, RunReport, UncertaintyKind,
};
pub use ensemble::{mbrm, topk, EnsemblePrediction};
pub use error::{Error, Result};
pub use gmm::{fit_gmm, gmm_from_modes, Cov2, FitConfig, GaussianMixture2D};
pub use metrics::{min_ade, min_fde, MetricName, MetricValue};
pub use perturb::{Perturbation, PerturbationSpec};
pub use scene::{Mode, ModeSet, Prediction, Scene, Trajectory};
pub use uncertainty::{decompose, member_entropy, rip_epistemic, EstimatorConfig, UncertaintyTriple};
