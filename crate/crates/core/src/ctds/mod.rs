//! Camera-trap distance sampling: detection functions, binned likelihood
//! fitting, model selection, density and bootstrap.

mod bootstrap;
mod density;
mod detfn;
mod fit;
mod quadrature;
mod simplex;

use serde::Serialize;
use thiserror::Error;

pub use bootstrap::{bootstrap, refit_density, resample, resample_indices, BootstrapResult, BootstrapSummary};
pub use density::{effort, estimate_abundance, estimate_density, lognormal_ci, DensityFlags, DensityResult, Estimate, Z_95};
pub use detfn::{DetectionFunction, DetectionFunctionSpec, KeyFunction, FEASIBILITY_GRID};
pub use fit::{
    bin_probabilities, chat, chat_and_qaic, estimate_p, estimate_p_between, fit_detection_function,
    fit_detection_function_with, qaic, select_model, BinnedDistances, CandidateFit, FitOptions,
    FittedDetectionModel, Selection, StartDiagnostic,
};
pub use quadrature::{integrate, Tolerance};
pub use simplex::{minimize, SimplexOptions, SimplexResult};

use crate::model::{DistanceDataset, ModelError, SurveyConfig};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CtdsError {
    #[error("invalid detection function: {0}")]
    InvalidSpec(String),
    #[error("{0}: detection function leaves [0, 1] on the feasibility grid")]
    NonMonotoneOrNegative(String),
    #[error("distance {r} m outside [0, {w}]")]
    OutOfRange { r: f64, w: f64 },
    #[error("quadrature failed: {0}")]
    QuadratureFailure(String),
    #[error("invalid bins: {0}")]
    InvalidBins(String),
    #[error("{n} observations cannot support a fit needing at least {needed}")]
    InsufficientData { n: u64, needed: u64 },
    #[error("{0}: no start point reached a feasible optimum")]
    NoFeasibleOptimum(String),
    #[error("no candidate detection function could be fitted")]
    AllFamiliesInfeasible,
    #[error("observation references unknown camera {0:?}")]
    MissingCamera(String),
    #[error("camera {0:?} listed twice")]
    DuplicateCamera(String),
    #[error("total camera effort is zero")]
    ZeroEffort,
    #[error("all {0} bootstrap replicates failed")]
    AllReplicatesFailed(usize),
    #[error("invalid bootstrap request: {0}")]
    InvalidBootstrap(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Serialize)]
pub struct Analysis {
    pub binned: BinnedDistances,
    /// `None` when there were no observations to fit.
    pub selection: Option<Selection>,
    pub density: DensityResult,
}

/// Bins the dataset's distances, selects a detection function and estimates density.
pub fn analyze(
    dataset: &DistanceDataset,
    candidates: &[DetectionFunctionSpec],
    survey: &SurveyConfig,
) -> Result<Analysis, CtdsError> {
    survey.validate()?;
    let binned = BinnedDistances::from_distances(dataset.observations.iter().map(|o| o.distance_m), &survey.cutpoints_m)?;
    if binned.total() == 0 {
        let density = estimate_density(dataset, None, survey)?;
        return Ok(Analysis { binned, selection: None, density });
    }
    let selection = select_model(candidates, &binned)?;
    let density = estimate_density(dataset, Some(&selection.best), survey)?;
    Ok(Analysis { binned, selection: Some(selection), density })
}
