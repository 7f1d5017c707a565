//! Nonparametric bootstrap over cameras.
//!
//! Replicate `i` draws its camera indices from `ChaCha8Rng` seeded with
//! `seed` on stream `i`, so results do not depend on thread scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::density::{estimate_abundance, estimate_density};
use super::detfn::DetectionFunctionSpec;
use super::fit::{select_model, BinnedDistances};
use super::CtdsError;
use crate::model::{Camera, DistanceDataset, Observation, SurveyConfig};
use crate::stats::{percentile_sorted, sample_sd};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BootstrapSummary {
    /// Successful replicates.
    pub replicates: usize,
    pub failed: usize,
    pub median: f64,
    pub lci: f64,
    pub uci: f64,
    pub se: f64,
    pub cv: f64,
}

impl BootstrapSummary {
    fn from_values(mut values: Vec<f64>, failed: usize) -> Self {
        values.sort_by(f64::total_cmp);
        let median = percentile_sorted(&values, 0.5).unwrap();
        let se = sample_sd(&values);
        Self {
            replicates: values.len(),
            failed,
            median,
            lci: percentile_sorted(&values, 0.025).unwrap(),
            uci: percentile_sorted(&values, 0.975).unwrap(),
            se,
            cv: if median > 0.0 { se / median } else { 0.0 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BootstrapResult {
    pub density: BootstrapSummary,
    pub abundance: BootstrapSummary,
    /// Per-replicate density in replicate order; `None` where the refit failed.
    pub values: Vec<Option<f64>>,
}

/// Camera indices for replicate `index`.
pub fn resample_indices(n_cameras: usize, seed: u64, index: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    (0..n_cameras).map(|_| rng.random_range(0..n_cameras)).collect()
}

/// Builds a replicate dataset. Each draw becomes a distinct camera so a
/// camera sampled twice contributes its effort and observations twice.
pub fn resample(dataset: &DistanceDataset, picks: &[usize]) -> DistanceDataset {
    let mut cameras = Vec::with_capacity(picks.len());
    let mut observations = Vec::new();
    for (draw, &k) in picks.iter().enumerate() {
        let src: &Camera = &dataset.cameras[k];
        let id = format!("{}#{draw}", src.camera_id);
        observations.extend(
            dataset
                .observations
                .iter()
                .filter(|o| o.camera_id == src.camera_id)
                .map(|o| Observation { camera_id: id.clone(), ..o.clone() }),
        );
        cameras.push(Camera { camera_id: id, ..src.clone() });
    }
    DistanceDataset { cameras, observations }
}

/// Density for one dataset with model selection rerun from scratch.
/// A dataset without observations in range yields density 0.
pub fn refit_density(
    dataset: &DistanceDataset,
    candidates: &[DetectionFunctionSpec],
    survey: &SurveyConfig,
) -> Result<f64, CtdsError> {
    let binned = BinnedDistances::from_distances(dataset.observations.iter().map(|o| o.distance_m), &survey.cutpoints_m)?;
    if binned.total() == 0 {
        return Ok(estimate_density(dataset, None, survey)?.density.est);
    }
    let sel = select_model(candidates, &binned)?;
    Ok(estimate_density(dataset, Some(&sel.best), survey)?.density.est)
}

pub fn bootstrap(
    dataset: &DistanceDataset,
    candidates: &[DetectionFunctionSpec],
    survey: &SurveyConfig,
    replicates: usize,
    seed: u64,
) -> Result<BootstrapResult, CtdsError> {
    if replicates == 0 {
        return Err(CtdsError::InvalidBootstrap("need at least one replicate".into()));
    }
    if dataset.cameras.is_empty() {
        return Err(CtdsError::InvalidBootstrap("no cameras to resample".into()));
    }
    let k = dataset.cameras.len();
    let values: Vec<Option<f64>> = (0..replicates as u64)
        .into_par_iter()
        .map(|i| {
            let picks = resample_indices(k, seed, i);
            refit_density(&resample(dataset, &picks), candidates, survey).ok()
        })
        .collect();
    let ok: Vec<f64> = values.iter().flatten().copied().collect();
    if ok.is_empty() {
        return Err(CtdsError::AllReplicatesFailed(replicates));
    }
    let failed = replicates - ok.len();
    let abundance: Vec<f64> = ok.iter().map(|&d| estimate_abundance(d, survey.area_km2)).collect();
    Ok(BootstrapResult {
        density: BootstrapSummary::from_values(ok, failed),
        abundance: BootstrapSummary::from_values(abundance, failed),
        values,
    })
}
