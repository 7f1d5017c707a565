//! Synthetic camera-trap surveys with known density and detection function.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use thiserror::Error;

use crate::ctds::{analyze, estimate_p, CtdsError, DetectionFunction, DetectionFunctionSpec};
use crate::model::{Camera, DistanceDataset, ModelError, Observation, Source, SurveyConfig};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("true density {0} must be finite and >= 0")]
    Density(f64),
    #[error("a survey needs at least one camera")]
    NoCameras,
    #[error("snapshot interval {0} s must be positive")]
    Interval(f64),
    #[error("detection function truncation {detection} m differs from survey w {w} m")]
    TruncationMismatch { detection: f64, w: f64 },
    #[error(transparent)]
    Ctds(#[from] CtdsError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruthConfig {
    /// Individuals per km^2.
    pub true_density: f64,
    pub detection: DetectionFunction,
    pub cameras: Vec<Camera>,
    pub w_m: f64,
    pub t_s: f64,
    pub seed: u64,
}

impl TruthConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.true_density >= 0.0 && self.true_density.is_finite()) {
            return Err(SimError::Density(self.true_density));
        }
        if self.cameras.is_empty() {
            return Err(SimError::NoCameras);
        }
        if !(self.t_s > 0.0 && self.t_s.is_finite()) {
            return Err(SimError::Interval(self.t_s));
        }
        if (self.detection.w - self.w_m).abs() > 1e-12 * self.w_m.max(1.0) {
            return Err(SimError::TruncationMismatch { detection: self.detection.w, w: self.w_m });
        }
        self.detection.check_feasible()?;
        Ok(())
    }

    /// Snapshot moments simulated for a camera: `round(T / t)`.
    pub fn snapshots(&self, camera: &Camera) -> u64 {
        (camera.operation_time_s / self.t_s).round() as u64
    }

    /// Poisson mean of animals inside one camera's sector across all its snapshots.
    pub fn expected_animals(&self, camera: &Camera) -> f64 {
        self.snapshots(camera) as f64 * self.true_density * camera.fov_rad * self.w_m * self.w_m / 2.0 * 1e-6
    }

    /// Expected number of retained observations, `D P pi w_km^2 sum e_k`.
    pub fn expected_observations(&self) -> Result<f64, SimError> {
        let p = estimate_p(&self.detection)?;
        Ok(self.cameras.iter().map(|c| self.expected_animals(c)).sum::<f64>() * p)
    }
}

fn simulate_camera(truth: &TruthConfig, k: usize) -> Result<Vec<Observation>, SimError> {
    let camera = &truth.cameras[k];
    let mut rng = ChaCha8Rng::seed_from_u64(truth.seed);
    rng.set_stream(k as u64);
    let lambda = truth.expected_animals(camera);
    let m = truth.snapshots(camera);
    if !(lambda > 0.0) || m == 0 {
        return Ok(Vec::new());
    }
    let total = Poisson::new(lambda)
        .map_err(|_| SimError::Density(truth.true_density))?
        .sample(&mut rng) as u64;
    let mut out = Vec::new();
    for _ in 0..total {
        let snapshot = rng.random_range(0..m);
        let u: f64 = rng.random();
        let r = truth.w_m * (1.0 - u).sqrt();
        let keep: f64 = rng.random();
        if keep < truth.detection.eval(r) {
            out.push(Observation::new(
                camera.camera_id.clone(),
                snapshot as f64 * truth.t_s,
                r,
                Source::Model,
            )?);
        }
    }
    out.sort_by(|a, b| a.timestamp_s.total_cmp(&b.timestamp_s));
    Ok(out)
}

/// Draws a survey: per camera one Poisson total over its snapshots, each
/// animal at a random snapshot with radius density `2r/w^2` on `(0, w]`,
/// kept with probability `g(r)`. Camera `k` uses RNG stream `k`.
pub fn simulate_survey(truth: &TruthConfig) -> Result<DistanceDataset, SimError> {
    truth.validate()?;
    let per_camera: Vec<Vec<Observation>> = (0..truth.cameras.len())
        .into_par_iter()
        .map(|k| simulate_camera(truth, k))
        .collect::<Result<_, _>>()?;
    Ok(DistanceDataset {
        cameras: truth.cameras.clone(),
        observations: per_camera.into_iter().flatten().collect(),
    })
}

/// Simulates, selects a detection function, estimates density, and returns
/// `|D_hat - D| / D` (or `D_hat` itself when the truth is zero).
pub fn recover(
    truth: &TruthConfig,
    candidates: &[DetectionFunctionSpec],
    survey: &SurveyConfig,
) -> Result<f64, SimError> {
    let ds = simulate_survey(truth)?;
    let a = analyze(&ds, candidates, survey)?;
    let d = a.density.density.est;
    Ok(if truth.true_density > 0.0 {
        (d - truth.true_density).abs() / truth.true_density
    } else {
        d
    })
}

/// `n` cameras sharing one field of view and operation time.
pub fn identical_cameras(n: usize, fov_rad: f64, operation_time_s: f64) -> Result<Vec<Camera>, ModelError> {
    (0..n)
        .map(|i| Camera::new(format!("cam{i:03}"), fov_rad, operation_time_s))
        .collect()
}

/// Operation time giving `target` expected animals per camera under a uniform truth.
pub fn operation_time_for(target: f64, density: f64, fov_rad: f64, w_m: f64, t_s: f64) -> f64 {
    target / (density * fov_rad * w_m * w_m / 2.0 * 1e-6) * t_s
}
