//! Snapshot effort, density and abundance with delta-method uncertainty.

use std::collections::HashMap;
use std::f64::consts::PI;

use serde::Serialize;

use super::fit::FittedDetectionModel;
use super::CtdsError;
use crate::model::{Camera, DistanceDataset, SurveyConfig};

/// Normal quantile for two-sided 95% intervals.
pub const Z_95: f64 = 1.96;

/// Snapshot moments a camera contributes: `theta T / (2 pi t)`.
pub fn effort(camera: &Camera, t_s: f64) -> f64 {
    camera.fov_rad * camera.operation_time_s / (2.0 * PI * t_s)
}

pub fn estimate_abundance(d_hat: f64, area_km2: f64) -> f64 {
    d_hat * area_km2
}

/// Log-normal interval `(D / C, D C)` with `C = exp(z sqrt(ln(1 + cv^2)))`.
pub fn lognormal_ci(est: f64, cv: f64) -> (f64, f64) {
    if !(est > 0.0) || !(cv > 0.0) {
        return (est, est);
    }
    let c = (Z_95 * (1.0 + cv * cv).ln().sqrt()).exp();
    (est / c, est * c)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct DensityFlags {
    pub no_observations: bool,
    /// Encounter-rate variance needs at least two cameras; it is taken as 0.
    pub single_camera: bool,
    pub p_variance_unavailable: bool,
}

impl DensityFlags {
    pub fn labels(&self) -> Vec<&'static str> {
        let mut v = Vec::new();
        if self.no_observations {
            v.push("no_observations");
        }
        if self.single_camera {
            v.push("single_camera");
        }
        if self.p_variance_unavailable {
            v.push("p_variance_unavailable");
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Estimate {
    pub est: f64,
    pub se: f64,
    pub cv: f64,
    pub lci: f64,
    pub uci: f64,
}

impl Estimate {
    fn scaled(&self, k: f64) -> Self {
        Self {
            est: self.est * k,
            se: self.se * k,
            cv: self.cv,
            lci: self.lci * k,
            uci: self.uci * k,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityResult {
    /// Individuals per km^2.
    pub density: Estimate,
    pub abundance: Estimate,
    pub p_hat: f64,
    pub total_effort: f64,
    /// Observations inside the truncation range.
    pub n_obs: u64,
    pub n_cameras: usize,
    pub encounter_rate: f64,
    pub flags: DensityFlags,
}

/// Density from truncated observation counts and camera effort.
///
/// `fitted` supplies `P` and its variance; `None` means detection is
/// certain within `w` (`P = 1`, no variance).
pub fn estimate_density(
    dataset: &DistanceDataset,
    fitted: Option<&FittedDetectionModel>,
    survey: &SurveyConfig,
) -> Result<DensityResult, CtdsError> {
    survey.validate()?;
    let mut index: HashMap<&str, usize> = HashMap::with_capacity(dataset.cameras.len());
    for (i, c) in dataset.cameras.iter().enumerate() {
        if index.insert(c.camera_id.as_str(), i).is_some() {
            return Err(CtdsError::DuplicateCamera(c.camera_id.clone()));
        }
    }
    let (left, w) = (survey.left_truncation_m(), survey.w_m);
    let mut counts = vec![0u64; dataset.cameras.len()];
    for o in &dataset.observations {
        let &k = index
            .get(o.camera_id.as_str())
            .ok_or_else(|| CtdsError::MissingCamera(o.camera_id.clone()))?;
        if o.distance_m >= left && o.distance_m <= w {
            counts[k] += 1;
        }
    }
    let efforts: Vec<f64> = dataset
        .cameras
        .iter()
        .map(|c| effort(c, survey.snapshot_interval_s))
        .collect();
    let total_effort: f64 = efforts.iter().sum();
    if !(total_effort > 0.0) {
        return Err(CtdsError::ZeroEffort);
    }
    let n: u64 = counts.iter().sum();
    let k = dataset.cameras.len();
    let mut flags = DensityFlags {
        single_camera: k < 2,
        ..DensityFlags::default()
    };

    let (p_hat, p_var) = match fitted {
        Some(f) => (f.p_hat, f.p_var),
        None => (1.0, Some(0.0)),
    };
    let w_km = w / 1000.0;
    let left_km = left / 1000.0;
    let area_sampled = PI * (w_km * w_km - left_km * left_km);
    let er = n as f64 / total_effort;
    let d = er / (area_sampled * p_hat * survey.availability);

    if n == 0 {
        flags.no_observations = true;
        let zero = Estimate { est: 0.0, se: 0.0, cv: 0.0, lci: 0.0, uci: 0.0 };
        return Ok(DensityResult {
            abundance: zero.clone(),
            density: zero,
            p_hat,
            total_effort,
            n_obs: 0,
            n_cameras: k,
            encounter_rate: 0.0,
            flags,
        });
    }

    let er_var = if k >= 2 {
        let s: f64 = counts
            .iter()
            .zip(&efforts)
            .filter(|(_, &e)| e > 0.0)
            .map(|(&nk, &e)| e * e * (nk as f64 / e - er).powi(2))
            .sum();
        k as f64 / (k as f64 - 1.0) * s / (total_effort * total_effort)
    } else {
        0.0
    };
    let p_cv2 = match p_var {
        Some(v) => v / (p_hat * p_hat),
        None => {
            flags.p_variance_unavailable = true;
            0.0
        }
    };
    let cv = (er_var / (er * er) + p_cv2).sqrt();
    let (lci, uci) = lognormal_ci(d, cv);
    let density = Estimate { est: d, se: d * cv, cv, lci, uci };
    Ok(DensityResult {
        abundance: density.scaled(survey.area_km2),
        density,
        p_hat,
        total_effort,
        n_obs: n,
        n_cameras: k,
        encounter_rate: er,
        flags,
    })
}
