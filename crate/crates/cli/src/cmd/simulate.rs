use std::path::Path;

use anyhow::{bail, Context, Result};
use camdist_core::ctds::{DetectionFunction, DetectionFunctionSpec};
use camdist_core::ingest::{write_cameras, write_observations, SECONDS_PER_DAY};
use camdist_core::model::Camera;
use camdist_core::sim::{simulate_survey, TruthConfig};
use serde::{Deserialize, Serialize};

use crate::output::{ensure_dir, read_text, sha256_prefix, write_table, Provenance};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectionSection {
    pub spec: DetectionFunctionSpec,
    pub sigma_m: Option<f64>,
    pub shape: Option<f64>,
    #[serde(default)]
    pub coefficients: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraSection {
    pub camera_id: String,
    pub fov_deg: f64,
    pub operation_time_days: f64,
}

/// `count` identical cameras named `cam000`, `cam001`, ...
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraGrid {
    pub count: usize,
    pub fov_deg: f64,
    pub operation_time_days: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruthFile {
    pub true_density: f64,
    pub w_m: f64,
    #[serde(default = "default_interval")]
    pub snapshot_interval_s: f64,
    #[serde(default)]
    pub seed: u64,
    pub detection: DetectionSection,
    #[serde(default)]
    pub cameras: Vec<CameraSection>,
    pub camera_grid: Option<CameraGrid>,
}

fn default_interval() -> f64 {
    2.0
}

impl TruthFile {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn to_truth(&self) -> Result<TruthConfig> {
        let d = &self.detection;
        let detection = DetectionFunction::new(d.spec.clone(), d.sigma_m, d.shape, d.coefficients.clone(), self.w_m)?;
        let mut cameras = Vec::new();
        if let Some(g) = &self.camera_grid {
            for i in 0..g.count {
                cameras.push(Camera::new(
                    format!("cam{i:03}"),
                    g.fov_deg.to_radians(),
                    g.operation_time_days * SECONDS_PER_DAY,
                )?);
            }
        }
        for c in &self.cameras {
            cameras.push(Camera::new(
                c.camera_id.clone(),
                c.fov_deg.to_radians(),
                c.operation_time_days * SECONDS_PER_DAY,
            )?);
        }
        if cameras.is_empty() {
            bail!("truth file lists no cameras");
        }
        Ok(TruthConfig {
            true_density: self.true_density,
            detection,
            cameras,
            w_m: self.w_m,
            t_s: self.snapshot_interval_s,
            seed: self.seed,
        })
    }
}

pub fn run(truth_path: &Path, seed: Option<u64>, out: &Path) -> Result<()> {
    let mut file = TruthFile::parse(&read_text(truth_path)?).with_context(|| format!("parsing {}", truth_path.display()))?;
    if let Some(s) = seed {
        file.seed = s;
    }
    let prov = Provenance {
        config_hash: sha256_prefix(&toml::to_string(&file)?),
        seed: file.seed,
    };
    let truth = file.to_truth()?;
    let ds = simulate_survey(&truth)?;
    ensure_dir(out)?;
    write_table(out, "cameras.csv", &prov, &write_cameras(&ds.cameras))?;
    write_table(out, "observations.csv", &prov, &write_observations(&ds.observations))?;
    eprintln!(
        "simulated {} camera(s), {} observation(s) (expected {:.1})",
        ds.cameras.len(),
        ds.observations.len(),
        truth.expected_observations()?
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_grid_and_list() {
        let text = r#"
true_density = 2.0
w_m = 15.0
seed = 4
[detection]
spec = "hr"
sigma_m = 4.0
shape = 2.5
[camera_grid]
count = 3
fov_deg = 42.0
operation_time_days = 10.0
[[cameras]]
camera_id = "extra"
fov_deg = 30.0
operation_time_days = 1.0
"#;
        let t = TruthFile::parse(text).unwrap().to_truth().unwrap();
        assert_eq!(t.cameras.len(), 4);
        assert_eq!(t.cameras[3].camera_id, "extra");
        assert_eq!(t.detection.shape, Some(2.5));
        assert_eq!(t.t_s, 2.0);
    }

    #[test]
    fn rejects_missing_cameras_and_bad_params() {
        let base = "true_density = 1.0\nw_m = 15.0\n[detection]\nspec = \"hn\"\nsigma_m = 4.0\n";
        assert!(TruthFile::parse(base).unwrap().to_truth().is_err());
        let bad = "true_density = 1.0\nw_m = 15.0\n[detection]\nspec = \"hn\"\n[camera_grid]\ncount = 1\nfov_deg = 40.0\noperation_time_days = 1.0\n";
        assert!(TruthFile::parse(bad).unwrap().to_truth().is_err());
    }
}
