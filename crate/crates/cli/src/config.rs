//! Run configuration: one TOML file, overridden by command-line flags.

use anyhow::{bail, Context, Result};
use camdist_core::calibrate::Extrapolation;
use camdist_core::ctds::DetectionFunctionSpec;
use camdist_core::distance::Strategy;
use camdist_core::ingest::{DetectionFilter, DEFAULT_ANIMAL_CATEGORY};
use camdist_core::model::{SurveyConfig, DEFAULT_MAX_REFERENCE_M};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DepthModeKind {
    Direct,
    Calibrated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SurveySection {
    pub w_m: f64,
    /// Explicit bin edges; when absent, equal bins of `bin_width_m` from
    /// `left_truncation_m` to `w_m`.
    pub cutpoints_m: Option<Vec<f64>>,
    pub bin_width_m: f64,
    pub left_truncation_m: f64,
    pub snapshot_interval_s: f64,
    pub availability: f64,
    pub area_km2: f64,
}

impl Default for SurveySection {
    fn default() -> Self {
        let s = SurveyConfig::default();
        Self {
            w_m: s.w_m,
            cutpoints_m: None,
            bin_width_m: 1.0,
            left_truncation_m: 0.0,
            snapshot_interval_s: s.snapshot_interval_s,
            availability: s.availability,
            area_km2: s.area_km2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DistancesSection {
    pub strategy: Strategy,
    pub depth_mode: DepthModeKind,
    pub min_conf: f64,
    pub animal_category: String,
    /// Share of worst residuals dropped when aligning to a reference depth map.
    pub trim_frac: f64,
    pub extrapolation: Extrapolation,
    pub max_reference_m: f64,
}

impl Default for DistancesSection {
    fn default() -> Self {
        Self {
            strategy: Strategy::BBoxP20,
            depth_mode: DepthModeKind::Direct,
            min_conf: DetectionFilter::default().min_conf,
            animal_category: DEFAULT_ANIMAL_CATEGORY.to_string(),
            trim_frac: 0.1,
            extrapolation: Extrapolation::Clamp,
            max_reference_m: DEFAULT_MAX_REFERENCE_M,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalSection {
    pub bin_step_m: f64,
    /// Regress over all pairs instead of per-bin means.
    pub raw_pairs: bool,
}

impl Default for EvalSection {
    fn default() -> Self {
        Self {
            bin_step_m: 0.5,
            raw_pairs: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CtdsSection {
    pub candidates: Vec<DetectionFunctionSpec>,
    pub bootstrap: usize,
}

impl Default for CtdsSection {
    fn default() -> Self {
        Self {
            candidates: DetectionFunctionSpec::default_candidates(),
            bootstrap: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub survey: SurveySection,
    pub distances: DistancesSection,
    pub eval: EvalSection,
    pub ctds: CtdsSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            survey: SurveySection::default(),
            distances: DistancesSection::default(),
            eval: EvalSection::default(),
            ctds: CtdsSection::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// First 12 hex digits of the SHA-256 of the effective config.
    pub fn hash(&self) -> String {
        crate::output::sha256_prefix(&self.to_toml())
    }

    pub fn survey(&self) -> Result<SurveyConfig> {
        let s = &self.survey;
        let cutpoints_m = match &s.cutpoints_m {
            Some(c) => c.clone(),
            None => {
                if !(s.bin_width_m > 0.0) {
                    bail!("bin_width_m must be positive");
                }
                let n = ((s.w_m - s.left_truncation_m) / s.bin_width_m).round().max(1.0) as usize;
                SurveyConfig::with_uniform_bins(s.w_m, s.left_truncation_m, n).cutpoints_m
            }
        };
        let survey = SurveyConfig {
            w_m: s.w_m,
            cutpoints_m,
            snapshot_interval_s: s.snapshot_interval_s,
            availability: s.availability,
            area_km2: s.area_km2,
        };
        survey.validate()?;
        Ok(survey)
    }

    pub fn detection_filter(&self) -> DetectionFilter {
        DetectionFilter {
            min_conf: self.distances.min_conf,
            animal_category: self.distances.animal_category.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.survey()?;
        let d = &self.distances;
        if !(0.0..=1.0).contains(&d.min_conf) {
            bail!("min_conf {} outside [0, 1]", d.min_conf);
        }
        if !(0.0..0.5).contains(&d.trim_frac) {
            bail!("trim_frac {} outside [0, 0.5)", d.trim_frac);
        }
        if !(self.eval.bin_step_m > 0.0) {
            bail!("eval bin_step_m must be positive");
        }
        if self.ctds.candidates.is_empty() {
            bail!("at least one candidate detection function is required");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let c = RunConfig::default();
        let back: RunConfig = toml::from_str(&c.to_toml()).unwrap();
        assert_eq!(back, c);
        assert_eq!(c.survey().unwrap(), SurveyConfig::default());
    }

    #[test]
    fn hash_tracks_content() {
        let a = RunConfig::default();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.seed = 2;
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn partial_file_and_unknown_keys() {
        let c: RunConfig = toml::from_str("[survey]\nw_m = 10.0\n[ctds]\ncandidates = [\"hn\"]\n").unwrap();
        assert_eq!(c.survey().unwrap().cutpoints_m.len(), 11);
        assert_eq!(c.ctds.candidates.len(), 1);
        assert!(toml::from_str::<RunConfig>("[survey]\nwidth = 3\n").is_err());
    }
}
