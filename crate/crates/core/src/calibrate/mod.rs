//! Per-camera conversion of raw model depth to metres.
//!
//! A [`CalibrationCurve`] is fitted from reference samples (a person
//! standing at known distances) by isotonic regression and evaluated
//! piecewise-linearly. Optionally a frame is first aligned to the camera's
//! reference depth map with a scale/shift fit that ignores animal pixels.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::write_csv;
use crate::model::{DepthMap, DepthUnit, ModelError, ReferenceSample};

mod align;
mod isotonic;

pub use align::{align_scale_shift, ScaleShift, MIN_ALIGN_PIXELS};
pub use isotonic::pava;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CalibrateError {
    #[error("camera {camera_id}: need at least 2 reference samples, got {got}")]
    TooFewSamples { camera_id: String, got: usize },
    #[error("camera {0}: all reference raw depths are equal")]
    DegenerateRawDepth(String),
    #[error("reference samples mix cameras {0:?} and {1:?}")]
    MixedCameras(String, String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("only {got} usable pixels, need {need}")]
    InsufficientPixels { got: usize, need: usize },
    #[error("observed depth has zero variance over retained pixels")]
    DegenerateVariance,
    #[error("alignment produced non-positive scale {0}")]
    NonPositiveScale(f64),
    #[error("trim fraction {0} outside [0, 0.5)")]
    TrimFraction(f64),
    #[error("no calibration curve for camera {0:?}")]
    MissingCurve(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Extrapolation {
    /// Hold the end knot values outside the knot range.
    #[default]
    Clamp,
    /// Continue the first/last segment's slope.
    LinearExtend,
}

/// Monotone piecewise-linear raw-depth to metres mapping for one camera.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationCurve {
    camera_id: String,
    knots: Vec<(f64, f64)>,
    extrapolation: Extrapolation,
}

impl CalibrationCurve {
    /// Knots must be strictly increasing in raw depth and non-decreasing in metres.
    pub fn from_knots(
        camera_id: impl Into<String>,
        knots: Vec<(f64, f64)>,
        extrapolation: Extrapolation,
    ) -> Result<Self, CalibrateError> {
        let camera_id = camera_id.into();
        if knots.len() < 2 {
            return Err(CalibrateError::TooFewSamples {
                camera_id,
                got: knots.len(),
            });
        }
        let ordered = knots
            .windows(2)
            .all(|p| p[1].0 > p[0].0 && p[1].1 >= p[0].1);
        if !ordered || knots.iter().any(|(r, m)| !r.is_finite() || !m.is_finite()) {
            return Err(CalibrateError::DegenerateRawDepth(camera_id));
        }
        Ok(Self {
            camera_id,
            knots,
            extrapolation,
        })
    }

    pub fn camera_id(&self) -> &str {
        &self.camera_id
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    pub fn extrapolation(&self) -> Extrapolation {
        self.extrapolation
    }

    pub fn with_extrapolation(mut self, mode: Extrapolation) -> Self {
        self.extrapolation = mode;
        self
    }

    fn segment(&self, i: usize, x: f64) -> f64 {
        let (x0, y0) = self.knots[i];
        let (x1, y1) = self.knots[i + 1];
        y0 + (x - x0) * (y1 - y0) / (x1 - x0)
    }

    /// Metres for a raw depth value.
    pub fn eval(&self, raw: f64) -> f64 {
        let n = self.knots.len();
        let (first, last) = (self.knots[0], self.knots[n - 1]);
        if raw <= first.0 {
            return match self.extrapolation {
                Extrapolation::Clamp => first.1,
                Extrapolation::LinearExtend => self.segment(0, raw),
            };
        }
        if raw >= last.0 {
            return match self.extrapolation {
                Extrapolation::Clamp => last.1,
                Extrapolation::LinearExtend => self.segment(n - 2, raw),
            };
        }
        // first knot with x > raw; raw lies in segment i-1
        let i = self.knots.partition_point(|&(x, _)| x <= raw);
        self.segment(i - 1, raw)
    }
}

/// Fits one camera's curve: duplicates at equal raw depth are averaged,
/// then pool-adjacent-violators (weighted by duplicate count) makes the
/// metric values non-decreasing in raw depth.
pub fn fit_reference_curve(samples: &[ReferenceSample]) -> Result<CalibrationCurve, CalibrateError> {
    let camera_id = samples
        .first()
        .map(|s| s.camera_id.clone())
        .unwrap_or_default();
    if let Some(other) = samples.iter().find(|s| s.camera_id != camera_id) {
        return Err(CalibrateError::MixedCameras(camera_id, other.camera_id.clone()));
    }
    if samples.len() < 2 {
        return Err(CalibrateError::TooFewSamples {
            camera_id,
            got: samples.len(),
        });
    }
    let mut pts: Vec<(f64, f64)> = samples
        .iter()
        .map(|s| (s.raw_depth, s.known_distance_m))
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));

    let mut raw = Vec::new();
    let mut metric = Vec::new();
    let mut weight = Vec::new();
    for (r, m) in pts {
        if raw.last() == Some(&r) {
            let k = raw.len() - 1;
            metric[k] += m;
            weight[k] += 1.0;
        } else {
            raw.push(r);
            metric.push(m);
            weight.push(1.0);
        }
    }
    for (m, w) in metric.iter_mut().zip(&weight) {
        *m /= w;
    }
    if raw.len() < 2 {
        return Err(CalibrateError::DegenerateRawDepth(camera_id));
    }
    let fitted = pava(&metric, &weight);
    CalibrationCurve::from_knots(
        camera_id,
        raw.into_iter().zip(fitted).collect(),
        Extrapolation::Clamp,
    )
}

/// Groups samples by camera and fits each group.
pub fn fit_curves_by_camera(
    samples: &[ReferenceSample],
) -> Result<BTreeMap<String, CalibrationCurve>, CalibrateError> {
    let mut groups: BTreeMap<String, Vec<ReferenceSample>> = BTreeMap::new();
    for s in samples {
        groups.entry(s.camera_id.clone()).or_default().push(s.clone());
    }
    groups
        .into_iter()
        .map(|(id, g)| fit_reference_curve(&g).map(|c| (id, c)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DepthMode<'a> {
    /// The depth model already predicts metres.
    Direct,
    Calibrated {
        curve: &'a CalibrationCurve,
        alignment: ScaleShift,
    },
}

/// Converts an observed depth map to metres.
///
/// Calibrated mode maps each pixel `v` to `curve(s * v + t)`. Zero pixels
/// are depth holes and stay zero so downstream sampling can skip them.
pub fn metric_depth(obs: &DepthMap, mode: DepthMode<'_>) -> Result<DepthMap, CalibrateError> {
    match mode {
        DepthMode::Direct => Ok(obs.clone().with_unit(DepthUnit::Metric)),
        DepthMode::Calibrated { curve, alignment } => {
            let ScaleShift { s, t, .. } = alignment;
            Ok(obs.map_values(DepthUnit::Metric, |v| {
                if v == 0.0 {
                    0.0
                } else {
                    curve.eval(s * f64::from(v) + t).max(0.0) as f32
                }
            })?)
        }
    }
}

/// Looks up the frame camera's curve; `MissingCurve` if there is none.
pub fn curve_for<'a>(
    curves: &'a BTreeMap<String, CalibrationCurve>,
    camera_id: &str,
) -> Result<&'a CalibrationCurve, CalibrateError> {
    curves
        .get(camera_id)
        .ok_or_else(|| CalibrateError::MissingCurve(camera_id.to_string()))
}

/// Audit table: `camera_id,raw_depth,metric_m`, one row per knot.
pub fn write_curve_table<'a>(curves: impl IntoIterator<Item = &'a CalibrationCurve>) -> String {
    write_csv(
        &["camera_id", "raw_depth", "metric_m"],
        curves.into_iter().flat_map(|c| {
            c.knots
                .iter()
                .map(|(r, m)| vec![c.camera_id.clone(), r.to_string(), m.to_string()])
                .collect::<Vec<_>>()
        }),
    )
}
