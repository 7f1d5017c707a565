//! Domain types shared by the rest of the crate.
//!
//! Every constructor validates its invariants, so a value that exists is a
//! value that can be trusted downstream. Nothing in here does I/O.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Slack allowed on normalized bounding-box extents.
pub const BBOX_EPS: f64 = 1e-6;

/// Box corners this close to a pixel edge (in pixels) snap to it.
const PIXEL_SNAP: f64 = 1e-9;

/// Reference distances top out here by default.
pub const DEFAULT_MAX_REFERENCE_M: f64 = 15.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("depth map must be at least 1x1, got {width}x{height}")]
    EmptyDimensions { width: usize, height: usize },
    #[error("depth map has {got} values, expected {expected} ({width}x{height})")]
    ValueCount {
        width: usize,
        height: usize,
        expected: usize,
        got: usize,
    },
    #[error("depth value at index {index} is not finite")]
    NonFiniteDepth { index: usize },
    #[error("depth value {value} at index {index} is negative")]
    NegativeDepth { index: usize, value: f32 },
    #[error("invalid bounding box [{x}, {y}, {w}, {h}]: {reason}")]
    InvalidBBox {
        x: f64,
        y: f64,
        w: f64,
        h: f64,
        reason: &'static str,
    },
    #[error("confidence {0} outside [0, 1]")]
    InvalidConfidence(f64),
    #[error("mask has {got} pixels, expected {expected}")]
    MaskSize { expected: usize, got: usize },
    #[error("reference distance {value} m outside (0, {max}]")]
    ReferenceDistance { value: f64, max: f64 },
    #[error("raw depth {0} is not a finite non-negative number")]
    RawDepth(f64),
    #[error("camera {camera_id}: field of view {fov_rad} rad outside (0, 2pi]")]
    FieldOfView { camera_id: String, fov_rad: f64 },
    #[error("camera {camera_id}: operation time {seconds} s must be positive")]
    OperationTime { camera_id: String, seconds: f64 },
    #[error("observation distance {0} m must be positive and finite")]
    ObservationDistance(f64),
    #[error("timestamp {0} s is not finite")]
    Timestamp(f64),
    #[error("invalid survey configuration: {0}")]
    Survey(String),
    #[error("empty camera id")]
    EmptyCameraId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DepthUnit {
    /// Model output, meaning depends on the depth network.
    Raw,
    /// Metres.
    Metric,
}

/// Dense per-pixel depth for one frame, row-major with row 0 at the top.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    width: usize,
    height: usize,
    values: Vec<f32>,
    unit: DepthUnit,
}

impl DepthMap {
    pub fn new(
        width: usize,
        height: usize,
        values: Vec<f32>,
        unit: DepthUnit,
    ) -> Result<Self, ModelError> {
        if width == 0 || height == 0 {
            return Err(ModelError::EmptyDimensions { width, height });
        }
        let expected = width * height;
        if values.len() != expected {
            return Err(ModelError::ValueCount {
                width,
                height,
                expected,
                got: values.len(),
            });
        }
        for (index, &v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(ModelError::NonFiniteDepth { index });
            }
            if v < 0.0 {
                return Err(ModelError::NegativeDepth { index, value: v });
            }
        }
        Ok(Self {
            width,
            height,
            values,
            unit,
        })
    }

    pub fn filled(width: usize, height: usize, value: f32, unit: DepthUnit) -> Result<Self, ModelError> {
        Self::new(width, height, vec![value; width * height], unit)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn unit(&self) -> DepthUnit {
        self.unit
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn get(&self, row: usize, col: usize) -> f32 {
        self.values[row * self.width + col]
    }

    /// Same pixels, different unit tag.
    pub fn with_unit(mut self, unit: DepthUnit) -> Self {
        self.unit = unit;
        self
    }

    /// Applies `f` to every pixel, revalidating the result.
    pub fn map_values(
        &self,
        unit: DepthUnit,
        f: impl Fn(f32) -> f32,
    ) -> Result<Self, ModelError> {
        let values = self.values.iter().map(|&v| f(v)).collect();
        Self::new(self.width, self.height, values, unit)
    }
}

/// Normalized `[x, y, w, h]` box, origin at the top-left corner.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

/// Half-open pixel rectangle `[col0, col1) x [row0, row1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PixelRect {
    pub col0: usize,
    pub row0: usize,
    pub col1: usize,
    pub row1: usize,
}

impl PixelRect {
    pub fn is_empty(&self) -> bool {
        self.col1 <= self.col0 || self.row1 <= self.row0
    }

    pub fn area(&self) -> usize {
        if self.is_empty() {
            0
        } else {
            (self.col1 - self.col0) * (self.row1 - self.row0)
        }
    }
}

impl BBox {
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Result<Self, ModelError> {
        let bad = |reason| ModelError::InvalidBBox { x, y, w, h, reason };
        if ![x, y, w, h].iter().all(|v| v.is_finite()) {
            return Err(bad("non-finite coordinate"));
        }
        if x < -BBOX_EPS || y < -BBOX_EPS {
            return Err(bad("negative origin"));
        }
        if w <= 0.0 || h <= 0.0 {
            return Err(bad("non-positive extent"));
        }
        if x + w > 1.0 + BBOX_EPS || y + h > 1.0 + BBOX_EPS {
            return Err(bad("extends past the frame"));
        }
        Ok(Self { x, y, w, h })
    }

    /// Converts to pixels, rounding the min corner down and the max corner
    /// up so no covered pixel is lost. Clamped to the frame.
    pub fn to_pixels(&self, width: usize, height: usize) -> PixelRect {
        let fw = width as f64;
        let fh = height as f64;
        let clamp = |v: f64, hi: usize| (v.max(0.0) as usize).min(hi);
        // 0.2 + 0.4 is not 0.6
        let lo = |v: f64| (v + PIXEL_SNAP).floor();
        let up = |v: f64| (v - PIXEL_SNAP).ceil();
        PixelRect {
            col0: clamp(lo(self.x * fw), width),
            row0: clamp(lo(self.y * fh), height),
            col1: clamp(up((self.x + self.w) * fw), width),
            row1: clamp(up((self.y + self.h) * fh), height),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub frame_id: String,
    pub bbox: BBox,
    pub confidence: f64,
    /// Position of this detection within its image entry in the source document.
    pub index: usize,
}

impl Detection {
    pub fn new(
        frame_id: impl Into<String>,
        bbox: BBox,
        confidence: f64,
        index: usize,
    ) -> Result<Self, ModelError> {
        if !(0.0..=1.0).contains(&confidence) {
            return Err(ModelError::InvalidConfidence(confidence));
        }
        Ok(Self {
            frame_id: frame_id.into(),
            bbox,
            confidence,
            index,
        })
    }
}

/// Binary per-pixel membership for one animal instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstanceMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl InstanceMask {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self, ModelError> {
        if width == 0 || height == 0 {
            return Err(ModelError::EmptyDimensions { width, height });
        }
        if bits.len() != width * height {
            return Err(ModelError::MaskSize {
                expected: width * height,
                got: bits.len(),
            });
        }
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn contains(&self, row: usize, col: usize) -> bool {
        self.bits[row * self.width + col]
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// An instance mask needs at least one member pixel.
    pub fn is_valid_instance(&self) -> bool {
        self.bits.iter().any(|&b| b)
    }

    pub fn matches(&self, depth: &DepthMap) -> bool {
        self.width == depth.width() && self.height == depth.height()
    }

    /// Member pixels as `(row, col)`, in row-major order.
    pub fn members(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let w = self.width;
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(i, _)| (i / w, i % w))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSample {
    pub camera_id: String,
    pub known_distance_m: f64,
    pub raw_depth: f64,
    pub ref_depth_map: Option<DepthMap>,
}

impl ReferenceSample {
    pub fn new(
        camera_id: impl Into<String>,
        known_distance_m: f64,
        raw_depth: f64,
    ) -> Result<Self, ModelError> {
        Self::with_max_distance(camera_id, known_distance_m, raw_depth, DEFAULT_MAX_REFERENCE_M)
    }

    pub fn with_max_distance(
        camera_id: impl Into<String>,
        known_distance_m: f64,
        raw_depth: f64,
        max_distance_m: f64,
    ) -> Result<Self, ModelError> {
        let camera_id = camera_id.into();
        if camera_id.is_empty() {
            return Err(ModelError::EmptyCameraId);
        }
        if !(known_distance_m > 0.0 && known_distance_m <= max_distance_m) {
            return Err(ModelError::ReferenceDistance {
                value: known_distance_m,
                max: max_distance_m,
            });
        }
        if !(raw_depth.is_finite() && raw_depth >= 0.0) {
            return Err(ModelError::RawDepth(raw_depth));
        }
        Ok(Self {
            camera_id,
            known_distance_m,
            raw_depth,
            ref_depth_map: None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Camera {
    pub camera_id: String,
    /// Horizontal field of view, radians.
    pub fov_rad: f64,
    pub operation_time_s: f64,
    pub location: Option<String>,
}

impl Camera {
    pub fn new(
        camera_id: impl Into<String>,
        fov_rad: f64,
        operation_time_s: f64,
    ) -> Result<Self, ModelError> {
        let camera_id = camera_id.into();
        if camera_id.is_empty() {
            return Err(ModelError::EmptyCameraId);
        }
        if !(fov_rad > 0.0 && fov_rad <= 2.0 * PI) {
            return Err(ModelError::FieldOfView { camera_id, fov_rad });
        }
        if !(operation_time_s > 0.0 && operation_time_s.is_finite()) {
            return Err(ModelError::OperationTime {
                camera_id,
                seconds: operation_time_s,
            });
        }
        Ok(Self {
            camera_id,
            fov_rad,
            operation_time_s,
            location: None,
        })
    }

    pub fn with_location(mut self, location: impl Into<String>) -> Self {
        self.location = Some(location.into());
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Source {
    Manual,
    Model,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Source::Manual => "manual",
            Source::Model => "model",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub camera_id: String,
    /// Seconds since survey start.
    pub timestamp_s: f64,
    pub distance_m: f64,
    pub source: Source,
}

impl Observation {
    pub fn new(
        camera_id: impl Into<String>,
        timestamp_s: f64,
        distance_m: f64,
        source: Source,
    ) -> Result<Self, ModelError> {
        let camera_id = camera_id.into();
        if camera_id.is_empty() {
            return Err(ModelError::EmptyCameraId);
        }
        if !timestamp_s.is_finite() {
            return Err(ModelError::Timestamp(timestamp_s));
        }
        if !(distance_m > 0.0 && distance_m.is_finite()) {
            return Err(ModelError::ObservationDistance(distance_m));
        }
        Ok(Self {
            camera_id,
            timestamp_s,
            distance_m,
            source,
        })
    }
}

/// Observations plus the per-camera survey metadata they were collected under.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DistanceDataset {
    pub cameras: Vec<Camera>,
    pub observations: Vec<Observation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurveyConfig {
    /// Truncation radius, metres.
    pub w_m: f64,
    /// Bin edges; strictly increasing, last one equal to `w_m`.
    pub cutpoints_m: Vec<f64>,
    pub snapshot_interval_s: f64,
    pub availability: f64,
    pub area_km2: f64,
}

impl Default for SurveyConfig {
    fn default() -> Self {
        Self {
            w_m: 15.0,
            cutpoints_m: (0..=15).map(f64::from).collect(),
            snapshot_interval_s: 2.0,
            availability: 1.0,
            area_km2: 1.0,
        }
    }
}

impl SurveyConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        let err = |m: String| Err(ModelError::Survey(m));
        if !(self.w_m > 0.0 && self.w_m.is_finite()) {
            return err(format!("truncation radius {} must be positive", self.w_m));
        }
        if self.cutpoints_m.len() < 2 {
            return err("need at least two cutpoints".into());
        }
        if self.cutpoints_m[0] < 0.0 {
            return err("first cutpoint must be >= 0".into());
        }
        if self.cutpoints_m.windows(2).any(|p| !(p[1] > p[0])) {
            return err("cutpoints must be strictly increasing".into());
        }
        let last = *self.cutpoints_m.last().unwrap();
        if (last - self.w_m).abs() > 1e-9 * self.w_m.max(1.0) {
            return err(format!("last cutpoint {last} must equal w_m {}", self.w_m));
        }
        if !(self.snapshot_interval_s > 0.0 && self.snapshot_interval_s.is_finite()) {
            return err("snapshot interval must be positive".into());
        }
        if !(self.availability > 0.0 && self.availability <= 1.0) {
            return err(format!("availability {} outside (0, 1]", self.availability));
        }
        if !(self.area_km2 > 0.0 && self.area_km2.is_finite()) {
            return err("area must be positive".into());
        }
        Ok(())
    }

    /// Equal-width bins from `left` to `w_m`.
    pub fn with_uniform_bins(w_m: f64, left: f64, n_bins: usize) -> Self {
        let step = (w_m - left) / n_bins as f64;
        let mut cutpoints_m: Vec<f64> = (0..n_bins).map(|i| left + step * i as f64).collect();
        cutpoints_m.push(w_m);
        Self {
            w_m,
            cutpoints_m,
            ..Self::default()
        }
    }

    pub fn left_truncation_m(&self) -> f64 {
        self.cutpoints_m[0]
    }
}
