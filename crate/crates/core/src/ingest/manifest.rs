//! Run manifest: a JSON document naming every artifact file of a run.
//!
//! ```json
//! {
//!   "cameras": "cameras.csv",
//!   "observations": "observations.csv",
//!   "references": "references.csv",
//!   "detections": "detections.json",
//!   "frames": [
//!     {"frame_id": "c1/0001.jpg", "camera_id": "c1", "timestamp_s": 0.0,
//!      "depth": "depth/c1_0001.pfm", "masks": ["masks/c1_0001_0.pgm", null]}
//!   ],
//!   "reference_depths": [{"camera_id": "c1", "depth": "ref/c1.pfm"}]
//! }
//! ```
//!
//! Relative paths resolve against the manifest's directory. `masks[i]`
//! belongs to detection `i` of the frame's entry in the detections document.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::detections::{detection_frame_ids, parse_detections, DetectionFilter};
use super::pfm::parse_pfm;
use super::pgm::parse_pgm_mask;
use super::tables::{parse_cameras, parse_observations, parse_references};
use super::IngestError;
use crate::model::{Camera, DepthMap, Detection, InstanceMask, Observation, ReferenceSample};

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub cameras: Option<PathBuf>,
    pub observations: Option<PathBuf>,
    pub references: Option<PathBuf>,
    pub detections: Option<PathBuf>,
    #[serde(default)]
    pub frames: Vec<FrameEntry>,
    #[serde(default)]
    pub reference_depths: Vec<ReferenceDepthEntry>,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FrameEntry {
    pub frame_id: String,
    pub camera_id: String,
    #[serde(default)]
    pub timestamp_s: f64,
    pub depth: PathBuf,
    #[serde(default)]
    pub masks: Vec<Option<PathBuf>>,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ReferenceDepthEntry {
    pub camera_id: String,
    pub depth: PathBuf,
}

impl Manifest {
    pub fn parse(text: &str) -> Result<Self, IngestError> {
        serde_json::from_str(text).map_err(|e| IngestError::Parse(format!("manifest: {e}")))
    }
}

/// Everything a run needs, with paths resolved and cross-references checked.
/// Depth maps and masks stay on disk until asked for.
#[derive(Debug, Clone)]
pub struct ArtifactBundle {
    pub frames: Vec<FrameEntry>,
    /// Retained detections per frame id, in document order.
    pub detections: BTreeMap<String, Vec<Detection>>,
    pub cameras: Option<Vec<Camera>>,
    pub observations: Option<Vec<Observation>>,
    pub references: Option<Vec<ReferenceSample>>,
    pub reference_depths: BTreeMap<String, PathBuf>,
}

fn read_bytes(path: &Path) -> Result<Vec<u8>, IngestError> {
    fs::read(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn read_text(path: &Path) -> Result<String, IngestError> {
    fs::read_to_string(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_depth_map(path: &Path) -> Result<DepthMap, IngestError> {
    parse_pfm(&read_bytes(path)?).map_err(|e| e.at(path))
}

pub fn read_mask(path: &Path) -> Result<InstanceMask, IngestError> {
    parse_pgm_mask(&read_bytes(path)?).map_err(|e| e.at(path))
}

impl ArtifactBundle {
    pub fn load(manifest_path: &Path, filter: &DetectionFilter, max_reference_m: f64) -> Result<Self, IngestError> {
        let manifest = Manifest::parse(&read_text(manifest_path)?)?;
        let base = manifest_path.parent().unwrap_or(Path::new("."));
        Self::from_manifest(manifest, base, filter, max_reference_m)
    }

    pub fn from_manifest(
        manifest: Manifest,
        base: &Path,
        filter: &DetectionFilter,
        max_reference_m: f64,
    ) -> Result<Self, IngestError> {
        let resolve = |p: &Path| -> Result<PathBuf, IngestError> {
            let full = if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
            if full.is_file() {
                Ok(full)
            } else {
                Err(IngestError::MissingFile(full))
            }
        };

        let mut frames = Vec::with_capacity(manifest.frames.len());
        let mut frame_ids = BTreeMap::new();
        for mut f in manifest.frames {
            f.depth = resolve(&f.depth)?;
            for m in f.masks.iter_mut().flatten() {
                *m = resolve(m)?;
            }
            if frame_ids.insert(f.frame_id.clone(), ()).is_some() {
                return Err(IngestError::DuplicateFrame(f.frame_id));
            }
            frames.push(f);
        }

        let mut detections: BTreeMap<String, Vec<Detection>> = BTreeMap::new();
        if let Some(p) = &manifest.detections {
            let text = read_text(&resolve(p)?)?;
            for id in detection_frame_ids(&text)? {
                if !frame_ids.contains_key(&id) {
                    return Err(IngestError::UnresolvedFrame(id));
                }
            }
            for d in parse_detections(&text, filter)? {
                detections.entry(d.frame_id.clone()).or_default().push(d);
            }
        }

        let cameras = match &manifest.cameras {
            Some(p) => Some(parse_cameras(&read_text(&resolve(p)?)?)?),
            None => None,
        };
        let observations = match &manifest.observations {
            Some(p) => Some(parse_observations(&read_text(&resolve(p)?)?)?),
            None => None,
        };
        let references = match &manifest.references {
            Some(p) => Some(parse_references(&read_text(&resolve(p)?)?, max_reference_m)?),
            None => None,
        };
        let mut reference_depths = BTreeMap::new();
        for r in &manifest.reference_depths {
            reference_depths.insert(r.camera_id.clone(), resolve(&r.depth)?);
        }

        Ok(Self {
            frames,
            detections,
            cameras,
            observations,
            references,
            reference_depths,
        })
    }

    pub fn detections_for(&self, frame_id: &str) -> &[Detection] {
        self.detections.get(frame_id).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Masks for the frame's retained detections, aligned with
    /// [`Self::detections_for`]. `None` where no mask file was listed.
    pub fn masks_for(&self, frame: &FrameEntry) -> Result<Vec<Option<InstanceMask>>, IngestError> {
        self.detections_for(&frame.frame_id)
            .iter()
            .map(|d| match frame.masks.get(d.index).and_then(Option::as_ref) {
                Some(p) => read_mask(p).map(Some),
                None => Ok(None),
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_manifest() {
        let m = Manifest::parse(r#"{"frames": []}"#).unwrap();
        assert!(m.frames.is_empty());
        assert!(m.detections.is_none());
    }

    #[test]
    fn rejects_unknown_keys() {
        assert!(Manifest::parse(r#"{"frames": [], "typo": 1}"#).is_err());
    }

    #[test]
    fn frame_defaults() {
        let m = Manifest::parse(
            r#"{"frames": [{"frame_id": "f", "camera_id": "c", "depth": "d.pfm"}]}"#,
        )
        .unwrap();
        assert_eq!(m.frames[0].timestamp_s, 0.0);
        assert!(m.frames[0].masks.is_empty());
    }
}
