//! Detector output documents:
//! `{"images":[{"file": id, "detections":[{"category": c, "conf": p, "bbox":[x,y,w,h]}]}]}`.

use serde::Deserialize;

use super::IngestError;
use crate::model::{BBox, Detection, ModelError};

pub const DEFAULT_ANIMAL_CATEGORY: &str = "1";

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionFilter {
    pub min_conf: f64,
    pub animal_category: String,
}

impl Default for DetectionFilter {
    fn default() -> Self {
        Self {
            min_conf: 0.5,
            animal_category: DEFAULT_ANIMAL_CATEGORY.to_string(),
        }
    }
}

#[derive(Deserialize)]
struct Document {
    images: Vec<ImageEntry>,
}

#[derive(Deserialize)]
struct ImageEntry {
    file: String,
    #[serde(default)]
    detections: Option<Vec<RawDetection>>,
}

#[derive(Deserialize)]
struct RawDetection {
    category: serde_json::Value,
    conf: f64,
    bbox: [f64; 4],
}

fn category_str(v: &serde_json::Value) -> String {
    match v {
        serde_json::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Parses a detections document, keeping animal detections with
/// `conf >= min_conf`. Order within each image is preserved.
///
/// Every bbox is validated, including the ones that end up filtered out.
pub fn parse_detections(text: &str, filter: &DetectionFilter) -> Result<Vec<Detection>, IngestError> {
    let doc: Document =
        serde_json::from_str(text).map_err(|e| IngestError::Parse(e.to_string()))?;
    let mut out = Vec::new();
    for image in doc.images {
        for (index, raw) in image.detections.unwrap_or_default().into_iter().enumerate() {
            let [x, y, w, h] = raw.bbox;
            let bbox = BBox::new(x, y, w, h).map_err(|e| match e {
                ModelError::InvalidBBox { reason, .. } => IngestError::InvalidBBox {
                    frame_id: image.file.clone(),
                    bbox: raw.bbox,
                    reason,
                },
                other => other.into(),
            })?;
            if category_str(&raw.category) != filter.animal_category || raw.conf < filter.min_conf {
                continue;
            }
            out.push(Detection::new(image.file.clone(), bbox, raw.conf, index)?);
        }
    }
    Ok(out)
}

/// Image ids listed in a detections document, in document order.
pub fn detection_frame_ids(text: &str) -> Result<Vec<String>, IngestError> {
    let doc: Document =
        serde_json::from_str(text).map_err(|e| IngestError::Parse(e.to_string()))?;
    Ok(doc.images.into_iter().map(|i| i.file).collect())
}
