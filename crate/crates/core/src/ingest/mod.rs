//! On-disk artifact formats: PFM depth maps, PGM masks, detector JSON,
//! CSV tables, and the run manifest tying them together.

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::model::ModelError;

mod detections;
mod header;
mod manifest;
mod pfm;
mod pgm;
mod tables;

pub use detections::{detection_frame_ids, parse_detections, DetectionFilter, DEFAULT_ANIMAL_CATEGORY};
pub use manifest::{read_depth_map, read_mask, ArtifactBundle, FrameEntry, Manifest, ReferenceDepthEntry};
pub use pfm::{parse_pfm, write_pfm};
pub use pgm::{parse_pgm_mask, write_pgm_mask};
pub use tables::{
    parse_cameras, parse_frame_distances, parse_observations, parse_references, parse_tables,
    write_cameras, write_csv, write_observations, FrameDistance, Table, TableKind,
    SECONDS_PER_DAY,
};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("big-endian PFM (positive scale) is not supported")]
    UnsupportedEndianness,
    #[error("payload size mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite pixel at index {index}")]
    NonFinitePixel { index: usize },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid bbox {bbox:?} in {frame_id}: {reason}")]
    InvalidBBox {
        frame_id: String,
        bbox: [f64; 4],
        reason: &'static str,
    },
    #[error("missing column {0:?}")]
    MissingColumn(String),
    #[error("row {row}, column {column}: bad number {value:?}")]
    BadNumeric {
        row: usize,
        column: String,
        value: String,
    },
    #[error("row {row}, column {column}: bad value {value:?}")]
    BadValue {
        row: usize,
        column: String,
        value: String,
    },
    #[error("duplicate camera id {0:?}")]
    DuplicateCamera(String),
    #[error("duplicate frame id {0:?}")]
    DuplicateFrame(String),
    #[error("detections reference frame {0:?} which has no depth map in the manifest")]
    UnresolvedFrame(String),
    #[error("file not found: {0}")]
    MissingFile(PathBuf),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    InFile {
        path: PathBuf,
        source: Box<IngestError>,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl IngestError {
    pub(crate) fn at(self, path: &Path) -> Self {
        IngestError::InFile {
            path: path.to_path_buf(),
            source: Box::new(self),
        }
    }
}
