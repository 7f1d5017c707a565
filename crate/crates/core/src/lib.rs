//! Camera-trap distance estimation from monocular depth maps, and
//! distance-sampling density estimation from the resulting distances.

pub mod calibrate;
pub mod ctds;
pub mod distance;
pub mod eval;
pub mod ingest;
pub mod model;
pub mod sim;
pub mod stats;

pub use model::{
    BBox, Camera, DepthMap, DepthUnit, Detection, DistanceDataset, InstanceMask, ModelError, Observation,
    ReferenceSample, Source, SurveyConfig,
};
