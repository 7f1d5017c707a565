//! One animal-to-camera distance per localisation.
//!
//! Two strategies over a metric depth map:
//! - [`Strategy::BBoxP20`]: 20th percentile of the non-zero depths inside
//!   the detection box (linear interpolation between closest ranks).
//! - [`Strategy::SegCentre`]: depth at the mask's geometric centre, falling
//!   back to the nearest member pixel when the centre lies outside a
//!   concave mask (ties: smaller row, then smaller column).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::write_csv;
use crate::model::{DepthMap, DepthUnit, Detection, InstanceMask, ModelError, Observation, Source};
use crate::stats::percentile_sorted;

pub const BBOX_PERCENTILE: f64 = 0.2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DistanceError {
    #[error("frame {0}: bounding box covers no pixels")]
    EmptyBox(String),
    #[error("frame {0}: every depth inside the box is zero")]
    AllPixelsZero(String),
    #[error("frame {0}: instance mask is empty")]
    EmptyMask(String),
    #[error("frame {frame_id}: mask {mask_w}x{mask_h} does not match depth {depth_w}x{depth_h}")]
    DimensionMismatch {
        frame_id: String,
        mask_w: usize,
        mask_h: usize,
        depth_w: usize,
        depth_h: usize,
    },
    #[error("frame {0}: depth at mask centre is zero")]
    ZeroDepthAtCentre(String),
    #[error("frame {0}: depth map is not metric")]
    NotMetric(String),
    #[error("frame {frame_id}: detection {index} has no instance mask")]
    MissingMask { frame_id: String, index: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Strategy {
    #[default]
    #[serde(rename = "bbox-p20")]
    BBoxP20,
    #[serde(rename = "seg-centre")]
    SegCentre,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::BBoxP20 => "bbox-p20",
            Strategy::SegCentre => "seg-centre",
        })
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "bbox-p20" | "bbox" => Ok(Strategy::BBoxP20),
            "seg-centre" | "seg-center" | "seg" => Ok(Strategy::SegCentre),
            other => Err(format!("unknown strategy {other:?} (bbox-p20 | seg-centre)")),
        }
    }
}

/// Where a frame came from.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameContext {
    pub frame_id: String,
    pub camera_id: String,
    pub timestamp_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistanceEstimate {
    pub frame_id: String,
    pub camera_id: String,
    pub strategy: Strategy,
    pub distance_m: f64,
    pub n_pixels_used: usize,
}

fn require_metric(depth: &DepthMap, ctx: &FrameContext) -> Result<(), DistanceError> {
    if depth.unit() != DepthUnit::Metric {
        return Err(DistanceError::NotMetric(ctx.frame_id.clone()));
    }
    Ok(())
}

pub fn distance_bbox(
    depth: &DepthMap,
    det: &Detection,
    ctx: &FrameContext,
) -> Result<DistanceEstimate, DistanceError> {
    require_metric(depth, ctx)?;
    let rect = det.bbox.to_pixels(depth.width(), depth.height());
    if rect.is_empty() {
        return Err(DistanceError::EmptyBox(ctx.frame_id.clone()));
    }
    let mut vals = Vec::with_capacity(rect.area());
    for row in rect.row0..rect.row1 {
        for col in rect.col0..rect.col1 {
            let v = depth.get(row, col);
            if v > 0.0 {
                vals.push(f64::from(v));
            }
        }
    }
    if vals.is_empty() {
        return Err(DistanceError::AllPixelsZero(ctx.frame_id.clone()));
    }
    vals.sort_by(f64::total_cmp);
    let distance_m = percentile_sorted(&vals, BBOX_PERCENTILE).expect("non-empty");
    Ok(DistanceEstimate {
        frame_id: ctx.frame_id.clone(),
        camera_id: ctx.camera_id.clone(),
        strategy: Strategy::BBoxP20,
        distance_m,
        n_pixels_used: vals.len(),
    })
}

/// Pixel used by the centre rule: rounded centroid, or the nearest member
/// pixel if the centroid is not a member. `None` for an empty mask.
pub fn mask_centre(mask: &InstanceMask) -> Option<(usize, usize)> {
    let mut n = 0usize;
    let (mut sr, mut sc) = (0f64, 0f64);
    for (r, c) in mask.members() {
        n += 1;
        sr += r as f64;
        sc += c as f64;
    }
    if n == 0 {
        return None;
    }
    let cr = (sr / n as f64).round() as usize;
    let cc = (sc / n as f64).round() as usize;
    if mask.contains(cr, cc) {
        return Some((cr, cc));
    }
    // members() is row-major, so the first strict minimum wins ties
    let mut best = None;
    let mut best_d = usize::MAX;
    for (r, c) in mask.members() {
        let d = r.abs_diff(cr).pow(2) + c.abs_diff(cc).pow(2);
        if d < best_d {
            best_d = d;
            best = Some((r, c));
        }
    }
    best
}

pub fn distance_seg(
    depth: &DepthMap,
    mask: &InstanceMask,
    ctx: &FrameContext,
) -> Result<DistanceEstimate, DistanceError> {
    require_metric(depth, ctx)?;
    if !mask.matches(depth) {
        return Err(DistanceError::DimensionMismatch {
            frame_id: ctx.frame_id.clone(),
            mask_w: mask.width(),
            mask_h: mask.height(),
            depth_w: depth.width(),
            depth_h: depth.height(),
        });
    }
    let (r, c) = mask_centre(mask).ok_or_else(|| DistanceError::EmptyMask(ctx.frame_id.clone()))?;
    let v = depth.get(r, c);
    if v <= 0.0 {
        return Err(DistanceError::ZeroDepthAtCentre(ctx.frame_id.clone()));
    }
    Ok(DistanceEstimate {
        frame_id: ctx.frame_id.clone(),
        camera_id: ctx.camera_id.clone(),
        strategy: Strategy::SegCentre,
        distance_m: f64::from(v),
        n_pixels_used: 1,
    })
}

/// All artifacts of one frame, with the depth already in metres.
#[derive(Debug, Clone)]
pub struct FrameArtifacts {
    pub context: FrameContext,
    pub depth: DepthMap,
    /// Detections already filtered by confidence and category.
    pub detections: Vec<Detection>,
    /// Aligned with `detections`; only needed for [`Strategy::SegCentre`].
    pub masks: Vec<Option<InstanceMask>>,
}

/// One estimate per detection, in detection order. Distances beyond the
/// truncation radius are kept; truncation happens at density estimation.
pub fn estimate_frame(
    frame: &FrameArtifacts,
    strategy: Strategy,
) -> Result<Vec<DistanceEstimate>, DistanceError> {
    frame
        .detections
        .iter()
        .enumerate()
        .map(|(k, det)| match strategy {
            Strategy::BBoxP20 => distance_bbox(&frame.depth, det, &frame.context),
            Strategy::SegCentre => {
                let mask = frame.masks.get(k).and_then(Option::as_ref).ok_or_else(|| {
                    DistanceError::MissingMask {
                        frame_id: frame.context.frame_id.clone(),
                        index: det.index,
                    }
                })?;
                distance_seg(&frame.depth, mask, &frame.context)
            }
        })
        .collect()
}

/// Like [`estimate_frame`], as model-sourced observations.
pub fn process_frame(
    frame: &FrameArtifacts,
    strategy: Strategy,
) -> Result<Vec<Observation>, DistanceError> {
    estimate_frame(frame, strategy)?
        .into_iter()
        .map(|e| {
            Ok(Observation::new(
                e.camera_id,
                frame.context.timestamp_s,
                e.distance_m,
                Source::Model,
            )?)
        })
        .collect()
}

/// `frame_id,camera_id,strategy,distance_m,n_pixels_used`.
pub fn write_distance_table(estimates: &[DistanceEstimate]) -> String {
    write_csv(
        &["frame_id", "camera_id", "strategy", "distance_m", "n_pixels_used"],
        estimates.iter().map(|e| {
            vec![
                e.frame_id.clone(),
                e.camera_id.clone(),
                e.strategy.to_string(),
                e.distance_m.to_string(),
                e.n_pixels_used.to_string(),
            ]
        }),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::BBox;
    use proptest::prelude::*;
    use super::Strategy;

    fn ctx() -> FrameContext {
        FrameContext {
            frame_id: "f".into(),
            camera_id: "c".into(),
            timestamp_s: 4.0,
        }
    }

    fn full_box() -> Detection {
        Detection::new("f", BBox::new(0.0, 0.0, 1.0, 1.0).unwrap(), 0.9, 0).unwrap()
    }

    fn metric(w: usize, h: usize, v: Vec<f32>) -> DepthMap {
        DepthMap::new(w, h, v, DepthUnit::Metric).unwrap()
    }

    #[test]
    fn bbox_constant_field() {
        let d = metric(4, 4, vec![7.0; 16]);
        assert_eq!(distance_bbox(&d, &full_box(), &ctx()).unwrap().distance_m, 7.0);
    }

    #[test]
    fn bbox_one_to_hundred() {
        let d = metric(10, 10, (1..=100).map(|v| v as f32).collect());
        let e = distance_bbox(&d, &full_box(), &ctx()).unwrap();
        assert!((e.distance_m - 20.8).abs() < 1e-12);
        assert_eq!(e.n_pixels_used, 100);
    }

    #[test]
    fn bbox_single_pixel_and_sub_box() {
        let d = metric(1, 1, vec![4.2]);
        assert_eq!(distance_bbox(&d, &full_box(), &ctx()).unwrap().distance_m, f64::from(4.2f32));

        // box over the right half of a 4x2 map
        let d = metric(4, 2, vec![1.0, 1.0, 5.0, 5.0, 1.0, 1.0, 5.0, 5.0]);
        let det = Detection::new("f", BBox::new(0.5, 0.0, 0.5, 1.0).unwrap(), 0.9, 0).unwrap();
        assert_eq!(distance_bbox(&d, &det, &ctx()).unwrap().distance_m, 5.0);
    }

    #[test]
    fn bbox_skips_holes_and_rejects_all_zero() {
        let d = metric(2, 2, vec![0.0, 0.0, 3.0, 0.0]);
        let e = distance_bbox(&d, &full_box(), &ctx()).unwrap();
        assert_eq!((e.distance_m, e.n_pixels_used), (3.0, 1));
        let z = metric(2, 2, vec![0.0; 4]);
        assert!(matches!(
            distance_bbox(&z, &full_box(), &ctx()),
            Err(DistanceError::AllPixelsZero(_))
        ));
    }

    #[test]
    fn bbox_requires_metric_and_pixels() {
        let raw = DepthMap::filled(2, 2, 1.0, DepthUnit::Raw).unwrap();
        assert!(matches!(
            distance_bbox(&raw, &full_box(), &ctx()),
            Err(DistanceError::NotMetric(_))
        ));
        let d = metric(4, 4, vec![1.0; 16]);
        let edge = Detection::new("f", BBox::new(1.0, 0.0, 1e-7, 0.5).unwrap(), 0.9, 0).unwrap();
        assert!(matches!(
            distance_bbox(&d, &edge, &ctx()),
            Err(DistanceError::EmptyBox(_))
        ));
    }

    #[test]
    fn seg_full_and_single_pixel() {
        let mut v = vec![1.0; 9];
        v[4] = 5.0;
        let d = metric(3, 3, v);
        let full = InstanceMask::new(3, 3, vec![true; 9]).unwrap();
        assert_eq!(distance_seg(&d, &full, &ctx()).unwrap().distance_m, 5.0);

        let mut v = vec![1.0; 9];
        v[2] = 9.3;
        let d = metric(3, 3, v);
        let mut bits = vec![false; 9];
        bits[2] = true; // (row 0, col 2)
        let single = InstanceMask::new(3, 3, bits).unwrap();
        assert_eq!(
            distance_seg(&d, &single, &ctx()).unwrap().distance_m,
            f64::from(9.3f32)
        );
    }

    #[test]
    fn seg_u_shape_falls_back_to_nearest_member() {
        // 5x5 U: columns 0 and 4 full, bottom row full, centroid lands in the hole
        let mut bits = vec![false; 25];
        for r in 0..5 {
            bits[r * 5] = true;
            bits[r * 5 + 4] = true;
        }
        for c in 0..5 {
            bits[20 + c] = true;
        }
        let mask = InstanceMask::new(5, 5, bits).unwrap();
        // members: 13; centroid row = (2*(0+1+2+3+4) + 4*3)/13 = 32/13 ~ 2.46 -> 2,
        // col = (0*5 + 4*5 + (1+2+3))/13 = 26/13 = 2 -> (2,2), not a member.
        // nearest: (4,2) at distance 2, (2,0) and (2,4) also at 2 -> row 2 wins, col 0.
        assert_eq!(mask_centre(&mask), Some((2, 0)));
        let depth = metric(5, 5, (0..25).map(|i| i as f32 + 1.0).collect());
        assert_eq!(distance_seg(&depth, &mask, &ctx()).unwrap().distance_m, 11.0);
    }

    #[test]
    fn seg_errors() {
        let d = metric(2, 2, vec![1.0; 4]);
        let empty = InstanceMask::new(2, 2, vec![false; 4]).unwrap();
        assert!(matches!(distance_seg(&d, &empty, &ctx()), Err(DistanceError::EmptyMask(_))));
        let other = InstanceMask::new(3, 2, vec![true; 6]).unwrap();
        assert!(matches!(
            distance_seg(&d, &other, &ctx()),
            Err(DistanceError::DimensionMismatch { .. })
        ));
    }

    fn frame(dets: usize, masks: bool) -> FrameArtifacts {
        let detections = (0..dets)
            .map(|i| {
                Detection::new("f", BBox::new(0.5 * i as f64, 0.0, 0.5, 1.0).unwrap(), 0.9, i).unwrap()
            })
            .collect();
        let m = InstanceMask::new(4, 1, vec![true, false, false, false]).unwrap();
        FrameArtifacts {
            context: ctx(),
            depth: metric(4, 1, vec![6.0, 6.0, 8.0, 8.0]),
            detections,
            masks: if masks { vec![Some(m); dets] } else { vec![] },
        }
    }

    #[test]
    fn process_frame_contract() {
        assert!(process_frame(&frame(0, false), Strategy::BBoxP20).unwrap().is_empty());
        let one = process_frame(&frame(1, false), Strategy::BBoxP20).unwrap();
        assert_eq!(one, vec![Observation::new("c", 4.0, 6.0, Source::Model).unwrap()]);
        let two = process_frame(&frame(2, false), Strategy::BBoxP20).unwrap();
        assert_eq!(two.iter().map(|o| o.distance_m).collect::<Vec<_>>(), vec![6.0, 8.0]);
        assert!(matches!(
            process_frame(&frame(1, false), Strategy::SegCentre),
            Err(DistanceError::MissingMask { .. })
        ));
        let seg = process_frame(&frame(1, true), Strategy::SegCentre).unwrap();
        assert_eq!(seg[0].distance_m, 6.0);
    }

    #[test]
    fn distance_table_layout() {
        let e = estimate_frame(&frame(1, false), Strategy::BBoxP20).unwrap();
        assert_eq!(
            write_distance_table(&e),
            "frame_id,camera_id,strategy,distance_m,n_pixels_used\nf,c,bbox-p20,6,2\n"
        );
    }

    proptest! {
        #[test]
        fn bbox_permutation_invariant_and_contained(
            mut vals in proptest::collection::vec(0.1f32..50.0, 1..64),
            seed in any::<u64>()
        ) {
            let n = vals.len();
            let a = distance_bbox(&metric(n, 1, vals.clone()), &full_box(), &ctx()).unwrap().distance_m;
            // deterministic shuffle
            let mut s = seed;
            for i in (1..n).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                vals.swap(i, (s >> 33) as usize % (i + 1));
            }
            let b = distance_bbox(&metric(n, 1, vals.clone()), &full_box(), &ctx()).unwrap().distance_m;
            prop_assert_eq!(a, b);
            let lo = vals.iter().cloned().fold(f32::INFINITY, f32::min) as f64;
            let hi = vals.iter().cloned().fold(0.0, f32::max) as f64;
            prop_assert!(a >= lo && a <= hi);
        }

        #[test]
        fn scaling_depth_scales_both_strategies(
            vals in proptest::collection::vec(1u32..1000, 16),
            bits in proptest::collection::vec(any::<bool>(), 16),
            k in 0u32..6
        ) {
            // powers of two keep the scaling exact in f32
            let c = (1u32 << k) as f32;
            let base: Vec<f32> = vals.iter().map(|&v| v as f32 / 8.0).collect();
            let scaled: Vec<f32> = base.iter().map(|&v| v * c).collect();
            let d1 = metric(4, 4, base);
            let d2 = metric(4, 4, scaled);
            let b1 = distance_bbox(&d1, &full_box(), &ctx()).unwrap().distance_m;
            let b2 = distance_bbox(&d2, &full_box(), &ctx()).unwrap().distance_m;
            prop_assert!((b2 - c as f64 * b1).abs() <= 1e-9 * b2);
            let mask = InstanceMask::new(4, 4, bits).unwrap();
            if mask.is_valid_instance() {
                let s1 = distance_seg(&d1, &mask, &ctx()).unwrap().distance_m;
                let s2 = distance_seg(&d2, &mask, &ctx()).unwrap().distance_m;
                prop_assert_eq!(s2, c as f64 * s1);
            }
        }
    }
}
