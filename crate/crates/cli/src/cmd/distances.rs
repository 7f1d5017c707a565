use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context, Result};
use camdist_core::calibrate::{
    align_scale_shift, curve_for, fit_curves_by_camera, metric_depth, CalibrationCurve, DepthMode, ScaleShift,
};
use camdist_core::distance::{estimate_frame, write_distance_table, DistanceEstimate, FrameArtifacts, FrameContext};
use camdist_core::ingest::{read_depth_map, write_observations, ArtifactBundle, FrameEntry};
use camdist_core::model::{InstanceMask, Observation, Source};
use rayon::prelude::*;

use crate::config::{DepthModeKind, RunConfig};
use crate::output::{ensure_dir, write_table, Provenance};

/// Pixels that belong to some detection (its box or mask) and so must not
/// drive the alignment to the background reference.
fn animal_pixels(width: usize, height: usize, frame: &FrameArtifacts) -> Result<InstanceMask> {
    let mut bits = vec![false; width * height];
    for d in &frame.detections {
        let r = d.bbox.to_pixels(width, height);
        for row in r.row0..r.row1 {
            for col in r.col0..r.col1 {
                bits[row * width + col] = true;
            }
        }
    }
    for m in frame.masks.iter().flatten().filter(|m| m.width() == width && m.height() == height) {
        for (row, col) in m.members() {
            bits[row * width + col] = true;
        }
    }
    Ok(InstanceMask::new(width, height, bits)?)
}

fn process(
    bundle: &ArtifactBundle,
    frame: &FrameEntry,
    cfg: &RunConfig,
    curves: Option<&BTreeMap<String, CalibrationCurve>>,
) -> Result<(FrameContext, Vec<DistanceEstimate>)> {
    let raw = read_depth_map(&frame.depth)?;
    let context = FrameContext {
        frame_id: frame.frame_id.clone(),
        camera_id: frame.camera_id.clone(),
        timestamp_s: frame.timestamp_s,
    };
    let mut artifacts = FrameArtifacts {
        context: context.clone(),
        depth: raw,
        detections: bundle.detections_for(&frame.frame_id).to_vec(),
        masks: bundle.masks_for(frame)?,
    };
    let mode = match curves {
        None => DepthMode::Direct,
        Some(curves) => {
            let curve = curve_for(curves, &frame.camera_id)?;
            let alignment = match bundle.reference_depths.get(&frame.camera_id) {
                Some(p) => {
                    let reference = read_depth_map(p)?;
                    let exclude = animal_pixels(artifacts.depth.width(), artifacts.depth.height(), &artifacts)?;
                    align_scale_shift(&artifacts.depth, &reference, &exclude, cfg.distances.trim_frac)?
                }
                None => ScaleShift::identity(),
            };
            DepthMode::Calibrated { curve, alignment }
        }
    };
    artifacts.depth = metric_depth(&artifacts.depth, mode)?;
    Ok((context, estimate_frame(&artifacts, cfg.distances.strategy)?))
}

pub fn run(manifest: &Path, out: &Path, cfg: &RunConfig, prov: &Provenance) -> Result<()> {
    let bundle = ArtifactBundle::load(manifest, &cfg.detection_filter(), cfg.distances.max_reference_m)?;
    let curves = match cfg.distances.depth_mode {
        DepthModeKind::Direct => None,
        DepthModeKind::Calibrated => {
            let refs = bundle
                .references
                .as_ref()
                .context("MissingInput: calibrated depth mode needs a reference table in the manifest")?;
            let fitted: BTreeMap<_, _> = fit_curves_by_camera(refs)?
                .into_iter()
                .map(|(k, c)| (k, c.with_extrapolation(cfg.distances.extrapolation)))
                .collect();
            Some(fitted)
        }
    };

    let mut frames: Vec<&FrameEntry> = bundle.frames.iter().collect();
    frames.sort_by(|a, b| a.frame_id.cmp(&b.frame_id));
    let results: Vec<_> = frames
        .par_iter()
        .map(|f| process(&bundle, f, cfg, curves.as_ref()))
        .collect();

    let mut estimates = Vec::new();
    let mut observations = Vec::new();
    let mut failed = 0usize;
    for (frame, res) in frames.iter().zip(results) {
        match res {
            Ok((ctx, est)) => {
                for e in &est {
                    observations.push(Observation::new(&*e.camera_id, ctx.timestamp_s, e.distance_m, Source::Model)?);
                }
                estimates.extend(est);
            }
            Err(e) => {
                failed += 1;
                eprintln!("frame {}: {e:#}", frame.frame_id);
            }
        }
    }
    eprintln!(
        "{} frame(s), {failed} failed, {} distance(s)",
        frames.len(),
        estimates.len()
    );
    if !frames.is_empty() && failed == frames.len() {
        bail!("all {failed} frame(s) failed");
    }
    ensure_dir(out)?;
    write_table(out, "distances.csv", prov, &write_distance_table(&estimates))?;
    write_table(out, "observations.csv", prov, &write_observations(&observations))?;
    Ok(())
}
