use std::path::Path;

use anyhow::{anyhow, Result};
use camdist_core::calibrate::{fit_curves_by_camera, write_curve_table};
use camdist_core::ingest::ArtifactBundle;

use crate::config::RunConfig;
use crate::output::{ensure_dir, write_table, Provenance};

pub fn run(manifest: &Path, out: &Path, cfg: &RunConfig, prov: &Provenance) -> Result<()> {
    let bundle = ArtifactBundle::load(manifest, &cfg.detection_filter(), cfg.distances.max_reference_m)?;
    let refs = bundle
        .references
        .as_ref()
        .ok_or_else(|| anyhow!("MissingInput: manifest {} lists no reference table", manifest.display()))?;
    let curves: Vec<_> = fit_curves_by_camera(refs)?
        .into_values()
        .map(|c| c.with_extrapolation(cfg.distances.extrapolation))
        .collect();
    ensure_dir(out)?;
    let path = write_table(out, "calibration_curves.csv", prov, &write_curve_table(&curves))?;
    eprintln!("calibrated {} camera(s) -> {}", curves.len(), path.display());
    for c in &curves {
        eprintln!("  {}: {} knots", c.camera_id(), c.knots().len());
    }
    Ok(())
}
