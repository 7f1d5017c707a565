//! Least-squares scale/shift alignment of an observed depth map to the
//! camera's reference depth map, ignoring masked (animal) pixels.

use super::CalibrateError;
use crate::model::{DepthMap, InstanceMask};

pub const MIN_ALIGN_PIXELS: usize = 16;

/// `ref ~ s * obs + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleShift {
    pub s: f64,
    pub t: f64,
    /// Share of non-excluded pixels kept in the final fit.
    pub inlier_fraction: f64,
}

impl ScaleShift {
    pub fn identity() -> Self {
        Self {
            s: 1.0,
            t: 0.0,
            inlier_fraction: 1.0,
        }
    }
}

fn ols(pairs: &[(f64, f64)]) -> Result<(f64, f64), CalibrateError> {
    let n = pairs.len() as f64;
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for &(x, y) in pairs {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let sq: f64 = pairs.iter().map(|p| p.0 * p.0).sum();
    if !(sxx > 1e-12 * sq) {
        return Err(CalibrateError::DegenerateVariance);
    }
    let s = sxy / sxx;
    Ok((s, my - s * mx))
}

/// Fits `(s, t)` minimizing `sum (s * obs_i + t - ref_i)^2` over pixels not
/// in `exclude`. With `trim_frac > 0` the `floor(trim_frac * n)` largest
/// absolute residuals of that first fit are dropped and the fit is redone once.
pub fn align_scale_shift(
    obs: &DepthMap,
    reference: &DepthMap,
    exclude: &InstanceMask,
    trim_frac: f64,
) -> Result<ScaleShift, CalibrateError> {
    if obs.width() != reference.width() || obs.height() != reference.height() {
        return Err(CalibrateError::DimensionMismatch(format!(
            "observed {}x{} vs reference {}x{}",
            obs.width(),
            obs.height(),
            reference.width(),
            reference.height()
        )));
    }
    if !exclude.matches(obs) {
        return Err(CalibrateError::DimensionMismatch(format!(
            "mask {}x{} vs depth {}x{}",
            exclude.width(),
            exclude.height(),
            obs.width(),
            obs.height()
        )));
    }
    if !(0.0..0.5).contains(&trim_frac) {
        return Err(CalibrateError::TrimFraction(trim_frac));
    }
    let pairs: Vec<(f64, f64)> = obs
        .values()
        .iter()
        .zip(reference.values())
        .zip(exclude.bits())
        .filter(|(_, &excluded)| !excluded)
        .map(|((&o, &r), _)| (f64::from(o), f64::from(r)))
        .collect();
    let n = pairs.len();
    if n < MIN_ALIGN_PIXELS {
        return Err(CalibrateError::InsufficientPixels {
            got: n,
            need: MIN_ALIGN_PIXELS,
        });
    }
    let (s0, t0) = ols(&pairs)?;
    let n_drop = (trim_frac * n as f64).floor() as usize;
    let (s, t, kept) = if n_drop == 0 {
        (s0, t0, n)
    } else {
        let mut order: Vec<(f64, usize)> = pairs
            .iter()
            .enumerate()
            .map(|(i, &(x, y))| ((s0 * x + t0 - y).abs(), i))
            .collect();
        order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let kept: Vec<(f64, f64)> = order[..n - n_drop].iter().map(|&(_, i)| pairs[i]).collect();
        let (s, t) = ols(&kept)?;
        (s, t, kept.len())
    };
    if !(s > 0.0) || !s.is_finite() {
        return Err(CalibrateError::NonPositiveScale(s));
    }
    Ok(ScaleShift {
        s,
        t,
        inlier_fraction: kept as f64 / n as f64,
    })
}
