//! Accuracy of model distances against manual annotations.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::stats::{mean, percentile_sorted};

pub const DEFAULT_BIN_STEP_M: f64 = 0.5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("no paired distances")]
    EmptyInput,
    #[error("regression needs at least two distinct manual distances")]
    DegenerateX,
    #[error("invalid pair ({manual}, {model}): distances must be positive and finite")]
    InvalidPair { manual: f64, model: f64 },
    #[error("bin step {0} must be positive")]
    BadStep(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pair {
    pub manual_m: f64,
    pub model_m: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairedDistances {
    pub label: String,
    pairs: Vec<Pair>,
}

impl PairedDistances {
    pub fn new(label: impl Into<String>, pairs: Vec<(f64, f64)>) -> Result<Self, EvalError> {
        let pairs = pairs
            .into_iter()
            .map(|(manual, model)| {
                let ok = |v: f64| v > 0.0 && v.is_finite();
                if ok(manual) && ok(model) {
                    Ok(Pair { manual_m: manual, model_m: model })
                } else {
                    Err(EvalError::InvalidPair { manual, model })
                }
            })
            .collect::<Result<_, _>>()?;
        Ok(Self {
            label: label.into(),
            pairs,
        })
    }

    pub fn pairs(&self) -> &[Pair] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorSummary {
    pub mae_m: f64,
    pub rmse_m: f64,
    /// Mean of model minus manual; positive means overestimation.
    pub delta_avg_m: f64,
    pub n: usize,
}

pub fn error_metrics(pairs: &[Pair]) -> Result<ErrorSummary, EvalError> {
    if pairs.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let n = pairs.len() as f64;
    let (mut abs, mut sq, mut signed) = (0.0, 0.0, 0.0);
    for p in pairs {
        let d = p.model_m - p.manual_m;
        abs += d.abs();
        sq += d * d;
        signed += d;
    }
    Ok(ErrorSummary {
        mae_m: abs / n,
        rmse_m: (sq / n).sqrt(),
        delta_avg_m: signed / n,
        n: pairs.len(),
    })
}

/// Pairs sharing a snapped manual distance.
#[derive(Debug, Clone, PartialEq)]
pub struct ManualBin {
    pub manual_m: f64,
    pub pairs: Vec<Pair>,
    pub mean_model_m: f64,
    pub p05: f64,
    pub p25: f64,
    pub p75: f64,
    pub p95: f64,
}

/// Index of the nearest multiple of `step`, ties rounding up.
fn snap_index(v: f64, step: f64) -> i64 {
    // small slack so decimal inputs like 0.75 / 0.5 land on the tie
    (v / step + 0.5 + 1e-9).floor() as i64
}

pub fn group_by_manual(pairs: &[Pair], step_m: f64) -> Result<Vec<ManualBin>, EvalError> {
    if !(step_m > 0.0 && step_m.is_finite()) {
        return Err(EvalError::BadStep(step_m));
    }
    let mut groups: BTreeMap<i64, Vec<Pair>> = BTreeMap::new();
    for p in pairs {
        groups.entry(snap_index(p.manual_m, step_m)).or_default().push(*p);
    }
    Ok(groups
        .into_iter()
        .map(|(k, pairs)| {
            let mut model: Vec<f64> = pairs.iter().map(|p| p.model_m).collect();
            model.sort_by(f64::total_cmp);
            let pct = |q| percentile_sorted(&model, q).expect("non-empty bin");
            ManualBin {
                manual_m: k as f64 * step_m,
                mean_model_m: mean(&model).expect("non-empty bin"),
                p05: pct(0.05),
                p25: pct(0.25),
                p75: pct(0.75),
                p95: pct(0.95),
                pairs,
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Regression {
    pub slope: f64,
    pub intercept: f64,
}

/// Unweighted least-squares line of `y` on `x`.
pub fn regression_slope(points: &[(f64, f64)]) -> Result<Regression, EvalError> {
    if points.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for &(x, y) in points {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if sxx <= 0.0 {
        return Err(EvalError::DegenerateX);
    }
    let slope = sxy / sxx;
    Ok(Regression {
        slope,
        intercept: my - slope * mx,
    })
}

/// Regression over bin means, or over the raw pairs with `raw_pairs`.
pub fn binned_regression(pairs: &[Pair], step_m: f64, raw_pairs: bool) -> Result<Regression, EvalError> {
    if raw_pairs {
        let pts: Vec<_> = pairs.iter().map(|p| (p.manual_m, p.model_m)).collect();
        return regression_slope(&pts);
    }
    let bins = group_by_manual(pairs, step_m)?;
    let pts: Vec<_> = bins.iter().map(|b| (b.manual_m, b.mean_model_m)).collect();
    regression_slope(&pts)
}

pub fn error_by_distance(pairs: &[Pair], step_m: f64) -> Result<Vec<(f64, ErrorSummary)>, EvalError> {
    group_by_manual(pairs, step_m)?
        .into_iter()
        .map(|b| Ok((b.manual_m, error_metrics(&b.pairs)?)))
        .collect()
}

/// `|estimate - reference| / reference`.
pub fn relative_difference(estimate: f64, reference: f64) -> f64 {
    (estimate - reference).abs() / reference.abs()
}
