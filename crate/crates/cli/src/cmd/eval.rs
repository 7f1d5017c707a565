use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Result};
use camdist_core::eval::{binned_regression, error_by_distance, error_metrics, group_by_manual, PairedDistances};
use camdist_core::ingest::{parse_frame_distances, write_csv, FrameDistance};

use crate::config::RunConfig;
use crate::output::{ensure_dir, read_text, write_table, Provenance};

#[derive(Debug, Default, PartialEq)]
pub struct Join {
    /// `(frame_id, manual_m, model_m)` in frame order.
    pub pairs: Vec<(String, f64, f64)>,
    /// Frames with more than one row on either side.
    pub multi_animal: usize,
    /// Frames present on only one side.
    pub unmatched: usize,
}

/// Pairs frames that have exactly one manual and one model row.
pub fn join(manual: &[FrameDistance], model: &[FrameDistance]) -> Join {
    let mut by_frame: BTreeMap<&str, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for m in manual {
        by_frame.entry(&m.frame_id).or_default().0.push(m.distance_m);
    }
    for m in model {
        by_frame.entry(&m.frame_id).or_default().1.push(m.distance_m);
    }
    let mut out = Join::default();
    for (id, (a, b)) in by_frame {
        match (a.len(), b.len()) {
            (1, 1) => out.pairs.push((id.to_string(), a[0], b[0])),
            (0, _) | (_, 0) => out.unmatched += 1,
            _ => out.multi_animal += 1,
        }
    }
    out
}

pub fn run(model: &Path, manual: &Path, label: &str, out: &Path, cfg: &RunConfig, prov: &Provenance) -> Result<()> {
    let model_rows = parse_frame_distances(&read_text(model)?)?;
    let manual_rows = parse_frame_distances(&read_text(manual)?)?;
    let j = join(&manual_rows, &model_rows);
    eprintln!(
        "{} paired frame(s); excluded {} multi-animal, {} unmatched",
        j.pairs.len(),
        j.multi_animal,
        j.unmatched
    );
    if j.pairs.is_empty() {
        bail!("EmptyJoin: no frame has exactly one manual and one model distance");
    }
    let paired = PairedDistances::new(label, j.pairs.iter().map(|p| (p.1, p.2)).collect())?;
    let pairs = paired.pairs();
    let summary = error_metrics(pairs)?;
    let step = cfg.eval.bin_step_m;
    let regression = match binned_regression(pairs, step, cfg.eval.raw_pairs) {
        Ok(r) => Some(r),
        Err(e) => {
            eprintln!("slope unavailable: {e}");
            None
        }
    };

    ensure_dir(out)?;
    let summary_csv = write_csv(
        &[
            "label", "n_pairs", "mae_m", "rmse_m", "delta_avg_m", "slope", "intercept", "excluded_multi_animal",
            "unmatched",
        ],
        [vec![
            label.to_string(),
            summary.n.to_string(),
            summary.mae_m.to_string(),
            summary.rmse_m.to_string(),
            summary.delta_avg_m.to_string(),
            regression.map(|r| r.slope.to_string()).unwrap_or_default(),
            regression.map(|r| r.intercept.to_string()).unwrap_or_default(),
            j.multi_animal.to_string(),
            j.unmatched.to_string(),
        ]],
    );
    write_table(out, "eval_summary.csv", prov, &summary_csv)?;

    let bins = group_by_manual(pairs, step)?;
    let errs = error_by_distance(pairs, step)?;
    let bins_csv = write_csv(
        &[
            "manual_m", "n", "mean_model_m", "p05", "p25", "p75", "p95", "mae_m", "rmse_m", "delta_avg_m",
        ],
        bins.iter().zip(&errs).map(|(b, (_, e))| {
            vec![
                b.manual_m.to_string(),
                b.pairs.len().to_string(),
                b.mean_model_m.to_string(),
                b.p05.to_string(),
                b.p25.to_string(),
                b.p75.to_string(),
                b.p95.to_string(),
                e.mae_m.to_string(),
                e.rmse_m.to_string(),
                e.delta_avg_m.to_string(),
            ]
        }),
    );
    write_table(out, "eval_bins.csv", prov, &bins_csv)?;

    let pairs_csv = write_csv(
        &["frame_id", "manual_m", "model_m"],
        j.pairs.iter().map(|(id, a, b)| vec![id.clone(), a.to_string(), b.to_string()]),
    );
    write_table(out, "eval_pairs.csv", prov, &pairs_csv)?;
    println!(
        "{label}: n={} MAE={:.4} RMSE={:.4} delta={:+.4}{}",
        summary.n,
        summary.mae_m,
        summary.rmse_m,
        summary.delta_avg_m,
        regression.map(|r| format!(" slope={:.4}", r.slope)).unwrap_or_default()
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(id: &str, d: f64) -> FrameDistance {
        FrameDistance { frame_id: id.into(), camera_id: None, distance_m: d }
    }

    #[test]
    fn join_rules() {
        let manual = vec![row("a", 1.0), row("b", 2.0), row("b", 3.0), row("c", 4.0)];
        let model = vec![row("a", 1.5), row("b", 2.5), row("d", 1.0)];
        let j = join(&manual, &model);
        assert_eq!(j.pairs, vec![("a".to_string(), 1.0, 1.5)]);
        assert_eq!(j.multi_animal, 1);
        assert_eq!(j.unmatched, 2);
    }
}
