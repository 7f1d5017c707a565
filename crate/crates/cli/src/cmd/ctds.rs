use std::path::Path;

use anyhow::Result;
use camdist_core::ctds::{analyze, bootstrap, Analysis, BootstrapResult, BootstrapSummary, Estimate, FittedDetectionModel};
use camdist_core::ingest::{parse_cameras, parse_observations, write_csv};
use camdist_core::model::DistanceDataset;

use crate::config::RunConfig;
use crate::output::{ensure_dir, opt, read_text, write_table, Provenance};

const RESULT_COLUMNS: [&str; 15] = [
    "quantity", "est", "lci", "uci", "se", "cv", "boot_median", "boot_lci", "boot_uci", "boot_se", "boot_cv",
    "n_obs", "n_cameras", "p_hat", "flags",
];

fn result_row(
    name: &str,
    e: &Estimate,
    boot: Option<&BootstrapSummary>,
    analysis: &Analysis,
    flags: &str,
) -> Vec<String> {
    let b = |f: fn(&BootstrapSummary) -> f64| opt(boot.map(f));
    vec![
        name.to_string(),
        e.est.to_string(),
        e.lci.to_string(),
        e.uci.to_string(),
        e.se.to_string(),
        e.cv.to_string(),
        b(|s| s.median),
        b(|s| s.lci),
        b(|s| s.uci),
        b(|s| s.se),
        b(|s| s.cv),
        analysis.density.n_obs.to_string(),
        analysis.density.n_cameras.to_string(),
        analysis.density.p_hat.to_string(),
        flags.to_string(),
    ]
}

fn model_row(f: &FittedDetectionModel) -> Vec<String> {
    let coefs: Vec<String> = f.function.coefficients.iter().map(f64::to_string).collect();
    vec![
        f.spec().to_string(),
        opt(f.function.sigma),
        opt(f.function.shape),
        coefs.join(";"),
        f.loglik.to_string(),
        f.q.to_string(),
        f.p_hat.to_string(),
        opt(f.p_var.map(f64::sqrt)),
        f.chat.to_string(),
        f.qaic.to_string(),
        f.gof_chi2.to_string(),
        f.gof_df.to_string(),
        f.at_boundary.to_string(),
        f.converged.to_string(),
    ]
}

const MODEL_COLUMNS: [&str; 14] = [
    "spec", "sigma_m", "shape", "coefficients", "loglik", "q", "p_hat", "p_se", "chat", "qaic", "gof_chi2",
    "gof_df", "at_boundary", "converged",
];

pub fn run(observations: &Path, cameras: &Path, out: &Path, cfg: &RunConfig, prov: &Provenance) -> Result<()> {
    let survey = cfg.survey()?;
    let dataset = DistanceDataset {
        cameras: parse_cameras(&read_text(cameras)?)?,
        observations: parse_observations(&read_text(observations)?)?,
    };
    let candidates = &cfg.ctds.candidates;
    let analysis = analyze(&dataset, candidates, &survey)?;
    let boot: Option<BootstrapResult> = if cfg.ctds.bootstrap > 0 {
        Some(bootstrap(&dataset, candidates, &survey, cfg.ctds.bootstrap, cfg.seed)?)
    } else {
        None
    };

    let mut flags: Vec<String> = analysis.density.flags.labels().iter().map(|s| s.to_string()).collect();
    if let Some(sel) = &analysis.selection {
        if sel.best.at_boundary {
            flags.push("at_boundary".into());
        }
    }
    if let Some(b) = &boot {
        if b.density.failed > 0 {
            flags.push(format!("boot_failed={}", b.density.failed));
        }
    }
    let flags = flags.join(";");

    ensure_dir(out)?;
    let d = &analysis.density;
    let results = write_csv(
        &RESULT_COLUMNS,
        [
            result_row("density", &d.density, boot.as_ref().map(|b| &b.density), &analysis, &flags),
            result_row("abundance", &d.abundance, boot.as_ref().map(|b| &b.abundance), &analysis, &flags),
        ],
    );
    write_table(out, "results.csv", prov, &results)?;

    let model = write_csv(&MODEL_COLUMNS, analysis.selection.iter().map(|s| model_row(&s.best)));
    write_table(out, "model.csv", prov, &model)?;

    let mut cols = vec!["status", "family_winner", "selected"];
    cols.extend(MODEL_COLUMNS);
    cols.push("error");
    let rows: Vec<Vec<String>> = analysis
        .selection
        .iter()
        .flat_map(|sel| {
            sel.candidates.iter().enumerate().map(move |(i, c)| {
                let winner = sel.family_winners.contains(&i);
                let selected = i == sel.best_index;
                let mut row = vec![
                    if c.fit.is_some() { "fitted" } else { "failed" }.to_string(),
                    winner.to_string(),
                    selected.to_string(),
                ];
                match &c.fit {
                    Some(f) => row.extend(model_row(f)),
                    None => {
                        row.push(c.spec.to_string());
                        row.extend(std::iter::repeat_n(String::new(), MODEL_COLUMNS.len() - 1));
                    }
                }
                row.push(c.error.clone().unwrap_or_default());
                row
            })
        })
        .collect();
    write_table(out, "candidates.csv", prov, &write_csv(&cols, rows))?;

    match &analysis.selection {
        Some(sel) => eprintln!(
            "selected {} (P={:.4}); D={:.6} /km2, N={:.2}",
            sel.best.spec(),
            sel.best.p_hat,
            d.density.est,
            d.abundance.est
        ),
        None => eprintln!("no observations within truncation; density 0"),
    }
    Ok(())
}
