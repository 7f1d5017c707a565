//! Exit-criteria suite. Runs every criterion, prints one PASS/FAIL line
//! each, and exits non-zero if any criterion fails.

use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use camdist_core::ctds::{
    bin_probabilities, bootstrap, estimate_abundance, estimate_p, fit_detection_function, analyze,
    BinnedDistances, DetectionFunction, DetectionFunctionSpec, KeyFunction,
};
use camdist_core::distance::mask_centre;
use camdist_core::eval::{error_metrics, relative_difference, PairedDistances};
use camdist_core::ingest::{parse_pfm, parse_pgm_mask, write_pfm, write_pgm_mask};
use camdist_core::model::{DepthMap, DepthUnit, InstanceMask, SurveyConfig};
use camdist_core::sim::{identical_cameras, operation_time_for, simulate_survey, TruthConfig};
use camdist_core::stats::percentile;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tempfile::TempDir;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn within(elapsed: Duration, limit_s: f64) -> bool {
    elapsed.as_secs_f64() < limit_s
}

fn half_normal_p_closed_form() -> Outcome {
    let start = Instant::now();
    let (sigma, w) = (5.0f64, 15.0f64);
    let p = estimate_p(&DetectionFunction::half_normal(sigma, w).unwrap()).unwrap();
    let closed = (2.0 * sigma * sigma / (w * w)) * (1.0 - (-(w * w) / (2.0 * sigma * sigma)).exp());
    let t = start.elapsed();
    outcome(
        (p - closed).abs() < 1e-8 && (closed - 0.21975).abs() < 5e-6 && within(t, 1.0),
        format!("P={p:.10} closed={closed:.10} |diff|={:.2e} in {t:?}", (p - closed).abs()),
    )
}

fn random_feasible_model(rng: &mut ChaCha8Rng, w: f64) -> Option<DetectionFunction> {
    let key = KeyFunction::ALL[rng.random_range(0..3)];
    let n_adj = rng.random_range(0..3);
    let orders: Vec<u32> = match (key, n_adj) {
        (_, 0) => vec![],
        (KeyFunction::Uniform, 1) => vec![1],
        (KeyFunction::Uniform, _) => vec![1, 2],
        (_, 1) => vec![2],
        _ => vec![2, 3],
    };
    let spec = DetectionFunctionSpec::new(key, orders.clone()).unwrap();
    let sigma = (key != KeyFunction::Uniform).then(|| w * rng.random_range(0.02..3.0));
    let shape = (key == KeyFunction::HazardRate).then(|| rng.random_range(0.5..8.0));
    let coefs = orders.iter().map(|_| rng.random_range(-0.4..0.4)).collect();
    let m = DetectionFunction::new(spec, sigma, shape, coefs, w).ok()?;
    m.check_feasible().ok().map(|_| m)
}

fn bin_normalization() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2_001);
    let mut worst = 0f64;
    let mut n = 0;
    while n < 1000 {
        let w = rng.random_range(5.0..30.0);
        let Some(m) = random_feasible_model(&mut rng, w) else { continue };
        let bins = rng.random_range(1..25);
        let mut cuts: Vec<f64> = (0..bins - 1).map(|_| rng.random_range(0.0..w)).collect();
        cuts.push(0.0);
        cuts.push(w);
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let p = bin_probabilities(&m, &cuts).unwrap();
        worst = worst.max((p.iter().sum::<f64>() - 1.0).abs());
        n += 1;
    }
    outcome(worst <= 1e-12, format!("max |sum - 1| over {n} models = {worst:.2e}"))
}

fn sample_radii(g: impl Fn(f64) -> f64, w: f64, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let r = w * rng.random::<f64>().sqrt();
        if rng.random::<f64>() < g(r) {
            out.push(r);
        }
    }
    out
}

/// Closed-form half-normal binned log-likelihood, maximized by grid search.
fn grid_search_half_normal(binned: &BinnedDistances) -> (f64, f64) {
    let ll = |sigma: f64| {
        let mass = |c: f64| 1.0 - (-c * c / (2.0 * sigma * sigma)).exp();
        let c = binned.cutpoints();
        let total = mass(*c.last().unwrap()) - mass(c[0]);
        c.windows(2)
            .zip(binned.counts())
            .filter(|(_, &n)| n > 0)
            .map(|(c, &n)| n as f64 * ((mass(c[1]) - mass(c[0])) / total).ln())
            .sum::<f64>()
    };
    let mut best = (0.0, f64::NEG_INFINITY);
    for i in 0..=60_000 {
        let s = 2.0 + i as f64 * 1e-4;
        let l = ll(s);
        if l > best.1 {
            best = (s, l);
        }
    }
    best
}

fn mle_recovery() -> Outcome {
    let start = Instant::now();
    let truth = DetectionFunction::half_normal(4.0, 15.0).unwrap();
    let r = sample_radii(|r| truth.eval(r), 15.0, 10_000, 31_415);
    let cuts: Vec<f64> = (0..=15).map(f64::from).collect();
    let binned = BinnedDistances::from_distances(r, &cuts).unwrap();
    let fit = fit_detection_function(&binned, &DetectionFunctionSpec::key_only(KeyFunction::HalfNormal)).unwrap();
    let t = start.elapsed();
    let sigma = fit.function.sigma.unwrap();
    let (grid_sigma, grid_ll) = grid_search_half_normal(&binned);
    let gap = (fit.loglik - grid_ll).abs();
    outcome(
        (3.8..=4.2).contains(&sigma) && gap < 1e-3 && within(t, 10.0),
        format!("sigma={sigma:.4} grid sigma={grid_sigma:.4} |loglik gap|={gap:.2e} fit time {t:?}"),
    )
}

fn half_normal_survey(cameras: usize, expected_obs: f64, density: f64, seed: u64) -> TruthConfig {
    let (w, theta, t) = (15.0, 42f64.to_radians(), 2.0);
    let detection = DetectionFunction::half_normal(4.0, w).unwrap();
    let per_cam = expected_obs / estimate_p(&detection).unwrap() / cameras as f64;
    TruthConfig {
        true_density: density,
        detection,
        cameras: identical_cameras(cameras, theta, operation_time_for(per_cam, density, theta, w, t)).unwrap(),
        w_m: w,
        t_s: t,
        seed,
    }
}

fn estimator_consistency() -> Outcome {
    let start = Instant::now();
    let truth = half_normal_survey(100, 20_000.0, 5.0, 8_080);
    let expected = truth.expected_observations().unwrap();
    let ds = simulate_survey(&truth).unwrap();
    let a = analyze(&ds, &DetectionFunctionSpec::default_candidates(), &SurveyConfig::default()).unwrap();
    let t = start.elapsed();
    let d = a.density.density.est;
    let err = (d - truth.true_density).abs() / truth.true_density;
    let best = a.selection.as_ref().unwrap().best.spec().clone();
    outcome(
        expected >= 5_000.0 && err < 0.05 && best.key == KeyFunction::HalfNormal && within(t, 120.0),
        format!(
            "expected n={expected:.0}, observed n={}, D_hat={d:.4} (rel err {err:.4}), selected {best}, {t:?}",
            a.density.n_obs
        ),
    )
}

/// Candidates refitted in every bootstrap replicate of the coverage study:
/// one per key family.
fn coverage_candidates() -> Vec<DetectionFunctionSpec> {
    ["uniform+cos(1)", "hn", "hr"].iter().map(|s| s.parse().unwrap()).collect()
}

fn bootstrap_coverage() -> Outcome {
    let start = Instant::now();
    let survey = SurveyConfig::default();
    let cands = coverage_candidates();
    let (reps, b) = (100u64, 200usize);
    let mut covered = 0;
    let mut failed_reps = 0;
    let mut first: Option<(u64, camdist_core::ctds::BootstrapResult)> = None;
    for rep in 0..reps {
        let truth = half_normal_survey(100, 2_000.0, 5.0, 50_000 + rep);
        let ds = simulate_survey(&truth).unwrap();
        match bootstrap(&ds, &cands, &survey, b, 90_000 + rep) {
            Ok(res) => {
                if res.density.lci <= truth.true_density && truth.true_density <= res.density.uci {
                    covered += 1;
                }
                if first.is_none() {
                    first = Some((50_000 + rep, res));
                }
            }
            Err(_) => failed_reps += 1,
        }
    }
    let t = start.elapsed();
    let deterministic = first.as_ref().is_some_and(|(seed, res)| {
        let ds = simulate_survey(&half_normal_survey(100, 2_000.0, 5.0, *seed)).unwrap();
        bootstrap(&ds, &cands, &survey, b, 90_000).as_ref() == Ok(res)
    });
    outcome(
        covered >= 85 && deterministic && within(t, 1800.0),
        format!(
            "{covered}/{reps} intervals cover D (B={b}, {failed_reps} reps failed), rerun identical: {deterministic}, {t:?}"
        ),
    )
}

fn abundance_rows() -> Outcome {
    let area = 2454.0 / 0.46;
    let rows = [(0.36, 1917.0), (0.31, 1651.0), (0.23, 1220.0), (0.23, 1256.0)];
    let mut worst = 0f64;
    let mut parts = Vec::new();
    for (d, n) in rows {
        let got = estimate_abundance(d, area);
        let rel = (got - n).abs() / n;
        worst = worst.max(rel);
        parts.push(format!("{d}->{got:.1} vs {n} ({:.2}%)", rel * 100.0));
    }
    outcome(worst <= 0.015, format!("A={area:.2} km2: {}", parts.join(", ")))
}

fn headline_relative_difference() -> Outcome {
    let rel = relative_difference(1917.0, 2454.0);
    let pct = (rel * 1000.0).round() / 10.0;
    outcome(pct == 21.9 && rel <= 0.22, format!("|1917-2454|/2454 = {:.4}% -> {pct}%", rel * 100.0))
}

fn error_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4_242);
    let mut violations = 0;
    for _ in 0..10_000 {
        let n = rng.random_range(1..40);
        let pairs: Vec<(f64, f64)> = (0..n).map(|_| (rng.random_range(0.1..20.0), rng.random_range(0.1..25.0))).collect();
        let p = PairedDistances::new("r", pairs).unwrap();
        let s = error_metrics(p.pairs()).unwrap();
        if !(s.mae_m <= s.rmse_m + 1e-12 && s.delta_avg_m.abs() <= s.mae_m + 1e-12) {
            violations += 1;
        }
    }
    let hand = error_metrics(PairedDistances::new("h", vec![(2.0, 3.0), (4.0, 2.0)]).unwrap().pairs()).unwrap();
    let hand_ok =
        (hand.mae_m - 1.5).abs() < 1e-12 && (hand.rmse_m - 1.5811).abs() < 5e-5 && (hand.delta_avg_m + 0.5).abs() < 1e-12;
    outcome(
        violations == 0 && hand_ok,
        format!(
            "{violations} violations in 10000 datasets; hand example ({}, {:.4}, {})",
            hand.mae_m, hand.rmse_m, hand.delta_avg_m
        ),
    )
}

/// A rectangle with a random notch cut out, so the centroid often falls
/// outside the shape.
fn random_concave_mask(rng: &mut ChaCha8Rng) -> InstanceMask {
    let (w, h) = (rng.random_range(6..30), rng.random_range(6..30));
    let (r0, c0) = (rng.random_range(0..h / 2), rng.random_range(0..w / 2));
    let (r1, c1) = (rng.random_range(r0 + 3..=h), rng.random_range(c0 + 3..=w));
    let nr0 = rng.random_range(r0..r1 - 1);
    let nc0 = rng.random_range(c0 + 1..c1 - 1);
    let nc1 = rng.random_range(nc0 + 1..c1);
    let mut bits = vec![false; w * h];
    for r in r0..r1 {
        for c in c0..c1 {
            let notch = r >= nr0 && c >= nc0 && c < nc1;
            bits[r * w + c] = !notch;
        }
    }
    InstanceMask::new(w, h, bits).unwrap()
}

fn brute_force_centre(mask: &InstanceMask) -> Option<(usize, usize)> {
    let members: Vec<(usize, usize)> = (0..mask.height())
        .flat_map(|r| (0..mask.width()).map(move |c| (r, c)))
        .filter(|&(r, c)| mask.bits()[r * mask.width() + c])
        .collect();
    if members.is_empty() {
        return None;
    }
    let n = members.len() as f64;
    let cr = (members.iter().map(|m| m.0 as f64).sum::<f64>() / n).round() as i64;
    let cc = (members.iter().map(|m| m.1 as f64).sum::<f64>() / n).round() as i64;
    members
        .iter()
        .copied()
        .min_by_key(|&(r, c)| ((r as i64 - cr).pow(2) + (c as i64 - cc).pow(2), r, c))
}

fn distance_rule_fixtures() -> Outcome {
    let values: Vec<f64> = (1..=100).map(f64::from).collect();
    let p20 = percentile(&values, 0.2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(500);
    let mut mismatches = 0;
    let mut off_centre = 0;
    for _ in 0..500 {
        let m = random_concave_mask(&mut rng);
        let got = mask_centre(&m);
        let want = brute_force_centre(&m);
        if got != want {
            mismatches += 1;
        }
        let n = m.count() as f64;
        let cr = (m.members().map(|p| p.0 as f64).sum::<f64>() / n).round() as usize;
        let cc = (m.members().map(|p| p.1 as f64).sum::<f64>() / n).round() as usize;
        if !m.contains(cr, cc) {
            off_centre += 1;
        }
    }
    outcome(
        (p20 - 20.8).abs() < 1e-12 && mismatches == 0 && off_centre > 0,
        format!("p20(1..100)={p20}; {mismatches} centre mismatches in 500 masks ({off_centre} needed the fallback)"),
    )
}

fn format_round_trips() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1_000);
    let mut bad_pfm = 0;
    let mut bad_pgm = 0;
    for _ in 0..1000 {
        let (w, h) = (rng.random_range(1..40), rng.random_range(1..40));
        let v: Vec<f32> = (0..w * h).map(|_| rng.random_range(0.0f32..1e4)).collect();
        let map = DepthMap::new(w, h, v, DepthUnit::Raw).unwrap();
        let bytes = write_pfm(&map);
        let back = parse_pfm(&bytes).unwrap();
        let same = back.width() == w
            && back.height() == h
            && back.values().iter().zip(map.values()).all(|(a, b)| a.to_bits() == b.to_bits())
            && write_pfm(&back) == bytes;
        if !same {
            bad_pfm += 1;
        }
        let bits: Vec<bool> = (0..w * h).map(|_| rng.random_bool(0.3)).collect();
        let mask = InstanceMask::new(w, h, bits).unwrap();
        let mbytes = write_pgm_mask(&mask);
        match parse_pgm_mask(&mbytes) {
            Ok(m) if m == mask && write_pgm_mask(&m) == mbytes => {}
            _ => bad_pgm += 1,
        }
    }
    outcome(bad_pfm == 0 && bad_pgm == 0, format!("1000 maps: {bad_pfm} PFM and {bad_pgm} PGM mismatches"))
}

fn run_cli(args: &[&str]) -> bool {
    Command::new(env!("CARGO_BIN_EXE_camdist"))
        .args(args)
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

fn same_files(a: &Path, b: &Path, names: &[&str]) -> bool {
    names.iter().all(|n| match (fs::read(a.join(n)), fs::read(b.join(n))) {
        (Ok(x), Ok(y)) => x == y,
        _ => false,
    })
}

fn cli_determinism() -> Outcome {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let truth = d.join("truth.toml");
    fs::write(
        &truth,
        "true_density = 4.0\nw_m = 15.0\nseed = 17\n[detection]\nspec = \"hn\"\nsigma_m = 4.0\n\
         [camera_grid]\ncount = 30\nfov_deg = 42.0\noperation_time_days = 40.0\n",
    )
    .unwrap();
    let s = |p: &Path| p.to_str().unwrap().to_string();
    let mut ok = true;
    for (threads, name) in [("1", "sim1"), ("3", "sim3")] {
        ok &= run_cli(&["--threads", threads, "simulate", "--truth", &s(&truth), "--out", &s(&d.join(name))]);
    }
    let sim_same = ok && same_files(&d.join("sim1"), &d.join("sim3"), &["cameras.csv", "observations.csv"]);
    for (threads, name) in [("1", "ctds1"), ("3", "ctds3")] {
        ok &= run_cli(&[
            "--threads",
            threads,
            "ctds",
            "--observations",
            &s(&d.join("sim1/observations.csv")),
            "--cameras",
            &s(&d.join("sim1/cameras.csv")),
            "--bootstrap",
            "40",
            "--seed",
            "23",
            "--out",
            &s(&d.join(name)),
        ]);
    }
    let ctds_same =
        ok && same_files(&d.join("ctds1"), &d.join("ctds3"), &["results.csv", "model.csv", "candidates.csv"]);
    outcome(
        sim_same && ctds_same,
        format!("simulate identical across 1/3 threads: {sim_same}; ctds identical: {ctds_same}"),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("half-normal P closed form", half_normal_p_closed_form),
        ("bin-probability normalization", bin_normalization),
        ("MLE recovery vs grid search", mle_recovery),
        ("estimator consistency", estimator_consistency),
        ("bootstrap coverage", bootstrap_coverage),
        ("abundance/density table consistency", abundance_rows),
        ("within-22% headline", headline_relative_difference),
        ("error-metric identities", error_identities),
        ("distance-rule fixtures", distance_rule_fixtures),
        ("format round-trips", format_round_trips),
        ("CLI determinism", cli_determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, run) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let o = run();
        if !o.pass {
            failed += 1;
        }
        println!("{} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    if failed > 0 {
        println!("{failed} criterion/criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
