//! Binned point-transect likelihood, detection-function fitting, and
//! QAIC-based model selection.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use super::detfn::{DetectionFunction, DetectionFunctionSpec, KeyFunction};
use super::quadrature::{integrate, Tolerance};
use super::simplex::{minimize, SimplexOptions};
use super::CtdsError;

/// Distances grouped into bins `(c_{j-1}, c_j]`; the first bin also takes `c_0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BinnedDistances {
    cutpoints: Vec<f64>,
    counts: Vec<u64>,
}

impl BinnedDistances {
    pub fn new(cutpoints: Vec<f64>, counts: Vec<u64>) -> Result<Self, CtdsError> {
        if cutpoints.len() < 2 || counts.len() != cutpoints.len() - 1 {
            return Err(CtdsError::InvalidBins(format!(
                "{} cutpoints need {} counts, got {}",
                cutpoints.len(),
                cutpoints.len().saturating_sub(1),
                counts.len()
            )));
        }
        if cutpoints[0] < 0.0 || cutpoints.windows(2).any(|p| !(p[1] > p[0])) {
            return Err(CtdsError::InvalidBins("cutpoints must be >= 0 and strictly increasing".into()));
        }
        Ok(Self { cutpoints, counts })
    }

    /// Bins distances, dropping those outside `[c_0, c_J]`.
    pub fn from_distances(distances: impl IntoIterator<Item = f64>, cutpoints: &[f64]) -> Result<Self, CtdsError> {
        let mut counts = vec![0u64; cutpoints.len().saturating_sub(1)];
        let (lo, hi) = (cutpoints[0], *cutpoints.last().unwrap());
        for d in distances {
            if d < lo || d > hi {
                continue;
            }
            // first cutpoint >= d closes the bin
            let j = cutpoints.partition_point(|&c| c < d).max(1) - 1;
            counts[j] += 1;
        }
        Self::new(cutpoints.to_vec(), counts)
    }

    pub fn cutpoints(&self) -> &[f64] {
        &self.cutpoints
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn w(&self) -> f64 {
        *self.cutpoints.last().unwrap()
    }

    pub fn left(&self) -> f64 {
        self.cutpoints[0]
    }
}

fn quad_tol() -> Tolerance {
    Tolerance::default()
}

/// `int 2 r g(r) dr` over each bin.
fn bin_integrals(model: &DetectionFunction, cutpoints: &[f64]) -> Result<Vec<f64>, CtdsError> {
    cutpoints
        .windows(2)
        .map(|c| integrate(|r| 2.0 * r * model.eval(r), c[0], c[1], quad_tol()))
        .collect()
}

/// Multinomial cell probabilities of each bin under `model`, normalized
/// over the binned range so they sum to one.
pub fn bin_probabilities(model: &DetectionFunction, cutpoints: &[f64]) -> Result<Vec<f64>, CtdsError> {
    model.check_feasible()?;
    let parts = bin_integrals(model, cutpoints)?;
    let total: f64 = parts.iter().sum();
    if !(total > 0.0) {
        return Err(CtdsError::QuadratureFailure("zero total detection mass".into()));
    }
    Ok(parts.into_iter().map(|p| p / total).collect())
}

/// Average detection probability within `w`: `int_0^w 2 r g(r) dr / w^2`.
pub fn estimate_p(model: &DetectionFunction) -> Result<f64, CtdsError> {
    estimate_p_between(model, 0.0)
}

/// As [`estimate_p`] over the annulus `[left, w]`.
pub fn estimate_p_between(model: &DetectionFunction, left: f64) -> Result<f64, CtdsError> {
    model.check_feasible()?;
    let w = model.w;
    let mass = integrate(|r| 2.0 * r * model.eval(r), left, w, quad_tol())?;
    Ok(mass / (w * w - left * left))
}

fn multinomial_loglik(counts: &[u64], probs: &[f64]) -> f64 {
    counts
        .iter()
        .zip(probs)
        .filter(|(&n, _)| n > 0)
        .map(|(&n, &p)| n as f64 * p.ln())
        .sum()
}

fn pearson_chi2(counts: &[u64], probs: &[f64]) -> f64 {
    let n: u64 = counts.iter().sum();
    counts
        .iter()
        .zip(probs)
        .map(|(&obs, &p)| {
            let e = n as f64 * p;
            let d = obs as f64 - e;
            if e > 0.0 {
                d * d / e
            } else if obs == 0 {
                0.0
            } else {
                f64::INFINITY
            }
        })
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StartDiagnostic {
    pub theta: Vec<f64>,
    /// Log-likelihood at the start point (`-inf` if infeasible there).
    pub start_loglik: f64,
    /// Log-likelihood where this start's search ended.
    pub loglik: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FittedDetectionModel {
    pub function: DetectionFunction,
    /// Multinomial log-likelihood without the combinatorial constant.
    pub loglik: f64,
    pub q: usize,
    pub n: u64,
    pub p_hat: f64,
    /// Delta-method variance of `p_hat` from the numerical information
    /// matrix; `None` when the Hessian is unusable.
    pub p_var: Option<f64>,
    pub chat: f64,
    pub qaic: f64,
    pub gof_chi2: f64,
    pub gof_df: usize,
    pub bin_probabilities: Vec<f64>,
    /// Some log-scale parameter ended within reach of its search bound.
    pub at_boundary: bool,
    pub converged: bool,
    pub starts: Vec<StartDiagnostic>,
}

impl FittedDetectionModel {
    pub fn spec(&self) -> &DetectionFunctionSpec {
        &self.function.spec
    }

    pub fn gof_ratio(&self) -> f64 {
        self.gof_chi2 / self.gof_df as f64
    }

    pub fn aic(&self) -> f64 {
        qaic(self.loglik, self.q, 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub simplex: SimplexOptions,
    /// Extra simplex restarts from the incumbent optimum.
    pub restarts: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            simplex: SimplexOptions::default(),
            restarts: 2,
        }
    }
}

struct Bounds {
    lo: Vec<f64>,
    hi: Vec<f64>,
    /// Which coordinates are log-scale key parameters.
    log_scale: Vec<bool>,
}

const ADJ_BOUND: f64 = 100.0;

fn bounds(spec: &DetectionFunctionSpec, w: f64) -> Bounds {
    let mut lo = Vec::new();
    let mut hi = Vec::new();
    let mut log_scale = Vec::new();
    if spec.key != KeyFunction::Uniform {
        lo.push((w * 1e-3).ln());
        hi.push((w * 1e3).ln());
        log_scale.push(true);
    }
    if spec.key == KeyFunction::HazardRate {
        lo.push(0.1f64.ln());
        hi.push(100f64.ln());
        log_scale.push(true);
    }
    for _ in &spec.adjustments {
        lo.push(-ADJ_BOUND);
        hi.push(ADJ_BOUND);
        log_scale.push(false);
    }
    Bounds { lo, hi, log_scale }
}

/// Deterministic start points: sigma in {w/8, w/4, w/2, w, 2w}, hazard shape 2,
/// adjustment coefficients 0. A uniform key has a single start.
fn starts(spec: &DetectionFunctionSpec, w: f64) -> Vec<Vec<f64>> {
    let adj = vec![0.0; spec.adjustments.len()];
    match spec.key {
        KeyFunction::Uniform => vec![adj],
        key => [0.125, 0.25, 0.5, 1.0, 2.0]
            .iter()
            .map(|f| {
                let mut t = vec![(f * w).ln()];
                if key == KeyFunction::HazardRate {
                    t.push(2f64.ln());
                }
                t.extend_from_slice(&adj);
                t
            })
            .collect(),
    }
}

fn initial_steps(spec: &DetectionFunctionSpec) -> Vec<f64> {
    let mut s = vec![0.5; spec.key.n_params()];
    s.extend(std::iter::repeat_n(0.2, spec.adjustments.len()));
    s
}

struct Likelihood<'a> {
    spec: &'a DetectionFunctionSpec,
    binned: &'a BinnedDistances,
    bounds: Bounds,
}

impl Likelihood<'_> {
    fn in_bounds(&self, theta: &[f64]) -> bool {
        theta
            .iter()
            .zip(self.bounds.lo.iter().zip(&self.bounds.hi))
            .all(|(t, (lo, hi))| t >= lo && t <= hi)
    }

    fn model(&self, theta: &[f64]) -> Option<DetectionFunction> {
        if !self.in_bounds(theta) {
            return None;
        }
        DetectionFunction::from_theta(self.spec, theta, self.binned.w()).ok()
    }

    /// `-inf` for infeasible parameter vectors.
    fn loglik(&self, theta: &[f64]) -> f64 {
        let Some(m) = self.model(theta) else {
            return f64::NEG_INFINITY;
        };
        match bin_probabilities(&m, self.binned.cutpoints()) {
            Ok(p) => {
                let l = multinomial_loglik(self.binned.counts(), &p);
                if l.is_nan() {
                    f64::NEG_INFINITY
                } else {
                    l
                }
            }
            Err(_) => f64::NEG_INFINITY,
        }
    }

    fn p_of(&self, theta: &[f64]) -> Option<f64> {
        let m = self.model(theta)?;
        estimate_p_between(&m, self.binned.left()).ok()
    }

    fn at_boundary(&self, theta: &[f64]) -> bool {
        theta.iter().enumerate().any(|(i, &t)| {
            self.bounds.log_scale[i]
                && ((t - self.bounds.lo[i]).abs() < 1e-3 || (self.bounds.hi[i] - t).abs() < 1e-3)
        })
    }

    /// Delta-method variance of P from the inverse numerical Hessian of the
    /// negative log-likelihood.
    fn p_variance(&self, theta: &[f64]) -> Option<f64> {
        let k = theta.len();
        if k == 0 {
            return Some(0.0);
        }
        let nll = |t: &[f64]| -self.loglik(t);
        let h: Vec<f64> = theta.iter().map(|t| 1e-4 * t.abs().max(1.0)).collect();
        let shifted = |moves: &[(usize, f64)]| {
            let mut t = theta.to_vec();
            for &(i, d) in moves {
                t[i] += d;
            }
            t
        };
        let f0 = nll(theta);
        let mut hess = DMatrix::<f64>::zeros(k, k);
        for i in 0..k {
            let fp = nll(&shifted(&[(i, h[i])]));
            let fm = nll(&shifted(&[(i, -h[i])]));
            hess[(i, i)] = (fp - 2.0 * f0 + fm) / (h[i] * h[i]);
            for j in (i + 1)..k {
                let fpp = nll(&shifted(&[(i, h[i]), (j, h[j])]));
                let fpm = nll(&shifted(&[(i, h[i]), (j, -h[j])]));
                let fmp = nll(&shifted(&[(i, -h[i]), (j, h[j])]));
                let fmm = nll(&shifted(&[(i, -h[i]), (j, -h[j])]));
                let v = (fpp - fpm - fmp + fmm) / (4.0 * h[i] * h[j]);
                hess[(i, j)] = v;
                hess[(j, i)] = v;
            }
        }
        if hess.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let cov = hess.cholesky()?.inverse();
        let mut grad = nalgebra::DVector::<f64>::zeros(k);
        for i in 0..k {
            let pp = self.p_of(&shifted(&[(i, h[i])]))?;
            let pm = self.p_of(&shifted(&[(i, -h[i])]))?;
            grad[i] = (pp - pm) / (2.0 * h[i]);
        }
        let var = (grad.transpose() * cov * grad)[(0, 0)];
        (var.is_finite() && var >= 0.0).then_some(var)
    }
}

/// Maximum-likelihood fit of one detection function to binned distances,
/// searching log-scale key parameters and raw cosine coefficients with a
/// multistart simplex.
pub fn fit_detection_function(
    binned: &BinnedDistances,
    spec: &DetectionFunctionSpec,
) -> Result<FittedDetectionModel, CtdsError> {
    fit_detection_function_with(binned, spec, FitOptions::default())
}

pub fn fit_detection_function_with(
    binned: &BinnedDistances,
    spec: &DetectionFunctionSpec,
    opts: FitOptions,
) -> Result<FittedDetectionModel, CtdsError> {
    let q = spec.q();
    let n = binned.total();
    if n < q as u64 + 1 {
        return Err(CtdsError::InsufficientData { n, needed: q as u64 + 1 });
    }
    let w = binned.w();
    let lik = Likelihood {
        spec,
        binned,
        bounds: bounds(spec, w),
    };
    let step = initial_steps(spec);
    let nll = |t: &[f64]| -lik.loglik(t);

    let mut diags = Vec::new();
    let mut best: Option<(Vec<f64>, f64, bool)> = None;
    for start in starts(spec, w) {
        let start_loglik = lik.loglik(&start);
        if !start_loglik.is_finite() {
            diags.push(StartDiagnostic {
                theta: start,
                start_loglik,
                loglik: start_loglik,
            });
            continue;
        }
        let mut res = minimize(nll, &start, &step, opts.simplex);
        for _ in 0..opts.restarts {
            if q == 0 {
                break;
            }
            let again = minimize(nll, &res.x, &step, opts.simplex);
            let improved = again.fx < res.fx - 1e-10;
            if again.fx <= res.fx {
                res = again;
            }
            if !improved {
                break;
            }
        }
        diags.push(StartDiagnostic {
            theta: start,
            start_loglik,
            loglik: -res.fx,
        });
        if best.as_ref().is_none_or(|(_, fx, _)| res.fx < *fx) {
            best = Some((res.x, res.fx, res.converged));
        }
    }
    let (theta, fx, converged) = best
        .filter(|(_, fx, _)| fx.is_finite())
        .ok_or_else(|| CtdsError::NoFeasibleOptimum(spec.to_string()))?;

    let function = DetectionFunction::from_theta(spec, &theta, w)?;
    let probs = bin_probabilities(&function, binned.cutpoints())?;
    let p_hat = estimate_p_between(&function, binned.left())?;
    let gof_chi2 = pearson_chi2(binned.counts(), &probs);
    let gof_df = (binned.counts().len() as i64 - 1 - q as i64).max(1) as usize;
    let loglik = -fx;
    Ok(FittedDetectionModel {
        p_var: lik.p_variance(&theta),
        at_boundary: lik.at_boundary(&theta),
        function,
        loglik,
        q,
        n,
        p_hat,
        chat: 1.0,
        qaic: qaic(loglik, q, 1.0),
        gof_chi2,
        gof_df,
        bin_probabilities: probs,
        converged,
        starts: diags,
    })
}

/// Overdispersion from a model's Pearson statistic, floored at 1.
pub fn chat(model: &FittedDetectionModel) -> f64 {
    let c = model.gof_chi2 / model.gof_df as f64;
    if c.is_finite() {
        c.max(1.0)
    } else {
        1.0
    }
}

pub fn qaic(loglik: f64, q: usize, chat: f64) -> f64 {
    -2.0 * loglik / chat + 2.0 * q as f64
}

/// `(chat, QAIC)` for `fitted`, with `chat` taken from `reference` (the
/// most-parameterized member of its family).
pub fn chat_and_qaic(fitted: &FittedDetectionModel, reference: &FittedDetectionModel) -> (f64, f64) {
    let c = chat(reference);
    (c, qaic(fitted.loglik, fitted.q, c))
}

#[derive(Debug, Clone, Serialize)]
pub struct CandidateFit {
    pub spec: DetectionFunctionSpec,
    /// The fitted model, with `chat`/`qaic` set from its family.
    pub fit: Option<FittedDetectionModel>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Selection {
    pub best: FittedDetectionModel,
    /// Index of `best` in `candidates`.
    pub best_index: usize,
    pub candidates: Vec<CandidateFit>,
    /// Index into `candidates` of each family's QAIC winner.
    pub family_winners: Vec<usize>,
}

fn nearly_equal(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

/// Two-step selection: minimum QAIC within each key family (with that
/// family's chat), then minimum chi-square/df across family winners.
/// Ties go to fewer parameters, then to family order uniform, half-normal,
/// hazard-rate (and candidate order within a family).
pub fn select_model(candidates: &[DetectionFunctionSpec], binned: &BinnedDistances) -> Result<Selection, CtdsError> {
    if candidates.is_empty() {
        return Err(CtdsError::InvalidSpec("no candidate detection functions".into()));
    }
    let mut fits: Vec<CandidateFit> = candidates
        .par_iter()
        .map(|spec| match fit_detection_function(binned, spec) {
            Ok(f) => CandidateFit { spec: spec.clone(), fit: Some(f), error: None },
            Err(e) => CandidateFit { spec: spec.clone(), fit: None, error: Some(e.to_string()) },
        })
        .collect();

    let mut winners = Vec::new();
    for key in KeyFunction::ALL {
        let members: Vec<usize> = (0..fits.len())
            .filter(|&i| fits[i].spec.key == key && fits[i].fit.is_some())
            .collect();
        let Some(&reference) = members
            .iter()
            .max_by(|&&a, &&b| fits[a].spec.q().cmp(&fits[b].spec.q()).then(b.cmp(&a)))
        else {
            continue;
        };
        let c = chat(fits[reference].fit.as_ref().unwrap());
        for &i in &members {
            let f = fits[i].fit.as_mut().unwrap();
            f.chat = c;
            f.qaic = qaic(f.loglik, f.q, c);
        }
        let winner = members
            .iter()
            .copied()
            .reduce(|a, b| {
                let (fa, fb) = (fits[a].fit.as_ref().unwrap(), fits[b].fit.as_ref().unwrap());
                if nearly_equal(fa.qaic, fb.qaic) {
                    if fb.q < fa.q { b } else { a }
                } else if fb.qaic < fa.qaic {
                    b
                } else {
                    a
                }
            })
            .unwrap();
        winners.push(winner);
    }
    let best_idx = winners
        .iter()
        .copied()
        .reduce(|a, b| {
            let (fa, fb) = (fits[a].fit.as_ref().unwrap(), fits[b].fit.as_ref().unwrap());
            let (ra, rb) = (fa.gof_ratio(), fb.gof_ratio());
            if nearly_equal(ra, rb) {
                if fb.q < fa.q { b } else { a }
            } else if rb < ra {
                b
            } else {
                a
            }
        })
        .ok_or(CtdsError::AllFamiliesInfeasible)?;
    Ok(Selection {
        best: fits[best_idx].fit.clone().unwrap(),
        best_index: best_idx,
        candidates: fits,
        family_winners: winners,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit_cuts(w: usize) -> Vec<f64> {
        (0..=w).map(|v| v as f64).collect()
    }

    #[test]
    fn binning_rules() {
        let b = BinnedDistances::from_distances([0.5, 1.0, 1.0001, 2.0, 2.5, 3.5], &[0.0, 1.0, 2.0, 3.0]).unwrap();
        assert_eq!(b.counts(), &[2, 2, 1]);
        let left = BinnedDistances::from_distances([0.5, 1.0, 1.5], &[1.0, 2.0]).unwrap();
        assert_eq!(left.counts(), &[2]);
        assert!(BinnedDistances::new(vec![0.0, 1.0], vec![1, 2]).is_err());
        assert!(BinnedDistances::new(vec![0.0, 0.0], vec![1]).is_err());
    }

    #[test]
    fn uniform_bin_probabilities() {
        let p = bin_probabilities(&DetectionFunction::uniform(10.0), &[0.0, 5.0, 10.0]).unwrap();
        assert!((p[0] - 0.25).abs() < 1e-14 && (p[1] - 0.75).abs() < 1e-14);
    }

    #[test]
    fn wide_half_normal_approaches_uniform() {
        let hn = DetectionFunction::half_normal(1e6, 10.0).unwrap();
        let p = bin_probabilities(&hn, &[0.0, 5.0, 10.0]).unwrap();
        assert!((p[0] - 0.25).abs() < 1e-9 && (p[1] - 0.75).abs() < 1e-9);
        assert!((estimate_p(&hn).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn p_hat_closed_forms() {
        assert_eq!(estimate_p(&DetectionFunction::uniform(15.0)).unwrap(), 1.0);
        let hn = DetectionFunction::half_normal(5.0, 15.0).unwrap();
        let closed = (50.0 / 225.0) * (1.0 - (-4.5f64).exp());
        assert!((estimate_p(&hn).unwrap() - closed).abs() < 1e-8);
        assert!((closed - 0.21975).abs() < 1e-5);
    }

    #[test]
    fn exact_uniform_counts() {
        // pi_j proportional to c_j^2 - c_{j-1}^2 on 0,5,10: 1:3
        let b = BinnedDistances::new(vec![0.0, 5.0, 10.0], vec![25, 75]).unwrap();
        let f = fit_detection_function(&b, &DetectionFunctionSpec::key_only(KeyFunction::Uniform)).unwrap();
        let max = 25.0 * 0.25f64.ln() + 75.0 * 0.75f64.ln();
        assert!((f.loglik - max).abs() < 1e-10);
        assert_eq!(f.p_hat, 1.0);
        assert!(f.gof_chi2 < 1e-20);
        assert_eq!(f.p_var, Some(0.0));
    }

    #[test]
    fn insufficient_data() {
        let b = BinnedDistances::new(vec![0.0, 5.0, 10.0], vec![1, 0]).unwrap();
        let spec: DetectionFunctionSpec = "hr".parse().unwrap();
        assert!(matches!(
            fit_detection_function(&b, &spec),
            Err(CtdsError::InsufficientData { n: 1, needed: 3 })
        ));
    }

    #[test]
    fn all_counts_in_last_bin_flags_boundary() {
        let mut counts = vec![0u64; 15];
        counts[14] = 50;
        let b = BinnedDistances::new(unit_cuts(15), counts).unwrap();
        match fit_detection_function(&b, &DetectionFunctionSpec::key_only(KeyFunction::HalfNormal)) {
            Err(CtdsError::NoFeasibleOptimum(_)) => {}
            Ok(f) => assert!(f.at_boundary, "sigma {:?}", f.function.sigma),
            Err(e) => panic!("{e}"),
        }
    }

    #[test]
    fn optimum_beats_every_start() {
        let counts = vec![40, 90, 120, 110, 95, 70, 40, 22, 10, 3];
        let b = BinnedDistances::new(unit_cuts(10), counts).unwrap();
        for s in ["hn", "hr", "hn+cos(2)", "uniform+cos(1)"] {
            let f = fit_detection_function(&b, &s.parse().unwrap()).unwrap();
            for d in &f.starts {
                assert!(f.loglik >= d.start_loglik, "{s}");
                assert!(f.loglik >= d.loglik - 1e-12, "{s}");
            }
        }
    }

    #[test]
    fn chat_and_qaic_rules() {
        let counts = vec![40, 90, 120, 110, 95, 70, 40, 22, 10, 3];
        let b = BinnedDistances::new(unit_cuts(10), counts).unwrap();
        let mut f = fit_detection_function(&b, &"hn".parse().unwrap()).unwrap();
        f.gof_chi2 = 0.0;
        let (c, q) = chat_and_qaic(&f, &f);
        assert_eq!(c, 1.0);
        assert_eq!(q, f.aic());
        assert_eq!(q, -2.0 * f.loglik + 2.0);
        assert_eq!(qaic(-100.0, 3, 2.0), 106.0);
        f.gof_chi2 = 4.0 * f.gof_df as f64;
        assert_eq!(chat(&f), 4.0);
    }

    #[test]
    fn single_candidate_returned() {
        let counts = vec![40, 90, 120, 110, 95, 70, 40, 22, 10, 3];
        let b = BinnedDistances::new(unit_cuts(10), counts).unwrap();
        let spec: DetectionFunctionSpec = "hn".parse().unwrap();
        let direct = fit_detection_function(&b, &spec).unwrap();
        let sel = select_model(&[spec], &b).unwrap();
        assert_eq!(sel.best, direct);
    }

    #[test]
    fn qaic_tie_prefers_fewer_parameters() {
        // counts exactly proportional to uniform bin probabilities: the cosine
        // terms add nothing, so the likelihoods tie and the 1-term model wins
        let b = BinnedDistances::new(vec![0.0, 5.0, 10.0], vec![250, 750]).unwrap();
        let specs: Vec<DetectionFunctionSpec> =
            vec!["uniform+cos(1,2,3)".parse().unwrap(), "uniform+cos(1)".parse().unwrap()];
        let sel = select_model(&specs, &b).unwrap();
        let qa = sel.candidates[0].fit.as_ref().unwrap();
        let qb = sel.candidates[1].fit.as_ref().unwrap();
        assert!((qa.loglik - qb.loglik).abs() < 1e-6);
        assert_eq!(sel.best.q, 1);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn bin_probabilities_sum_to_one(
            key in 0usize..3, log_sigma in -1.0f64..3.5, log_b in -0.5f64..2.5,
            a in -0.3f64..0.3, use_adj in any::<bool>(), nbins in 1usize..20
        ) {
            let w = 15.0;
            let key = KeyFunction::ALL[key];
            let adj = if use_adj { vec![2] } else { vec![] };
            let spec = DetectionFunctionSpec::new(key, adj.clone()).unwrap();
            let mut theta = Vec::new();
            if key != KeyFunction::Uniform { theta.push(log_sigma); }
            if key == KeyFunction::HazardRate { theta.push(log_b); }
            if use_adj { theta.push(a); }
            let m = DetectionFunction::from_theta(&spec, &theta, w).unwrap();
            prop_assume!(m.check_feasible().is_ok());
            let cuts: Vec<f64> = (0..=nbins).map(|i| w * i as f64 / nbins as f64).collect();
            let p = bin_probabilities(&m, &cuts).unwrap();
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}
