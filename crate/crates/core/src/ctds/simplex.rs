//! Nelder-Mead downhill simplex minimizer.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexOptions {
    /// Stop once every vertex is within this (max-norm) distance of the best.
    pub diameter_tol: f64,
    pub max_evals: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            diameter_tol: 1e-8,
            max_evals: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub fx: f64,
    pub evals: usize,
    pub converged: bool,
}

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

/// Minimizes `f` from `x0` with initial simplex edges `step[i]` along each
/// axis. Non-finite objective values are treated as `+inf` (the point is
/// rejected), so the start point must be finite.
pub fn minimize(f: impl Fn(&[f64]) -> f64, x0: &[f64], step: &[f64], opts: SimplexOptions) -> SimplexResult {
    let n = x0.len();
    assert_eq!(step.len(), n);
    let evals = std::cell::Cell::new(0usize);
    let eval = |x: &[f64]| {
        evals.set(evals.get() + 1);
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    if n == 0 {
        let fx = eval(x0);
        return SimplexResult { x: vec![], fx, evals: 1, converged: true };
    }

    let mut pts: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    pts.push(x0.to_vec());
    for i in 0..n {
        let mut p = x0.to_vec();
        p[i] += step[i];
        pts.push(p);
    }
    let mut fs: Vec<f64> = pts.iter().map(|p| eval(p)).collect();

    let mut converged = false;
    loop {
        // order best..worst, stable so ties keep insertion order
        let mut idx: Vec<usize> = (0..=n).collect();
        idx.sort_by(|&a, &b| fs[a].total_cmp(&fs[b]));
        pts = idx.iter().map(|&i| pts[i].clone()).collect();
        fs = idx.iter().map(|&i| fs[i]).collect();

        let diameter = pts[1..]
            .iter()
            .flat_map(|p| p.iter().zip(&pts[0]).map(|(a, b)| (a - b).abs()))
            .fold(0.0f64, f64::max);
        if diameter < opts.diameter_tol {
            converged = true;
            break;
        }
        if evals.get() >= opts.max_evals {
            break;
        }

        let mut centroid = vec![0.0; n];
        for p in &pts[..n] {
            for (c, v) in centroid.iter_mut().zip(p) {
                *c += v / n as f64;
            }
        }
        let along = |t: f64, from: &[f64]| -> Vec<f64> {
            centroid.iter().zip(from).map(|(c, x)| c + t * (x - c)).collect()
        };

        let worst = pts[n].clone();
        let xr = along(-REFLECT, &worst);
        let fr = eval(&xr);
        if fr < fs[0] {
            let xe = along(-REFLECT * EXPAND, &worst);
            let fe = eval(&xe);
            if fe < fr {
                pts[n] = xe;
                fs[n] = fe;
            } else {
                pts[n] = xr;
                fs[n] = fr;
            }
            continue;
        }
        if fr < fs[n - 1] {
            pts[n] = xr;
            fs[n] = fr;
            continue;
        }
        let (xc, fc, accept) = if fr < fs[n] {
            let xc = along(-REFLECT * CONTRACT, &worst);
            let fc = eval(&xc);
            let ok = fc <= fr;
            (xc, fc, ok)
        } else {
            let xc = along(CONTRACT, &worst);
            let fc = eval(&xc);
            let ok = fc < fs[n];
            (xc, fc, ok)
        };
        if accept {
            pts[n] = xc;
            fs[n] = fc;
            continue;
        }
        let best = pts[0].clone();
        for i in 1..=n {
            let p: Vec<f64> = best.iter().zip(&pts[i]).map(|(b, x)| b + SHRINK * (x - b)).collect();
            fs[i] = eval(&p);
            pts[i] = p;
        }
    }
    SimplexResult {
        x: pts[0].clone(),
        fx: fs[0],
        evals: evals.get(),
        converged,
    }
}
