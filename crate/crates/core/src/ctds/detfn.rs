//! Detection functions `g(r)`: a key function optionally multiplied by a
//! cosine adjustment series, normalized so `g(0) = 1`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::CtdsError;

/// Points used to check that a parameter vector gives `0 <= g <= 1`.
pub const FEASIBILITY_GRID: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum KeyFunction {
    Uniform,
    HalfNormal,
    HazardRate,
}

impl KeyFunction {
    pub const ALL: [KeyFunction; 3] = [KeyFunction::Uniform, KeyFunction::HalfNormal, KeyFunction::HazardRate];

    pub fn n_params(self) -> usize {
        match self {
            KeyFunction::Uniform => 0,
            KeyFunction::HalfNormal => 1,
            KeyFunction::HazardRate => 2,
        }
    }

    fn short(self) -> &'static str {
        match self {
            KeyFunction::Uniform => "uniform",
            KeyFunction::HalfNormal => "hn",
            KeyFunction::HazardRate => "hr",
        }
    }
}

/// Key family plus cosine adjustment orders, e.g. `hn+cos(2,3)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DetectionFunctionSpec {
    pub key: KeyFunction,
    pub adjustments: Vec<u32>,
}

impl DetectionFunctionSpec {
    pub fn new(key: KeyFunction, adjustments: Vec<u32>) -> Result<Self, CtdsError> {
        if adjustments.contains(&0) {
            return Err(CtdsError::InvalidSpec("adjustment orders must be positive".into()));
        }
        let mut sorted = adjustments.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != adjustments.len() {
            return Err(CtdsError::InvalidSpec("duplicate adjustment order".into()));
        }
        Ok(Self { key, adjustments })
    }

    pub fn key_only(key: KeyFunction) -> Self {
        Self {
            key,
            adjustments: Vec::new(),
        }
    }

    /// Total free parameters.
    pub fn q(&self) -> usize {
        self.key.n_params() + self.adjustments.len()
    }

    /// A reasonable default candidate set spanning all three families.
    pub fn default_candidates() -> Vec<Self> {
        vec![
            Self::new(KeyFunction::Uniform, vec![1]).unwrap(),
            Self::new(KeyFunction::Uniform, vec![1, 2]).unwrap(),
            Self::key_only(KeyFunction::HalfNormal),
            Self::new(KeyFunction::HalfNormal, vec![2]).unwrap(),
            Self::key_only(KeyFunction::HazardRate),
            Self::new(KeyFunction::HazardRate, vec![2]).unwrap(),
        ]
    }
}

impl fmt::Display for DetectionFunctionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key.short())?;
        if !self.adjustments.is_empty() {
            let orders: Vec<String> = self.adjustments.iter().map(u32::to_string).collect();
            write!(f, "+cos({})", orders.join(","))?;
        }
        Ok(())
    }
}

impl FromStr for DetectionFunctionSpec {
    type Err = CtdsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim().to_ascii_lowercase();
        let (key, adj) = match s.split_once('+') {
            Some((k, a)) => (k.trim(), Some(a.trim())),
            None => (s.as_str(), None),
        };
        let key = match key {
            "uniform" | "unif" | "un" => KeyFunction::Uniform,
            "hn" | "halfnormal" | "half-normal" | "half_normal" => KeyFunction::HalfNormal,
            "hr" | "hazardrate" | "hazard-rate" | "hazard_rate" => KeyFunction::HazardRate,
            other => return Err(CtdsError::InvalidSpec(format!("unknown key function {other:?}"))),
        };
        let adjustments = match adj {
            None => Vec::new(),
            Some(a) => {
                let body = a
                    .strip_prefix("cos")
                    .ok_or_else(|| CtdsError::InvalidSpec(format!("only cosine adjustments are supported, got {a:?}")))?
                    .trim()
                    .trim_start_matches('(')
                    .trim_end_matches(')');
                body.split(',')
                    .map(|t| {
                        t.trim()
                            .parse::<u32>()
                            .map_err(|_| CtdsError::InvalidSpec(format!("bad adjustment order {t:?}")))
                    })
                    .collect::<Result<Vec<_>, _>>()?
            }
        };
        Self::new(key, adjustments)
    }
}

impl Serialize for DetectionFunctionSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for DetectionFunctionSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A fully parameterized detection function on `[0, w]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetectionFunction {
    pub spec: DetectionFunctionSpec,
    /// Scale in metres; `None` for the uniform key.
    pub sigma: Option<f64>,
    /// Hazard-rate shape `b`.
    pub shape: Option<f64>,
    /// Cosine coefficients, aligned with `spec.adjustments`.
    pub coefficients: Vec<f64>,
    pub w: f64,
}

impl DetectionFunction {
    pub fn new(
        spec: DetectionFunctionSpec,
        sigma: Option<f64>,
        shape: Option<f64>,
        coefficients: Vec<f64>,
        w: f64,
    ) -> Result<Self, CtdsError> {
        let need_sigma = spec.key != KeyFunction::Uniform;
        let need_shape = spec.key == KeyFunction::HazardRate;
        if sigma.is_some() != need_sigma || shape.is_some() != need_shape {
            return Err(CtdsError::InvalidSpec(format!("wrong key parameters for {spec}")));
        }
        if coefficients.len() != spec.adjustments.len() {
            return Err(CtdsError::InvalidSpec(format!(
                "{spec} needs {} adjustment coefficients, got {}",
                spec.adjustments.len(),
                coefficients.len()
            )));
        }
        let positive = |v: Option<f64>| v.is_none_or(|x| x > 0.0 && x.is_finite());
        if !positive(sigma) || !positive(shape) || !(w > 0.0 && w.is_finite()) {
            return Err(CtdsError::InvalidSpec("scale, shape and w must be positive".into()));
        }
        Ok(Self {
            spec,
            sigma,
            shape,
            coefficients,
            w,
        })
    }

    pub fn uniform(w: f64) -> Self {
        Self::new(DetectionFunctionSpec::key_only(KeyFunction::Uniform), None, None, vec![], w).unwrap()
    }

    pub fn half_normal(sigma: f64, w: f64) -> Result<Self, CtdsError> {
        Self::new(DetectionFunctionSpec::key_only(KeyFunction::HalfNormal), Some(sigma), None, vec![], w)
    }

    pub fn hazard_rate(sigma: f64, b: f64, w: f64) -> Result<Self, CtdsError> {
        Self::new(DetectionFunctionSpec::key_only(KeyFunction::HazardRate), Some(sigma), Some(b), vec![], w)
    }

    /// Optimizer coordinates: `[ln sigma][, ln b], a_1..a_m`.
    pub fn to_theta(&self) -> Vec<f64> {
        let mut t = Vec::with_capacity(self.spec.q());
        t.extend(self.sigma.map(f64::ln));
        t.extend(self.shape.map(f64::ln));
        t.extend_from_slice(&self.coefficients);
        t
    }

    pub fn from_theta(spec: &DetectionFunctionSpec, theta: &[f64], w: f64) -> Result<Self, CtdsError> {
        let k = spec.key.n_params();
        if theta.len() != spec.q() {
            return Err(CtdsError::InvalidSpec(format!("{spec}: expected {} parameters", spec.q())));
        }
        let sigma = (k >= 1).then(|| theta[0].exp());
        let shape = (k >= 2).then(|| theta[1].exp());
        Self::new(spec.clone(), sigma, shape, theta[k..].to_vec(), w)
    }

    fn key(&self, r: f64) -> f64 {
        match self.spec.key {
            KeyFunction::Uniform => 1.0,
            KeyFunction::HalfNormal => {
                let s = self.sigma.unwrap();
                (-r * r / (2.0 * s * s)).exp()
            }
            KeyFunction::HazardRate => {
                if r == 0.0 {
                    return 1.0;
                }
                let z = (r / self.sigma.unwrap()).powf(-self.shape.unwrap());
                -(-z).exp_m1()
            }
        }
    }

    fn series(&self, r: f64) -> f64 {
        1.0 + self
            .spec
            .adjustments
            .iter()
            .zip(&self.coefficients)
            .map(|(&j, &a)| a * (f64::from(j) * PI * r / self.w).cos())
            .sum::<f64>()
    }

    /// `g(r)` without range or feasibility checks.
    pub fn eval(&self, r: f64) -> f64 {
        if self.coefficients.is_empty() {
            return self.key(r);
        }
        self.key(r) * self.series(r) / self.series(0.0)
    }

    /// Requires `0 <= g <= 1` on an evenly spaced grid over `[0, w]`.
    pub fn check_feasible(&self) -> Result<(), CtdsError> {
        if !self.coefficients.is_empty() && !(self.series(0.0) > 0.0) {
            return Err(CtdsError::NonMonotoneOrNegative(self.spec.to_string()));
        }
        let step = self.w / (FEASIBILITY_GRID - 1) as f64;
        for i in 0..FEASIBILITY_GRID {
            let v = self.eval(i as f64 * step);
            if !(v >= 0.0 && v <= 1.0 + 1e-12) {
                return Err(CtdsError::NonMonotoneOrNegative(self.spec.to_string()));
            }
        }
        Ok(())
    }

    /// Checked evaluation.
    pub fn g(&self, r: f64) -> Result<f64, CtdsError> {
        if !(0.0..=self.w).contains(&r) {
            return Err(CtdsError::OutOfRange { r, w: self.w });
        }
        self.check_feasible()?;
        Ok(self.eval(r))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_values() {
        let hn = DetectionFunction::half_normal(5.0, 15.0).unwrap();
        assert_eq!(hn.g(0.0).unwrap(), 1.0);
        assert!((hn.g(5.0).unwrap() - (-0.5f64).exp()).abs() < 1e-15);
        assert!((hn.g(5.0).unwrap() - 0.60653).abs() < 1e-5);

        let hr = DetectionFunction::hazard_rate(4.0, 2.0, 15.0).unwrap();
        assert_eq!(hr.g(0.0).unwrap(), 1.0);
        assert!((hr.g(4.0).unwrap() - (1.0 - (-1.0f64).exp())).abs() < 1e-15);
        assert!((hr.g(4.0).unwrap() - 0.63212).abs() < 1e-5);

        assert_eq!(DetectionFunction::uniform(10.0).g(7.0).unwrap(), 1.0);
    }

    #[test]
    fn adjustments_rescale_to_one_at_origin() {
        let spec: DetectionFunctionSpec = "hn+cos(2)".parse().unwrap();
        let f = DetectionFunction::new(spec, Some(6.0), None, vec![0.1], 15.0).unwrap();
        assert!((f.eval(0.0) - 1.0).abs() < 1e-15);
        f.check_feasible().unwrap();
        let r: f64 = 3.0;
        let expected = (-r * r / 72.0).exp() * (1.0 + 0.1 * (2.0 * PI * r / 15.0).cos()) / 1.1;
        assert!((f.eval(r) - expected).abs() < 1e-15);
    }

    #[test]
    fn infeasible_series_rejected() {
        let spec: DetectionFunctionSpec = "uniform+cos(1)".parse().unwrap();
        // 1 + a cos(pi r / w) normalized by 1 + a; a = -0.8 makes g rise to 9 at w
        let f = DetectionFunction::new(spec.clone(), None, None, vec![-0.8], 10.0).unwrap();
        assert!(matches!(f.check_feasible(), Err(CtdsError::NonMonotoneOrNegative(_))));
        assert!(f.g(1.0).is_err());
        // a = 2 goes negative at the far end
        let f = DetectionFunction::new(spec.clone(), None, None, vec![2.0], 10.0).unwrap();
        assert!(f.check_feasible().is_err());
        let f = DetectionFunction::new(spec, None, None, vec![0.5], 10.0).unwrap();
        assert!(f.check_feasible().is_ok());
    }

    #[test]
    fn out_of_range_query() {
        let hn = DetectionFunction::half_normal(5.0, 15.0).unwrap();
        assert!(matches!(hn.g(15.1), Err(CtdsError::OutOfRange { .. })));
        assert!(hn.g(-0.1).is_err());
    }

    #[test]
    fn spec_parsing_and_display() {
        for s in ["uniform", "hn", "hr+cos(2)", "uniform+cos(1,2)", "hn+cos(2,3)"] {
            let spec: DetectionFunctionSpec = s.parse().unwrap();
            assert_eq!(spec.to_string(), s);
        }
        let spec: DetectionFunctionSpec = "Half-Normal + cos 2, 3".parse().unwrap();
        assert_eq!(spec.q(), 3);
        assert!("hn+herm(2)".parse::<DetectionFunctionSpec>().is_err());
        assert!("hn+cos(0)".parse::<DetectionFunctionSpec>().is_err());
        assert!("hn+cos(2,2)".parse::<DetectionFunctionSpec>().is_err());
        assert!("gamma".parse::<DetectionFunctionSpec>().is_err());
        assert_eq!("hr".parse::<DetectionFunctionSpec>().unwrap().q(), 2);
        assert_eq!("uniform".parse::<DetectionFunctionSpec>().unwrap().q(), 0);
    }

    #[test]
    fn theta_round_trip() {
        let spec: DetectionFunctionSpec = "hr+cos(2)".parse().unwrap();
        let f = DetectionFunction::new(spec.clone(), Some(4.0), Some(2.5), vec![0.2], 15.0).unwrap();
        let back = DetectionFunction::from_theta(&spec, &f.to_theta(), 15.0).unwrap();
        assert!((back.sigma.unwrap() - 4.0).abs() < 1e-12);
        assert!((back.shape.unwrap() - 2.5).abs() < 1e-12);
        assert_eq!(back.coefficients, vec![0.2]);
        assert!(DetectionFunction::from_theta(&spec, &[1.0], 15.0).is_err());
    }

    #[test]
    fn wrong_parameter_sets_rejected() {
        let hn = DetectionFunctionSpec::key_only(KeyFunction::HalfNormal);
        assert!(DetectionFunction::new(hn.clone(), None, None, vec![], 10.0).is_err());
        assert!(DetectionFunction::new(hn.clone(), Some(1.0), Some(1.0), vec![], 10.0).is_err());
        assert!(DetectionFunction::new(hn, Some(-1.0), None, vec![], 10.0).is_err());
    }
}
