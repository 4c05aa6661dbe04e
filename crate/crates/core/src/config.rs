//! Solver configuration.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SaaError};

/// Regularization weight: a single value or a strictly decreasing schedule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LambdaSpec {
    Single(f64),
    Schedule(Vec<f64>),
}

impl LambdaSpec {
    /// `n` values spaced logarithmically from `hi` down to `lo`, inclusive.
    pub fn log_schedule(hi: f64, lo: f64, n: usize) -> Result<Self> {
        if !(hi > 0.0 && lo > 0.0) || n == 0 {
            return Err(SaaError::invalid(format!(
                "log schedule needs hi, lo > 0 and n ≥ 1 (got {hi}, {lo}, {n})"
            )));
        }
        if n == 1 {
            return Ok(LambdaSpec::Schedule(vec![lo]));
        }
        if hi <= lo {
            return Err(SaaError::invalid("log schedule must decrease: hi > lo"));
        }
        let (lh, ll) = (hi.ln(), lo.ln());
        let values = (0..n)
            .map(|i| {
                if i == 0 {
                    hi
                } else if i == n - 1 {
                    lo
                } else {
                    (lh + (ll - lh) * i as f64 / (n - 1) as f64).exp()
                }
            })
            .collect();
        Ok(LambdaSpec::Schedule(values))
    }

    /// The continuation schedule used by default: 8 values from 30 to 1.
    pub fn default_schedule() -> Self {
        Self::log_schedule(30.0, 1.0, 8).expect("static schedule")
    }

    pub fn values(&self) -> Vec<f64> {
        match self {
            LambdaSpec::Single(v) => vec![*v],
            LambdaSpec::Schedule(v) => v.clone(),
        }
    }

    /// The λ the final solve runs at.
    pub fn final_value(&self) -> f64 {
        match self {
            LambdaSpec::Single(v) => *v,
            LambdaSpec::Schedule(v) => *v.last().unwrap_or(&0.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let values = self.values();
        if values.is_empty() {
            return Err(SaaError::invalid("lambda schedule is empty"));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(SaaError::invalid("lambda values must be finite and ≥ 0"));
        }
        if values.windows(2).any(|w| w[1] >= w[0]) {
            return Err(SaaError::invalid("lambda schedule must be strictly decreasing"));
        }
        Ok(())
    }
}

impl fmt::Display for LambdaSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LambdaSpec::Single(v) => write!(f, "{v}"),
            LambdaSpec::Schedule(v) => {
                let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
                write!(f, "{}", parts.join(","))
            }
        }
    }
}

/// Accepts `1.5`, a comma list `30,10,1`, or `log:hi:lo:n`.
impl FromStr for LambdaSpec {
    type Err = SaaError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = |what: &str| SaaError::invalid(format!("bad lambda spec {s:?}: {what}"));
        if let Some(rest) = s.strip_prefix("log:") {
            let parts: Vec<&str> = rest.split(':').collect();
            if parts.len() != 3 {
                return Err(bad("expected log:hi:lo:n"));
            }
            let hi: f64 = parts[0].parse().map_err(|_| bad("hi"))?;
            let lo: f64 = parts[1].parse().map_err(|_| bad("lo"))?;
            let n: usize = parts[2].parse().map_err(|_| bad("n"))?;
            return Self::log_schedule(hi, lo, n);
        }
        let values: Vec<f64> = s
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad("not a number list"))?;
        let spec = match values.as_slice() {
            [] => return Err(bad("empty")),
            [v] => LambdaSpec::Single(*v),
            _ => LambdaSpec::Schedule(values),
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Parameters of the penalized sparse archetypal problem and its solver.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SaaConfig {
    /// Number of archetypes.
    pub k: usize,
    /// Global budget on the nonzeros of `H`.
    pub ell: usize,
    pub lambda: LambdaSpec,
    /// Floor on `σ_max(H)²` inside the `W`-block Lipschitz constant.
    pub eps_safeguard: f64,
    /// Relative decrease of Ψ over a sweep below which the solver may stop.
    pub tol_objective: f64,
    /// Largest block change of a sweep below which the point is stationary.
    pub tol_stationary: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for SaaConfig {
    fn default() -> Self {
        Self {
            k: 3,
            ell: 3,
            lambda: LambdaSpec::Single(1.0),
            eps_safeguard: 1e-6,
            tol_objective: 1e-8,
            tol_stationary: 1e-6,
            max_iter: 10_000,
            seed: 0,
        }
    }
}

impl SaaConfig {
    pub fn new(k: usize, ell: usize, lambda: f64) -> Self {
        Self {
            k,
            ell,
            lambda: LambdaSpec::Single(lambda),
            ..Self::default()
        }
    }

    /// Checks ranges against a data matrix with `n` columns.
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.k == 0 {
            return Err(SaaError::invalid("k must be positive"));
        }
        if self.ell > self.k * n {
            return Err(SaaError::invalid(format!(
                "ell = {} exceeds k·n = {}",
                self.ell,
                self.k * n
            )));
        }
        if self.ell < self.k {
            log::warn!(
                "ell = {} < k = {}: some archetype rows are forced to zero",
                self.ell,
                self.k
            );
        }
        self.lambda.validate()?;
        for (name, v) in [
            ("eps_safeguard", self.eps_safeguard),
            ("tol_objective", self.tol_objective),
            ("tol_stationary", self.tol_stationary),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(SaaError::invalid(format!("{name} must be positive")));
            }
        }
        Ok(())
    }

    pub fn with_lambda(&self, lambda: f64) -> Self {
        Self {
            lambda: LambdaSpec::Single(lambda),
            ..self.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_schedule_is_log_spaced() {
        let v = LambdaSpec::default_schedule().values();
        assert_eq!(v.len(), 8);
        assert_eq!(v[0], 30.0);
        assert_eq!(v[7], 1.0);
        let ratio = v[0] / v[1];
        for w in v.windows(2) {
            assert!((w[0] / w[1] - ratio).abs() < 1e-9);
        }
        assert!((ratio - 30f64.powf(1.0 / 7.0)).abs() < 1e-12);
    }

    #[test]
    fn parses_lambda_specs() {
        assert_eq!("2.5".parse::<LambdaSpec>().unwrap(), LambdaSpec::Single(2.5));
        assert_eq!(
            "log:30:1:8".parse::<LambdaSpec>().unwrap(),
            LambdaSpec::default_schedule()
        );
        assert_eq!(
            "10,3,1".parse::<LambdaSpec>().unwrap(),
            LambdaSpec::Schedule(vec![10.0, 3.0, 1.0])
        );
        assert!("1,3".parse::<LambdaSpec>().is_err());
        assert!("log:1:30:4".parse::<LambdaSpec>().is_err());
        assert!("abc".parse::<LambdaSpec>().is_err());
    }

    #[test]
    fn json_mirrors_field_names() {
        let cfg: SaaConfig =
            serde_json::from_str(r#"{"k":4,"ell":10,"lambda":[3.0,1.0],"seed":9}"#).unwrap();
        assert_eq!(cfg.k, 4);
        assert_eq!(cfg.lambda, LambdaSpec::Schedule(vec![3.0, 1.0]));
        assert_eq!(cfg.tol_objective, 1e-8);
        let back = serde_json::to_value(&cfg).unwrap();
        for key in [
            "k",
            "ell",
            "lambda",
            "eps_safeguard",
            "tol_objective",
            "tol_stationary",
            "max_iter",
            "seed",
        ] {
            assert!(back.get(key).is_some(), "{key}");
        }
    }

    #[test]
    fn validate_rejects_bad_ranges() {
        assert!(SaaConfig::new(0, 1, 1.0).validate(5).is_err());
        assert!(SaaConfig::new(2, 11, 1.0).validate(5).is_err());
        assert!(SaaConfig::new(2, 4, -1.0).validate(5).is_err());
        assert!(SaaConfig::new(2, 4, 1.0).validate(5).is_ok());
    }
}
