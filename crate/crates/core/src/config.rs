use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ladder and decision thresholds for tail exponent fitting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailFitConfig {
    /// Geometric ratio between consecutive ladder points.
    pub ratio: f64,
    pub points: usize,
    pub tau_p: f64,
    pub tau_q: f64,
}

impl Default for TailFitConfig {
    fn default() -> Self {
        TailFitConfig {
            ratio: 1.5,
            points: 48,
            tau_p: 0.05,
            tau_q: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionsConfig {
    /// Minimum rise of a ratio over the grid accepted as "grows to infinity".
    pub growth_margin: f64,
    /// Down-ticks smaller than this are treated as noise.
    pub monotone_tol: f64,
    pub grid_points: usize,
    /// Threshold escalation stops once the threshold exceeds this value.
    pub escalation_cap: f64,
    /// Allow central differences when no derivative evaluator is supplied.
    pub numeric_derivative: bool,
    /// Grid size for pointwise domination checks.
    pub domination_grid: usize,
}

impl Default for ConditionsConfig {
    fn default() -> Self {
        ConditionsConfig {
            growth_margin: 10.0,
            monotone_tol: 1e-9,
            grid_points: 64,
            escalation_cap: 1e6,
            numeric_derivative: true,
            domination_grid: 128,
        }
    }
}

/// Run-wide numeric settings.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Config {
    pub tailfit: TailFitConfig,
    pub conditions: ConditionsConfig,
}

impl Config {
    /// Override one setting by dotted key, e.g. `tailfit.tau_q`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let num = || {
            value
                .trim()
                .parse::<f64>()
                .map_err(|_| Error::invalid(format!("{key}: {value:?} is not a number")))
        };
        match key {
            "tailfit.ratio" => {
                let v = num()?;
                if !(v > 1.0 && v <= 4.0) {
                    return Err(Error::invalid("tailfit.ratio must lie in (1, 4]"));
                }
                self.tailfit.ratio = v;
            }
            "tailfit.points" => {
                let v = value
                    .trim()
                    .parse::<usize>()
                    .map_err(|_| Error::invalid(format!("{key}: {value:?} is not a count")))?;
                if !(12..=400).contains(&v) {
                    return Err(Error::invalid("tailfit.points must lie in [12, 400]"));
                }
                self.tailfit.points = v;
            }
            "tailfit.tau_p" => self.tailfit.tau_p = nonnegative(key, num()?)?,
            "tailfit.tau_q" => self.tailfit.tau_q = nonnegative(key, num()?)?,
            "conditions.growth_margin" => self.conditions.growth_margin = nonnegative(key, num()?)?,
            _ => {
                return Err(Error::invalid(format!(
                    "unknown setting {key:?} (known: tailfit.ratio, tailfit.points, \
                     tailfit.tau_p, tailfit.tau_q, conditions.growth_margin)"
                )))
            }
        }
        Ok(())
    }
}

fn nonnegative(key: &str, v: f64) -> Result<f64> {
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::invalid(format!("{key} must be a finite number >= 0")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_known_keys() {
        let mut c = Config::default();
        c.set("tailfit.tau_q", "0.2").unwrap();
        c.set("tailfit.points", "60").unwrap();
        c.set("conditions.growth_margin", "5").unwrap();
        assert_eq!(c.tailfit.tau_q, 0.2);
        assert_eq!(c.tailfit.points, 60);
        assert_eq!(c.conditions.growth_margin, 5.0);
    }

    #[test]
    fn rejects_bad_input() {
        let mut c = Config::default();
        assert!(c.set("tailfit.nope", "1").is_err());
        assert!(c.set("tailfit.ratio", "abc").is_err());
        assert!(c.set("tailfit.ratio", "0.5").is_err());
        assert!(c.set("tailfit.tau_p", "-1").is_err());
        assert_eq!(c, Config::default());
    }
}
