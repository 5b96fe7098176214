use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use statrs::function::gamma::ln_gamma;

use super::{DensitySpec, Distribution, LogFn, LogPmfFn, PmfSpec, SpecRecipe, SupportKind, TransformStep};
use crate::error::{Error, Result};
use crate::verdict::{Conclusion, RuleId};

/// Ground truth attached to a catalog entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Expected {
    pub conclusion: Conclusion,
    /// A rule that must be among the fired ones.
    pub rule: RuleId,
}

#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub name: String,
    pub parameters: BTreeMap<String, f64>,
    pub recipe: SpecRecipe,
    pub spec: Distribution,
    pub expected: Option<Expected>,
    pub notes: String,
}

fn param(params: &BTreeMap<String, f64>, key: &str, default: f64) -> f64 {
    params.get(key).copied().unwrap_or(default)
}

fn check_keys(family: &str, params: &BTreeMap<String, f64>, allowed: &[&str]) -> Result<()> {
    for k in params.keys() {
        if !allowed.contains(&k.as_str()) {
            return Err(Error::spec(format!(
                "family {family:?} has no parameter {k:?} (expected one of {allowed:?})"
            )));
        }
    }
    Ok(())
}

fn positive(family: &str, key: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::spec(format!("{family}: {key} must be positive, got {v}")))
    }
}

/// Build a family from `(name, value)` pairs; absent parameters take defaults.
pub fn family(name: &str, params: &[(&str, f64)]) -> Result<Distribution> {
    let map = params.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    family_from_map(name, &map)
}

pub(crate) fn family_from_map(name: &str, params: &BTreeMap<String, f64>) -> Result<Distribution> {
    match name {
        "gaussian" => {
            check_keys(name, params, &["sigma"])?;
            let sigma = positive(name, "sigma", param(params, "sigma", 1.0))?;
            let ln_norm = -sigma.ln() - 0.5 * (2.0 * PI).ln();
            let s2 = sigma * sigma;
            let f: LogFn = Arc::new(move |x: f64| -x * x / (2.0 * s2) + ln_norm);
            let d: LogFn = Arc::new(move |x: f64| -x / s2);
            Ok(DensitySpec::new(
                format!("gaussian(sigma={sigma})"),
                SupportKind::HamburgerSymmetric,
                f,
                1.1 * sigma.max(1.0 / 1.1 + 1e-9),
            )?
            .with_derivative(d)
            .normalized()
            .into())
        }
        "exponential" => {
            check_keys(name, params, &["lambda"])?;
            let lambda = positive(name, "lambda", param(params, "lambda", 1.0))?;
            let ln_l = lambda.ln();
            let f: LogFn = Arc::new(move |x: f64| if x < 0.0 { f64::NEG_INFINITY } else { ln_l - lambda * x });
            let d: LogFn = Arc::new(move |_x: f64| -lambda);
            Ok(DensitySpec::new(
                format!("exponential(lambda={lambda})"),
                SupportKind::Stieltjes,
                f,
                3.0 * (1.0 / lambda).max(1.0),
            )?
            .with_derivative(d)
            .normalized()
            .into())
        }
        "exp_power" => {
            check_keys(name, params, &["lambda"])?;
            let lambda = positive(name, "lambda", param(params, "lambda", 2.0))?;
            let ln_c = lambda.ln() - std::f64::consts::LN_2 - ln_gamma(1.0 / lambda);
            let f: LogFn = Arc::new(move |x: f64| ln_c - x.powf(lambda));
            let d: LogFn = Arc::new(move |x: f64| -lambda * x.powf(lambda - 1.0));
            Ok(DensitySpec::new(
                format!("exp_power(lambda={lambda})"),
                SupportKind::HamburgerSymmetric,
                f,
                (2.0 / lambda).exp().max(3.0),
            )?
            .with_derivative(d)
            .normalized()
            .into())
        }
        "example1" => {
            check_keys(name, params, &["alpha"])?;
            let alpha = param(params, "alpha", 1.0);
            if !(alpha > 0.0 && alpha <= 1.0) {
                return Err(Error::spec(format!("example1: alpha must lie in (0, 1], got {alpha}")));
            }
            // zero on [-1, 1], where ln|x| <= 0
            let f: LogFn = Arc::new(move |x: f64| {
                if x <= 1.0 {
                    f64::NEG_INFINITY
                } else {
                    -x / x.ln().powf(alpha)
                }
            });
            let d: LogFn = Arc::new(move |x: f64| {
                let l = x.ln();
                -l.powf(-alpha) + alpha * l.powf(-alpha - 1.0)
            });
            Ok(DensitySpec::new(
                format!("example1(alpha={alpha})"),
                SupportKind::HamburgerSymmetric,
                f,
                10.0,
            )?
            .with_derivative(d)
            .into())
        }
        "lognormal" => {
            check_keys(name, params, &["mu", "sigma"])?;
            let mu = param(params, "mu", 0.0);
            let sigma = positive(name, "sigma", param(params, "sigma", 1.0))?;
            let ln_norm = -sigma.ln() - 0.5 * (2.0 * PI).ln();
            let s2 = sigma * sigma;
            let f: LogFn = Arc::new(move |x: f64| {
                if x <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                let l = x.ln();
                -(l - mu) * (l - mu) / (2.0 * s2) - l + ln_norm
            });
            let d: LogFn = Arc::new(move |x: f64| -(x.ln() - mu) / (s2 * x) - 1.0 / x);
            Ok(DensitySpec::new(
                format!("lognormal(mu={mu},sigma={sigma})"),
                SupportKind::Stieltjes,
                f,
                5.0 * mu.exp(),
            )?
            .with_derivative(d)
            .normalized()
            .into())
        }
        "example2" => {
            check_keys(name, params, &[])?;
            // density of xi^{3/2}, xi ~ Exp(1)
            let ln_k = (2.0f64 / 3.0).ln();
            let f: LogFn = Arc::new(move |x: f64| {
                if x <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                ln_k - x.ln() / 3.0 - x.powf(2.0 / 3.0)
            });
            let d: LogFn = Arc::new(|x: f64| -1.0 / (3.0 * x) - (2.0 / 3.0) * x.powf(-1.0 / 3.0));
            Ok(DensitySpec::new("example2", SupportKind::Stieltjes, f, 5.0)?
                .with_derivative(d)
                .normalized()
                .into())
        }
        "geometric" => {
            check_keys(name, params, &["q"])?;
            let q = param(params, "q", 0.5);
            if !(q > 0.0 && q < 1.0) {
                return Err(Error::spec(format!("geometric: q must lie in (0, 1), got {q}")));
            }
            let (ln_q, ln_1q) = (q.ln(), (1.0 - q).ln());
            let p: LogPmfFn = Arc::new(move |n: i64| {
                if n < 0 {
                    f64::NEG_INFINITY
                } else {
                    ln_1q + n as f64 * ln_q
                }
            });
            Ok(PmfSpec::new(
                format!("geometric(q={q})"),
                SupportKind::NonnegativeInteger,
                p,
                5,
            )?
            .normalized()
            .into())
        }
        "sym_exp_power_pmf" => {
            check_keys(name, params, &["lambda"])?;
            let lambda = positive(name, "lambda", param(params, "lambda", 1.0))?;
            let p: LogPmfFn = Arc::new(move |j: i64| -(j.unsigned_abs() as f64).powf(lambda));
            let threshold = (2.0 / lambda).exp().max(4.0).ceil() as i64;
            Ok(PmfSpec::new(
                format!("sym_exp_power_pmf(lambda={lambda})"),
                SupportKind::IntegerSymmetric,
                p,
                threshold,
            )?
            .into())
        }
        other => Err(Error::spec(format!(
            "unknown family {other:?} (known: gaussian, exponential, exp_power, example1, \
             lognormal, example2, geometric, sym_exp_power_pmf)"
        ))),
    }
}

fn entry(
    name: &str,
    recipe: SpecRecipe,
    expected: Option<(Conclusion, RuleId)>,
    notes: &str,
) -> CatalogEntry {
    let spec = recipe
        .build()
        .unwrap_or_else(|e| panic!("catalog entry {name} does not build: {e}"));
    CatalogEntry {
        name: name.to_string(),
        parameters: recipe.params.clone(),
        recipe,
        spec,
        expected: expected.map(|(conclusion, rule)| Expected { conclusion, rule }),
        notes: notes.to_string(),
    }
}

/// The built-in regression catalog.
pub fn catalog() -> Vec<CatalogEntry> {
    use Conclusion::{Determinate, Indeterminate};
    let ceil = |mode: &str| {
        SpecRecipe::new("example2", &[])
            .then(TransformStep::new("ceiling_u_variant").with_arg("mode", Value::from(mode)))
    };
    vec![
        entry(
            "gaussian",
            SpecRecipe::new("gaussian", &[("sigma", 1.0)]),
            Some((Determinate, RuleId::Thm1)),
            "standard normal; u(x) = (x^2/2 + ln(2 pi)/2)/ln x increases from about 2.05",
        ),
        entry(
            "exp1",
            SpecRecipe::new("exponential", &[("lambda", 1.0)]),
            Some((Determinate, RuleId::Thm2)),
            "Exp(1) on the half-line",
        ),
        entry(
            "exp_power_0.5",
            SpecRecipe::new("exp_power", &[("lambda", 0.5)]),
            Some((Indeterminate, RuleId::KreinIndetH)),
            "c exp(-|x|^(1/2)); logarithmic integral finite",
        ),
        entry(
            "exp_power_1",
            SpecRecipe::new("exp_power", &[("lambda", 1.0)]),
            Some((Determinate, RuleId::LinDet)),
            "Laplace density; converse Krein with L(x) = x",
        ),
        entry(
            "exp_power_3",
            SpecRecipe::new("exp_power", &[("lambda", 3.0)]),
            Some((Determinate, RuleId::Thm1)),
            "c exp(-|x|^3)",
        ),
        entry(
            "example1_a1",
            SpecRecipe::new("example1", &[("alpha", 1.0)]),
            Some((Determinate, RuleId::LinDet)),
            "c exp(-|x|/ln|x|), f = 0 on [-1, 1]; K* finite yet determinate",
        ),
        entry(
            "example1_a0.5",
            SpecRecipe::new("example1", &[("alpha", 0.5)]),
            Some((Determinate, RuleId::LinDet)),
            "c exp(-|x|/(ln|x|)^(1/2)), f = 0 on [-1, 1]",
        ),
        entry(
            "lognormal",
            SpecRecipe::new("lognormal", &[("mu", 0.0), ("sigma", 1.0)]),
            Some((Indeterminate, RuleId::KreinIndetS)),
            "classical indeterminate Stieltjes example",
        ),
        entry(
            "example2",
            SpecRecipe::new("example2", &[]),
            Some((Determinate, RuleId::Thm2)),
            "density of xi^(3/2), xi ~ Exp(1)",
        ),
        entry(
            "example2_ceil_arg",
            ceil("ceil_argument"),
            Some((Determinate, RuleId::Lemma4Domination)),
            "u_1(x) = u(ceil x) on [a, inf)",
        ),
        entry(
            "example2_ceil_value",
            ceil("ceil_value"),
            Some((Determinate, RuleId::Lemma4Domination)),
            "u_2(x) = ceil(u(x)) on [a, inf)",
        ),
        entry(
            "example2_perturbed",
            SpecRecipe::new("example2", &[])
                .then(TransformStep::new("perturb_bounded_sin").with_arg("amplitude", Value::from(0.5))),
            Some((Determinate, RuleId::MomentDomination)),
            "c g(x) [1 + sin(x)/2]",
        ),
        entry(
            "example2_floor",
            SpecRecipe::new("example2", &[]).then(TransformStep::new("floor_discretize")),
            Some((Determinate, RuleId::MomentDomination)),
            "floor(xi^(3/2)); moments bounded by those of xi^(3/2)",
        ),
        entry(
            "gaussian_squared",
            SpecRecipe::new("gaussian", &[("sigma", 1.0)])
                .then(TransformStep::new("square_pushforward")),
            Some((Determinate, RuleId::SquareCorollary)),
            "chi-square(1), the square of a Thm1-determinate variable",
        ),
        entry(
            "exp1_symmetrized",
            SpecRecipe::new("exponential", &[("lambda", 1.0)])
                .then(TransformStep::new("symmetrize_sqrt")),
            Some((Determinate, RuleId::Thm1)),
            "|x| exp(-x^2)",
        ),
        entry(
            "geometric_half",
            SpecRecipe::new("geometric", &[("q", 0.5)]),
            Some((Determinate, RuleId::Thm4)),
            "p_n = 2^-(n+1) on {0, 1, ...}",
        ),
        entry(
            "geometric_half_symmetrized",
            SpecRecipe::new("geometric", &[("q", 0.5)]).then(TransformStep::new("symmetrize_pmf")),
            Some((Determinate, RuleId::Thm3)),
            "q_0 = 1/2, q_j = 2^-(|j|+2)",
        ),
        entry(
            "sym_pmf_exp1",
            SpecRecipe::new("sym_exp_power_pmf", &[("lambda", 1.0)]),
            Some((Determinate, RuleId::Thm3)),
            "p_j = c exp(-|j|)",
        ),
        entry(
            "sym_pmf_sqrt",
            SpecRecipe::new("sym_exp_power_pmf", &[("lambda", 0.5)]),
            Some((Indeterminate, RuleId::PedersenIndet)),
            "p_j = c exp(-|j|^(1/2))",
        ),
    ]
}

pub fn catalog_entry(name: &str) -> Option<CatalogEntry> {
    catalog().into_iter().find(|e| e.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn names_are_unique() {
        let c = catalog();
        let names: HashSet<_> = c.iter().map(|e| e.name.clone()).collect();
        assert_eq!(names.len(), c.len());
    }

    #[test]
    fn example1_lookup() {
        let e = catalog_entry("example1_a1").unwrap();
        let d = e.spec.as_density().unwrap();
        assert_eq!(d.support(), SupportKind::HamburgerSymmetric);
        assert!(!d.is_normalized());
        let ln_c = d.log_norm_constant().unwrap();
        let x = 50.0f64;
        assert!((d.eval_log_density(x).unwrap() - (ln_c - x / x.ln())).abs() < 1e-12);
        assert_eq!(d.eval_log_density(0.0).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn expected_verdicts() {
        let e = catalog_entry("lognormal").unwrap();
        assert_eq!(e.spec.support(), SupportKind::Stieltjes);
        assert_eq!(e.expected.unwrap().conclusion, Conclusion::Indeterminate);
        let g = catalog_entry("gaussian").unwrap();
        assert_eq!(g.expected.unwrap().conclusion, Conclusion::Determinate);
    }

    #[test]
    fn exp_power_normalizer_matches_quadrature() {
        for lambda in [0.5, 1.0, 3.0] {
            let d = family("exp_power", &[("lambda", lambda)]).unwrap();
            let m = d.total_log_mass().unwrap();
            assert!(m.ln_value.abs() < 1e-11, "lambda={lambda}: {}", m.ln_value);
        }
    }

    #[test]
    fn bad_parameters_are_spec_errors() {
        assert!(matches!(family("gaussian", &[("sigma", -1.0)]), Err(Error::Spec(_))));
        assert!(matches!(family("gaussian", &[("mean", 0.0)]), Err(Error::Spec(_))));
        assert!(matches!(family("example1", &[("alpha", 1.5)]), Err(Error::Spec(_))));
        assert!(matches!(family("geometric", &[("q", 1.0)]), Err(Error::Spec(_))));
    }
}
