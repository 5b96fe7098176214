use std::f64::consts::LN_2;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{DensitySpec, LogFn, LogPmfFn, PmfSpec, SpecFlags, SupportKind};
use crate::error::{Error, Result};
use crate::quadrature;

/// Lowest threshold handed out by transforms that shrink it.
const MIN_DERIVED_THRESHOLD: f64 = 1.1;

fn require(spec: &DensitySpec, support: SupportKind, op: &str) -> Result<()> {
    if spec.support() != support {
        return Err(Error::invalid(format!(
            "{op} needs a {support:?} density, got {:?} ({})",
            spec.support(),
            spec.name()
        )));
    }
    Ok(())
}

fn push(provenance: &[String], step: String) -> Vec<String> {
    let mut p = provenance.to_vec();
    p.push(step);
    p
}

/// Density `h(x) = |x| g(x^2)` of the symmetrization of `sqrt(Y)`; its
/// moment of order `2k` equals the `k`-th moment of `Y`.
pub fn symmetrize_sqrt(spec: &DensitySpec) -> Result<DensitySpec> {
    require(spec, SupportKind::Stieltjes, "symmetrize_sqrt")?;
    let ln_c = spec.log_norm_constant()?;
    let base = spec.clone();
    let log_h: LogFn = Arc::new(move |x: f64| {
        if x == 0.0 {
            return f64::NEG_INFINITY;
        }
        x.ln() + base.raw_log_density(x * x) + ln_c
    });
    let threshold = spec.threshold().sqrt().max(MIN_DERIVED_THRESHOLD);
    let mut out = DensitySpec::new(
        format!("{}.symmetrize_sqrt", spec.name()),
        SupportKind::HamburgerSymmetric,
        log_h,
        threshold,
    )?
    .normalized()
    .with_flags(spec.flags())
    .with_provenance(push(spec.provenance(), "symmetrize_sqrt".into()));
    if spec.has_derivative() {
        let base = spec.clone();
        out = out.with_derivative(Arc::new(move |x: f64| {
            1.0 / x + 2.0 * x * base.log_derivative(x * x).unwrap_or(f64::NAN)
        }));
    }
    Ok(out)
}

/// `q_0 = p_0`, `q_j = p_|j| / 2`: a symmetric pmf on the integers with
/// the same even moments.
pub fn symmetrize_pmf(spec: &PmfSpec) -> Result<PmfSpec> {
    if spec.support() != SupportKind::NonnegativeInteger {
        return Err(Error::invalid(format!(
            "symmetrize_pmf needs a pmf on the nonnegative integers, got {:?}",
            spec.support()
        )));
    }
    let ln_c = spec.log_norm_constant()?;
    let base = spec.clone();
    let log_q: LogPmfFn = Arc::new(move |j: i64| {
        let p = base.raw_log_pmf(j) + ln_c;
        if j == 0 {
            p
        } else {
            p - LN_2
        }
    });
    Ok(PmfSpec::new(
        format!("{}.symmetrize_pmf", spec.name()),
        SupportKind::IntegerSymmetric,
        log_q,
        spec.threshold(),
    )?
    .normalized()
    .with_provenance(push(spec.provenance(), "symmetrize_pmf".into())))
}

/// Density of `X^2` for a symmetric `X`: `f(sqrt y) / sqrt y`.
pub fn square_pushforward(spec: &DensitySpec) -> Result<DensitySpec> {
    require(spec, SupportKind::HamburgerSymmetric, "square_pushforward")?;
    let ln_c = spec.log_norm_constant()?;
    let base = spec.clone();
    let log_q: LogFn = Arc::new(move |y: f64| {
        if y < 0.0 {
            return f64::NEG_INFINITY;
        }
        base.raw_log_density(y.sqrt()) + ln_c - 0.5 * y.ln()
    });
    let threshold = (spec.threshold() * spec.threshold()).max(MIN_DERIVED_THRESHOLD);
    let mut out = DensitySpec::new(
        format!("{}.square_pushforward", spec.name()),
        SupportKind::Stieltjes,
        log_q,
        threshold,
    )?
    .normalized()
    .with_flags(spec.flags())
    .with_provenance(push(spec.provenance(), "square_pushforward".into()));
    if spec.has_derivative() {
        let base = spec.clone();
        out = out.with_derivative(Arc::new(move |y: f64| {
            let r = y.sqrt();
            base.log_derivative(r).unwrap_or(f64::NAN) / (2.0 * r) - 0.5 / y
        }));
    }
    Ok(out)
}

/// `g(x) [1 + amplitude sin x]`, renormalized. Flags the result as
/// oscillating.
pub fn perturb_bounded_sin(spec: &DensitySpec, amplitude: f64) -> Result<DensitySpec> {
    require(spec, SupportKind::Stieltjes, "perturb_bounded_sin")?;
    if !(0.0..1.0).contains(&amplitude) {
        return Err(Error::invalid(format!(
            "amplitude must lie in [0, 1), got {amplitude}"
        )));
    }
    let ln_c = spec.log_norm_constant()?;
    let base = spec.clone();
    let log_p: LogFn =
        Arc::new(move |x: f64| base.raw_log_density(x) + ln_c + (amplitude * x.sin()).ln_1p());
    let flags = SpecFlags {
        oscillating: spec.flags().oscillating || amplitude > 0.0,
        ..spec.flags()
    };
    let mut out = DensitySpec::new(
        format!("{}.perturb_bounded_sin({amplitude})", spec.name()),
        SupportKind::Stieltjes,
        log_p,
        spec.threshold(),
    )?
    .with_flags(flags)
    .with_provenance(push(
        spec.provenance(),
        format!("perturb_bounded_sin(amplitude={amplitude})"),
    ));
    if amplitude == 0.0 {
        out = out.normalized();
    }
    if spec.has_derivative() {
        let base = spec.clone();
        out = out.with_derivative(Arc::new(move |x: f64| {
            base.log_derivative(x).unwrap_or(f64::NAN)
                + amplitude * x.cos() / (1.0 + amplitude * x.sin())
        }));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CeilMode {
    /// `u_1(x) = u(ceil x)`
    CeilArgument,
    /// `u_2(x) = ceil(u(x))`
    CeilValue,
}

/// Density `c_i exp(-u_i(x) ln x)` with a step-wise exponent `u_i >= u`.
///
/// The exponent is replaced on `[threshold, ∞)` only; below the threshold
/// the density keeps the original shape. `u` is taken from the normalized
/// input density.
pub fn ceiling_u_variant(spec: &DensitySpec, mode: CeilMode) -> Result<DensitySpec> {
    require(spec, SupportKind::Stieltjes, "ceiling_u_variant")?;
    let ln_c = spec.log_norm_constant()?;
    let a = spec.threshold();
    let base = spec.clone();
    let log_p: LogFn = Arc::new(move |x: f64| {
        let lg = |t: f64| base.raw_log_density(t) + ln_c;
        if x < a {
            return lg(x);
        }
        let u = |t: f64| -lg(t) / t.ln();
        let v = match mode {
            CeilMode::CeilArgument => u(x.ceil()),
            CeilMode::CeilValue => u(x).ceil(),
        };
        -v * x.ln()
    });
    let tag = match mode {
        CeilMode::CeilArgument => "ceil_argument",
        CeilMode::CeilValue => "ceil_value",
    };
    Ok(DensitySpec::new(
        format!("{}.ceiling_u_variant({tag})", spec.name()),
        SupportKind::Stieltjes,
        log_p,
        a,
    )?
    .with_flags(SpecFlags {
        nonsmooth: true,
        ..spec.flags()
    })
    .with_provenance(push(spec.provenance(), format!("ceiling_u_variant(mode={tag})"))))
}

/// pmf of `floor(Y)`: `p_n = ∫_n^{n+1} g`, each by adaptive quadrature in
/// the log domain.
pub fn floor_discretize(spec: &DensitySpec) -> Result<PmfSpec> {
    require(spec, SupportKind::Stieltjes, "floor_discretize")?;
    let ln_c = spec.log_norm_constant()?;
    let base = spec.clone();
    let log_p: LogPmfFn = Arc::new(move |n: i64| {
        if n < 0 {
            return f64::NEG_INFINITY;
        }
        let lg = |x: f64| base.raw_log_density(x) + ln_c;
        let lo = n as f64;
        let r = if n == 0 {
            quadrature::log_integral(lg, 0.0, 1.0, None)
        } else {
            // ln g carries an absolute rounding error proportional to |ln g|
            let tol = (64.0 * f64::EPSILON * lg(lo + 0.5).abs()).max(1e-12);
            quadrature::adaptive(&lg, lo, lo + 1.0, tol)
        };
        r.map(|r| r.ln_value).unwrap_or(f64::NAN)
    });
    let threshold = (spec.threshold().ceil() as i64).max(2);
    Ok(PmfSpec::new(
        format!("{}.floor_discretize", spec.name()),
        SupportKind::NonnegativeInteger,
        log_p,
        threshold,
    )?
    .normalized()
    .with_provenance(push(spec.provenance(), "floor_discretize".into())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distmodel::family;

    fn exp1() -> DensitySpec {
        family("exponential", &[("lambda", 1.0)])
            .unwrap()
            .as_density()
            .unwrap()
            .clone()
    }

    #[test]
    fn symmetrized_exponential_is_x_exp_minus_x_squared() {
        let h = symmetrize_sqrt(&exp1()).unwrap();
        assert_eq!(h.support(), SupportKind::HamburgerSymmetric);
        for x in [-3.0, -0.7, 0.4, 1.0, 2.5] {
            let expected = f64::ln(f64::abs(x)) - x * x;
            assert!((h.eval_log_density(x).unwrap() - expected).abs() < 1e-14);
        }
        assert!((h.threshold() - 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn symmetrized_example2() {
        let g = family("example2", &[]).unwrap();
        let h = symmetrize_sqrt(g.as_density().unwrap()).unwrap();
        for x in [0.3, 1.0, 2.0, 4.5] {
            let expected = x * (2.0 / 3.0) * f64::powf(x, -2.0 / 3.0) * (-f64::powf(x, 4.0 / 3.0)).exp();
            assert!((h.eval_log_density(x).unwrap() - expected.ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn u_ratio_identity_under_symmetrization() {
        for name in ["exponential", "example2", "lognormal"] {
            let g = family(name, &[]).unwrap();
            let g = g.as_density().unwrap();
            let h = symmetrize_sqrt(g).unwrap();
            for x in [1.5, 2.0, 3.7, 10.0, 55.0] {
                let lhs = h.u_ratio(x).unwrap();
                let rhs = -1.0 + 2.0 * (-g.eval_log_density(x * x).unwrap()) / (x * x).ln();
                assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1.0), "{name} {x}");
            }
        }
    }

    #[test]
    fn symmetrized_geometric_masses() {
        let p = family("geometric", &[("q", 0.5)]).unwrap();
        let q = symmetrize_pmf(p.as_pmf().unwrap()).unwrap();
        assert!((q.eval_log_pmf(0).unwrap() - 0.5f64.ln()).abs() < 1e-15);
        assert!((q.eval_log_pmf(3).unwrap() - (2f64).powi(-5).ln()).abs() < 1e-14);
        assert!((q.eval_log_pmf(-3).unwrap() - (2f64).powi(-5).ln()).abs() < 1e-14);
        assert!(q.total_log_mass().unwrap().ln_value.abs() < 1e-13);
        assert_eq!(q.threshold(), p.as_pmf().unwrap().threshold());
    }

    #[test]
    fn square_pushforward_of_gaussian_is_chi_square() {
        let g = family("gaussian", &[]).unwrap();
        let q = square_pushforward(g.as_density().unwrap()).unwrap();
        for y in [0.1, 1.0, 4.0, 30.0] {
            // chi-square(1): y^{-1/2} e^{-y/2} / sqrt(2 pi)
            let expected = -0.5 * f64::ln(y) - y / 2.0 - 0.5 * f64::ln(2.0 * std::f64::consts::PI);
            assert!((q.eval_log_density(y).unwrap() - expected).abs() < 1e-13);
        }
    }

    #[test]
    fn square_then_symmetrize_round_trips() {
        for name in ["gaussian", "exp_power", "example1"] {
            let f = family(name, &[]).unwrap();
            let f = f.as_density().unwrap();
            let back = symmetrize_sqrt(&square_pushforward(f).unwrap()).unwrap();
            let mut x = f.threshold() * 1.01;
            while x < 1e4 {
                let d = back.eval_log_density(x).unwrap() - f.eval_log_density(x).unwrap();
                assert!(d.abs() < 1e-10, "{name} at {x}: {d}");
                x *= 1.7;
            }
        }
    }

    #[test]
    fn perturbation_rejects_large_amplitude() {
        assert!(perturb_bounded_sin(&exp1(), 1.0).is_err());
        assert!(perturb_bounded_sin(&exp1(), -0.1).is_err());
    }

    #[test]
    fn zero_amplitude_is_identity() {
        let e = exp1();
        let p = perturb_bounded_sin(&e, 0.0).unwrap();
        assert!(!p.flags().oscillating);
        for x in [0.5, 2.0, 9.0] {
            assert!((p.eval_log_density(x).unwrap() - e.eval_log_density(x).unwrap()).abs() < 1e-15);
        }
    }

    #[test]
    fn perturbed_example2_matches_formula() {
        let g = family("example2", &[]).unwrap();
        let g = g.as_density().unwrap();
        let p = perturb_bounded_sin(g, 0.5).unwrap();
        assert!(p.flags().oscillating);
        let ln_c = p.log_norm_constant().unwrap();
        for x in [0.5, 3.0, 12.0] {
            let expected = ln_c + g.eval_log_density(x).unwrap() + (1.0 + 0.5 * f64::sin(x)).ln();
            assert!((p.eval_log_density(x).unwrap() - expected).abs() < 1e-13);
        }
        assert!(p.total_log_mass().unwrap().ln_value.abs() < 1e-9);
    }

    #[test]
    fn ceiling_value_uses_integer_exponent() {
        let g = family("example2", &[]).unwrap();
        let g = g.as_density().unwrap();
        let v = ceiling_u_variant(g, CeilMode::CeilValue).unwrap();
        assert!(v.flags().nonsmooth);
        // find a point with u(x) non-integer and check the exponent is its ceiling
        let x = 20.0;
        let u = g.u_ratio(x).unwrap();
        let raw_v = v.raw_u_ratio(x).unwrap();
        assert_eq!(raw_v, u.ceil());
        for x in [5.0, 7.5, 30.0, 400.0] {
            assert!(v.raw_u_ratio(x).unwrap() >= g.u_ratio(x).unwrap());
            let arg = ceiling_u_variant(g, CeilMode::CeilArgument).unwrap();
            assert!(arg.raw_u_ratio(x).unwrap() >= g.u_ratio(x).unwrap() - 1e-12);
        }
    }

    #[test]
    fn floor_of_exponential_is_geometric() {
        let p = floor_discretize(&exp1()).unwrap();
        let r = (1.0 - (-1.0f64).exp()).ln();
        for n in [0, 1, 2, 7, 40] {
            let expected = -(n as f64) + r;
            assert!((p.eval_log_pmf(n).unwrap() - expected).abs() < 1e-11, "n={n}");
        }
        assert!(p.total_log_mass().unwrap().ln_value.abs() < 1e-10);
        assert_eq!(p.threshold(), 3);
    }
}
