//! Distributions: continuous densities and integer pmfs, the built-in
//! catalog, and the transforms between them.

mod catalog;
mod recipe;
mod transforms;

use std::fmt;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{self, LogIntegral};

pub use catalog::{catalog, catalog_entry, family, CatalogEntry, Expected};
pub(crate) use catalog::family_from_map;
pub use recipe::{SpecRecipe, TransformStep};
pub use transforms::{
    ceiling_u_variant, floor_discretize, perturb_bounded_sin, square_pushforward,
    symmetrize_pmf, symmetrize_sqrt, CeilMode,
};

/// `x ↦ ln f(x)`; may return `-∞` where the density vanishes.
pub type LogFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
/// `j ↦ ln p_j`.
pub type LogPmfFn = Arc<dyn Fn(i64) -> f64 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SupportKind {
    HamburgerSymmetric,
    Stieltjes,
    IntegerSymmetric,
    NonnegativeInteger,
}

impl SupportKind {
    pub fn is_continuous(self) -> bool {
        matches!(self, SupportKind::HamburgerSymmetric | SupportKind::Stieltjes)
    }

    pub fn is_symmetric(self) -> bool {
        matches!(
            self,
            SupportKind::HamburgerSymmetric | SupportKind::IntegerSymmetric
        )
    }

    pub fn case(self) -> MomentCase {
        if self.is_symmetric() {
            MomentCase::Hamburger
        } else {
            MomentCase::Stieltjes
        }
    }
}

/// Whole real line (symmetric) or half-line form of a moment problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MomentCase {
    Hamburger,
    Stieltjes,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpecFlags {
    /// The log-density has persistent oscillations, so ratio-monotonicity
    /// conditions are not meaningful.
    pub oscillating: bool,
    /// The density is not differentiable (step-wise exponent).
    pub nonsmooth: bool,
}

/// A continuous density, stored as an unnormalized log-density plus a
/// lazily computed normalizing constant.
#[derive(Clone)]
pub struct DensitySpec {
    name: String,
    support: SupportKind,
    log_density: LogFn,
    log_density_derivative: Option<LogFn>,
    threshold: f64,
    normalized: bool,
    log_norm: Arc<OnceLock<f64>>,
    flags: SpecFlags,
    provenance: Vec<String>,
}

impl fmt::Debug for DensitySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DensitySpec")
            .field("name", &self.name)
            .field("support", &self.support)
            .field("threshold", &self.threshold)
            .field("normalized", &self.normalized)
            .field("log_norm", &self.log_norm.get())
            .field("flags", &self.flags)
            .field("provenance", &self.provenance)
            .finish()
    }
}

impl DensitySpec {
    /// For `HamburgerSymmetric` the evaluator is only ever called with
    /// `|x|`, which makes the density symmetric by construction.
    pub fn new(
        name: impl Into<String>,
        support: SupportKind,
        log_density: LogFn,
        threshold: f64,
    ) -> Result<Self> {
        if !support.is_continuous() {
            return Err(Error::invalid("density needs a continuous support kind"));
        }
        if !(threshold > 1.0) || !threshold.is_finite() {
            return Err(Error::invalid(format!(
                "threshold must be a finite number > 1, got {threshold}"
            )));
        }
        Ok(DensitySpec {
            name: name.into(),
            support,
            log_density,
            log_density_derivative: None,
            threshold,
            normalized: false,
            log_norm: Arc::new(OnceLock::new()),
            flags: SpecFlags::default(),
            provenance: Vec::new(),
        })
    }

    pub fn with_derivative(mut self, derivative: LogFn) -> Self {
        self.log_density_derivative = Some(derivative);
        self
    }

    /// Declare the evaluator already normalized (`ln c = 0`).
    pub fn normalized(mut self) -> Self {
        self.normalized = true;
        self.log_norm = Arc::new(OnceLock::new());
        let _ = self.log_norm.set(0.0);
        self
    }

    pub fn with_log_norm_constant(mut self, ln_c: f64) -> Self {
        self.log_norm = Arc::new(OnceLock::new());
        let _ = self.log_norm.set(ln_c);
        self
    }

    pub fn with_flags(mut self, flags: SpecFlags) -> Self {
        self.flags = flags;
        self
    }

    pub fn with_threshold(mut self, threshold: f64) -> Result<Self> {
        if !(threshold > 1.0) || !threshold.is_finite() {
            return Err(Error::invalid(format!(
                "threshold must be a finite number > 1, got {threshold}"
            )));
        }
        self.threshold = threshold;
        Ok(self)
    }

    pub(crate) fn with_provenance(mut self, provenance: Vec<String>) -> Self {
        self.provenance = provenance;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn support(&self) -> SupportKind {
        self.support
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn flags(&self) -> SpecFlags {
        self.flags
    }

    pub fn provenance(&self) -> &[String] {
        &self.provenance
    }

    pub fn has_derivative(&self) -> bool {
        self.log_density_derivative.is_some()
    }

    /// Unnormalized log-density; no support check.
    pub fn raw_log_density(&self, x: f64) -> f64 {
        match self.support {
            SupportKind::HamburgerSymmetric => (self.log_density)(x.abs()),
            _ => (self.log_density)(x),
        }
    }

    /// `(ln f)'(x)` from the supplied evaluator, if any.
    pub fn log_derivative(&self, x: f64) -> Option<f64> {
        let d = self.log_density_derivative.as_ref()?;
        Some(match self.support {
            SupportKind::HamburgerSymmetric => x.signum() * d(x.abs()),
            _ => d(x),
        })
    }

    /// `ln c` such that `ln f = raw + ln c` integrates to one. Computed by
    /// quadrature on first use and cached.
    pub fn log_norm_constant(&self) -> Result<f64> {
        if let Some(v) = self.log_norm.get() {
            return Ok(*v);
        }
        let mass = self.raw_log_mass()?;
        if !mass.ln_value.is_finite() {
            return Err(Error::numeric(format!(
                "normalization of {} failed: total mass is {}",
                self.name,
                mass.value()
            )));
        }
        let ln_c = -mass.ln_value;
        let _ = self.log_norm.set(ln_c);
        Ok(*self.log_norm.get().unwrap_or(&ln_c))
    }

    fn raw_log_mass(&self) -> Result<LogIntegral> {
        let half = quadrature::log_integral(|x| (self.log_density)(x), 0.0, f64::INFINITY, None)?;
        Ok(match self.support {
            SupportKind::HamburgerSymmetric => LogIntegral {
                ln_value: half.ln_value + std::f64::consts::LN_2,
                ln_err: half.ln_err + std::f64::consts::LN_2,
            },
            _ => half,
        })
    }

    /// `ln` of the total mass of the normalized density, with its error.
    pub fn total_log_mass(&self) -> Result<LogIntegral> {
        let ln_c = self.log_norm_constant()?;
        let m = self.raw_log_mass()?;
        Ok(LogIntegral {
            ln_value: m.ln_value + ln_c,
            ln_err: m.ln_err + ln_c,
        })
    }

    /// Normalized `ln f(x)`.
    pub fn eval_log_density(&self, x: f64) -> Result<f64> {
        if x.is_nan() {
            return Err(Error::domain("x is NaN"));
        }
        if self.support == SupportKind::Stieltjes && x < 0.0 {
            return Err(Error::domain(format!(
                "x = {x} is outside the half-line support of {}",
                self.name
            )));
        }
        Ok(self.raw_log_density(x) + self.log_norm_constant()?)
    }

    /// Normalized log-density as a closure, for use inside quadrature.
    pub fn log_density_fn(&self) -> Result<impl Fn(f64) -> f64 + Send + Sync + '_> {
        let ln_c = self.log_norm_constant()?;
        Ok(move |x: f64| self.raw_log_density(x) + ln_c)
    }

    /// `u(x) = -ln f(x) / ln x`, the exponent writing the density as `x^{-u(x)}`.
    pub fn u_ratio(&self, x: f64) -> Result<f64> {
        if !(x > 1.0) {
            return Err(Error::domain(format!("u-ratio needs x > 1, got {x}")));
        }
        Ok(-self.eval_log_density(x)? / x.ln())
    }

    /// `u` computed from the unnormalized evaluator: the exponent `v` in
    /// `g(x) = c exp(-v(x) ln x)`.
    pub fn raw_u_ratio(&self, x: f64) -> Result<f64> {
        if !(x > 1.0) {
            return Err(Error::domain(format!("u-ratio needs x > 1, got {x}")));
        }
        Ok(-self.raw_log_density(x) / x.ln())
    }
}

/// An integer-supported pmf with all `p_j > 0`.
#[derive(Clone)]
pub struct PmfSpec {
    name: String,
    support: SupportKind,
    log_pmf: LogPmfFn,
    threshold: i64,
    normalized: bool,
    log_norm: Arc<OnceLock<f64>>,
    provenance: Vec<String>,
}

impl fmt::Debug for PmfSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PmfSpec")
            .field("name", &self.name)
            .field("support", &self.support)
            .field("threshold", &self.threshold)
            .field("normalized", &self.normalized)
            .field("log_norm", &self.log_norm.get())
            .field("provenance", &self.provenance)
            .finish()
    }
}

impl PmfSpec {
    /// For `IntegerSymmetric` the evaluator is only called with `|j|`.
    pub fn new(
        name: impl Into<String>,
        support: SupportKind,
        log_pmf: LogPmfFn,
        threshold: i64,
    ) -> Result<Self> {
        if support.is_continuous() {
            return Err(Error::invalid("pmf needs an integer support kind"));
        }
        if threshold < 2 {
            return Err(Error::invalid(format!(
                "pmf threshold must be >= 2, got {threshold}"
            )));
        }
        Ok(PmfSpec {
            name: name.into(),
            support,
            log_pmf,
            threshold,
            normalized: false,
            log_norm: Arc::new(OnceLock::new()),
            provenance: Vec::new(),
        })
    }

    pub fn normalized(mut self) -> Self {
        self.normalized = true;
        self.log_norm = Arc::new(OnceLock::new());
        let _ = self.log_norm.set(0.0);
        self
    }

    pub fn with_threshold(mut self, threshold: i64) -> Result<Self> {
        if threshold < 2 {
            return Err(Error::invalid(format!(
                "pmf threshold must be >= 2, got {threshold}"
            )));
        }
        self.threshold = threshold;
        Ok(self)
    }

    pub(crate) fn with_provenance(mut self, provenance: Vec<String>) -> Self {
        self.provenance = provenance;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn support(&self) -> SupportKind {
        self.support
    }

    pub fn threshold(&self) -> i64 {
        self.threshold
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn provenance(&self) -> &[String] {
        &self.provenance
    }

    pub fn raw_log_pmf(&self, j: i64) -> f64 {
        match self.support {
            SupportKind::IntegerSymmetric => (self.log_pmf)(j.abs()),
            _ => (self.log_pmf)(j),
        }
    }

    fn raw_log_mass(&self) -> Result<LogIntegral> {
        match self.support {
            SupportKind::IntegerSymmetric => {
                let tail = quadrature::log_sum(|j| (self.log_pmf)(j), 1)?;
                let p0 = (self.log_pmf)(0);
                Ok(LogIntegral {
                    ln_value: quadrature::log_add_exp(p0, tail.ln_value + std::f64::consts::LN_2),
                    ln_err: tail.ln_err + std::f64::consts::LN_2,
                })
            }
            _ => quadrature::log_sum(|j| (self.log_pmf)(j), 0),
        }
    }

    pub fn log_norm_constant(&self) -> Result<f64> {
        if let Some(v) = self.log_norm.get() {
            return Ok(*v);
        }
        let mass = self.raw_log_mass()?;
        if !mass.ln_value.is_finite() {
            return Err(Error::numeric(format!(
                "normalization of {} failed",
                self.name
            )));
        }
        let ln_c = -mass.ln_value;
        let _ = self.log_norm.set(ln_c);
        Ok(*self.log_norm.get().unwrap_or(&ln_c))
    }

    pub fn total_log_mass(&self) -> Result<LogIntegral> {
        let ln_c = self.log_norm_constant()?;
        let m = self.raw_log_mass()?;
        Ok(LogIntegral {
            ln_value: m.ln_value + ln_c,
            ln_err: m.ln_err + ln_c,
        })
    }

    /// Normalized `ln p_j`.
    pub fn eval_log_pmf(&self, j: i64) -> Result<f64> {
        if self.support == SupportKind::NonnegativeInteger && j < 0 {
            return Err(Error::domain(format!(
                "j = {j} is outside the support of {}",
                self.name
            )));
        }
        let v = self.raw_log_pmf(j) + self.log_norm_constant()?;
        if !v.is_finite() {
            return Err(Error::numeric(format!(
                "ln p_{j} of {} is not finite",
                self.name
            )));
        }
        Ok(v)
    }

    pub fn log_pmf_fn(&self) -> Result<impl Fn(i64) -> f64 + Send + Sync + '_> {
        let ln_c = self.log_norm_constant()?;
        Ok(move |j: i64| self.raw_log_pmf(j) + ln_c)
    }

    /// `u(j) = -ln p_j / ln j`.
    pub fn u_ratio(&self, j: i64) -> Result<f64> {
        if j <= 1 {
            return Err(Error::domain(format!("u-ratio needs j > 1, got {j}")));
        }
        Ok(-self.eval_log_pmf(j)? / (j as f64).ln())
    }
}

/// Either kind of distribution handled by the library.
#[derive(Debug, Clone)]
pub enum Distribution {
    Continuous(DensitySpec),
    Discrete(PmfSpec),
}

impl From<DensitySpec> for Distribution {
    fn from(d: DensitySpec) -> Self {
        Distribution::Continuous(d)
    }
}

impl From<PmfSpec> for Distribution {
    fn from(p: PmfSpec) -> Self {
        Distribution::Discrete(p)
    }
}

impl Distribution {
    pub fn name(&self) -> &str {
        match self {
            Distribution::Continuous(d) => d.name(),
            Distribution::Discrete(p) => p.name(),
        }
    }

    pub fn support(&self) -> SupportKind {
        match self {
            Distribution::Continuous(d) => d.support(),
            Distribution::Discrete(p) => p.support(),
        }
    }

    pub fn threshold(&self) -> f64 {
        match self {
            Distribution::Continuous(d) => d.threshold(),
            Distribution::Discrete(p) => p.threshold() as f64,
        }
    }

    pub fn flags(&self) -> SpecFlags {
        match self {
            Distribution::Continuous(d) => d.flags(),
            Distribution::Discrete(_) => SpecFlags::default(),
        }
    }

    pub fn provenance(&self) -> &[String] {
        match self {
            Distribution::Continuous(d) => d.provenance(),
            Distribution::Discrete(p) => p.provenance(),
        }
    }

    pub fn as_density(&self) -> Option<&DensitySpec> {
        match self {
            Distribution::Continuous(d) => Some(d),
            Distribution::Discrete(_) => None,
        }
    }

    pub fn as_pmf(&self) -> Option<&PmfSpec> {
        match self {
            Distribution::Continuous(_) => None,
            Distribution::Discrete(p) => Some(p),
        }
    }

    /// Normalized log mass at `x` (log-density, or log-pmf at an integer).
    pub fn log_mass(&self, x: f64) -> Result<f64> {
        match self {
            Distribution::Continuous(d) => d.eval_log_density(x),
            Distribution::Discrete(p) => p.eval_log_pmf(as_integer(x)?),
        }
    }

    pub fn u_ratio(&self, x: f64) -> Result<f64> {
        match self {
            Distribution::Continuous(d) => d.u_ratio(x),
            Distribution::Discrete(p) => p.u_ratio(as_integer(x)?),
        }
    }

    pub fn total_log_mass(&self) -> Result<LogIntegral> {
        match self {
            Distribution::Continuous(d) => d.total_log_mass(),
            Distribution::Discrete(p) => p.total_log_mass(),
        }
    }
}

pub(crate) fn as_integer(x: f64) -> Result<i64> {
    if x.fract() != 0.0 || !x.is_finite() {
        return Err(Error::domain(format!("{x} is not an integer point")));
    }
    Ok(x as i64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{E, PI};

    #[test]
    fn gaussian_log_density_at_origin() {
        let g = family("gaussian", &[("sigma", 1.0)]).unwrap();
        let v = g.log_mass(0.0).unwrap();
        assert!((v + 0.5 * (2.0 * PI).ln()).abs() < 1e-15);
        assert!((v + 0.9189).abs() < 1e-4);
    }

    #[test]
    fn exp1_log_density() {
        let e = family("exponential", &[("lambda", 1.0)]).unwrap();
        assert!((e.log_mass(1.0).unwrap() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn stieltjes_rejects_negative_points() {
        let e = family("exponential", &[]).unwrap();
        assert!(matches!(e.log_mass(-1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn u_ratio_examples() {
        let e = family("exponential", &[("lambda", 1.0)]).unwrap();
        assert!((e.u_ratio(E).unwrap() - E).abs() < 1e-14);
        let g = family("gaussian", &[]).unwrap();
        let expected = E * E / 2.0 + 0.5 * (2.0 * PI).ln();
        assert!((g.u_ratio(E).unwrap() - expected).abs() < 1e-13);
        assert!((g.u_ratio(E).unwrap() - 4.6134).abs() < 1e-4);
        let geo = family("geometric", &[("q", 0.5)]).unwrap();
        assert!((geo.u_ratio(4.0).unwrap() - 2.5).abs() < 1e-14);
    }

    #[test]
    fn u_ratio_rejects_small_x() {
        let g = family("gaussian", &[]).unwrap();
        assert!(matches!(g.u_ratio(1.0), Err(Error::Domain(_))));
        assert!(matches!(g.u_ratio(0.5), Err(Error::Domain(_))));
    }

    #[test]
    fn threshold_must_exceed_one() {
        let f: LogFn = Arc::new(|x: f64| -x);
        assert!(DensitySpec::new("bad", SupportKind::Stieltjes, f.clone(), 1.0).is_err());
        assert!(DensitySpec::new("bad", SupportKind::IntegerSymmetric, f, 2.0).is_err());
        let p: LogPmfFn = Arc::new(|j: i64| -(j as f64));
        assert!(PmfSpec::new("bad", SupportKind::NonnegativeInteger, p, 1).is_err());
    }

    #[test]
    fn example1_normalization_by_quadrature() {
        let d = family("example1", &[("alpha", 1.0)]).unwrap();
        let d = d.as_density().unwrap();
        let x = E * E;
        let ln_c = d.log_norm_constant().unwrap();
        // independent oracle: trapezoid on a fine grid over (1, 400]
        let n = 4_000_000;
        let h = 399.0 / n as f64;
        let mut s = 0.0;
        for i in 0..=n {
            let t = 1.0 + i as f64 * h;
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            let v = if t <= 1.0 { 0.0 } else { (-t / t.ln()).exp() };
            s += w * v;
        }
        let oracle_ln_c = -(2.0 * s * h).ln();
        assert!((ln_c - oracle_ln_c).abs() < 1e-6, "{ln_c} vs {oracle_ln_c}");
        let v = d.eval_log_density(x).unwrap();
        assert!((v - (-x / 2.0 + ln_c)).abs() < 1e-12);
        assert_eq!(d.eval_log_density(0.5).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn symmetric_evaluators_are_even() {
        let g = family("example1", &[("alpha", 0.5)]).unwrap();
        let d = g.as_density().unwrap();
        for x in [1.5, 3.0, 17.0, 250.0] {
            assert_eq!(d.eval_log_density(x).unwrap(), d.eval_log_density(-x).unwrap());
        }
        let p = family("sym_exp_power_pmf", &[("lambda", 1.0)]).unwrap();
        let p = p.as_pmf().unwrap();
        for j in [1, 5, 40] {
            assert_eq!(p.eval_log_pmf(j).unwrap(), p.eval_log_pmf(-j).unwrap());
        }
    }

    #[test]
    fn normalized_specs_have_unit_mass() {
        for entry in catalog() {
            let m = entry.spec.total_log_mass().unwrap();
            let bound = (1e-9_f64).max(10.0 * m.rel_err());
            assert!(
                m.ln_value.abs() < bound,
                "{}: ln mass {} (bound {bound})",
                entry.name,
                m.ln_value
            );
        }
    }
}
