//! Log-moments to high order and Carleman sums.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::TailFitConfig;
use crate::distmodel::{DensitySpec, Distribution, MomentCase, PmfSpec, SupportKind};
use crate::error::{Error, Result};
use crate::quadrature;
use crate::tailfit::{classify_finite_terms, DivergenceVerdict};

/// Carleman sums are fitted from this order on.
pub const CARLEMAN_FIT_FROM: i64 = 4;
pub const DEFAULT_KMAX_CONTINUOUS: u32 = 30;
pub const DEFAULT_KMAX_DISCRETE: u32 = 40;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentEntry {
    pub k: u32,
    pub ln_mk: f64,
    /// Error estimate of `ln_mk` (equivalently, the relative error of `m_k`).
    pub err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentTable {
    pub spec_id: String,
    pub case: MomentCase,
    pub entries: Vec<MomentEntry>,
}

impl MomentTable {
    pub fn get(&self, k: u32) -> Option<&MomentEntry> {
        self.entries
            .binary_search_by_key(&k, |e| e.k)
            .ok()
            .map(|i| &self.entries[i])
    }

    pub fn ln_moment(&self, k: u32) -> Result<f64> {
        self.get(k)
            .map(|e| e.ln_mk)
            .ok_or_else(|| Error::domain(format!("moment of order {k} is not in the table")))
    }
}

/// `ln m_k` and its error estimate. For symmetric distributions odd orders
/// return `(-∞, 0)`, meaning `m_k = 0`.
pub fn log_moment(spec: &Distribution, k: u32) -> Result<(f64, f64)> {
    if k == 0 {
        return Err(Error::invalid("moment order must be >= 1"));
    }
    if spec.support().is_symmetric() && k % 2 == 1 {
        return Ok((f64::NEG_INFINITY, 0.0));
    }
    let r = match spec {
        Distribution::Continuous(d) => continuous_moment(d, k)?,
        Distribution::Discrete(p) => discrete_moment(p, k)?,
    };
    if !r.ln_value.is_finite() {
        return Err(Error::numeric(format!(
            "moment of order {k} of {} is not finite",
            spec.name()
        )));
    }
    Ok((r.ln_value, r.rel_err()))
}

fn continuous_moment(d: &DensitySpec, k: u32) -> Result<quadrature::LogIntegral> {
    let lf = d.log_density_fn()?;
    let kf = k as f64;
    let integrand = |x: f64| if x > 0.0 { kf * x.ln() + lf(x) } else { f64::NEG_INFINITY };
    let half = if d.flags().nonsmooth {
        // step-wise exponents jump at integers: integrate unit cells separately
        let failure = std::cell::Cell::new(None);
        let cells = quadrature::log_sum(
            |n| match quadrature::adaptive(&integrand, n as f64, (n + 1) as f64, 1e-10) {
                Ok(r) => r.ln_value,
                Err(e) => {
                    failure.set(Some(e));
                    f64::NEG_INFINITY
                }
            },
            0,
        );
        if let Some(e) = failure.take() {
            return Err(e);
        }
        cells?
    } else {
        let peak = quadrature::mass_peak(&integrand, 0.0, f64::INFINITY)?;
        quadrature::log_integral(integrand, 0.0, f64::INFINITY, Some(peak))?
    };
    Ok(match d.support() {
        SupportKind::HamburgerSymmetric => shift(half, std::f64::consts::LN_2),
        _ => half,
    })
}

fn discrete_moment(p: &PmfSpec, k: u32) -> Result<quadrature::LogIntegral> {
    let lp = p.log_pmf_fn()?;
    let kf = k as f64;
    let half = quadrature::log_sum(|j| kf * (j as f64).ln() + lp(j), 1)?;
    Ok(match p.support() {
        SupportKind::IntegerSymmetric => shift(half, std::f64::consts::LN_2),
        _ => half,
    })
}

fn shift(r: quadrature::LogIntegral, by: f64) -> quadrature::LogIntegral {
    quadrature::LogIntegral {
        ln_value: r.ln_value + by,
        ln_err: r.ln_err + by,
    }
}

/// Moments needed by the `case` form of Carleman's sum up to `k_max` terms:
/// orders `2, 4, …, 2 k_max` (Hamburger) or `1, …, k_max` (Stieltjes).
pub fn carleman_table(spec: &Distribution, case: MomentCase, k_max: u32) -> Result<MomentTable> {
    let orders: Vec<u32> = match case {
        MomentCase::Hamburger => (1..=k_max).map(|k| 2 * k).collect(),
        MomentCase::Stieltjes => (1..=k_max).collect(),
    };
    moment_table(spec, case, &orders)
}

/// Moment table at the given orders, computed in parallel.
pub fn moment_table(spec: &Distribution, case: MomentCase, orders: &[u32]) -> Result<MomentTable> {
    let mut sorted = orders.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if spec.support().is_symmetric() {
        sorted.retain(|k| k % 2 == 0);
    }
    let entries = sorted
        .par_iter()
        .map(|&k| log_moment(spec, k).map(|(ln_mk, err)| MomentEntry { k, ln_mk, err }))
        .collect::<Result<Vec<_>>>()?;
    Ok(MomentTable {
        spec_id: spec.name().to_string(),
        case,
        entries,
    })
}

/// Moments for the CLI listing: even orders up to `k_max` for symmetric
/// distributions, all orders otherwise.
pub fn listing_table(spec: &Distribution, k_max: u32) -> Result<MomentTable> {
    let orders: Vec<u32> = (1..=k_max).collect();
    moment_table(spec, spec.support().case(), &orders)
}

/// Carleman term attached to the moment of order `k`, if that order enters
/// the sum: `m_{2j}^{-1/(2j)}` for `k = 2j` (Hamburger), `m_k^{-1/(2k)}` (Stieltjes).
pub fn carleman_term_for_order(case: MomentCase, k: u32, ln_mk: f64) -> Option<(u32, f64)> {
    match case {
        MomentCase::Hamburger if k % 2 == 0 => Some((k / 2, (-ln_mk / k as f64).exp())),
        MomentCase::Hamburger => None,
        MomentCase::Stieltjes => Some((k, (-ln_mk / (2 * k) as f64).exp())),
    }
}

/// `(k, t_k)` for every Carleman term available from the table.
pub fn carleman_terms(table: &MomentTable) -> Vec<(u32, f64)> {
    table
        .entries
        .iter()
        .filter_map(|e| carleman_term_for_order(table.case, e.k, e.ln_mk))
        .collect()
}

/// The `k`-th Carleman term; errors if its moment is missing.
pub fn carleman_term(table: &MomentTable, k: u32) -> Result<f64> {
    let order = match table.case {
        MomentCase::Hamburger => 2 * k,
        MomentCase::Stieltjes => k,
    };
    let ln_m = table.ln_moment(order)?;
    Ok((-ln_m / (2 * k) as f64).exp())
}

/// Classify Carleman's sum. A `Divergent` sum means Carleman's condition holds.
pub fn carleman_check(
    spec: &Distribution,
    case: MomentCase,
    k_max: u32,
    cfg: &TailFitConfig,
) -> Result<DivergenceVerdict> {
    if k_max < 8 {
        return Err(Error::invalid(format!("Carleman check needs k_max >= 8, got {k_max}")));
    }
    let table = carleman_table(spec, case, k_max)?;
    let terms: Vec<(i64, f64)> = carleman_terms(&table)
        .into_iter()
        .map(|(k, t)| (k as i64, t.ln()))
        .collect();
    classify_finite_terms(&terms, CARLEMAN_FIT_FROM, cfg)
}

pub fn default_kmax(spec: &Distribution) -> u32 {
    if spec.support().is_continuous() {
        DEFAULT_KMAX_CONTINUOUS
    } else {
        DEFAULT_KMAX_DISCRETE
    }
}
