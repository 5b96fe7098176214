//! Convergence classification of improper integrals and series by fitting
//! `ln φ(x) ≈ ln C − p ln x − q ln ln x` on a geometric ladder.
//!
//! Integrals and series of `x^{-p} (ln x)^{-q}` converge iff `p > 1`, or
//! `p = 1` and `q > 1`. A fit inside the `|p − 1| ≤ τ_p` band is decided by
//! `q`; the narrow strip just above `q = 1` is left undecided.

use std::cell::Cell;
use std::f64::consts::E;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::config::TailFitConfig;
use crate::error::{Error, Result};
use crate::quadrature::{self, log_add_exp, log_sum_exp, LogIntegral};

/// Values below this are clamped when a sampler returns plain values.
pub const VALUE_FLOOR: f64 = 1e-300;

const SEGMENT_TOL: f64 = 1e-10;
const COARSE_ACCEPT: f64 = 1e-2;
// The first third of the ladder is skipped by the fit so that lower-order
// terms of the integrand do not bias the exponents.
const INCREMENT_RUNGS: usize = 8;
const GEOMETRIC_RATIO: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DivergenceClass {
    Convergent,
    Divergent,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailFitModel {
    pub log_c: f64,
    pub p: f64,
    pub q: f64,
    pub residual_rms: f64,
    /// First and last abscissa used by the fit.
    pub window: [f64; 2],
    /// False when the design was too degenerate to separate `q` from `p`;
    /// `q` is then reported as 0.
    pub q_determined: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivergenceVerdict {
    pub class: DivergenceClass,
    pub value_estimate: Option<f64>,
    pub fit: TailFitModel,
    /// `(upper limit, partial integral or sum)` along the ladder.
    pub partials: Vec<(f64, f64)>,
    pub diagnostics: String,
}

impl DivergenceVerdict {
    /// Add a finite head contribution to every partial and to the value.
    pub fn with_head(mut self, head: f64) -> Self {
        for (_, s) in &mut self.partials {
            *s += head;
        }
        if let Some(v) = &mut self.value_estimate {
            *v += head;
        }
        self
    }
}

/// Least squares fit of `ln φ` against `(1, −ln x, −ln ln x)`; all `xs > e`.
pub fn fit_model(xs: &[f64], ln_phi: &[f64]) -> Result<TailFitModel> {
    let n = xs.len();
    if n < 2 || n != ln_phi.len() {
        return Err(Error::invalid(format!("need at least 2 samples for a fit, got {n}")));
    }
    if let Some(i) = ln_phi.iter().position(|v| !v.is_finite()) {
        return Err(Error::domain(format!(
            "sampled value at x = {} is not positive and finite (ln = {})",
            xs[i], ln_phi[i]
        )));
    }
    let window = [xs[0], xs[n - 1]];
    let b = DVector::from_column_slice(ln_phi);
    let full = DMatrix::from_fn(n, 3, |i, j| match j {
        0 => 1.0,
        1 => -xs[i].ln(),
        _ => -xs[i].ln().ln(),
    });
    if n >= 4 {
        let svd = full.clone().svd(true, true);
        let sv = &svd.singular_values;
        let (smax, smin) = (sv.max(), sv.min());
        if smin > 1e-9 * smax {
            let sol = svd.solve(&b, 1e-14).map_err(|e| Error::numeric(e.to_string()))?;
            let rms = ((&full * &sol - &b).norm_squared() / n as f64).sqrt();
            return Ok(TailFitModel {
                log_c: sol[0],
                p: sol[1],
                q: sol[2],
                residual_rms: rms,
                window,
                q_determined: true,
            });
        }
    }
    let reduced = full.columns(0, 2).into_owned();
    let sol = reduced
        .clone()
        .svd(true, true)
        .solve(&b, 1e-14)
        .map_err(|e| Error::numeric(e.to_string()))?;
    let rms = ((&reduced * &sol - &b).norm_squared() / n as f64).sqrt();
    Ok(TailFitModel {
        log_c: sol[0],
        p: sol[1],
        q: 0.0,
        residual_rms: rms,
        window,
        q_determined: false,
    })
}

/// Class implied by the fitted exponents alone.
pub fn class_from_fit(fit: &TailFitModel, cfg: &TailFitConfig) -> (DivergenceClass, String) {
    use DivergenceClass::*;
    let (p, q) = (fit.p, fit.q);
    if p > 1.0 + cfg.tau_p {
        (Convergent, format!("p = {p:.4} > 1 + tau_p"))
    } else if p < 1.0 - cfg.tau_p {
        (Divergent, format!("p = {p:.4} < 1 - tau_p"))
    } else if !fit.q_determined {
        (Inconclusive, format!("p = {p:.4} in the boundary band and q is undetermined"))
    } else if q > 1.0 + cfg.tau_q {
        (Convergent, format!("p = {p:.4} ~ 1 and q = {q:.4} > 1 + tau_q"))
    } else if q < 1.0 + 0.5 * cfg.tau_q {
        (Divergent, format!("p = {p:.4} ~ 1 and q = {q:.4} <= 1 (log-harmonic or slower)"))
    } else {
        (Inconclusive, format!("p = {p:.4} ~ 1 and q = {q:.4} too close to 1"))
    }
}

fn ladder(a: f64, cfg: &TailFitConfig) -> Vec<f64> {
    (0..cfg.points).map(|i| a * cfg.ratio.powi(i as i32)).collect()
}

fn check_cfg(cfg: &TailFitConfig) -> Result<()> {
    if !(cfg.ratio > 1.0) || cfg.points < 12 + INCREMENT_RUNGS / 2 {
        return Err(Error::invalid(format!(
            "tail fit ladder needs ratio > 1 and at least 16 points, got {} and {}",
            cfg.ratio, cfg.points
        )));
    }
    Ok(())
}

/// `ln ∫_T^∞` of the fitted model anchored at `ln φ(T)`.
fn ln_model_remainder(ln_phi_t: f64, t: f64, fit: &TailFitModel, cfg: &TailFitConfig) -> Result<f64> {
    let lt = t.ln();
    let llt = lt.ln();
    if fit.p <= 1.0 + cfg.tau_p {
        // boundary band, convergent by q: ∫_T^∞ C/(x (ln x)^q) = C (ln T)^{1-q}/(q-1)
        return Ok(ln_phi_t + lt + llt - (fit.q - 1.0).ln());
    }
    let (p, q) = (fit.p, fit.q);
    // with s = ln x: φ(T) T^p (ln T)^q ∫_{ln T}^∞ exp(-(p-1)s - q ln s) ds
    let anchor = ln_phi_t + p * lt + q * llt;
    let decay = p - 1.0;
    if decay * lt > 50.0 {
        // steep tail: Laplace estimate at the lower endpoint
        return Ok(anchor - decay * lt - q * llt - (decay + q / lt).max(decay * 0.5).ln());
    }
    let r = quadrature::log_integral(|s: f64| -decay * s - q * s.ln(), lt, f64::INFINITY, Some(lt))?;
    Ok(anchor + r.ln_value)
}

/// Monotone pattern of consecutive increments: `Some(true)` if all ratios are
/// below the geometric threshold, `Some(false)` if none decrease.
fn increment_pattern(ln_increments: &[f64]) -> (Option<bool>, String) {
    let ratios: Vec<f64> = ln_increments.windows(2).map(|w| (w[1] - w[0]).exp()).collect();
    if ratios.is_empty() {
        return (None, "no increments".into());
    }
    let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let text = format!("increment ratios in [{lo:.4}, {hi:.4}]");
    if hi < GEOMETRIC_RATIO {
        (Some(true), text)
    } else if lo >= 1.0 - 1e-9 {
        (Some(false), text)
    } else {
        (None, text)
    }
}

fn cross_check(
    fit_class: DivergenceClass,
    fit_note: String,
    ln_increments: &[f64],
) -> (DivergenceClass, String) {
    let (pattern, inc_note) = increment_pattern(ln_increments);
    match (fit_class, pattern) {
        (DivergenceClass::Divergent, Some(true)) => (
            DivergenceClass::Inconclusive,
            format!("{fit_note}; contradicted: {inc_note} (geometric decrease)"),
        ),
        (DivergenceClass::Convergent, Some(false)) => (
            DivergenceClass::Inconclusive,
            format!("{fit_note}; contradicted: {inc_note} (increments do not decrease)"),
        ),
        _ => (fit_class, format!("{fit_note}; {inc_note}")),
    }
}

fn check_partials(partials: &[(f64, f64)]) -> Result<()> {
    for w in partials.windows(2) {
        if w[1].1 < w[0].1 {
            return Err(Error::numeric(format!(
                "internal error: partials decrease between {} and {}",
                w[0].0, w[1].0
            )));
        }
    }
    Ok(())
}

/// Classify `∫_a^∞ φ` given `ln φ`.
pub fn classify_integral<F: Fn(f64) -> f64>(
    ln_phi: F,
    a: f64,
    cfg: &TailFitConfig,
) -> Result<DivergenceVerdict> {
    check_cfg(cfg)?;
    if !(a > 1.0) || !a.is_finite() {
        return Err(Error::invalid(format!("lower limit must be a finite number > 1, got {a}")));
    }
    let xs = ladder(a, cfg);
    let fit_x: Vec<f64> = xs[cfg.points / 3..].iter().copied().filter(|&x| x >= E).collect();
    let fit_y: Vec<f64> = fit_x.iter().map(|&x| ln_phi(x)).collect();
    if let Some(i) = fit_y.iter().position(|v| v.is_nan() || *v == f64::INFINITY) {
        return Err(Error::domain(format!("integrand is not a valid log-value at x = {}", fit_x[i])));
    }
    let fit = fit_model(&fit_x, &fit_y)?;

    let coarse = Cell::new(0.0_f64);
    let mut partials = Vec::with_capacity(xs.len());
    let mut sum = 0.0;
    partials.push((xs[0], 0.0));
    for w in xs.windows(2) {
        let seg = segment(&ln_phi, w[0], w[1], &coarse)?;
        sum += seg.value();
        partials.push((w[1], sum));
    }
    check_partials(&partials)?;

    let n = xs.len();
    let ln_increments = xs[n - INCREMENT_RUNGS..]
        .iter()
        .map(|&t| segment(&ln_phi, t, 2.0 * t, &coarse).map(|r| r.ln_value))
        .collect::<Result<Vec<_>>>()?;

    let (fit_class, fit_note) = class_from_fit(&fit, cfg);
    let (class, note) = cross_check(fit_class, fit_note, &ln_increments);
    let value_estimate = if class == DivergenceClass::Convergent {
        let t = xs[n - 1];
        let rem = ln_model_remainder(ln_phi(t), t, &fit, cfg)?;
        Some(sum + rem.exp())
    } else {
        None
    };
    let mut diagnostics = format!(
        "{note}; fit rms {:.3e} on [{:.4e}, {:.4e}]",
        fit.residual_rms, fit.window[0], fit.window[1]
    );
    if coarse.get() > 0.0 {
        diagnostics.push_str(&format!(
            "; some segments accepted at relative error up to {:.1e}",
            coarse.get()
        ));
    }
    Ok(DivergenceVerdict {
        class,
        value_estimate,
        diagnostics,
        fit,
        partials,
    })
}

/// Segment integral at [`SEGMENT_TOL`]; when the subdivision budget runs
/// out (fast oscillations) the result is accepted up to [`COARSE_ACCEPT`]
/// and the worst accepted error is recorded.
fn segment<F: Fn(f64) -> f64>(ln_phi: &F, a: f64, b: f64, coarse: &Cell<f64>) -> Result<LogIntegral> {
    let r = quadrature::adaptive_accepting(ln_phi, a, b, SEGMENT_TOL, COARSE_ACCEPT)?;
    if r.rel_err() > 1e-4 {
        coarse.set(coarse.get().max(r.rel_err()));
    }
    Ok(r)
}

/// As [`classify_integral`] for samplers returning plain values; values
/// below [`VALUE_FLOOR`] are clamped and the clamp is noted.
pub fn classify_integral_values<F: Fn(f64) -> f64>(
    phi: F,
    a: f64,
    cfg: &TailFitConfig,
) -> Result<DivergenceVerdict> {
    let clamped = Cell::new(false);
    let negative = Cell::new(None);
    let lf = |x: f64| {
        let v = phi(x);
        if v.is_nan() || v < 0.0 {
            negative.set(Some(x));
            return VALUE_FLOOR.ln();
        }
        if v < VALUE_FLOOR {
            clamped.set(true);
            return VALUE_FLOOR.ln();
        }
        v.ln()
    };
    let result = classify_integral(lf, a, cfg);
    if let Some(x) = negative.get() {
        return Err(Error::domain(format!("integrand is negative or NaN at x = {x}")));
    }
    let mut verdict = result?;
    if clamped.get() {
        verdict.diagnostics.push_str("; values below 1e-300 were clamped");
    }
    Ok(verdict)
}

const EXACT_BLOCK: i64 = 8192;
const STRIDE_NODES: i64 = 4096;

/// `ln Σ_{n=a}^{b} exp(lt(n))`. Long smooth blocks use the trapezoid rule on a
/// strided integer grid with the Euler-Maclaurin endpoint correction.
fn log_sum_range<F: Fn(i64) -> f64>(lt: &F, a: i64, b: i64) -> Result<f64> {
    if b < a {
        return Ok(f64::NEG_INFINITY);
    }
    let term = |n: i64| -> Result<f64> {
        let v = lt(n);
        if v.is_nan() || v == f64::INFINITY {
            Err(Error::domain(format!("term {n} is not a valid log-value")))
        } else {
            Ok(v)
        }
    };
    if b - a < EXACT_BLOCK {
        let vals = (a..=b).map(term).collect::<Result<Vec<_>>>()?;
        return Ok(log_sum_exp(&vals));
    }
    let h = (b - a) / STRIDE_NODES;
    let m = (b - a) / h;
    let nodes = (0..=m).map(|i| term(a + i * h)).collect::<Result<Vec<_>>>()?;
    let rough = nodes
        .windows(2)
        .any(|w| !(w[0].is_finite() && w[1].is_finite()) || (w[1] - w[0]).abs() > 0.01);
    if rough {
        let mid = a + (b - a) / 2;
        return Ok(log_add_exp(log_sum_range(lt, a, mid)?, log_sum_range(lt, mid + 1, b)?));
    }
    let hf = h as f64;
    let end_w = (0.5 * (hf + 1.0)).ln();
    let mut weighted: Vec<f64> = nodes.iter().map(|v| v + hf.ln()).collect();
    weighted[0] = nodes[0] + end_w;
    weighted[m as usize] = nodes[m as usize] + end_w;
    let block = log_sum_exp(&weighted);
    Ok(log_add_exp(block, log_sum_range(lt, a + m * h + 1, b)?))
}

/// Classify `Σ_{n≥n0} t_n` given `ln t_n`.
pub fn classify_series<F: Fn(i64) -> f64>(
    ln_terms: F,
    n0: i64,
    cfg: &TailFitConfig,
) -> Result<DivergenceVerdict> {
    check_cfg(cfg)?;
    if n0 < 2 {
        return Err(Error::invalid(format!("series must start at n0 >= 2, got {n0}")));
    }
    let mut ns: Vec<i64> = Vec::with_capacity(cfg.points);
    for i in 0..cfg.points {
        let n = (n0 as f64 * cfg.ratio.powi(i as i32)).ceil() as i64;
        if ns.last().map_or(true, |&l| n > l) {
            ns.push(n);
        }
    }
    let fit_n: Vec<i64> = ns[ns.len() / 3..].iter().copied().filter(|&n| n >= 3).collect();
    let fit_x: Vec<f64> = fit_n.iter().map(|&n| n as f64).collect();
    let fit_y: Vec<f64> = fit_n.iter().map(|&n| ln_terms(n)).collect();
    let fit = fit_model(&fit_x, &fit_y)?;

    let mut partials = Vec::with_capacity(ns.len());
    let mut sum = ln_terms(n0).exp();
    partials.push((n0 as f64, sum));
    let mut prev = n0;
    for &n in &ns[1..] {
        sum += log_sum_range(&ln_terms, prev + 1, n)?.exp();
        partials.push((n as f64, sum));
        prev = n;
    }
    check_partials(&partials)?;

    let k = ns.len();
    let tail_rungs = &ns[k.saturating_sub(INCREMENT_RUNGS)..];
    let ln_increments = tail_rungs
        .iter()
        .map(|&n| log_sum_range(&ln_terms, n + 1, 2 * n))
        .collect::<Result<Vec<_>>>()?;

    let (fit_class, fit_note) = class_from_fit(&fit, cfg);
    let (class, note) = cross_check(fit_class, fit_note, &ln_increments);
    let value_estimate = if class == DivergenceClass::Convergent {
        let last = *ns.last().expect("nonempty ladder");
        let big_n = last as f64;
        let t = big_n + 0.5;
        let ln_phi_t =
            ln_terms(last) - fit.p * (t / big_n).ln() - fit.q * (t.ln() / big_n.ln()).ln();
        Some(sum + ln_model_remainder(ln_phi_t, t, &fit, cfg)?.exp())
    } else {
        None
    };
    Ok(DivergenceVerdict {
        class,
        value_estimate,
        diagnostics: format!(
            "{note}; fit rms {:.3e} on n in [{}, {}]",
            fit.residual_rms, fit.window[0], fit.window[1]
        ),
        fit,
        partials,
    })
}

/// Classify the sum of a finite stretch of terms `(k, ln t_k)`, such as a
/// Carleman sum, by fitting the terms with `k >= k_from` (at least 3).
pub fn classify_finite_terms(
    terms: &[(i64, f64)],
    k_from: i64,
    cfg: &TailFitConfig,
) -> Result<DivergenceVerdict> {
    let start = k_from.max(3);
    let (fit_x, fit_y): (Vec<f64>, Vec<f64>) = terms
        .iter()
        .filter(|(k, _)| *k >= start)
        .map(|&(k, v)| (k as f64, v))
        .unzip();
    if fit_x.len() < 5 {
        return Err(Error::invalid(format!(
            "need at least 5 terms with k >= {start} to classify a sum, got {}",
            fit_x.len()
        )));
    }
    let fit = fit_model(&fit_x, &fit_y)?;
    let mut sum = 0.0;
    let partials: Vec<(f64, f64)> = terms
        .iter()
        .map(|&(k, v)| {
            sum += v.exp();
            (k as f64, sum)
        })
        .collect();
    check_partials(&partials)?;
    let (class, note) = class_from_fit(&fit, cfg);
    let value_estimate = if class == DivergenceClass::Convergent {
        let &(last_k, last_v) = terms.last().expect("nonempty");
        let big_n = last_k as f64;
        let t = big_n + 0.5;
        let ln_phi_t = last_v - fit.p * (t / big_n).ln() - fit.q * (t.ln() / big_n.ln()).ln();
        Some(sum + ln_model_remainder(ln_phi_t, t, &fit, cfg)?.exp())
    } else {
        None
    };
    Ok(DivergenceVerdict {
        class,
        value_estimate,
        diagnostics: format!(
            "{note}; decay exponent beta = {:.4}; fit rms {:.3e} on k in [{}, {}] ({} finite terms)",
            fit.p,
            fit.residual_rms,
            fit.window[0],
            fit.window[1],
            terms.len()
        ),
        fit,
        partials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cfg() -> TailFitConfig {
        TailFitConfig::default()
    }

    #[test]
    fn power_law_fit() {
        let fit = classify_integral(|x: f64| -2.0 * x.ln(), 2.0, &cfg()).unwrap().fit;
        assert!((fit.p - 2.0).abs() < 0.02 && fit.q.abs() < 0.05, "{fit:?}");
        assert!(fit.window[0] >= E);
    }

    #[test]
    fn log_corrected_fit() {
        let v = classify_integral(|x: f64| -x.ln() - 2.0 * x.ln().ln(), 3.0, &cfg()).unwrap();
        assert!((v.fit.p - 1.0).abs() < 0.05 && (v.fit.q - 2.0).abs() < 0.05, "{:?}", v.fit);
        assert_eq!(v.class, DivergenceClass::Convergent);
    }

    #[test]
    fn gaussian_kstar_integrand() {
        let v = classify_integral(|x: f64| -(2.0 * x.ln()).ln(), E, &cfg()).unwrap();
        assert!(v.fit.p.abs() < 0.02 && (v.fit.q - 1.0).abs() < 0.05, "{:?}", v.fit);
        assert_eq!(v.class, DivergenceClass::Divergent);
        assert!(v.partials.windows(2).all(|w| w[1].1 > w[0].1));
    }

    #[test]
    fn krein_integrand_of_log_harmonic_type() {
        let v = classify_integral(|x: f64| x.ln() - (1.0 + x * x).ln() - x.ln().ln(), 10.0, &cfg())
            .unwrap();
        assert_eq!(v.class, DivergenceClass::Divergent, "{}", v.diagnostics);
    }

    #[test]
    fn textbook_values() {
        let v = classify_integral(|x: f64| -2.0 * x.ln(), 2.0, &cfg()).unwrap();
        assert!((v.value_estimate.unwrap() - 0.5).abs() < 1e-6 * 0.5);
        let v = classify_integral(|x: f64| -1.5 * x.ln(), 2.0, &cfg()).unwrap();
        let exact = 2.0 / 2f64.sqrt();
        assert!((v.value_estimate.unwrap() - exact).abs() < 1e-6 * exact);
        let v = classify_integral(|x: f64| -x, 2.0, &cfg()).unwrap();
        let exact = (-2f64).exp();
        assert!((v.value_estimate.unwrap() - exact).abs() < 1e-6 * exact);
    }

    #[test]
    fn plain_value_sampler_and_negative_values() {
        let v = classify_integral_values(|x: f64| 1.0 / (x * x), 2.0, &cfg()).unwrap();
        assert!((v.value_estimate.unwrap() - 0.5).abs() < 1e-6);
        let err = classify_integral_values(|x: f64| x.sin() / x, 2.0, &cfg()).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
        let v = classify_integral_values(|x: f64| (-x).exp(), 2.0, &cfg()).unwrap();
        assert!(v.diagnostics.contains("clamped"));
    }

    #[test]
    fn geometric_condition_terms_diverge() {
        let ln2 = 2f64.ln();
        let v = classify_series(
            |n| ((n + 1) as f64 * ln2).ln() - 2.0 * (n as f64).ln() - (n as f64).ln().ln(),
            5,
            &cfg(),
        )
        .unwrap();
        assert_eq!(v.class, DivergenceClass::Divergent, "{}", v.diagnostics);
        assert!((v.fit.p - 1.0).abs() < 0.05, "{:?}", v.fit);
    }

    #[test]
    fn sqrt_over_square_converges() {
        let v = classify_series(|n| 0.5 * (n as f64).ln() - (1.0 + (n * n) as f64).ln(), 2, &cfg())
            .unwrap();
        assert_eq!(v.class, DivergenceClass::Convergent);
        assert!((v.fit.p - 1.5).abs() < 0.05, "{:?}", v.fit);
    }

    #[test]
    fn basel_remainder() {
        let n0 = 4;
        let v = classify_series(|n| -2.0 * (n as f64).ln(), n0, &cfg()).unwrap();
        let head: f64 = (1..n0).map(|n| 1.0 / (n * n) as f64).sum();
        let exact = std::f64::consts::PI.powi(2) / 6.0 - head;
        assert!((v.value_estimate.unwrap() - exact).abs() < 1e-4, "{v:?}");
    }

    #[test]
    fn strided_sum_matches_brute_force() {
        let lt = |n: i64| -1.5 * (n as f64).ln() - (n as f64).ln().ln();
        let fast = log_sum_range(&lt, 10, 2_000_000).unwrap();
        let slow: f64 = (10..=2_000_000).map(|n| lt(n).exp()).sum();
        assert!((fast.exp() - slow).abs() < 1e-9 * slow, "{} vs {slow}", fast.exp());
    }

    #[test]
    fn finite_term_sums() {
        let harmonic: Vec<(i64, f64)> = (1..=40).map(|k| (k, -(k as f64).ln())).collect();
        assert_eq!(
            classify_finite_terms(&harmonic, 4, &cfg()).unwrap().class,
            DivergenceClass::Divergent
        );
        let root: Vec<(i64, f64)> = (1..=30).map(|k| (k, -0.5 * (k as f64).ln())).collect();
        assert_eq!(
            classify_finite_terms(&root, 4, &cfg()).unwrap().class,
            DivergenceClass::Divergent
        );
        let geometric: Vec<(i64, f64)> = (1..=30).map(|k| (k, -(k as f64) / 4.0)).collect();
        let v = classify_finite_terms(&geometric, 4, &cfg()).unwrap();
        assert_eq!(v.class, DivergenceClass::Convergent);
        let exact = (-0.25f64).exp() / (1.0 - (-0.25f64).exp());
        assert!(v.value_estimate.unwrap() >= v.partials.last().unwrap().1);
        assert!((v.value_estimate.unwrap() - exact).abs() < 0.05 * exact);
        assert!(classify_finite_terms(&geometric[..5], 4, &cfg()).is_err());
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(classify_integral(|x: f64| -2.0 * x.ln(), 1.0, &cfg()).is_err());
        assert!(classify_series(|n| -2.0 * (n as f64).ln(), 1, &cfg()).is_err());
        let bad = TailFitConfig { points: 5, ..cfg() };
        assert!(classify_integral(|x: f64| -2.0 * x.ln(), 2.0, &bad).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn scale_invariant(p in 0.0f64..2.5, q in 0.0f64..2.5, ln_lambda in -14.0f64..14.0) {
            let base = classify_integral(|x: f64| -p * x.ln() - q * x.ln().ln(), 3.0, &cfg()).unwrap();
            let scaled = classify_integral(
                |x: f64| ln_lambda - p * x.ln() - q * x.ln().ln(), 3.0, &cfg()).unwrap();
            prop_assert_eq!(base.class, scaled.class);
            prop_assert!((base.fit.log_c + ln_lambda - scaled.fit.log_c).abs() < 1e-6);
        }

        #[test]
        fn partials_nondecreasing(p in -1.0f64..3.0, q in -2.0f64..3.0, n0 in 2i64..50) {
            let v = classify_series(|n| -p * (n as f64).ln() - q * (n as f64).ln().ln(), n0, &cfg())
                .unwrap();
            prop_assert!(v.partials.windows(2).all(|w| w[1].1 >= w[0].1));
            if v.class == DivergenceClass::Convergent {
                prop_assert!(v.value_estimate.unwrap() >= v.partials.last().unwrap().1);
            } else {
                prop_assert!(v.value_estimate.is_none());
            }
            prop_assert!(!v.diagnostics.is_empty());
        }
    }
}
