//! Maximizer sequence of the weights `w_k(x) = x^{2k} f(x)`.
//!
//! The trace records `x_k = argmax_{x ≥ x0} w_k(x)` (integer `j_k` for pmfs),
//! the first index `k*` after which the peak weights exceed one and keep
//! growing, and the moment bound `m_{2k} ≤ c̃ x_{k+1}^{2k}` built from them.
//! Half-line distributions are traced through their symmetrization.

use serde::{Deserialize, Serialize};

use crate::config::TailFitConfig;
use crate::distmodel::{symmetrize_pmf, symmetrize_sqrt, Distribution, SupportKind};
use crate::error::{Error, Result};
use crate::moments::log_moment;
use crate::quadrature;
use crate::tailfit::{classify_finite_terms, DivergenceVerdict};

pub const DEFAULT_TRACE_KMAX: u32 = 60;
const LATTICE_STEP: f64 = std::f64::consts::LN_2 / 16.0;
const STOP_AFTER_DECREASES: usize = 8;
const MAX_ARGUMENT: f64 = 1e15;
const STEP5_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TraceCase {
    Continuous,
    Discrete,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaximizerTrace {
    pub spec_id: String,
    pub k_range: [u32; 2],
    /// `(k, x_k)`; integer-valued in the discrete case.
    pub points: Vec<(u32, f64)>,
    /// `(k, ln w_k(x_k))`.
    pub peak_log_weights: Vec<(u32, f64)>,
    pub k_star: u32,
    pub c_tilde: f64,
    pub case: TraceCase,
    pub diagnostics: Vec<String>,
}

impl MaximizerTrace {
    pub fn point(&self, k: u32) -> Option<f64> {
        self.points.iter().find(|(j, _)| *j == k).map(|p| p.1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub k: u32,
    pub ln_m2k: f64,
    pub ln_bound: f64,
    pub slack: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReciprocalRow {
    pub n: u32,
    /// Partial sum of reciprocals of the maximizer points.
    pub lhs: f64,
    /// Condition-integral (or sum) lower bound scaled by `1/(2k*+2)`.
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReciprocalCheck {
    pub verdict: DivergenceVerdict,
    pub rows: Vec<ReciprocalRow>,
}

/// The symmetric distribution whose maximizer sequence is traced: the spec
/// itself, or its symmetrization for half-line supports.
pub fn traced_spec(spec: &Distribution) -> Result<Distribution> {
    Ok(match spec {
        Distribution::Continuous(d) if d.support() == SupportKind::Stieltjes => {
            symmetrize_sqrt(d)?.into()
        }
        Distribution::Discrete(p) if p.support() == SupportKind::NonnegativeInteger => {
            symmetrize_pmf(p)?.into()
        }
        other => other.clone(),
    })
}

/// `ln w_k(x) = 2k ln x + ln f(x)`.
pub fn log_weight(spec: &Distribution, k: u32, x: f64) -> Result<f64> {
    if k == 0 {
        return Err(Error::invalid("weight index k must be >= 1"));
    }
    if !(x > 0.0) {
        return Err(Error::domain(format!("weights need x > 0, got {x}")));
    }
    Ok(2.0 * k as f64 * x.ln() + spec.log_mass(x)?)
}

/// `(x_k, ln w_k(x_k))` over `x ≥ threshold`, optionally scanning from a
/// previous maximizer (valid since `x_k` is nondecreasing in `k`).
pub fn find_max_point(spec: &Distribution, k: u32, warm_start: Option<f64>) -> Result<(f64, f64)> {
    match spec {
        Distribution::Continuous(_) => continuous_max(spec, k, warm_start),
        Distribution::Discrete(_) => discrete_max(spec, k, warm_start),
    }
}

fn continuous_max(spec: &Distribution, k: u32, warm: Option<f64>) -> Result<(f64, f64)> {
    let d = spec.as_density().expect("continuous");
    let threshold = d.threshold();
    let kf = 2.0 * k as f64;
    let lw = |t: f64| -> Result<f64> { Ok(kf * t + d.eval_log_density(t.exp())?) };
    let t_thr = threshold.ln();
    let t_start = warm.map_or(t_thr, |w| w.max(threshold).ln());
    // scan a lattice aligned to multiples of the step, so that warm and cold
    // starts visit the same points beyond the warm start
    let mut j = (t_start / LATTICE_STEP).ceil() as i64;
    let mut best = (t_start, lw(t_start)?);
    if warm.is_some() && t_start > t_thr {
        best = (f64::NAN, f64::NEG_INFINITY);
    }
    let mut prev = f64::NEG_INFINITY;
    let mut decreases = 0;
    loop {
        let t = j as f64 * LATTICE_STEP;
        if t.exp() > MAX_ARGUMENT {
            return Err(Error::numeric(format!(
                "no interior maximum of w_{k} below {MAX_ARGUMENT:e} for {}",
                d.name()
            )));
        }
        let v = lw(t)?;
        if v > best.1 {
            best = (t, v);
        }
        if v < prev {
            decreases += 1;
            if decreases >= STOP_AFTER_DECREASES {
                break;
            }
        } else {
            decreases = 0;
        }
        prev = v;
        j += 1;
    }
    let lo = (best.0 - LATTICE_STEP).max(t_thr);
    let hi = best.0 + LATTICE_STEP;
    let t_star = match d.has_derivative() {
        true => stationary_point(|t| kf + t.exp() * d.log_derivative(t.exp()).unwrap_or(f64::NAN), lo, hi)
            .map_or_else(|| golden_max(&lw, lo, hi), Ok)?,
        false => golden_max(&lw, lo, hi)?,
    };
    let v = lw(t_star)?;
    // the bracket may end at the threshold; keep whichever point is larger
    let (t_best, v_best) = if best.1 > v { best } else { (t_star, v) };
    Ok((t_best.exp(), v_best))
}

/// Root of a decreasing slope on `[lo, hi]` by bisection, if it changes sign.
fn stationary_point<G: Fn(f64) -> f64>(slope: G, lo: f64, hi: f64) -> Option<f64> {
    let (mut a, mut b) = (lo, hi);
    let (sa, sb) = (slope(a), slope(b));
    if !(sa > 0.0 && sb < 0.0) {
        return None;
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if !(m > a && m < b) {
            break;
        }
        let s = slope(m);
        if s.is_nan() {
            return None;
        }
        if s > 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    Some(0.5 * (a + b))
}

fn golden_max<F: Fn(f64) -> Result<f64>>(f: &F, lo: f64, hi: f64) -> Result<f64> {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while (b - a) > 1e-11 * a.abs().max(1.0) {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
    }
    Ok(0.5 * (a + b))
}

fn discrete_max(spec: &Distribution, k: u32, warm: Option<f64>) -> Result<(f64, f64)> {
    let p = spec.as_pmf().expect("discrete");
    let start = warm.map_or(p.threshold(), |w| (w as i64).max(p.threshold()));
    let kf = 2.0 * k as f64;
    let mut best = (start, f64::NEG_INFINITY);
    let mut prev = f64::NEG_INFINITY;
    let mut decreases = 0;
    let mut j = start;
    loop {
        if j as f64 > MAX_ARGUMENT {
            return Err(Error::numeric(format!(
                "no interior maximum of w_{k} below {MAX_ARGUMENT:e} for {}",
                p.name()
            )));
        }
        let v = kf * (j as f64).ln() + p.eval_log_pmf(j)?;
        if v > best.1 {
            best = (j, v);
        }
        if v < prev {
            decreases += 1;
            if decreases >= STOP_AFTER_DECREASES {
                break;
            }
        } else {
            decreases = 0;
        }
        prev = v;
        j += 1;
    }
    Ok((best.0 as f64, best.1))
}

/// Maximizer points for `k = 1..=k_max` with `k*` and `c̃`; every invariant
/// of the construction is validated.
pub fn build_trace(spec: &Distribution, k_max: u32) -> Result<MaximizerTrace> {
    if k_max < 2 {
        return Err(Error::invalid("trace needs k_max >= 2"));
    }
    let traced = traced_spec(spec)?;
    let case = if traced.support().is_continuous() {
        TraceCase::Continuous
    } else {
        TraceCase::Discrete
    };
    let mut points = Vec::with_capacity(k_max as usize);
    let mut weights = Vec::with_capacity(k_max as usize);
    let mut warm = None;
    for k in 1..=k_max {
        let (x, w) = find_max_point(&traced, k, warm)?;
        points.push((k, x));
        weights.push((k, w));
        warm = Some(x);
    }

    // k*: weights positive and increasing from there on
    let mut k_star = None;
    for i in (0..weights.len()).rev() {
        let ok = weights[i].1 > 0.0 && (i + 1 == weights.len() || weights[i + 1].1 > weights[i].1);
        if !ok {
            break;
        }
        k_star = Some(weights[i].0);
    }
    let k_star = k_star.ok_or_else(|| Error::ProofStep {
        step: 1,
        detail: format!(
            "peak weights of {} never exceed 1 and increase up to k = {k_max}",
            traced.name()
        ),
    })?;
    if k_star == k_max {
        return Err(Error::ProofStep {
            step: 1,
            detail: format!("k* = k_max = {k_max}; increase k_max"),
        });
    }
    let ks = k_star as usize - 1;
    let x_kstar = points[ks].1;
    let c_tilde = 2.0 * (1.0 + weights[0].1.exp() / x_kstar);

    let mut diagnostics = Vec::new();
    for w in points[ks..].windows(2) {
        if w[1].1 < w[0].1 * (1.0 - 1e-12) {
            return Err(Error::ProofStep {
                step: 2,
                detail: format!("x_{} = {} < x_{} = {}", w[1].0, w[1].1, w[0].0, w[0].1),
            });
        }
    }
    for &(k, x) in &points[ks..] {
        let u = traced.u_ratio(x)?;
        if !(2.0 * k as f64 - u > 0.0) {
            return Err(Error::ProofStep {
                step: 4,
                detail: format!("2k - u(x_k) = {} at k = {k}", 2.0 * k as f64 - u),
            });
        }
    }
    if k_star > 1 {
        diagnostics.push(format!(
            "c_tilde uses w_1(x_1) = {:.6e}; it bounds w_1 on [x0, inf), so the constant stays valid for k* = {k_star}",
            weights[0].1.exp()
        ));
    }
    let tail: Vec<(f64, f64)> = points[ks..]
        .iter()
        .map(|&(k, x)| ((k as f64).ln(), x.ln()))
        .collect();
    if tail.len() >= 3 {
        let n = tail.len() as f64;
        let (sx, sy) = tail.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
        let (mx, my) = (sx / n, sy / n);
        let (sxy, sxx) = tail
            .iter()
            .fold((0.0, 0.0), |a, p| (a.0 + (p.0 - mx) * (p.1 - my), a.1 + (p.0 - mx).powi(2)));
        diagnostics.push(format!(
            "growth: ln x_k ~ {:.4} ln k over k >= k* (the limit x_k -> inf is not asserted)",
            sxy / sxx
        ));
    }
    Ok(MaximizerTrace {
        spec_id: traced.name().to_string(),
        k_range: [1, k_max],
        points,
        peak_log_weights: weights,
        k_star,
        c_tilde,
        case,
        diagnostics,
    })
}

/// Check `ln m_2k ≤ ln c̃ + 2k ln x_{k+1}` for `k* ≤ k < k_max`, with moments
/// of the traced distribution.
pub fn verify_step5_bound(spec: &Distribution, trace: &MaximizerTrace) -> Result<Vec<BoundRow>> {
    let traced = traced_spec(spec)?;
    let mut rows = Vec::new();
    for k in trace.k_star..trace.k_range[1] {
        let x_next = trace.point(k + 1).ok_or_else(|| Error::domain("trace is missing points"))?;
        let (ln_m2k, err) = log_moment(&traced, 2 * k)?;
        let ln_bound = trace.c_tilde.ln() + 2.0 * k as f64 * x_next.ln();
        let slack = ln_bound - ln_m2k;
        if slack < -(STEP5_TOL + err) {
            return Err(Error::ProofStep {
                step: 5,
                detail: format!("ln m_{} = {ln_m2k} exceeds bound {ln_bound} (k = {k})", 2 * k),
            });
        }
        rows.push(BoundRow {
            k,
            ln_m2k,
            ln_bound,
            slack,
        });
    }
    Ok(rows)
}

/// Classify `Σ 1/x_k` over `k ≥ k*` and check the reciprocal-sum lower bound
/// `Σ_{j=k*}^{n} 1/x_j ≥ (2k*+2)^{-1} ∫_{x_k*}^{x_n} u(x)/x² dx` (sum over
/// integers `j_{k*} < j ≤ j_n` and reciprocals up to `n − 1` in the discrete case).
pub fn recip_sum_check(
    spec: &Distribution,
    trace: &MaximizerTrace,
    cfg: &TailFitConfig,
) -> Result<ReciprocalCheck> {
    let traced = traced_spec(spec)?;
    let ks = trace.k_star as usize - 1;
    let pts = &trace.points[ks..];
    let terms: Vec<(i64, f64)> = pts.iter().map(|&(k, x)| (k as i64, -x.ln())).collect();
    // points held at the threshold are not interior maxima; keep them out of the fit
    let t = traced.threshold();
    let fit_from = pts
        .iter()
        .find(|&&(_, x)| x > t)
        .map_or(trace.k_star, |&(k, _)| k.max(trace.k_star));
    let verdict = classify_finite_terms(&terms, fit_from as i64, cfg)?;

    let factor = 1.0 / (2.0 * trace.k_star as f64 + 2.0);
    let mut rows = Vec::new();
    let mut recip = 1.0 / pts[0].1;
    let mut lower = 0.0;
    for w in pts.windows(2) {
        let (n, x_prev, x_n) = (w[1].0, w[0].1, w[1].1);
        let (lhs, added) = match trace.case {
            TraceCase::Continuous => {
                recip += 1.0 / x_n;
                let seg = if x_n > x_prev {
                    let u_over_x2 = |x: f64| match traced.u_ratio(x) {
                        Ok(u) if u > 0.0 => u.ln() - 2.0 * x.ln(),
                        _ => f64::NEG_INFINITY,
                    };
                    quadrature::adaptive(&u_over_x2, x_prev, x_n, 1e-10)?.value()
                } else {
                    0.0
                };
                (recip, seg)
            }
            TraceCase::Discrete => {
                let lhs = recip;
                recip += 1.0 / x_n;
                let mut seg = 0.0;
                let (a, b) = (x_prev as i64 + 1, x_n as i64);
                for j in a..=b {
                    let u = traced.u_ratio(j as f64)?;
                    seg += u.max(0.0) / (j * j) as f64;
                }
                (lhs, seg)
            }
        };
        lower += added;
        let rhs = factor * lower;
        if lhs < rhs * (1.0 - 1e-9) - 1e-12 {
            return Err(Error::ProofStep {
                step: 6,
                detail: format!("reciprocal sum {lhs} < lower bound {rhs} at n = {n}"),
            });
        }
        rows.push(ReciprocalRow { n, lhs, rhs });
    }
    Ok(ReciprocalCheck { verdict, rows })
}
