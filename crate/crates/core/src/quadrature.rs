//! Log-domain quadrature and summation.
//!
//! Every integrand is supplied as its logarithm so that quantities such as
//! `x^60 f(x)` can be integrated without overflow. Results are returned as
//! `ln(value)` together with `ln(error estimate)`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

// 21-point Gauss-Kronrod rule (QUADPACK qk21).
const XGK: [f64; 11] = [
    0.995_657_163_025_808_1,
    0.973_906_528_517_171_7,
    0.930_157_491_355_708_2,
    0.865_063_366_688_984_5,
    0.780_817_726_586_416_9,
    0.679_409_568_299_024_4,
    0.562_757_134_668_604_7,
    0.433_395_394_129_247_2,
    0.294_392_862_701_460_2,
    0.148_874_338_981_631_2,
    0.0,
];
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874,
    0.032_558_162_307_964_73,
    0.054_755_896_574_352,
    0.075_039_674_810_919_95,
    0.093_125_454_583_697_6,
    0.109_387_158_802_297_64,
    0.123_491_976_262_065_85,
    0.134_709_217_311_473_33,
    0.142_775_938_577_060_08,
    0.147_739_104_901_338_5,
    0.149_445_554_002_916_9,
];
const WG: [f64; 5] = [
    0.066_671_344_308_688_14,
    0.149_451_349_150_580_6,
    0.219_086_362_515_982_04,
    0.269_266_719_309_996_36,
    0.295_524_224_714_752_87,
];

/// Panels whose contribution is this many nats below the running total are
/// treated as negligible.
const NEGLIGIBLE_NATS: f64 = 40.0;
const DEFAULT_REL_TOL: f64 = 1e-12;
const MAX_SUBDIVISIONS: usize = 1000;
const STALL_ACCEPT: f64 = 1e-4;

/// `ln` of a nonnegative quantity and of its error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogIntegral {
    pub ln_value: f64,
    pub ln_err: f64,
}

impl LogIntegral {
    pub const ZERO: LogIntegral = LogIntegral {
        ln_value: f64::NEG_INFINITY,
        ln_err: f64::NEG_INFINITY,
    };

    pub fn value(&self) -> f64 {
        self.ln_value.exp()
    }

    pub fn err(&self) -> f64 {
        self.ln_err.exp()
    }

    /// Relative error of the value, which is also the absolute error of `ln_value`.
    pub fn rel_err(&self) -> f64 {
        if self.ln_value == f64::NEG_INFINITY {
            0.0
        } else {
            (self.ln_err - self.ln_value).exp()
        }
    }

    pub fn add(self, other: LogIntegral) -> LogIntegral {
        LogIntegral {
            ln_value: log_add_exp(self.ln_value, other.ln_value),
            ln_err: log_add_exp(self.ln_err, other.ln_err),
        }
    }
}

pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

pub fn log_sum_exp(values: &[f64]) -> f64 {
    let m = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    if m == f64::INFINITY {
        return m;
    }
    m + values.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

#[derive(Debug, Clone, Copy)]
struct Piece {
    a: f64,
    b: f64,
    ln_val: f64,
    ln_err: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.ln_err == other.ln_err
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.ln_err.total_cmp(&other.ln_err)
    }
}

fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut err = err.abs();
    if res_asc != 0.0 && err != 0.0 {
        let scale = (200.0 * err / res_asc).powf(1.5);
        err = if scale < 1.0 { res_asc * scale } else { res_asc };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    err
}

fn qk21<F: Fn(f64) -> f64>(lf: &F, a: f64, b: f64) -> Result<Piece> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut lv = [0.0_f64; 21];
    lv[0] = lf(center);
    for j in 0..10 {
        let dx = half * XGK[j];
        lv[1 + 2 * j] = lf(center - dx);
        lv[2 + 2 * j] = lf(center + dx);
    }
    if lv.iter().any(|v| v.is_nan() || *v == f64::INFINITY) {
        return Err(Error::numeric(format!(
            "integrand not finite on [{a:e}, {b:e}]"
        )));
    }
    let shift = lv.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if shift == f64::NEG_INFINITY {
        return Ok(Piece {
            a,
            b,
            ln_val: f64::NEG_INFINITY,
            ln_err: f64::NEG_INFINITY,
        });
    }
    let v: Vec<f64> = lv.iter().map(|x| (x - shift).exp()).collect();
    let fc = v[0];
    let mut res_k = fc * WGK[10];
    let mut res_g = 0.0;
    for j in 0..5 {
        let jtw = 2 * j + 1;
        let s = v[1 + 2 * jtw] + v[2 + 2 * jtw];
        res_g += WG[j] * s;
        res_k += WGK[jtw] * s;
    }
    for j in 0..5 {
        let jtwm1 = 2 * j;
        let s = v[1 + 2 * jtwm1] + v[2 + 2 * jtwm1];
        res_k += WGK[jtwm1] * s;
    }
    let mean = res_k * 0.5;
    let mut res_asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((v[1 + 2 * j] - mean).abs() + (v[2 + 2 * j] - mean).abs());
    }
    let abs_half = half.abs();
    let result = res_k * half;
    let res_abs = res_k * abs_half;
    res_asc *= abs_half;
    let err = rescale_error((res_k - res_g) * half, res_abs, res_asc);
    Ok(Piece {
        a,
        b,
        ln_val: result.max(0.0).ln() + shift,
        ln_err: err.ln() + shift,
    })
}

/// Globally adaptive 21-point Gauss-Kronrod on a finite interval.
pub fn adaptive<F: Fn(f64) -> f64>(lf: &F, a: f64, b: f64, rel_tol: f64) -> Result<LogIntegral> {
    adaptive_accepting(lf, a, b, rel_tol, STALL_ACCEPT)
}

/// As [`adaptive`], but a run that exhausts its subdivision budget is
/// accepted while its relative error estimate is below `stall_accept`.
pub fn adaptive_accepting<F: Fn(f64) -> f64>(
    lf: &F,
    a: f64,
    b: f64,
    rel_tol: f64,
    stall_accept: f64,
) -> Result<LogIntegral> {
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(Error::invalid(format!("bad interval [{a}, {b}]")));
    }
    let first = qk21(lf, a, b)?;
    let mut heap = BinaryHeap::new();
    heap.push(first);
    let mut total = LogIntegral {
        ln_value: first.ln_val,
        ln_err: first.ln_err,
    };
    let mut iterations = 0;
    while total.ln_err > total.ln_value + rel_tol.ln() && total.ln_err > f64::NEG_INFINITY {
        if iterations >= MAX_SUBDIVISIONS {
            if total.rel_err() > stall_accept {
                return Err(Error::numeric(format!(
                    "adaptive quadrature on [{a:e}, {b:e}] stalled at relative error {:.3e}",
                    total.rel_err()
                )));
            }
            break;
        }
        iterations += 1;
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            heap.push(worst);
            break;
        }
        let left = qk21(lf, worst.a, mid)?;
        let right = qk21(lf, mid, worst.b)?;
        heap.push(left);
        heap.push(right);
        let vals: Vec<f64> = heap.iter().map(|p| p.ln_val).collect();
        let errs: Vec<f64> = heap.iter().map(|p| p.ln_err).collect();
        total = LogIntegral {
            ln_value: log_sum_exp(&vals),
            ln_err: log_sum_exp(&errs),
        };
    }
    Ok(total)
}

/// Point maximizing `lf(x) + ln x` on a coarse geometric lattice: the panel
/// `[c, 2c]` with the largest mass sits near it.
pub fn mass_peak<F: Fn(f64) -> f64>(lf: &F, lo: f64, hi: f64) -> Result<f64> {
    let lo_j = if lo > 0.0 {
        (2.0 * lo.log2()).ceil() as i64
    } else {
        -400
    };
    let hi_j = if hi.is_finite() {
        (2.0 * hi.log2()).floor() as i64
    } else {
        2000
    };
    let mut best = (f64::NEG_INFINITY, f64::NAN);
    for j in lo_j..=hi_j {
        let x = (j as f64 * 0.5).exp2();
        let v = lf(x) + x.ln();
        if v > best.0 {
            best = (v, x);
        }
    }
    if best.1.is_nan() {
        // interval too narrow for the lattice
        if hi.is_finite() && lo < hi {
            return Ok(if lo > 0.0 { (lo * hi).sqrt() } else { 0.5 * hi });
        }
        return Err(Error::numeric("integrand vanishes on the whole lattice"));
    }
    Ok(best.1)
}

/// `ln ∫_lo^hi exp(lf(x)) dx` for `0 <= lo < hi <= ∞`.
///
/// The range is cut into geometric panels `[c 2^j, c 2^(j+1)]` around `center`
/// (or the mass peak when absent); each panel is integrated adaptively and
/// panels are added until the remaining ones are negligible.
pub fn log_integral<F: Fn(f64) -> f64>(
    lf: F,
    lo: f64,
    hi: f64,
    center: Option<f64>,
) -> Result<LogIntegral> {
    log_integral_tol(lf, lo, hi, center, DEFAULT_REL_TOL)
}

pub fn log_integral_tol<F: Fn(f64) -> f64>(
    lf: F,
    lo: f64,
    hi: f64,
    center: Option<f64>,
    rel_tol: f64,
) -> Result<LogIntegral> {
    if !(lo >= 0.0) || !(lo < hi) {
        return Err(Error::invalid(format!("bad integration range [{lo}, {hi}]")));
    }
    if lo > 0.0 && hi.is_finite() && hi / lo <= 4.0 {
        return adaptive(&lf, lo, hi, rel_tol);
    }
    let mut c = match center {
        Some(c) if c.is_finite() && c > 0.0 => c,
        _ => mass_peak(&lf, lo, hi)?,
    };
    if c <= lo {
        c = if lo > 0.0 { lo } else { f64::MIN_POSITIVE };
    }
    if c >= hi {
        c = if lo > 0.0 { (lo * hi).sqrt() } else { 0.5 * hi };
    }

    let mut total = LogIntegral::ZERO;
    // upward
    let mut x = c;
    let mut quiet = 0;
    let mut panels = 0;
    while x < hi {
        let y = if hi.is_finite() { (2.0 * x).min(hi) } else { 2.0 * x };
        if !y.is_finite() || y > 1e300 {
            break;
        }
        let piece = adaptive(&lf, x, y, rel_tol)?;
        total = total.add(piece);
        panels += 1;
        if piece.ln_value < total.ln_value - NEGLIGIBLE_NATS && lf(y) <= lf(x) {
            quiet += 1;
            if quiet >= 2 && !hi.is_finite() {
                break;
            }
        } else {
            quiet = 0;
        }
        if panels > 2200 {
            return Err(Error::numeric("upward panel expansion did not terminate"));
        }
        x = y;
    }
    // downward
    let mut x = c;
    quiet = 0;
    while x > lo {
        let y = (0.5 * x).max(lo);
        if lo == 0.0 && y < 1e-300 {
            break;
        }
        let piece = adaptive(&lf, y, x, rel_tol)?;
        total = total.add(piece);
        if piece.ln_value < total.ln_value - NEGLIGIBLE_NATS {
            quiet += 1;
            if quiet >= 2 {
                break;
            }
        } else {
            quiet = 0;
        }
        x = y;
    }
    Ok(total)
}

/// `ln Σ_{n >= start} exp(lt(n))` for terms that eventually decrease.
///
/// Summation stops once a term is 60 nats below the running maximum and the
/// terms are decreasing; a geometric bound on the rest is folded into the
/// error.
pub fn log_sum<F: Fn(i64) -> f64>(lt: F, start: i64) -> Result<LogIntegral> {
    log_sum_capped(lt, start, 50_000_000)
}

pub fn log_sum_capped<F: Fn(i64) -> f64>(lt: F, start: i64, max_terms: i64) -> Result<LogIntegral> {
    let mut m = f64::NEG_INFINITY;
    let mut s = 0.0_f64;
    let mut prev = f64::NEG_INFINITY;
    let mut n = start;
    let tail;
    loop {
        let v = lt(n);
        if v.is_nan() || v == f64::INFINITY {
            return Err(Error::numeric(format!("term {n} is not finite")));
        }
        if v > m {
            s = s * (m - v).exp() + 1.0;
            m = v;
        } else if v > f64::NEG_INFINITY {
            s += (v - m).exp();
        }
        if n > start && m > f64::NEG_INFINITY && v < m - 60.0 && v < prev {
            let rho = (v - prev).exp();
            tail = v + rho.ln() - (1.0 - rho).ln();
            break;
        }
        if n - start >= max_terms {
            return Err(Error::numeric(format!(
                "series did not decay within {max_terms} terms"
            )));
        }
        prev = v;
        n += 1;
    }
    let ln_value = m + s.ln();
    // relative roundoff of the running sum plus the tail bound
    let ln_err = log_add_exp(ln_value + (1e-15 * (n - start) as f64).max(1e-16).ln(), tail);
    Ok(LogIntegral { ln_value, ln_err })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn gaussian_integral() {
        let r = log_integral(|x: f64| -0.5 * x * x, 0.0, f64::INFINITY, None).unwrap();
        assert!((r.value() - (PI / 2.0).sqrt()).abs() < 1e-13);
    }

    #[test]
    fn factorial_in_log_domain() {
        // ∫ x^50 e^{-x} = 50!
        let r = log_integral(|x: f64| 50.0 * x.ln() - x, 0.0, f64::INFINITY, None).unwrap();
        let ln_fact: f64 = (1..=50).map(|i| (i as f64).ln()).sum();
        assert!((r.ln_value - ln_fact).abs() < 1e-11 * ln_fact);
    }

    #[test]
    fn integrable_singularity_at_origin() {
        // ∫_0^1 x^{-1/2} = 2
        let r = log_integral(|x: f64| -0.5 * x.ln(), 0.0, 1.0, None).unwrap();
        assert!((r.value() - 2.0).abs() < 1e-10, "{}", r.value());
    }

    #[test]
    fn zero_region_is_skipped() {
        let r = log_integral(
            |x: f64| if x <= 1.0 { f64::NEG_INFINITY } else { -x },
            0.0,
            f64::INFINITY,
            None,
        )
        .unwrap();
        assert!((r.value() - (-1.0_f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn geometric_series() {
        let r = log_sum(|n| -(n as f64) * 2f64.ln(), 0).unwrap();
        assert!((r.value() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn log_add_handles_infinities() {
        assert_eq!(log_add_exp(f64::NEG_INFINITY, 1.0), 1.0);
        assert!((log_add_exp(0.0, 0.0) - 2f64.ln()).abs() < 1e-15);
    }
}
