//! JSON and CSV renderings with fixed 12-significant-digit numbers.

use serde::Serialize;
use serde_json::Value;

use crate::conditions::ConditionReport;
use crate::error::{Error, Result};
use crate::maximizer::{BoundRow, MaximizerTrace};
use crate::moments::{self, MomentTable};
use crate::pipeline::Analysis;
use crate::verdict::DeterminacyVerdict;

pub const SIGNIFICANT_DIGITS: usize = 12;

/// Round to [`SIGNIFICANT_DIGITS`] significant digits.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x)
        .parse()
        .unwrap_or(x)
}

/// Text form of a rounded number; plain notation for moderate magnitudes,
/// exponent notation otherwise.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let r = round_sig(x);
    let a = r.abs();
    if r == 0.0 || (1e-5..1e15).contains(&a) {
        format!("{r}")
    } else {
        format!("{r:e}")
    }
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) => {
            if let Some(f) = n.as_f64().filter(|_| !n.is_i64() && !n.is_u64()) {
                if let Some(r) = serde_json::Number::from_f64(round_sig(f)) {
                    *n = r;
                }
            }
        }
        Value::Array(a) => a.iter_mut().for_each(round_value),
        Value::Object(o) => o.values_mut().for_each(round_value),
        _ => {}
    }
}

/// Serialize with every float rounded. Non-finite floats become `null`.
pub fn to_rounded_value<T: Serialize>(x: &T) -> Result<Value> {
    let mut v = serde_json::to_value(x).map_err(|e| Error::numeric(format!("serialization failed: {e}")))?;
    round_value(&mut v);
    Ok(v)
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("values always serialize")
}

pub fn verdict_json(v: &DeterminacyVerdict) -> Result<String> {
    Ok(pretty(&to_rounded_value(v)?))
}

/// Analysis JSON: spec identity, every condition report, dominations and
/// the verdict.
pub fn analysis_json(a: &Analysis) -> Result<String> {
    Ok(pretty(&to_rounded_value(a)?))
}

fn csv_string(header: &[&str], rows: Vec<Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::numeric(format!("csv output failed: {e}"));
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(&r).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::numeric(format!("csv output failed: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv of utf-8 fields"))
}

/// `k,ln_mk,err,carleman_term`; the Carleman column is empty for orders
/// that do not enter the sum.
pub fn moments_csv(table: &MomentTable) -> Result<String> {
    let rows = table
        .entries
        .iter()
        .map(|e| {
            let term = moments::carleman_term_for_order(table.case, e.k, e.ln_mk)
                .map(|(_, t)| fmt_num(t))
                .unwrap_or_default();
            vec![e.k.to_string(), fmt_num(e.ln_mk), fmt_num(e.err), term]
        })
        .collect();
    csv_string(&["k", "ln_mk", "err", "carleman_term"], rows)
}

/// `k,x_k,ln_peak_weight,bound_slack`; slack is empty below `k*` and at the
/// last order.
pub fn trace_csv(trace: &MaximizerTrace, bounds: &[BoundRow]) -> Result<String> {
    let rows = trace
        .points
        .iter()
        .zip(&trace.peak_log_weights)
        .map(|(&(k, x), &(_, w))| {
            let slack = bounds
                .iter()
                .find(|b| b.k == k)
                .map(|b| fmt_num(b.slack))
                .unwrap_or_default();
            vec![k.to_string(), fmt_num(x), fmt_num(w), slack]
        })
        .collect();
    csv_string(&["k", "x_k", "ln_peak_weight", "bound_slack"], rows)
}

/// `condition,verdict,p_fit,q_fit,notes`; notes joined with `; `.
pub fn conditions_csv(reports: &[ConditionReport]) -> Result<String> {
    let rows = reports
        .iter()
        .map(|r| {
            let (p, q) = r
                .fit_exponents()
                .map(|(p, q)| (fmt_num(p), fmt_num(q)))
                .unwrap_or_default();
            vec![r.id.name().to_string(), r.verdict.to_string(), p, q, r.notes.join("; ")]
        })
        .collect();
    csv_string(&["condition", "verdict", "p_fit", "q_fit", "notes"], rows)
}
