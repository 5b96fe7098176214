//! The checkable tail conditions: logarithmic integrals and sums, ratio
//! monotonicity, condition (L), Krein-type integrals and Carleman's sum.

use std::f64::consts::{E, LN_2};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::distmodel::{DensitySpec, Distribution, MomentCase, PmfSpec, SupportKind};
use crate::error::{Error, Result};
use crate::moments;
use crate::tailfit::{self, DivergenceClass, DivergenceVerdict};

const GRID_SPAN: f64 = 40.0;
const GRID_RATIO: f64 = 1.5;
const INTEGER_GRID_END: i64 = 10_000;
const STIELTJES_NOTE: &str =
    "half-line check: g is evaluated only from max(threshold, e) on; the class is tail-determined";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ConditionId {
    KstarH,
    UMonotoneH,
    KstarS,
    UMonotoneS,
    CondL,
    ConverseKreinH,
    ConverseKreinS,
    KreinH,
    KreinS,
    PedersenDiscrete,
    KstarDiscreteH,
    UMonotoneDiscreteH,
    KstarDiscreteS,
    UMonotoneDiscreteS,
    CarlemanH,
    CarlemanS,
}

impl ConditionId {
    pub const ALL: [ConditionId; 16] = [
        ConditionId::KstarH,
        ConditionId::UMonotoneH,
        ConditionId::KstarS,
        ConditionId::UMonotoneS,
        ConditionId::CondL,
        ConditionId::ConverseKreinH,
        ConditionId::ConverseKreinS,
        ConditionId::KreinH,
        ConditionId::KreinS,
        ConditionId::PedersenDiscrete,
        ConditionId::KstarDiscreteH,
        ConditionId::UMonotoneDiscreteH,
        ConditionId::KstarDiscreteS,
        ConditionId::UMonotoneDiscreteS,
        ConditionId::CarlemanH,
        ConditionId::CarlemanS,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ConditionId::KstarH => "KstarH",
            ConditionId::UMonotoneH => "UMonotoneH",
            ConditionId::KstarS => "KstarS",
            ConditionId::UMonotoneS => "UMonotoneS",
            ConditionId::CondL => "CondL",
            ConditionId::ConverseKreinH => "ConverseKreinH",
            ConditionId::ConverseKreinS => "ConverseKreinS",
            ConditionId::KreinH => "KreinH",
            ConditionId::KreinS => "KreinS",
            ConditionId::PedersenDiscrete => "PedersenDiscrete",
            ConditionId::KstarDiscreteH => "KstarDiscreteH",
            ConditionId::UMonotoneDiscreteH => "UMonotoneDiscreteH",
            ConditionId::KstarDiscreteS => "KstarDiscreteS",
            ConditionId::UMonotoneDiscreteS => "UMonotoneDiscreteS",
            ConditionId::CarlemanH => "CarlemanH",
            ConditionId::CarlemanS => "CarlemanS",
        }
    }

    /// Display label of the condition, e.g. `(6H)`.
    pub fn label(self) -> &'static str {
        match self {
            ConditionId::KstarH => "(1)",
            ConditionId::UMonotoneH => "(2)",
            ConditionId::KstarS => "(3)",
            ConditionId::UMonotoneS => "(4)",
            ConditionId::CondL => "(5)",
            ConditionId::ConverseKreinH => "(6H)",
            ConditionId::ConverseKreinS => "(6S)",
            ConditionId::KreinH => "(7H)",
            ConditionId::KreinS => "(7S)",
            ConditionId::PedersenDiscrete => "(8)",
            ConditionId::KstarDiscreteH => "(9)",
            ConditionId::UMonotoneDiscreteH => "(10)",
            ConditionId::KstarDiscreteS => "(11)",
            ConditionId::UMonotoneDiscreteS => "(12)",
            ConditionId::CarlemanH => "Carleman (H)",
            ConditionId::CarlemanS => "Carleman (S)",
        }
    }

    /// Support kinds the condition is stated for.
    pub fn applies_to(self, support: SupportKind) -> bool {
        use SupportKind::*;
        match self {
            ConditionId::KstarH
            | ConditionId::UMonotoneH
            | ConditionId::ConverseKreinH
            | ConditionId::KreinH => support == HamburgerSymmetric,
            ConditionId::KstarS
            | ConditionId::UMonotoneS
            | ConditionId::ConverseKreinS
            | ConditionId::KreinS => support == Stieltjes,
            ConditionId::CondL => support.is_continuous(),
            ConditionId::PedersenDiscrete
            | ConditionId::KstarDiscreteH
            | ConditionId::UMonotoneDiscreteH => support == IntegerSymmetric,
            ConditionId::KstarDiscreteS | ConditionId::UMonotoneDiscreteS => {
                support == NonnegativeInteger
            }
            ConditionId::CarlemanH => support.is_symmetric(),
            ConditionId::CarlemanS => !support.is_symmetric(),
        }
    }
}

impl fmt::Display for ConditionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ConditionId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ConditionId::ALL
            .into_iter()
            .find(|id| id.name() == s.trim())
            .ok_or_else(|| {
                let names: Vec<&str> = ConditionId::ALL.iter().map(|id| id.name()).collect();
                Error::invalid(format!("unknown condition {s:?}; known: {}", names.join(", ")))
            })
    }
}

/// Parse a comma-separated list of condition names.
pub fn parse_condition_list(list: &str) -> Result<Vec<ConditionId>> {
    list.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(str::parse)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ConditionVerdict {
    Holds,
    FailsToHold,
    Inconclusive,
}

impl fmt::Display for ConditionVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConditionVerdict::Holds => "Holds",
            ConditionVerdict::FailsToHold => "FailsToHold",
            ConditionVerdict::Inconclusive => "Inconclusive",
        })
    }
}

/// Outcome of a ratio-monotonicity scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotoneRecord {
    /// Threshold the scan started from.
    pub start_threshold: f64,
    /// Final grid start after escalation.
    pub escalated_threshold: f64,
    pub escalations: u32,
    /// Grid abscissa from which no down-tick beyond tolerance was seen.
    pub increasing_from: f64,
    pub grid_points: usize,
    /// Slope of the ratio against `ln ln x` over the increasing stretch.
    pub slope_vs_lnln: f64,
    /// Last minus first ratio value over the increasing stretch.
    pub rise: f64,
    pub first_value: f64,
    pub last_value: f64,
    /// A decrease in the upper half of the grid survived every escalation.
    pub persistent_decrease: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "data")]
pub enum Evidence {
    Divergence(DivergenceVerdict),
    Monotone(MonotoneRecord),
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub id: ConditionId,
    pub verdict: ConditionVerdict,
    pub evidence: Evidence,
    /// Range of the evaluation grid or ladder.
    pub window: [f64; 2],
    pub notes: Vec<String>,
}

impl ConditionReport {
    fn inconclusive(id: ConditionId, window: [f64; 2], note: impl Into<String>) -> Self {
        ConditionReport {
            id,
            verdict: ConditionVerdict::Inconclusive,
            evidence: Evidence::None,
            window,
            notes: vec![note.into()],
        }
    }

    /// Fitted exponents `(p, q)` when the evidence is a tail fit.
    pub fn fit_exponents(&self) -> Option<(f64, f64)> {
        match &self.evidence {
            Evidence::Divergence(v) => Some((v.fit.p, v.fit.q)),
            _ => None,
        }
    }
}

fn divergence_report(
    id: ConditionId,
    verdict: DivergenceVerdict,
    holds_when: DivergenceClass,
    mut notes: Vec<String>,
) -> ConditionReport {
    let v = match verdict.class {
        DivergenceClass::Inconclusive => ConditionVerdict::Inconclusive,
        c if c == holds_when => ConditionVerdict::Holds,
        _ => ConditionVerdict::FailsToHold,
    };
    let window = match (verdict.partials.first(), verdict.partials.last()) {
        (Some(a), Some(b)) => [a.0, b.0],
        _ => verdict.fit.window,
    };
    notes.insert(0, verdict.diagnostics.clone());
    ConditionReport {
        id,
        verdict: v,
        evidence: Evidence::Divergence(verdict),
        window,
        notes,
    }
}

fn require_support(d: SupportKind, want: SupportKind, what: &str) -> Result<()> {
    if d != want {
        return Err(Error::invalid(format!("{what} needs a {want:?} distribution, got {d:?}")));
    }
    Ok(())
}

fn case_support(case: MomentCase) -> SupportKind {
    match case {
        MomentCase::Hamburger => SupportKind::HamburgerSymmetric,
        MomentCase::Stieltjes => SupportKind::Stieltjes,
    }
}

/// `ln(-ln f)` at `x` for Hamburger, at `x²` for Stieltjes. NaN when the
/// density is not in `(0, 1)` there, which the classifier rejects.
fn ln_neg_log_density<'a>(
    d: &'a DensitySpec,
    case: MomentCase,
) -> Result<impl Fn(f64) -> f64 + 'a> {
    let lf = d.log_density_fn()?;
    Ok(move |x: f64| {
        let at = match case {
            MomentCase::Hamburger => x,
            MomentCase::Stieltjes => x * x,
        };
        let v = -lf(at);
        if v > 0.0 && v.is_finite() {
            v.ln()
        } else {
            f64::NAN
        }
    })
}

fn density_window_start(d: &DensitySpec) -> f64 {
    d.threshold().max(E)
}

fn case_notes(case: MomentCase) -> Vec<String> {
    match case {
        MomentCase::Hamburger => Vec::new(),
        MomentCase::Stieltjes => vec![STIELTJES_NOTE.to_string()],
    }
}

/// Logarithmic integral `K*`: `(-ln f(x))/(x² ln x)` (Hamburger) or
/// `(-ln g(x²))/(x² ln x)` (Stieltjes). Holds when it diverges.
pub fn check_kstar(d: &DensitySpec, case: MomentCase, cfg: &Config) -> Result<ConditionReport> {
    require_support(d.support(), case_support(case), "K* check")?;
    let id = match case {
        MomentCase::Hamburger => ConditionId::KstarH,
        MomentCase::Stieltjes => ConditionId::KstarS,
    };
    let lnl = ln_neg_log_density(d, case)?;
    let v = tailfit::classify_integral(
        |x| lnl(x) - 2.0 * x.ln() - x.ln().ln(),
        density_window_start(d),
        &cfg.tailfit,
    )?;
    Ok(divergence_report(id, v, DivergenceClass::Divergent, case_notes(case)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KreinDirection {
    /// The logarithmic integral is finite (indeterminacy side).
    Finite,
    /// The logarithmic integral is infinite (converse side).
    Infinite,
}

/// Krein-type integral of `(-ln f(x))/(1+x²)`, or `(-ln g(x²))/(1+x²)`.
pub fn check_krein(
    d: &DensitySpec,
    case: MomentCase,
    direction: KreinDirection,
    cfg: &Config,
) -> Result<ConditionReport> {
    let (finite, infinite) = krein_reports(d, case, cfg)?;
    Ok(match direction {
        KreinDirection::Finite => finite,
        KreinDirection::Infinite => infinite,
    })
}

/// Both readings of the Krein integral from one classification:
/// `(finite, infinite)`.
pub fn krein_reports(
    d: &DensitySpec,
    case: MomentCase,
    cfg: &Config,
) -> Result<(ConditionReport, ConditionReport)> {
    require_support(d.support(), case_support(case), "Krein check")?;
    let (fin_id, inf_id) = match case {
        MomentCase::Hamburger => (ConditionId::KreinH, ConditionId::ConverseKreinH),
        MomentCase::Stieltjes => (ConditionId::KreinS, ConditionId::ConverseKreinS),
    };
    let lnl = ln_neg_log_density(d, case)?;
    let v = tailfit::classify_integral(
        |x| lnl(x) - (1.0 + x * x).ln(),
        density_window_start(d),
        &cfg.tailfit,
    )?;
    let mut fin_notes = case_notes(case);
    let mut inf_notes = case_notes(case);
    match v.class {
        DivergenceClass::Divergent => fin_notes.push(format!(
            "integral diverges: the converse reading ({inf_id}) holds"
        )),
        DivergenceClass::Convergent => inf_notes.push(format!(
            "integral converges: the indeterminacy reading ({fin_id}) holds"
        )),
        DivergenceClass::Inconclusive => {}
    }
    let finite = divergence_report(fin_id, v.clone(), DivergenceClass::Convergent, fin_notes);
    let infinite = divergence_report(inf_id, v, DivergenceClass::Divergent, inf_notes);
    Ok((finite, infinite))
}

/// Discrete `K*` sum over `|j| >= j0` (symmetric) or `n >= n0` (half-line).
pub fn check_discrete_kstar(p: &PmfSpec, cfg: &Config) -> Result<ConditionReport> {
    let lp = p.log_pmf_fn()?;
    let (id, fold, note) = match p.support() {
        SupportKind::IntegerSymmetric => (
            ConditionId::KstarDiscreteH,
            LN_2,
            Some("symmetric sum folded onto j >= j0 with factor 2"),
        ),
        SupportKind::NonnegativeInteger => (ConditionId::KstarDiscreteS, 0.0, None),
        other => return Err(Error::invalid(format!("discrete K* needs an integer pmf, got {other:?}"))),
    };
    let n0 = p.threshold().max(2);
    let terms = |n: i64| {
        let nf = n as f64;
        let v = -lp(n);
        if v > 0.0 && v.is_finite() {
            fold + v.ln() - 2.0 * nf.ln() - nf.ln().ln()
        } else {
            f64::NAN
        }
    };
    let v = tailfit::classify_series(terms, n0, &cfg.tailfit)?;
    let notes = note.map(|s| vec![s.to_string()]).unwrap_or_default();
    Ok(divergence_report(id, v, DivergenceClass::Divergent, notes))
}

/// `Σ_j (-ln p_j)/(1+j²)` for a symmetric pmf. Holds when finite.
pub fn check_pedersen(p: &PmfSpec, cfg: &Config) -> Result<ConditionReport> {
    require_support(p.support(), SupportKind::IntegerSymmetric, "Pedersen check")?;
    let lp = p.log_pmf_fn()?;
    let j0 = p.threshold().max(2);
    let term = |j: i64| -lp(j) / (1.0 + (j * j) as f64);
    let mut head = 0.0;
    for j in -(j0 - 1)..j0 {
        let t = term(j);
        if !t.is_finite() {
            return Err(Error::numeric(format!("Pedersen head term at j = {j} is not finite")));
        }
        head += t;
    }
    let v = tailfit::classify_series(
        |j| {
            let v = -lp(j);
            if v > 0.0 && v.is_finite() {
                LN_2 + v.ln() - (1.0 + (j as f64).powi(2)).ln()
            } else {
                f64::NAN
            }
        },
        j0,
        &cfg.tailfit,
    )?
    .with_head(head);
    let notes = vec![format!(
        "head over |j| < {j0} adds {head:.6} to the partial sums; tail folded with factor 2"
    )];
    Ok(divergence_report(
        ConditionId::PedersenDiscrete,
        v,
        DivergenceClass::Convergent,
        notes,
    ))
}

fn geometric_grid(start: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    let step = GRID_SPAN / (n - 1) as f64;
    (0..n).map(|i| start * GRID_RATIO.powf(step * i as f64)).collect()
}

fn integer_grid(start: i64) -> Vec<f64> {
    let mut g: Vec<f64> = (start..=INTEGER_GRID_END.max(start)).map(|j| j as f64).collect();
    let end = start as f64 * GRID_RATIO.powf(GRID_SPAN);
    let mut x = *g.last().expect("nonempty") * GRID_RATIO;
    while x <= end {
        g.push(x.round());
        x *= GRID_RATIO;
    }
    g
}

/// Evaluation grid used by the ratio scans.
fn scan_grid(start: f64, discrete: bool, cfg: &Config) -> Vec<f64> {
    if discrete {
        integer_grid(start.ceil() as i64)
    } else {
        geometric_grid(start, cfg.conditions.grid_points)
    }
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx > 0.0 {
        sxy / sxx
    } else {
        0.0
    }
}

/// Scan `ratio` for eventual increase to infinity, doubling the start
/// threshold while a decrease persists in the upper half of the grid.
fn monotone_scan<F>(ratio: F, start: f64, discrete: bool, cfg: &Config) -> Result<MonotoneRecord>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    let tol = cfg.conditions.monotone_tol;
    let mut t = start;
    let mut escalations = 0;
    loop {
        let grid = scan_grid(t, discrete, cfg);
        let vals = grid
            .par_iter()
            .map(|&x| ratio(x))
            .collect::<Result<Vec<f64>>>()?;
        if let Some(i) = vals.iter().position(|v| !v.is_finite()) {
            return Err(Error::numeric(format!("ratio is not finite at x = {}", grid[i])));
        }
        let last_down = (0..vals.len() - 1)
            .rev()
            .find(|&i| vals[i + 1] < vals[i] - tol * (1.0 + vals[i].abs()));
        let s = last_down.map_or(0, |i| i + 1);
        let accepted = s <= grid.len() / 2;
        let next = if discrete { (t * 2.0).ceil() } else { t * 2.0 };
        if accepted || next > cfg.conditions.escalation_cap {
            let lnln: Vec<f64> = grid[s..].iter().map(|x| x.ln().ln()).collect();
            return Ok(MonotoneRecord {
                start_threshold: start,
                escalated_threshold: t,
                escalations,
                increasing_from: grid[s],
                grid_points: grid.len(),
                slope_vs_lnln: if grid.len() - s >= 2 { slope(&lnln, &vals[s..]) } else { 0.0 },
                rise: vals[vals.len() - 1] - vals[s],
                first_value: vals[s],
                last_value: vals[vals.len() - 1],
                persistent_decrease: !accepted,
            });
        }
        t = next;
        escalations += 1;
    }
}

fn monotone_report(id: ConditionId, rec: MonotoneRecord, cfg: &Config, mut notes: Vec<String>) -> ConditionReport {
    let grows = rec.slope_vs_lnln > 0.0 || rec.rise >= cfg.conditions.growth_margin;
    let verdict = if rec.persistent_decrease {
        notes.push(format!(
            "a decrease persists in the upper half of the grid up to threshold {}",
            rec.escalated_threshold
        ));
        ConditionVerdict::FailsToHold
    } else if grows {
        ConditionVerdict::Holds
    } else {
        notes.push("ratio appears to plateau on the grid".to_string());
        ConditionVerdict::Inconclusive
    };
    if rec.escalations > 0 {
        notes.push(format!(
            "threshold escalated {} times to {}",
            rec.escalations, rec.escalated_threshold
        ));
    }
    if rec.increasing_from > rec.start_threshold {
        notes.push(format!("increasing from x = {}", rec.increasing_from));
    }
    let hi = rec.escalated_threshold * GRID_RATIO.powf(GRID_SPAN);
    ConditionReport {
        id,
        verdict,
        window: [rec.increasing_from, hi],
        evidence: Evidence::Monotone(rec),
        notes,
    }
}

const OSCILLATING_NOTE: &str =
    "oscillating density: the ratio has persistent oscillations and the condition cannot be considered";

/// Ratio `-ln f / ln x` (continuous), `-ln p_j / ln j` (symmetric pmf) or
/// `-ln(p_n / 2) / ln n` (half-line pmf) increases to infinity.
pub fn check_u_monotone(spec: &Distribution, cfg: &Config) -> Result<ConditionReport> {
    let id = match spec.support() {
        SupportKind::HamburgerSymmetric => ConditionId::UMonotoneH,
        SupportKind::Stieltjes => ConditionId::UMonotoneS,
        SupportKind::IntegerSymmetric => ConditionId::UMonotoneDiscreteH,
        SupportKind::NonnegativeInteger => ConditionId::UMonotoneDiscreteS,
    };
    let start = spec.threshold();
    if spec.flags().oscillating {
        let hi = start * GRID_RATIO.powf(GRID_SPAN);
        return Ok(ConditionReport::inconclusive(id, [start, hi], OSCILLATING_NOTE));
    }
    let rec = match spec {
        Distribution::Continuous(d) => {
            let lf = d.log_density_fn()?;
            monotone_scan(|x| Ok(-lf(x) / x.ln()), start, false, cfg)?
        }
        Distribution::Discrete(p) => {
            let half = if p.support() == SupportKind::NonnegativeInteger { LN_2 } else { 0.0 };
            monotone_scan(
                |x| {
                    let j = x as i64;
                    Ok(-(p.eval_log_pmf(j)? - half) / x.ln())
                },
                start,
                true,
                cfg,
            )?
        }
    };
    let mut notes = Vec::new();
    if id == ConditionId::UMonotoneDiscreteS {
        notes.push("ratio uses -ln(p_n/2)/ln n".to_string());
    }
    if id == ConditionId::UMonotoneS {
        notes.push(STIELTJES_NOTE.to_string());
    }
    Ok(monotone_report(id, rec, cfg, notes))
}

/// `(ln f)'(x)` from the evaluator or by central differences.
fn log_derivative_fn<'a>(d: &'a DensitySpec, cfg: &Config) -> Result<Option<Box<dyn Fn(f64) -> f64 + Sync + 'a>>> {
    if d.has_derivative() {
        return Ok(Some(Box::new(move |x| d.log_derivative(x).unwrap_or(f64::NAN))));
    }
    if !cfg.conditions.numeric_derivative {
        return Ok(None);
    }
    let lf = d.log_density_fn()?;
    Ok(Some(Box::new(move |x| {
        let h = 1e-6 * x;
        (lf(x + h) - lf(x - h)) / (2.0 * h)
    })))
}

/// Condition (L): `L(x) = -x (ln f)'(x)` increases to infinity. Applied to
/// the density as given, including half-line densities.
pub fn check_condition_l(d: &DensitySpec, cfg: &Config) -> Result<ConditionReport> {
    let id = ConditionId::CondL;
    let start = d.threshold();
    let window = [start, start * GRID_RATIO.powf(GRID_SPAN)];
    if d.flags().nonsmooth {
        return Ok(ConditionReport::inconclusive(id, window, "derivative unavailable: nonsmooth density"));
    }
    if d.flags().oscillating {
        return Ok(ConditionReport::inconclusive(id, window, OSCILLATING_NOTE));
    }
    let Some(dlf) = log_derivative_fn(d, cfg)? else {
        return Ok(ConditionReport::inconclusive(
            id,
            window,
            "derivative unavailable: no evaluator and numeric differentiation disabled",
        ));
    };
    let rec = monotone_scan(|x| Ok(-x * dlf(x)), start, false, cfg)?;
    let mut notes = Vec::new();
    if !d.has_derivative() {
        notes.push("derivative by central differences".to_string());
    }
    if d.support() == SupportKind::Stieltjes {
        notes.push("applied to the half-line density itself, not its symmetrization".to_string());
    }
    Ok(monotone_report(id, rec, cfg, notes))
}

/// Carleman's condition from the computed moment sequence.
pub fn check_carleman(spec: &Distribution, case: MomentCase, k_max: u32, cfg: &Config) -> Result<ConditionReport> {
    let id = match case {
        MomentCase::Hamburger => ConditionId::CarlemanH,
        MomentCase::Stieltjes => ConditionId::CarlemanS,
    };
    let v = moments::carleman_check(spec, case, k_max, &cfg.tailfit)?;
    let notes = vec![format!("terms for k = 1..{k_max}; sum fitted from k = {}", moments::CARLEMAN_FIT_FROM)];
    Ok(divergence_report(id, v, DivergenceClass::Divergent, notes))
}

/// Conditions evaluated for a support kind when no explicit list is given.
pub fn default_battery(support: SupportKind) -> Vec<ConditionId> {
    use ConditionId::*;
    match support {
        SupportKind::HamburgerSymmetric => vec![KstarH, UMonotoneH, CondL, ConverseKreinH, KreinH],
        SupportKind::Stieltjes => vec![KstarS, UMonotoneS, CondL, ConverseKreinS, KreinS],
        SupportKind::IntegerSymmetric => vec![PedersenDiscrete, KstarDiscreteH, UMonotoneDiscreteH],
        SupportKind::NonnegativeInteger => vec![KstarDiscreteS, UMonotoneDiscreteS],
    }
}

/// Evaluate one condition on a distribution of a matching support kind.
pub fn check(spec: &Distribution, id: ConditionId, k_max: u32, cfg: &Config) -> Result<ConditionReport> {
    if !id.applies_to(spec.support()) {
        return Err(Error::invalid(format!(
            "condition {id} does not apply to {:?} distributions",
            spec.support()
        )));
    }
    let density = || spec.as_density().expect("continuous support");
    let pmf = || spec.as_pmf().expect("discrete support");
    use ConditionId::*;
    match id {
        KstarH => check_kstar(density(), MomentCase::Hamburger, cfg),
        KstarS => check_kstar(density(), MomentCase::Stieltjes, cfg),
        UMonotoneH | UMonotoneS | UMonotoneDiscreteH | UMonotoneDiscreteS => check_u_monotone(spec, cfg),
        CondL => check_condition_l(density(), cfg),
        ConverseKreinH => check_krein(density(), MomentCase::Hamburger, KreinDirection::Infinite, cfg),
        ConverseKreinS => check_krein(density(), MomentCase::Stieltjes, KreinDirection::Infinite, cfg),
        KreinH => check_krein(density(), MomentCase::Hamburger, KreinDirection::Finite, cfg),
        KreinS => check_krein(density(), MomentCase::Stieltjes, KreinDirection::Finite, cfg),
        PedersenDiscrete => check_pedersen(pmf(), cfg),
        KstarDiscreteH | KstarDiscreteS => check_discrete_kstar(pmf(), cfg),
        CarlemanH => check_carleman(spec, MomentCase::Hamburger, k_max, cfg),
        CarlemanS => check_carleman(spec, MomentCase::Stieltjes, k_max, cfg),
    }
}

/// Run the given conditions concurrently, in the given order. A checker
/// error becomes an `Inconclusive` report carrying the message.
pub fn run_battery(spec: &Distribution, ids: &[ConditionId], k_max: u32, cfg: &Config) -> Result<Vec<ConditionReport>> {
    for id in ids {
        if !id.applies_to(spec.support()) {
            return Err(Error::invalid(format!(
                "condition {id} does not apply to {:?} distributions",
                spec.support()
            )));
        }
    }
    Ok(ids
        .par_iter()
        .map(|&id| {
            check(spec, id, k_max, cfg).unwrap_or_else(|e| {
                let t = spec.threshold();
                ConditionReport::inconclusive(id, [t, t], format!("check failed: {e}"))
            })
        })
        .collect())
}

/// Whether the ratio's grid maximum grows by at least the growth margin
/// when the grid end is pushed out by a factor `1.5^10`. Returns the growth.
pub fn lemma1_growth(spec: &Distribution, use_l: bool, cfg: &Config) -> Result<f64> {
    let t = spec.threshold();
    let ratio: Box<dyn Fn(f64) -> Result<f64> + Sync> = match (spec, use_l) {
        (Distribution::Continuous(d), true) => {
            let dlf = log_derivative_fn(d, cfg)?
                .ok_or_else(|| Error::invalid("L needs a derivative"))?;
            Box::new(move |x| Ok(-x * dlf(x)))
        }
        (Distribution::Discrete(_), true) => return Err(Error::invalid("L is defined for densities only")),
        (_, false) => Box::new(|x| spec.u_ratio(if spec.support().is_continuous() { x } else { x.round() })),
    };
    let max_to = |span: f64| -> Result<f64> {
        let n = cfg.conditions.grid_points;
        (0..n)
            .map(|i| ratio(t * GRID_RATIO.powf(span * i as f64 / (n - 1) as f64)))
            .try_fold(f64::NEG_INFINITY, |m, v| Ok(m.max(v?)))
    };
    Ok(max_to(GRID_SPAN + 10.0)? - max_to(GRID_SPAN)?)
}

/// Grid for polynomial-decay checks: the scan grid extended by a further
/// factor `1.5^40`, since a rate `x^{-M}` can set in late (lognormal: near
/// `e^{2M}`).
fn decay_grid(start: f64, n: usize) -> Vec<f64> {
    let n = 2 * n.max(2);
    let step = 2.0 * GRID_SPAN / (n - 1) as f64;
    (0..n).map(|i| start * GRID_RATIO.powf(step * i as f64)).collect()
}

/// Smallest grid point beyond which `f(x) < x^{-m}` at every later grid point.
pub fn lemma2_decay_point(spec: &Distribution, m: f64, cfg: &Config) -> Result<Option<f64>> {
    let t = spec.threshold();
    let grid: Vec<f64> = decay_grid(t, cfg.conditions.grid_points)
        .into_iter()
        .map(|x| if spec.support().is_continuous() { x } else { x.round() })
        .collect();
    let ok = grid
        .iter()
        .map(|&x| Ok(spec.log_mass(x)? < -m * x.ln()))
        .collect::<Result<Vec<bool>>>()?;
    let from = ok.iter().rposition(|b| !b).map_or(0, |i| i + 1);
    Ok(grid.get(from).copied().filter(|_| from < grid.len() - 1))
}

/// For a symmetric density below one beyond `max(threshold, 4)`: does a
/// divergent `K*` come with a divergent Krein integral? `None` when the
/// premise does not apply or either check is inconclusive.
pub fn lemma3_check(d: &DensitySpec, cfg: &Config) -> Result<Option<bool>> {
    if d.support() != SupportKind::HamburgerSymmetric {
        return Ok(None);
    }
    let d4 = d.clone().with_threshold(d.threshold().max(4.0))?;
    let lf = d4.log_density_fn()?;
    if geometric_grid(d4.threshold(), cfg.conditions.grid_points).iter().any(|&x| lf(x) >= 0.0) {
        return Ok(None);
    }
    let k = check_kstar(&d4, MomentCase::Hamburger, cfg)?;
    let c = check_krein(&d4, MomentCase::Hamburger, KreinDirection::Infinite, cfg)?;
    Ok(match (k.verdict, c.verdict) {
        (ConditionVerdict::Inconclusive, _) | (_, ConditionVerdict::Inconclusive) => None,
        (ConditionVerdict::Holds, v) => Some(v == ConditionVerdict::Holds),
        _ => Some(true),
    })
}
