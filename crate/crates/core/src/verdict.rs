//! Combining condition reports into a determinacy verdict.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::conditions::{ConditionId, ConditionReport, ConditionVerdict};
use crate::config::Config;
use crate::distmodel::{Distribution, MomentCase, SupportKind};
use crate::error::Result;
use crate::moments;

const LEMMA4_TOL: f64 = 1e-9;
const DOMINATION_ORDERS: u32 = 30;
/// Largest accepted growth per order of the log moment ratio over the
/// upper half of the probed orders.
const MOMENT_RATIO_SLOPE: f64 = 0.01;
const GRID_SPAN: f64 = 40.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Conclusion {
    Determinate,
    Indeterminate,
    Unknown,
}

impl fmt::Display for Conclusion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Conclusion::Determinate => "Determinate",
            Conclusion::Indeterminate => "Indeterminate",
            Conclusion::Unknown => "Unknown",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RuleId {
    Thm1,
    Thm1Star,
    Thm2,
    Thm2Star,
    Thm3,
    Thm4,
    KreinIndetH,
    KreinIndetS,
    PedersenIndet,
    LinDet,
    Lemma4Domination,
    MomentDomination,
    SquareCorollary,
}

impl RuleId {
    pub fn conclusion(self) -> Conclusion {
        match self {
            RuleId::KreinIndetH | RuleId::KreinIndetS | RuleId::PedersenIndet => {
                Conclusion::Indeterminate
            }
            _ => Conclusion::Determinate,
        }
    }

    /// Rules whose conclusion comes with Carleman's condition.
    pub fn yields_carleman(self) -> bool {
        !matches!(
            self,
            RuleId::KreinIndetH | RuleId::KreinIndetS | RuleId::PedersenIndet | RuleId::LinDet
        )
    }
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Premise {
    pub name: String,
    pub verdict: ConditionVerdict,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiredRule {
    pub rule: RuleId,
    pub premises: Vec<Premise>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Conflict {
    pub determinate: RuleId,
    pub indeterminate: RuleId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeterminacyVerdict {
    pub conclusion: Conclusion,
    pub fired_rules: Vec<FiredRule>,
    pub corollaries: Vec<String>,
    pub conflicts: Vec<Conflict>,
}

impl DeterminacyVerdict {
    pub fn fired(&self, rule: RuleId) -> bool {
        self.fired_rules.iter().any(|f| f.rule == rule)
    }

    pub fn rule_ids(&self) -> Vec<RuleId> {
        self.fired_rules.iter().map(|f| f.rule).collect()
    }

    /// Determinate through a rule that also gives Carleman's condition.
    pub fn carleman_determinate(&self) -> bool {
        self.conclusion == Conclusion::Determinate
            && self.fired_rules.iter().any(|f| f.rule.yields_carleman())
    }

    /// The contradiction behind a nonempty conflict list.
    pub fn contradiction(&self) -> Option<ContradictionError> {
        if self.conflicts.is_empty() {
            return None;
        }
        let (det, indet) = self
            .fired_rules
            .iter()
            .cloned()
            .partition(|f| f.rule.conclusion() == Conclusion::Determinate);
        Some(ContradictionError {
            determinate: det,
            indeterminate: indet,
        })
    }
}

/// Rules concluding determinacy and indeterminacy fired together.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error, Serialize, Deserialize)]
#[error("contradictory verdict: {} vs {}", rule_list(.determinate), rule_list(.indeterminate))]
pub struct ContradictionError {
    pub determinate: Vec<FiredRule>,
    pub indeterminate: Vec<FiredRule>,
}

fn rule_list(rules: &[FiredRule]) -> String {
    let names: Vec<String> = rules
        .iter()
        .map(|f| {
            let ps: Vec<String> = f.premises.iter().map(|p| p.name.clone()).collect();
            format!("{}[{}]", f.rule, ps.join(", "))
        })
        .collect();
    names.join(" + ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DominationKind {
    /// Exponent of the candidate dominates the base exponent on a grid.
    Lemma4,
    /// Candidate moments are at most a constant times the base moments.
    Moment,
    /// The candidate is the square of a determinate symmetric variable.
    Square,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominationRelation {
    pub kind: DominationKind,
    pub base: String,
    /// Rules that made the base determinate.
    pub base_rules: Vec<RuleId>,
    /// `ln C` of the moment bound, for [`DominationKind::Moment`].
    pub ln_constant: Option<f64>,
    pub grid_verified: bool,
    pub detail: String,
}

impl DominationRelation {
    fn rule(&self) -> RuleId {
        match self.kind {
            DominationKind::Lemma4 => RuleId::Lemma4Domination,
            DominationKind::Moment => RuleId::MomentDomination,
            DominationKind::Square => RuleId::SquareCorollary,
        }
    }
}

/// Density positive at probe points below the threshold, so the theorem
/// applies as stated rather than only in its relaxed form.
fn positive_below_threshold(spec: &Distribution) -> bool {
    match spec.as_density() {
        Some(d) => (0..32)
            .map(|i| d.threshold() * (i as f64 + 0.5) / 32.0)
            .all(|x| d.raw_log_density(x) > f64::NEG_INFINITY),
        None => true,
    }
}

/// Fire every rule whose premises all hold.
pub fn decide(
    spec: &Distribution,
    battery: &[ConditionReport],
    dominations: &[DominationRelation],
) -> DeterminacyVerdict {
    use ConditionId::*;
    let verdict_of = |id: ConditionId| battery.iter().find(|r| r.id == id).map(|r| r.verdict);
    let mut fired = Vec::new();
    let mut try_rule = |rule: RuleId, ids: &[ConditionId]| {
        let premises: Option<Vec<Premise>> = ids
            .iter()
            .map(|&id| {
                verdict_of(id).map(|v| Premise {
                    name: id.name().to_string(),
                    verdict: v,
                })
            })
            .collect();
        if let Some(premises) = premises {
            if premises.iter().all(|p| p.verdict == ConditionVerdict::Holds) {
                fired.push(FiredRule { rule, premises });
            }
        }
    };

    let smooth = !spec.flags().nonsmooth;
    let full = positive_below_threshold(spec);
    match spec.support() {
        SupportKind::HamburgerSymmetric => {
            if smooth {
                try_rule(if full { RuleId::Thm1 } else { RuleId::Thm1Star }, &[KstarH, UMonotoneH]);
            }
            try_rule(RuleId::KreinIndetH, &[KreinH]);
            try_rule(RuleId::LinDet, &[ConverseKreinH, CondL]);
        }
        SupportKind::Stieltjes => {
            if smooth {
                try_rule(if full { RuleId::Thm2 } else { RuleId::Thm2Star }, &[KstarS, UMonotoneS]);
            }
            try_rule(RuleId::KreinIndetS, &[KreinS]);
            try_rule(RuleId::LinDet, &[ConverseKreinS, CondL]);
        }
        SupportKind::IntegerSymmetric => {
            try_rule(RuleId::Thm3, &[KstarDiscreteH, UMonotoneDiscreteH]);
            try_rule(RuleId::PedersenIndet, &[PedersenDiscrete]);
        }
        SupportKind::NonnegativeInteger => {
            try_rule(RuleId::Thm4, &[KstarDiscreteS, UMonotoneDiscreteS]);
        }
    }
    for d in dominations {
        let label = match d.kind {
            DominationKind::Lemma4 if d.grid_verified => format!("exponent dominates that of {} (grid-verified)", d.base),
            DominationKind::Lemma4 => format!("exponent dominates that of {}", d.base),
            DominationKind::Moment => format!(
                "moments bounded by C times those of {} (ln C = {:.6})",
                d.base,
                d.ln_constant.unwrap_or(f64::NAN)
            ),
            DominationKind::Square => format!("square of {}", d.base),
        };
        let base_rules: Vec<String> = d.base_rules.iter().map(|r| r.to_string()).collect();
        fired.push(FiredRule {
            rule: d.rule(),
            premises: vec![
                Premise {
                    name: label,
                    verdict: ConditionVerdict::Holds,
                },
                Premise {
                    name: format!("{} determinate via {}", d.base, base_rules.join(", ")),
                    verdict: ConditionVerdict::Holds,
                },
            ],
        });
    }

    let mut corollaries = Vec::new();
    let rules: Vec<RuleId> = fired.iter().map(|f: &FiredRule| f.rule).collect();
    if rules.iter().any(|r| matches!(r, RuleId::Thm1 | RuleId::Thm1Star | RuleId::Thm3)) {
        corollaries.push("X^2 is M-determinate on R+".to_string());
    }
    if rules.contains(&RuleId::Thm4) {
        corollaries.push("Y^2 is M-determinate on R+".to_string());
    }

    let det: Vec<RuleId> = rules.iter().copied().filter(|r| r.conclusion() == Conclusion::Determinate).collect();
    let indet: Vec<RuleId> = rules.iter().copied().filter(|r| r.conclusion() == Conclusion::Indeterminate).collect();
    let conflicts: Vec<Conflict> = det
        .iter()
        .flat_map(|&d| indet.iter().map(move |&i| Conflict { determinate: d, indeterminate: i }))
        .collect();
    let conclusion = match (det.is_empty(), indet.is_empty()) {
        (false, true) => Conclusion::Determinate,
        (true, false) => Conclusion::Indeterminate,
        _ => Conclusion::Unknown,
    };
    DeterminacyVerdict {
        conclusion,
        fired_rules: fired,
        corollaries,
        conflicts,
    }
}

/// Relation carrying a Carleman-determinate base over to the candidate:
/// a grid-verified exponent comparison (same continuous support), else a
/// moment bound with a fitted constant, else none.
pub fn check_domination(
    candidate: &Distribution,
    base: &Distribution,
    base_rules: &[RuleId],
    cfg: &Config,
) -> Result<Option<DominationRelation>> {
    if candidate.support().case() != base.support().case() {
        return Ok(None);
    }
    if let (Some(c), Some(b)) = (candidate.as_density(), base.as_density()) {
        if c.support() == b.support() {
            let a = c.threshold().max(b.threshold());
            let n = cfg.conditions.domination_grid.max(2);
            let mut holds = true;
            for i in 0..n {
                let x = a * 1.5_f64.powf(GRID_SPAN * i as f64 / (n - 1) as f64);
                let v = c.raw_u_ratio(x)?;
                let u = b.u_ratio(x)?;
                if !(v >= u - LEMMA4_TOL * (1.0 + u.abs())) {
                    holds = false;
                    break;
                }
            }
            if holds {
                return Ok(Some(DominationRelation {
                    kind: DominationKind::Lemma4,
                    base: base.name().to_string(),
                    base_rules: base_rules.to_vec(),
                    ln_constant: None,
                    grid_verified: true,
                    detail: format!("v(x) >= u(x) at {n} geometric grid points from {a}"),
                }));
            }
        }
    }
    let case = base.support().case();
    let orders: Vec<u32> = (1..=DOMINATION_ORDERS)
        .map(|n| if case == MomentCase::Hamburger { 2 * n } else { n })
        .collect();
    let mc = moments::moment_table(candidate, case, &orders)?;
    let mb = moments::moment_table(base, case, &orders)?;
    let diffs: Vec<f64> = mc
        .entries
        .iter()
        .zip(&mb.entries)
        .map(|(c, b)| c.ln_mk - b.ln_mk)
        .collect();
    if diffs.iter().any(|d| !d.is_finite()) {
        return Ok(None);
    }
    let half = diffs.len() / 2;
    let xs: Vec<f64> = (half..diffs.len()).map(|i| i as f64).collect();
    let slope = least_squares_slope(&xs, &diffs[half..]);
    if slope > MOMENT_RATIO_SLOPE {
        return Ok(None);
    }
    let ln_c = diffs.iter().copied().fold(f64::NEG_INFINITY, f64::max).max(0.0);
    Ok(Some(DominationRelation {
        kind: DominationKind::Moment,
        base: base.name().to_string(),
        base_rules: base_rules.to_vec(),
        ln_constant: Some(ln_c),
        grid_verified: true,
        detail: format!(
            "ln m_n(candidate) - ln m_n(base) <= {ln_c:.6} for n in {:?}, trend {slope:.2e} per order",
            [orders[0], orders[orders.len() - 1]]
        ),
    }))
}

fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
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
