//! End-to-end analysis of a distribution recipe.

use serde::Serialize;

use crate::conditions::{self, ConditionId, ConditionReport};
use crate::config::Config;
use crate::distmodel::{
    square_pushforward, symmetrize_pmf, symmetrize_sqrt, Distribution, MomentCase, SpecRecipe,
    SupportKind,
};
use crate::error::{Error, Result};
use crate::moments;
use crate::verdict::{self, DeterminacyVerdict, DominationKind, DominationRelation, RuleId};

/// Which moment problem to analyze.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CaseChoice {
    /// Follow the support kind of the spec.
    #[default]
    Auto,
    Hamburger,
    Stieltjes,
}

impl std::str::FromStr for CaseChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(CaseChoice::Auto),
            "hamburger" => Ok(CaseChoice::Hamburger),
            "stieltjes" => Ok(CaseChoice::Stieltjes),
            _ => Err(Error::invalid(format!("case must be auto, hamburger or stieltjes, got {s:?}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct AnalysisOptions {
    pub case: CaseChoice,
    /// Restrict the battery to these conditions.
    pub only: Option<Vec<ConditionId>>,
    pub k_max: Option<u32>,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            case: CaseChoice::Auto,
            only: None,
            k_max: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Analysis {
    pub spec: String,
    pub support: SupportKind,
    pub case: MomentCase,
    pub provenance: Vec<String>,
    pub reports: Vec<ConditionReport>,
    pub dominations: Vec<DominationRelation>,
    pub verdict: DeterminacyVerdict,
}

/// Distribution whose own support matches the requested case: a half-line
/// spec is symmetrized for the Hamburger case, a symmetric density is
/// pushed through `x ↦ x²` for the Stieltjes case.
pub fn resolve_case(spec: Distribution, case: CaseChoice) -> Result<Distribution> {
    let want = match case {
        CaseChoice::Auto => return Ok(spec),
        CaseChoice::Hamburger => MomentCase::Hamburger,
        CaseChoice::Stieltjes => MomentCase::Stieltjes,
    };
    if spec.support().case() == want {
        return Ok(spec);
    }
    Ok(match (&spec, want) {
        (Distribution::Continuous(d), MomentCase::Hamburger) => symmetrize_sqrt(d)?.into(),
        (Distribution::Discrete(p), MomentCase::Hamburger) => symmetrize_pmf(p)?.into(),
        (Distribution::Continuous(d), MomentCase::Stieltjes) => square_pushforward(d)?.into(),
        (Distribution::Discrete(_), MomentCase::Stieltjes) => {
            return Err(Error::invalid(
                "a symmetric pmf has no half-line form here; use case auto or hamburger",
            ))
        }
    })
}

/// Full battery and verdict with default options.
pub fn analyze(recipe: &SpecRecipe, cfg: &Config) -> Result<Analysis> {
    analyze_with(recipe, &AnalysisOptions::default(), cfg)
}

pub fn analyze_with(recipe: &SpecRecipe, opts: &AnalysisOptions, cfg: &Config) -> Result<Analysis> {
    let built = recipe.build()?;
    let overridden = opts.case != CaseChoice::Auto && built.support().case() != resolved_case(opts.case, &built);
    let spec = resolve_case(built, opts.case)?;
    let k_max = opts.k_max.unwrap_or_else(|| moments::default_kmax(&spec));
    let ids = opts.only.clone().unwrap_or_else(|| conditions::default_battery(spec.support()));
    let reports = conditions::run_battery(&spec, &ids, k_max, cfg)?;

    let dominations = if overridden {
        Vec::new()
    } else {
        inherited_dominations(recipe, &spec, cfg)?
    };
    let verdict = verdict::decide(&spec, &reports, &dominations);
    Ok(Analysis {
        spec: spec.name().to_string(),
        support: spec.support(),
        case: spec.support().case(),
        provenance: spec.provenance().to_vec(),
        reports,
        dominations,
        verdict,
    })
}

fn resolved_case(case: CaseChoice, spec: &Distribution) -> MomentCase {
    match case {
        CaseChoice::Auto => spec.support().case(),
        CaseChoice::Hamburger => MomentCase::Hamburger,
        CaseChoice::Stieltjes => MomentCase::Stieltjes,
    }
}

/// Relations to the recipe's parent when the last transform is one whose
/// output inherits determinacy from its input.
fn inherited_dominations(
    recipe: &SpecRecipe,
    spec: &Distribution,
    cfg: &Config,
) -> Result<Vec<DominationRelation>> {
    let (Some(step), Some(parent)) = (recipe.last_transform(), recipe.parent()) else {
        return Ok(Vec::new());
    };
    if !step.is_domination_source() {
        return Ok(Vec::new());
    }
    let base = analyze(&parent, cfg)?;
    if !base.verdict.carleman_determinate() {
        return Ok(Vec::new());
    }
    let base_rules: Vec<RuleId> = base
        .verdict
        .rule_ids()
        .into_iter()
        .filter(|r| r.yields_carleman())
        .collect();
    if step.op == "square_pushforward" {
        return Ok(vec![DominationRelation {
            kind: DominationKind::Square,
            base: base.spec,
            base_rules,
            ln_constant: None,
            grid_verified: false,
            detail: "moments of X^2 are the even moments of X; Carleman's sum is unchanged".into(),
        }]);
    }
    let parent_spec = parent.build()?;
    Ok(verdict::check_domination(spec, &parent_spec, &base_rules, cfg)?
        .into_iter()
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distmodel::catalog_entry;
    use crate::verdict::Conclusion;

    #[test]
    fn gaussian_is_thm1_determinate() {
        let a = analyze(&catalog_entry("gaussian").unwrap().recipe, &Config::default()).unwrap();
        assert_eq!(a.verdict.conclusion, Conclusion::Determinate);
        assert!(a.verdict.fired(RuleId::Thm1));
        assert_eq!(a.reports.len(), 5);
    }

    #[test]
    fn only_restricts_the_battery() {
        let opts = AnalysisOptions {
            only: Some(vec![ConditionId::KstarH]),
            ..Default::default()
        };
        let a = analyze_with(&catalog_entry("gaussian").unwrap().recipe, &opts, &Config::default()).unwrap();
        assert_eq!(a.reports.len(), 1);
        assert_eq!(a.verdict.conclusion, Conclusion::Unknown);
    }

    #[test]
    fn case_override_symmetrizes() {
        let opts = AnalysisOptions {
            case: CaseChoice::Hamburger,
            ..Default::default()
        };
        let a = analyze_with(&catalog_entry("exp1").unwrap().recipe, &opts, &Config::default()).unwrap();
        assert_eq!(a.support, SupportKind::HamburgerSymmetric);
        assert_eq!(a.verdict.conclusion, Conclusion::Determinate);
        assert!("sideways".parse::<CaseChoice>().is_err());
    }
}
