use momdet::conditions::{self, ConditionId, ConditionVerdict};
use momdet::report;
use momdet::verdict::DeterminacyVerdict;
use momdet::{analyze, catalog, catalog_entry, Conclusion, Config, RuleId, SpecRecipe, TransformStep};

#[test]
fn verdict_json_round_trips_field_for_field() {
    let cfg = Config::default();
    for name in ["gaussian", "lognormal", "example1_a1", "example2_perturbed", "sym_pmf_sqrt"] {
        let a = analyze(&catalog_entry(name).unwrap().recipe, &cfg).unwrap();
        let text = report::verdict_json(&a.verdict).unwrap();
        let back: DeterminacyVerdict = serde_json::from_str(&text).unwrap();
        assert_eq!(back, a.verdict, "{name}");
    }
}

#[test]
fn analysis_output_is_deterministic() {
    let cfg = Config::default();
    let recipe = catalog_entry("example2_ceil_value").unwrap().recipe;
    let first = report::analysis_json(&analyze(&recipe, &cfg).unwrap()).unwrap();
    let second = report::analysis_json(&analyze(&recipe, &cfg).unwrap()).unwrap();
    assert_eq!(first, second);
    let a = analyze(&recipe, &cfg).unwrap();
    assert_eq!(
        report::conditions_csv(&a.reports).unwrap(),
        report::conditions_csv(&a.reports).unwrap()
    );
}

#[test]
fn squares_of_thm1_determinate_specs_are_never_indeterminate() {
    let cfg = Config::default();
    for e in catalog() {
        let a = analyze(&e.recipe, &cfg).unwrap();
        if !a.verdict.fired(RuleId::Thm1) && !a.verdict.fired(RuleId::Thm1Star) {
            continue;
        }
        let squared = e.recipe.clone().then(TransformStep::new("square_pushforward"));
        let s = analyze(&squared, &cfg).unwrap();
        assert_ne!(s.verdict.conclusion, Conclusion::Indeterminate, "{}", e.name);
        assert!(s.verdict.fired(RuleId::SquareCorollary), "{}", e.name);
    }
}

#[test]
fn ratio_growth_exceeds_margin_on_monotone_specs() {
    let cfg = Config::default();
    for e in catalog() {
        let u = conditions::check_u_monotone(&e.spec, &cfg).unwrap();
        if u.verdict != ConditionVerdict::Holds {
            continue;
        }
        let growth = conditions::lemma1_growth(&e.spec, false, &cfg).unwrap();
        if e.name == "lognormal" {
            // u(x) ~ ln x / 2: grows without bound, but only by 10 ln 1.5 / 2
            // over the extension, below the margin of the proxy
            assert!(growth > 0.0 && growth < cfg.conditions.growth_margin, "{growth}");
            continue;
        }
        assert!(growth >= cfg.conditions.growth_margin, "{}: {growth}", e.name);
    }
}

#[test]
fn example1_condition_listing() {
    let cfg = Config::default();
    let spec = catalog_entry("example1_a1").unwrap().spec;
    let reports = conditions::run_battery(&spec, &[ConditionId::KstarH, ConditionId::KreinH], 30, &cfg).unwrap();
    assert_eq!(reports[0].verdict, ConditionVerdict::FailsToHold);
    assert_eq!(reports[1].verdict, ConditionVerdict::FailsToHold);
    assert!(reports[1].notes.iter().any(|n| n.contains("ConverseKreinH")));
}

#[test]
fn recipe_json_drives_analysis() {
    let text = r#"{"family": "lognormal", "params": {"mu": 0.0, "sigma": 1.0}}"#;
    let a = analyze(&SpecRecipe::from_json_str(text).unwrap(), &Config::default()).unwrap();
    assert_eq!(a.verdict.conclusion, Conclusion::Indeterminate);
    assert!(a.verdict.fired(RuleId::KreinIndetS));
}

#[test]
fn tighter_fit_tolerances_do_not_flip_decided_verdicts() {
    let mut strict = Config::default();
    strict.set("tailfit.tau_q", "0.3").unwrap();
    strict.set("tailfit.tau_p", "0.1").unwrap();
    let base = Config::default();
    for e in catalog() {
        let a = analyze(&e.recipe, &base).unwrap().verdict.conclusion;
        let b = analyze(&e.recipe, &strict).unwrap().verdict.conclusion;
        if a != Conclusion::Unknown && b != Conclusion::Unknown {
            assert_eq!(a, b, "{}", e.name);
        }
    }
}
