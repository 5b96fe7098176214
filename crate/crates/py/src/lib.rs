//! Python bindings: spec recipes, the full analysis, moment tables,
//! maximizer traces and the regression catalog.

use std::collections::BTreeMap;

use ::momdet::conditions::parse_condition_list;
use ::momdet::pipeline::{analyze_with, resolve_case, AnalysisOptions, CaseChoice};
use ::momdet::{catalog, catalog_entry, maximizer, moments, report, Config, SpecRecipe};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn config(settings: Option<BTreeMap<String, String>>) -> PyResult<Config> {
    let mut cfg = Config::default();
    for (k, v) in settings.unwrap_or_default() {
        cfg.set(&k, &v).map_err(value_err)?;
    }
    Ok(cfg)
}

fn case(s: &str) -> PyResult<CaseChoice> {
    s.parse().map_err(value_err)
}

/// A distribution recipe: family, parameters and transforms.
#[pyclass(name = "Spec", module = "momdet", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PySpec {
    recipe: SpecRecipe,
}

#[pymethods]
impl PySpec {
    #[new]
    #[pyo3(signature = (family, params = None))]
    fn new(family: &str, params: Option<BTreeMap<String, f64>>) -> PyResult<Self> {
        let mut recipe = SpecRecipe::new(family, &[]);
        recipe.params = params.unwrap_or_default();
        recipe.build().map_err(value_err)?;
        Ok(PySpec { recipe })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let recipe = SpecRecipe::from_json_str(text).map_err(value_err)?;
        recipe.build().map_err(value_err)?;
        Ok(PySpec { recipe })
    }

    #[staticmethod]
    fn from_catalog(name: &str) -> PyResult<Self> {
        catalog_entry(name)
            .map(|e| PySpec { recipe: e.recipe })
            .ok_or_else(|| PyValueError::new_err(format!("no catalog entry {name:?}")))
    }

    /// New spec with one more transform, e.g. `then("square_pushforward")`.
    #[pyo3(signature = (op, args_json = None))]
    fn then(&self, op: &str, args_json: Option<&str>) -> PyResult<Self> {
        let mut step = ::momdet::TransformStep::new(op);
        if let Some(text) = args_json {
            let map: BTreeMap<String, serde_json::Value> = serde_json::from_str(text).map_err(value_err)?;
            for (k, v) in map {
                step = step.with_arg(&k, v);
            }
        }
        let recipe = self.recipe.clone().then(step);
        recipe.build().map_err(value_err)?;
        Ok(PySpec { recipe })
    }

    #[getter]
    fn name(&self) -> PyResult<String> {
        Ok(self.recipe.build().map_err(value_err)?.name().to_string())
    }

    #[getter]
    fn support(&self) -> PyResult<String> {
        Ok(format!("{:?}", self.recipe.build().map_err(value_err)?.support()))
    }

    fn to_json(&self) -> String {
        self.recipe.to_json_string()
    }

    fn __repr__(&self) -> String {
        format!("Spec({})", self.recipe.to_json_string())
    }
}

/// Condition reports, dominations and the verdict for one spec.
#[pyclass(name = "Analysis", module = "momdet", frozen)]
struct PyAnalysis {
    inner: ::momdet::Analysis,
}

#[pymethods]
impl PyAnalysis {
    #[getter]
    fn conclusion(&self) -> String {
        self.inner.verdict.conclusion.to_string()
    }

    #[getter]
    fn fired_rules(&self) -> Vec<String> {
        self.inner.verdict.rule_ids().iter().map(|r| r.to_string()).collect()
    }

    #[getter]
    fn corollaries(&self) -> Vec<String> {
        self.inner.verdict.corollaries.clone()
    }

    /// `(condition, verdict, notes)` per report.
    #[getter]
    fn conditions(&self) -> Vec<(String, String, Vec<String>)> {
        self.inner
            .reports
            .iter()
            .map(|r| (r.id.name().to_string(), r.verdict.to_string(), r.notes.clone()))
            .collect()
    }

    fn to_json(&self) -> PyResult<String> {
        report::analysis_json(&self.inner).map_err(value_err)
    }

    fn verdict_json(&self) -> PyResult<String> {
        report::verdict_json(&self.inner.verdict).map_err(value_err)
    }

    fn conditions_csv(&self) -> PyResult<String> {
        report::conditions_csv(&self.inner.reports).map_err(value_err)
    }

    fn __repr__(&self) -> String {
        format!("Analysis({}, {:?})", self.conclusion(), self.fired_rules())
    }
}

#[pyfunction]
#[pyo3(signature = (spec, case = "auto", only = None, kmax = None, settings = None))]
fn analyze(
    py: Python<'_>,
    spec: &PySpec,
    case: &str,
    only: Option<&str>,
    kmax: Option<u32>,
    settings: Option<BTreeMap<String, String>>,
) -> PyResult<PyAnalysis> {
    let cfg = config(settings)?;
    let opts = AnalysisOptions {
        case: self::case(case)?,
        only: only.map(parse_condition_list).transpose().map_err(value_err)?,
        k_max: kmax,
    };
    let recipe = spec.recipe.clone();
    let inner = py
        .detach(move || analyze_with(&recipe, &opts, &cfg))
        .map_err(value_err)?;
    Ok(PyAnalysis { inner })
}

/// `(k, ln m_k, err)` for `k = 1..=kmax`.
#[pyfunction]
#[pyo3(signature = (spec, kmax = 12, case = "auto"))]
fn moment_table(spec: &PySpec, kmax: u32, case: &str) -> PyResult<Vec<(u32, f64, f64)>> {
    let d = resolve_case(spec.recipe.build().map_err(value_err)?, self::case(case)?).map_err(value_err)?;
    let t = moments::listing_table(&d, kmax).map_err(value_err)?;
    Ok(t.entries.iter().map(|e| (e.k, e.ln_mk, e.err)).collect())
}

/// `(k, x_k)` maximizer points.
#[pyfunction]
#[pyo3(signature = (spec, kmax = 20))]
fn trace(spec: &PySpec, kmax: u32) -> PyResult<Vec<(u32, f64)>> {
    let d = spec.recipe.build().map_err(value_err)?;
    Ok(maximizer::build_trace(&d, kmax).map_err(value_err)?.points)
}

#[pyfunction]
fn catalog_names() -> Vec<String> {
    catalog().into_iter().map(|e| e.name).collect()
}

/// `(name, conclusion, matches_expected)` for every catalog entry.
#[pyfunction]
fn catalog_run(py: Python<'_>) -> PyResult<Vec<(String, String, bool)>> {
    py.detach(|| {
        let cfg = Config::default();
        catalog()
            .into_iter()
            .map(|e| {
                let a = analyze_with(&e.recipe, &AnalysisOptions::default(), &cfg)?;
                let ok = e
                    .expected
                    .is_none_or(|x| a.verdict.conclusion == x.conclusion && a.verdict.fired(x.rule));
                Ok((e.name, a.verdict.conclusion.to_string(), ok))
            })
            .collect::<::momdet::Result<Vec<_>>>()
    })
    .map_err(value_err)
}

#[pymodule]
#[pyo3(name = "momdet")]
fn py_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySpec>()?;
    m.add_class::<PyAnalysis>()?;
    m.add_function(wrap_pyfunction!(analyze, m)?)?;
    m.add_function(wrap_pyfunction!(moment_table, m)?)?;
    m.add_function(wrap_pyfunction!(trace, m)?)?;
    m.add_function(wrap_pyfunction!(catalog_names, m)?)?;
    m.add_function(wrap_pyfunction!(catalog_run, m)?)?;
    Ok(())
}
