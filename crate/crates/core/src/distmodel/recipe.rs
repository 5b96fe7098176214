use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{
    ceiling_u_variant, family_from_map, floor_discretize, perturb_bounded_sin,
    square_pushforward, symmetrize_pmf, symmetrize_sqrt, CeilMode, Distribution,
};
use crate::error::{Error, Result};

/// JSON description of a distribution: a catalog family, its parameters,
/// and transforms applied left to right.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecRecipe {
    pub family: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    #[serde(default)]
    pub transforms: Vec<TransformStep>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransformStep {
    pub op: String,
    #[serde(default)]
    pub args: BTreeMap<String, Value>,
}

impl TransformStep {
    pub fn new(op: &str) -> Self {
        TransformStep {
            op: op.to_string(),
            args: BTreeMap::new(),
        }
    }

    pub fn with_arg(mut self, key: &str, value: Value) -> Self {
        self.args.insert(key.to_string(), value);
        self
    }

    /// Transforms whose output is related to their input by a moment
    /// domination or a square map, so the input's verdict carries over.
    pub fn is_domination_source(&self) -> bool {
        matches!(
            self.op.as_str(),
            "perturb_bounded_sin" | "ceiling_u_variant" | "floor_discretize" | "square_pushforward"
        )
    }

    fn f64_arg(&self, key: &str) -> Result<f64> {
        self.args
            .get(key)
            .and_then(Value::as_f64)
            .ok_or_else(|| Error::spec(format!("transform {} needs numeric arg {key:?}", self.op)))
    }

    fn check_args(&self, allowed: &[&str]) -> Result<()> {
        for k in self.args.keys() {
            if !allowed.contains(&k.as_str()) {
                return Err(Error::spec(format!(
                    "transform {} has unknown arg {k:?}",
                    self.op
                )));
            }
        }
        Ok(())
    }

    pub fn apply(&self, input: &Distribution) -> Result<Distribution> {
        let density = || {
            input.as_density().ok_or_else(|| {
                Error::spec(format!("transform {} needs a continuous input", self.op))
            })
        };
        match self.op.as_str() {
            "symmetrize_sqrt" => {
                self.check_args(&[])?;
                Ok(symmetrize_sqrt(density()?)?.into())
            }
            "square_pushforward" => {
                self.check_args(&[])?;
                Ok(square_pushforward(density()?)?.into())
            }
            "perturb_bounded_sin" => {
                self.check_args(&["amplitude"])?;
                Ok(perturb_bounded_sin(density()?, self.f64_arg("amplitude")?)?.into())
            }
            "ceiling_u_variant" => {
                self.check_args(&["mode"])?;
                let mode: CeilMode = self
                    .args
                    .get("mode")
                    .cloned()
                    .ok_or_else(|| Error::spec("ceiling_u_variant needs arg \"mode\""))
                    .and_then(|v| {
                        serde_json::from_value(v).map_err(|e| {
                            Error::spec(format!(
                                "ceiling_u_variant mode must be \"ceil_argument\" or \"ceil_value\": {e}"
                            ))
                        })
                    })?;
                Ok(ceiling_u_variant(density()?, mode)?.into())
            }
            "floor_discretize" => {
                self.check_args(&[])?;
                Ok(floor_discretize(density()?)?.into())
            }
            "symmetrize_pmf" => {
                self.check_args(&[])?;
                let pmf = input.as_pmf().ok_or_else(|| {
                    Error::spec("transform symmetrize_pmf needs a discrete input")
                })?;
                Ok(symmetrize_pmf(pmf)?.into())
            }
            other => Err(Error::spec(format!("unknown transform op {other:?}"))),
        }
    }
}

impl SpecRecipe {
    pub fn new(family: &str, params: &[(&str, f64)]) -> Self {
        SpecRecipe {
            family: family.to_string(),
            params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            transforms: Vec::new(),
            threshold: None,
        }
    }

    pub fn then(mut self, step: TransformStep) -> Self {
        self.transforms.push(step);
        self
    }

    /// Parse from JSON text; errors carry serde's line/column anchor.
    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::spec(e.to_string()))
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(self).expect("recipe serializes")
    }

    /// The distribution after every transform.
    pub fn build(&self) -> Result<Distribution> {
        let mut chain = self.build_chain()?;
        Ok(chain.pop().expect("chain has the base entry"))
    }

    /// Base family followed by the output of each transform in order.
    pub fn build_chain(&self) -> Result<Vec<Distribution>> {
        let mut base = family_from_map(&self.family, &self.params)?;
        if let Some(t) = self.threshold {
            base = match base {
                Distribution::Continuous(d) => d.with_threshold(t)?.into(),
                Distribution::Discrete(p) => {
                    if t.fract() != 0.0 {
                        return Err(Error::spec(format!(
                            "pmf threshold must be an integer, got {t}"
                        )));
                    }
                    p.with_threshold(t as i64)?.into()
                }
            };
        }
        let mut chain = vec![base];
        for step in &self.transforms {
            let next = step.apply(chain.last().expect("nonempty"))?;
            chain.push(next);
        }
        Ok(chain)
    }

    /// Recipe without its last transform.
    pub fn parent(&self) -> Option<SpecRecipe> {
        if self.transforms.is_empty() {
            return None;
        }
        let mut p = self.clone();
        p.transforms.pop();
        Some(p)
    }

    pub fn last_transform(&self) -> Option<&TransformStep> {
        self.transforms.last()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_full_recipe() {
        let text = r#"{"family": "example2", "params": {},
            "transforms": [{"op": "ceiling_u_variant", "args": {"mode": "ceil_value"}}],
            "threshold": 6}"#;
        let r = SpecRecipe::from_json_str(text).unwrap();
        assert_eq!(r.transforms.len(), 1);
        let d = r.build().unwrap();
        assert!(d.flags().nonsmooth);
        assert_eq!(d.threshold(), 6.0);
        assert_eq!(d.provenance().len(), 1);
    }

    #[test]
    fn missing_family_reports_position() {
        let err = SpecRecipe::from_json_str("{\n  \"params\": {}\n}").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("family") && msg.contains("line"), "{msg}");
    }

    #[test]
    fn unknown_family_and_op_are_rejected() {
        assert!(SpecRecipe::new("cauchy", &[]).build().is_err());
        let r = SpecRecipe::new("gaussian", &[]).then(TransformStep::new("rotate"));
        assert!(r.build().is_err());
        let r = SpecRecipe::new("gaussian", &[]).then(TransformStep::new("floor_discretize"));
        assert!(r.build().is_err(), "floor needs a half-line density");
    }

    #[test]
    fn json_round_trip() {
        let r = SpecRecipe::new("example2", &[])
            .then(TransformStep::new("perturb_bounded_sin").with_arg("amplitude", 0.5.into()));
        let back = SpecRecipe::from_json_str(&r.to_json_string()).unwrap();
        assert_eq!(r, back);
        assert_eq!(back.parent().unwrap().transforms.len(), 0);
    }
}
