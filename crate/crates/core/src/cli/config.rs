//! Run configuration, read from JSON and validated before any computation.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bubble::{Configuration, Mass};
use crate::domain::{DomainModel, DomainSpec};
use crate::kmodel::KModel;
use crate::numerics::QuadratureSpec;
use crate::pseudoflow::PseudoflowParams;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub n: usize,
    pub domain: DomainSpec,
    pub k: KModel,
    #[serde(default)]
    pub analysis: AnalysisBlock,
    #[serde(default)]
    pub flow: Option<FlowBlock>,
    #[serde(default)]
    pub verify: VerifyBlock,
    #[serde(default)]
    pub quadrature: QuadratureSpec,
    #[serde(default)]
    pub output: OutputBlock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct AnalysisBlock {
    /// Boundary samples for the `∂K/∂ν ≠ 0` check.
    pub boundary_samples: usize,
    /// Radii per axis when probing each record's normal form.
    pub flatness_samples: usize,
}

impl Default for AnalysisBlock {
    fn default() -> Self {
        Self { boundary_samples: 512, flatness_samples: 8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct StartMass {
    pub a: Vec<f64>,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct FlowStart {
    #[serde(default)]
    pub label: Option<String>,
    pub masses: Vec<StartMass>,
}

impl FlowStart {
    /// Weights start at 1; the flow replaces them by the normalized ones.
    pub fn configuration(&self) -> Configuration {
        Configuration { masses: self.masses.iter().map(|m| Mass { alpha: 1.0, a: m.a.clone(), lambda: m.lambda }).collect() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct FlowBlock {
    #[serde(default)]
    pub params: PseudoflowParams,
    pub starts: Vec<FlowStart>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct VerifyBlock {
    /// Dimensions whose expansion and decrease states are run.
    pub dimensions: Vec<usize>,
    pub decrease: bool,
    pub expansion: bool,
}

impl Default for VerifyBlock {
    fn default() -> Self {
        Self { dimensions: vec![5], decrease: true, expansion: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct OutputBlock {
    pub dir: PathBuf,
}

impl Default for OutputBlock {
    fn default() -> Self {
        Self { dir: PathBuf::from("out") }
    }
}

/// Parses and validates; the message carries `path:line:column` for
/// syntax and schema errors.
pub fn load(path: &Path) -> Result<RunConfig, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let config: RunConfig =
        serde_json::from_str(&text).map_err(|e| format!("{}:{}:{}: {e}", path.display(), e.line(), e.column()))?;
    config.validate().map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(config)
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(format!("schema-version {} is not supported (expected {SCHEMA_VERSION})", self.schema_version));
        }
        if !(5..=8).contains(&self.n) {
            return Err(format!("n = {} is outside 5..=8", self.n));
        }
        let domain = self.domain_model()?;
        if domain.n() != self.n {
            return Err(format!("domain dimension {} differs from n = {}", domain.n(), self.n));
        }
        self.k.validate(&domain).map_err(|e| format!("k: {e}"))?;
        self.quadrature.validate().map_err(|e| format!("quadrature: {e}"))?;
        if let Some(flow) = &self.flow {
            flow.params.validate().map_err(|e| format!("flow.params: {e}"))?;
            for (i, s) in flow.starts.iter().enumerate() {
                if s.masses.is_empty() || s.masses.iter().any(|m| m.a.len() != self.n) {
                    return Err(format!("flow.starts[{i}]: every start needs masses with {}-dimensional centers", self.n));
                }
            }
        }
        if self.verify.dimensions.iter().any(|d| !(5..=8).contains(d)) {
            return Err("verify.dimensions must lie in 5..=8".into());
        }
        Ok(())
    }

    pub fn domain_model(&self) -> Result<DomainModel, String> {
        DomainModel::from_spec(&self.domain).map_err(|e| format!("domain: {e}"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal() -> serde_json::Value {
        serde_json::json!({
            "schema-version": 1,
            "n": 6,
            "domain": { "backend": "unit-ball", "n": 6 },
            "k": { "background": 1.0 }
        })
    }

    #[test]
    fn defaults_fill_optional_blocks() {
        let c: RunConfig = serde_json::from_value(minimal()).unwrap();
        c.validate().unwrap();
        assert_eq!(c.verify.dimensions, vec![5]);
        assert!(c.flow.is_none());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let mut v = minimal();
        v["k"]["slope"] = serde_json::json!(1.0);
        assert!(serde_json::from_value::<RunConfig>(v).is_err());
        let mut v = minimal();
        v["extra"] = serde_json::json!(true);
        assert!(serde_json::from_value::<RunConfig>(v).is_err());
    }

    #[test]
    fn mismatched_dimension_is_invalid() {
        let mut v = minimal();
        v["n"] = serde_json::json!(5);
        let c: RunConfig = serde_json::from_value(v).unwrap();
        assert!(c.validate().unwrap_err().contains("differs"));
    }

    #[test]
    fn load_reports_line_and_column() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        std::fs::write(&p, "{\n  \"schema-version\": 1,\n  \"n\": 6,\n  \"bogus\": 1\n}").unwrap();
        let err = load(&p).unwrap_err();
        assert!(err.contains("c.json:4:"), "{err}");
    }
}
