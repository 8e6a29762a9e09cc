//! JSON problem documents: schema, parsing, and assembly into validated
//! runtime structures.
//!
//! One document describes a whole problem: the tree arity, the per-component
//! operator, predecessor-weight schedule and boundary datum, the coupling
//! matrix, and optional solve parameters. Schema errors surface with the
//! offending key path; semantic errors carry the path of the violated key.

use serde::Deserialize;

use crate::averaging::{AveragingOperator, OperatorKind};
use crate::coefficients::CoefficientSchedule;
use crate::error::{Error, Result};
use crate::solver::{BoundaryData, BoundarySpec, ComponentConfig, SystemConfig};

/// Document shape exactly as written on disk, prior to semantic checks.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub m: usize,
    pub components: Vec<RawComponent>,
    pub coupling: Vec<Vec<CoefficientSchedule>>,
    #[serde(default)]
    pub depth: Option<usize>,
    #[serde(default)]
    pub tol: Option<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawComponent {
    pub operator: OperatorKind,
    pub beta: CoefficientSchedule,
    pub boundary: BoundarySpec,
}

/// Fully validated problem: system, boundary data, and solve parameters.
#[derive(Clone, Debug)]
pub struct ProblemConfig {
    pub system: SystemConfig,
    pub boundary: BoundaryData,
    pub depth: Option<usize>,
    pub tol: Option<f64>,
}

/// Parses a document, reporting structural problems as schema violations
/// with the path of the offending key.
pub fn parse_config(json: &str) -> Result<RawConfig> {
    let mut de = serde_json::Deserializer::from_str(json);
    let raw: RawConfig =
        serde_path_to_error::deserialize(&mut de).map_err(|e| Error::SchemaViolation {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
    de.end().map_err(|e| Error::SchemaViolation {
        path: ".".into(),
        message: e.to_string(),
    })?;
    Ok(raw)
}

impl RawConfig {
    /// Semantic validation and assembly. Every error names the key it
    /// blames.
    pub fn assemble(self) -> Result<ProblemConfig> {
        let mut components = Vec::with_capacity(self.components.len());
        let mut boundaries = Vec::with_capacity(self.components.len());
        for (i, raw) in self.components.into_iter().enumerate() {
            let operator =
                AveragingOperator::new(raw.operator, self.m).map_err(|e| Error::ConfigViolation {
                    path: format!("components[{i}].operator"),
                    message: e.to_string(),
                })?;
            raw.boundary.validate().map_err(|e| Error::ConfigViolation {
                path: format!("components[{i}].boundary"),
                message: e.to_string(),
            })?;
            components.push(ComponentConfig { operator, beta: raw.beta });
            boundaries.push(raw.boundary);
        }
        let system = SystemConfig::new(self.m, components, self.coupling)?;
        let boundary = BoundaryData::new(boundaries)?;
        if let Some(tol) = self.tol {
            if !(tol > 0.0) || !tol.is_finite() {
                return Err(Error::ConfigViolation {
                    path: "tol".into(),
                    message: format!("tolerance must be a positive number, got {tol}"),
                });
            }
        }
        Ok(ProblemConfig { system, boundary, depth: self.depth, tol: self.tol })
    }
}

/// Parse plus assemble in one step.
pub fn load_problem(json: &str) -> Result<ProblemConfig> {
    parse_config(json)?.assemble()
}
