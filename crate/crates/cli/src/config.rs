//! Run configuration: schema validation, typed view and file resolution.

use crate::{CliError, Command};
use lzeta::geometry::{benchmark, MetricField};
use lzeta::specoracle::SpectralModel;
use num_complex::Complex64;
use serde::Deserialize;
use serde_json::Value;
use std::path::{Path, PathBuf};

/// The published schema; `schema_version` in a config must equal
/// [`SCHEMA_VERSION`].
pub const SCHEMA: &str = include_str!("../../../schema/config.schema.json");
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    // checked against the subcommand before deserialization
    #[allow(dead_code)]
    pub command: Option<String>,
    pub metric_file: Option<String>,
    pub benchmark: Option<String>,
    pub point: Option<Vec<f64>>,
    pub model_file: Option<String>,
    pub order: Option<usize>,
    pub alpha0: Option<f64>,
    pub epsilon: Option<f64>,
    pub epsilon_ladder: Option<Vec<f64>>,
    #[serde(default)]
    pub tolerances: Tolerances,
    pub contour: Option<ContourConfig>,
    pub test_function: Option<TestFunctionConfig>,
    pub lambdas: Option<Vec<f64>>,
    pub scalar: Option<f64>,
    pub out: Option<String>,
    pub format: Option<String>,
}

#[derive(Clone, Copy, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub agreement: Option<f64>,
    pub subleading: Option<f64>,
    pub contour: Option<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContourConfig {
    pub w: Vec<f64>,
    pub alpha: Vec<ComplexInput>,
    pub epsilon: f64,
    pub theta: Option<f64>,
    pub r_max: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestFunctionConfig {
    pub f_hat: String,
    pub support: [f64; 2],
}

/// A real number or a `[re, im]` pair.
#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(untagged)]
pub enum ComplexInput {
    Real(f64),
    Pair([f64; 2]),
}

impl ComplexInput {
    pub fn value(self) -> Complex64 {
        match self {
            ComplexInput::Real(x) => Complex64::new(x, 0.0),
            ComplexInput::Pair([re, im]) => Complex64::new(re, im),
        }
    }
}

/// A loaded configuration together with the directory its relative paths
/// refer to.
pub struct Loaded {
    pub config: RunConfig,
    pub base: PathBuf,
}

/// Reads `path`, validates it against the schema (with `command` filled in
/// from the subcommand) and deserializes it.
pub fn load(path: &Path, command: Command) -> Result<Loaded, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
    let mut value: Value = serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    let name = command.name();
    match value.get("command") {
        Some(Value::String(c)) if c != name => {
            return Err(CliError::Validation(format!("config is for command '{c}' but '{name}' was requested")));
        }
        _ => {}
    }
    if let Some(obj) = value.as_object_mut() {
        obj.insert("command".into(), Value::String(name.into()));
    }
    validate(&value)?;
    let config: RunConfig = serde_json::from_value(value).map_err(|e| CliError::Validation(e.to_string()))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(Loaded { config, base })
}

/// Checks a configuration value against the published schema.
pub fn validate(value: &Value) -> Result<(), CliError> {
    let schema: Value = serde_json::from_str(SCHEMA).expect("embedded schema is valid JSON");
    let validator = jsonschema::validator_for(&schema).expect("embedded schema compiles");
    let errors: Vec<String> = validator
        .iter_errors(value)
        .map(|e| {
            let at = e.instance_path().to_string();
            if at.is_empty() {
                e.to_string()
            } else {
                format!("{at}: {e}")
            }
        })
        .collect();
    if errors.is_empty() {
        Ok(())
    } else {
        Err(CliError::Validation(format!("config does not match schema v{SCHEMA_VERSION}:\n  {}", errors.join("\n  "))))
    }
}

impl Loaded {
    fn resolve(&self, p: &str) -> PathBuf {
        let p = Path::new(p);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }

    /// The metric and the evaluation point.
    pub fn metric(&self) -> Result<(MetricField, Vec<f64>), CliError> {
        let c = &self.config;
        let (metric, default_point) = if let Some(name) = &c.benchmark {
            let b = benchmark(name).ok_or_else(|| CliError::Validation(format!("unknown benchmark '{name}'")))?;
            (b.metric, Some(b.point))
        } else if let Some(file) = &c.metric_file {
            let path = self.resolve(file);
            let text = std::fs::read_to_string(&path).map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
            let m = MetricField::from_json(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
            (m, None)
        } else {
            return Err(CliError::Validation("a metric_file or benchmark is required".into()));
        };
        let point = c
            .point
            .clone()
            .or(default_point)
            .ok_or_else(|| CliError::Validation("a point is required for a metric file".into()))?;
        if point.len() != metric.dim() {
            return Err(CliError::Validation(format!(
                "point has {} coordinates, the metric has dimension {}",
                point.len(),
                metric.dim()
            )));
        }
        Ok((metric, point))
    }

    pub fn model(&self) -> Result<Option<SpectralModel>, CliError> {
        let Some(file) = &self.config.model_file else {
            return Ok(None);
        };
        let path = self.resolve(file);
        let text = std::fs::read_to_string(&path).map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
        SpectralModel::from_json(&text)
            .map(Some)
            .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
    }

    pub fn out_path(&self) -> Option<PathBuf> {
        self.config.out.as_deref().map(|p| self.resolve(p))
    }
}
