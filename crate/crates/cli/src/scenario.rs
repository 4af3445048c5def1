//! Config and scenario files.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use zipflab_core::{validate, EconomyConfig};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    /// Dotted path into the config, e.g. `diffusion.GBM.mu`.
    pub param: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    pub config: EconomyConfig,
    #[serde(default)]
    pub outputs: Vec<String>,
    #[serde(default)]
    pub sweep: Option<Sweep>,
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub replicas: Option<usize>,
    pub dt: Option<f64>,
}

impl Overrides {
    pub fn apply(&self, config: &mut EconomyConfig) {
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(r) = self.replicas {
            config.replicas = r;
        }
        if let Some(dt) = self.dt {
            config.dt = dt;
        }
    }
}

/// Reads either a bare config or a scenario wrapping one.
pub fn load_scenario(path: &Path) -> CliResult<Scenario> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("cannot read config {}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::input(format!("{}: invalid JSON: {e}", path.display())))?;
    let is_scenario = value.get("config").is_some();
    let parsed = if is_scenario {
        serde_json::from_value::<Scenario>(value)
    } else {
        serde_json::from_value::<EconomyConfig>(value).map(|config| Scenario {
            name: String::new(),
            config,
            outputs: Vec::new(),
            sweep: None,
        })
    };
    parsed.map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

pub fn check(config: &EconomyConfig) -> CliResult<()> {
    let violations = validate(config);
    if violations.is_empty() {
        Ok(())
    } else {
        Err(CliError::Input(
            violations.iter().map(ToString::to_string).collect(),
        ))
    }
}

/// Copy of `config` with the numeric field at `path` set to `value`.
pub fn with_param(config: &EconomyConfig, path: &str, value: f64) -> CliResult<EconomyConfig> {
    let unresolved = || {
        CliError::input(format!(
            "parameter path `{path}` does not resolve to a numeric field"
        ))
    };
    let mut tree = serde_json::to_value(config).map_err(|e| CliError::Runtime(e.to_string()))?;
    let mut node = &mut tree;
    for key in path.split('.') {
        node = node.get_mut(key).ok_or_else(unresolved)?;
    }
    if !node.is_number() {
        return Err(unresolved());
    }
    *node = serde_json::Number::from_f64(value)
        .map(Value::Number)
        .ok_or_else(|| CliError::input(format!("sweep value {value} is not finite")))?;
    serde_json::from_value(tree).map_err(|e| CliError::input(format!("`{path}` = {value}: {e}")))
}
