//! Run configuration: strict JSON schema with documented defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bubble::QuadratureConfig;
use crate::certificate::MuAssertion;
use crate::critical::SearchConfig;
use crate::error::{Error, Result};
use crate::geometry::{ManifoldModel, RoundSphere, TableManifold};
use crate::interaction::InteractionConfig;
use crate::shadow_flow::FlowConfig;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ManifoldSpec {
    #[default]
    RoundS4,
    /// Tabulated Green's function; relative paths resolve against the
    /// directory of the config file.
    Table { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PositivityConfig {
    pub samples: usize,
}

impl Default for PositivityConfig {
    fn default() -> Self {
        PositivityConfig { samples: 20_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub positivity: PositivityConfig,
    pub search: SearchConfig,
    pub interaction: InteractionConfig,
    pub quadrature: QuadratureConfig,
    pub flow: FlowConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub field: String,
    #[serde(default)]
    pub manifold: ManifoldSpec,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub mu: Vec<MuAssertion>,
}

impl RunConfig {
    pub fn new(field: impl Into<String>) -> Self {
        RunConfig {
            field: field.into(),
            manifold: ManifoldSpec::default(),
            seed: 0,
            tolerances: Tolerances::default(),
            mu: Vec::new(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads a config file, resolving a relative table path against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })?;
        if let ManifoldSpec::Table { path: table } = &mut cfg.manifold {
            if table.is_relative() {
                if let Some(dir) = path.parent() {
                    *table = dir.join(&*table);
                }
            }
        }
        Ok(cfg)
    }

    /// Search settings with the run seed applied.
    pub fn search(&self) -> SearchConfig {
        SearchConfig { seed: self.seed, ..self.tolerances.search.clone() }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

pub fn load_manifold(spec: &ManifoldSpec) -> Result<Box<dyn ManifoldModel>> {
    match spec {
        ManifoldSpec::RoundS4 => Ok(Box::new(RoundSphere)),
        ManifoldSpec::Table { path } => load_manifold_table(path).map(|t| Box::new(t) as Box<dyn ManifoldModel>),
    }
}

pub fn load_manifold_table(path: &Path) -> Result<TableManifold> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    TableManifold::from_json(&text, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_takes_defaults() {
        let cfg = RunConfig::from_json(r#"{"field": "2 + x5"}"#).unwrap();
        assert_eq!(cfg, RunConfig::new("2 + x5"));
        assert_eq!(cfg.search().starts, 4096);
    }

    #[test]
    fn full_config_round_trips() {
        let text = r#"{
            "field": "3 + x5^2",
            "manifold": {"type": "table", "path": "m.json"},
            "seed": 7,
            "tolerances": {"search": {"starts": 100, "grad_tol": 1e-10}, "interaction": {"rho_tol": 1e-8}},
            "mu": [{"subset": ["north", "south"], "value": 0}]
        }"#;
        let cfg = RunConfig::from_json(text).unwrap();
        assert_eq!(cfg.search().seed, 7);
        assert_eq!(cfg.search().starts, 100);
        assert_eq!(cfg.tolerances.interaction.rho_tol, 1e-8);
        assert_eq!(cfg.mu.len(), 1);
        assert_eq!(RunConfig::from_json(&cfg.to_json()).unwrap(), cfg);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        for text in [
            r#"{"field": "1", "extra": 1}"#,
            r#"{"field": "1", "tolerances": {"search": {"starts": 1, "bogus": 2}}}"#,
            r#"{"field": "1", "tolerances": {"search": {"seed": 3}}}"#,
            r#"{"field": "1", "manifold": {"type": "torus"}}"#,
            r#"{"field": "1", "mu": [{"subset": ["a"], "value": 0, "k": 1}]}"#,
            r#"{"seed": 1}"#,
        ] {
            assert!(matches!(RunConfig::from_json(text), Err(Error::Config(_))), "{text}");
        }
    }

    #[test]
    fn relative_table_path_follows_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("run.json");
        std::fs::write(&file, r#"{"field": "1", "manifold": {"type": "table", "path": "t.json"}}"#).unwrap();
        let cfg = RunConfig::load(&file).unwrap();
        assert_eq!(cfg.manifold, ManifoldSpec::Table { path: dir.path().join("t.json") });
    }
}
