//! Network, scenario and manifest files.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use transwave_core::emt::EmtConfig;
use transwave_core::hybrid::HybridConfig;
use transwave_core::model::{Disturbance, NetworkModel};
use transwave_core::swing::SwingConfig;
use transwave_core::Engine;

use crate::error::{CliError, CliResult};

/// What to simulate on a network. Engine sections that are absent take
/// their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub engine: Engine,
    pub disturbances: Vec<Disturbance>,
    #[serde(default)]
    pub swing: SwingConfig,
    #[serde(default)]
    pub emt: EmtConfig,
    #[serde(default)]
    pub hybrid: HybridConfig,
}

impl Scenario {
    /// Copy with every defaulted step filled in for `model`, so that a
    /// manifest spells out what actually ran.
    pub fn resolved(&self, model: &NetworkModel) -> CliResult<Self> {
        let mut s = self.clone();
        match s.engine {
            Engine::Swing => s.swing.validate()?,
            Engine::Emt => {
                s.emt.validate()?;
                s.emt.dt = Some(s.emt.resolve_dt(model)?);
            }
            Engine::Hybrid => {
                let (dt_em, _) = s.hybrid.resolve_steps(model)?;
                s.hybrid.dt_em = Some(dt_em);
            }
        }
        Ok(s)
    }
}

/// Record of one `simulate` run. It embeds the network and the resolved
/// scenario, so it is enough to repeat the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub tool_version: String,
    pub engine: Engine,
    /// As given on the command line; informational.
    pub network_path: String,
    pub scenario_path: String,
    /// File names relative to the output directory.
    pub outputs: Vec<String>,
    pub seed: u64,
    pub network: NetworkModel,
    pub scenario: Scenario,
}

pub const WAVES_FILE: &str = "waves.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

pub fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))
}

/// Parse a JSON file; syntax and schema errors carry line and column.
pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| CliError::from(e).in_file(path))
}

pub fn read_network(path: &Path) -> CliResult<NetworkModel> {
    let model: NetworkModel = read_json(path)?;
    let report = model.validate();
    if !report.is_valid() {
        return Err(CliError::config(format!("invalid network:\n{report}")).in_file(path));
    }
    Ok(model)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_file(path, text.as_bytes())
}

pub fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::config(format!("cannot create {}: {e}", dir.display())))?;
    }
    fs::write(path, bytes).map_err(|e| CliError::config(format!("cannot write {}: {e}", path.display())))
}

pub fn out_path(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenario_defaults_fill_engine_sections() {
        let s: Scenario = serde_json::from_str(
            r#"{"engine": "swing", "disturbances": [
                {"kind": "fault", "target": {"bus": 1}, "t_onset": 0.0, "magnitude": 1.0, "duration": 0.1}
            ]}"#,
        )
        .unwrap();
        assert_eq!(s.swing, SwingConfig::default());
        assert_eq!(s.disturbances[0], Disturbance::fault(1, 0.0));
    }

    #[test]
    fn unknown_fields_are_rejected_with_position() {
        let e = serde_json::from_str::<Scenario>("{\n  \"engine\": \"swing\",\n  \"disturbance\": []\n}").unwrap_err();
        assert_eq!(e.line(), 3);
        assert!(e.to_string().contains("unknown field"), "{e}");
    }

    #[test]
    fn resolving_spells_out_the_step() {
        let m = transwave_core::model::presets::ring23();
        let s = Scenario {
            engine: Engine::Emt,
            disturbances: vec![],
            swing: SwingConfig::default(),
            emt: EmtConfig::default(),
            hybrid: HybridConfig::default(),
        };
        let r = s.resolved(&m).unwrap();
        assert_eq!(r.emt.dt, Some(1e-6));
    }
}
