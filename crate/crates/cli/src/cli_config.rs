//! TOML config file. Every flag has a config equivalent; flags win.

use serde::Deserialize;
use std::path::{Path, PathBuf};

use uipilot_core::gateway::http::HttpProviderConfig;
use uipilot_core::memory::ScenarioSpec;
use uipilot_core::orchestrator::EngineConfig;
use uipilot_core::perception::PerceptionConfig;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CliConfig {
    #[serde(default)]
    pub engine: EngineSection,
    #[serde(default)]
    pub perception: Option<PerceptionConfig>,
    #[serde(default)]
    pub http: HttpSection,
    #[serde(default)]
    pub ocr: Option<OcrSection>,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default, rename = "scenario")]
    pub scenarios: Vec<ScenarioEntry>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OcrSection {
    /// "fixture" (default) or "external".
    pub engine: Option<String>,
    pub program: Option<String>,
    pub args: Option<Vec<String>>,
    pub scale: Option<u32>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EngineSection {
    pub max_steps: Option<u32>,
    pub max_corrections: Option<u32>,
    pub poll_ms: Option<u64>,
    pub max_wait_ms: Option<u64>,
    pub llm_timeout_ms: Option<u64>,
    pub crash_patterns: Option<Vec<String>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HttpSection {
    pub endpoint: Option<String>,
    pub model: Option<String>,
    pub api_key_env: Option<String>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub provider: Option<String>,
    pub backend: Option<String>,
    pub out: Option<PathBuf>,
    pub parallel: Option<usize>,
    pub templates: Option<PathBuf>,
    /// App id under test for the adb backend's bug scan.
    pub app_id: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioEntry {
    pub name: String,
    pub description: String,
    #[serde(default)]
    pub required_inputs: std::collections::BTreeMap<String, String>,
}

impl CliConfig {
    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        let Some(path) = path else {
            return Ok(CliConfig::default());
        };
        let raw = std::fs::read_to_string(path)
            .map_err(|e| anyhow::anyhow!("cannot read config {}: {e}", path.display()))?;
        let cfg: CliConfig = toml::from_str(&raw)
            .map_err(|e| anyhow::anyhow!("bad config {}: {e}", path.display()))?;
        Ok(cfg)
    }

    pub fn engine_config(&self) -> EngineConfig {
        let mut cfg = EngineConfig::default();
        if let Some(v) = self.engine.max_steps {
            cfg.max_steps = v;
        }
        if let Some(v) = self.engine.max_corrections {
            cfg.max_corrections = v;
        }
        if let Some(v) = self.engine.poll_ms {
            cfg.poll_ms = v;
        }
        if let Some(v) = self.engine.max_wait_ms {
            cfg.max_wait_ms = v;
        }
        if let Some(v) = self.engine.llm_timeout_ms {
            cfg.llm_timeout_ms = v;
        }
        if let Some(v) = &self.engine.crash_patterns {
            cfg.crash_patterns = v.clone();
        }
        if let Some(p) = &self.perception {
            cfg.perception = p.clone();
        }
        cfg
    }

    pub fn http_config(&self) -> HttpProviderConfig {
        let mut cfg = HttpProviderConfig::default();
        if let Some(v) = &self.http.endpoint {
            cfg.endpoint = v.clone();
        }
        if let Some(v) = &self.http.model {
            cfg.model = v.clone();
        }
        if let Some(v) = &self.http.api_key_env {
            cfg.api_key_env = v.clone();
        }
        cfg
    }

    pub fn find_scenario(&self, name: &str) -> Option<ScenarioSpec> {
        self.scenarios.iter().find(|s| s.name == name).map(|s| {
            let mut spec = ScenarioSpec::new(s.name.clone(), s.description.clone());
            for (k, v) in &s.required_inputs {
                spec = spec.with_input(k.clone(), v.clone());
            }
            spec
        })
    }
}
