//! JSON plan documents: a strategy description plus optional architecture
//! and cost-model overrides, as consumed by the `plan` and `estimate`
//! commands.

use crate::flops::CostModelConfig;
use crate::model::{
    validate_strategy, AdapterSpec, ArchitectureGraph, ModelError, ModuleRole, ModuleSpec,
    StageSpec, StrategySpec,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Architecture override for one module. `name` defaults to the role name
/// and `adapter` stays absent unless given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModuleConfig {
    pub role: ModuleRole,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub param_count: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adapter: Option<AdapterSpec>,
}

/// Top-level plan document.
///
/// ```json
/// {
///   "id": "S5-preliminary",
///   "stages": [
///     {"kind": "encoder-finetune", "dataset": {"hours": 5000.0}},
///     {"kind": "alignment", "dataset": {"hours": 5000.0}},
///     {"kind": "llm-adaptation", "convergence": "preliminary",
///      "dataset": {"hours": 5000.0}}
///   ]
/// }
/// ```
///
/// `modules` and `cost_model` are optional; defaults describe the reference
/// system (Whisper-medium encoder, linear projector, 7.6B decoder with a
/// rank-64 adapter) and the 2/2/2 coefficient set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigDocument {
    pub id: String,
    pub stages: Vec<StageSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modules: Option<Vec<ModuleConfig>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost_model: Option<CostModelConfig>,
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid plan JSON: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid strategy: {0}")]
    Strategy(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("invalid cost model: {0}")]
    CostModel(String),
}

impl ConfigDocument {
    /// Parses and fully validates a plan document.
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let doc: ConfigDocument = serde_json::from_str(text)?;
        doc.validate()?;
        Ok(doc)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let violations = validate_strategy(&self.strategy());
        if !violations.is_empty() {
            let joined =
                violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ");
            return Err(ConfigError::Strategy(joined));
        }
        self.architecture()?;
        if let Some(cm) = &self.cost_model {
            cm.validate().map_err(|e| ConfigError::CostModel(e.to_string()))?;
        }
        Ok(())
    }

    /// The described strategy with every stage's trainable set normalized.
    pub fn strategy(&self) -> StrategySpec {
        let stages = self.stages.iter().cloned().map(StageSpec::normalized).collect();
        StrategySpec::new(self.id.clone(), stages)
    }

    /// The architecture to cost against; the reference system when no
    /// `modules` override is present.
    pub fn architecture(&self) -> Result<ArchitectureGraph, ModelError> {
        let Some(configs) = &self.modules else {
            return Ok(ArchitectureGraph::whisper_qwen_default());
        };
        let mut modules = Vec::with_capacity(configs.len());
        for config in configs {
            let name =
                config.name.clone().unwrap_or_else(|| config.role.as_str().to_string());
            let mut module = ModuleSpec::new(name, config.role, config.param_count);
            if let Some(adapter) = &config.adapter {
                module = module.with_adapter(adapter.clone());
            }
            modules.push(module);
        }
        ArchitectureGraph::new(modules)
    }

    pub fn cost_model(&self) -> CostModelConfig {
        self.cost_model.unwrap_or_default()
    }
}
