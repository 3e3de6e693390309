//! Training-cost estimation. Costs are linear in parameters times tokens,
//! split into forward, activation-backward, and weight-gradient phases so
//! that freezing and adapters change exactly the terms they should.

use crate::model::{
    ArchitectureGraph, DatasetSpec, ModelError, ModuleRole, ModuleSpec, StageKind, StageSpec,
    StrategySpec, Trainable,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One unit of reported cost equals 1e15 floating-point operations.
pub const FLOPS_UNIT: f64 = 1e15;

/// Whole-token budgets for one stage's dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenCounts {
    /// Frames entering the speech encoder.
    pub encoder_tokens: u64,
    /// Encoder output after downsampling, as seen by projection and LLM.
    pub llm_speech_tokens: u64,
    /// Prompt and transcript text tokens seen by the LLM only.
    pub llm_text_tokens: u64,
}

impl TokenCounts {
    pub fn llm_tokens(&self) -> u64 {
        self.llm_speech_tokens + self.llm_text_tokens
    }
}

/// Derives token budgets from a dataset description, flooring at each
/// stream so budgets are whole tokens.
pub fn token_budget(dataset: &DatasetSpec) -> Result<TokenCounts, ModelError> {
    dataset.validate()?;
    let seconds = dataset.hours * 3600.0 * dataset.epochs;
    let encoder_tokens = (seconds * dataset.frame_rate).floor() as u64;
    let llm_speech_tokens = encoder_tokens / dataset.downsample as u64;
    let llm_text_tokens = (seconds * dataset.text_tokens_per_second).floor() as u64;
    Ok(TokenCounts { encoder_tokens, llm_speech_tokens, llm_text_tokens })
}

/// Per-phase cost coefficients in FLOPs per parameter per token.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CostModelConfig {
    pub c_fwd: f64,
    pub c_act_bwd: f64,
    pub c_wgrad: f64,
}

impl Default for CostModelConfig {
    fn default() -> Self {
        CostModelConfig { c_fwd: 2.0, c_act_bwd: 2.0, c_wgrad: 2.0 }
    }
}

impl CostModelConfig {
    pub fn validate(&self) -> Result<(), FlopsError> {
        for (name, v) in [
            ("c_fwd", self.c_fwd),
            ("c_act_bwd", self.c_act_bwd),
            ("c_wgrad", self.c_wgrad),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(FlopsError::InvalidCostModel(format!("{name} must be positive")));
            }
        }
        Ok(())
    }
}

/// Phase costs for one module within one stage, in `FLOPS_UNIT`s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulePhaseFlops {
    pub module: String,
    pub forward: f64,
    pub activation_backward: f64,
    pub weight_gradient: f64,
}

impl ModulePhaseFlops {
    pub fn total(&self) -> f64 {
        self.forward + self.activation_backward + self.weight_gradient
    }
}

/// Cost of one stage, split by module in dataflow order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlopsBreakdown {
    pub modules: Vec<ModulePhaseFlops>,
    pub total: f64,
}

impl FlopsBreakdown {
    fn from_modules(modules: Vec<ModulePhaseFlops>) -> Self {
        let total = modules.iter().map(ModulePhaseFlops::total).sum();
        FlopsBreakdown { modules, total }
    }

    pub fn module(&self, name: &str) -> Option<&ModulePhaseFlops> {
        self.modules.iter().find(|m| m.module == name)
    }
}

/// Total strategy cost with its per-stage breakdowns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyFlops {
    pub total: f64,
    pub stages: Vec<FlopsBreakdown>,
}

/// Parameters contributed by an adapter:
/// `layer_count * sum over targets of rank * (d_in + d_out)`.
pub fn adapter_params(adapter: &crate::model::AdapterSpec) -> Result<u64, ModelError> {
    adapter.validate()?;
    let per_layer: u64 = adapter
        .target_dims
        .iter()
        .map(|&(d_in, d_out)| adapter.rank as u64 * (d_in + d_out))
        .sum();
    Ok(adapter.layer_count as u64 * per_layer)
}

/// Base parameters plus attached adapter parameters. This is what forward
/// and activation-backward passes run through.
pub fn effective_params(module: &ModuleSpec) -> Result<u64, ModelError> {
    let adapter = match &module.adapter {
        Some(a) => adapter_params(a)?,
        None => 0,
    };
    Ok(module.param_count + adapter)
}

fn trainable_params(module: &ModuleSpec, selector: &Trainable) -> Result<u64, FlopsError> {
    let mut params = 0;
    if selector.base_weights {
        params += module.param_count;
    }
    if selector.adapter {
        match &module.adapter {
            Some(a) => params += adapter_params(a)?,
            None => {
                return Err(FlopsError::NoAdapter { module: module.name.clone() });
            }
        }
    }
    Ok(params)
}

fn tokens_for_role(role: ModuleRole, tokens: &TokenCounts) -> u64 {
    match role {
        ModuleRole::SpeechEncoder => tokens.encoder_tokens,
        ModuleRole::Projection => tokens.llm_speech_tokens,
        ModuleRole::LanguageModel => tokens.llm_tokens(),
    }
}

/// Estimates one stage.
///
/// Every module in the stage's forward path pays the forward cost on its
/// own token stream. Modules at or downstream of the earliest trainable
/// module pay activation-backward on effective (base plus adapter)
/// parameters, frozen or not: gradients still have to traverse them to
/// reach earlier trainable weights. Weight gradients are paid only on the
/// parameters actually selected for training. Encoder-finetune stages run
/// the encoder alone.
pub fn stage_flops(
    stage: &StageSpec,
    arch: &ArchitectureGraph,
    cost: &CostModelConfig,
) -> Result<FlopsBreakdown, FlopsError> {
    cost.validate()?;
    let tokens = token_budget(&stage.dataset)?;

    let involved: Vec<&ModuleSpec> = if stage.kind == StageKind::EncoderFinetune {
        vec![arch.module(ModuleRole::SpeechEncoder)]
    } else {
        arch.modules().iter().collect()
    };

    let position = |role: ModuleRole| -> Result<usize, FlopsError> {
        involved
            .iter()
            .position(|m| m.role == role)
            .ok_or_else(|| FlopsError::ModuleNotInStage { module: role.to_string(), kind: stage.kind })
    };

    let mut earliest_trainable: Option<usize> = None;
    for selector in &stage.trainable {
        if !selector.selects_anything() {
            return Err(FlopsError::EmptySelector { module: selector.module.to_string() });
        }
        let pos = position(selector.module)?;
        // Surface missing-adapter errors here even if a later selector sits
        // further upstream.
        trainable_params(involved[pos], selector)?;
        earliest_trainable = Some(match earliest_trainable {
            Some(cur) => cur.min(pos),
            None => pos,
        });
    }
    let earliest = earliest_trainable.ok_or(FlopsError::NothingTrainable { kind: stage.kind })?;

    let unit = 1.0 / FLOPS_UNIT;
    let mut modules = Vec::with_capacity(involved.len());
    for (pos, module) in involved.iter().enumerate() {
        let streamed = tokens_for_role(module.role, &tokens) as f64;
        let effective = effective_params(module)? as f64;
        let forward = cost.c_fwd * effective * streamed * unit;
        let activation_backward = if pos >= earliest {
            cost.c_act_bwd * effective * streamed * unit
        } else {
            0.0
        };
        let trained: u64 = stage
            .trainable
            .iter()
            .filter(|t| t.module == module.role)
            .map(|t| trainable_params(module, t))
            .sum::<Result<u64, _>>()?;
        let weight_gradient = cost.c_wgrad * trained as f64 * streamed * unit;
        modules.push(ModulePhaseFlops {
            module: module.name.clone(),
            forward,
            activation_backward,
            weight_gradient,
        });
    }
    Ok(FlopsBreakdown::from_modules(modules))
}

/// Estimates a whole strategy as the sum of its stages.
pub fn strategy_flops(
    strategy: &StrategySpec,
    arch: &ArchitectureGraph,
    cost: &CostModelConfig,
) -> Result<StrategyFlops, FlopsError> {
    let mut stages = Vec::with_capacity(strategy.stages.len());
    for stage in &strategy.stages {
        stages.push(stage_flops(stage, arch, cost)?);
    }
    let total = stages.iter().map(|s| s.total).sum();
    Ok(StrategyFlops { total, stages })
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FlopsError {
    #[error("invalid cost model: {0}")]
    InvalidCostModel(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("module {module} has no adapter but one was marked trainable")]
    NoAdapter { module: String },
    #[error("module {module} is not part of a {kind} stage")]
    ModuleNotInStage { module: String, kind: StageKind },
    #[error("trainable entry for {module} selects neither base weights nor adapter")]
    EmptySelector { module: String },
    #[error("{kind} stage has no trainable parameters")]
    NothingTrainable { kind: StageKind },
}
