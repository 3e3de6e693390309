//! Architecture and training-plan descriptions: modules, adapters, stages,
//! strategies, and the validation rules that keep plans well formed.

use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

/// Position of a module in the speech-to-text dataflow.
///
/// Every architecture has exactly one module per role, wired
/// encoder -> projection -> language model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModuleRole {
    SpeechEncoder,
    Projection,
    LanguageModel,
}

impl ModuleRole {
    /// Dataflow order.
    pub const ALL: [ModuleRole; 3] = [
        ModuleRole::SpeechEncoder,
        ModuleRole::Projection,
        ModuleRole::LanguageModel,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModuleRole::SpeechEncoder => "speech-encoder",
            ModuleRole::Projection => "projection",
            ModuleRole::LanguageModel => "language-model",
        }
    }
}

impl fmt::Display for ModuleRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Which quantity a scaling curve varies along.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScalingVariable {
    ModelSize,
    DataSize,
    ComputeBudget,
}

impl ScalingVariable {
    /// Conventional single-letter symbol.
    pub fn symbol(self) -> &'static str {
        match self {
            ScalingVariable::ModelSize => "N",
            ScalingVariable::DataSize => "D",
            ScalingVariable::ComputeBudget => "B",
        }
    }
}

impl fmt::Display for ScalingVariable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScalingVariable::ModelSize => "model-size",
            ScalingVariable::DataSize => "data-size",
            ScalingVariable::ComputeBudget => "compute-budget",
        })
    }
}

/// Low-rank adapter attached to a module's linear projections.
///
/// `target_dims` lists the (input, output) dimensions of each adapted
/// projection within one layer; the same set repeats for `layer_count`
/// layers. Parameter count is `layer_count * sum(rank * (d_in + d_out))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdapterSpec {
    pub rank: u32,
    pub alpha: f64,
    pub targets_per_layer: u32,
    pub layer_count: u32,
    pub target_dims: Vec<(u64, u64)>,
}

impl AdapterSpec {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.rank == 0 {
            return Err(ModelError::InvalidAdapter("rank must be at least 1".into()));
        }
        if !(self.alpha > 0.0) {
            return Err(ModelError::InvalidAdapter("alpha must be positive".into()));
        }
        if self.layer_count == 0 {
            return Err(ModelError::InvalidAdapter("layer_count must be at least 1".into()));
        }
        if self.targets_per_layer as usize != self.target_dims.len() {
            return Err(ModelError::InvalidAdapter(format!(
                "targets_per_layer is {} but {} target dims were given",
                self.targets_per_layer,
                self.target_dims.len()
            )));
        }
        if self.target_dims.iter().any(|&(i, o)| i == 0 || o == 0) {
            return Err(ModelError::InvalidAdapter("target dims must be positive".into()));
        }
        Ok(())
    }

    /// Rank-64 adapter over the seven linear projections of each of the 28
    /// decoder layers of a 7B Qwen2.5 model.
    pub fn qwen25_7b_default() -> Self {
        AdapterSpec {
            rank: 64,
            alpha: 16.0,
            targets_per_layer: 7,
            layer_count: 28,
            target_dims: vec![
                (3584, 3584),  // q_proj
                (3584, 512),   // k_proj
                (3584, 512),   // v_proj
                (3584, 3584),  // o_proj
                (3584, 18944), // gate_proj
                (3584, 18944), // up_proj
                (18944, 3584), // down_proj
            ],
        }
    }
}

/// One module of the pipeline. `param_count` covers the base weights only;
/// an attached adapter contributes separately.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModuleSpec {
    pub name: String,
    pub role: ModuleRole,
    pub param_count: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adapter: Option<AdapterSpec>,
}

impl ModuleSpec {
    pub fn new(name: impl Into<String>, role: ModuleRole, param_count: u64) -> Self {
        ModuleSpec { name: name.into(), role, param_count, adapter: None }
    }

    pub fn with_adapter(mut self, adapter: AdapterSpec) -> Self {
        self.adapter = Some(adapter);
        self
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.name.is_empty() {
            return Err(ModelError::InvalidModule("module name must be non-empty".into()));
        }
        if self.param_count == 0 {
            return Err(ModelError::InvalidModule(format!(
                "module {} must have a positive param_count",
                self.name
            )));
        }
        if let Some(adapter) = &self.adapter {
            adapter.validate()?;
        }
        Ok(())
    }
}

/// How the three input streams and the output attach to the module chain.
/// Purely descriptive; the wiring itself is fixed by `ModuleRole::ALL`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelRoles {
    pub prompt: String,
    pub speech: String,
    pub transcript: String,
    pub output: String,
}

impl Default for ChannelRoles {
    fn default() -> Self {
        ChannelRoles {
            prompt: "instruction text embedded directly by the language model".into(),
            speech: "audio features through the speech encoder, then the projection, \
                     into the language model input sequence"
                .into(),
            transcript: "target text consumed by the language model during training".into(),
            output: "transcript tokens decoded by the language model".into(),
        }
    }
}

/// The full pipeline: one module per role, in dataflow order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchitectureGraph {
    modules: Vec<ModuleSpec>,
    pub channels: ChannelRoles,
}

impl ArchitectureGraph {
    /// Builds a graph from exactly three modules, one per role, given in
    /// dataflow order (encoder, projection, language model).
    pub fn new(modules: Vec<ModuleSpec>) -> Result<Self, ModelError> {
        if modules.len() != ModuleRole::ALL.len() {
            return Err(ModelError::InvalidArchitecture(format!(
                "expected {} modules, got {}",
                ModuleRole::ALL.len(),
                modules.len()
            )));
        }
        for (module, expected) in modules.iter().zip(ModuleRole::ALL) {
            module.validate()?;
            if module.role != expected {
                return Err(ModelError::InvalidArchitecture(format!(
                    "module {} out of order: expected role {}, found {}",
                    module.name, expected, module.role
                )));
            }
        }
        Ok(ArchitectureGraph { modules, channels: ChannelRoles::default() })
    }

    /// Whisper-medium encoder, linear projection, and 7B Qwen2.5 language
    /// model with a rank-64 adapter.
    pub fn whisper_qwen_default() -> Self {
        ArchitectureGraph::new(vec![
            ModuleSpec::new("whisper-medium", ModuleRole::SpeechEncoder, 307_000_000),
            ModuleSpec::new("speech-projection", ModuleRole::Projection, 27_500_000),
            ModuleSpec::new("qwen2.5-7b", ModuleRole::LanguageModel, 7_615_616_512)
                .with_adapter(AdapterSpec::qwen25_7b_default()),
        ])
        .expect("default architecture is valid")
    }

    /// Modules in dataflow order.
    pub fn modules(&self) -> &[ModuleSpec] {
        &self.modules
    }

    pub fn module(&self, role: ModuleRole) -> &ModuleSpec {
        &self.modules[ModuleRole::ALL.iter().position(|&r| r == role).unwrap()]
    }

    pub fn module_mut(&mut self, role: ModuleRole) -> &mut ModuleSpec {
        &mut self.modules[ModuleRole::ALL.iter().position(|&r| r == role).unwrap()]
    }
}

/// Kinds of training stage, in the only order they may appear in a strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StageKind {
    EncoderFinetune,
    Alignment,
    LlmAdaptation,
    FullJoint,
}

impl StageKind {
    pub const ALL: [StageKind; 4] = [
        StageKind::EncoderFinetune,
        StageKind::Alignment,
        StageKind::LlmAdaptation,
        StageKind::FullJoint,
    ];

    fn rank(self) -> usize {
        StageKind::ALL.iter().position(|&k| k == self).unwrap()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            StageKind::EncoderFinetune => "encoder-finetune",
            StageKind::Alignment => "alignment",
            StageKind::LlmAdaptation => "llm-adaptation",
            StageKind::FullJoint => "full-joint",
        }
    }
}

impl fmt::Display for StageKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// How far a stage is trained before moving on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Convergence {
    /// Stop once the loss curve has visibly flattened.
    Preliminary,
    /// Train to full convergence.
    Full,
}

impl fmt::Display for Convergence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Convergence::Preliminary => "preliminary",
            Convergence::Full => "full",
        })
    }
}

/// Data volume and tokenization rates for one stage.
///
/// Token budgets derive from it as whole tokens:
/// encoder tokens = floor(hours * 3600 * frame_rate * epochs), the language
/// model sees those divided by `downsample` plus
/// floor(hours * 3600 * text_tokens_per_second * epochs) text tokens.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub hours: f64,
    #[serde(default = "DatasetSpec::default_frame_rate")]
    pub frame_rate: f64,
    #[serde(default = "DatasetSpec::default_downsample")]
    pub downsample: u32,
    #[serde(default = "DatasetSpec::default_text_tokens_per_second")]
    pub text_tokens_per_second: f64,
    #[serde(default = "DatasetSpec::default_epochs")]
    pub epochs: f64,
}

impl DatasetSpec {
    fn default_frame_rate() -> f64 {
        50.0
    }
    fn default_downsample() -> u32 {
        4
    }
    fn default_text_tokens_per_second() -> f64 {
        3.0
    }
    fn default_epochs() -> f64 {
        1.0
    }

    /// Paired speech/text data with standard rates: 50 encoder frames per
    /// second, 4x downsampling into the language model, 3 text tokens per
    /// second, one epoch.
    pub fn with_hours(hours: f64) -> Self {
        DatasetSpec {
            hours,
            frame_rate: Self::default_frame_rate(),
            downsample: Self::default_downsample(),
            text_tokens_per_second: Self::default_text_tokens_per_second(),
            epochs: Self::default_epochs(),
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.hours >= 0.0) || !self.hours.is_finite() {
            return Err(ModelError::InvalidDataset("hours must be finite and non-negative".into()));
        }
        if !(self.frame_rate > 0.0) || !self.frame_rate.is_finite() {
            return Err(ModelError::InvalidDataset("frame_rate must be positive".into()));
        }
        if self.downsample == 0 {
            return Err(ModelError::InvalidDataset("downsample must be at least 1".into()));
        }
        if !(self.text_tokens_per_second >= 0.0) || !self.text_tokens_per_second.is_finite() {
            return Err(ModelError::InvalidDataset(
                "text_tokens_per_second must be finite and non-negative".into(),
            ));
        }
        if !(self.epochs > 0.0) || !self.epochs.is_finite() {
            return Err(ModelError::InvalidDataset("epochs must be positive".into()));
        }
        Ok(())
    }
}

/// Selects what is updated in a module during a stage: its base weights,
/// its adapter, or both.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trainable {
    pub module: ModuleRole,
    pub base_weights: bool,
    pub adapter: bool,
}

impl Trainable {
    pub fn base(module: ModuleRole) -> Self {
        Trainable { module, base_weights: true, adapter: false }
    }

    pub fn adapter_only(module: ModuleRole) -> Self {
        Trainable { module, base_weights: false, adapter: true }
    }

    pub fn selects_anything(&self) -> bool {
        self.base_weights || self.adapter
    }
}

/// The trainable set each stage kind is defined to use.
pub fn canonical_trainables(kind: StageKind) -> Vec<Trainable> {
    match kind {
        StageKind::EncoderFinetune => vec![Trainable::base(ModuleRole::SpeechEncoder)],
        StageKind::Alignment => vec![Trainable::base(ModuleRole::Projection)],
        StageKind::LlmAdaptation => vec![
            Trainable::base(ModuleRole::Projection),
            Trainable::adapter_only(ModuleRole::LanguageModel),
        ],
        StageKind::FullJoint => vec![
            Trainable::base(ModuleRole::SpeechEncoder),
            Trainable::base(ModuleRole::Projection),
            Trainable::adapter_only(ModuleRole::LanguageModel),
        ],
    }
}

/// One training stage of a strategy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageSpec {
    pub kind: StageKind,
    #[serde(default = "StageSpec::default_convergence")]
    pub convergence: Convergence,
    pub dataset: DatasetSpec,
    #[serde(default = "Vec::new")]
    pub trainable: Vec<Trainable>,
}

impl StageSpec {
    fn default_convergence() -> Convergence {
        Convergence::Full
    }

    /// Stage with the canonical trainable set for its kind.
    pub fn new(kind: StageKind, convergence: Convergence, dataset: DatasetSpec) -> Self {
        StageSpec { kind, convergence, dataset, trainable: canonical_trainables(kind) }
    }

    /// Replaces an empty trainable set (as deserialized from configs that
    /// omit it) with the canonical one.
    pub fn normalized(mut self) -> Self {
        if self.trainable.is_empty() {
            self.trainable = canonical_trainables(self.kind);
        }
        self
    }
}

/// A named sequence of training stages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategySpec {
    pub id: String,
    pub stages: Vec<StageSpec>,
}

impl StrategySpec {
    pub fn new(id: impl Into<String>, stages: Vec<StageSpec>) -> Self {
        StrategySpec { id: id.into(), stages }
    }

    /// Sets every stage's data volume to `hours`, keeping other rates.
    pub fn with_hours(mut self, hours: f64) -> Self {
        for stage in &mut self.stages {
            stage.dataset.hours = hours;
        }
        self
    }
}

/// A broken strategy invariant, tied to the stage where it was observed
/// when one is identifiable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub stage: Option<usize>,
    pub invariant: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.stage {
            Some(i) => write!(f, "stage {}: {}", i, self.invariant),
            None => f.write_str(&self.invariant),
        }
    }
}

fn violation(stage: impl Into<Option<usize>>, invariant: impl Into<String>) -> Violation {
    Violation { stage: stage.into(), invariant: invariant.into() }
}

/// Checks a strategy against the plan invariants. An empty result means the
/// strategy is well formed.
///
/// Invariants: at least one stage; stage kinds appear in canonical order,
/// each at most once; encoder-finetune, if present, must be first; every
/// stage trains exactly the canonical set for its kind; every dataset is
/// valid.
pub fn validate_strategy(spec: &StrategySpec) -> Vec<Violation> {
    let mut violations = Vec::new();
    if spec.id.is_empty() {
        violations.push(violation(None, "strategy id must be non-empty"));
    }
    if spec.stages.is_empty() {
        violations.push(violation(None, "strategy must contain at least one stage"));
        return violations;
    }

    let mut last_rank: Option<usize> = None;
    for (i, stage) in spec.stages.iter().enumerate() {
        if stage.kind == StageKind::EncoderFinetune && i > 0 {
            violations.push(violation(i, "encoder-finetune must be first"));
        } else if let Some(prev) = last_rank {
            if stage.kind.rank() == prev {
                violations.push(violation(i, format!("duplicate stage kind {}", stage.kind)));
            } else if stage.kind.rank() < prev {
                violations.push(violation(
                    i,
                    "stage kinds must appear in canonical order \
                     (encoder-finetune, alignment, llm-adaptation, full-joint)",
                ));
            }
        }
        last_rank = Some(stage.kind.rank());

        let mut expected = canonical_trainables(stage.kind);
        let mut actual = stage.trainable.clone();
        expected.sort_by_key(|t| t.module);
        actual.sort_by_key(|t| t.module);
        if expected != actual {
            violations.push(violation(
                i,
                format!("{} stage must train exactly its canonical module set", stage.kind),
            ));
        }

        if let Err(e) = stage.dataset.validate() {
            violations.push(violation(i, e.to_string()));
        }
    }
    violations
}

fn stage(kind: StageKind, convergence: Convergence, hours: f64) -> StageSpec {
    StageSpec::new(kind, convergence, DatasetSpec::with_hours(hours))
}

/// The seven reference strategies, all sized at `hours` of paired data.
///
/// S1 trains only the projection; S2 adds adapter-based adaptation of the
/// language model; S3 appends a joint stage over encoder, projection, and
/// adapter. S4 through S6 prepend an encoder finetune to S1 through S3.
/// The variant `S5-preliminary` runs its alignment stage only to
/// preliminary convergence.
pub fn builtin_strategies_with_hours(hours: f64) -> Vec<StrategySpec> {
    use Convergence::{Full, Preliminary};
    use StageKind::{Alignment, EncoderFinetune, FullJoint, LlmAdaptation};
    vec![
        StrategySpec::new("S1", vec![stage(Alignment, Full, hours)]),
        StrategySpec::new(
            "S2",
            vec![stage(Alignment, Full, hours), stage(LlmAdaptation, Full, hours)],
        ),
        StrategySpec::new(
            "S3",
            vec![
                stage(Alignment, Full, hours),
                stage(LlmAdaptation, Full, hours),
                stage(FullJoint, Full, hours),
            ],
        ),
        StrategySpec::new(
            "S4",
            vec![stage(EncoderFinetune, Full, hours), stage(Alignment, Full, hours)],
        ),
        StrategySpec::new(
            "S5",
            vec![
                stage(EncoderFinetune, Full, hours),
                stage(Alignment, Full, hours),
                stage(LlmAdaptation, Full, hours),
            ],
        ),
        StrategySpec::new(
            "S6",
            vec![
                stage(EncoderFinetune, Full, hours),
                stage(Alignment, Full, hours),
                stage(LlmAdaptation, Full, hours),
                stage(FullJoint, Full, hours),
            ],
        ),
        StrategySpec::new(
            "S5-preliminary",
            vec![
                stage(EncoderFinetune, Full, hours),
                stage(Alignment, Preliminary, hours),
                stage(LlmAdaptation, Full, hours),
            ],
        ),
    ]
}

/// `builtin_strategies_with_hours` at the reference volume of 10000 hours.
pub fn builtin_strategies() -> Vec<StrategySpec> {
    builtin_strategies_with_hours(10_000.0)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("invalid adapter: {0}")]
    InvalidAdapter(String),
    #[error("invalid module: {0}")]
    InvalidModule(String),
    #[error("invalid architecture: {0}")]
    InvalidArchitecture(String),
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_architecture_is_valid_and_ordered() {
        let arch = ArchitectureGraph::whisper_qwen_default();
        let roles: Vec<ModuleRole> = arch.modules().iter().map(|m| m.role).collect();
        assert_eq!(roles, ModuleRole::ALL);
        assert_eq!(arch.module(ModuleRole::SpeechEncoder).param_count, 307_000_000);
        assert_eq!(arch.module(ModuleRole::LanguageModel).param_count, 7_615_616_512);
        assert!(arch.module(ModuleRole::LanguageModel).adapter.is_some());
        assert!(arch.module(ModuleRole::SpeechEncoder).adapter.is_none());
    }

    #[test]
    fn architecture_rejects_misordered_or_missing_roles() {
        let enc = ModuleSpec::new("e", ModuleRole::SpeechEncoder, 10);
        let proj = ModuleSpec::new("p", ModuleRole::Projection, 5);
        let llm = ModuleSpec::new("l", ModuleRole::LanguageModel, 100);
        assert!(ArchitectureGraph::new(vec![proj.clone(), enc.clone(), llm.clone()]).is_err());
        assert!(ArchitectureGraph::new(vec![enc.clone(), proj.clone()]).is_err());
        assert!(ArchitectureGraph::new(vec![enc, proj, llm]).is_ok());
    }

    #[test]
    fn adapter_validation_catches_bad_fields() {
        let mut adapter = AdapterSpec::qwen25_7b_default();
        assert!(adapter.validate().is_ok());
        adapter.rank = 0;
        assert!(adapter.validate().is_err());
        adapter.rank = 64;
        adapter.targets_per_layer = 6;
        assert!(adapter.validate().is_err());
    }

    #[test]
    fn builtin_strategies_cover_all_seven_and_validate() {
        let strategies = builtin_strategies();
        let ids: Vec<&str> = strategies.iter().map(|s| s.id.as_str()).collect();
        assert_eq!(ids, ["S1", "S2", "S3", "S4", "S5", "S6", "S5-preliminary"]);
        for s in &strategies {
            assert!(validate_strategy(s).is_empty(), "{} should validate", s.id);
        }
        let s5p = &strategies[6];
        assert_eq!(s5p.stages[1].kind, StageKind::Alignment);
        assert_eq!(s5p.stages[1].convergence, Convergence::Preliminary);
        let s5 = &strategies[4];
        assert_eq!(s5.stages[1].convergence, Convergence::Full);
        for st in &strategies[0].stages {
            assert_eq!(st.dataset.hours, 10_000.0);
        }
    }

    #[test]
    fn stage_trainable_sets_are_canonical() {
        let s6 = &builtin_strategies()[5];
        assert_eq!(s6.stages[0].trainable, vec![Trainable::base(ModuleRole::SpeechEncoder)]);
        assert_eq!(s6.stages[1].trainable, vec![Trainable::base(ModuleRole::Projection)]);
        assert_eq!(
            s6.stages[2].trainable,
            vec![
                Trainable::base(ModuleRole::Projection),
                Trainable::adapter_only(ModuleRole::LanguageModel)
            ]
        );
        assert_eq!(s6.stages[3].trainable.len(), 3);
    }

    #[test]
    fn validate_rejects_encoder_finetune_after_other_stages() {
        let spec = StrategySpec::new(
            "bad",
            vec![
                stage(StageKind::Alignment, Convergence::Full, 100.0),
                stage(StageKind::EncoderFinetune, Convergence::Full, 100.0),
            ],
        );
        let violations = validate_strategy(&spec);
        assert!(
            violations.iter().any(|v| v.invariant == "encoder-finetune must be first"
                && v.stage == Some(1)),
            "got: {violations:?}"
        );
    }

    #[test]
    fn validate_rejects_duplicates_disorder_and_empty() {
        let dup = StrategySpec::new(
            "dup",
            vec![
                stage(StageKind::Alignment, Convergence::Full, 1.0),
                stage(StageKind::Alignment, Convergence::Full, 1.0),
            ],
        );
        assert!(validate_strategy(&dup)
            .iter()
            .any(|v| v.invariant.contains("duplicate stage kind")));

        let disorder = StrategySpec::new(
            "disorder",
            vec![
                stage(StageKind::LlmAdaptation, Convergence::Full, 1.0),
                stage(StageKind::Alignment, Convergence::Full, 1.0),
            ],
        );
        assert!(validate_strategy(&disorder)
            .iter()
            .any(|v| v.invariant.contains("canonical order")));

        let empty = StrategySpec::new("empty", vec![]);
        assert!(!validate_strategy(&empty).is_empty());
    }

    #[test]
    fn validate_rejects_noncanonical_trainables_and_bad_dataset() {
        let mut spec = StrategySpec::new(
            "custom",
            vec![stage(StageKind::Alignment, Convergence::Full, 1.0)],
        );
        spec.stages[0].trainable = vec![Trainable::base(ModuleRole::SpeechEncoder)];
        assert!(validate_strategy(&spec)
            .iter()
            .any(|v| v.invariant.contains("canonical module set")));

        let mut spec = StrategySpec::new(
            "bad-data",
            vec![stage(StageKind::Alignment, Convergence::Full, 1.0)],
        );
        spec.stages[0].dataset.frame_rate = 0.0;
        assert!(validate_strategy(&spec)
            .iter()
            .any(|v| v.invariant.contains("frame_rate")));
    }

    #[test]
    fn serde_round_trip_uses_kebab_case_names() {
        let strategies = builtin_strategies();
        let json = serde_json::to_string(&strategies[6]).unwrap();
        assert!(json.contains("\"encoder-finetune\""));
        assert!(json.contains("\"preliminary\""));
        assert!(json.contains("\"llm-adaptation\""));
        let back: StrategySpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, strategies[6]);
    }

    #[test]
    fn stage_deserialization_defaults_trainables_via_normalized() {
        let json = r#"{"kind":"llm-adaptation","dataset":{"hours":100.0}}"#;
        let stage: StageSpec = serde_json::from_str(json).unwrap();
        assert!(stage.trainable.is_empty());
        let stage = stage.normalized();
        assert_eq!(stage.trainable, canonical_trainables(StageKind::LlmAdaptation));
        assert_eq!(stage.convergence, Convergence::Full);
        assert_eq!(stage.dataset.frame_rate, 50.0);
        assert_eq!(stage.dataset.downsample, 4);
        assert_eq!(stage.dataset.text_tokens_per_second, 3.0);
        assert_eq!(stage.dataset.epochs, 1.0);
    }
}
