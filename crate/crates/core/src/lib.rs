//! Budget planning and scaling-law analysis for multi-stage LLM-ASR
//! training: describe an architecture and a staged training strategy, cost
//! it in FLOPs, score transcripts, fit power-law scaling curves, and
//! compare strategies on the error/compute plane.

pub mod analysis;
pub mod chart;
pub mod config;
pub mod fit;
pub mod fixtures;
pub mod flops;
pub mod ingest;
pub mod metrics;
pub mod model;
pub mod store;

pub use analysis::{
    compare_strategies, detect_convergence, pareto_frontier, stage_cost_decomposition,
    CheckpointCurve, CheckpointPoint, ComparisonRow, ConvergencePolicy, StageCostFit,
    StrategyOutcome,
};
pub use chart::{render_chart, Axes, ChartSpec, LabeledFit, Series};
pub use config::ConfigDocument;
pub use fit::{
    fit_power_law, fit_saturating_power_law, predict_error, r_squared, required_budget,
    FitMethod, GridSearchConfig, PowerLawFit, SamplePoint, Space,
};
pub use fixtures::load_fixtures;
pub use flops::{
    adapter_params, effective_params, stage_flops, strategy_flops, token_budget,
    CostModelConfig, FlopsBreakdown, StrategyFlops, TokenCounts,
};
pub use ingest::{parse_runs_csv, serialize_runs_csv, RunRecord, Source};
pub use metrics::{
    average_cer, corpus_cer, edit_distance, normalize, relative_reduction, round_half_up,
    NormalizationOptions, TestSetScore, UtterancePair,
};
pub use model::{
    builtin_strategies, builtin_strategies_with_hours, validate_strategy, AdapterSpec,
    ArchitectureGraph, Convergence, DatasetSpec, ModuleRole, ModuleSpec, ScalingVariable,
    StageKind, StageSpec, StrategySpec, Trainable,
};
pub use store::{RunStore, StoreFilter};
