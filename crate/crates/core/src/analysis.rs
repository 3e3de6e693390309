//! Strategy comparison on the (compute, error) plane: Pareto frontiers,
//! baseline-relative reports, convergence detection on checkpoint curves,
//! and linear decomposition of stage costs across data scales.

use crate::metrics::relative_reduction;
use crate::model::{Convergence, StageKind};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One completed strategy run reduced to its two decision axes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyOutcome {
    pub strategy_id: String,
    pub data_hours: f64,
    /// Average CER in percent; positive.
    pub avg_cer: f64,
    /// Total training compute in 1e15 FLOPs; positive.
    pub total_flops: f64,
}

impl StrategyOutcome {
    pub fn new(strategy_id: impl Into<String>, data_hours: f64, avg_cer: f64, total_flops: f64) -> Self {
        StrategyOutcome { strategy_id: strategy_id.into(), data_hours, avg_cer, total_flops }
    }
}

/// Non-strict dominance on both axes with at least one strict inequality.
pub fn dominates(a: &StrategyOutcome, b: &StrategyOutcome) -> bool {
    a.total_flops <= b.total_flops
        && a.avg_cer <= b.avg_cer
        && (a.total_flops < b.total_flops || a.avg_cer < b.avg_cer)
}

/// Outcomes not dominated by any other outcome, sorted by total FLOPs
/// ascending. Exact duplicates are all retained: neither dominates the
/// other.
pub fn pareto_frontier(outcomes: &[StrategyOutcome]) -> Vec<StrategyOutcome> {
    let mut sorted: Vec<&StrategyOutcome> = outcomes.iter().collect();
    sorted.sort_by(|a, b| {
        a.total_flops
            .total_cmp(&b.total_flops)
            .then(a.avg_cer.total_cmp(&b.avg_cer))
    });

    let mut frontier = Vec::new();
    let mut best_cer = f64::INFINITY;
    let mut i = 0;
    while i < sorted.len() {
        // One group of equal-FLOPs outcomes at a time; within a group only
        // the minimum-CER entries can survive, and only if nothing cheaper
        // already reached that CER.
        let mut j = i;
        while j < sorted.len() && sorted[j].total_flops == sorted[i].total_flops {
            j += 1;
        }
        let group_min = sorted[i].avg_cer;
        if group_min < best_cer {
            for q in &sorted[i..j] {
                if q.avg_cer == group_min {
                    frontier.push((*q).clone());
                }
            }
            best_cer = group_min;
        }
        i = j;
    }
    frontier
}

/// One row of a baseline-relative comparison. `cerr_vs_baseline` is the
/// fractional CER reduction relative to the baseline; `flops_ratio_vs_baseline`
/// is this row's compute over the baseline's.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub strategy_id: String,
    pub avg_cer: f64,
    pub total_flops: f64,
    pub cerr_vs_baseline: f64,
    pub flops_ratio_vs_baseline: f64,
}

/// Reports every outcome against the named baseline, in input order.
pub fn compare_strategies(
    outcomes: &[StrategyOutcome],
    baseline_id: &str,
) -> Result<Vec<ComparisonRow>, AnalysisError> {
    let mut matches = outcomes.iter().filter(|o| o.strategy_id == baseline_id);
    let baseline = matches
        .next()
        .ok_or_else(|| AnalysisError::MissingBaseline { id: baseline_id.to_string() })?;
    if matches.next().is_some() {
        return Err(AnalysisError::AmbiguousBaseline { id: baseline_id.to_string() });
    }
    if !(baseline.total_flops > 0.0) {
        return Err(AnalysisError::InvalidOutcome {
            strategy_id: baseline.strategy_id.clone(),
            reason: "total_flops must be positive".into(),
        });
    }
    outcomes
        .iter()
        .map(|row| {
            let cerr = relative_reduction(baseline.avg_cer, row.avg_cer).map_err(|e| {
                AnalysisError::InvalidOutcome {
                    strategy_id: baseline.strategy_id.clone(),
                    reason: e.to_string(),
                }
            })?;
            Ok(ComparisonRow {
                strategy_id: row.strategy_id.clone(),
                avg_cer: row.avg_cer,
                total_flops: row.total_flops,
                cerr_vs_baseline: cerr,
                flops_ratio_vs_baseline: row.total_flops / baseline.total_flops,
            })
        })
        .collect()
}

/// One checkpoint on a training trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointPoint {
    pub cumulative_flops: f64,
    pub avg_cer: f64,
    pub stage_kind: StageKind,
}

/// A training trajectory: checkpoints with strictly increasing cumulative
/// compute and positive CERs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<CheckpointPoint>", into = "Vec<CheckpointPoint>")]
pub struct CheckpointCurve {
    points: Vec<CheckpointPoint>,
}

impl CheckpointCurve {
    pub fn new(points: Vec<CheckpointPoint>) -> Result<Self, AnalysisError> {
        for (i, p) in points.iter().enumerate() {
            if !(p.avg_cer > 0.0) || !p.avg_cer.is_finite() {
                return Err(AnalysisError::InvalidCurve {
                    index: i,
                    reason: "avg_cer must be positive and finite".into(),
                });
            }
            if !p.cumulative_flops.is_finite() {
                return Err(AnalysisError::InvalidCurve {
                    index: i,
                    reason: "cumulative_flops must be finite".into(),
                });
            }
            if i > 0 && p.cumulative_flops <= points[i - 1].cumulative_flops {
                return Err(AnalysisError::InvalidCurve {
                    index: i,
                    reason: "cumulative_flops must be strictly increasing".into(),
                });
            }
        }
        Ok(CheckpointCurve { points })
    }

    pub fn points(&self) -> &[CheckpointPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

impl TryFrom<Vec<CheckpointPoint>> for CheckpointCurve {
    type Error = AnalysisError;
    fn try_from(points: Vec<CheckpointPoint>) -> Result<Self, Self::Error> {
        CheckpointCurve::new(points)
    }
}

impl From<CheckpointCurve> for Vec<CheckpointPoint> {
    fn from(curve: CheckpointCurve) -> Self {
        curve.points
    }
}

/// When to consider a stage converged: relative CER improvement across a
/// trailing window of checkpoints falling under a threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConvergencePolicy {
    pub window: usize,
    pub preliminary_threshold: f64,
    pub full_threshold: f64,
}

impl Default for ConvergencePolicy {
    fn default() -> Self {
        ConvergencePolicy { window: 3, preliminary_threshold: 0.05, full_threshold: 0.01 }
    }
}

impl ConvergencePolicy {
    pub fn validate(&self) -> Result<(), AnalysisError> {
        if self.window < 2 {
            return Err(AnalysisError::InvalidPolicy("window must be at least 2".into()));
        }
        let (p, f) = (self.preliminary_threshold, self.full_threshold);
        if !(f > 0.0 && f <= p && p < 1.0) {
            return Err(AnalysisError::InvalidPolicy(
                "thresholds must satisfy 0 < full <= preliminary < 1".into(),
            ));
        }
        Ok(())
    }

    pub fn threshold(&self, level: Convergence) -> f64 {
        match level {
            Convergence::Preliminary => self.preliminary_threshold,
            Convergence::Full => self.full_threshold,
        }
    }
}

/// First checkpoint index at which the relative improvement across the
/// trailing window drops below the level's threshold, if any.
pub fn detect_convergence(
    curve: &CheckpointCurve,
    policy: &ConvergencePolicy,
    level: Convergence,
) -> Result<Option<usize>, AnalysisError> {
    policy.validate()?;
    if curve.len() < policy.window {
        return Err(AnalysisError::CurveTooShort { len: curve.len(), window: policy.window });
    }
    let threshold = policy.threshold(level);
    let cers: Vec<f64> = curve.points().iter().map(|p| p.avg_cer).collect();
    for i in policy.window - 1..cers.len() {
        let start = cers[i + 1 - policy.window];
        let improvement = (start - cers[i]) / start;
        if improvement < threshold {
            return Ok(Some(i));
        }
    }
    Ok(None)
}

/// Least-squares line of total FLOPs against data hours.
///
/// The intercept captures per-strategy fixed costs (a stage run once on a
/// fixed corpus regardless of the scaled dataset); the slope is reported
/// per 1000 hours to match how data scales are tabulated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageCostFit {
    pub slope_per_1000_hours: f64,
    pub intercept: f64,
    pub residual_max_relative: f64,
}

/// Decomposes one strategy's cost across data scales into variable and
/// fixed parts by ordinary least squares.
pub fn stage_cost_decomposition(runs: &[StrategyOutcome]) -> Result<StageCostFit, AnalysisError> {
    if runs.len() < 2 {
        return Err(AnalysisError::TooFewRuns { got: runs.len() });
    }
    if runs.iter().any(|r| r.strategy_id != runs[0].strategy_id) {
        return Err(AnalysisError::MixedStrategies);
    }
    if runs.iter().all(|r| r.data_hours == runs[0].data_hours) {
        return Err(AnalysisError::AllHoursEqual);
    }
    for r in runs {
        if !(r.total_flops > 0.0) {
            return Err(AnalysisError::InvalidOutcome {
                strategy_id: r.strategy_id.clone(),
                reason: "total_flops must be positive".into(),
            });
        }
    }

    let n = runs.len() as f64;
    let x_bar = runs.iter().map(|r| r.data_hours).sum::<f64>() / n;
    let y_bar = runs.iter().map(|r| r.total_flops).sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for r in runs {
        sxx += (r.data_hours - x_bar) * (r.data_hours - x_bar);
        sxy += (r.data_hours - x_bar) * (r.total_flops - y_bar);
    }
    let slope = sxy / sxx;
    let intercept = y_bar - slope * x_bar;
    let residual_max_relative = runs
        .iter()
        .map(|r| ((slope * r.data_hours + intercept) - r.total_flops).abs() / r.total_flops)
        .fold(0.0, f64::max);
    Ok(StageCostFit { slope_per_1000_hours: slope * 1000.0, intercept, residual_max_relative })
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("baseline {id} not found in outcomes")]
    MissingBaseline { id: String },
    #[error("baseline {id} matches more than one outcome")]
    AmbiguousBaseline { id: String },
    #[error("invalid outcome for {strategy_id}: {reason}")]
    InvalidOutcome { strategy_id: String, reason: String },
    #[error("invalid checkpoint {index}: {reason}")]
    InvalidCurve { index: usize, reason: String },
    #[error("invalid convergence policy: {0}")]
    InvalidPolicy(String),
    #[error("curve has {len} checkpoints but the window needs {window}")]
    CurveTooShort { len: usize, window: usize },
    #[error("need at least 2 runs, got {got}")]
    TooFewRuns { got: usize },
    #[error("cost decomposition expects runs of a single strategy")]
    MixedStrategies,
    #[error("all runs share one data_hours value: the slope is unidentifiable")]
    AllHoursEqual,
}
