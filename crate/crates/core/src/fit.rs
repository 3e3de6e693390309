//! Power-law fitting over (budget, error) samples: closed-form log-log
//! least squares, a damped Gauss-Newton refiner, and a saturating variant
//! with an irreducible error floor found by grid search.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One observation: a compute budget in 1e15-FLOP units (or any positive
/// scaling variable) and the error reached at that budget, in percent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplePoint {
    pub budget: f64,
    pub error: f64,
}

impl SamplePoint {
    pub fn new(budget: f64, error: f64) -> Self {
        SamplePoint { budget, error }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FitMethod {
    #[serde(rename = "loglog-ols")]
    LogLogOls,
    #[serde(rename = "nonlinear-ls")]
    NonlinearLs,
}

impl std::fmt::Display for FitMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FitMethod::LogLogOls => "loglog-ols",
            FitMethod::NonlinearLs => "nonlinear-ls",
        })
    }
}

/// A fitted curve `error = l_infinity + beta * budget^alpha`.
///
/// `degenerate` marks fits of constant data, where the curve collapses to
/// the constant itself (for the saturating form, `beta` is 0 there and the
/// constant lives in `l_infinity`). Such fits predict but do not invert.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub alpha: f64,
    pub beta: f64,
    pub l_infinity: f64,
    pub method: FitMethod,
    pub r2_log: f64,
    pub r2_linear: f64,
    pub n_points: usize,
    #[serde(default, skip_serializing_if = "is_false")]
    pub degenerate: bool,
}

fn is_false(b: &bool) -> bool {
    !*b
}

/// Search settings for the error floor of the saturating form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridSearchConfig {
    /// Number of floor candidates between 0 and just under the smallest
    /// observed error.
    pub grid_size: usize,
    /// The floor may approach the smallest error only up to a factor
    /// of (1 - epsilon).
    pub epsilon: f64,
    /// Refine the winning candidate with a joint nonlinear pass.
    pub polish: bool,
}

impl Default for GridSearchConfig {
    fn default() -> Self {
        GridSearchConfig { grid_size: 1000, epsilon: 1e-3, polish: true }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("point {index}: {field} must be positive and finite")]
    NonPositive { index: usize, field: &'static str },
    #[error("all budgets identical: the exponent is unidentifiable")]
    IdenticalBudgets,
    #[error("target {target} is unattainable: the curve never goes below {floor}")]
    UnattainableTarget { target: f64, floor: f64 },
    #[error("fit is not invertible (alpha = {alpha}, beta = {beta})")]
    NonInvertible { alpha: f64, beta: f64 },
    #[error("budget must be positive and finite")]
    NonPositiveBudget,
    #[error("all observations equal: R-squared is undefined")]
    DegenerateObservations,
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
}

fn validate_points(points: &[SamplePoint], needed: usize) -> Result<(), FitError> {
    if points.len() < needed {
        return Err(FitError::TooFewPoints { needed, got: points.len() });
    }
    for (index, p) in points.iter().enumerate() {
        if !(p.budget > 0.0) || !p.budget.is_finite() {
            return Err(FitError::NonPositive { index, field: "budget" });
        }
        if !(p.error > 0.0) || !p.error.is_finite() {
            return Err(FitError::NonPositive { index, field: "error" });
        }
    }
    Ok(())
}

/// Points in canonical (budget, error) order, so summation order and hence
/// the exact fitted values do not depend on input permutation.
fn sorted(points: &[SamplePoint]) -> Vec<SamplePoint> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| {
        a.budget.partial_cmp(&b.budget).unwrap().then(a.error.partial_cmp(&b.error).unwrap())
    });
    pts
}

/// Centered ordinary least squares of v on u; returns (slope, intercept).
fn ols(u: &[f64], v: &[f64]) -> Result<(f64, f64), FitError> {
    let n = u.len() as f64;
    let u_bar = u.iter().sum::<f64>() / n;
    let v_bar = v.iter().sum::<f64>() / n;
    let mut suu = 0.0;
    let mut suv = 0.0;
    for (x, y) in u.iter().zip(v) {
        suu += (x - u_bar) * (x - u_bar);
        suv += (x - u_bar) * (y - v_bar);
    }
    if suu == 0.0 {
        return Err(FitError::IdenticalBudgets);
    }
    let slope = suv / suu;
    Ok((slope, v_bar - slope * u_bar))
}

fn curve(alpha: f64, beta: f64, l_inf: f64, budget: f64) -> f64 {
    l_inf + beta * budget.powf(alpha)
}

/// (SS_res, SS_tot) of predictions against observations.
fn sum_of_squares(obs: &[f64], pred: &[f64]) -> (f64, f64) {
    let mean = obs.iter().sum::<f64>() / obs.len() as f64;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for (o, p) in obs.iter().zip(pred) {
        ss_res += (o - p) * (o - p);
        ss_tot += (o - mean) * (o - mean);
    }
    (ss_res, ss_tot)
}

fn r2_linear_of(points: &[SamplePoint], alpha: f64, beta: f64, l_inf: f64) -> Option<f64> {
    let obs: Vec<f64> = points.iter().map(|p| p.error).collect();
    let pred: Vec<f64> = points.iter().map(|p| curve(alpha, beta, l_inf, p.budget)).collect();
    let (ss_res, ss_tot) = sum_of_squares(&obs, &pred);
    (ss_tot > 0.0).then(|| 1.0 - ss_res / ss_tot)
}

/// Log-space R², skipping observations at or below the floor. Predictions
/// above the floor by construction (beta > 0).
fn r2_log_of(
    points: &[SamplePoint],
    alpha: f64,
    beta: f64,
    l_inf: f64,
) -> Option<(f64, usize)> {
    let ln_beta = beta.ln();
    let mut obs = Vec::with_capacity(points.len());
    let mut pred = Vec::with_capacity(points.len());
    let mut skipped = 0;
    for p in points {
        if p.error > l_inf {
            obs.push((p.error - l_inf).ln());
            pred.push(ln_beta + alpha * p.budget.ln());
        } else {
            skipped += 1;
        }
    }
    if obs.len() < 2 {
        return None;
    }
    let (ss_res, ss_tot) = sum_of_squares(&obs, &pred);
    (ss_tot > 0.0).then(|| (1.0 - ss_res / ss_tot, skipped))
}

/// Solves the square system a·x = b in place by Gaussian elimination with
/// partial pivoting. Dimensions are tiny (2 or 3).
fn solve_in_place(a: &mut [Vec<f64>], b: &mut [f64]) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in row + 1..n {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    Some(x)
}

fn ssr(points: &[SamplePoint], alpha: f64, beta: f64, l_inf: f64) -> f64 {
    points
        .iter()
        .map(|p| {
            let r = p.error - curve(alpha, beta, l_inf, p.budget);
            r * r
        })
        .sum()
}

/// Damped Gauss-Newton (Levenberg-style) refinement of the squared-error
/// objective, over (alpha, beta) or (alpha, beta, l_infinity). Stops when
/// the relative parameter change drops below 1e-10 or after 200 rounds.
fn refine(
    points: &[SamplePoint],
    mut alpha: f64,
    mut beta: f64,
    mut l_inf: f64,
    fit_floor: bool,
) -> (f64, f64, f64) {
    let n_params = if fit_floor { 3 } else { 2 };
    let mut lambda = 1e-3;
    let mut current = ssr(points, alpha, beta, l_inf);
    for _ in 0..200 {
        // Normal equations J^T J and J^T r for r_i = y_i - f(x_i).
        let mut jtj = vec![vec![0.0; n_params]; n_params];
        let mut jtr = vec![0.0; n_params];
        for p in points {
            let xa = p.budget.powf(alpha);
            let r = p.error - (l_inf + beta * xa);
            let grad = [-beta * xa * p.budget.ln(), -xa, -1.0];
            for i in 0..n_params {
                jtr[i] += grad[i] * r;
                for j in 0..n_params {
                    jtj[i][j] += grad[i] * grad[j];
                }
            }
        }

        let mut step = None;
        for _ in 0..40 {
            let mut a = jtj.clone();
            for (i, row) in a.iter_mut().enumerate() {
                row[i] += lambda * jtj[i][i].max(1e-300);
            }
            let mut rhs: Vec<f64> = jtr.iter().map(|g| -g).collect();
            if let Some(delta) = solve_in_place(&mut a, &mut rhs) {
                let candidate = (
                    alpha + delta[0],
                    beta + delta[1],
                    if fit_floor { (l_inf + delta[2]).max(0.0) } else { l_inf },
                );
                if candidate.1 > 0.0 {
                    let next = ssr(points, candidate.0, candidate.1, candidate.2);
                    if next.is_finite() && next <= current {
                        step = Some((candidate, next, delta));
                        break;
                    }
                }
            }
            lambda *= 3.0;
            if lambda > 1e12 {
                break;
            }
        }

        let Some(((a2, b2, l2), next, delta)) = step else { break };
        let scale = |v: f64, p: f64| v.abs() / p.abs().max(1e-12);
        let change = scale(delta[0], alpha)
            .max(scale(delta[1], beta))
            .max(if fit_floor { scale(delta[2], l_inf.max(1e-12)) } else { 0.0 });
        alpha = a2;
        beta = b2;
        l_inf = l2;
        current = next;
        lambda = (lambda / 3.0).max(1e-12);
        if change < 1e-10 {
            break;
        }
    }
    (alpha, beta, l_inf)
}

fn assemble(
    points: &[SamplePoint],
    alpha: f64,
    beta: f64,
    l_inf: f64,
    method: FitMethod,
    n_points: usize,
) -> PowerLawFit {
    // Constant observations leave R² undefined; the curve reproduces them
    // exactly, so report 1 and flag the fit.
    let r2_linear = r2_linear_of(points, alpha, beta, l_inf);
    let r2_log = r2_log_of(points, alpha, beta, l_inf).map(|(v, _)| v);
    let degenerate = r2_linear.is_none();
    PowerLawFit {
        alpha,
        beta,
        l_infinity: l_inf,
        method,
        r2_log: r2_log.unwrap_or(1.0),
        r2_linear: r2_linear.unwrap_or(1.0),
        n_points,
        degenerate,
    }
}

/// Fits `error = beta * budget^alpha`.
///
/// Log-log OLS regresses ln(error) on ln(budget) in closed form. The
/// nonlinear method minimizes squared error in linear space, starting from
/// the OLS solution. Duplicate budgets are allowed and simply weigh in.
pub fn fit_power_law(points: &[SamplePoint], method: FitMethod) -> Result<PowerLawFit, FitError> {
    validate_points(points, 2)?;
    let pts = sorted(points);
    let ln_x: Vec<f64> = pts.iter().map(|p| p.budget.ln()).collect();
    let ln_y: Vec<f64> = pts.iter().map(|p| p.error.ln()).collect();
    let (alpha, intercept) = ols(&ln_x, &ln_y)?;
    let beta = intercept.exp();
    let (alpha, beta) = match method {
        FitMethod::LogLogOls => (alpha, beta),
        FitMethod::NonlinearLs => {
            let (a, b, _) = refine(&pts, alpha, beta, 0.0, false);
            (a, b)
        }
    };
    Ok(assemble(&pts, alpha, beta, 0.0, method, points.len()))
}

/// Fits `error = l_infinity + beta * budget^alpha` with `l_infinity >= 0`.
///
/// The floor is grid-searched over [0, min(error)·(1 - epsilon)]; each
/// candidate is scored by log-space R² of the OLS fit on the shifted
/// errors using that candidate's own transform, ties broken toward the
/// smaller floor. The winner is optionally polished by a joint nonlinear
/// pass over all three parameters.
pub fn fit_saturating_power_law(
    points: &[SamplePoint],
    grid: &GridSearchConfig,
) -> Result<PowerLawFit, FitError> {
    validate_points(points, 3)?;
    if grid.grid_size < 2 {
        return Err(FitError::InvalidGrid("grid_size must be at least 2".into()));
    }
    if !(grid.epsilon > 0.0 && grid.epsilon < 1.0) {
        return Err(FitError::InvalidGrid("epsilon must be in (0, 1)".into()));
    }
    let pts = sorted(points);

    let first = pts[0].error;
    if pts.iter().all(|p| p.error == first) {
        let method = if grid.polish { FitMethod::NonlinearLs } else { FitMethod::LogLogOls };
        return Ok(PowerLawFit {
            alpha: 0.0,
            beta: 0.0,
            l_infinity: first,
            method,
            r2_log: 1.0,
            r2_linear: 1.0,
            n_points: points.len(),
            degenerate: true,
        });
    }

    let min_error = pts.iter().map(|p| p.error).fold(f64::INFINITY, f64::min);
    let upper = min_error * (1.0 - grid.epsilon);
    let ln_x: Vec<f64> = pts.iter().map(|p| p.budget.ln()).collect();

    let mut best: Option<(f64, f64, f64, f64)> = None; // (r2, l, alpha, beta)
    for i in 0..grid.grid_size {
        let l = upper * i as f64 / (grid.grid_size - 1) as f64;
        let ln_shifted: Vec<f64> = pts.iter().map(|p| (p.error - l).ln()).collect();
        let (slope, intercept) = ols(&ln_x, &ln_shifted)?;
        let beta = intercept.exp();
        let Some((r2, _)) = r2_log_of(&pts, slope, beta, l) else { continue };
        // Strict comparison keeps the smallest floor on ties because the
        // grid ascends.
        if best.map_or(true, |(best_r2, ..)| r2 > best_r2) {
            best = Some((r2, l, slope, beta));
        }
    }
    let (_, l, alpha, beta) = best.ok_or(FitError::DegenerateObservations)?;

    let (alpha, beta, l, method) = if grid.polish {
        let (a, b, l2) = refine(&pts, alpha, beta, l, true);
        (a, b, l2, FitMethod::NonlinearLs)
    } else {
        (alpha, beta, l, FitMethod::LogLogOls)
    };
    Ok(assemble(&pts, alpha, beta, l, method, points.len()))
}

/// Evaluates the fitted curve at a budget.
pub fn predict_error(fit: &PowerLawFit, budget: f64) -> Result<f64, FitError> {
    if !(budget > 0.0) || !budget.is_finite() {
        return Err(FitError::NonPositiveBudget);
    }
    Ok(curve(fit.alpha, fit.beta, fit.l_infinity, budget))
}

/// Inverts the curve: the budget at which it reaches `target_error`.
pub fn required_budget(fit: &PowerLawFit, target_error: f64) -> Result<f64, FitError> {
    if !(target_error > fit.l_infinity) {
        return Err(FitError::UnattainableTarget { target: target_error, floor: fit.l_infinity });
    }
    if fit.alpha >= 0.0 || !(fit.beta > 0.0) {
        return Err(FitError::NonInvertible { alpha: fit.alpha, beta: fit.beta });
    }
    Ok(((target_error - fit.l_infinity) / fit.beta).powf(1.0 / fit.alpha))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Space {
    Log,
    Linear,
}

/// R² of a fit against points, with the count of points skipped by the
/// log transform (those at or below the floor).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RSquaredReport {
    pub value: f64,
    pub skipped: usize,
}

/// Coefficient of determination in the requested space.
pub fn r_squared(
    fit: &PowerLawFit,
    points: &[SamplePoint],
    space: Space,
) -> Result<RSquaredReport, FitError> {
    validate_points(points, 2)?;
    let pts = sorted(points);
    match space {
        Space::Linear => r2_linear_of(&pts, fit.alpha, fit.beta, fit.l_infinity)
            .map(|value| RSquaredReport { value, skipped: 0 })
            .ok_or(FitError::DegenerateObservations),
        Space::Log => r2_log_of(&pts, fit.alpha, fit.beta, fit.l_infinity)
            .map(|(value, skipped)| RSquaredReport { value, skipped })
            .ok_or(FitError::DegenerateObservations),
    }
}
