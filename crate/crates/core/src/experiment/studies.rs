//! The four study kinds.

use std::time::{Duration, Instant};

use crate::discretizer::{
    equidistant_frontier, estimate_frontier, estimate_frontier_point, invert_cost_for_budget, FrontierPoint,
    FrontierSample,
};
use crate::error::{Error, Result};
use crate::fit::{fit_log_log, FitPoint, LogLogFit, MIN_FIT_POINTS};
use crate::montecarlo::{run_paths, Estimate, McSettings};
use crate::path::simulate_path_until_exit;
use crate::stable::{mean_exit_time, overshoot_moment, squared_integral_per_time, Barriers};

use super::config::{Experiment, ExperimentKind, RuleConfig, StepScaling};
use crate::market::IntegrandSpec;

/// Frontier points needed by the rate comparison.
pub const MIN_FRONTIER_POINTS: usize = 4;

/// Pre-asymptotic points dropped from the large-`ε` end of a fit.
pub const PRE_ASYMPTOTIC_POINTS: usize = 2;

/// A slope fit with the number of leading points it skipped.
#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub label: String,
    pub fit: LogLogFit,
    pub excluded: usize,
    pub expected_slope: Option<f64>,
}

/// `(value, standard error)`.
pub type Scaled = (f64, f64);

#[derive(Debug, Clone, PartialEq)]
pub struct ScaledCost {
    pub beta: f64,
    /// `ε^{α-β} Ĉ^β(ε)`.
    pub scaled: Scaled,
    pub limit: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub point: FrontierPoint,
    /// `ε^{-2} Ê(ε)`.
    pub scaled_error: Scaled,
    pub limit_error: Option<f64>,
    pub costs: Vec<ScaledCost>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceResult {
    pub rows: Vec<ConvergenceRow>,
    pub fits: Vec<FitReport>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrontierResult {
    pub points: Vec<FrontierPoint>,
    pub fits: Vec<FitReport>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchedBudget {
    pub budget: f64,
    pub hitting_error: f64,
    /// `None` when the budget falls outside the equidistant cost range.
    pub equidistant_error: Option<f64>,
}

impl MatchedBudget {
    pub fn ratio(&self) -> Option<f64> {
        self.equidistant_error.map(|e| self.hitting_error / e)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateComparisonResult {
    pub hitting: Vec<FrontierPoint>,
    pub equidistant: Vec<(u64, FrontierPoint)>,
    pub hitting_fit: FitReport,
    pub equidistant_fit: FitReport,
    /// One entry per hitting-rule point inside the fitted range.
    pub matched: Vec<MatchedBudget>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OvershootRow {
    pub beta: f64,
    pub estimate: Estimate,
    pub target: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RescalingRow {
    pub epsilon: f64,
    /// `λ_0 E[τ^ε]` on the rescaled clock.
    pub exit_time: Estimate,
    pub exit_target: f64,
    pub overshoots: Vec<OvershootRow>,
    /// Paths still inside the band at the horizon.
    pub censored: u64,
}

/// Relative deviation `estimate/target - 1` with its standard error.
pub fn relative_deviation(e: &Estimate, target: f64) -> Scaled {
    (e.mean / target - 1.0, e.std_error / target)
}

impl RescalingRow {
    pub fn exit_deviation(&self) -> Scaled {
        relative_deviation(&self.exit_time, self.exit_target)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RescalingResult {
    pub rows: Vec<RescalingRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StudyKind {
    Convergence(ConvergenceResult),
    RateComparison(Box<RateComparisonResult>),
    Rescaling(RescalingResult),
    Frontier(FrontierResult),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyResult {
    pub study: StudyKind,
    /// Wall time; reported on stderr, never written to result files.
    pub runtime: Duration,
}

impl StudyResult {
    pub fn fits(&self) -> Vec<&FitReport> {
        match &self.study {
            StudyKind::Convergence(c) => c.fits.iter().collect(),
            StudyKind::Frontier(f) => f.fits.iter().collect(),
            StudyKind::RateComparison(r) => vec![&r.hitting_fit, &r.equidistant_fit],
            StudyKind::Rescaling(_) => Vec::new(),
        }
    }

    /// Hitting-rule frontier points, if the study produced any.
    pub fn hitting_points(&self) -> Vec<&FrontierPoint> {
        match &self.study {
            StudyKind::Convergence(c) => c.rows.iter().map(|r| &r.point).collect(),
            StudyKind::Frontier(f) => f.points.iter().collect(),
            StudyKind::RateComparison(r) => r.hitting.iter().collect(),
            StudyKind::Rescaling(_) => Vec::new(),
        }
    }
}

/// Runs whichever study the configuration names.
pub fn run_study(exp: &Experiment, settings: &McSettings) -> Result<StudyResult> {
    let start = Instant::now();
    let study = match exp.config.experiment {
        ExperimentKind::Convergence => StudyKind::Convergence(run_convergence_study(exp, settings)?),
        ExperimentKind::RateComparison => StudyKind::RateComparison(Box::new(run_rate_comparison(exp, settings)?)),
        ExperimentKind::Rescaling => StudyKind::Rescaling(run_rescaling_validation(exp, settings)?),
        ExperimentKind::Frontier => StudyKind::Frontier(run_frontier(exp, settings)?),
    };
    Ok(StudyResult {
        study,
        runtime: start.elapsed(),
    })
}

/// Hitting-rule estimates at every configured `ε`.
pub fn hitting_frontier(exp: &Experiment, betas: &[f64], settings: &McSettings) -> Result<Vec<FrontierPoint>> {
    let eps = &exp.config.epsilons;
    match exp.config.grid.step_scaling {
        StepScaling::Fixed => estimate_frontier(&exp.scenario(eps[0])?, &exp.rule, eps, betas, settings),
        StepScaling::EpsilonAlpha => eps
            .iter()
            .map(|&e| estimate_frontier_point(&exp.scenario(e)?, &exp.rule, e, betas, settings))
            .collect(),
    }
}

/// Leading points to drop so that at least `MIN_FIT_POINTS` remain.
fn excluded_for(n: usize) -> usize {
    n.saturating_sub(MIN_FIT_POINTS).min(PRE_ASYMPTOTIC_POINTS)
}

fn fit_report(label: String, points: &[FitPoint], expected_slope: Option<f64>) -> Result<FitReport> {
    let excluded = excluded_for(points.len());
    Ok(FitReport {
        label,
        fit: fit_log_log(&points[excluded..])?,
        excluded,
        expected_slope,
    })
}

/// Fits that degenerate (too few points, all-zero functionals) are omitted.
fn optional_fit(label: String, points: &[FitPoint], expected_slope: Option<f64>) -> Option<FitReport> {
    fit_report(label, points, expected_slope).ok()
}

/// `(T A f/g, T λ u^β/g)` for a raw stable integrand under constant barriers.
fn theoretical_limits(exp: &Experiment) -> Option<(f64, Vec<Option<f64>>)> {
    let (IntegrandSpec::RawStable(law), RuleConfig::ConstantPair { lower, upper }) =
        (&exp.integrand, &exp.config.rule)
    else {
        return None;
    };
    let b = Barriers::new(*lower, *upper).ok()?;
    let t = exp.config.horizon;
    let error = t * squared_integral_per_time(law, &b).ok()?;
    let g = mean_exit_time(law, &b).ok()?;
    let costs = exp
        .config
        .betas
        .iter()
        .map(|&beta| overshoot_moment(law, &b, beta).ok().map(|u| t * u / g))
        .collect();
    Some((error, costs))
}

pub fn run_convergence_study(exp: &Experiment, settings: &McSettings) -> Result<ConvergenceResult> {
    let betas = &exp.config.betas;
    let alpha = exp.alpha();
    let points = hitting_frontier(exp, betas, settings)?;
    let limits = theoretical_limits(exp);
    let rows: Vec<ConvergenceRow> = points
        .into_iter()
        .map(|p| {
            let e = p.epsilon;
            let k = e.powi(-2);
            ConvergenceRow {
                scaled_error: (k * p.error.value, k * p.error.std_error),
                limit_error: limits.as_ref().map(|l| l.0),
                costs: p
                    .costs
                    .iter()
                    .enumerate()
                    .map(|(i, c)| {
                        let beta = betas[i];
                        let k = e.powf(alpha - beta);
                        ScaledCost {
                            beta,
                            scaled: (k * c.value, k * c.std_error),
                            limit: limits.as_ref().and_then(|l| l.1[i]),
                        }
                    })
                    .collect(),
                point: p,
            }
        })
        .collect();

    let mut fits = Vec::new();
    let error_points: Vec<FitPoint> = rows
        .iter()
        .map(|r| FitPoint::new(r.point.epsilon, 0.0, r.point.error.value, r.point.error.std_error))
        .collect();
    fits.extend(optional_fit("error_vs_epsilon".into(), &error_points, Some(2.0)));
    for (i, &beta) in betas.iter().enumerate() {
        let cost_points: Vec<FitPoint> = rows
            .iter()
            .map(|r| FitPoint::new(r.point.epsilon, 0.0, r.point.costs[i].value, r.point.costs[i].std_error))
            .collect();
        fits.extend(optional_fit(
            format!("cost_vs_epsilon_beta_{beta}"),
            &cost_points,
            Some(beta - alpha),
        ));
    }
    Ok(ConvergenceResult { rows, fits })
}

fn error_vs_cost(points: &[FrontierPoint], beta_index: usize) -> Vec<FitPoint> {
    points
        .iter()
        .map(|p| {
            let c = &p.costs[beta_index];
            FitPoint::new(c.value, c.std_error, p.error.value, p.error.std_error)
        })
        .collect()
}

pub fn run_frontier(exp: &Experiment, settings: &McSettings) -> Result<FrontierResult> {
    let betas = &exp.config.betas;
    let alpha = exp.alpha();
    let points = hitting_frontier(exp, betas, settings)?;
    let fits = betas
        .iter()
        .enumerate()
        .filter_map(|(i, &beta)| {
            optional_fit(
                format!("error_vs_cost_beta_{beta}"),
                &error_vs_cost(&points, i),
                Some(-2.0 / (alpha - beta)),
            )
        })
        .collect();
    Ok(FrontierResult { points, fits })
}

/// Geometric (factor 2) date counts spanning half the smallest to twice the
/// largest hitting-rule cost.
fn default_date_counts(costs: &[f64]) -> Vec<u64> {
    let lo = costs.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = costs.iter().cloned().fold(0.0, f64::max);
    let mut n = ((lo / 2.0).floor() as u64).max(1);
    let mut out = vec![n];
    while (n as f64) < 2.0 * hi {
        n *= 2;
        out.push(n);
    }
    out
}

pub fn run_rate_comparison(exp: &Experiment, settings: &McSettings) -> Result<RateComparisonResult> {
    let alpha = exp.alpha();
    let hitting = hitting_frontier(exp, &[0.0], settings)?;
    if hitting.len() < MIN_FRONTIER_POINTS {
        return Err(Error::FitDegenerate {
            needed: MIN_FRONTIER_POINTS,
            got: hitting.len(),
        });
    }
    let costs: Vec<f64> = hitting.iter().map(|p| p.costs[0].value).collect();
    let n_dates = exp
        .config
        .n_dates
        .clone()
        .unwrap_or_else(|| default_date_counts(&costs));
    if n_dates.len() < MIN_FRONTIER_POINTS {
        return Err(Error::FitDegenerate {
            needed: MIN_FRONTIER_POINTS,
            got: n_dates.len(),
        });
    }
    // the finest grid the hitting rule used also resolves every date
    let finest = *exp.config.epsilons.last().expect("validated non-empty");
    let scenario = exp.scenario(finest)?;
    let n_max = *n_dates.last().expect("non-empty");
    if scenario.grid.h > scenario.horizon / n_max as f64 {
        return Err(Error::config(
            "n_dates",
            format!("{n_max} dates are finer than the simulation step {}", scenario.grid.h),
        ));
    }
    let equidistant: Vec<(u64, FrontierPoint)> = n_dates
        .iter()
        .copied()
        .zip(equidistant_frontier(&scenario, &n_dates, &[0.0], settings)?)
        .collect();

    let hitting_fit = fit_report(
        "hitting_error_vs_cost".into(),
        &error_vs_cost(&hitting, 0),
        Some(-2.0 / alpha),
    )?;
    let eq_points: Vec<FitPoint> = equidistant
        .iter()
        .map(|(n, p)| FitPoint::new(*n as f64, 0.0, p.error.value, p.error.std_error))
        .collect();
    let equidistant_fit = fit_report("equidistant_error_vs_cost".into(), &eq_points, Some(-1.0))?;

    let table: Vec<FrontierSample> = equidistant
        .iter()
        .map(|(n, p)| FrontierSample {
            epsilon: p.epsilon,
            cost: *n as f64,
            error: p.error.value,
        })
        .collect();
    let matched = hitting[hitting_fit.excluded..]
        .iter()
        .map(|p| {
            let budget = p.costs[0].value;
            let equidistant_error = match invert_cost_for_budget(&table, budget) {
                Ok(b) => Some(b.error),
                Err(Error::BudgetOutOfRange { .. }) => None,
                Err(e) => return Err(e),
            };
            Ok(MatchedBudget {
                budget,
                hitting_error: p.error.value,
                equidistant_error,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(RateComparisonResult {
        hitting,
        equidistant,
        hitting_fit,
        equidistant_fit,
        matched,
    })
}

struct ExitSample {
    time: f64,
    overshoot: f64,
    censored: bool,
}

pub fn run_rescaling_validation(exp: &Experiment, settings: &McSettings) -> Result<RescalingResult> {
    let model = exp
        .model
        .ok_or_else(|| Error::config("model", "the rescaling study needs a truncated_stable model"))?;
    let law = model.density.small_jump_law();
    let unit = Barriers::symmetric(1.0)?;
    let exit_target = mean_exit_time(&law, &unit)?;
    let betas = &exp.config.betas;
    let moment_targets = betas
        .iter()
        .map(|&b| overshoot_moment(&law, &unit, b))
        .collect::<Result<Vec<_>>>()?;
    let lambda0 = exp.initial_lambda()?;
    let alpha = exp.alpha();

    let mut rows = Vec::with_capacity(exp.config.epsilons.len());
    for &eps in &exp.config.epsilons {
        let scenario = exp.scenario(eps)?;
        let clock = lambda0 / eps.powf(alpha);
        let samples = run_paths(settings, |_, rng| {
            let p = simulate_path_until_exit(&scenario, rng, eps, eps)?;
            let moved = (p.x[p.len() - 1] - p.x[0]) / eps;
            Ok(ExitSample {
                time: p.horizon() * clock,
                overshoot: moved.abs(),
                censored: moved.abs() < 1.0,
            })
        })?;
        let overshoots = betas
            .iter()
            .zip(&moment_targets)
            .map(|(&beta, &target)| OvershootRow {
                beta,
                estimate: Estimate::from_samples(samples.iter().map(|s| {
                    if beta == 0.0 {
                        1.0
                    } else {
                        s.overshoot.powf(beta)
                    }
                })),
                target,
            })
            .collect();
        rows.push(RescalingRow {
            epsilon: eps,
            exit_time: Estimate::from_samples(samples.iter().map(|s| s.time)),
            exit_target,
            overshoots,
            censored: samples.iter().filter(|s| s.censored).count() as u64,
        });
    }
    Ok(RescalingResult { rows })
}
