//! Hitting-time discretization rules and Monte Carlo estimators of the error
//! and cost functionals.

use std::io::Write;
use std::sync::Arc;

use crate::error::{ensure_positive, Error, Result};
use crate::market::{HedgeFunction, IntegrandSpec, MarketState};
use crate::montecarlo::{run_paths, Estimate, McSettings};
use crate::optimizer::{strategy_barrier, symmetric_power_barrier};
use crate::path::{simulate_path, PathBundle, Scenario};
use crate::stable::Barriers;

pub const FRONTIER_HEADER: &str = "epsilon,error,error_se,cost,cost_se,beta,n_paths,rule,seed";

#[derive(Debug, Clone)]
pub enum RuleKind {
    ConstantPair(Barriers),
    /// `a = c (λ/A)^{1/(2+α-β)}` on both sides.
    SymmetricPower { c: f64, beta: f64 },
    /// `a = c φ_y^{α/(2+α-β)} Y^{(α-2)/(2+α-β)}` on both sides.
    DeltaHedgePower {
        c: f64,
        beta: f64,
        hedge: Arc<dyn HedgeFunction>,
    },
    /// `a = c V^{α/(2+α-β)} Y^{-(2+α)/(2+α-β)}` on both sides.
    MertonPower { c: f64, beta: f64 },
}

/// A rebalancing rule: rebalance when `X` leaves
/// `(X_{T_i} - ε a̲_{T_i}, X_{T_i} + ε ā_{T_i})`.
#[derive(Debug, Clone)]
pub struct BarrierRule {
    pub kind: RuleKind,
    pub alpha: f64,
}

impl BarrierRule {
    pub fn constant_pair(lower: f64, upper: f64, alpha: f64) -> Result<Self> {
        Self::checked(RuleKind::ConstantPair(Barriers::new(lower, upper)?), alpha)
    }

    pub fn symmetric_power(c: f64, beta: f64, alpha: f64) -> Result<Self> {
        // validates (c, β, α) once at unit ratio
        symmetric_power_barrier(1.0, 1.0, alpha, beta, c)?;
        Self::checked(RuleKind::SymmetricPower { c, beta }, alpha)
    }

    pub fn delta_hedge_power(c: f64, beta: f64, alpha: f64, spec: &IntegrandSpec) -> Result<Self> {
        let IntegrandSpec::DeltaHedge(hedge) = spec else {
            return Err(Error::param("rule", "delta_hedge_power needs a delta_hedge integrand"));
        };
        Self::checked_power(c, beta, alpha)?;
        Self::checked(
            RuleKind::DeltaHedgePower {
                c,
                beta,
                hedge: hedge.clone(),
            },
            alpha,
        )
    }

    pub fn merton_power(c: f64, beta: f64, alpha: f64, spec: &IntegrandSpec) -> Result<Self> {
        if !matches!(spec, IntegrandSpec::Merton { .. }) {
            return Err(Error::param("rule", "merton_power needs a merton integrand"));
        }
        Self::checked_power(c, beta, alpha)?;
        Self::checked(RuleKind::MertonPower { c, beta }, alpha)
    }

    fn checked_power(c: f64, beta: f64, alpha: f64) -> Result<()> {
        ensure_positive("c", c)?;
        if !(beta >= 0.0 && beta < alpha) {
            return Err(Error::InfiniteMoment { beta, alpha });
        }
        Ok(())
    }

    fn checked(kind: RuleKind, alpha: f64) -> Result<Self> {
        crate::stable::check_alpha(alpha)?;
        Ok(Self { kind, alpha })
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            RuleKind::ConstantPair(_) => "constant_pair",
            RuleKind::SymmetricPower { .. } => "symmetric_power",
            RuleKind::DeltaHedgePower { .. } => "delta_hedge_power",
            RuleKind::MertonPower { .. } => "merton_power",
        }
    }

    /// Multiplies every barrier the rule produces by `kappa`.
    pub fn scaled(&self, kappa: f64) -> Result<Self> {
        ensure_positive("kappa", kappa)?;
        let kind = match &self.kind {
            RuleKind::ConstantPair(b) => RuleKind::ConstantPair(b.scaled(kappa)),
            RuleKind::SymmetricPower { c, beta } => RuleKind::SymmetricPower {
                c: c * kappa,
                beta: *beta,
            },
            RuleKind::DeltaHedgePower { c, beta, hedge } => RuleKind::DeltaHedgePower {
                c: c * kappa,
                beta: *beta,
                hedge: hedge.clone(),
            },
            RuleKind::MertonPower { c, beta } => RuleKind::MertonPower {
                c: c * kappa,
                beta: *beta,
            },
        };
        Ok(Self {
            kind,
            alpha: self.alpha,
        })
    }

    /// Barrier pair at grid index `k`.
    pub fn barriers_at(&self, bundle: &PathBundle, k: usize) -> Result<Barriers> {
        let t = bundle.times[k];
        let a = match &self.kind {
            RuleKind::ConstantPair(b) => return Ok(*b),
            RuleKind::SymmetricPower { c, beta } => {
                let (a_coef, lambda) = (bundle.a_coef[k], bundle.lambda[k]);
                if !(a_coef > 0.0 && lambda > 0.0) {
                    return Err(Error::RuleViolation { time: t, value: lambda / a_coef });
                }
                symmetric_power_barrier(a_coef, lambda, self.alpha, *beta, *c)?
            }
            RuleKind::DeltaHedgePower { c, beta, hedge } => {
                let spec = IntegrandSpec::DeltaHedge(hedge.clone());
                let state = MarketState {
                    t,
                    y: bundle.y[k],
                    v: 0.0,
                };
                strategy_barrier(&spec, state, self.alpha, *beta, *c)?
            }
            RuleKind::MertonPower { c, beta } => {
                let v = *bundle
                    .wealth
                    .get(k)
                    .ok_or_else(|| Error::param("rule", "merton_power needs a path with wealth"))?;
                let state = MarketState { t, y: bundle.y[k], v };
                strategy_barrier(&IntegrandSpec::Merton { pi: 0.0, v0: v }, state, self.alpha, *beta, *c)?
            }
        };
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::RuleViolation { time: t, value: a });
        }
        Ok(Barriers { lower: a, upper: a })
    }
}

/// Rebalancing dates of one path.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretizationTrace {
    pub epsilon: f64,
    /// `T_1 < T_2 < ...` within `(0, T]`; `T_0 = 0` is implicit.
    pub rebalance_times: Vec<f64>,
    /// Grid indices of the rebalancing dates.
    pub indices: Vec<usize>,
    /// `|X_{T_i} - X_{T_{i-1}}|`.
    pub increments: Vec<f64>,
}

impl DiscretizationTrace {
    pub fn n_rebalances(&self) -> usize {
        self.rebalance_times.len()
    }
}

/// Error and cost functionals realised on one path.
#[derive(Debug, Clone, PartialEq)]
pub struct PathFunctionals {
    /// `∫ (X_t - X_{η(t)})² A_t dt`.
    pub error: f64,
    /// `Σ |ΔX|^β` for each requested `β`.
    pub costs: Vec<f64>,
    pub n_rebalances: usize,
}

fn cost_sum(increments: &[f64], beta: f64) -> f64 {
    if beta == 0.0 {
        increments.len() as f64
    } else {
        increments.iter().map(|d| d.powf(beta)).sum()
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    ensure_positive("epsilon", epsilon)
}

/// Walks the path once, returning the trace and the error integral.
fn walk(bundle: &PathBundle, rule: &BarrierRule, epsilon: f64) -> Result<(DiscretizationTrace, f64)> {
    check_epsilon(epsilon)?;
    let n = bundle.len();
    let mut trace = DiscretizationTrace {
        epsilon,
        rebalance_times: Vec::new(),
        indices: Vec::new(),
        increments: Vec::new(),
    };
    let mut reference = bundle.x[0];
    let mut b = rule.barriers_at(bundle, 0)?;
    let (mut lo, mut hi) = (reference - epsilon * b.lower, reference + epsilon * b.upper);
    let mut error = 0.0;
    for k in 0..n {
        let x = bundle.x[k];
        if k > 0 && (x <= lo || x >= hi) {
            trace.rebalance_times.push(bundle.times[k]);
            trace.indices.push(k);
            trace.increments.push((x - reference).abs());
            reference = x;
            b = rule.barriers_at(bundle, k)?;
            lo = reference - epsilon * b.lower;
            hi = reference + epsilon * b.upper;
        }
        if k + 1 < n {
            let d = x - reference;
            error += d * d * bundle.a_coef[k] * (bundle.times[k + 1] - bundle.times[k]);
        }
    }
    Ok((trace, error))
}

/// Rebalancing dates of the hitting-time rule on one path. Barriers are
/// frozen at each rebalancing date; landing on a barrier counts as an exit.
pub fn hitting_times(bundle: &PathBundle, rule: &BarrierRule, epsilon: f64) -> Result<DiscretizationTrace> {
    Ok(walk(bundle, rule, epsilon)?.0)
}

/// Error and costs of the hitting-time rule on one path.
pub fn evaluate_path(
    bundle: &PathBundle,
    rule: &BarrierRule,
    epsilon: f64,
    betas: &[f64],
) -> Result<PathFunctionals> {
    let (trace, error) = walk(bundle, rule, epsilon)?;
    Ok(PathFunctionals {
        error,
        costs: betas.iter().map(|&b| cost_sum(&trace.increments, b)).collect(),
        n_rebalances: trace.n_rebalances(),
    })
}

/// Error and costs of rebalancing at `j T / n_dates`, `j = 1..=n_dates`.
pub fn evaluate_equidistant(bundle: &PathBundle, n_dates: u64, betas: &[f64]) -> Result<PathFunctionals> {
    if n_dates < 1 {
        return Err(Error::param("n_dates", "must be >= 1"));
    }
    let n = bundle.len();
    let horizon = bundle.horizon();
    let date = |j: u64| {
        if j == n_dates {
            horizon
        } else {
            horizon * (j as f64 / n_dates as f64)
        }
    };
    let mut reference = bundle.x[0];
    let mut increments = Vec::with_capacity(n_dates as usize);
    let mut error = 0.0;
    let mut j = 1;
    for k in 0..n - 1 {
        let (v, a_coef, end) = (bundle.x[k], bundle.a_coef[k], bundle.times[k + 1]);
        let mut cursor = bundle.times[k];
        while j <= n_dates && date(j) < end {
            let d = date(j);
            error += (v - reference).powi(2) * a_coef * (d - cursor);
            cursor = d;
            increments.push((v - reference).abs());
            reference = v;
            j += 1;
        }
        error += (v - reference).powi(2) * a_coef * (end - cursor);
    }
    let last = bundle.x[n - 1];
    while j <= n_dates {
        increments.push((last - reference).abs());
        reference = last;
        j += 1;
    }
    Ok(PathFunctionals {
        error,
        costs: betas.iter().map(|&b| cost_sum(&increments, b)).collect(),
        n_rebalances: increments.len(),
    })
}

/// Monte Carlo estimate of an error or cost functional.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FunctionalEstimate {
    pub value: f64,
    pub std_error: f64,
    pub n_paths: u64,
    pub epsilon: f64,
    /// Cost exponent; `None` for the error functional.
    pub beta: Option<f64>,
}

impl FunctionalEstimate {
    fn new(e: Estimate, epsilon: f64, beta: Option<f64>) -> Self {
        Self {
            value: e.mean,
            std_error: e.std_error,
            n_paths: e.n,
            epsilon,
            beta,
        }
    }
}

/// Error and cost estimates at one `ε` (or one equidistant date count).
#[derive(Debug, Clone, PartialEq)]
pub struct FrontierPoint {
    pub epsilon: f64,
    pub error: FunctionalEstimate,
    /// One estimate per requested `β`, in request order.
    pub costs: Vec<FunctionalEstimate>,
}

fn check_estimator_inputs(scenario: &Scenario, rule_alpha: Option<f64>, betas: &[f64], settings: &McSettings) -> Result<()> {
    if settings.n_paths < 2 {
        return Err(Error::param("n_paths", "must be >= 2"));
    }
    let alpha = scenario.alpha();
    if let Some(ra) = rule_alpha {
        if ra != alpha {
            return Err(Error::param("rule.alpha", format!("{ra} differs from the model's {alpha}")));
        }
    }
    for &beta in betas {
        if !(beta >= 0.0 && beta < alpha) {
            return Err(Error::InfiniteMoment { beta, alpha });
        }
    }
    Ok(())
}

fn summarize(samples: &[PathFunctionals], epsilon: f64, betas: &[f64]) -> FrontierPoint {
    FrontierPoint {
        epsilon,
        error: FunctionalEstimate::new(Estimate::from_samples(samples.iter().map(|s| s.error)), epsilon, None),
        costs: betas
            .iter()
            .enumerate()
            .map(|(i, &b)| {
                FunctionalEstimate::new(Estimate::from_samples(samples.iter().map(|s| s.costs[i])), epsilon, Some(b))
            })
            .collect(),
    }
}

/// Estimates at several `ε` from one set of simulated paths.
pub fn estimate_frontier(
    scenario: &Scenario,
    rule: &BarrierRule,
    epsilons: &[f64],
    betas: &[f64],
    settings: &McSettings,
) -> Result<Vec<FrontierPoint>> {
    check_estimator_inputs(scenario, Some(rule.alpha), betas, settings)?;
    for &e in epsilons {
        check_epsilon(e)?;
    }
    let per_path = run_paths(settings, |_, rng| {
        let bundle = simulate_path(scenario, rng)?;
        epsilons
            .iter()
            .map(|&e| evaluate_path(&bundle, rule, e, betas))
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(epsilons
        .iter()
        .enumerate()
        .map(|(i, &e)| {
            let samples: Vec<PathFunctionals> = per_path.iter().map(|p| p[i].clone()).collect();
            summarize(&samples, e, betas)
        })
        .collect())
}

pub fn estimate_frontier_point(
    scenario: &Scenario,
    rule: &BarrierRule,
    epsilon: f64,
    betas: &[f64],
    settings: &McSettings,
) -> Result<FrontierPoint> {
    Ok(estimate_frontier(scenario, rule, &[epsilon], betas, settings)?.remove(0))
}

/// `E[∫ (X_t - X_{η(t)})² A_t dt]` for the hitting-time rule.
pub fn estimate_error_functional(
    scenario: &Scenario,
    rule: &BarrierRule,
    epsilon: f64,
    settings: &McSettings,
) -> Result<FunctionalEstimate> {
    Ok(estimate_frontier_point(scenario, rule, epsilon, &[], settings)?.error)
}

/// `E[Σ |X_{T_i} - X_{T_{i-1}}|^β]` for the hitting-time rule.
pub fn estimate_cost_functional(
    scenario: &Scenario,
    rule: &BarrierRule,
    epsilon: f64,
    beta: f64,
    settings: &McSettings,
) -> Result<FunctionalEstimate> {
    Ok(estimate_frontier_point(scenario, rule, epsilon, &[beta], settings)?.costs[0])
}

/// Equidistant-date estimates for several date counts from one set of paths.
/// The `epsilon` field of each point holds the date spacing `T / n`.
pub fn equidistant_frontier(
    scenario: &Scenario,
    n_dates: &[u64],
    betas: &[f64],
    settings: &McSettings,
) -> Result<Vec<FrontierPoint>> {
    check_estimator_inputs(scenario, None, betas, settings)?;
    if n_dates.iter().any(|&n| n < 1) {
        return Err(Error::param("n_dates", "must be >= 1"));
    }
    let per_path = run_paths(settings, |_, rng| {
        let bundle = simulate_path(scenario, rng)?;
        n_dates
            .iter()
            .map(|&n| evaluate_equidistant(&bundle, n, betas))
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(n_dates
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let samples: Vec<PathFunctionals> = per_path.iter().map(|p| p[i].clone()).collect();
            summarize(&samples, scenario.horizon / n as f64, betas)
        })
        .collect())
}

pub fn equidistant_baseline(
    scenario: &Scenario,
    n_dates: u64,
    betas: &[f64],
    settings: &McSettings,
) -> Result<FrontierPoint> {
    Ok(equidistant_frontier(scenario, &[n_dates], betas, settings)?.remove(0))
}

/// One sampled `(ε, Ĉ(ε), Ê(ε))` triple.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrontierSample {
    pub epsilon: f64,
    pub cost: f64,
    pub error: f64,
}

/// `ε(C)` and the error at budget `C`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BudgetPoint {
    pub epsilon: f64,
    pub error: f64,
}

/// `ε(C) = inf{ε : Ĉ(ε) < C}` over the sampled `ε`, with the error
/// interpolated log-log between the samples bracketing `C`.
///
/// The table must be sorted by `ε` descending with non-decreasing cost.
pub fn invert_cost_for_budget(table: &[FrontierSample], budget: f64) -> Result<BudgetPoint> {
    if table.len() < 2 {
        return Err(Error::FitDegenerate {
            needed: 2,
            got: table.len(),
        });
    }
    for w in table.windows(2) {
        if !(w[0].epsilon > w[1].epsilon) {
            return Err(Error::param("table", "epsilon must be strictly decreasing"));
        }
        if w[1].cost < w[0].cost {
            return Err(Error::param("table", "cost must not decrease as epsilon decreases"));
        }
    }
    if table.iter().any(|s| !(s.cost > 0.0 && s.error > 0.0)) {
        return Err(Error::param("table", "costs and errors must be positive"));
    }
    let (min, max) = (table[0].cost, table[table.len() - 1].cost);
    let below = table.iter().take_while(|s| s.cost < budget).count();
    if below == 0 || below == table.len() {
        return Err(Error::BudgetOutOfRange { budget, min, max });
    }
    let (lo, hi) = (table[below - 1], table[below]);
    let w = if hi.cost == lo.cost {
        0.0
    } else {
        (budget / lo.cost).ln() / (hi.cost / lo.cost).ln()
    };
    let error = (lo.error.ln() + w * (hi.error / lo.error).ln()).exp();
    Ok(BudgetPoint {
        epsilon: lo.epsilon,
        error,
    })
}

/// One line of the frontier CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct FrontierRow {
    pub epsilon: f64,
    pub error: f64,
    pub error_se: f64,
    pub cost: f64,
    pub cost_se: f64,
    pub beta: f64,
    pub n_paths: u64,
    pub rule: String,
    pub seed: u64,
}

impl FrontierRow {
    /// One row per `β` of a frontier point.
    pub fn from_point(point: &FrontierPoint, rule: &str, seed: u64) -> Vec<Self> {
        point
            .costs
            .iter()
            .map(|c| Self {
                epsilon: point.epsilon,
                error: point.error.value,
                error_se: point.error.std_error,
                cost: c.value,
                cost_se: c.std_error,
                beta: c.beta.unwrap_or(0.0),
                n_paths: point.error.n_paths,
                rule: rule.to_string(),
                seed,
            })
            .collect()
    }
}

/// Writes the frontier CSV ordered by `ε` descending, then `β` ascending.
pub fn write_frontier_csv<W: Write>(mut w: W, rows: &[FrontierRow]) -> Result<()> {
    let mut sorted: Vec<&FrontierRow> = rows.iter().collect();
    sorted.sort_by(|a, b| b.epsilon.total_cmp(&a.epsilon).then(a.beta.total_cmp(&b.beta)));
    writeln!(w, "{FRONTIER_HEADER}")?;
    for r in sorted {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            r.epsilon, r.error, r.error_se, r.cost, r.cost_se, r.beta, r.n_paths, r.rule, r.seed
        )?;
    }
    Ok(())
}
