//! Strict JSON experiment configuration and its validation.

use serde::{Deserialize, Serialize};

use crate::discretizer::BarrierRule;
use crate::error::{Error, Result};
use crate::market::{build_truncated_stable_density, BlackScholesDelta, IntegrandSpec, LevyMarketModel, LinearHedge};
use crate::optimizer::{minimize_lagrangian, LagrangianProblem};
use crate::path::{GridResolution, Scenario, DEFAULT_MAX_POINTS};
use crate::stable::StableLaw;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Convergence,
    RateComparison,
    Rescaling,
    Frontier,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Convergence => "convergence",
            ExperimentKind::RateComparison => "rate_comparison",
            ExperimentKind::Rescaling => "rescaling",
            ExperimentKind::Frontier => "frontier",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    /// `X` is a strictly stable process. Give `sigma` alone for a symmetric
    /// law, the tail constants alone, or all three.
    RawStable {
        alpha: f64,
        #[serde(default)]
        sigma: Option<f64>,
        #[serde(default)]
        c_plus: Option<f64>,
        #[serde(default)]
        c_minus: Option<f64>,
    },
    /// Stochastic exponential of a pure-power Lévy process with jumps
    /// truncated to `[-cutoff, cutoff]`.
    TruncatedStable {
        alpha: f64,
        c_plus: f64,
        c_minus: f64,
        cutoff: f64,
        y0: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum IntegrandConfig {
    DeltaHedge { hedge: HedgeConfig },
    Merton { pi: f64, v0: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum HedgeConfig {
    BlackScholes { strike: f64, vol: f64, maturity: f64 },
    Linear { slope: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RuleConfig {
    ConstantPair { lower: f64, upper: f64 },
    SymmetricPower { c: f64, beta: f64 },
    DeltaHedgePower { c: f64, beta: f64 },
    MertonPower { c: f64, beta: f64 },
    /// Minimizer of the pointwise Lagrangian with the given cost multiplier.
    Optimal {
        multiplier: f64,
        #[serde(default)]
        beta: f64,
    },
}

/// How the simulation grid follows `ε`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepScaling {
    /// One grid for every `ε`; all `ε` share the same paths.
    #[default]
    Fixed,
    /// Step `h ε^α` and jump threshold `δ ε` at each `ε`, which keeps the
    /// grid's resolution of the barrier scale constant.
    EpsilonAlpha,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default)]
    pub h: Option<f64>,
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default)]
    pub step_scaling: StepScaling,
    #[serde(default)]
    pub max_points: Option<u64>,
    #[serde(default = "yes")]
    pub small_jumps: bool,
}

fn yes() -> bool {
    true
}

fn default_betas() -> Vec<f64> {
    vec![0.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub model: ModelConfig,
    #[serde(default)]
    pub integrand: Option<IntegrandConfig>,
    pub rule: RuleConfig,
    /// Strictly decreasing.
    pub epsilons: Vec<f64>,
    #[serde(default = "default_betas")]
    pub betas: Vec<f64>,
    /// Time horizon. For the rescaling study this is measured on the
    /// rescaled clock, in which exits take time of order one.
    pub horizon: f64,
    pub n_paths: u64,
    pub master_seed: u64,
    #[serde(default)]
    pub grid: GridConfig,
    /// Equidistant date counts for the rate comparison; derived from the
    /// hitting-rule costs when absent.
    #[serde(default)]
    pub n_dates: Option<Vec<u64>>,
    #[serde(default)]
    pub output_dir: Option<String>,
    /// Number of leading paths written as debug CSVs.
    #[serde(default)]
    pub dump_paths: u64,
}

fn at(path: impl Into<String>) -> impl FnOnce(Error) -> Error {
    let path = path.into();
    move |e| match e {
        Error::Config { .. } => e,
        other => Error::Config {
            path,
            reason: other.to_string(),
        },
    }
}

fn positive(path: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::config(path, format!("must be finite and > 0, got {v}")))
    }
}

/// A validated configuration with its model objects built.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub model: Option<LevyMarketModel>,
    pub integrand: IntegrandSpec,
    pub rule: BarrierRule,
    /// Grid at `ε = 1`; see [`StepScaling`].
    pub grid: GridResolution,
}

impl ExperimentConfig {
    /// Parses strict JSON; unknown fields are errors naming their location.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::config(if path == "." { "<root>".into() } else { path }, e.into_inner().to_string())
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn alpha(&self) -> f64 {
        match self.model {
            ModelConfig::RawStable { alpha, .. } | ModelConfig::TruncatedStable { alpha, .. } => alpha,
        }
    }

    pub fn validate(&self) -> Result<Experiment> {
        let alpha = self.alpha();
        crate::stable::check_alpha(alpha).map_err(at("model.alpha"))?;
        positive("horizon", self.horizon)?;
        if self.n_paths < 2 {
            return Err(Error::config("n_paths", format!("must be >= 2, got {}", self.n_paths)));
        }
        if self.epsilons.is_empty() {
            return Err(Error::config("epsilons", "must not be empty"));
        }
        for (i, &e) in self.epsilons.iter().enumerate() {
            positive(&format!("epsilons[{i}]"), e)?;
            if i > 0 && !(e < self.epsilons[i - 1]) {
                return Err(Error::config(format!("epsilons[{i}]"), "epsilons must be strictly decreasing"));
            }
        }
        if self.betas.is_empty() {
            return Err(Error::config("betas", "must not be empty"));
        }
        for (i, &b) in self.betas.iter().enumerate() {
            if !(b >= 0.0 && b < alpha) {
                return Err(Error::config(format!("betas[{i}]"), format!("must lie in [0, {alpha}), got {b}")));
            }
            if i > 0 && !(b > self.betas[i - 1]) {
                return Err(Error::config(format!("betas[{i}]"), "betas must be strictly increasing"));
            }
        }
        if let Some(n) = &self.n_dates {
            for (i, &d) in n.iter().enumerate() {
                if d == 0 || (i > 0 && d <= n[i - 1]) {
                    return Err(Error::config(format!("n_dates[{i}]"), "must be positive and strictly increasing"));
                }
            }
        }

        let (model, integrand) = self.build_model()?;
        let rule = self.build_rule(model.as_ref(), &integrand)?;
        let grid = self.build_grid(model.as_ref())?;
        let exp = Experiment {
            config: self.clone(),
            model,
            integrand,
            rule,
            grid,
        };
        self.check_study(&exp)?;
        // every scenario the run will need must be constructible
        for &e in &self.epsilons {
            exp.scenario(e)?;
        }
        Ok(exp)
    }

    fn build_model(&self) -> Result<(Option<LevyMarketModel>, IntegrandSpec)> {
        match &self.model {
            ModelConfig::RawStable {
                alpha,
                sigma,
                c_plus,
                c_minus,
            } => {
                if self.integrand.is_some() {
                    return Err(Error::config("integrand", "a raw_stable model is its own integrand"));
                }
                let law = match (sigma, c_plus, c_minus) {
                    (Some(s), None, None) => StableLaw::symmetric(*alpha, *s),
                    (None, Some(p), Some(m)) => StableLaw::new(*alpha, *p, *m),
                    (Some(s), Some(p), Some(m)) => StableLaw::with_sigma(*alpha, *p, *m, *s),
                    _ => {
                        return Err(Error::config(
                            "model",
                            "give sigma, or both c_plus and c_minus, or all three",
                        ))
                    }
                }
                .map_err(at("model"))?;
                Ok((None, IntegrandSpec::RawStable(law)))
            }
            ModelConfig::TruncatedStable {
                alpha,
                c_plus,
                c_minus,
                cutoff,
                y0,
            } => {
                let density =
                    build_truncated_stable_density(*alpha, *c_plus, *c_minus, *cutoff).map_err(at("model"))?;
                let model = LevyMarketModel::new(density, *y0).map_err(at("model.y0"))?;
                let integrand = match &self.integrand {
                    None => return Err(Error::config("integrand", "required for a truncated_stable model")),
                    Some(IntegrandConfig::DeltaHedge { hedge }) => match hedge {
                        HedgeConfig::BlackScholes { strike, vol, maturity } => {
                            if !(*maturity > self.horizon) {
                                return Err(Error::config(
                                    "integrand.hedge.maturity",
                                    "must exceed the horizon",
                                ));
                            }
                            IntegrandSpec::delta_hedge(
                                BlackScholesDelta::new(*strike, *vol, *maturity).map_err(at("integrand.hedge"))?,
                            )
                        }
                        HedgeConfig::Linear { slope } => {
                            positive("integrand.hedge.slope", *slope)?;
                            IntegrandSpec::delta_hedge(LinearHedge { slope: *slope })
                        }
                    },
                    Some(IntegrandConfig::Merton { pi, v0 }) => IntegrandSpec::Merton { pi: *pi, v0: *v0 },
                };
                integrand.validate(Some(&model)).map_err(at("integrand"))?;
                Ok((Some(model), integrand))
            }
        }
    }

    fn build_rule(&self, model: Option<&LevyMarketModel>, integrand: &IntegrandSpec) -> Result<BarrierRule> {
        let alpha = self.alpha();
        match &self.rule {
            RuleConfig::ConstantPair { lower, upper } => BarrierRule::constant_pair(*lower, *upper, alpha),
            RuleConfig::SymmetricPower { c, beta } => BarrierRule::symmetric_power(*c, *beta, alpha),
            RuleConfig::DeltaHedgePower { c, beta } => BarrierRule::delta_hedge_power(*c, *beta, alpha, integrand),
            RuleConfig::MertonPower { c, beta } => BarrierRule::merton_power(*c, *beta, alpha, integrand),
            RuleConfig::Optimal { multiplier, beta } => {
                let law = match (integrand, model) {
                    (IntegrandSpec::RawStable(law), _) => *law,
                    (_, Some(m)) => m.density.small_jump_law(),
                    (_, None) => unreachable!("market integrands carry a model"),
                };
                let opt = minimize_lagrangian(&LagrangianProblem::new(1.0, 1.0, *multiplier, *beta, law)?)?;
                if model.is_none() {
                    let b = opt.barriers;
                    BarrierRule::constant_pair(b.lower, b.upper, alpha)
                } else if law.is_symmetric() && *beta <= 1.0 {
                    // the optimum at (A, λ) is the unit optimum times (λ/A)^{1/(2+α-β)}
                    BarrierRule::symmetric_power(opt.center, *beta, alpha)
                } else {
                    Err(Error::config(
                        "rule",
                        "the optimal rule on a market model needs a symmetric law and beta <= 1",
                    ))
                }
            }
        }
        .map_err(at("rule"))
    }

    fn build_grid(&self, model: Option<&LevyMarketModel>) -> Result<GridResolution> {
        let g = &self.grid;
        let defaults = GridResolution::default_for(model, self.horizon).map_err(at("grid"))?;
        if let Some(h) = g.h {
            positive("grid.h", h)?;
        }
        if let Some(d) = g.delta {
            positive("grid.delta", d)?;
        }
        let mut grid = GridResolution::new(g.h.unwrap_or(defaults.h), g.delta.unwrap_or(defaults.delta))
            .map_err(at("grid"))?
            .with_max_points(g.max_points.unwrap_or(DEFAULT_MAX_POINTS));
        if !g.small_jumps {
            grid = grid.without_small_jumps();
        }
        Ok(grid)
    }

    fn check_study(&self, exp: &Experiment) -> Result<()> {
        match self.experiment {
            ExperimentKind::RateComparison => {
                if self.betas != [0.0] {
                    return Err(Error::config("betas", "the rate comparison budgets rebalancing counts: use [0]"));
                }
            }
            ExperimentKind::Rescaling => {
                let Some(m) = &exp.model else {
                    return Err(Error::config("model", "the rescaling study needs a truncated_stable model"));
                };
                if m.density.c_plus() != m.density.c_minus() {
                    return Err(Error::config(
                        "model.c_minus",
                        "closed-form exit functionals need c_plus = c_minus",
                    ));
                }
                if self.grid.step_scaling != StepScaling::EpsilonAlpha {
                    return Err(Error::config(
                        "grid.step_scaling",
                        "the rescaling study resolves each epsilon on its own clock: use epsilon_alpha",
                    ));
                }
            }
            ExperimentKind::Convergence | ExperimentKind::Frontier => {}
        }
        Ok(())
    }
}

impl Experiment {
    pub fn alpha(&self) -> f64 {
        self.config.alpha()
    }

    /// Grid in effect at `epsilon`.
    pub fn grid_at(&self, epsilon: f64) -> GridResolution {
        match self.config.grid.step_scaling {
            StepScaling::Fixed => self.grid,
            StepScaling::EpsilonAlpha => GridResolution {
                h: self.grid.h * epsilon.powf(self.alpha()),
                delta: self.grid.delta * epsilon,
                ..self.grid
            },
        }
    }

    /// Scenario used at `epsilon`; for the rescaling study the horizon and
    /// grid are mapped from the rescaled clock to calendar time.
    pub fn scenario(&self, epsilon: f64) -> Result<Scenario> {
        let mut grid = self.grid_at(epsilon);
        let mut horizon = self.config.horizon;
        if self.config.experiment == ExperimentKind::Rescaling {
            let clock = epsilon.powf(self.alpha()) / self.initial_lambda()?;
            horizon *= clock;
            grid.h = self.grid.h * clock;
        }
        Scenario::new(self.model, self.integrand.clone(), horizon, grid)
            .map_err(at(format!("grid (at epsilon = {epsilon})")))
    }

    /// `λ_0`, the jump-intensity modulation at time zero.
    pub fn initial_lambda(&self) -> Result<f64> {
        let y = self.model.map_or(1.0, |m| m.y0);
        let v = match self.integrand {
            IntegrandSpec::Merton { v0, .. } => v0,
            _ => 0.0,
        };
        let c = crate::market::coefficient_processes(
            self.model.as_ref(),
            &self.integrand,
            crate::market::MarketState { t: 0.0, y, v },
        )
        .map_err(at("integrand"))?;
        Ok(c.lambda)
    }

    pub fn rule_name(&self) -> &'static str {
        match self.config.rule {
            RuleConfig::Optimal { .. } => "optimal",
            _ => self.rule.name(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const RAW: &str = r#"{
        "experiment": "convergence",
        "model": {"type": "raw_stable", "alpha": 1.5, "sigma": 1.0},
        "rule": {"kind": "constant_pair", "lower": 1.0, "upper": 1.0},
        "epsilons": [0.4, 0.2],
        "horizon": 1.0,
        "n_paths": 10,
        "master_seed": 7,
        "grid": {"h": 0.001}
    }"#;

    fn with(base: &str, edit: impl FnOnce(&mut serde_json::Value)) -> String {
        let mut v: serde_json::Value = serde_json::from_str(base).unwrap();
        edit(&mut v);
        v.to_string()
    }

    fn config_path(text: &str) -> String {
        let err = ExperimentConfig::from_json(text)
            .and_then(|c| c.validate().map(|_| ()))
            .unwrap_err();
        match err {
            Error::Config { path, .. } => path,
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn minimal_config_validates() {
        let cfg = ExperimentConfig::from_json(RAW).unwrap();
        assert_eq!(cfg.betas, vec![0.0]);
        assert_eq!(cfg.grid.step_scaling, StepScaling::Fixed);
        let exp = cfg.validate().unwrap();
        assert_eq!(exp.rule_name(), "constant_pair");
        assert_eq!(exp.scenario(0.2).unwrap().base_steps(), 1000);
        // round trip
        assert_eq!(ExperimentConfig::from_json(&cfg.to_json()).unwrap(), cfg);
    }

    #[test]
    fn unknown_fields_are_rejected_with_their_path() {
        assert_eq!(config_path(&with(RAW, |v| v["colour"] = 1.into())), "colour");
        // inside tagged enums the message, not the path, names the field
        let err = ExperimentConfig::from_json(&with(RAW, |v| v["model"]["gamma"] = 1.into())).unwrap_err();
        assert!(matches!(&err, Error::Config { path, reason } if path == "model" && reason.contains("gamma")));
        assert_eq!(config_path(&with(RAW, |v| v["grid"]["step"] = 1.into())), "grid.step");
        let err = ExperimentConfig::from_json(&with(RAW, |v| v["grid"]["step"] = 1.into())).unwrap_err();
        assert!(err.to_string().contains("step"), "{err}");
    }

    #[test]
    fn invariants_report_field_paths() {
        assert_eq!(config_path(&with(RAW, |v| v["epsilons"] = serde_json::json!([0.1, 0.2]))), "epsilons[1]");
        assert_eq!(config_path(&with(RAW, |v| v["epsilons"] = serde_json::json!([0.1, -0.2]))), "epsilons[1]");
        assert_eq!(config_path(&with(RAW, |v| v["betas"] = serde_json::json!([0.0, 1.5]))), "betas[1]");
        assert_eq!(config_path(&with(RAW, |v| v["n_paths"] = 1.into())), "n_paths");
        assert_eq!(config_path(&with(RAW, |v| v["horizon"] = 0.into())), "horizon");
        assert_eq!(config_path(&with(RAW, |v| v["model"]["alpha"] = 2.5.into())), "model.alpha");
        assert_eq!(config_path(&with(RAW, |v| v["rule"]["lower"] = (-1.0).into())), "rule");
        assert_eq!(config_path(&with(RAW, |v| v["n_paths"] = "many".into())), "n_paths");
    }

    #[test]
    fn market_configs_build() {
        let text = r#"{
            "experiment": "rescaling",
            "model": {"type": "truncated_stable", "alpha": 1.5, "c_plus": 1.0, "c_minus": 1.0, "cutoff": 0.5, "y0": 1.0},
            "integrand": {"kind": "delta_hedge", "hedge": {"type": "linear", "slope": 1.0}},
            "rule": {"kind": "optimal", "multiplier": 1.0},
            "epsilons": [0.2, 0.1],
            "horizon": 3.0,
            "n_paths": 10,
            "master_seed": 1,
            "grid": {"h": 1e-3, "delta": 0.02, "step_scaling": "epsilon_alpha"}
        }"#;
        let exp = ExperimentConfig::from_json(text).unwrap().validate().unwrap();
        assert_eq!(exp.rule_name(), "optimal");
        assert!((exp.initial_lambda().unwrap() - 1.0).abs() < 1e-15);
        let s = exp.scenario(0.1).unwrap();
        assert!((s.horizon - 3.0 * 0.1f64.powf(1.5)).abs() < 1e-15);
        assert!((s.grid.delta - 0.002).abs() < 1e-15);

        assert_eq!(config_path(&with(text, |v| v["grid"]["step_scaling"] = "fixed".into())), "grid.step_scaling");
        assert_eq!(config_path(&with(text, |v| v["model"]["c_minus"] = 0.5.into())), "rule");
        let pair = with(text, |v| v["rule"] = serde_json::json!({"kind": "constant_pair", "lower": 1.0, "upper": 1.0}));
        assert_eq!(config_path(&with(&pair, |v| v["model"]["c_minus"] = 0.5.into())), "model.c_minus");
        assert_eq!(config_path(&with(text, |v| v["integrand"] = serde_json::Value::Null)), "integrand");
        assert_eq!(
            config_path(&with(text, |v| v["integrand"] = serde_json::json!({"kind": "merton", "pi": 3.0, "v0": 1.0}))),
            "integrand"
        );
    }

    #[test]
    fn rate_comparison_needs_count_budget() {
        let text = with(RAW, |v| {
            v["experiment"] = "rate_comparison".into();
            v["betas"] = serde_json::json!([0.5]);
        });
        assert_eq!(config_path(&text), "betas");
    }
}
