//! Asymptotically optimal barriers.
//!
//! The pointwise problem minimizes `A f/g + c λ u^β/g` over barrier pairs.
//! Writing the pair as `a (1 - θ, 1 + θ)`, the stable scaling laws give
//! `A a² F(θ) + c λ a^{β-α} U(θ)` with `F = f/g` and `U = u^β/g` at unit
//! half-width, so each `θ` needs the exit functionals only once.

use crate::error::{ensure_positive, Error, Result};
use crate::market::{IntegrandSpec, MarketState};
use crate::montecarlo::McSettings;
use crate::stable::{
    mc_exit_functionals, mean_exit_time, overshoot_moment, squared_integral_per_time, Barriers,
    StableLaw,
};

const GOLDEN: f64 = 0.618_033_988_749_894_9;

/// Largest `|θ|` searched.
pub const THETA_BOX: f64 = 0.99;
/// The half-width is searched within this factor of the power-law guess.
pub const WIDTH_BOX: f64 = 1e3;

/// Monte Carlo settings used when the law is asymmetric.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McObjective {
    pub settings: McSettings,
    /// Simulation step relative to `1/σ`, the natural time unit at unit width.
    pub dt_fraction: f64,
}

impl Default for McObjective {
    fn default() -> Self {
        Self {
            settings: McSettings::new(4000, 0),
            dt_fraction: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LagrangianProblem {
    pub a_coef: f64,
    pub lambda: f64,
    pub multiplier: f64,
    pub beta: f64,
    pub law: StableLaw,
    pub mc: McObjective,
}

impl LagrangianProblem {
    pub fn new(a_coef: f64, lambda: f64, multiplier: f64, beta: f64, law: StableLaw) -> Result<Self> {
        ensure_positive("A", a_coef)?;
        ensure_positive("lambda", lambda)?;
        ensure_positive("multiplier", multiplier)?;
        check_beta(beta, law.alpha())?;
        Ok(Self {
            a_coef,
            lambda,
            multiplier,
            beta,
            law,
            mc: McObjective::default(),
        })
    }

    pub fn with_mc(mut self, mc: McObjective) -> Self {
        self.mc = mc;
        self
    }

    fn scaled(&self, ratios: UnitRatios, a: f64) -> f64 {
        let alpha = self.law.alpha();
        self.a_coef * a * a * ratios.f_over_g
            + self.multiplier * self.lambda * a.powf(self.beta - alpha) * ratios.u_over_g
    }
}

fn check_beta(beta: f64, alpha: f64) -> Result<()> {
    if !(beta.is_finite() && beta >= 0.0) {
        return Err(Error::param("beta", format!("must be finite and >= 0, got {beta}")));
    }
    if beta >= alpha {
        return Err(Error::InfiniteMoment { beta, alpha });
    }
    Ok(())
}

/// Objective value, with a standard error in Monte Carlo mode (0 otherwise).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveValue {
    pub value: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct UnitRatios {
    f_over_g: f64,
    u_over_g: f64,
    /// Standard errors of the two ratios (Monte Carlo mode only).
    f_se: f64,
    u_se: f64,
}

fn unit_ratios(p: &LagrangianProblem, theta: f64) -> Result<UnitRatios> {
    let b = Barriers::new(1.0 - theta, 1.0 + theta)?;
    if p.law.is_symmetric() {
        let g = mean_exit_time(&p.law, &b)?;
        return Ok(UnitRatios {
            f_over_g: squared_integral_per_time(&p.law, &b)?,
            u_over_g: overshoot_moment(&p.law, &b, p.beta)? / g,
            f_se: 0.0,
            u_se: 0.0,
        });
    }
    // same seed for every θ: common random numbers across candidates
    let dt = p.mc.dt_fraction / p.law.sigma();
    let r = mc_exit_functionals(&p.law, &b, p.beta, dt, &p.mc.settings)?;
    let (g, f, u) = (r.g.mean, r.f.mean, r.u_beta.mean);
    let rel_g = r.g.std_error / g;
    Ok(UnitRatios {
        f_over_g: f / g,
        u_over_g: u / g,
        f_se: f / g * ((r.f.std_error / f).powi(2) + rel_g * rel_g).sqrt(),
        u_se: u / g * (nan_to_zero(r.u_beta.std_error / u).powi(2) + rel_g * rel_g).sqrt(),
    })
}

fn nan_to_zero(x: f64) -> f64 {
    if x.is_nan() {
        0.0
    } else {
        x
    }
}

/// `A f/g + c λ u^β/g` at the given barriers.
pub fn lagrangian_objective(p: &LagrangianProblem, b: &Barriers) -> Result<ObjectiveValue> {
    let a = b.half_width();
    let theta = b.asymmetry();
    let r = unit_ratios(p, theta)?;
    let alpha = p.law.alpha();
    let k1 = p.a_coef * a * a;
    let k2 = p.multiplier * p.lambda * a.powf(p.beta - alpha);
    Ok(ObjectiveValue {
        value: p.scaled(r, a),
        std_error: (k1 * k1 * r.f_se * r.f_se + k2 * k2 * r.u_se * r.u_se).sqrt(),
    })
}

/// Result of [`minimize_lagrangian`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimalBarriers {
    pub barriers: Barriers,
    /// Half-width `a = (a̲ + ā)/2`.
    pub center: f64,
    /// Asymmetry `θ = (ā - a̲)/(ā + a̲)`.
    pub theta: f64,
    pub objective: f64,
}

/// Golden-section search for a minimum of `f` on `[lo, hi]`. Returns the
/// abscissa and value.
fn golden_section<F: FnMut(f64) -> Result<f64>>(
    mut f: F,
    lo: f64,
    hi: f64,
    tol: f64,
) -> Result<(f64, f64)> {
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - GOLDEN * (b - a);
    let mut x2 = a + GOLDEN * (b - a);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    while (b - a).abs() > tol {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - GOLDEN * (b - a);
            f1 = f(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + GOLDEN * (b - a);
            f2 = f(x2)?;
        }
    }
    Ok(if f1 <= f2 { (x1, f1) } else { (x2, f2) })
}

fn check_interior(variable: &'static str, x: f64, lo: f64, hi: f64, tol: f64, best: f64) -> Result<()> {
    if x - lo <= 2.0 * tol || hi - x <= 2.0 * tol {
        return Err(Error::SearchBox {
            variable,
            lo,
            hi,
            best,
        });
    }
    Ok(())
}

/// Minimizes the Lagrangian over barrier pairs.
///
/// The outer golden-section search runs over `θ`. For each `θ`, an inner
/// golden-section search over `ln a` minimizes the scaled objective. Closed
/// forms are used for symmetric laws. Asymmetric laws use Monte Carlo with
/// common random numbers and a coarser tolerance.
pub fn minimize_lagrangian(p: &LagrangianProblem) -> Result<OptimalBarriers> {
    let alpha = p.law.alpha();
    let exponent = 2.0 + alpha - p.beta;
    let guess = (p.multiplier * p.lambda / p.a_coef).powf(1.0 / exponent);
    let (lo_a, hi_a) = ((guess / WIDTH_BOX).ln(), (guess * WIDTH_BOX).ln());
    let symmetric = p.law.is_symmetric();
    let (theta_tol, width_tol) = if symmetric { (1e-7, 1e-10) } else { (1e-2, 1e-6) };

    let profile = |theta: f64| -> Result<(f64, f64)> {
        let r = unit_ratios(p, theta)?;
        let (log_a, value) = golden_section(|s| Ok(p.scaled(r, s.exp())), lo_a, hi_a, width_tol)?;
        check_interior("half-width", log_a, lo_a, hi_a, width_tol, log_a.exp())?;
        Ok((log_a.exp(), value))
    };

    let (theta, _) = golden_section(|t| Ok(profile(t)?.1), -THETA_BOX, THETA_BOX, theta_tol)?;
    check_interior("theta", theta, -THETA_BOX, THETA_BOX, theta_tol, theta)?;
    let (center, objective) = profile(theta)?;
    Ok(OptimalBarriers {
        barriers: Barriers::from_center(center, theta)?,
        center,
        theta,
        objective,
    })
}

/// `c (λ/A)^{1/(2+α-β)}`.
pub fn symmetric_power_barrier(a_coef: f64, lambda: f64, alpha: f64, beta: f64, c: f64) -> Result<f64> {
    ensure_positive("A", a_coef)?;
    ensure_positive("lambda", lambda)?;
    ensure_positive("c", c)?;
    crate::stable::check_alpha(alpha)?;
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::param("beta", format!("symmetric power rule needs beta in [0, 1], got {beta}")));
    }
    Ok(c * (lambda / a_coef).powf(1.0 / (2.0 + alpha - beta)))
}

/// Closed-form optimal barrier for a delta-hedge or Merton integrand:
///
/// * delta hedge: `c φ_y^{α/(2+α-β)} Y^{(α-2)/(2+α-β)}`;
/// * Merton: `c V^{α/(2+α-β)} Y^{-(2+α)/(2+α-β)}`.
pub fn strategy_barrier(spec: &IntegrandSpec, state: MarketState, alpha: f64, beta: f64, c: f64) -> Result<f64> {
    ensure_positive("c", c)?;
    crate::stable::check_alpha(alpha)?;
    check_beta(beta, alpha)?;
    let d = 2.0 + alpha - beta;
    match spec {
        IntegrandSpec::DeltaHedge(phi) => {
            let slope = phi.dy(state.t, state.y);
            if !(slope > 0.0) {
                return Err(Error::HypothesisViolation(format!(
                    "dphi/dy = {slope} is not positive at t = {}, y = {}",
                    state.t, state.y
                )));
            }
            ensure_positive("Y", state.y)?;
            Ok(c * slope.powf(alpha / d) * state.y.powf((alpha - 2.0) / d))
        }
        IntegrandSpec::Merton { .. } => {
            ensure_positive("V", state.v)?;
            ensure_positive("Y", state.y)?;
            Ok(c * state.v.powf(alpha / d) * state.y.powf(-(2.0 + alpha) / d))
        }
        IntegrandSpec::RawStable(_) => Err(Error::param(
            "rule",
            "strategy barriers apply to delta-hedge and Merton integrands",
        )),
    }
}

/// Barriers optimal for multiplier `c_new`, given those optimal for `c_old`:
/// both scale by `κ = (c_new/c_old)^{1/(α-β+2)}`.
pub fn budget_rescale(b: &Barriers, c_old: f64, c_new: f64, alpha: f64, beta: f64) -> Result<Barriers> {
    ensure_positive("c_old", c_old)?;
    ensure_positive("c_new", c_new)?;
    check_beta(beta, alpha)?;
    Ok(b.scaled(rescale_factor(c_old, c_new, alpha, beta)))
}

pub fn rescale_factor(c_old: f64, c_new: f64, alpha: f64, beta: f64) -> f64 {
    if c_old == c_new {
        return 1.0;
    }
    let ratio = c_new / c_old;
    match alpha - beta + 2.0 {
        2.0 => ratio.sqrt(),
        3.0 => ratio.cbrt(),
        d => ratio.powf(1.0 / d),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::LinearHedge;
    use approx::assert_relative_eq;
    use statrs::function::gamma::gamma;

    fn law() -> StableLaw {
        StableLaw::symmetric(1.5, 1.0).unwrap()
    }

    fn problem(beta: f64) -> LagrangianProblem {
        LagrangianProblem::new(1.0, 1.0, 1.0, beta, law()).unwrap()
    }

    #[test]
    fn objective_structure_on_the_diagonal() {
        let p = problem(0.5);
        let a = 1.7;
        let b = Barriers::symmetric(a).unwrap();
        let v = lagrangian_objective(&p, &b).unwrap();
        let k1 = 1.5 / (3.5 * 2.5);
        let direct = k1 * a * a
            + overshoot_moment(&law(), &b, 0.5).unwrap() / mean_exit_time(&law(), &b).unwrap();
        assert_relative_eq!(v.value, direct, max_relative = 1e-8);
        assert_eq!(v.std_error, 0.0);
    }

    #[test]
    fn cost_term_at_zero_beta() {
        let p = LagrangianProblem::new(1e-30, 2.0, 3.0, 0.0, law()).unwrap();
        let a: f64 = 1.3;
        let v = lagrangian_objective(&p, &Barriers::symmetric(a).unwrap()).unwrap().value;
        assert_relative_eq!(v, 6.0 * gamma(2.5) * a.powf(-1.5), max_relative = 1e-12);
    }

    #[test]
    fn doubling_barriers_scales_terms() {
        let only_error = LagrangianProblem::new(1.0, 1e-30, 1.0, 0.0, law()).unwrap();
        let only_cost = LagrangianProblem::new(1e-30, 1.0, 1.0, 0.0, law()).unwrap();
        let b = Barriers::new(0.7, 1.1).unwrap();
        let b2 = b.scaled(2.0);
        let e = |p: &LagrangianProblem, b: &Barriers| lagrangian_objective(p, b).unwrap().value;
        assert_relative_eq!(e(&only_error, &b2), 4.0 * e(&only_error, &b), max_relative = 1e-12);
        assert_relative_eq!(e(&only_cost, &b2), 2f64.powf(-1.5) * e(&only_cost, &b), max_relative = 1e-12);
    }

    #[test]
    fn symmetric_optimum_matches_first_order_condition() {
        let opt = minimize_lagrangian(&problem(0.0)).unwrap();
        let k1 = 1.5 / (3.5 * 2.5);
        let exact = (1.5 * gamma(2.5) / (2.0 * k1)).powf(1.0 / 3.5);
        assert!((opt.center - exact).abs() < 1e-7, "{} vs {exact}", opt.center);
        assert!((opt.center - 1.653757).abs() < 1e-3);
        assert!(opt.theta.abs() < 1e-6, "{}", opt.theta);
    }

    #[test]
    fn brute_force_grid_agrees() {
        let p = problem(0.0);
        let (mut best, mut arg) = (f64::INFINITY, 0.0);
        let mut a = 1.0;
        while a < 2.5 {
            let v = lagrangian_objective(&p, &Barriers::symmetric(a).unwrap()).unwrap().value;
            if v < best {
                best = v;
                arg = a;
            }
            a += 1e-4;
        }
        let opt = minimize_lagrangian(&p).unwrap();
        assert!((opt.center - arg).abs() < 2e-4);
    }

    #[test]
    fn multiplier_scaling_covariance() {
        let p = problem(0.0);
        let mut q = p;
        q.multiplier = 2f64.powf(3.5);
        let a = minimize_lagrangian(&p).unwrap();
        let b = minimize_lagrangian(&q).unwrap();
        assert_relative_eq!(b.center, 2.0 * a.center, max_relative = 1e-8);
    }

    #[test]
    fn free_theta_search_stays_symmetric_for_large_beta() {
        let opt = minimize_lagrangian(&problem(1.2)).unwrap();
        assert!(opt.theta.abs() < 1e-3, "{}", opt.theta);
    }

    #[test]
    fn asymmetric_law_uses_monte_carlo() {
        let skewed = StableLaw::new(1.5, 1.0, 0.2).unwrap();
        let mut p = LagrangianProblem::new(1.0, 1.0, 1.0, 0.0, skewed).unwrap();
        p.mc.settings = McSettings::new(300, 4);
        p.mc.dt_fraction = 1e-2;
        let v = lagrangian_objective(&p, &Barriers::new(1.0, 1.0).unwrap()).unwrap();
        assert!(v.std_error > 0.0);
        let opt = minimize_lagrangian(&p).unwrap();
        assert!(opt.center > 0.5 && opt.center < 5.0);
        assert!(opt.theta.abs() < THETA_BOX);
    }

    #[test]
    fn power_barrier_values() {
        assert_eq!(symmetric_power_barrier(2.0, 2.0, 1.5, 0.0, 0.7).unwrap(), 0.7);
        let v = symmetric_power_barrier(1.0, 2.0, 1.5, 0.0, 1.0).unwrap();
        assert!((v - 1.219014).abs() < 1e-6);
        let v = symmetric_power_barrier(1.0, 32.0, 1.5, 1.0, 1.0).unwrap();
        assert!((v - 4.0).abs() < 1e-14);
        assert!(symmetric_power_barrier(1.0, 1.0, 1.5, 1.2, 1.0).is_err());
    }

    #[test]
    fn power_barrier_is_the_symmetric_argmin() {
        // up to the constant factor, the formula tracks the optimizer for any (A, λ)
        let base = minimize_lagrangian(&problem(0.5)).unwrap().center;
        for &(a_coef, lambda) in &[(0.3, 2.0), (5.0, 0.1), (1.7, 1.7)] {
            let p = LagrangianProblem::new(a_coef, lambda, 1.0, 0.5, law()).unwrap();
            let opt = minimize_lagrangian(&p).unwrap().center;
            let formula = symmetric_power_barrier(a_coef, lambda, 1.5, 0.5, base).unwrap();
            assert_relative_eq!(opt, formula, max_relative = 1e-6);
        }
    }

    #[test]
    fn strategy_barrier_values() {
        let merton = IntegrandSpec::Merton { pi: 0.5, v0: 1000.0 };
        let state = MarketState { t: 0.0, y: 100.0, v: 1000.0 };
        let v = strategy_barrier(&merton, state, 1.5, 1.0, 1.0).unwrap();
        assert!((v - 0.1).abs() < 1e-15, "{v}");

        let hedge = IntegrandSpec::delta_hedge(LinearHedge { slope: 0.5 });
        let v = strategy_barrier(&hedge, state, 1.5, 0.0, 1.0).unwrap();
        // 0.5^{3/7} 100^{-1/7} to 20 digits
        assert!((v - 0.384_833_489_703_350_4).abs() < 1e-15, "{v}");
    }

    #[test]
    fn strategy_barrier_is_a_rescaled_power_barrier() {
        let q = 4.242640687119285;
        for &(slope, y, beta) in &[(0.2, 80.0, 0.0), (0.7, 120.0, 0.5), (1.3, 95.0, 1.0)] {
            let hedge = IntegrandSpec::delta_hedge(LinearHedge { slope });
            let state = MarketState { t: 0.0, y, v: 0.0 };
            let v = strategy_barrier(&hedge, state, 1.5, beta, 1.0).unwrap();
            let lambda = (y * slope).powf(1.5);
            let via_power = symmetric_power_barrier(y * y * q, lambda, 1.5, beta, q.powf(1.0 / (3.5 - beta))).unwrap();
            assert_relative_eq!(v, via_power, max_relative = 1e-12);
        }
    }

    #[test]
    fn rescale_values() {
        let b = Barriers::new(0.5, 1.5).unwrap();
        assert_eq!(budget_rescale(&b, 2.0, 2.0, 1.5, 0.0).unwrap(), b);
        let r = budget_rescale(&b, 1.0, 8.0, 1.5, 0.5).unwrap();
        assert_eq!((r.lower, r.upper), (1.0, 3.0));
        assert!((rescale_factor(1.0, 8.0, 1.5, 0.0) - 1.811447).abs() < 1e-6);
    }
}
