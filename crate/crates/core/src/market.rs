//! Exponential Lévy asset models and the integrands (strategies) to be
//! discretized.
//!
//! The asset is `Y = Y_0 E(Z)` where `Z` is a pure-jump martingale Lévy process
//! whose Lévy density is a truncated power law, so its small jumps are exactly
//! stable-like: `x^{1+α} ν̄(x) = α c₊` near 0⁺ and `α c₋` near 0⁻.

use std::fmt::Debug;
use std::sync::Arc;

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{ensure_positive, Error, Result};
use crate::quadrature::adaptive_gk;
use crate::stable::{check_alpha, StableLaw};

/// `ν̄(x) = α c₊ x^{-1-α}` on (0, cutoff], `α c₋ |x|^{-1-α}` on [-cutoff, 0).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncatedStableDensity {
    alpha: f64,
    c_plus: f64,
    c_minus: f64,
    cutoff: f64,
}

/// Validates the parameters and returns the density together with its
/// quadratic coefficient `q = ∫ z² ν̄(z) dz`.
pub fn build_truncated_stable_density(
    alpha: f64,
    c_plus: f64,
    c_minus: f64,
    cutoff: f64,
) -> Result<TruncatedStableDensity> {
    check_alpha(alpha)?;
    ensure_positive("cutoff", cutoff)?;
    for (name, c) in [("c_plus", c_plus), ("c_minus", c_minus)] {
        if !(c.is_finite() && c >= 0.0) {
            return Err(Error::param(name, format!("must be finite and >= 0, got {c}")));
        }
    }
    if c_plus + c_minus <= 0.0 {
        return Err(Error::param("c_plus + c_minus", "must be > 0"));
    }
    if c_minus > 0.0 && cutoff >= 1.0 {
        return Err(Error::param(
            "cutoff",
            format!("negative jumps must stay above -1 to keep the price positive, got cutoff {cutoff}"),
        ));
    }
    let d = TruncatedStableDensity {
        alpha,
        c_plus,
        c_minus,
        cutoff,
    };
    d.verify_compensator()?;
    Ok(d)
}

impl TruncatedStableDensity {
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn c_plus(&self) -> f64 {
        self.c_plus
    }

    pub fn c_minus(&self) -> f64 {
        self.c_minus
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn density(&self, x: f64) -> f64 {
        if x == 0.0 || x.abs() > self.cutoff {
            return 0.0;
        }
        let c = if x > 0.0 { self.c_plus } else { self.c_minus };
        self.alpha * c * x.abs().powf(-1.0 - self.alpha)
    }

    /// `q = ∫ z² ν̄(z) dz`.
    pub fn quadratic_coefficient(&self) -> f64 {
        self.alpha * (self.c_plus + self.c_minus) * self.cutoff.powf(2.0 - self.alpha)
            / (2.0 - self.alpha)
    }

    /// Jump rate above `delta`: `ν̄({|z| > δ})`, split into (positive, negative).
    pub fn rate_above(&self, delta: f64) -> (f64, f64) {
        if delta >= self.cutoff {
            return (0.0, 0.0);
        }
        let k = delta.powf(-self.alpha) - self.cutoff.powf(-self.alpha);
        (self.c_plus * k, self.c_minus * k)
    }

    /// `∫_{|z| > δ} z ν̄(z) dz`, the mean of the large jumps per unit time.
    pub fn first_moment_above(&self, delta: f64) -> f64 {
        if delta >= self.cutoff {
            return 0.0;
        }
        let k = (delta.powf(1.0 - self.alpha) - self.cutoff.powf(1.0 - self.alpha))
            / (self.alpha - 1.0);
        self.alpha * (self.c_plus - self.c_minus) * k
    }

    /// Drift that compensates the jumps above `delta`, making `Z` a martingale.
    pub fn compensator_drift(&self, delta: f64) -> f64 {
        -self.first_moment_above(delta)
    }

    /// `x^α ν̄((x, cutoff])`, which tends to `c₊` as `x ↓ 0`.
    pub fn scaled_upper_tail(&self, x: f64) -> f64 {
        x.powf(self.alpha) * self.rate_above(x).0
    }

    /// Inverse-transform draw of a jump size conditional on `|z| > δ`, from
    /// two uniforms: `u_sign` picks the side, `u` the magnitude.
    pub fn sample_large_jump(&self, delta: f64, u_sign: f64, u: f64) -> f64 {
        let (up, down) = self.rate_above(delta);
        let lo = delta.powf(-self.alpha);
        let hi = self.cutoff.powf(-self.alpha);
        let magnitude = (lo - u * (lo - hi)).powf(-1.0 / self.alpha);
        if u_sign * (up + down) < up {
            magnitude
        } else {
            -magnitude
        }
    }

    /// Strictly stable law governing the small jumps: its Lévy density is the
    /// power law `ν̄` continued to the whole line.
    pub fn small_jump_law(&self) -> StableLaw {
        StableLaw::new(self.alpha, self.alpha * self.c_plus, self.alpha * self.c_minus)
            .expect("validated at construction")
    }

    fn verify_compensator(&self) -> Result<()> {
        let delta = 1e-3 * self.cutoff;
        let closed = self.first_moment_above(delta);
        let quad = adaptive_gk(|z| z * self.density(z), delta, self.cutoff, 1e-13, 2000)?.0
            + adaptive_gk(|z| z * self.density(z), -self.cutoff, -delta, 1e-13, 2000)?.0;
        let scale = self.alpha * (self.c_plus + self.c_minus) * delta.powf(1.0 - self.alpha);
        if (closed - quad).abs() > 1e-10 * scale.max(1.0) {
            return Err(Error::Internal(format!(
                "compensator mismatch: closed form {closed}, quadrature {quad}"
            )));
        }
        Ok(())
    }
}

/// Asset model: `Y = y0 E(Z)` with `Z` driven by a truncated stable density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevyMarketModel {
    pub density: TruncatedStableDensity,
    pub y0: f64,
}

impl LevyMarketModel {
    pub fn new(density: TruncatedStableDensity, y0: f64) -> Result<Self> {
        ensure_positive("y0", y0)?;
        Ok(Self { density, y0 })
    }

    pub fn alpha(&self) -> f64 {
        self.density.alpha
    }

    /// `q`, so that `A_t = Y_t² q`.
    pub fn quadratic_coefficient(&self) -> f64 {
        self.density.quadratic_coefficient()
    }
}

/// A strategy `φ(t, y)` with its partial derivatives.
pub trait HedgeFunction: Send + Sync + Debug {
    fn value(&self, t: f64, y: f64) -> f64;
    fn dy(&self, t: f64, y: f64) -> f64;
    fn dt(&self, t: f64, y: f64) -> f64;
}

/// Black–Scholes-type delta `N(ln(y/K)/(v√τ) + v√τ/2)`, `τ = maturity - t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlackScholesDelta {
    pub strike: f64,
    pub vol: f64,
    pub maturity: f64,
}

impl BlackScholesDelta {
    pub fn new(strike: f64, vol: f64, maturity: f64) -> Result<Self> {
        ensure_positive("strike", strike)?;
        ensure_positive("vol", vol)?;
        ensure_positive("maturity", maturity)?;
        Ok(Self {
            strike,
            vol,
            maturity,
        })
    }

    fn d1(&self, t: f64, y: f64) -> (f64, f64) {
        let tau = self.maturity - t;
        let s = self.vol * tau.sqrt();
        ((y / self.strike).ln() / s + 0.5 * s, tau)
    }
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("standard normal")
}

fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

impl HedgeFunction for BlackScholesDelta {
    fn value(&self, t: f64, y: f64) -> f64 {
        std_normal().cdf(self.d1(t, y).0)
    }

    fn dy(&self, t: f64, y: f64) -> f64 {
        let (d1, tau) = self.d1(t, y);
        normal_pdf(d1) / (y * self.vol * tau.sqrt())
    }

    fn dt(&self, t: f64, y: f64) -> f64 {
        let (d1, tau) = self.d1(t, y);
        let m = (y / self.strike).ln();
        // ∂d1/∂τ, and ∂/∂t = -∂/∂τ
        let dd1_dtau = -0.5 * m / (self.vol * tau.powf(1.5)) + 0.25 * self.vol / tau.sqrt();
        -normal_pdf(d1) * dd1_dtau
    }
}

/// `φ(t, y) = slope · y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearHedge {
    pub slope: f64,
}

impl HedgeFunction for LinearHedge {
    fn value(&self, _t: f64, y: f64) -> f64 {
        self.slope * y
    }

    fn dy(&self, _t: f64, _y: f64) -> f64 {
        self.slope
    }

    fn dt(&self, _t: f64, _y: f64) -> f64 {
        0.0
    }
}

/// The integrand `X` whose stochastic integral against `Y` is discretized.
#[derive(Debug, Clone)]
pub enum IntegrandSpec {
    /// `X_t = φ(t, Y_t)` with `∂φ/∂y > 0`.
    DeltaHedge(Arc<dyn HedgeFunction>),
    /// Constant-proportion strategy: `X = π V / Y`.
    Merton { pi: f64, v0: f64 },
    /// `X` is the stable process itself; `A ≡ λ ≡ 1`.
    RawStable(StableLaw),
}

impl IntegrandSpec {
    pub fn delta_hedge<H: HedgeFunction + 'static>(phi: H) -> Self {
        IntegrandSpec::DeltaHedge(Arc::new(phi))
    }

    /// Checks the integrand against the model it will run on.
    pub fn validate(&self, model: Option<&LevyMarketModel>) -> Result<()> {
        match (self, model) {
            (IntegrandSpec::RawStable(_), _) => Ok(()),
            (_, None) => Err(Error::param("model", "market integrands need a market model")),
            (IntegrandSpec::DeltaHedge(_), Some(_)) => Ok(()),
            (IntegrandSpec::Merton { pi, v0 }, Some(m)) => {
                ensure_positive("v0", *v0)?;
                if !pi.is_finite() {
                    return Err(Error::param("pi", "must be finite"));
                }
                // wealth stays positive iff 1 + π z > 0 on the jump support
                let cut = m.density.cutoff;
                let worst = if *pi >= 0.0 {
                    1.0 - pi * if m.density.c_minus > 0.0 { cut } else { 0.0 }
                } else {
                    1.0 + pi * if m.density.c_plus > 0.0 { cut } else { 0.0 }
                };
                if worst <= 0.0 {
                    return Err(Error::HypothesisViolation(format!(
                        "jump support [-{cut}, {cut}] lets a pi = {pi} portfolio lose all wealth"
                    )));
                }
                Ok(())
            }
        }
    }
}

/// Instantaneous state: time, asset price, and the integrand's own state
/// variable `v` (portfolio wealth for Merton, the stable level for RawStable,
/// unused for DeltaHedge).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarketState {
    pub t: f64,
    pub y: f64,
    pub v: f64,
}

/// `(X_t, A_t, λ_t)` at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficients {
    pub x: f64,
    pub a_coef: f64,
    pub lambda: f64,
}

pub fn coefficient_processes(
    model: Option<&LevyMarketModel>,
    spec: &IntegrandSpec,
    state: MarketState,
) -> Result<Coefficients> {
    let market = |m: Option<&LevyMarketModel>| {
        m.copied()
            .ok_or_else(|| Error::param("model", "market integrands need a market model"))
    };
    match spec {
        IntegrandSpec::RawStable(_) => Ok(Coefficients {
            x: state.v,
            a_coef: 1.0,
            lambda: 1.0,
        }),
        IntegrandSpec::DeltaHedge(phi) => {
            let m = market(model)?;
            check_price(state.y)?;
            let slope = phi.dy(state.t, state.y);
            if !(slope > 0.0) {
                return Err(Error::HypothesisViolation(format!(
                    "dphi/dy = {slope} is not positive at t = {}, y = {}",
                    state.t, state.y
                )));
            }
            Ok(Coefficients {
                x: phi.value(state.t, state.y),
                a_coef: state.y * state.y * m.quadratic_coefficient(),
                lambda: (state.y * slope).powf(m.alpha()),
            })
        }
        IntegrandSpec::Merton { pi, .. } => {
            let m = market(model)?;
            check_price(state.y)?;
            let x = pi * state.v / state.y;
            Ok(Coefficients {
                x,
                a_coef: state.y * state.y * m.quadratic_coefficient(),
                lambda: ((pi - 1.0) * x).abs().powf(m.alpha()),
            })
        }
    }
}

fn check_price(y: f64) -> Result<()> {
    if y > 0.0 && y.is_finite() {
        Ok(())
    } else {
        Err(Error::Internal(format!("asset price must stay positive, got {y}")))
    }
}
