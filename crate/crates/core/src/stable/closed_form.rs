//! Exit functionals of a symmetric stable process from `(-lower, upper)`,
//! started at 0.

use std::f64::consts::PI;

use statrs::function::gamma::gamma;

use super::law::{Barriers, StableLaw};
use crate::error::{Error, Result};
use crate::quadrature::jacobi_weighted_unit;

/// Absolute tolerance targeted by [`overshoot_moment`].
pub const OVERSHOOT_ABS_TOL: f64 = 1e-8;

/// `g(a̲, ā) = E[τ] = (a̲ ā)^{α/2} / (σ Γ(1+α))`.
pub fn mean_exit_time(law: &StableLaw, b: &Barriers) -> Result<f64> {
    law.require_symmetric()?;
    let alpha = law.alpha();
    Ok((b.lower * b.upper).powf(0.5 * alpha) / (law.sigma() * gamma(1.0 + alpha)))
}

/// `f(a̲, ā) = E[∫_0^τ X_t² dt]`.
pub fn mean_squared_integral(law: &StableLaw, b: &Barriers) -> Result<f64> {
    law.require_symmetric()?;
    let alpha = law.alpha();
    let (a, c) = (b.lower, b.upper);
    let ratio_sum = a / c + c / a;
    Ok(alpha * (a * c).powf(1.0 + 0.5 * alpha) / (2.0 * law.sigma() * gamma(3.0 + alpha))
        * (ratio_sum * (1.0 + 0.5 * alpha) - alpha))
}

/// `f/g` without the common `(a̲ā)^{α/2}/σ` factor cancelling numerically.
pub fn squared_integral_per_time(law: &StableLaw, b: &Barriers) -> Result<f64> {
    law.require_symmetric()?;
    let alpha = law.alpha();
    let (a, c) = (b.lower, b.upper);
    let ratio_sum = a / c + c / a;
    Ok(alpha * gamma(1.0 + alpha) * a * c / (2.0 * gamma(3.0 + alpha))
        * (ratio_sum * (1.0 + 0.5 * alpha) - alpha))
}

/// Density of the exit position `X_τ`; zero inside the interval.
pub fn overshoot_density(law: &StableLaw, b: &Barriers, z: f64) -> Result<f64> {
    law.require_symmetric()?;
    if z == b.upper || z == -b.lower {
        return Err(Error::SingularPoint(z));
    }
    if b.contains(z) {
        return Ok(0.0);
    }
    let alpha = law.alpha();
    let (a, c) = (b.lower, b.upper);
    Ok((PI * alpha / 2.0).sin() / PI
        * (a * c).powf(0.5 * alpha)
        * ((z - c) * (z + a)).powf(-0.5 * alpha)
        / z.abs())
}

/// `u^β(a̲, ā) = E[|X_τ|^β]` for `0 <= β < α`; exactly 1 at β = 0.
pub fn overshoot_moment(law: &StableLaw, b: &Barriers, beta: f64) -> Result<f64> {
    check_beta(law, beta)?;
    if beta == 0.0 {
        return Ok(1.0);
    }
    overshoot_moment_quadrature(law, b, beta)
}

pub(crate) fn check_beta(law: &StableLaw, beta: f64) -> Result<()> {
    if !(beta.is_finite() && beta >= 0.0) {
        return Err(Error::param("beta", format!("must be finite and >= 0, got {beta}")));
    }
    if beta >= law.alpha() {
        return Err(Error::InfiniteMoment {
            beta,
            alpha: law.alpha(),
        });
    }
    Ok(())
}

/// Quadrature evaluation of the overshoot moment, also at β = 0 (where it is
/// the total mass of the exit law).
///
/// With `s = a̲ + ā` and `z = s t / (1 - t)` the moment integral becomes
/// `s^{1-α} ∫_0^1 t^{-α/2} (1-t)^{α-β-1} [(a̲ + ā t)^{β-1} + (ā + a̲ t)^{β-1}] dt`,
/// whose algebraic endpoint factors are handled by Gauss–Jacobi panels.
pub fn overshoot_moment_quadrature(law: &StableLaw, b: &Barriers, beta: f64) -> Result<f64> {
    law.require_symmetric()?;
    check_beta(law, beta)?;
    let alpha = law.alpha();
    let (a, c) = (b.lower, b.upper);
    let s = a + c;
    let prefactor = (PI * alpha / 2.0).sin() / PI * (a * c).powf(0.5 * alpha) * s.powf(1.0 - alpha);
    let h = |t: f64| (a + c * t).powf(beta - 1.0) + (c + a * t).powf(beta - 1.0);
    let tol = (0.1 * OVERSHOOT_ABS_TOL / prefactor).min(1e-10);
    let integral = jacobi_weighted_unit(-0.5 * alpha, alpha - beta - 1.0, h, tol)?;
    Ok(prefactor * integral)
}
