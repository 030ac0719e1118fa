//! The strictly α-stable limit process: sampling, closed-form exit
//! functionals for the symmetric case, and a Monte Carlo oracle.

mod closed_form;
mod law;
mod oracle;
mod sampling;

pub use closed_form::{
    mean_exit_time, mean_squared_integral, overshoot_density, overshoot_moment,
    overshoot_moment_quadrature, squared_integral_per_time, OVERSHOOT_ABS_TOL,
};

pub use law::{stable_scale_constant, Barriers, StableLaw};
pub(crate) use law::check_alpha;
pub use oracle::{mc_exit_functionals, mc_exit_functionals_capped, McExitFunctionals, DEFAULT_STEP_CAP};
pub use sampling::{sample_stable_increments, StableSampler};

use crate::error::{Error, Result};

/// Closed-form exit functionals of a symmetric law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExitFunctionals {
    /// `E[∫_0^τ X_t² dt]`
    pub f: f64,
    /// `E[τ]`
    pub g: f64,
    /// `E[|X_τ|^β]`
    pub u_beta: f64,
    pub beta: f64,
}

impl ExitFunctionals {
    pub fn closed_form(law: &StableLaw, b: &Barriers, beta: f64) -> Result<Self> {
        let out = Self {
            f: mean_squared_integral(law, b)?,
            g: mean_exit_time(law, b)?,
            u_beta: overshoot_moment(law, b, beta)?,
            beta,
        };
        if !(out.f > 0.0 && out.g > 0.0 && out.u_beta > 0.0) {
            return Err(Error::Internal(format!("non-positive exit functional {out:?}")));
        }
        Ok(out)
    }
}
