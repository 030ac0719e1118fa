//! Brute-force Monte Carlo estimates of the exit functionals, valid for
//! asymmetric laws where no closed form is available.

use super::law::{Barriers, StableLaw};
use super::sampling::StableSampler;
use super::closed_form::check_beta;
use crate::error::{ensure_positive, Error, Result};
use crate::montecarlo::{run_paths, Estimate, McSettings};

/// Default per-path step cap.
pub const DEFAULT_STEP_CAP: u64 = 100_000_000;

/// Monte Carlo counterpart of [`super::ExitFunctionals`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McExitFunctionals {
    pub f: Estimate,
    pub g: Estimate,
    pub u_beta: Estimate,
    pub beta: f64,
    pub dt: f64,
    pub n_paths: u64,
    /// Heuristic bound on the relative bias from grid monitoring,
    /// `4 (σ dt)^{1/α} / min(a̲, ā)`.
    pub bias_bound: f64,
}

struct PathExit {
    tau: f64,
    sq_integral: f64,
    overshoot_moment: f64,
}

/// Simulates `X*` from 0 on a uniform grid of step `dt` until it leaves
/// `(-lower, upper)`.
///
/// Time and `∫ X² dt` use the left-point rectangle rule, except that the last
/// step before detection is counted as half a step: a jump exit happens at a
/// uniform time inside that step.
pub fn mc_exit_functionals(
    law: &StableLaw,
    b: &Barriers,
    beta: f64,
    dt: f64,
    settings: &McSettings,
) -> Result<McExitFunctionals> {
    mc_exit_functionals_capped(law, b, beta, dt, settings, DEFAULT_STEP_CAP)
}

pub fn mc_exit_functionals_capped(
    law: &StableLaw,
    b: &Barriers,
    beta: f64,
    dt: f64,
    settings: &McSettings,
    step_cap: u64,
) -> Result<McExitFunctionals> {
    ensure_positive("dt", dt)?;
    check_beta(law, beta)?;
    if settings.n_paths < 1 {
        return Err(Error::param("n_paths", "must be >= 1"));
    }
    let sampler = StableSampler::new(law);
    let scale = sampler.increment_scale(dt);
    let (lo, hi) = (-b.lower, b.upper);

    let paths = run_paths(settings, |index, rng| {
        let mut x = 0.0f64;
        let mut steps = 0u64;
        let mut sq = 0.0;
        loop {
            if steps >= step_cap {
                return Err(Error::BudgetExceeded {
                    path_index: index,
                    budget: step_cap,
                });
            }
            let prev = x;
            x += scale * sampler.standard(rng);
            steps += 1;
            if x <= lo || x >= hi {
                sq += prev * prev * 0.5 * dt;
                let overshoot_moment = if beta == 0.0 { 1.0 } else { x.abs().powf(beta) };
                return Ok(PathExit {
                    tau: (steps as f64 - 0.5) * dt,
                    sq_integral: sq,
                    overshoot_moment,
                });
            }
            sq += prev * prev * dt;
        }
    })?;

    Ok(McExitFunctionals {
        f: Estimate::from_samples(paths.iter().map(|p| p.sq_integral)),
        g: Estimate::from_samples(paths.iter().map(|p| p.tau)),
        u_beta: Estimate::from_samples(paths.iter().map(|p| p.overshoot_moment)),
        beta,
        dt,
        n_paths: settings.n_paths,
        bias_bound: 4.0 * (law.sigma() * dt).powf(1.0 / law.alpha()) / b.lower.min(b.upper),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stable::closed_form::{mean_exit_time, mean_squared_integral};

    #[test]
    fn zero_order_moment_is_exactly_one() {
        let law = StableLaw::symmetric(1.5, 1.0).unwrap();
        let b = Barriers::new(1.0, 1.0).unwrap();
        let r = mc_exit_functionals(&law, &b, 0.0, 0.01, &McSettings::new(200, 4)).unwrap();
        assert_eq!(r.u_beta.mean, 1.0);
        assert_eq!(r.u_beta.std_error, 0.0);
    }

    #[test]
    fn step_cap_names_the_path() {
        let law = StableLaw::symmetric(1.5, 1.0).unwrap();
        let b = Barriers::new(1.0, 1.0).unwrap();
        let err = mc_exit_functionals_capped(&law, &b, 0.0, 1e-6, &McSettings::new(3, 4), 10)
            .unwrap_err();
        assert_eq!(
            err,
            Error::BudgetExceeded {
                path_index: 0,
                budget: 10
            }
        );
    }

    #[test]
    fn rejects_invalid_inputs() {
        let law = StableLaw::symmetric(1.5, 1.0).unwrap();
        let b = Barriers::new(1.0, 1.0).unwrap();
        let s = McSettings::new(10, 1);
        assert!(mc_exit_functionals(&law, &b, 1.6, 0.01, &s).is_err());
        assert!(mc_exit_functionals(&law, &b, 0.5, 0.0, &s).is_err());
        assert!(mc_exit_functionals(&law, &b, 0.5, 0.01, &McSettings::new(0, 1)).is_err());
    }

    #[test]
    fn coarse_oracle_is_close_to_closed_forms() {
        // desk-scale smoke check; the tight comparison lives in the acceptance suite
        let law = StableLaw::symmetric(1.5, 1.0).unwrap();
        let b = Barriers::new(1.0, 1.0).unwrap();
        let g = mean_exit_time(&law, &b).unwrap();
        let f = mean_squared_integral(&law, &b).unwrap();
        let r = mc_exit_functionals(&law, &b, 0.5, 1e-3 * g, &McSettings::new(4000, 17)).unwrap();
        assert!((r.g.mean / g - 1.0).abs() < r.bias_bound + 4.0 * r.g.std_error / g);
        assert!((r.f.mean / f - 1.0).abs() < r.bias_bound + 4.0 * r.f.std_error / f);
    }

    #[test]
    fn handles_one_sided_jumps() {
        let law = StableLaw::new(1.5, 1.0, 0.0).unwrap();
        let b = Barriers::new(1.0, 1.0).unwrap();
        let r = mc_exit_functionals(&law, &b, 1.0, 1e-3, &McSettings::new(500, 2)).unwrap();
        assert!(r.g.mean > 0.0 && r.f.mean > 0.0 && r.u_beta.mean >= 1.0);
    }
}
