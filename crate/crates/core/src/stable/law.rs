use std::f64::consts::PI;

use statrs::function::gamma::gamma;

use crate::error::{ensure_positive, Error, Result};

/// Strictly α-stable law with Lévy density
/// `(c_plus 1{x>0} + c_minus 1{x<0}) / |x|^(1+α)`, 1 < α < 2.
///
/// `sigma` is the characteristic scale: the log-characteristic function is
/// `-t σ |u|^α (1 - i s sgn(u) tan(πα/2))` with skewness
/// `s = (c_plus - c_minus) / (c_plus + c_minus)`, so in the symmetric case
/// `E[exp(iuX_t)] = exp(-t σ |u|^α)`. It is always derived from the tail
/// coefficients, `σ = -(c_plus + c_minus) Γ(-α) cos(πα/2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StableLaw {
    alpha: f64,
    c_plus: f64,
    c_minus: f64,
    sigma: f64,
}

/// `-Γ(-α) cos(πα/2)`, positive on (1, 2): the value of
/// `∫_0^∞ (1 - cos y) y^(-1-α) dy`.
pub fn stable_scale_constant(alpha: f64) -> f64 {
    // Γ(-α) = Γ(2-α) / ((-α)(1-α)) avoids evaluating gamma at a negative argument
    let gamma_neg = gamma(2.0 - alpha) / (alpha * (alpha - 1.0));
    -gamma_neg * (PI * alpha / 2.0).cos()
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha.is_finite() && alpha > 1.0 && alpha < 2.0 {
        Ok(())
    } else {
        Err(Error::param("alpha", format!("must lie in (1, 2), got {alpha}")))
    }
}

impl StableLaw {
    pub fn new(alpha: f64, c_plus: f64, c_minus: f64) -> Result<Self> {
        check_alpha(alpha)?;
        for (name, c) in [("c_plus", c_plus), ("c_minus", c_minus)] {
            if !(c.is_finite() && c >= 0.0) {
                return Err(Error::param(name, format!("must be finite and >= 0, got {c}")));
            }
        }
        if c_plus + c_minus <= 0.0 {
            return Err(Error::param("c_plus + c_minus", "must be > 0"));
        }
        let sigma = (c_plus + c_minus) * stable_scale_constant(alpha);
        Ok(Self {
            alpha,
            c_plus,
            c_minus,
            sigma,
        })
    }

    /// Symmetric law with characteristic function `exp(-t σ |u|^α)`.
    pub fn symmetric(alpha: f64, sigma: f64) -> Result<Self> {
        check_alpha(alpha)?;
        ensure_positive("sigma", sigma)?;
        let c = sigma / (2.0 * stable_scale_constant(alpha));
        Self::new(alpha, c, c)
    }

    /// Builds a law from all four parameters, rejecting a `sigma` that
    /// disagrees with the tail coefficients.
    pub fn with_sigma(alpha: f64, c_plus: f64, c_minus: f64, sigma: f64) -> Result<Self> {
        let law = Self::new(alpha, c_plus, c_minus)?;
        if (law.sigma - sigma).abs() > 1e-10 * law.sigma {
            return Err(Error::param(
                "sigma",
                format!(
                    "inconsistent with the Lévy density: tail coefficients imply {}, got {sigma}",
                    law.sigma
                ),
            ));
        }
        Ok(law)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn c_plus(&self) -> f64 {
        self.c_plus
    }

    pub fn c_minus(&self) -> f64 {
        self.c_minus
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn is_symmetric(&self) -> bool {
        (self.c_plus - self.c_minus).abs() <= 1e-12 * (self.c_plus + self.c_minus)
    }

    pub fn skewness(&self) -> f64 {
        (self.c_plus - self.c_minus) / (self.c_plus + self.c_minus)
    }

    /// Lévy density `ν*(x)`.
    pub fn levy_density(&self, x: f64) -> f64 {
        let c = if x > 0.0 {
            self.c_plus
        } else if x < 0.0 {
            self.c_minus
        } else {
            return f64::INFINITY;
        };
        c * x.abs().powf(-1.0 - self.alpha)
    }

    pub(crate) fn require_symmetric(&self) -> Result<()> {
        if self.is_symmetric() {
            Ok(())
        } else {
            Err(Error::AsymmetricLaw {
                c_plus: self.c_plus,
                c_minus: self.c_minus,
            })
        }
    }
}

/// Pair of positive barrier widths: the process exits `(-lower, upper)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Barriers {
    pub lower: f64,
    pub upper: f64,
}

impl Barriers {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        ensure_positive("lower barrier", lower)?;
        ensure_positive("upper barrier", upper)?;
        Ok(Self { lower, upper })
    }

    pub fn symmetric(a: f64) -> Result<Self> {
        Self::new(a, a)
    }

    /// From half-width `a = (lower + upper) / 2` and asymmetry
    /// `θ = (upper - lower) / (upper + lower)`, |θ| < 1.
    pub fn from_center(a: f64, theta: f64) -> Result<Self> {
        if !(theta.abs() < 1.0) {
            return Err(Error::param("theta", format!("must lie in (-1, 1), got {theta}")));
        }
        Self::new(a * (1.0 - theta), a * (1.0 + theta))
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }

    pub fn asymmetry(&self) -> f64 {
        (self.upper - self.lower) / (self.upper + self.lower)
    }

    pub fn scaled(&self, kappa: f64) -> Self {
        Self {
            lower: kappa * self.lower,
            upper: kappa * self.upper,
        }
    }

    pub fn swapped(&self) -> Self {
        Self {
            lower: self.upper,
            upper: self.lower,
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        x > -self.lower && x < self.upper
    }
}
