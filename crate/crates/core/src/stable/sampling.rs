use std::f64::consts::PI;

use rand::distr::Open01;
use rand::Rng;
use rand_distr::Exp1;

use statrs::function::gamma::{gamma, gamma_lr};

use super::law::StableLaw;
use crate::error::{ensure_finite, ensure_positive, Error, Result};
use crate::quadrature::adaptive_gk;

/// Chambers–Mallows–Stuck sampler for the strictly stable law `X*_1`.
///
/// The tail coefficients map onto the Samorodnitsky–Taqqu parameterization
/// `S_α(γ, s, 0)` with `γ^α = σ` and skewness `s = (c₊ - c₋)/(c₊ + c₋)`;
/// for 1 < α < 2 this law is centered, hence strictly stable.
#[derive(Debug, Clone, Copy)]
pub struct StableSampler {
    alpha: f64,
    inv_alpha: f64,
    shift: f64,
    amplitude: f64,
    exponent: f64,
    unit_scale: f64,
}

impl StableSampler {
    pub fn new(law: &StableLaw) -> Self {
        let alpha = law.alpha();
        let t = law.skewness() * (PI * alpha / 2.0).tan();
        Self {
            alpha,
            inv_alpha: 1.0 / alpha,
            shift: t.atan() / alpha,
            amplitude: (1.0 + t * t).powf(0.5 / alpha),
            exponent: (1.0 - alpha) / alpha,
            unit_scale: law.sigma().powf(1.0 / alpha),
        }
    }

    /// One draw of `S_α(1, s, 0)`.
    #[inline]
    pub fn standard<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let v = PI * (rng.sample::<f64, _>(Open01) - 0.5);
        let w: f64 = rng.sample(Exp1);
        let arg = self.alpha * (v + self.shift);
        // both powers folded into a single exp
        let log_mag = self.exponent * ((v - arg).cos() / w).ln() - self.inv_alpha * v.cos().ln();
        self.amplitude * arg.sin() * log_mag.exp()
    }

    /// Multiplier turning a standard draw into an increment over `dt`.
    #[inline]
    pub fn increment_scale(&self, dt: f64) -> f64 {
        self.unit_scale * dt.powf(self.inv_alpha)
    }

    /// `(P(|S| <= r), E[S; |S| <= r])` for a standard draw `S`.
    ///
    /// For fixed `V` the draw is `K(V) W^{(α-1)/α}`, monotone in `W`, so both
    /// quantities reduce to one-dimensional integrals over `V`.
    pub fn truncated_moments(&self, r: f64) -> Result<(f64, f64)> {
        ensure_positive("r", r)?;
        let p = (self.alpha - 1.0) / self.alpha;
        let coefficient = |v: f64| {
            let arg = self.alpha * (v + self.shift);
            self.amplitude * arg.sin() / v.cos().powf(self.inv_alpha)
                * (v - arg).cos().powf(self.exponent)
        };
        let w_max = |k: f64| {
            if k == 0.0 {
                f64::INFINITY
            } else {
                (r / k.abs()).powf(1.0 / p)
            }
        };
        let lo = -0.5 * PI;
        let hi = 0.5 * PI;
        let prob = adaptive_gk(|v| -(-w_max(coefficient(v))).exp_m1(), lo, hi, 1e-11, 5000)?.0 / PI;
        let g = gamma(p + 1.0);
        let partial = |v: f64| {
            let k = coefficient(v);
            let w = w_max(k);
            if w == 0.0 || !k.is_finite() {
                0.0
            } else if w.is_infinite() {
                k * g
            } else {
                k * g * gamma_lr(p + 1.0, w)
            }
        };
        let mean = adaptive_gk(partial, lo, hi, 1e-11, 5000)?.0 / PI;
        Ok((prob, mean))
    }

    /// One increment `X*_{t+dt} - X*_t`.
    #[inline]
    pub fn increment<R: Rng + ?Sized>(&self, rng: &mut R, dt: f64) -> f64 {
        self.increment_scale(dt) * self.standard(rng)
    }
}

/// `n` i.i.d. increments of `X*` over a step `dt`.
pub fn sample_stable_increments<R: Rng + ?Sized>(
    law: &StableLaw,
    dt: f64,
    n: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    ensure_finite("dt", dt)?;
    ensure_positive("dt", dt)?;
    if n == 0 {
        return Err(Error::param("n", "must be >= 1"));
    }
    let sampler = StableSampler::new(law);
    let scale = sampler.increment_scale(dt);
    Ok((0..n).map(|_| scale * sampler.standard(rng)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    #[test]
    fn determinism_per_stream() {
        let law = StableLaw::new(1.5, 1.0, 0.3).unwrap();
        let a = sample_stable_increments(&law, 0.1, 500, &mut RngStream::new(9, 3)).unwrap();
        let b = sample_stable_increments(&law, 0.1, 500, &mut RngStream::new(9, 3)).unwrap();
        assert_eq!(
            a.iter().map(|x| x.to_bits()).collect::<Vec<_>>(),
            b.iter().map(|x| x.to_bits()).collect::<Vec<_>>()
        );
    }

    #[test]
    fn rejects_bad_step() {
        let law = StableLaw::symmetric(1.5, 1.0).unwrap();
        let mut rng = RngStream::new(1, 0);
        assert!(sample_stable_increments(&law, f64::NAN, 10, &mut rng).is_err());
        assert!(sample_stable_increments(&law, 0.0, 10, &mut rng).is_err());
        assert!(sample_stable_increments(&law, 1.0, 0, &mut rng).is_err());
    }

    #[test]
    fn symmetric_median_is_zero() {
        let law = StableLaw::symmetric(1.5, 1.0).unwrap();
        let n = 200_000;
        let xs = sample_stable_increments(&law, 1.0, n, &mut RngStream::new(5, 0)).unwrap();
        let positive = xs.iter().filter(|&&x| x > 0.0).count() as f64;
        // sign count is Binomial(n, 1/2) under a zero median
        let z = (positive - 0.5 * n as f64) / (0.25 * n as f64).sqrt();
        assert!(z.abs() < 3.0, "z = {z}");
    }

    #[test]
    fn empirical_characteristic_function() {
        let law = StableLaw::symmetric(1.5, 1.0).unwrap();
        let n = 1_000_000;
        let xs = sample_stable_increments(&law, 1.0, n, &mut RngStream::new(11, 0)).unwrap();
        for &u in &[0.5f64, 1.0, 2.0] {
            let c: Vec<f64> = xs.iter().map(|x| (u * x).cos()).collect();
            let mean = c.iter().sum::<f64>() / n as f64;
            let var = c.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
            let se = (var / n as f64).sqrt();
            let exact = (-u.powf(1.5)).exp();
            assert!((mean - exact).abs() < 3.0 * se, "u={u}: {mean} vs {exact} (se {se})");
        }
    }

    #[test]
    fn truncated_moments_match_sampling() {
        let law = StableLaw::new(1.5, 1.5, 0.375).unwrap();
        let sampler = StableSampler::new(&law);
        let n = 1_000_000;
        let mut rng = RngStream::new(4, 0);
        let r = 3.0;
        let xs: Vec<f64> = (0..n).map(|_| sampler.standard(&mut rng)).collect();
        let kept: Vec<f64> = xs.iter().copied().filter(|x| x.abs() <= r).collect();
        let p_hat = kept.len() as f64 / n as f64;
        let m_hat = kept.iter().sum::<f64>() / n as f64;
        let sd = (kept.iter().map(|x| x * x).sum::<f64>() / n as f64).sqrt() / (n as f64).sqrt();
        let (p, m) = sampler.truncated_moments(r).unwrap();
        assert!((p - p_hat).abs() < 4.0 * (p * (1.0 - p) / n as f64).sqrt(), "{p} vs {p_hat}");
        assert!((m - m_hat).abs() < 4.0 * sd, "{m} vs {m_hat}");
        assert!(m < 0.0);
        // untruncated: unit mass and zero mean
        let (p, m) = sampler.truncated_moments(1e12).unwrap();
        assert!((p - 1.0).abs() < 1e-9 && m.abs() < 1e-3, "{p} {m}");
    }

    #[test]
    fn asymmetric_tail_counts_follow_levy_density() {
        // x^α P(X_1 > x) -> c_plus / α for large x
        let law = StableLaw::new(1.5, 1.0, 0.25).unwrap();
        let n = 1_000_000;
        let xs = sample_stable_increments(&law, 1.0, n, &mut RngStream::new(21, 0)).unwrap();
        let x = 40.0f64;
        let up = xs.iter().filter(|&&v| v > x).count() as f64 / n as f64;
        let down = xs.iter().filter(|&&v| v < -x).count() as f64 / n as f64;
        let up_target = law.c_plus() / 1.5;
        let down_target = law.c_minus() / 1.5;
        let scaled_up = x.powf(1.5) * up;
        let scaled_down = x.powf(1.5) * down;
        // binomial noise at these counts is a few percent; the asymptote is reached within ~5%
        assert!((scaled_up / up_target - 1.0).abs() < 0.1, "{scaled_up} vs {up_target}");
        assert!((scaled_down / down_target - 1.0).abs() < 0.2, "{scaled_down} vs {down_target}");
    }
}
