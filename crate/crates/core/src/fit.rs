//! Weighted least-squares power-law fits on log-log axes.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

/// Minimum number of points a fit accepts.
pub const MIN_FIT_POINTS: usize = 3;

/// One observation `(x, y)` with standard errors on both coordinates.
/// A zero standard error marks an exactly known coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitPoint {
    pub x: f64,
    pub x_se: f64,
    pub y: f64,
    pub y_se: f64,
}

impl FitPoint {
    pub fn new(x: f64, x_se: f64, y: f64, y_se: f64) -> Self {
        Self { x, x_se, y, y_se }
    }
}

/// Result of fitting `ln y = intercept + slope · ln x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogLogFit {
    pub slope: f64,
    pub slope_se: f64,
    pub intercept: f64,
    pub intercept_se: f64,
    pub r_squared: f64,
    /// 95% confidence interval for the slope (Student t, `n - 2` dof).
    pub slope_ci: (f64, f64),
    pub n_points: usize,
}

impl LogLogFit {
    pub fn covers(&self, slope: f64) -> bool {
        self.slope_ci.0 <= slope && slope <= self.slope_ci.1
    }
}

struct Line {
    slope: f64,
    intercept: f64,
    slope_var: f64,
    intercept_var: f64,
    r_squared: f64,
}

fn weighted_line(lx: &[f64], ly: &[f64], w: &[f64]) -> Result<Line> {
    let n = lx.len();
    let sw: f64 = w.iter().sum();
    let mx = lx.iter().zip(w).map(|(x, w)| w * x).sum::<f64>() / sw;
    let my = ly.iter().zip(w).map(|(y, w)| w * y).sum::<f64>() / sw;
    let sxx: f64 = lx.iter().zip(w).map(|(x, w)| w * (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(ly).zip(w).map(|((x, y), w)| w * (x - mx) * (y - my)).sum();
    let syy: f64 = ly.iter().zip(w).map(|(y, w)| w * (y - my).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::FitDegenerate {
            needed: MIN_FIT_POINTS,
            got: 1,
        });
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = lx
        .iter()
        .zip(ly)
        .zip(w)
        .map(|((x, y), w)| w * (y - intercept - slope * x).powi(2))
        .sum();
    // residual-scaled covariance, robust to misstated point errors
    let s2 = rss / (n - 2) as f64;
    Ok(Line {
        slope,
        intercept,
        slope_var: s2 / sxx,
        intercept_var: s2 * (1.0 / sw + mx * mx / sxx),
        r_squared: if syy > 0.0 { 1.0 - rss / syy } else { 1.0 },
    })
}

/// Fits a power law through `points`.
///
/// The variance of `ln y` is `(y_se/y)²`, with `slope² (x_se/x)²` added
/// when `x` is noisy as well. Points get weights inversely proportional
/// to this variance. If every point is exact, the fit is unweighted.
pub fn fit_log_log(points: &[FitPoint]) -> Result<LogLogFit> {
    let usable: Vec<&FitPoint> = points
        .iter()
        .filter(|p| p.x > 0.0 && p.y > 0.0 && p.x.is_finite() && p.y.is_finite())
        .collect();
    if usable.len() < MIN_FIT_POINTS {
        return Err(Error::FitDegenerate {
            needed: MIN_FIT_POINTS,
            got: usable.len(),
        });
    }
    let lx: Vec<f64> = usable.iter().map(|p| p.x.ln()).collect();
    let ly: Vec<f64> = usable.iter().map(|p| p.y.ln()).collect();
    let rel = |se: f64, v: f64| if se.is_finite() && se > 0.0 { se / v } else { 0.0 };
    let weights = |slope: f64| -> Vec<f64> {
        let var: Vec<f64> = usable
            .iter()
            .map(|p| rel(p.y_se, p.y).powi(2) + slope * slope * rel(p.x_se, p.x).powi(2))
            .collect();
        if var.iter().any(|&v| !(v > 0.0)) {
            vec![1.0; var.len()]
        } else {
            var.iter().map(|v| 1.0 / v).collect()
        }
    };

    let first = weighted_line(&lx, &ly, &weights(0.0))?;
    let line = weighted_line(&lx, &ly, &weights(first.slope))?;

    let n = usable.len();
    let t = StudentsT::new(0.0, 1.0, (n - 2) as f64)
        .map_err(|e| Error::Internal(e.to_string()))?
        .inverse_cdf(0.975);
    let slope_se = line.slope_var.sqrt();
    Ok(LogLogFit {
        slope: line.slope,
        slope_se,
        intercept: line.intercept,
        intercept_se: line.intercept_var.sqrt(),
        r_squared: line.r_squared,
        slope_ci: (line.slope - t * slope_se, line.slope + t * slope_se),
        n_points: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn exact(xs: &[f64], f: impl Fn(f64) -> f64) -> Vec<FitPoint> {
        xs.iter().map(|&x| FitPoint::new(x, 0.0, f(x), 0.0)).collect()
    }

    #[test]
    fn recovers_an_exact_power_law() {
        let pts = exact(&[1.0, 2.0, 4.0, 8.0, 16.0], |x| 3.0 * x.powf(-1.5));
        let fit = fit_log_log(&pts).unwrap();
        assert_relative_eq!(fit.slope, -1.5, epsilon = 1e-12);
        assert_relative_eq!(fit.intercept, 3f64.ln(), epsilon = 1e-12);
        assert_relative_eq!(fit.r_squared, 1.0, epsilon = 1e-12);
        assert!(fit.slope_se < 1e-10);
    }

    #[test]
    fn too_few_points_is_degenerate() {
        let pts = exact(&[1.0, 2.0], |x| x);
        assert_eq!(
            fit_log_log(&pts).unwrap_err(),
            Error::FitDegenerate { needed: 3, got: 2 }
        );
        let pts = exact(&[1.0, 1.0, 1.0], |x| x);
        assert!(matches!(fit_log_log(&pts), Err(Error::FitDegenerate { .. })));
    }

    #[test]
    fn noisy_points_are_downweighted() {
        let mut pts = exact(&[1.0, 2.0, 4.0, 8.0], |x| x.powi(-1));
        for p in &mut pts {
            p.y_se = 1e-3 * p.y;
        }
        // an outlier with a huge error bar barely moves the slope
        pts.push(FitPoint::new(16.0, 0.0, 1.0, 10.0));
        let fit = fit_log_log(&pts).unwrap();
        assert!((fit.slope + 1.0).abs() < 1e-3, "slope {}", fit.slope);
    }

    #[test]
    fn interval_covers_truth_for_small_noise() {
        let xs = [1.0, 2.0, 4.0, 8.0, 16.0, 32.0];
        let wiggle = [0.01, -0.02, 0.015, -0.005, 0.01, -0.01];
        let pts: Vec<FitPoint> = xs
            .iter()
            .zip(wiggle)
            .map(|(&x, w)| FitPoint::new(x, 0.0, x.powf(-2.0) * (1.0 + w), 0.02 * x.powf(-2.0)))
            .collect();
        let fit = fit_log_log(&pts).unwrap();
        assert!(fit.covers(-2.0), "{fit:?}");
        assert!(fit.slope_ci.1 - fit.slope_ci.0 < 0.1);
    }

    proptest! {
        #[test]
        fn slope_is_invariant_to_prefactors(slope in -3.0f64..3.0, k in 0.01f64..100.0, kx in 0.01f64..100.0) {
            let xs = [1.0, 3.0, 9.0, 27.0];
            let a = fit_log_log(&exact(&xs, |x| x.powf(slope))).unwrap();
            let b = fit_log_log(&exact(&xs.map(|x| x * kx), |x| k * (x / kx).powf(slope))).unwrap();
            prop_assert!((a.slope - slope).abs() < 1e-9);
            prop_assert!((b.slope - slope).abs() < 1e-9);
        }
    }
}
