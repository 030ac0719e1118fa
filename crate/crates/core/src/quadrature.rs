//! Numerical integration used by the exit-functional closed forms.
//!
//! Two building blocks: Gauss–Jacobi rules for integrands carrying an
//! algebraic endpoint singularity, and globally adaptive Gauss–Kronrod
//! (7/15 points) for the smooth interior.

use nalgebra::{DMatrix, SymmetricEigen};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// A quadrature rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    /// Integrates `f` against the rule's weight over `[lo, hi]` after the affine
    /// map from [-1, 1]. The caller is responsible for the Jacobian of any
    /// weight function (see [`gauss_jacobi`]).
    pub fn apply<F: FnMut(f64) -> f64>(&self, lo: f64, hi: f64, mut f: F) -> f64 {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }
}

/// Gauss–Jacobi rule with `n` nodes for the weight `(1 - x)^a (1 + x)^b` on
/// [-1, 1], via the Golub–Welsch eigenvalue method. Requires `a, b > -1`.
pub fn gauss_jacobi(n: usize, a: f64, b: f64) -> GaussRule {
    assert!(n >= 1, "rule needs at least one node");
    assert!(a > -1.0 && b > -1.0, "Jacobi exponents must exceed -1");
    let ab = a + b;
    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n.saturating_sub(1)];
    diag[0] = (b - a) / (ab + 2.0);
    for (k, d) in diag.iter_mut().enumerate().skip(1) {
        let k = k as f64;
        let s = 2.0 * k + ab;
        *d = (b * b - a * a) / (s * (s + 2.0));
    }
    for (i, o) in off.iter_mut().enumerate() {
        let k = (i + 1) as f64;
        let s = 2.0 * k + ab;
        let beta = if i == 0 {
            // (1 + a + b) cancels analytically; keep it out of the denominator
            4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + ab).powi(2) * (3.0 + ab))
        } else {
            4.0 * k * (k + a) * (k + b) * (k + ab) / (s * s * (s + 1.0) * (s - 1.0))
        };
        *o = beta.sqrt();
    }
    let mut m = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = diag[i];
        if i + 1 < n {
            m[(i, i + 1)] = off[i];
            m[(i + 1, i)] = off[i];
        }
    }
    let mu0 = ((ab + 1.0) * std::f64::consts::LN_2 + ln_gamma(a + 1.0) + ln_gamma(b + 1.0)
        - ln_gamma(ab + 2.0))
    .exp();
    let eig = SymmetricEigen::new(m);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|j| (eig.eigenvalues[j], mu0 * eig.eigenvectors[(0, j)].powi(2)))
        .collect();
    pairs.sort_by(|p, q| p.0.total_cmp(&q.0));
    GaussRule {
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1).collect(),
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, lo: f64, hi: f64) -> (f64, f64) {
    let c = 0.5 * (lo + hi);
    let h = 0.5 * (hi - lo);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

/// Globally adaptive 7/15-point Gauss–Kronrod integration of a smooth
/// integrand on a finite interval. Returns `(value, error estimate)`.
pub fn adaptive_gk<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    abs_tol: f64,
    max_intervals: usize,
) -> Result<(f64, f64)> {
    if lo == hi {
        return Ok((0.0, 0.0));
    }
    let (v, e) = gk15(&mut f, lo, hi);
    let mut intervals = vec![(lo, hi, v, e)];
    let mut err = e;
    while err > abs_tol {
        if intervals.len() >= max_intervals {
            return Err(Error::Quadrature {
                tol: abs_tol,
                estimate: err,
            });
        }
        let (worst, _) = intervals
            .iter()
            .enumerate()
            .max_by(|p, q| p.1 .3.total_cmp(&q.1 .3))
            .expect("non-empty");
        let (a, b, _, e0) = intervals.swap_remove(worst);
        let m = 0.5 * (a + b);
        let (v1, e1) = gk15(&mut f, a, m);
        let (v2, e2) = gk15(&mut f, m, b);
        err += e1 + e2 - e0;
        intervals.push((a, m, v1, e1));
        intervals.push((m, b, v2, e2));
        // resum periodically against cancellation drift
        if intervals.len() % 64 == 0 {
            err = intervals.iter().map(|i| i.3).sum();
        }
    }
    let total = intervals.iter().map(|i| i.2).sum();
    Ok((total, err))
}

/// `∫_0^1 t^p (1 - t)^q h(t) dt` for `p, q > -1` and `h` smooth on [0, 1],
/// possibly with a sharp boundary layer at t = 0.
///
/// The two endpoint panels use Gauss–Jacobi rules that absorb the algebraic
/// factors exactly; the left panel is halved until two rule orders agree, so
/// a near-singularity of `h` close to 0 ends up in the Kronrod interior.
pub fn jacobi_weighted_unit<H: Fn(f64) -> f64>(
    p: f64,
    q: f64,
    h: H,
    abs_tol: f64,
) -> Result<f64> {
    const N_LO: usize = 24;
    const N_HI: usize = 48;
    // weight t^p on [0, w] is (w/2)^p (1 + x)^p under t = w (1 + x) / 2
    let left_lo = gauss_jacobi(N_LO, 0.0, p);
    let left_hi = gauss_jacobi(N_HI, 0.0, p);
    let right_lo = gauss_jacobi(N_LO, q, 0.0);
    let right_hi = gauss_jacobi(N_HI, q, 0.0);

    let left_panel = |rule: &GaussRule, w: f64| -> f64 {
        (0.5 * w).powf(p) * rule.apply(0.0, w, |t| (1.0 - t).powf(q) * h(t))
    };
    let right_panel = |rule: &GaussRule, w: f64| -> f64 {
        (0.5 * w).powf(q) * rule.apply(1.0 - w, 1.0, |t| t.powf(p) * h(t))
    };

    let mut w_left = 0.25;
    let mut left;
    loop {
        let coarse = left_panel(&left_lo, w_left);
        left = left_panel(&left_hi, w_left);
        if (left - coarse).abs() <= 0.25 * abs_tol || w_left < 1e-14 {
            break;
        }
        w_left *= 0.5;
    }
    let mut w_right = 0.25;
    let mut right;
    loop {
        let coarse = right_panel(&right_lo, w_right);
        right = right_panel(&right_hi, w_right);
        if (right - coarse).abs() <= 0.25 * abs_tol || w_right < 1e-6 {
            break;
        }
        w_right *= 0.5;
    }
    let f = |t: f64| t.powf(p) * (1.0 - t).powf(q) * h(t);
    // geometric panels between the left panel and 1/4 resolve the boundary layer
    let mut interior = 0.0;
    let mut a = w_left;
    while a < 0.25 {
        let b = (2.0 * a).min(0.25);
        interior += adaptive_gk(f, a, b, 0.25 * abs_tol * (b - a) / 0.25, 200)?.0;
        a = b;
    }
    interior += adaptive_gk(f, 0.25, 1.0 - w_right, 0.25 * abs_tol, 400)?.0;
    Ok(left + interior + right)
}
