//! Jump-adapted path simulation of `(Y, X, A, λ)`.
//!
//! Jumps of `Z` larger than `δ` are drawn exactly as a compound Poisson
//! process and inserted into a uniform base grid of step `h`. The jumps below
//! `δ` are aggregated on a finer sub-grid into stable increments conditioned to
//! stay within `±δ` and re-centred by their exact conditional mean, so `Z`
//! keeps zero mean.

use std::io::Write;

use rand::distr::Open01;
use rand::Rng;
use rand_distr::Exp1;

use crate::error::{ensure_positive, Error, Result};
use crate::market::{coefficient_processes, IntegrandSpec, LevyMarketModel, MarketState};
use crate::rng::RngStream;
use crate::stable::StableSampler;

/// Default cap on grid points per path.
pub const DEFAULT_MAX_POINTS: u64 = 10_000_000;

const MAX_REJECTIONS: usize = 10_000;

/// Simulation resolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridResolution {
    /// Base step.
    pub h: f64,
    /// Jump-size threshold separating simulated jumps from aggregated ones.
    /// Ignored for the raw stable integrand.
    pub delta: f64,
    /// Whether jumps below `delta` are simulated at all.
    pub small_jumps: bool,
    pub max_points: u64,
}

impl GridResolution {
    pub fn new(h: f64, delta: f64) -> Result<Self> {
        ensure_positive("h", h)?;
        ensure_positive("delta", delta)?;
        Ok(Self {
            h,
            delta,
            small_jumps: true,
            max_points: DEFAULT_MAX_POINTS,
        })
    }

    /// `h = 10⁻⁴ T` and `δ` such that about 10³ jumps above it are expected
    /// over the horizon.
    pub fn default_for(model: Option<&LevyMarketModel>, horizon: f64) -> Result<Self> {
        ensure_positive("horizon", horizon)?;
        let delta = match model {
            None => 1.0,
            Some(m) => {
                let d = &m.density;
                let target = 1e3 / horizon;
                // rate_above(δ) = (c₊ + c₋)(δ^{-α} - cutoff^{-α})
                let total = d.c_plus() + d.c_minus();
                let inv = target / total + d.cutoff().powf(-d.alpha());
                inv.powf(-1.0 / d.alpha())
            }
        };
        Self::new(1e-4 * horizon, delta)
    }

    pub fn without_small_jumps(mut self) -> Self {
        self.small_jumps = false;
        self
    }

    pub fn with_max_points(mut self, max_points: u64) -> Self {
        self.max_points = max_points;
        self
    }
}

/// Everything needed to simulate one path.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub model: Option<LevyMarketModel>,
    pub integrand: IntegrandSpec,
    pub horizon: f64,
    pub grid: GridResolution,
}

impl Scenario {
    pub fn new(
        model: Option<LevyMarketModel>,
        integrand: IntegrandSpec,
        horizon: f64,
        grid: GridResolution,
    ) -> Result<Self> {
        ensure_positive("horizon", horizon)?;
        ensure_positive("grid.h", grid.h)?;
        integrand.validate(model.as_ref())?;
        if let Some(m) = &model {
            ensure_positive("grid.delta", grid.delta)?;
            if grid.delta > m.density.cutoff() {
                return Err(Error::param("grid.delta", "must not exceed the jump cutoff"));
            }
            if let IntegrandSpec::Merton { pi, .. } = integrand {
                // a small-jump step moves wealth by at most |π|(δ + drift)
                if pi.abs() * 1.5 * grid.delta >= 1.0 {
                    return Err(Error::HypothesisViolation(format!(
                        "delta {} too coarse for pi = {pi}: aggregated jumps could wipe out wealth",
                        grid.delta
                    )));
                }
            }
        }
        let points = (horizon / grid.h).ceil();
        if points > grid.max_points as f64 {
            return Err(Error::param(
                "grid.h",
                format!("{points} base points exceed max_points {}", grid.max_points),
            ));
        }
        Ok(Self {
            model,
            integrand,
            horizon,
            grid,
        })
    }

    /// Stability index of the small jumps of `X`.
    pub fn alpha(&self) -> f64 {
        match (&self.integrand, &self.model) {
            (IntegrandSpec::RawStable(law), _) => law.alpha(),
            (_, Some(m)) => m.alpha(),
            (_, None) => unreachable!("validated at construction"),
        }
    }

    /// Number of base grid intervals.
    pub fn base_steps(&self) -> u64 {
        ((self.horizon / self.grid.h) * (1.0 - 1e-12)).ceil().max(1.0) as u64
    }

    fn base_time(&self, k: u64, n: u64) -> f64 {
        if k == n {
            self.horizon
        } else {
            self.horizon * (k as f64 / n as f64)
        }
    }
}

/// One trajectory on a jump-adapted grid; values are right-continuous and
/// held constant between grid points.
#[derive(Debug, Clone, PartialEq)]
pub struct PathBundle {
    pub times: Vec<f64>,
    pub y: Vec<f64>,
    pub x: Vec<f64>,
    pub a_coef: Vec<f64>,
    pub lambda: Vec<f64>,
    pub jump: Vec<bool>,
    /// Portfolio wealth for the Merton integrand, empty otherwise.
    pub wealth: Vec<f64>,
}

impl PathBundle {
    fn with_capacity(n: usize, track_wealth: bool) -> Self {
        Self {
            times: Vec::with_capacity(n),
            y: Vec::with_capacity(n),
            x: Vec::with_capacity(n),
            a_coef: Vec::with_capacity(n),
            lambda: Vec::with_capacity(n),
            jump: Vec::with_capacity(n),
            wealth: if track_wealth { Vec::with_capacity(n) } else { Vec::new() },
        }
    }

    /// A path with `Y ≡ A ≡ λ ≡ 1` through the given `(t, x)` points.
    pub fn from_points(times: Vec<f64>, x: Vec<f64>) -> Result<Self> {
        if times.len() != x.len() || times.len() < 2 {
            return Err(Error::param("times", "need at least two points, aligned with x"));
        }
        if times[0] != 0.0 || !times.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::param("times", "must start at 0 and increase strictly"));
        }
        let n = times.len();
        Ok(Self {
            times,
            x,
            y: vec![1.0; n],
            a_coef: vec![1.0; n],
            lambda: vec![1.0; n],
            jump: vec![false; n],
            wealth: Vec::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().expect("non-empty bundle")
    }

    /// Writes `t,y,x,a_coef,lambda,jump` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,y,x,a_coef,lambda,jump")?;
        for k in 0..self.len() {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                self.times[k],
                self.y[k],
                self.x[k],
                self.a_coef[k],
                self.lambda[k],
                u8::from(self.jump[k])
            )?;
        }
        Ok(())
    }
}

/// Simulates one path; the result depends only on the scenario and stream.
pub fn simulate_path(scenario: &Scenario, stream: &mut RngStream) -> Result<PathBundle> {
    simulate(scenario, stream, None)
}

/// Like [`simulate_path`], but stops at the first grid point where
/// `X <= X_0 - lower` or `X >= X_0 + upper`. A path that never exits runs to
/// the horizon, so `horizon() < scenario.horizon` means it exited. The prefix
/// up to the exit coincides with the full path drawn from the same stream.
pub fn simulate_path_until_exit(
    scenario: &Scenario,
    stream: &mut RngStream,
    lower: f64,
    upper: f64,
) -> Result<PathBundle> {
    ensure_positive("lower", lower)?;
    ensure_positive("upper", upper)?;
    simulate(scenario, stream, Some((lower, upper)))
}

fn simulate(scenario: &Scenario, stream: &mut RngStream, band: Option<(f64, f64)>) -> Result<PathBundle> {
    match (&scenario.integrand, &scenario.model) {
        (IntegrandSpec::RawStable(law), _) => simulate_raw_stable(scenario, law, stream, band),
        (_, Some(model)) => simulate_market(scenario, model, stream, band),
        (_, None) => Err(Error::param("model", "market integrands need a market model")),
    }
}

fn outside(band: Option<(f64, f64)>, x0: f64, x: f64) -> bool {
    band.is_some_and(|(lo, hi)| x <= x0 - lo || x >= x0 + hi)
}

fn simulate_raw_stable(
    scenario: &Scenario,
    law: &crate::stable::StableLaw,
    stream: &mut RngStream,
    band: Option<(f64, f64)>,
) -> Result<PathBundle> {
    let n = scenario.base_steps();
    let sampler = StableSampler::new(law);
    let mut out = PathBundle::with_capacity(n as usize + 1, false);
    let mut x = 0.0;
    let push = |out: &mut PathBundle, t: f64, x: f64| {
        out.times.push(t);
        out.y.push(1.0);
        out.x.push(x);
        out.a_coef.push(1.0);
        out.lambda.push(1.0);
        out.jump.push(false);
    };
    push(&mut out, 0.0, x);
    let mut t = 0.0;
    for k in 1..=n {
        let next = scenario.base_time(k, n);
        x += sampler.increment(stream, next - t);
        t = next;
        push(&mut out, t, x);
        if outside(band, 0.0, x) {
            break;
        }
    }
    Ok(out)
}

/// Aggregated jumps below `δ` over one sub-step: a stable increment of the
/// small-jump law conditioned on `|S| <= δ`, minus its exact conditional mean.
#[derive(Debug, Clone, Copy)]
struct SmallJumps {
    sampler: StableSampler,
    scale: f64,
    bound: f64,
    mean: f64,
}

impl SmallJumps {
    fn new(density: &crate::market::TruncatedStableDensity, delta: f64, dt: f64) -> Result<Self> {
        let sampler = StableSampler::new(&density.small_jump_law());
        let scale = sampler.increment_scale(dt);
        let bound = delta / scale;
        let (prob, partial) = sampler.truncated_moments(bound)?;
        Ok(Self {
            sampler,
            scale,
            bound,
            mean: partial / prob,
        })
    }

    fn draw(&self, stream: &mut RngStream, path_index: u64) -> Result<f64> {
        for _ in 0..MAX_REJECTIONS {
            let s = self.sampler.standard(stream);
            if s.abs() <= self.bound {
                return Ok(self.scale * (s - self.mean));
            }
        }
        Err(Error::Internal(format!(
            "path {path_index}: small-jump increment keeps exceeding its bound"
        )))
    }
}

/// Sub-steps per base interval so that `δ` is at least
/// `SMALL_JUMP_RESOLUTION` increment scales.
fn small_jump_substeps(scenario: &Scenario, density: &crate::market::TruncatedStableDensity) -> u64 {
    let h = scenario.horizon / scenario.base_steps() as f64;
    let unit = StableSampler::new(&density.small_jump_law()).increment_scale(1.0);
    let dt_max = (scenario.grid.delta / (SMALL_JUMP_RESOLUTION * unit)).powf(density.alpha());
    (h / dt_max).ceil().max(1.0) as u64
}

/// Ratio of `δ` to the small-jump increment scale on one sub-step.
pub const SMALL_JUMP_RESOLUTION: f64 = 5.0;

struct PathState {
    y: f64,
    v: f64,
    t: f64,
}

fn simulate_market(
    scenario: &Scenario,
    model: &LevyMarketModel,
    stream: &mut RngStream,
    band: Option<(f64, f64)>,
) -> Result<PathBundle> {
    let grid = &scenario.grid;
    let density = &model.density;
    let delta = grid.delta;
    let (up, down) = density.rate_above(delta);
    let rate = up + down;
    let drift = density.compensator_drift(delta);
    let pi = match scenario.integrand {
        IntegrandSpec::Merton { pi, .. } => Some(pi),
        _ => None,
    };

    let n = scenario.base_steps();
    let substeps = if grid.small_jumps {
        small_jump_substeps(scenario, density)
    } else {
        1
    };
    let small = if grid.small_jumps {
        Some(SmallJumps::new(density, delta, scenario.horizon / (n * substeps) as f64)?)
    } else {
        None
    };
    let path_index = stream.path_index();

    let mut out = PathBundle::with_capacity(n as usize + 1, pi.is_some());
    let record = |out: &mut PathBundle, s: &PathState, jump: bool| -> Result<()> {
        if out.len() as u64 >= grid.max_points {
            return Err(Error::BudgetExceeded {
                path_index,
                budget: grid.max_points,
            });
        }
        let c = coefficient_processes(
            Some(model),
            &scenario.integrand,
            MarketState { t: s.t, y: s.y, v: s.v },
        )?;
        out.times.push(s.t);
        out.y.push(s.y);
        out.x.push(c.x);
        out.a_coef.push(c.a_coef);
        out.lambda.push(c.lambda);
        out.jump.push(jump);
        if pi.is_some() {
            out.wealth.push(s.v);
        }
        Ok(())
    };
    // compensator over elapsed time, then a multiplicative move of Z by dz
    let advance = |s: &mut PathState, to: f64, dz: f64| {
        let dt = to - s.t;
        s.y *= (1.0 + dz) * (drift * dt).exp();
        if let Some(pi) = pi {
            s.v *= (1.0 + pi * dz) * (pi * drift * dt).exp();
        }
        s.t = to;
    };

    let mut state = PathState {
        y: model.y0,
        v: match scenario.integrand {
            IntegrandSpec::Merton { v0, .. } => v0,
            _ => 0.0,
        },
        t: 0.0,
    };
    record(&mut out, &state, false)?;

    let mut next_jump = if rate > 0.0 {
        stream.sample::<f64, _>(Exp1) / rate
    } else {
        f64::INFINITY
    };
    let total = n * substeps;
    for k in 1..=total {
        let next = if k == total {
            scenario.horizon
        } else {
            scenario.horizon * (k as f64 / total as f64)
        };
        while next_jump < next {
            advance(&mut state, next_jump, 0.0);
            let j = density.sample_large_jump(
                delta,
                stream.sample::<f64, _>(Open01),
                stream.sample::<f64, _>(Open01),
            );
            advance(&mut state, next_jump, j);
            record(&mut out, &state, true)?;
            if outside(band, out.x[0], out.x[out.len() - 1]) {
                return Ok(out);
            }
            next_jump += stream.sample::<f64, _>(Exp1) / rate;
        }
        let dz = match &small {
            Some(sj) => sj.draw(stream, path_index)?,
            None => 0.0,
        };
        advance(&mut state, next, dz);
        if k % substeps == 0 {
            record(&mut out, &state, false)?;
            if outside(band, out.x[0], out.x[out.len() - 1]) {
                return Ok(out);
            }
        }
    }
    Ok(out)
}
