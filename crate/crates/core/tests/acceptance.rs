//! Acceptance suite: one PASS/FAIL line per criterion, printed straight to
//! stdout so it shows without `--nocapture`.
//!
//! Long criteria (3, 4/5/9, 6, 10) run full Monte Carlo studies and take
//! several minutes in total.

use std::fs;
use std::io::Write;
use std::panic::catch_unwind;
use std::path::{Path, PathBuf};

use statrs::function::beta::beta;

use jumphedge_core::experiment::{run_config_file, RunOptions, StudyKind};
use jumphedge_core::market::{IntegrandSpec, LinearHedge, MarketState};
use jumphedge_core::montecarlo::McSettings;
use jumphedge_core::optimizer::{
    budget_rescale, lagrangian_objective, minimize_lagrangian, rescale_factor, strategy_barrier, LagrangianProblem,
};
use jumphedge_core::quadrature::adaptive_gk;
use jumphedge_core::stable::{
    mc_exit_functionals, mean_exit_time, mean_squared_integral, overshoot_density, overshoot_moment, Barriers,
    StableLaw,
};

/// Criteria that cannot pass as stated, with the reason. They still print
/// FAIL; they just do not abort the suite.
const KNOWN_UNATTAINABLE: &[(u32, &str)] = &[(
    8,
    "the reference delta-hedge figure 0.384852 disagrees with its own formula, \
     0.5^(3/7) * 100^(-1/7) = 0.38483349, by 1.9e-5",
)];

struct Outcome {
    pass: bool,
    detail: String,
}

#[derive(Default)]
struct Checks {
    pass: bool,
    notes: Vec<String>,
}

impl Checks {
    fn new() -> Self {
        Self {
            pass: true,
            notes: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, note: String) {
        self.pass &= ok;
        self.notes.push(format!("{}{note}", if ok { "" } else { "[x] " }));
    }

    fn close(&mut self, label: &str, got: f64, want: f64, tol: f64) {
        let ok = (got - want).abs() <= tol;
        self.check(ok, format!("{label} = {got:.8} (want {want} +/- {tol:e})"));
    }

    fn done(self) -> Outcome {
        Outcome {
            pass: self.pass,
            detail: self.notes.join("; "),
        }
    }
}

fn report(n: u32, title: &str, outcome: &Outcome) {
    let status = if outcome.pass { "PASS" } else { "FAIL" };
    let line = format!("criterion {n:>2} [{status}] {title}: {}\n", outcome.detail);
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(line.as_bytes());
    let _ = out.flush();
}

fn panicked(p: &(dyn std::any::Any + Send)) -> Outcome {
    let msg = p
        .downcast_ref::<String>()
        .map(String::as_str)
        .or_else(|| p.downcast_ref::<&str>().copied())
        .unwrap_or("non-string payload");
    Outcome {
        pass: false,
        detail: format!("panicked: {msg}"),
    }
}

/// A panicking check is a failed criterion, not an aborted suite.
fn guarded(f: fn() -> Outcome) -> Outcome {
    catch_unwind(f).unwrap_or_else(|p| panicked(&*p))
}

/// `ACCEPTANCE_ONLY=2,7` restricts the run to those criteria.
fn selected() -> Option<Vec<u32>> {
    let v = std::env::var("ACCEPTANCE_ONLY").ok()?;
    Some(v.split(',').filter_map(|t| t.trim().parse().ok()).collect())
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn law() -> StableLaw {
    StableLaw::symmetric(1.5, 1.0).unwrap()
}

fn bar(l: f64, u: f64) -> Barriers {
    Barriers::new(l, u).unwrap()
}

fn closed_forms() -> Outcome {
    let mut c = Checks::new();
    c.close("g(1,1)", mean_exit_time(&law(), &bar(1.0, 1.0)).unwrap(), 0.752253, 1e-6);
    c.close("f(1,1)", mean_squared_integral(&law(), &bar(1.0, 1.0)).unwrap(), 0.128958, 1e-6);
    c.close("f(2,1)", mean_squared_integral(&law(), &bar(2.0, 1.0)).unwrap(), 0.623527, 1e-5);
    let mut worst: f64 = 0.0;
    for alpha in [1.1, 1.5, 1.9] {
        let l = StableLaw::symmetric(alpha, 1.0).unwrap();
        for a in [0.3, 1.0, 2.5] {
            let b = bar(a, a);
            let ratio = mean_squared_integral(&l, &b).unwrap() / mean_exit_time(&l, &b).unwrap();
            let want = a * a * alpha / ((alpha + 2.0) * (alpha + 1.0));
            worst = worst.max((ratio / want - 1.0).abs());
        }
    }
    c.check(worst <= 1e-12, format!("f/g identity max rel err {worst:.1e}"));
    c.done()
}

/// `∫ μ` over `z > upper`, substituting `z = upper + w⁴` on `w ∈ (0, 1]` and
/// `w = 1/v` beyond, which removes both the endpoint and tail singularities.
fn exit_mass_above(l: &StableLaw, b: &Barriers, upper: f64, sign: f64) -> f64 {
    let mu = |z: f64| overshoot_density(l, b, sign * z).unwrap();
    let half = 0.5 * l.alpha();
    // `upper + w⁴` forgets the offset for small w, so the smooth factor
    // `μ(z)(z - upper)^{α/2}` is taken at a representable point and the
    // singular factor is applied to the exact offset.
    let near_integrand = |w: f64| {
        let d = w.powi(4);
        if d == 0.0 {
            return 0.0;
        }
        let z = upper + d.max(1e-13 * upper);
        let smooth = mu(z) * (z - upper).powf(half);
        4.0 * w.powi(3) * smooth * d.powf(-half)
    };
    let near = adaptive_gk(near_integrand, 0.0, 1.0, 1e-12, 2000).unwrap().0;
    let far = adaptive_gk(
        |v| {
            if v == 0.0 {
                0.0
            } else {
                4.0 * v.powi(-5) * mu(upper + v.powi(-4))
            }
        },
        0.0,
        1.0,
        1e-12,
        2000,
    )
    .unwrap()
    .0;
    near + far
}

fn overshoot_suite() -> Outcome {
    let mut c = Checks::new();
    let (l, b) = (law(), bar(1.0, 1.0));
    let mass = exit_mass_above(&l, &b, 1.0, 1.0) + exit_mass_above(&l, &b, 1.0, -1.0);
    c.close("integral of mu_{1,1}", mass, 1.0, 1e-6);
    // for a = ā = 1 and β = 1 the moment integral is 2 B(1 - α/2, α - 1)
    let alpha = 1.5;
    let reduction = (std::f64::consts::PI * alpha / 2.0).sin() / std::f64::consts::PI
        * 2f64.powf(1.0 - alpha)
        * 2.0
        * beta(1.0 - alpha / 2.0, alpha - 1.0);
    let quad = overshoot_moment(&l, &b, 1.0).unwrap();
    c.close("u^1(1,1) quadrature", quad, 1.66928, 1e-4);
    c.close("u^1 quadrature vs beta reduction", quad, reduction, 1e-10);
    let u0 = overshoot_moment(&l, &bar(2.0, 0.7), 0.0).unwrap();
    c.check(u0 == 1.0, format!("u^0 = {u0}"));
    c.done()
}

fn oracle_equivalence() -> Outcome {
    let mut c = Checks::new();
    let l = law();
    let beta = 0.5;
    for b in [bar(1.0, 1.0), bar(2.0, 1.0)] {
        let g = mean_exit_time(&l, &b).unwrap();
        let f = mean_squared_integral(&l, &b).unwrap();
        let u = overshoot_moment(&l, &b, beta).unwrap();
        let mc = mc_exit_functionals(&l, &b, beta, 1e-4 * g, &McSettings::new(100_000, 3)).unwrap();
        for (name, est, exact) in [("g", mc.g, g), ("f", mc.f, f), ("u^0.5", mc.u_beta, u)] {
            let z = (est.mean - exact).abs() / est.std_error;
            let rel = (est.mean / exact - 1.0).abs();
            c.check(
                z <= 3.0 && rel <= 0.02,
                format!(
                    "{name}({},{}) mc {:.5} vs {:.5}: {z:.2} se, {:.2}%",
                    b.lower,
                    b.upper,
                    est.mean,
                    exact,
                    100.0 * rel
                ),
            );
        }
    }
    c.done()
}

fn limits_and_reproducibility() -> (Outcome, Outcome, Outcome) {
    let config = configs().join("limit_check.json");
    let dir = tempfile::tempdir().unwrap();
    let run = |threads: usize, sub: &str| {
        run_config_file(
            &config,
            &RunOptions {
                threads: Some(threads),
                out_dir: Some(dir.path().join(sub)),
                seed: None,
            },
        )
        .unwrap()
    };
    let first = run(1, "one");
    let StudyKind::Convergence(conv) = &first.result.study else {
        panic!("limit_check.json must be a convergence study");
    };
    let row = conv
        .rows
        .iter()
        .find(|r| (r.point.epsilon - 0.05).abs() < 1e-12)
        .expect("epsilon 0.05 row");
    let n = row.point.error.n_paths;

    let mut c4 = Checks::new();
    let (e, e_se) = row.scaled_error;
    let rel = e / 0.171429 - 1.0;
    c4.check(
        rel.abs() <= 0.05 && n == 10_000,
        format!("eps^-2 E(0.05) = {e:.5} +/- {e_se:.5} vs 0.171429 ({:+.2}%), {n} paths", 100.0 * rel),
    );
    let mut c5 = Checks::new();
    let cost = row.costs.iter().find(|s| s.beta == 0.0).expect("beta 0 column");
    let rel = cost.scaled.0 / 1.329340 - 1.0;
    c5.check(
        rel.abs() <= 0.05,
        format!(
            "eps^1.5 C0(0.05) = {:.5} +/- {:.5} vs 1.329340 ({:+.2}%)",
            cost.scaled.0,
            cost.scaled.1,
            100.0 * rel
        ),
    );

    let second = run(8, "eight");
    let mut c9 = Checks::new();
    c9.check(first.files == second.files, format!("{} files each", first.files.len()));
    for f in &first.files {
        let a = fs::read(first.out_dir.join(f)).unwrap();
        let b = fs::read(second.out_dir.join(f)).unwrap();
        c9.check(a == b, format!("{f} {}", if a == b { "identical" } else { "differs" }));
    }
    (c4.done(), c5.done(), c9.done())
}

fn rate_comparison() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let report = run_config_file(
        &configs().join("rate_comparison.json"),
        &RunOptions {
            out_dir: Some(dir.path().to_path_buf()),
            ..Default::default()
        },
    )
    .unwrap();
    let StudyKind::RateComparison(r) = &report.result.study else {
        panic!("rate_comparison.json must be a rate comparison");
    };
    let mut c = Checks::new();
    let h = &r.hitting_fit.fit;
    c.close("hitting slope", h.slope, -4.0 / 3.0, 0.15);
    let e = &r.equidistant_fit.fit;
    c.close("equidistant slope", e.slope, -1.0, 0.10);
    let ratios: Vec<Option<f64>> = r.matched.iter().map(|m| m.ratio()).collect();
    let all_below = !ratios.is_empty() && ratios.iter().all(|q| q.is_some_and(|q| q < 1.0));
    c.check(
        all_below,
        format!(
            "hitting/equidistant error at {} matched budgets: {}",
            ratios.len(),
            ratios
                .iter()
                .map(|q| q.map_or("n/a".into(), |q| format!("{q:.3}")))
                .collect::<Vec<_>>()
                .join(" ")
        ),
    );
    c.done()
}

fn optimizer_checks() -> Outcome {
    let mut c = Checks::new();
    let problem = |multiplier: f64, beta: f64| LagrangianProblem::new(1.0, 1.0, multiplier, beta, law()).unwrap();
    let opt = minimize_lagrangian(&problem(1.0, 0.0)).unwrap();
    c.close("a*", opt.center, 1.653757, 1e-3);
    // brute-force grid over symmetric barriers
    let p = problem(1.0, 0.0);
    let (mut best_a, mut best) = (0.0, f64::INFINITY);
    for i in 0..=150_000 {
        let a = 1.0 + i as f64 * 1e-5;
        let v = lagrangian_objective(&p, &Barriers::symmetric(a).unwrap()).unwrap().value;
        if v < best {
            (best_a, best) = (a, v);
        }
    }
    c.close("grid argmin", best_a, opt.center, 1e-3);
    for beta in [0.0, 0.5, 1.0] {
        let theta = minimize_lagrangian(&problem(1.0, beta)).unwrap().theta;
        c.close(&format!("theta*(beta={beta})"), theta, 0.0, 1e-3);
    }
    let (c_old, c_new, beta) = (1.0, 8.0, 0.5);
    let a = minimize_lagrangian(&problem(c_old, beta)).unwrap();
    let b = minimize_lagrangian(&problem(c_new, beta)).unwrap();
    let kappa = rescale_factor(c_old, c_new, 1.5, beta);
    let rel = (b.center / (kappa * a.center) - 1.0).abs();
    c.check(rel <= 1e-6, format!("kappa covariance rel err {rel:.1e}"));
    c.done()
}

fn formula_spot_checks() -> Outcome {
    let mut c = Checks::new();
    let merton = strategy_barrier(
        &IntegrandSpec::Merton { pi: 0.5, v0: 1000.0 },
        MarketState {
            t: 0.0,
            y: 100.0,
            v: 1000.0,
        },
        1.5,
        1.0,
        1.0,
    )
    .unwrap();
    c.close("Merton barrier", merton, 0.1, 1e-15);
    // φ(y) = 0.5 y has φ_y = 0.5 everywhere
    let delta = strategy_barrier(
        &IntegrandSpec::delta_hedge(LinearHedge { slope: 0.5 }),
        MarketState {
            t: 0.0,
            y: 100.0,
            v: 0.0,
        },
        1.5,
        0.0,
        1.0,
    )
    .unwrap();
    c.close("delta-hedge barrier", delta, 0.384852, 1e-5);
    c.close("delta-hedge barrier vs exact formula", delta, 0.384_833_489_703_350_4, 1e-15);
    let r = budget_rescale(&Barriers::symmetric(1.0).unwrap(), 1.0, 8.0, 1.5, 0.5).unwrap();
    c.check(r.lower == 2.0 && r.upper == 2.0, format!("budget_rescale = ({}, {})", r.lower, r.upper));
    c.done()
}

fn rescaling_validation() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let report = run_config_file(
        &configs().join("rescaling.json"),
        &RunOptions {
            out_dir: Some(dir.path().to_path_buf()),
            ..Default::default()
        },
    )
    .unwrap();
    let StudyKind::Rescaling(r) = &report.result.study else {
        panic!("rescaling.json must be a rescaling study");
    };
    let mut c = Checks::new();
    let devs: Vec<(f64, f64)> = r.rows.iter().map(|row| row.exit_deviation()).collect();
    let monotone = devs
        .windows(2)
        .all(|w| w[1].0.abs() <= w[0].0.abs() + 2.0 * (w[0].1.powi(2) + w[1].1.powi(2)).sqrt());
    c.check(
        monotone,
        format!(
            "deviations {}",
            r.rows
                .iter()
                .zip(&devs)
                .map(|(row, d)| format!("eps={}: {:+.2}%", row.epsilon, 100.0 * d.0))
                .collect::<Vec<_>>()
                .join(", ")
        ),
    );
    let last = devs.last().expect("rows");
    c.check(last.0.abs() <= 0.05, format!("smallest-eps deviation {:.2}%", 100.0 * last.0.abs()));
    c.done()
}

#[test]
fn acceptance_criteria() {
    let mut outcomes: Vec<(u32, bool)> = Vec::new();
    let mut unexpected = Vec::new();
    let only = selected();
    let wanted = |n: u32| only.as_ref().is_none_or(|s| s.contains(&n));
    let mut record = |n: u32, title: &str, outcome: Option<Outcome>| {
        let Some(outcome) = outcome else {
            let _ = writeln!(std::io::stdout().lock(), "criterion {n:>2} [SKIP] {title}");
            return;
        };
        report(n, title, &outcome);
        if !outcome.pass {
            match KNOWN_UNATTAINABLE.iter().find(|(k, _)| *k == n) {
                Some((_, why)) => report(
                    n,
                    "known discrepancy",
                    &Outcome {
                        pass: false,
                        detail: why.to_string(),
                    },
                ),
                None => unexpected.push(n),
            }
        }
        outcomes.push((n, outcome.pass));
    };

    record(1, "closed-form suite", wanted(1).then(|| guarded(closed_forms)));
    record(2, "overshoot suite", wanted(2).then(|| guarded(overshoot_suite)));
    record(3, "Monte Carlo oracle equivalence", wanted(3).then(|| guarded(oracle_equivalence)));
    let (c4, c5, c9) = if [4, 5, 9].into_iter().any(wanted) {
        match catch_unwind(limits_and_reproducibility) {
            Ok((a, b, c)) => (Some(a), Some(b), Some(c)),
            Err(p) => {
                let o = || Some(panicked(&*p));
                (o(), o(), o())
            }
        }
    } else {
        (None, None, None)
    };
    record(4, "error limit at eps = 0.05", c4);
    record(5, "rebalancing-count limit at eps = 0.05", c5);
    record(6, "rate comparison", wanted(6).then(|| guarded(rate_comparison)));
    record(7, "optimizer correctness", wanted(7).then(|| guarded(optimizer_checks)));
    record(8, "barrier formula spot checks", wanted(8).then(|| guarded(formula_spot_checks)));
    record(9, "reproducibility across thread counts", c9);
    record(10, "rescaling validation", wanted(10).then(|| guarded(rescaling_validation)));

    outcomes.sort_unstable();
    let passed = outcomes.iter().filter(|o| o.1).count();
    report(
        0,
        "summary",
        &Outcome {
            pass: unexpected.is_empty(),
            detail: format!("{passed}/{} criteria run pass", outcomes.len()),
        },
    );
    assert!(unexpected.is_empty(), "criteria failed: {unexpected:?}");
}
