//! Result files and the run manifest.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::discretizer::{write_frontier_csv, FrontierRow};
use crate::error::Result;
use crate::montecarlo::McSettings;
use crate::path::simulate_path;
use crate::rng::derive_stream;

use super::config::Experiment;
use super::studies::{FitReport, StudyKind, StudyResult};

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<fs::File>> {
    Ok(BufWriter::new(fs::File::create(dir.join(name))?))
}

/// Content hash in the style of git object ids: SHA-256 over
/// `"blob <len>\0"` followed by the bytes.
pub fn blob_hash(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    h.finalize().iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

fn write_fits(dir: &Path, fits: &[&FitReport]) -> Result<()> {
    let mut w = create(dir, "fits.csv")?;
    writeln!(
        w,
        "label,slope,slope_se,ci_low,ci_high,intercept,intercept_se,r_squared,n_points,excluded,expected_slope"
    )?;
    for f in fits {
        let l = &f.fit;
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{}",
            f.label,
            l.slope,
            l.slope_se,
            l.slope_ci.0,
            l.slope_ci.1,
            l.intercept,
            l.intercept_se,
            l.r_squared,
            l.n_points,
            f.excluded,
            opt(f.expected_slope)
        )?;
    }
    w.flush()?;
    Ok(())
}

/// Writes every file of `result` into `dir` and returns their names in
/// write order.
pub fn write_results(exp: &Experiment, result: &StudyResult, seed: u64, dir: &Path) -> Result<Vec<String>> {
    fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    let rule = exp.rule_name();

    let hitting = result.hitting_points();
    if !hitting.is_empty() {
        let rows: Vec<FrontierRow> = hitting
            .iter()
            .flat_map(|p| FrontierRow::from_point(p, rule, seed))
            .collect();
        let mut w = create(dir, "frontier.csv")?;
        write_frontier_csv(&mut w, &rows)?;
        w.flush()?;
        files.push("frontier.csv".to_string());
    }

    match &result.study {
        StudyKind::Convergence(c) => {
            let mut w = create(dir, "convergence.csv")?;
            writeln!(
                w,
                "epsilon,beta,scaled_error,scaled_error_se,limit_error,scaled_cost,scaled_cost_se,limit_cost"
            )?;
            for r in &c.rows {
                for sc in &r.costs {
                    writeln!(
                        w,
                        "{},{},{},{},{},{},{},{}",
                        r.point.epsilon,
                        sc.beta,
                        r.scaled_error.0,
                        r.scaled_error.1,
                        opt(r.limit_error),
                        sc.scaled.0,
                        sc.scaled.1,
                        opt(sc.limit)
                    )?;
                }
            }
            w.flush()?;
            files.push("convergence.csv".to_string());
        }
        StudyKind::RateComparison(r) => {
            let mut w = create(dir, "equidistant.csv")?;
            writeln!(w, "n_dates,spacing,error,error_se,cost,cost_se")?;
            for (n, p) in &r.equidistant {
                let c = &p.costs[0];
                writeln!(
                    w,
                    "{},{},{},{},{},{}",
                    n, p.epsilon, p.error.value, p.error.std_error, c.value, c.std_error
                )?;
            }
            w.flush()?;
            files.push("equidistant.csv".to_string());

            let mut w = create(dir, "matched.csv")?;
            writeln!(w, "budget,hitting_error,equidistant_error,ratio")?;
            for m in &r.matched {
                writeln!(
                    w,
                    "{},{},{},{}",
                    m.budget,
                    m.hitting_error,
                    opt(m.equidistant_error),
                    opt(m.ratio())
                )?;
            }
            w.flush()?;
            files.push("matched.csv".to_string());
        }
        StudyKind::Rescaling(r) => {
            let mut w = create(dir, "rescaling.csv")?;
            writeln!(
                w,
                "epsilon,beta,exit_time,exit_time_se,exit_target,exit_deviation,exit_deviation_se,\
                 overshoot_moment,overshoot_moment_se,overshoot_target,overshoot_deviation,\
                 overshoot_deviation_se,censored,n_paths"
            )?;
            for row in &r.rows {
                let (dev, dev_se) = row.exit_deviation();
                for o in &row.overshoots {
                    let (odev, odev_se) = super::studies::relative_deviation(&o.estimate, o.target);
                    writeln!(
                        w,
                        "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                        row.epsilon,
                        o.beta,
                        row.exit_time.mean,
                        row.exit_time.std_error,
                        row.exit_target,
                        dev,
                        dev_se,
                        o.estimate.mean,
                        o.estimate.std_error,
                        o.target,
                        odev,
                        odev_se,
                        row.censored,
                        row.exit_time.n
                    )?;
                }
            }
            w.flush()?;
            files.push("rescaling.csv".to_string());
        }
        StudyKind::Frontier(_) => {}
    }

    let fits = result.fits();
    if !fits.is_empty() {
        write_fits(dir, &fits)?;
        files.push("fits.csv".to_string());
    }
    Ok(files)
}

/// Writes the first `count` paths at the smallest `ε` as debug CSVs under
/// `dir/paths`. They are drawn from the same streams as the study paths.
pub fn dump_paths(exp: &Experiment, seed: u64, count: u64, dir: &Path) -> Result<Vec<String>> {
    if count == 0 {
        return Ok(Vec::new());
    }
    let eps = *exp.config.epsilons.last().expect("validated non-empty");
    let scenario = exp.scenario(eps)?;
    let sub = dir.join("paths");
    fs::create_dir_all(&sub)?;
    let mut names = Vec::new();
    for i in 0..count.min(exp.config.n_paths) {
        let bundle = simulate_path(&scenario, &mut derive_stream(seed, i))?;
        let name = format!("paths/path_{i}.csv");
        let mut w = create(dir, &name)?;
        bundle.write_csv(&mut w)?;
        w.flush()?;
        names.push(name);
    }
    Ok(names)
}

/// Writes `manifest.txt`: inputs and outputs with content hashes, the
/// effective seed, and the config text. Nothing run-dependent (thread
/// count, timing) goes in, so identical inputs give identical manifests.
pub fn write_manifest(
    dir: &Path,
    config_name: &str,
    config_text: &str,
    settings: &McSettings,
    exp: &Experiment,
    outputs: &[String],
) -> Result<PathBuf> {
    let mut m = String::new();
    let _ = writeln!(m, "jumphedge {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(m, "experiment: {}", exp.config.experiment.name());
    let _ = writeln!(m, "master_seed: {}", settings.master_seed);
    let _ = writeln!(m, "n_paths: {}", settings.n_paths);
    let _ = writeln!(m, "input {} {}", blob_hash(config_text.as_bytes()), config_name);
    for name in outputs {
        let bytes = fs::read(dir.join(name))?;
        let _ = writeln!(m, "output {} {}", blob_hash(&bytes), name);
    }
    let _ = writeln!(m, "config:");
    m.push_str(config_text);
    if !config_text.ends_with('\n') {
        m.push('\n');
    }
    let path = dir.join("manifest.txt");
    fs::write(&path, m)?;
    Ok(path)
}
