//! Experiment configs, studies, and their on-disk results.

mod config;
mod output;
mod studies;

use std::fs;
use std::path::{Path, PathBuf};

pub use config::{
    Experiment, ExperimentConfig, ExperimentKind, GridConfig, HedgeConfig, IntegrandConfig, ModelConfig,
    RuleConfig, StepScaling,
};
pub use output::{blob_hash, dump_paths, write_manifest, write_results};
pub use studies::{
    hitting_frontier, relative_deviation, run_convergence_study, run_frontier, run_rate_comparison,
    run_rescaling_validation, run_study, ConvergenceResult, ConvergenceRow, FitReport, FrontierResult,
    MatchedBudget, OvershootRow, RateComparisonResult, RescalingResult, RescalingRow, ScaledCost, StudyKind,
    StudyResult, MIN_FRONTIER_POINTS, PRE_ASYMPTOTIC_POINTS,
};

use crate::error::{Error, Result};
use crate::montecarlo::McSettings;

/// Overrides applied on top of a config file.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub threads: Option<usize>,
    pub out_dir: Option<PathBuf>,
    pub seed: Option<u64>,
}

/// What a completed run produced.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub out_dir: PathBuf,
    pub files: Vec<String>,
    pub result: StudyResult,
}

/// Reads and validates a config file.
pub fn load_config(path: &Path) -> Result<(String, Experiment)> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::config(path.display().to_string(), format!("cannot read: {e}")))?;
    let exp = ExperimentConfig::from_json(&text)?.validate()?;
    Ok((text, exp))
}

/// Runs the study in `config_path` and writes its results and manifest.
pub fn run_config_file(config_path: &Path, opts: &RunOptions) -> Result<RunReport> {
    let (text, exp) = load_config(config_path)?;
    let name = config_path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "config.json".into());
    run_experiment(&exp, &text, &name, opts)
}

/// Runs an already validated experiment. `config_text` and `config_name`
/// are recorded in the manifest.
pub fn run_experiment(exp: &Experiment, config_text: &str, config_name: &str, opts: &RunOptions) -> Result<RunReport> {
    let seed = opts.seed.unwrap_or(exp.config.master_seed);
    let mut settings = McSettings::new(exp.config.n_paths, seed);
    if let Some(t) = opts.threads {
        if t == 0 {
            return Err(Error::config("--threads", "must be >= 1"));
        }
        settings = settings.with_threads(t);
    }
    let out_dir = opts
        .out_dir
        .clone()
        .or_else(|| exp.config.output_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));

    let result = run_study(exp, &settings)?;
    let mut files = write_results(exp, &result, seed, &out_dir)?;
    files.extend(dump_paths(exp, seed, exp.config.dump_paths, &out_dir)?);
    write_manifest(&out_dir, config_name, config_text, &settings, exp, &files)?;
    files.push("manifest.txt".into());
    Ok(RunReport {
        out_dir,
        files,
        result,
    })
}
