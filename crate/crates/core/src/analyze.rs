//! End-to-end runs behind the `analyze` and `optimize` commands.

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde_json::{json, Map, Value};

use crate::asm::{discover, ActiveSubspace};
use crate::config::{AnalysisConfig, OptimizeConfig, Problem};
use crate::csvio;
use crate::design::{DesignSpace, SampleSet};
use crate::diagnose::{diagnose, DiagnosisReport};
use crate::ego::{ego_run, EgoResult};
use crate::error::{Error, Result};
use crate::kriging::KrigingModel;
use crate::pce::PceModel;
use crate::surrogate::Surrogate;
use crate::svg;

pub const REPORT_FILE: &str = "report.json";
pub const REDUCED_FILE: &str = "reduced.csv";
pub const SCATTER_1D_FILE: &str = "scatter_1d.svg";
pub const SCATTER_2D_FILE: &str = "scatter_2d.svg";
pub const EIGEN_CSV_FILE: &str = "eigen_decay.csv";
pub const EIGEN_SVG_FILE: &str = "eigen_decay.svg";
pub const EIGVEC_FILE: &str = "eigvec_bar.svg";
pub const HISTORY_FILE: &str = "history.csv";
pub const BEST_FILE: &str = "best.json";

pub enum FittedSurrogate {
    Kriging(KrigingModel),
    Pce(PceModel),
}

impl FittedSurrogate {
    pub fn as_surrogate(&self) -> &dyn Surrogate {
        match self {
            FittedSurrogate::Kriging(m) => m,
            FittedSurrogate::Pce(m) => m,
        }
    }

    fn summary(&self) -> Value {
        match self {
            FittedSurrogate::Kriging(m) => json!({
                "kind": "kriging",
                "theta": m.theta(),
                "mu_hat": m.mu_hat(),
                "sigma2_hat": m.sigma2_hat(),
                "nugget": m.nugget(),
                "log_likelihood": m.log_likelihood(),
            }),
            FittedSurrogate::Pce(m) => json!({
                "kind": "pce",
                "p_selected": m.p_selected(),
                "terms": m.basis().len(),
                "loo_error": m.loo_error(),
            }),
        }
    }
}

/// Everything an analysis produces, before anything is written to disk.
pub struct AnalysisOutcome {
    pub space: DesignSpace,
    /// Training data in raw coordinates.
    pub raw: SampleSet,
    /// Training data in `[-1, 1]^m`.
    pub normalized: SampleSet,
    pub surrogate: FittedSurrogate,
    pub subspace: ActiveSubspace,
    /// `k × n_active` projection of the normalized training designs.
    pub reduced: DMatrix<f64>,
    pub diagnosis: DiagnosisReport,
    pub title: String,
}

/// Sample (built-in problem) or ingest (CSV problem) the training data, in raw coordinates.
pub fn gather_samples(config: &AnalysisConfig) -> Result<(DesignSpace, SampleSet)> {
    let space = config.problem.space()?;
    match &config.problem {
        Problem::Builtin { .. } => {
            let f = config.problem.builtin()?.expect("builtin problem");
            let k = config.sample_count.expect("validated sample_count");
            let design = space.lhs_sample(k, config.seed)?;
            let y = (0..k)
                .map(|r| f.evaluate(config.objective_index, &design.point(r)))
                .collect::<Result<Vec<_>>>()?;
            Ok((space.clone(), design.with_responses(y)?))
        }
        Problem::Csv { path, .. } => {
            let samples = csvio::ingest_csv(&config.resolve(path), &space)?;
            let m = space.dim();
            if samples.len() < m + 1 {
                return Err(Error::Shape(format!(
                    "{} samples in {}; at least m + 1 = {} are needed",
                    samples.len(),
                    path.display(),
                    m + 1
                )));
            }
            Ok((space, samples))
        }
    }
}

fn title(config: &AnalysisConfig) -> Result<String> {
    Ok(match (&config.problem, config.problem.builtin()?) {
        (_, Some(f)) if f.num_objectives() > 1 => format!("{f}, objective {}", config.objective_index),
        (_, Some(f)) => f.to_string(),
        (Problem::Csv { path, .. }, None) => path
            .file_name()
            .map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned()),
        (Problem::Builtin { .. }, None) => unreachable!("builtin problems always resolve"),
    })
}

/// Run the whole pipeline in memory.
pub fn analyze(config: &AnalysisConfig) -> Result<AnalysisOutcome> {
    config.validate()?;
    let (space, raw) = gather_samples(config)?;
    let normalized = space.normalize_samples(&raw)?;
    let surrogate = match config.surrogate.pce() {
        Some(pce) => FittedSurrogate::Pce(PceModel::fit(&normalized, &pce)?),
        None => FittedSurrogate::Kriging(KrigingModel::fit(&normalized, config.seed)?),
    };
    let subspace = discover(
        normalized.x(),
        surrogate.as_surrogate(),
        config.n_active,
        config.mode.sampling(config.seed),
        config.gradient,
    )?;
    let reduced = subspace.project(normalized.x())?;
    let y: Vec<f64> = normalized.responses()?.iter().copied().collect();
    let activity = subspace.activity_scores(subspace.dim())?;
    let diagnosis = diagnose(&reduced, &y, subspace.eigenvalues(), Some(activity), &config.thresholds)?;
    Ok(AnalysisOutcome {
        space,
        raw,
        normalized,
        surrogate,
        subspace,
        reduced,
        diagnosis,
        title: title(config)?,
    })
}

/// Artifact names written by [`write_artifacts`] for `n_active` directions.
pub fn artifact_names(n_active: usize) -> Vec<&'static str> {
    let mut names = vec![REPORT_FILE, REDUCED_FILE, SCATTER_1D_FILE];
    if n_active >= 2 {
        names.push(SCATTER_2D_FILE);
    }
    names.extend([EIGEN_CSV_FILE, EIGEN_SVG_FILE, EIGVEC_FILE]);
    names
}

/// Rebuild a JSON value with every object's keys in sorted order.
pub fn sorted_json(value: Value) -> Value {
    match value {
        Value::Object(map) => {
            let mut entries: Vec<(String, Value)> = map.into_iter().collect();
            entries.sort_by(|a, b| a.0.cmp(&b.0));
            Value::Object(entries.into_iter().map(|(k, v)| (k, sorted_json(v))).collect::<Map<_, _>>())
        }
        Value::Array(items) => Value::Array(items.into_iter().map(sorted_json).collect()),
        other => other,
    }
}

pub fn report_json(config: &AnalysisConfig, outcome: &AnalysisOutcome) -> Result<Value> {
    let n = config.n_active;
    let w1: Vec<Vec<f64>> = (0..n)
        .map(|j| outcome.subspace.w().column(j).iter().copied().collect())
        .collect();
    let d = &outcome.diagnosis;
    let report = json!({
        "config": serde_json::to_value(config)?,
        "problem": {
            "title": outcome.title,
            "dim": outcome.space.dim(),
            "lower": outcome.space.lower(),
            "upper": outcome.space.upper(),
            "samples": outcome.raw.len(),
        },
        "surrogate": outcome.surrogate.summary(),
        "eigenvalues": outcome.subspace.eigenvalues(),
        "explained": outcome.subspace.explained(),
        "explained_1": d.explained_1,
        "explained_2": d.explained_2,
        "r2_linear_1d": d.r2_linear_1d,
        "r2_quadratic_1d": d.r2_quadratic_1d,
        "activity": d.activity,
        "eigenvectors": w1,
        "flags": d.flags,
        "recommendation": d.recommendation,
        "artifacts": artifact_names(n),
    });
    Ok(sorted_json(report))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text)?;
    Ok(())
}

/// Write every artifact of an analysis into `dir` (created if missing).
pub fn write_artifacts(config: &AnalysisConfig, outcome: &AnalysisOutcome, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let y: Vec<f64> = outcome.normalized.responses()?.iter().copied().collect();
    let report = report_json(config, outcome)?;
    write_text(&dir.join(REPORT_FILE), &(serde_json::to_string_pretty(&report)? + "\n"))?;
    csvio::write_reduced_csv(&dir.join(REDUCED_FILE), &outcome.reduced, &y)?;

    let xr1: Vec<f64> = outcome.reduced.column(0).iter().copied().collect();
    write_text(&dir.join(SCATTER_1D_FILE), &svg::scatter_1d(&xr1, &y, &outcome.title))?;
    if outcome.reduced.ncols() >= 2 {
        let xr2: Vec<f64> = outcome.reduced.column(1).iter().copied().collect();
        write_text(&dir.join(SCATTER_2D_FILE), &svg::scatter_2d(&xr1, &xr2, &y, &outcome.title))?;
    }
    let eig = outcome.subspace.eigenvalues();
    csvio::write_eigen_csv(&dir.join(EIGEN_CSV_FILE), eig, outcome.subspace.explained())?;
    write_text(&dir.join(EIGEN_SVG_FILE), &svg::eigen_decay(eig, &outcome.title))?;
    let vectors: Vec<Vec<f64>> = (0..outcome.reduced.ncols())
        .map(|j| outcome.subspace.w().column(j).iter().copied().collect())
        .collect();
    write_text(&dir.join(EIGVEC_FILE), &svg::eigvec_bar(&vectors, &outcome.title))?;
    Ok(())
}

/// `analyze` command: run the pipeline and write the artifacts to the configured directory.
pub fn run_analysis(config: &AnalysisConfig) -> Result<AnalysisOutcome> {
    let outcome = analyze(config)?;
    write_artifacts(config, &outcome, &config.resolve(&config.output_dir))?;
    Ok(outcome)
}

/// `optimize` command: one EGO run, writing `history.csv` and `best.json`.
pub fn run_optimize(config: &OptimizeConfig) -> Result<EgoResult> {
    config.validate()?;
    let f = config.function()?;
    let objective = config.objective_index;
    let result = ego_run(|x| f.evaluate(objective, x), &f.space(), &config.ego())?;
    let dir = config.resolve(&config.output_dir);
    fs::create_dir_all(&dir)?;
    if !result.history.is_empty() {
        let rows: Vec<Vec<f64>> = result.history.iter().map(|e| e.x.clone()).collect();
        let y = result.history.iter().map(|e| e.y).collect();
        csvio::emit_design_csv(&SampleSet::from_rows(&rows, Some(y))?, &dir.join(HISTORY_FILE))?;
    }
    let best = sorted_json(json!({
        "config": serde_json::to_value(config)?,
        "best_x": result.best_x,
        "best_y": result.best_y,
        "evaluations": result.history.len(),
        "termination": result.termination,
    }));
    write_text(&dir.join(BEST_FILE), &(serde_json::to_string_pretty(&best)? + "\n"))?;
    Ok(result)
}
