//! Rule-based reading of a reduced-coordinate scatter.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::asm::{explained_variance, ActivityScores};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    /// `explained_1` at or above this marks a ridge-like response.
    pub ridge: f64,
    /// Quadratic r² needed (on top of ridge-like) for a unimodal 1-D reading.
    pub unimodal_r2: f64,
    /// `explained_1` at or above this, with a poor quadratic fit, suggests multimodality.
    pub multimodal_explained: f64,
    pub multimodal_r2: f64,
    /// `explained_2` below this means no low-dimensional structure.
    pub dominant_explained: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            ridge: 0.8,
            unimodal_r2: 0.8,
            multimodal_explained: 0.5,
            multimodal_r2: 0.5,
            dominant_explained: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Flag {
    #[serde(rename = "ridge-like")]
    RidgeLike,
    #[serde(rename = "likely-unimodal-1d")]
    LikelyUnimodal1d,
    #[serde(rename = "likely-multimodal")]
    LikelyMultimodal,
    #[serde(rename = "no-dominant-direction")]
    NoDominantDirection,
}

impl Flag {
    pub fn as_str(self) -> &'static str {
        match self {
            Flag::RidgeLike => "ridge-like",
            Flag::LikelyUnimodal1d => "likely-unimodal-1d",
            Flag::LikelyMultimodal => "likely-multimodal",
            Flag::NoDominantDirection => "no-dominant-direction",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosisReport {
    pub eigenvalues: Vec<f64>,
    pub explained_1: f64,
    pub explained_2: f64,
    pub r2_linear_1d: f64,
    pub r2_quadratic_1d: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub activity: Option<ActivityScores>,
    pub flags: Vec<Flag>,
    pub recommendation: String,
}

impl DiagnosisReport {
    pub fn has(&self, flag: Flag) -> bool {
        self.flags.contains(&flag)
    }
}

/// Coefficient of determination of a least-squares polynomial fit, clamped to `[0, 1]`.
pub fn polynomial_r2(x: &[f64], y: &[f64], degree: usize) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Shape(format!("{} coordinates but {} responses", x.len(), y.len())));
    }
    let k = y.len();
    let yv = DVector::from_column_slice(y);
    let mean = yv.mean();
    let total: f64 = yv.iter().map(|v| (v - mean).powi(2)).sum();
    if !(total > 0.0) {
        return Err(Error::DegenerateResponse);
    }
    let a = DMatrix::from_fn(k, degree + 1, |r, c| x[r].powi(c as i32));
    let coef = a
        .clone()
        .svd(true, true)
        .solve(&yv, 1e-12)
        .map_err(|e| Error::FitFailure(e.to_string()))?;
    let resid = (&a * coef - &yv).norm_squared();
    Ok((1.0 - resid / total).clamp(0.0, 1.0))
}

/// Apply the flag rules to precomputed fractions and fit qualities.
pub fn flags_for(explained_1: f64, explained_2: f64, r2_quadratic_1d: f64, t: &Thresholds) -> Vec<Flag> {
    let mut flags = Vec::new();
    let ridge = explained_1 >= t.ridge;
    if ridge {
        flags.push(Flag::RidgeLike);
    }
    if ridge && r2_quadratic_1d >= t.unimodal_r2 {
        flags.push(Flag::LikelyUnimodal1d);
    }
    if explained_1 >= t.multimodal_explained && r2_quadratic_1d < t.multimodal_r2 {
        flags.push(Flag::LikelyMultimodal);
    }
    if explained_2 < t.dominant_explained {
        flags.push(Flag::NoDominantDirection);
    }
    flags
}

pub fn recommendation(flags: &[Flag]) -> String {
    let has = |f| flags.contains(&f);
    let mut parts: Vec<&str> = Vec::new();
    if has(Flag::LikelyUnimodal1d) {
        parts.push(
            "The response follows a single smooth trend along the first active direction, \
             which points to a single global optimum: a gradient-based or other local \
             optimizer started from the best sample should suffice.",
        );
    } else if has(Flag::RidgeLike) {
        parts.push(
            "One direction dominates the gradient variability, but the trend along it is not \
             a simple quadratic; inspect the 1-D scatter before choosing a local optimizer.",
        );
    }
    if has(Flag::LikelyMultimodal) {
        parts.push(
            "The scatter along the leading direction shows no clear trend, so the landscape is \
             probably multimodal: prefer a global strategy (surrogate-based EGO or a population \
             method) over local search.",
        );
    }
    if has(Flag::NoDominantDirection) {
        parts.push(
            "Even two directions explain less than half of the gradient variability; the problem \
             does not reduce well, and a flexible surrogate such as Kriging is a safer choice \
             than a low-order polynomial.",
        );
    }
    if parts.is_empty() {
        parts.push(
            "A low-dimensional structure is present but the 1-D trend is inconclusive; check the \
             2-D scatter and consider a Kriging surrogate to capture the nonlinear behaviour.",
        );
    }
    parts.join(" ")
}

/// Diagnose a projection: `reduced` is `k × n` (first column used for the
/// fits), `y` the responses and `eigenvalues` the full descending spectrum.
pub fn diagnose(
    reduced: &DMatrix<f64>,
    y: &[f64],
    eigenvalues: &[f64],
    activity: Option<ActivityScores>,
    thresholds: &Thresholds,
) -> Result<DiagnosisReport> {
    let k = reduced.nrows();
    if k < 5 {
        return Err(Error::InvalidArgument(format!("diagnosis needs at least 5 samples, got {k}")));
    }
    if reduced.ncols() == 0 {
        return Err(Error::Shape("reduced coordinates have no columns".into()));
    }
    if y.len() != k {
        return Err(Error::Shape(format!("{k} reduced rows but {} responses", y.len())));
    }
    if eigenvalues.is_empty() {
        return Err(Error::Shape("empty eigenvalue list".into()));
    }
    let explained_1 = explained_variance(eigenvalues, 1)?;
    let explained_2 = explained_variance(eigenvalues, eigenvalues.len().min(2))?;
    let x: Vec<f64> = reduced.column(0).iter().copied().collect();
    let r2_linear_1d = polynomial_r2(&x, y, 1)?;
    let r2_quadratic_1d = polynomial_r2(&x, y, 2)?;
    let flags = flags_for(explained_1, explained_2, r2_quadratic_1d, thresholds);
    Ok(DiagnosisReport {
        eigenvalues: eigenvalues.to_vec(),
        explained_1,
        explained_2,
        r2_linear_1d,
        r2_quadratic_1d,
        activity,
        recommendation: recommendation(&flags),
        flags,
    })
}
