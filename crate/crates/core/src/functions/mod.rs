//! Analytic benchmark problems with closed-form gradients.
//!
//! They double as demo problems for the CLI and as exact gradient oracles for
//! checking surrogate-based subspace estimates.

pub mod constants;

use std::f64::consts::SQRT_2;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::design::DesignSpace;
use crate::error::{Error, Result};
use constants::*;

/// Zakharov function, any dimension. Global minimum 0 at the origin.
pub fn zakharov(x: &[f64]) -> f64 {
    let sq: f64 = x.iter().map(|v| v * v).sum();
    let s = zakharov_weighted_sum(x);
    sq + s.powi(2) + s.powi(4)
}

fn zakharov_weighted_sum(x: &[f64]) -> f64 {
    x.iter().enumerate().map(|(i, v)| 0.5 * (i + 1) as f64 * v).sum()
}

pub fn zakharov_gradient(x: &[f64]) -> Vec<f64> {
    let s = zakharov_weighted_sum(x);
    let common = s + 2.0 * s.powi(3);
    x.iter()
        .enumerate()
        .map(|(i, v)| 2.0 * v + (i + 1) as f64 * common)
        .collect()
}

fn check_dim(x: &[f64], m: usize) -> Result<()> {
    if x.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: x.len(),
        });
    }
    Ok(())
}

fn hartman6_terms(x: &[f64]) -> [f64; 4] {
    let mut e = [0.0; 4];
    for (i, ei) in e.iter_mut().enumerate() {
        let inner: f64 = (0..6)
            .map(|j| HARTMAN6_A[i][j] * (x[j] - HARTMAN6_P[i][j]).powi(2))
            .sum();
        *ei = (-inner).exp();
    }
    e
}

pub fn hartman6(x: &[f64]) -> Result<f64> {
    check_dim(x, 6)?;
    let e = hartman6_terms(x);
    Ok(-HARTMAN6_C.iter().zip(e).map(|(c, e)| c * e).sum::<f64>())
}

pub fn hartman6_gradient(x: &[f64]) -> Result<Vec<f64>> {
    check_dim(x, 6)?;
    let e = hartman6_terms(x);
    Ok((0..6)
        .map(|j| {
            (0..4)
                .map(|i| HARTMAN6_C[i] * e[i] * 2.0 * HARTMAN6_A[i][j] * (x[j] - HARTMAN6_P[i][j]))
                .sum()
        })
        .collect())
}

fn fourbar_check(x: &[f64]) -> Result<()> {
    check_dim(x, 4)?;
    if let Some((i, v)) = x.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
        return Err(Error::Domain(format!("four-bar x{} = {v} must be positive", i + 1)));
    }
    Ok(())
}

/// Four-bar truss: (structural volume, joint displacement).
///
/// The volume term uses `sqrt(x3)` exactly as the problem is usually printed
/// in the active-subspace literature; the original truss formulation has
/// `sqrt(2) * x3` there instead.
pub fn fourbar(x: &[f64]) -> Result<(f64, f64)> {
    fourbar_check(x)?;
    let f1 = FOURBAR_L * (2.0 * x[0] + SQRT_2 * x[1] + x[2].sqrt() + x[3]);
    let k = FOURBAR_F * FOURBAR_L / FOURBAR_E;
    let f2 = k * (2.0 / x[0] + 2.0 * SQRT_2 / x[1] - 2.0 * SQRT_2 / x[2] + 2.0 / x[3]);
    Ok((f1, f2))
}

pub fn fourbar_gradient(x: &[f64], objective: usize) -> Result<Vec<f64>> {
    fourbar_check(x)?;
    match objective {
        0 => Ok(vec![
            2.0 * FOURBAR_L,
            SQRT_2 * FOURBAR_L,
            FOURBAR_L * 0.5 / x[2].sqrt(),
            FOURBAR_L,
        ]),
        1 => {
            let k = FOURBAR_F * FOURBAR_L / FOURBAR_E;
            Ok(vec![
                -2.0 * k / (x[0] * x[0]),
                -2.0 * SQRT_2 * k / (x[1] * x[1]),
                2.0 * SQRT_2 * k / (x[2] * x[2]),
                -2.0 * k / (x[3] * x[3]),
            ])
        }
        index => Err(Error::UnknownObjective { index, available: 2 }),
    }
}

/// The registered benchmark problems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "lowercase", deny_unknown_fields)]
pub enum TestFunction {
    Zakharov { dim: usize },
    Hartman6,
    Fourbar,
}

impl TestFunction {
    /// Registry lookup. `dim` is required for (and only accepted by) `zakharov`.
    pub fn by_name(name: &str, dim: Option<usize>) -> Result<Self> {
        let f = match (name.to_ascii_lowercase().as_str(), dim) {
            ("zakharov", Some(0)) => {
                return Err(Error::InvalidArgument("zakharov needs dim >= 1".into()))
            }
            ("zakharov", Some(dim)) => TestFunction::Zakharov { dim },
            ("zakharov", None) => {
                return Err(Error::InvalidArgument("zakharov needs a dimension".into()))
            }
            ("hartman6", None) => TestFunction::Hartman6,
            ("fourbar", None) => TestFunction::Fourbar,
            ("hartman6" | "fourbar", Some(_)) => {
                return Err(Error::InvalidArgument(format!("{name} has a fixed dimension")))
            }
            _ => return Err(Error::UnknownFunction(name.to_string())),
        };
        Ok(f)
    }

    pub fn name(&self) -> &'static str {
        match self {
            TestFunction::Zakharov { .. } => "zakharov",
            TestFunction::Hartman6 => "hartman6",
            TestFunction::Fourbar => "fourbar",
        }
    }

    pub fn dim(&self) -> usize {
        match *self {
            TestFunction::Zakharov { dim } => dim,
            TestFunction::Hartman6 => 6,
            TestFunction::Fourbar => 4,
        }
    }

    pub fn num_objectives(&self) -> usize {
        match self {
            TestFunction::Fourbar => 2,
            _ => 1,
        }
    }

    pub fn space(&self) -> DesignSpace {
        match *self {
            TestFunction::Zakharov { dim } => DesignSpace::hypercube(dim, -5.0, 10.0),
            TestFunction::Hartman6 => DesignSpace::hypercube(6, 0.0, 1.0),
            TestFunction::Fourbar => {
                let a = FOURBAR_F / FOURBAR_SIGMA;
                DesignSpace::new(vec![a, SQRT_2 * a, SQRT_2 * a, a], vec![3.0 * a; 4])
            }
        }
        .expect("built-in bounds are valid")
    }

    fn check_objective(&self, objective: usize) -> Result<()> {
        if objective >= self.num_objectives() {
            return Err(Error::UnknownObjective {
                index: objective,
                available: self.num_objectives(),
            });
        }
        Ok(())
    }

    /// Objective value at a raw-coordinate point.
    pub fn evaluate(&self, objective: usize, x: &[f64]) -> Result<f64> {
        self.check_objective(objective)?;
        match self {
            TestFunction::Zakharov { dim } => {
                check_dim(x, *dim)?;
                Ok(zakharov(x))
            }
            TestFunction::Hartman6 => hartman6(x),
            TestFunction::Fourbar => fourbar(x).map(|(f1, f2)| if objective == 0 { f1 } else { f2 }),
        }
    }

    /// Exact gradient in raw coordinates.
    pub fn gradient(&self, objective: usize, x: &[f64]) -> Result<Vec<f64>> {
        self.check_objective(objective)?;
        match self {
            TestFunction::Zakharov { dim } => {
                check_dim(x, *dim)?;
                Ok(zakharov_gradient(x))
            }
            TestFunction::Hartman6 => hartman6_gradient(x),
            TestFunction::Fourbar => fourbar_gradient(x, objective),
        }
    }

    /// Exact gradient with respect to the normalized coordinates `u` of the point.
    pub fn normalized_gradient(&self, objective: usize, u: &[f64]) -> Result<Vec<f64>> {
        let space = self.space();
        let x = space.denormalize(u)?;
        Ok(space.gradient_to_normalized(&self.gradient(objective, &x)?))
    }
}

impl fmt::Display for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TestFunction::Zakharov { dim } => write!(f, "zakharov:{dim}"),
            other => f.write_str(other.name()),
        }
    }
}

impl FromStr for TestFunction {
    type Err = Error;

    /// `zakharov:20`, `hartman6`, `fourbar`.
    fn from_str(s: &str) -> Result<Self> {
        match s.split_once(':') {
            Some((name, dim)) => {
                let dim = dim
                    .parse()
                    .map_err(|_| Error::InvalidArgument(format!("bad dimension in `{s}`")))?;
                Self::by_name(name, Some(dim))
            }
            None => Self::by_name(s, None),
        }
    }
}
