//! The predictor interface shared by Kriging and PCE models.

use serde::{Deserialize, Serialize};

/// A fitted response surface over normalized coordinates `[-1, 1]^m`.
pub trait Surrogate: Send + Sync {
    fn dim(&self) -> usize;

    fn predict(&self, u: &[f64]) -> f64;

    /// Closed-form gradient, when the model has one.
    fn gradient(&self, _u: &[f64]) -> Option<Vec<f64>> {
        None
    }
}

/// Wraps a plain closure as a surrogate, mostly for tests and ad-hoc analyses.
pub struct FnSurrogate<F> {
    dim: usize,
    f: F,
}

impl<F> FnSurrogate<F>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
{
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F> Surrogate for FnSurrogate<F>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn predict(&self, u: &[f64]) -> f64 {
        (self.f)(u)
    }
}

/// How gradients are obtained from a surrogate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum GradientMethod {
    /// Closed form when the surrogate provides one, finite differences otherwise.
    Auto { fd_step: f64 },
    /// Always finite differences.
    FiniteDifference { fd_step: f64 },
}

impl Default for GradientMethod {
    fn default() -> Self {
        GradientMethod::Auto { fd_step: 1e-4 }
    }
}
