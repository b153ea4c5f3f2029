//! Active subspace discovery.
//!
//! Gradients (in normalized coordinates) are averaged into
//! `C = (1/M) Σ ∇f ∇fᵀ`, whose eigenvectors sorted by descending eigenvalue
//! give the directions along which the response varies most. The first `n`
//! of them span the active subspace; projecting designs onto it gives the
//! reduced coordinates `x_r = W1ᵀ u`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::design::DesignSpace;
use crate::eigen::{eigendecompose_symmetric, SymmetricEigen};
use crate::error::{Error, Result};
use crate::par;
use crate::surrogate::{GradientMethod, Surrogate};

/// Gradients at `M` points, one per row, in normalized coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientSet {
    g: DMatrix<f64>,
}

impl GradientSet {
    pub fn new(g: DMatrix<f64>) -> Result<Self> {
        if g.nrows() == 0 || g.ncols() == 0 {
            return Err(Error::InvalidArgument("gradient set is empty".into()));
        }
        if let Some(r) = g.row_iter().position(|row| row.iter().any(|v| !v.is_finite())) {
            return Err(Error::Evaluation(g.row(r).iter().copied().collect()));
        }
        Ok(Self { g })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let m = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::Shape("gradient rows differ in length".into()));
        }
        Self::new(DMatrix::from_fn(rows.len(), m, |r, c| rows[r][c]))
    }

    /// Evaluate `grad` at every row of `points` (parallel, order preserved).
    pub fn evaluate<F>(points: &DMatrix<f64>, grad: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> Result<Vec<f64>> + Sync + Send,
    {
        let rows = par::map_indexed(points.nrows(), |r| {
            let u: Vec<f64> = points.row(r).iter().copied().collect();
            grad(&u)
        });
        let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
        Self::from_rows(&rows)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.g
    }

    pub fn len(&self) -> usize {
        self.g.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.g.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.g.ncols()
    }
}

/// Central finite differences of a surrogate at `u`.
///
/// Coordinates where `u_i ± h` would leave `[-1, 1]` fall back to a one-sided
/// difference pointing into the box.
pub fn estimate_gradient_fd(surrogate: &dyn Surrogate, u: &[f64], h: f64) -> Result<Vec<f64>> {
    if !(h > 0.0) {
        return Err(Error::InvalidArgument(format!("finite-difference step must be positive, got {h}")));
    }
    let eval = |p: &[f64]| {
        let v = surrogate.predict(p);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Evaluation(p.to_vec()))
        }
    };
    let mut p = u.to_vec();
    let mut grad = Vec::with_capacity(u.len());
    let mut centre: Option<f64> = None;
    for i in 0..u.len() {
        let x = u[i];
        let forward_ok = x + h <= 1.0;
        let backward_ok = x - h >= -1.0;
        let g = if forward_ok && backward_ok {
            p[i] = x + h;
            let fp = eval(&p)?;
            p[i] = x - h;
            let fm = eval(&p)?;
            (fp - fm) / (2.0 * h)
        } else {
            let f0 = match centre {
                Some(v) => v,
                None => *centre.insert(eval(u)?),
            };
            if backward_ok {
                p[i] = x - h;
                (f0 - eval(&p)?) / h
            } else {
                p[i] = x + h;
                (eval(&p)? - f0) / h
            }
        };
        p[i] = x;
        grad.push(g);
    }
    Ok(grad)
}

/// Gradient of a surrogate by the requested method.
pub fn surrogate_gradient(surrogate: &dyn Surrogate, u: &[f64], method: GradientMethod) -> Result<Vec<f64>> {
    match method {
        GradientMethod::Auto { fd_step } => match surrogate.gradient(u) {
            Some(g) => Ok(g),
            None => estimate_gradient_fd(surrogate, u, fd_step),
        },
        GradientMethod::FiniteDifference { fd_step } => estimate_gradient_fd(surrogate, u, fd_step),
    }
}

/// `C = (1/M) Σ g gᵀ`, symmetrized to remove roundoff asymmetry.
pub fn build_c_matrix(grads: &GradientSet) -> DMatrix<f64> {
    let g = grads.matrix();
    let c = g.transpose() * g / g.nrows() as f64;
    (&c + c.transpose()) * 0.5
}

/// Sorted eigenpairs of a C matrix plus the chosen active dimension `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ActiveSubspace {
    eigenvalues: Vec<f64>,
    w: DMatrix<f64>,
    n: usize,
    explained: Vec<f64>,
    c: DMatrix<f64>,
}

impl ActiveSubspace {
    pub fn from_c_matrix(c: DMatrix<f64>, n: usize) -> Result<Self> {
        let m = c.nrows();
        check_active_dim(n, m)?;
        let SymmetricEigen {
            eigenvalues,
            eigenvectors,
            ..
        } = eigendecompose_symmetric(&c)?;
        // C is PSD; negative eigenvalues are pure roundoff
        let eigenvalues: Vec<f64> = eigenvalues.iter().map(|v| v.max(0.0)).collect();
        let total: f64 = eigenvalues.iter().sum();
        let explained = if total > 0.0 {
            let mut acc = 0.0;
            eigenvalues
                .iter()
                .map(|v| {
                    acc += v;
                    (acc / total).min(1.0)
                })
                .collect()
        } else {
            vec![0.0; m]
        };
        Ok(Self {
            eigenvalues,
            w: eigenvectors,
            n,
            explained,
            c,
        })
    }

    pub fn from_gradients(grads: &GradientSet, n: usize) -> Result<Self> {
        Self::from_c_matrix(build_c_matrix(grads), n)
    }

    pub fn dim(&self) -> usize {
        self.w.nrows()
    }

    pub fn active_dim(&self) -> usize {
        self.n
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// All eigenvectors as columns.
    pub fn w(&self) -> &DMatrix<f64> {
        &self.w
    }

    pub fn c_matrix(&self) -> &DMatrix<f64> {
        &self.c
    }

    /// Cumulative explained-variance fractions, one per leading eigenvalue count.
    pub fn explained(&self) -> &[f64] {
        &self.explained
    }

    /// The first `n` eigenvectors.
    pub fn w1(&self) -> DMatrix<f64> {
        self.w.columns(0, self.n).into_owned()
    }

    pub fn with_active_dim(mut self, n: usize) -> Result<Self> {
        check_active_dim(n, self.dim())?;
        self.n = n;
        Ok(self)
    }

    pub fn partition(&self, n: usize) -> Result<(DMatrix<f64>, Vec<f64>)> {
        partition(self, n)
    }

    pub fn project(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        project(&self.w1(), x)
    }

    pub fn activity_scores(&self, n: usize) -> Result<ActivityScores> {
        activity_scores(&self.eigenvalues, &self.w, n)
    }

    pub fn explained_variance(&self, n: usize) -> Result<f64> {
        explained_variance(&self.eigenvalues, n)
    }
}

fn check_active_dim(n: usize, m: usize) -> Result<()> {
    if n == 0 || n > m {
        return Err(Error::InvalidArgument(format!("active dimension {n} outside 1..={m}")));
    }
    Ok(())
}

/// `(W1, Λ1)`: the first `n` eigenvectors and eigenvalues.
pub fn partition(subspace: &ActiveSubspace, n: usize) -> Result<(DMatrix<f64>, Vec<f64>)> {
    check_active_dim(n, subspace.dim())?;
    Ok((subspace.w.columns(0, n).into_owned(), subspace.eigenvalues[..n].to_vec()))
}

/// Row-wise `x_r = W1ᵀ x` for a `k×m` design matrix.
pub fn project(w1: &DMatrix<f64>, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if x.ncols() != w1.nrows() {
        return Err(Error::DimensionMismatch {
            expected: w1.nrows(),
            got: x.ncols(),
        });
    }
    Ok(x * w1)
}

/// Per-variable activity scores `α_i(n) = Σ_{j≤n} λ_j w_ij²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivityScores {
    pub alpha: Vec<f64>,
    pub n_used: usize,
}

pub fn activity_scores(eigenvalues: &[f64], w: &DMatrix<f64>, n: usize) -> Result<ActivityScores> {
    let m = eigenvalues.len();
    if w.nrows() != m || w.ncols() != m {
        return Err(Error::Shape(format!(
            "{} eigenvalues but eigenvector matrix is {}x{}",
            m,
            w.nrows(),
            w.ncols()
        )));
    }
    check_active_dim(n, m)?;
    let alpha = (0..m)
        .map(|i| (0..n).map(|j| eigenvalues[j].max(0.0) * w[(i, j)].powi(2)).sum())
        .collect();
    Ok(ActivityScores { alpha, n_used: n })
}

/// `Σ_{j≤n} λ_j / Σ_j λ_j`.
pub fn explained_variance(eigenvalues: &[f64], n: usize) -> Result<f64> {
    check_active_dim(n, eigenvalues.len())?;
    let total: f64 = eigenvalues.iter().sum();
    if !(total > 0.0) {
        return Err(Error::DegenerateSpectrum);
    }
    Ok((eigenvalues[..n].iter().sum::<f64>() / total).clamp(0.0, 1.0))
}

/// Where gradients are evaluated when building C.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum SamplingMode {
    /// At the training designs themselves.
    TrainingPoints,
    /// At `count` fresh uniform points in `[-1, 1]^m`.
    MonteCarlo { count: usize, seed: u64 },
}

impl Default for SamplingMode {
    fn default() -> Self {
        SamplingMode::TrainingPoints
    }
}

/// Surrogate-gradient active subspace.
///
/// `points` are normalized training designs; depending on `mode` gradients are
/// taken there or at fresh Monte Carlo points.
pub fn discover(
    points: &DMatrix<f64>,
    surrogate: &dyn Surrogate,
    n: usize,
    mode: SamplingMode,
    method: GradientMethod,
) -> Result<ActiveSubspace> {
    let m = surrogate.dim();
    if points.ncols() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: points.ncols(),
        });
    }
    if points.nrows() == 0 {
        return Err(Error::InvalidArgument("no sample points".into()));
    }
    let mc;
    let at = match mode {
        SamplingMode::TrainingPoints => points,
        SamplingMode::MonteCarlo { count, seed } => {
            mc = DesignSpace::unit(m).uniform_sample(count, seed)?;
            mc.x()
        }
    };
    let grads = GradientSet::evaluate(at, |u| surrogate_gradient(surrogate, u, method))?;
    ActiveSubspace::from_gradients(&grads, n)
}

/// Largest principal angle (radians) between the column spans of two orthonormal bases.
pub fn max_principal_angle(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64> {
    if a.nrows() != b.nrows() || a.ncols() != b.ncols() {
        return Err(Error::Shape("bases must have the same shape".into()));
    }
    let s = (a.transpose() * b).singular_values();
    let smallest = s.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(smallest.clamp(-1.0, 1.0).acos())
}

/// Cosine of the angle between two vectors, in absolute value.
pub fn abs_cosine(a: &[f64], b: &[f64]) -> f64 {
    let a = DVector::from_column_slice(a);
    let b = DVector::from_column_slice(b);
    (a.dot(&b) / (a.norm() * b.norm())).abs()
}
