//! Ordinary Kriging with a Gaussian correlation kernel.
//!
//! Correlation between designs is `ψ(x, x') = exp(-Σ_j θ_j (x_j - x'_j)²)`
//! (the exponent is fixed at 2). With a constant trend the predictor is
//! `ŷ(x) = μ̂ + ψ(x)ᵀ Ψ⁻¹ (y - 1μ̂)`. The weights θ maximize the concentrated
//! log-likelihood, in which μ̂ and σ̂² are profiled out in closed form:
//!
//! ```text
//! μ̂  = 1ᵀΨ⁻¹y / 1ᵀΨ⁻¹1
//! σ̂² = (y - 1μ̂)ᵀ Ψ⁻¹ (y - 1μ̂) / k
//! ln L = -(k/2) ln σ̂² - (1/2) ln det Ψ
//! ```
//!
//! Ψ is regularized with a nugget `τ · mean(diag Ψ)` where τ starts at 1e-10
//! and grows tenfold up to 1e-6 until the Cholesky factorization succeeds.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::design::{lhs_unit, SampleSet};
use crate::error::{Error, Result};
use crate::optim::{nelder_mead, NelderMead};
use crate::par;
use crate::rng::{self, Stream};
use crate::surrogate::Surrogate;

pub const THETA_MIN: f64 = 1e-3;
pub const THETA_MAX: f64 = 1e3;
pub const NUGGET_START: f64 = 1e-10;
pub const NUGGET_MAX: f64 = 1e-6;
/// Largest accepted `|predict(x_i) − y_i|` at a training point, relative to `max y − min y`.
pub const INTERPOLATION_TOLERANCE: f64 = 1e-6;
/// Iterative-refinement steps of `α` against the unregularized Ψ.
const REFINEMENT_STEPS: usize = 2;

/// Hyperparameter search settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KrigingConfig {
    /// Multi-start count: one start at θ = 1, the rest Latin-hypercube seeded.
    pub starts: usize,
    /// Nelder–Mead iteration cap per start (search runs in log10 θ).
    pub max_iter: usize,
}

impl Default for KrigingConfig {
    fn default() -> Self {
        Self {
            starts: 10,
            max_iter: 200,
        }
    }
}

/// Gaussian correlation matrix of the rows of `x` (unit diagonal, no nugget).
pub fn correlation_matrix(x: &DMatrix<f64>, theta: &[f64]) -> DMatrix<f64> {
    let k = x.nrows();
    let mut psi = DMatrix::identity(k, k);
    for i in 0..k {
        for j in (i + 1)..k {
            let r = correlation(x.row(i).iter().copied(), x.row(j).iter().copied(), theta);
            psi[(i, j)] = r;
            psi[(j, i)] = r;
        }
    }
    psi
}

fn correlation(a: impl Iterator<Item = f64>, b: impl Iterator<Item = f64>, theta: &[f64]) -> f64 {
    let d: f64 = a.zip(b).zip(theta).map(|((a, b), t)| t * (a - b).powi(2)).sum();
    (-d).exp()
}

/// Cholesky of `Ψ + τ·mean(diag)·I` with the escalating nugget. Returns the factor and `τ·mean(diag)`.
pub fn regularized_cholesky(psi: &DMatrix<f64>) -> Result<(Cholesky<f64, Dyn>, f64)> {
    let k = psi.nrows();
    let mean_diag = psi.diagonal().sum() / k as f64;
    let mut tau = NUGGET_START;
    loop {
        let nugget = tau * mean_diag;
        let mut reg = psi.clone();
        for i in 0..k {
            reg[(i, i)] += nugget;
        }
        if let Some(chol) = Cholesky::new(reg) {
            return Ok((chol, nugget));
        }
        if tau >= NUGGET_MAX * (1.0 - 1e-9) {
            return Err(Error::IllConditioned { nugget });
        }
        tau *= 10.0;
    }
}

/// Quantities profiled out of the likelihood for a fixed θ.
struct Profile {
    chol: Cholesky<f64, Dyn>,
    nugget: f64,
    mu: f64,
    sigma2: f64,
    alpha: DVector<f64>,
    psi_inv_one: DVector<f64>,
    one_psi_inv_one: f64,
    ln_det: f64,
    /// `max_i |predict(x_i) − y_i|`.
    interpolation_error: f64,
}

fn profile(x: &DMatrix<f64>, y: &DVector<f64>, theta: &[f64]) -> Result<Profile> {
    let k = x.nrows();
    let psi = correlation_matrix(x, theta);
    let (chol, nugget) = regularized_cholesky(&psi)?;
    let ones = DVector::from_element(k, 1.0);
    let psi_inv_one = chol.solve(&ones);
    let one_psi_inv_one = psi_inv_one.sum();
    let mu = psi_inv_one.dot(y) / one_psi_inv_one;
    let resid = y - &ones * mu;
    let mut alpha = chol.solve(&resid);
    let sigma2 = (resid.dot(&alpha) / k as f64).max(0.0);
    // the nugget costs interpolation; win it back against the exact Ψ
    for _ in 0..REFINEMENT_STEPS {
        let r = &resid - &psi * &alpha;
        alpha += chol.solve(&r);
    }
    let interpolation_error = (&resid - &psi * &alpha).amax();
    let ln_det = 2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    Ok(Profile {
        chol,
        nugget,
        mu,
        sigma2,
        alpha,
        psi_inv_one,
        one_psi_inv_one,
        ln_det,
        interpolation_error,
    })
}

fn check_training(x: &DMatrix<f64>, y: &DVector<f64>, theta: Option<&[f64]>) -> Result<()> {
    if x.nrows() != y.len() {
        return Err(Error::Shape(format!("{} designs but {} responses", x.nrows(), y.len())));
    }
    if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("training data must be finite".into()));
    }
    if let Some(theta) = theta {
        if theta.len() != x.ncols() {
            return Err(Error::DimensionMismatch {
                expected: x.ncols(),
                got: theta.len(),
            });
        }
        if theta.iter().any(|t| !(*t > 0.0) || !t.is_finite()) {
            return Err(Error::InvalidArgument("theta must be positive and finite".into()));
        }
    }
    Ok(())
}

fn all_equal(y: &DVector<f64>) -> bool {
    y.iter().all(|v| *v == y[0])
}

/// Concentrated log-likelihood of θ for normalized training data (larger is better).
pub fn concentrated_log_likelihood(theta: &[f64], training: &SampleSet) -> Result<f64> {
    let y = training.responses()?;
    log_likelihood(theta, training.x(), y).map(|(l, _)| l)
}

/// Log-likelihood and the relative interpolation error of the predictor at θ.
fn log_likelihood(theta: &[f64], x: &DMatrix<f64>, y: &DVector<f64>) -> Result<(f64, f64)> {
    check_training(x, y, Some(theta))?;
    if x.nrows() < 2 {
        return Err(Error::InvalidArgument("likelihood needs at least two samples".into()));
    }
    if all_equal(y) {
        return Err(Error::DegenerateResponse);
    }
    let p = profile(x, y, theta)?;
    if !(p.sigma2 > 0.0) {
        return Err(Error::DegenerateResponse);
    }
    let range = y.max() - y.min();
    Ok((-0.5 * x.nrows() as f64 * p.sigma2.ln() - 0.5 * p.ln_det, p.interpolation_error / range))
}

/// A fitted, immutable Kriging predictor over normalized coordinates.
#[derive(Debug, Clone)]
pub struct KrigingModel {
    theta: Vec<f64>,
    mu_hat: f64,
    sigma2_hat: f64,
    chol: Cholesky<f64, Dyn>,
    alpha: DVector<f64>,
    psi_inv_one: DVector<f64>,
    one_psi_inv_one: f64,
    nugget: f64,
    log_likelihood: Option<f64>,
    x: DMatrix<f64>,
    y: DVector<f64>,
}

impl KrigingModel {
    /// Maximum-likelihood fit with the default search settings.
    pub fn fit(samples: &SampleSet, seed: u64) -> Result<Self> {
        Self::fit_with(samples, seed, KrigingConfig::default())
    }

    pub fn fit_with(samples: &SampleSet, seed: u64, config: KrigingConfig) -> Result<Self> {
        let x = samples.x();
        let y = samples.responses()?;
        check_training(x, y, None)?;
        let k = x.nrows();
        let m = x.ncols();
        if k < 2 {
            return Err(Error::InvalidArgument("Kriging fit needs at least two samples".into()));
        }
        if let Some((first, second)) = find_duplicate(x) {
            return Err(Error::DuplicatePoint { first, second });
        }
        if all_equal(y) {
            return Err(Error::DegenerateResponse);
        }

        let (lo, hi) = (THETA_MIN.log10(), THETA_MAX.log10());
        let mut starts = vec![vec![0.0; m]];
        if config.starts > 1 {
            let mut r = rng::stream(seed, Stream::KrigingStarts);
            let unit = lhs_unit(config.starts - 1, m, &mut r)?;
            starts.extend(unit.row_iter().map(|row| row.iter().map(|t| lo + t * (hi - lo)).collect()));
        }
        let lower = vec![lo; m];
        let upper = vec![hi; m];
        let opts = NelderMead {
            max_iter: config.max_iter,
            step: 1.0,
            f_tol: 1e-9,
            x_tol: 1e-6,
        };
        // θ whose predictor cannot reproduce the training data is infeasible (with headroom
        // for the rebuild below)
        let objective = |log_theta: &[f64]| {
            let theta: Vec<f64> = log_theta.iter().map(|v| 10f64.powf(*v)).collect();
            match log_likelihood(&theta, x, y) {
                Ok((l, err)) if err <= 0.1 * INTERPOLATION_TOLERANCE => -l,
                _ => f64::INFINITY,
            }
        };
        let results = par::map_indexed(starts.len(), |i| nelder_mead(objective, &starts[i], &lower, &upper, opts));
        let values: Vec<f64> = results
            .iter()
            .map(|r| if r.value.is_finite() { r.value } else { f64::NAN })
            .collect();
        let best = par::argmin_by_key(&values).ok_or(Error::IllConditioned {
            nugget: NUGGET_MAX,
        })?;
        let theta: Vec<f64> = results[best].x.iter().map(|v| 10f64.powf(*v).clamp(THETA_MIN, THETA_MAX)).collect();
        let mut model = Self::with_theta(samples, &theta)?;
        model.log_likelihood = Some(-results[best].value);
        Ok(model)
    }

    /// Build the predictor for fixed correlation weights (no likelihood search).
    ///
    /// Works down to a single training point, where the predictor is constant.
    pub fn with_theta(samples: &SampleSet, theta: &[f64]) -> Result<Self> {
        let x = samples.x();
        let y = samples.responses()?;
        check_training(x, y, Some(theta))?;
        if x.nrows() == 0 {
            return Err(Error::InvalidArgument("no training samples".into()));
        }
        let p = profile(x, y, theta)?;
        Ok(Self {
            theta: theta.to_vec(),
            mu_hat: p.mu,
            sigma2_hat: p.sigma2,
            chol: p.chol,
            alpha: p.alpha,
            psi_inv_one: p.psi_inv_one,
            one_psi_inv_one: p.one_psi_inv_one,
            nugget: p.nugget,
            log_likelihood: None,
            x: x.clone(),
            y: y.clone(),
        })
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn mu_hat(&self) -> f64 {
        self.mu_hat
    }

    pub fn sigma2_hat(&self) -> f64 {
        self.sigma2_hat
    }

    /// Absolute nugget added to the diagonal of Ψ.
    pub fn nugget(&self) -> f64 {
        self.nugget
    }

    /// Maximized log-likelihood (only for models built by `fit`).
    pub fn log_likelihood(&self) -> Option<f64> {
        self.log_likelihood
    }

    pub fn training_x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn training_y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn len(&self) -> usize {
        self.x.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.x.nrows() == 0
    }

    fn psi(&self, u: &[f64]) -> DVector<f64> {
        DVector::from_iterator(
            self.x.nrows(),
            self.x.row_iter().map(|row| correlation(row.iter().copied(), u.iter().copied(), &self.theta)),
        )
    }

    /// True when `u` lies outside `[-1, 1]^m`; predictions there are extrapolations.
    pub fn is_extrapolating(&self, u: &[f64]) -> bool {
        u.iter().any(|v| !(-1.0..=1.0).contains(v))
    }

    pub fn predict(&self, u: &[f64]) -> f64 {
        self.mu_hat + self.psi(u).dot(&self.alpha)
    }

    /// Mean squared error of the predictor, clamped at zero.
    pub fn variance(&self, u: &[f64]) -> f64 {
        let psi = self.psi(u);
        let r = self.chol.solve(&psi);
        let trend = 1.0 - r.sum();
        let s2 = self.sigma2_hat * (1.0 - psi.dot(&r) + trend * trend / self.one_psi_inv_one);
        s2.max(0.0)
    }

    /// Predictor and its standard deviation in one pass.
    pub fn predict_with_sd(&self, u: &[f64]) -> (f64, f64) {
        let psi = self.psi(u);
        let y = self.mu_hat + psi.dot(&self.alpha);
        let r = self.chol.solve(&psi);
        let trend = 1.0 - r.sum();
        let s2 = self.sigma2_hat * (1.0 - psi.dot(&r) + trend * trend / self.one_psi_inv_one);
        (y, s2.max(0.0).sqrt())
    }

    /// Closed-form gradient of the predictor.
    pub fn predictor_gradient(&self, u: &[f64]) -> Vec<f64> {
        let psi = self.psi(u);
        (0..u.len())
            .map(|l| {
                -2.0 * self.theta[l]
                    * self
                        .x
                        .column(l)
                        .iter()
                        .zip(psi.iter().zip(self.alpha.iter()))
                        .map(|(xl, (p, a))| a * p * (u[l] - xl))
                        .sum::<f64>()
            })
            .collect()
    }

    #[doc(hidden)]
    pub fn psi_inv_one(&self) -> &DVector<f64> {
        &self.psi_inv_one
    }
}

impl Surrogate for KrigingModel {
    fn dim(&self) -> usize {
        self.x.ncols()
    }

    fn predict(&self, u: &[f64]) -> f64 {
        KrigingModel::predict(self, u)
    }

    fn gradient(&self, u: &[f64]) -> Option<Vec<f64>> {
        Some(self.predictor_gradient(u))
    }
}

/// First pair of rows closer than 1e-12 in every coordinate.
pub fn find_duplicate(x: &DMatrix<f64>) -> Option<(usize, usize)> {
    let k = x.nrows();
    for i in 0..k {
        for j in (i + 1)..k {
            if x.row(i).iter().zip(x.row(j).iter()).all(|(a, b)| (a - b).abs() <= 1e-12) {
                return Some((i, j));
            }
        }
    }
    None
}
