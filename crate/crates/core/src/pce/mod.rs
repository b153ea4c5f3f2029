//! Sparse polynomial chaos expansion on orthonormal Legendre polynomials.
//!
//! `f̂(u) = Σ_t c_t Π_j φ_{d_tj}(u_j)` over a sparse set of multi-indices. The
//! terms are chosen by the hybrid LARS scheme: for every maximum degree in the
//! configured range, LARS orders the candidate terms, ordinary least squares
//! is refitted on each prefix of that order (always with the constant term),
//! and the prefix with the smallest corrected leave-one-out error wins.

pub mod basis;
pub mod lars;
pub mod legendre;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::design::SampleSet;
use crate::error::{Error, Result};
use crate::par;
use crate::surrogate::Surrogate;

pub use basis::{candidate_basis, MultiIndex};
pub use lars::lars_select;
pub use legendre::legendre_eval;

/// Prefixes whose triangular factor has a Frobenius condition estimate above this are skipped.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PceConfig {
    pub p_min: usize,
    pub p_max: usize,
    /// Hyperbolic truncation exponent in `(0, 1]`.
    pub q: f64,
}

impl Default for PceConfig {
    fn default() -> Self {
        Self {
            p_min: 1,
            p_max: 5,
            q: 0.75,
        }
    }
}

/// One evaluated (degree, prefix) candidate of the model search.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateScore {
    pub p: usize,
    pub terms: usize,
    pub loo_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PceModel {
    dim: usize,
    basis: Vec<MultiIndex>,
    coeffs: Vec<f64>,
    loo_error: f64,
    p_selected: usize,
}

impl PceModel {
    /// Assemble a model from explicit terms (e.g. to evaluate a known expansion).
    pub fn new(dim: usize, basis: Vec<MultiIndex>, coeffs: Vec<f64>) -> Result<Self> {
        if basis.len() != coeffs.len() {
            return Err(Error::Shape(format!("{} terms but {} coefficients", basis.len(), coeffs.len())));
        }
        if let Some(t) = basis.iter().find(|t| t.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: t.dim(),
            });
        }
        let p_selected = basis.iter().map(|t| t.total_degree() as usize).max().unwrap_or(0);
        Ok(Self {
            dim,
            basis,
            coeffs,
            loo_error: f64::NAN,
            p_selected,
        })
    }

    /// Hybrid-LARS fit on normalized samples (`u ∈ [-1, 1]^m`).
    pub fn fit(samples: &SampleSet, config: &PceConfig) -> Result<Self> {
        Ok(fit_with_trace(samples, config)?.0)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn basis(&self) -> &[MultiIndex] {
        &self.basis
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Corrected leave-one-out error relative to the response variance.
    pub fn loo_error(&self) -> f64 {
        self.loo_error
    }

    pub fn p_selected(&self) -> usize {
        self.p_selected
    }

    fn max_degree(&self) -> usize {
        self.basis.iter().map(|t| t.max_degree() as usize).max().unwrap_or(0)
    }

    fn tables(&self, u: &[f64], with_derivs: bool) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let n = self.max_degree() + 1;
        let mut values = vec![vec![0.0; n]; self.dim];
        let mut derivs = vec![vec![0.0; if with_derivs { n } else { 0 }]; self.dim];
        for j in 0..self.dim {
            if with_derivs {
                legendre::fill_values_and_derivatives(&mut values[j], &mut derivs[j], u[j]);
            } else {
                legendre::fill_values(&mut values[j], u[j]);
            }
        }
        (values, derivs)
    }

    pub fn predict(&self, u: &[f64]) -> f64 {
        assert_eq!(u.len(), self.dim, "point dimension");
        let (values, _) = self.tables(u, false);
        self.basis
            .iter()
            .zip(&self.coeffs)
            .map(|(t, c)| {
                c * t
                    .degrees()
                    .iter()
                    .enumerate()
                    .filter(|(_, d)| **d > 0)
                    .map(|(j, &d)| values[j][d as usize])
                    .product::<f64>()
            })
            .sum()
    }

    /// Exact gradient with respect to the normalized coordinates.
    pub fn gradient_at(&self, u: &[f64]) -> Vec<f64> {
        assert_eq!(u.len(), self.dim, "point dimension");
        let (values, derivs) = self.tables(u, true);
        let mut grad = vec![0.0; self.dim];
        for (t, c) in self.basis.iter().zip(&self.coeffs) {
            let degrees = t.degrees();
            for (l, &dl) in degrees.iter().enumerate() {
                if dl == 0 {
                    continue;
                }
                let mut term = c * derivs[l][dl as usize];
                for (j, &d) in degrees.iter().enumerate() {
                    if j != l && d > 0 {
                        term *= values[j][d as usize];
                    }
                }
                grad[l] += term;
            }
        }
        grad
    }
}

impl Surrogate for PceModel {
    fn dim(&self) -> usize {
        self.dim
    }

    fn predict(&self, u: &[f64]) -> f64 {
        PceModel::predict(self, u)
    }

    fn gradient(&self, u: &[f64]) -> Option<Vec<f64>> {
        Some(self.gradient_at(u))
    }
}

/// `Ψ[r, t] = Π_j φ_{d_tj}(x_rj)`.
pub fn design_matrix(x: &DMatrix<f64>, basis: &[MultiIndex]) -> DMatrix<f64> {
    let k = x.nrows();
    let m = x.ncols();
    let n = basis.iter().map(|t| t.max_degree() as usize).max().unwrap_or(0) + 1;
    let mut out = DMatrix::zeros(k, basis.len());
    let mut table = vec![vec![0.0; n]; m];
    for r in 0..k {
        for (j, row) in table.iter_mut().enumerate() {
            legendre::fill_values(row, x[(r, j)]);
        }
        for (c, t) in basis.iter().enumerate() {
            out[(r, c)] = t
                .degrees()
                .iter()
                .enumerate()
                .filter(|(_, d)| **d > 0)
                .map(|(j, &d)| table[j][d as usize])
                .product();
        }
    }
    out
}

/// Incremental QR (modified Gram–Schmidt with one reorthogonalization pass) that
/// tracks what the leave-one-out error of every prefix needs.
struct IncrementalLeastSquares<'a> {
    y: &'a DVector<f64>,
    q: Vec<DVector<f64>>,
    /// Upper-triangular R and its inverse, stored column by column.
    r: Vec<Vec<f64>>,
    r_inv: Vec<Vec<f64>>,
    r_norm2: f64,
    r_inv_norm2: f64,
    qty: Vec<f64>,
    fitted: DVector<f64>,
    leverage: DVector<f64>,
}

impl<'a> IncrementalLeastSquares<'a> {
    fn new(y: &'a DVector<f64>) -> Self {
        let k = y.len();
        Self {
            y,
            q: Vec::new(),
            r: Vec::new(),
            r_inv: Vec::new(),
            r_norm2: 0.0,
            r_inv_norm2: 0.0,
            qty: Vec::new(),
            fitted: DVector::zeros(k),
            leverage: DVector::zeros(k),
        }
    }

    fn len(&self) -> usize {
        self.q.len()
    }

    /// Append a column; returns false (leaving the state untouched) if it is
    /// numerically dependent on the current columns or would push the
    /// condition estimate past `MAX_CONDITION`.
    fn push(&mut self, a: &DVector<f64>) -> bool {
        let n = self.q.len();
        let mut v = a.clone();
        let mut coeffs = vec![0.0; n];
        for _ in 0..2 {
            for (i, qi) in self.q.iter().enumerate() {
                let d = qi.dot(&v);
                coeffs[i] += d;
                v.axpy(-d, qi, 1.0);
            }
        }
        let rho = v.norm();
        if !(rho > 1e-12 * a.norm()) {
            return false;
        }
        // R = [[R0, r], [0, ρ]]  =>  R⁻¹ = [[R0⁻¹, -R0⁻¹ r / ρ], [0, 1/ρ]]
        let mut new_inv = vec![0.0; n + 1];
        for (i, slot) in new_inv.iter_mut().enumerate().take(n) {
            // (R0⁻¹ r)_i = Σ_{j ≥ i} R0⁻¹[i, j] r_j, and R0⁻¹ is stored by column
            let s: f64 = (i..n).map(|j| self.r_inv[j][i] * coeffs[j]).sum();
            *slot = -s / rho;
        }
        new_inv[n] = 1.0 / rho;
        let r_norm2 = self.r_norm2 + coeffs.iter().map(|c| c * c).sum::<f64>() + rho * rho;
        let r_inv_norm2 = self.r_inv_norm2 + new_inv.iter().map(|c| c * c).sum::<f64>();
        if (r_norm2 * r_inv_norm2).sqrt() > MAX_CONDITION {
            return false;
        }
        let q_new = v / rho;
        let z = q_new.dot(self.y);
        self.fitted.axpy(z, &q_new, 1.0);
        self.leverage.zip_apply(&q_new, |h, qv| *h += qv * qv);
        coeffs.push(rho);
        self.r.push(coeffs);
        self.r_inv.push(new_inv);
        self.r_norm2 = r_norm2;
        self.r_inv_norm2 = r_inv_norm2;
        self.qty.push(z);
        self.q.push(q_new);
        true
    }

    /// Corrected leave-one-out error relative to `variance`:
    ///
    /// ```text
    /// Err_LOO = (1/k) Σ ((y_i - ŷ_i) / (1 - h_i))² / Var(y)
    /// T(P, k) = k / (k - P) · (1 + tr((ΨᵀΨ / k)⁻¹) / k),   tr((ΨᵀΨ / k)⁻¹) = k ‖R⁻¹‖²_F
    /// ```
    ///
    /// `h_i` are hat-matrix diagonals. `None` when the prefix is not
    /// overdetermined or some sample has leverage 1.
    fn corrected_loo(&self, variance: f64) -> Option<f64> {
        let k = self.y.len();
        let p = self.len();
        if p >= k {
            return None;
        }
        let mut acc = 0.0;
        for i in 0..k {
            let denom = 1.0 - self.leverage[i];
            if denom <= 1e-10 {
                return None;
            }
            acc += ((self.y[i] - self.fitted[i]) / denom).powi(2);
        }
        let loo = acc / k as f64 / variance;
        let correction = k as f64 / (k - p) as f64 * (1.0 + self.r_inv_norm2);
        Some(loo * correction)
    }

    /// Least-squares coefficients `R⁻¹ Qᵀy`.
    fn coefficients(&self) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| (i..n).map(|j| self.r_inv[j][i] * self.qty[j]).sum())
            .collect()
    }
}

struct DegreeResult {
    model: PceModel,
    trace: Vec<CandidateScore>,
}

fn fit_degree(x: &DMatrix<f64>, y: &DVector<f64>, variance: f64, p: usize, q: f64) -> Result<Option<DegreeResult>> {
    let m = x.ncols();
    let basis = candidate_basis(m, p, q)?;
    let psi = design_matrix(x, &basis);
    let constant = basis
        .iter()
        .position(MultiIndex::is_constant)
        .expect("candidate sets contain the constant term");
    let others: Vec<usize> = (0..basis.len()).filter(|&c| c != constant).collect();
    let order: Vec<usize> = if others.is_empty() {
        Vec::new()
    } else {
        let sub = psi.select_columns(&others);
        lars_select(&sub, y)?.into_iter().map(|c| others[c]).collect()
    };

    let mut ls = IncrementalLeastSquares::new(y);
    let mut kept: Vec<usize> = Vec::new();
    let mut trace = Vec::new();
    let mut best: Option<(f64, Vec<usize>, Vec<f64>)> = None;
    for col in std::iter::once(constant).chain(order) {
        if !ls.push(&psi.column(col).into_owned()) {
            log::debug!("PCE p={p}: term {} skipped (ill-conditioned prefix)", basis[col]);
            continue;
        }
        kept.push(col);
        let Some(loo) = ls.corrected_loo(variance) else {
            continue;
        };
        trace.push(CandidateScore {
            p,
            terms: kept.len(),
            loo_error: loo,
        });
        if best.as_ref().map_or(true, |(b, _, _)| loo < *b) {
            best = Some((loo, kept.clone(), ls.coefficients()));
        }
    }
    Ok(best.map(|(loo, cols, coeffs)| DegreeResult {
        model: PceModel {
            dim: m,
            basis: cols.iter().map(|&c| basis[c].clone()).collect(),
            coeffs,
            loo_error: loo,
            p_selected: p,
        },
        trace,
    }))
}

/// Fit and return every evaluated candidate score alongside the chosen model.
pub fn fit_with_trace(samples: &SampleSet, config: &PceConfig) -> Result<(PceModel, Vec<CandidateScore>)> {
    let x = samples.x();
    let y = samples.responses()?;
    let (k, m) = (x.nrows(), x.ncols());
    if m == 0 {
        return Err(Error::InvalidArgument("samples have no coordinates".into()));
    }
    if k < m + 1 {
        return Err(Error::InvalidArgument(format!("PCE fit needs at least {} samples, got {k}", m + 1)));
    }
    if config.p_min < 1 || config.p_max < config.p_min {
        return Err(Error::InvalidArgument(format!(
            "degree range {}..={} is empty or starts below 1",
            config.p_min, config.p_max
        )));
    }
    if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("training data must be finite".into()));
    }
    let variance = y.variance() * k as f64 / (k - 1) as f64;
    if !(variance > 0.0) {
        return Err(Error::DegenerateResponse);
    }

    let degrees: Vec<usize> = (config.p_min..=config.p_max).collect();
    let results = par::map_indexed(degrees.len(), |i| fit_degree(x, y, variance, degrees[i], config.q));
    let mut trace = Vec::new();
    let mut best: Option<PceModel> = None;
    for r in results {
        let Some(r) = r? else { continue };
        trace.extend(r.trace);
        // strict comparison: ties keep the lower degree
        if best.as_ref().map_or(true, |b| r.model.loo_error < b.loo_error) {
            best = Some(r.model);
        }
    }
    let model = best.ok_or_else(|| Error::FitFailure("no well-posed least-squares prefix".into()))?;
    Ok((model, trace))
}
