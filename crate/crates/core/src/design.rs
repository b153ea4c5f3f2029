//! Bounded design spaces, the `[-1, 1]^m` normalization, and space-filling samples.
//!
//! Everything downstream of ingestion (surrogates, gradients, eigenanalysis)
//! works in normalized coordinates `u_i = 2 (x_i - lower_i) / (upper_i - lower_i) - 1`.
//! Raw coordinates only appear at I/O boundaries.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, Stream};

/// Relative slack (fraction of the interval width) accepted on bound checks.
pub const BOUND_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignSpace {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl DesignSpace {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() {
            return Err(Error::InvalidArgument("design space needs at least one dimension".into()));
        }
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                expected: lower.len(),
                got: upper.len(),
            });
        }
        for (i, (&lo, &hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidArgument(format!(
                    "dimension {i}: need finite lower < upper, got [{lo}, {hi}]"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    /// The same interval `[lower, upper]` in every one of `m` dimensions.
    pub fn hypercube(m: usize, lower: f64, upper: f64) -> Result<Self> {
        Self::new(vec![lower; m], vec![upper; m])
    }

    /// The canonical space `[-1, 1]^m`.
    pub fn unit(m: usize) -> Self {
        Self::hypercube(m, -1.0, 1.0).expect("m >= 1")
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn width(&self, i: usize) -> f64 {
        self.upper[i] - self.lower[i]
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: len,
            });
        }
        Ok(())
    }

    /// First coordinate that lies outside the bounds (beyond the tolerance).
    pub fn violation(&self, x: &[f64]) -> Option<Error> {
        x.iter().enumerate().find_map(|(i, &v)| {
            let slack = BOUND_TOLERANCE * self.width(i);
            let inside = v >= self.lower[i] - slack && v <= self.upper[i] + slack;
            (!inside).then(|| Error::BoundsViolation {
                index: i,
                value: v,
                lower: self.lower[i],
                upper: self.upper[i],
            })
        })
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && self.violation(x).is_none()
    }

    pub fn normalize(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_len(x.len())?;
        if let Some(e) = self.violation(x) {
            return Err(e);
        }
        Ok(x.iter()
            .enumerate()
            .map(|(i, &v)| (2.0 * (v - self.lower[i]) / self.width(i) - 1.0).clamp(-1.0, 1.0))
            .collect())
    }

    pub fn denormalize(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.check_len(u.len())?;
        for (i, &v) in u.iter().enumerate() {
            if !(-1.0 - BOUND_TOLERANCE..=1.0 + BOUND_TOLERANCE).contains(&v) {
                return Err(Error::BoundsViolation {
                    index: i,
                    value: v,
                    lower: -1.0,
                    upper: 1.0,
                });
            }
        }
        Ok(u.iter()
            .enumerate()
            .map(|(i, &v)| {
                let v = v.clamp(-1.0, 1.0);
                // endpoints map exactly so that bounds survive the round trip
                if v == -1.0 {
                    self.lower[i]
                } else if v == 1.0 {
                    self.upper[i]
                } else {
                    self.lower[i] + (v + 1.0) * 0.5 * self.width(i)
                }
            })
            .collect())
    }

    /// Chain rule for a raw-coordinate gradient: `dF/du_i = dF/dx_i * (upper_i - lower_i) / 2`.
    pub fn gradient_to_normalized(&self, raw_gradient: &[f64]) -> Vec<f64> {
        raw_gradient
            .iter()
            .enumerate()
            .map(|(i, g)| g * 0.5 * self.width(i))
            .collect()
    }

    /// Map every row of a raw sample set into `[-1, 1]^m`.
    pub fn normalize_samples(&self, samples: &SampleSet) -> Result<SampleSet> {
        self.map_rows(samples, |p| self.normalize(p))
    }

    pub fn denormalize_samples(&self, samples: &SampleSet) -> Result<SampleSet> {
        self.map_rows(samples, |p| self.denormalize(p))
    }

    fn map_rows<F>(&self, samples: &SampleSet, f: F) -> Result<SampleSet>
    where
        F: Fn(&[f64]) -> Result<Vec<f64>>,
    {
        self.check_len(samples.dim())?;
        let mut x = DMatrix::zeros(samples.len(), self.dim());
        for r in 0..samples.len() {
            let mapped = f(&samples.point(r))?;
            for (c, v) in mapped.into_iter().enumerate() {
                x[(r, c)] = v;
            }
        }
        SampleSet::new(x, samples.y().cloned())
    }

    /// Plain Latin hypercube: one point per stratum `[j/k, (j+1)/k)` in every dimension.
    pub fn lhs_sample(&self, k: usize, seed: u64) -> Result<SampleSet> {
        let mut rng = rng::stream(seed, Stream::Sampling);
        let unit = lhs_unit(k, self.dim(), &mut rng)?;
        Ok(SampleSet::design(self.from_unit_interval(unit)))
    }

    /// `count` i.i.d. uniform points inside the bounds.
    pub fn uniform_sample(&self, count: usize, seed: u64) -> Result<SampleSet> {
        if count == 0 {
            return Err(Error::InvalidArgument("uniform sample needs at least one point".into()));
        }
        let mut rng = rng::stream(seed, Stream::MonteCarlo);
        let unit = DMatrix::from_fn(count, self.dim(), |_, _| rng.random::<f64>());
        Ok(SampleSet::design(self.from_unit_interval(unit)))
    }

    fn from_unit_interval(&self, mut unit: DMatrix<f64>) -> DMatrix<f64> {
        for c in 0..self.dim() {
            let (lo, w) = (self.lower[c], self.width(c));
            unit.column_mut(c).apply(|v| *v = lo + *v * w);
        }
        unit
    }
}

/// Latin hypercube in `[0, 1)^m` drawn from `rng`.
pub fn lhs_unit<R: Rng>(k: usize, m: usize, rng: &mut R) -> Result<DMatrix<f64>> {
    if k == 0 {
        return Err(Error::InvalidArgument("LHS needs at least one point".into()));
    }
    let mut out = DMatrix::zeros(k, m);
    let mut perm: Vec<usize> = (0..k).collect();
    for c in 0..m {
        perm.shuffle(rng);
        for (r, &stratum) in perm.iter().enumerate() {
            let jitter: f64 = rng.random();
            let v = (stratum as f64 + jitter) / k as f64;
            // keep rounding from pushing the point into the next stratum
            let hi = (stratum + 1) as f64 / k as f64;
            out[(r, c)] = if v >= hi { hi.next_down() } else { v };
        }
    }
    Ok(out)
}

/// Design matrix (one row per point) with optional scalar responses.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    x: DMatrix<f64>,
    y: Option<DVector<f64>>,
}

impl SampleSet {
    pub fn new(x: DMatrix<f64>, y: Option<DVector<f64>>) -> Result<Self> {
        if let Some(y) = &y {
            if y.len() != x.nrows() {
                return Err(Error::Shape(format!(
                    "{} design rows but {} responses",
                    x.nrows(),
                    y.len()
                )));
            }
        }
        Ok(Self { x, y })
    }

    /// Designs without responses.
    pub fn design(x: DMatrix<f64>) -> Self {
        Self { x, y: None }
    }

    pub fn from_rows(rows: &[Vec<f64>], y: Option<Vec<f64>>) -> Result<Self> {
        let m = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != m) {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: bad.len(),
            });
        }
        let x = DMatrix::from_fn(rows.len(), m, |r, c| rows[r][c]);
        Self::new(x, y.map(DVector::from_vec))
    }

    pub fn len(&self) -> usize {
        self.x.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.x.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.x.ncols()
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> Option<&DVector<f64>> {
        self.y.as_ref()
    }

    pub fn responses(&self) -> Result<&DVector<f64>> {
        self.y
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("sample set has no responses".into()))
    }

    pub fn point(&self, i: usize) -> Vec<f64> {
        self.x.row(i).iter().copied().collect()
    }

    pub fn with_responses(self, y: Vec<f64>) -> Result<Self> {
        Self::new(self.x, Some(DVector::from_vec(y)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rejects_degenerate_bounds() {
        assert!(DesignSpace::new(vec![0.0], vec![0.0]).is_err());
        assert!(DesignSpace::new(vec![1.0], vec![0.0]).is_err());
        assert!(DesignSpace::new(vec![], vec![]).is_err());
        assert!(DesignSpace::new(vec![0.0, 0.0], vec![1.0]).is_err());
    }

    #[test]
    fn normalize_examples() {
        let s = DesignSpace::hypercube(1, -5.0, 10.0).unwrap();
        assert_eq!(s.normalize(&[-5.0]).unwrap(), vec![-1.0]);
        assert_eq!(s.normalize(&[10.0]).unwrap(), vec![1.0]);
        assert_eq!(s.normalize(&[2.5]).unwrap(), vec![0.0]);
        assert!(matches!(s.normalize(&[10.5]), Err(Error::BoundsViolation { .. })));
    }

    #[test]
    fn denormalize_examples() {
        let s = DesignSpace::hypercube(1, 0.0, 1.0).unwrap();
        assert_eq!(s.denormalize(&[0.0]).unwrap(), vec![0.5]);
        let s = DesignSpace::hypercube(1, 1.0, 3.0).unwrap();
        assert_eq!(s.denormalize(&[-1.0]).unwrap(), vec![1.0]);
        assert!(s.denormalize(&[1.01]).is_err());
    }

    #[test]
    fn lhs_single_point_is_inside() {
        let s = DesignSpace::new(vec![-5.0, 0.0], vec![10.0, 1.0]).unwrap();
        let d = s.lhs_sample(1, 3).unwrap();
        assert_eq!(d.len(), 1);
        assert!(s.contains(&d.point(0)));
    }

    fn strata_are_complete(space: &DesignSpace, d: &SampleSet) -> bool {
        let k = d.len();
        (0..space.dim()).all(|c| {
            let mut idx: Vec<usize> = (0..k)
                .map(|r| {
                    let t = (d.x()[(r, c)] - space.lower()[c]) / space.width(c);
                    ((t * k as f64).floor() as usize).min(k - 1)
                })
                .collect();
            idx.sort_unstable();
            idx == (0..k).collect::<Vec<_>>()
        })
    }

    #[test]
    fn lhs_stratification() {
        let s = DesignSpace::new(vec![-5.0, 0.0, 2.0], vec![10.0, 1.0, 3.0]).unwrap();
        for k in [1, 5, 10, 100] {
            let d = s.lhs_sample(k, 11).unwrap();
            assert_eq!(d.len(), k);
            assert!(strata_are_complete(&s, &d), "k = {k}");
        }
        assert!(s.lhs_sample(0, 1).is_err());
    }

    #[test]
    fn sampling_is_deterministic() {
        let s = DesignSpace::hypercube(2, -1.0, 1.0).unwrap();
        assert_eq!(s.lhs_sample(10, 42).unwrap(), s.lhs_sample(10, 42).unwrap());
        assert_ne!(s.lhs_sample(10, 42).unwrap(), s.lhs_sample(10, 43).unwrap());
        assert_eq!(s.uniform_sample(10, 42).unwrap(), s.uniform_sample(10, 42).unwrap());
    }

    #[test]
    fn uniform_sample_mean_and_bounds() {
        let s = DesignSpace::hypercube(3, -1.0, 1.0).unwrap();
        let d = s.uniform_sample(1000, 5).unwrap();
        for c in 0..3 {
            // sd of the mean is sqrt(1/3)/sqrt(1000) ~ 0.018; 0.1 is well past 3 sigma
            assert!(d.x().column(c).mean().abs() < 0.1);
        }
        assert!((0..d.len()).all(|r| s.contains(&d.point(r))));
        assert!(s.uniform_sample(0, 1).is_err());
    }

    #[test]
    fn gradient_chain_rule_scales_by_half_width() {
        let s = DesignSpace::new(vec![0.0, -5.0], vec![2.0, 10.0]).unwrap();
        assert_eq!(s.gradient_to_normalized(&[1.0, 2.0]), vec![1.0, 15.0]);
    }

    #[test]
    fn response_length_is_checked() {
        let x = DMatrix::zeros(3, 2);
        assert!(SampleSet::new(x, Some(DVector::zeros(2))).is_err());
    }

    proptest! {
        #[test]
        fn normalize_round_trip(
            lo in -1e3..1e3f64,
            w in 1e-3..1e4f64,
            t in prop::collection::vec(0.0..=1.0f64, 1..8),
        ) {
            let m = t.len();
            let s = DesignSpace::hypercube(m, lo, lo + w).unwrap();
            let x: Vec<f64> = t.iter().map(|t| lo + t * w).collect();
            let back = s.denormalize(&s.normalize(&x).unwrap()).unwrap();
            for (a, b) in x.iter().zip(&back) {
                let scale = a.abs().max(lo.abs()).max(w);
                prop_assert!((a - b).abs() <= 1e-14 * scale, "{a} vs {b}");
            }
        }

        #[test]
        fn lhs_stratified_for_any_seed(seed in any::<u64>(), k in 1usize..60, m in 1usize..5) {
            let s = DesignSpace::hypercube(m, -2.0, 7.0).unwrap();
            let d = s.lhs_sample(k, seed).unwrap();
            prop_assert!(strata_are_complete(&s, &d));
        }
    }
}
