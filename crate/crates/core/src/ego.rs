//! Efficient global optimization: sequential Kriging infill at the maximizer of
//! expected improvement.

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::design::{lhs_unit, DesignSpace, SampleSet};
use crate::error::{Error, Result};
use crate::kriging::KrigingModel;
use crate::optim::{nelder_mead, NelderMead};
use crate::par;
use crate::rng::{self, Stream};

/// Infill points closer than this (max-norm, normalized coordinates) to an existing design are jittered.
pub const DUPLICATE_TOLERANCE: f64 = 1e-8;
pub const JITTER_RADIUS: f64 = 1e-3;

/// Standard normal CDF, `Φ(z) = erfc(-z / √2) / 2`.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

pub fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// `EI = (y_min - ŷ) Φ(z) + s φ(z)`, `z = (y_min - ŷ) / s`; for `s = 0` the
/// improvement is deterministic.
pub fn expected_improvement(y_hat: f64, s: f64, y_min: f64) -> f64 {
    let diff = y_min - y_hat;
    if !(s > 0.0) {
        return diff.max(0.0);
    }
    let z = diff / s;
    (diff * normal_cdf(z) + s * normal_pdf(z)).max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EgoConfig {
    /// Size of the initial Latin hypercube.
    pub init_k: usize,
    /// Total number of objective evaluations, initial design included.
    pub budget: usize,
    pub seed: u64,
    #[serde(default = "default_restarts")]
    pub ei_restarts: usize,
}

fn default_restarts() -> usize {
    100
}

impl EgoConfig {
    pub fn new(init_k: usize, budget: usize, seed: u64) -> Self {
        Self {
            init_k,
            budget,
            seed,
            ei_restarts: default_restarts(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.init_k < 2 {
            return Err(Error::Config(format!("init_k must be at least 2, got {}", self.init_k)));
        }
        if self.budget < self.init_k {
            return Err(Error::Config(format!(
                "budget {} is smaller than the initial design {}",
                self.budget, self.init_k
            )));
        }
        if self.ei_restarts == 0 {
            return Err(Error::Config("ei_restarts must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    /// Raw coordinates.
    pub x: Vec<f64>,
    pub y: f64,
}

/// Why a run stopped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "kebab-case")]
pub enum Termination {
    BudgetExhausted,
    ObjectiveFailed { message: String },
    SurrogateFailed { message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EgoResult {
    pub history: Vec<Evaluation>,
    pub best_x: Vec<f64>,
    pub best_y: f64,
    pub termination: Termination,
}

impl EgoResult {
    /// Best value after each evaluation.
    pub fn running_best(&self) -> Vec<f64> {
        self.history
            .iter()
            .scan(f64::INFINITY, |best, e| {
                *best = best.min(e.y);
                Some(*best)
            })
            .collect()
    }
}

/// Maximizer of expected improvement over `[-1, 1]^m`.
///
/// `restarts` Latin-hypercube candidates are drawn from `rng` and each is
/// refined by bounded Nelder–Mead on `-EI`. When EI vanishes everywhere the
/// candidate with the largest predictive variance is returned instead.
pub fn maximize_ei(model: &KrigingModel, y_min: f64, restarts: usize, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    let m = model.training_x().ncols();
    let candidates = lhs_unit(restarts, m, rng)?.map(|t| 2.0 * t - 1.0);
    let ei = |u: &[f64]| {
        let (y, s) = model.predict_with_sd(u);
        expected_improvement(y, s, y_min)
    };
    let lower = vec![-1.0; m];
    let upper = vec![1.0; m];
    let opts = NelderMead {
        max_iter: 100,
        step: 0.1,
        f_tol: 1e-12,
        x_tol: 1e-8,
    };
    let refined = par::map_indexed(restarts, |i| {
        let x0: Vec<f64> = candidates.row(i).iter().copied().collect();
        nelder_mead(|u| -ei(u), &x0, &lower, &upper, opts)
    });
    let values: Vec<f64> = refined.iter().map(|r| r.value).collect();
    let best = par::argmin_by_key(&values).expect("at least one restart");
    if refined[best].value < 0.0 {
        return Ok(refined[best].x.clone());
    }
    let variances: Vec<f64> = (0..restarts)
        .map(|i| {
            let u: Vec<f64> = candidates.row(i).iter().copied().collect();
            -model.variance(&u)
        })
        .collect();
    let widest = par::argmin_by_key(&variances).expect("at least one restart");
    Ok(candidates.row(widest).iter().copied().collect())
}

fn is_duplicate(x: &DMatrix<f64>, rows: usize, u: &[f64]) -> bool {
    (0..rows).any(|r| x.row(r).iter().zip(u).all(|(a, b)| (a - b).abs() <= DUPLICATE_TOLERANCE))
}

fn jitter(u: &mut [f64], rng: &mut ChaCha8Rng) {
    for v in u.iter_mut() {
        *v = (*v + rng.random_range(-JITTER_RADIUS..=JITTER_RADIUS)).clamp(-1.0, 1.0);
    }
}

/// One EGO run on `objective` (raw coordinates).
///
/// Evaluates a Latin hypercube of `init_k` points, then repeatedly fits Kriging
/// to everything seen so far and evaluates the EI maximizer until the budget is
/// spent. An objective failure (error or non-finite value) or a Kriging failure
/// stops the run early; the history gathered so far is kept.
pub fn ego_run<F>(objective: F, space: &DesignSpace, config: &EgoConfig) -> Result<EgoResult>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    config.validate()?;
    let m = space.dim();
    let initial = space.lhs_sample(config.init_k, config.seed)?;
    let mut infill_rng = rng::stream(config.seed, Stream::InfillStarts);
    let mut jitter_rng = rng::stream(config.seed, Stream::Jitter);

    let mut history: Vec<Evaluation> = Vec::with_capacity(config.budget);
    let mut normalized = DMatrix::zeros(config.budget, m);
    let mut termination = Termination::BudgetExhausted;

    let evaluate = |x: Vec<f64>, history: &mut Vec<Evaluation>| -> std::result::Result<(), String> {
        match objective(&x) {
            Ok(y) if y.is_finite() => {
                history.push(Evaluation { x, y });
                Ok(())
            }
            Ok(y) => Err(format!("objective returned {y}")),
            Err(e) => Err(e.to_string()),
        }
    };

    for r in 0..config.init_k {
        let x = initial.point(r);
        let u = space.normalize(&x)?;
        if let Err(message) = evaluate(x, &mut history) {
            termination = Termination::ObjectiveFailed { message };
            break;
        }
        normalized.row_mut(r).copy_from_slice(&u);
    }

    if termination == Termination::BudgetExhausted {
        while history.len() < config.budget {
            let n = history.len();
            let training = SampleSet::new(
                normalized.rows(0, n).into_owned(),
                Some(history.iter().map(|e| e.y).collect::<Vec<_>>().into()),
            )?;
            let model = match KrigingModel::fit(&training, config.seed) {
                Ok(model) => model,
                Err(e) => {
                    termination = Termination::SurrogateFailed { message: e.to_string() };
                    break;
                }
            };
            let y_min = history.iter().map(|e| e.y).fold(f64::INFINITY, f64::min);
            let mut u = maximize_ei(&model, y_min, config.ei_restarts, &mut infill_rng)?;
            while is_duplicate(&normalized, n, &u) {
                log::debug!("EGO: infill duplicates an existing design, jittering");
                jitter(&mut u, &mut jitter_rng);
            }
            let x = space.denormalize(&u)?;
            if let Err(message) = evaluate(x, &mut history) {
                termination = Termination::ObjectiveFailed { message };
                break;
            }
            normalized.row_mut(n).copy_from_slice(&u);
            log::debug!("EGO: evaluation {} of {}, y = {}", n + 1, config.budget, history[n].y);
        }
    }

    let best = history
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.y.total_cmp(&b.1.y).then(a.0.cmp(&b.0)))
        .map(|(i, _)| i);
    let (best_x, best_y) = match best {
        Some(i) => (history[i].x.clone(), history[i].y),
        None => (Vec::new(), f64::NAN),
    };
    Ok(EgoResult {
        history,
        best_x,
        best_y,
        termination,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functions::TestFunction;

    #[test]
    fn expected_improvement_values() {
        assert_eq!(expected_improvement(1.0, 0.0, 3.0), 2.0);
        assert_eq!(expected_improvement(3.0, 0.0, 1.0), 0.0);
        assert!((expected_improvement(2.0, 1.0, 2.0) - 0.398_942_280_401_432_7).abs() < 1e-12);
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-16);
        assert!((normal_cdf(1.96) - 0.975_002_104_851_780).abs() < 1e-12);
        assert!((normal_cdf(-1.0) - 0.158_655_253_931_457).abs() < 1e-12);
    }

    #[test]
    fn expected_improvement_properties() {
        let mut prev = 0.0;
        for i in 1..200 {
            let s = i as f64 * 0.05;
            let e = expected_improvement(0.0, s, 0.0);
            assert!(e > prev);
            prev = e;
        }
        for y_hat in [-3.0, -0.1, 0.0, 0.4, 5.0] {
            for s in [0.0, 1e-6, 0.3, 2.0] {
                assert!(expected_improvement(y_hat, s, 0.0) >= 0.0);
            }
            assert!(expected_improvement(y_hat.abs(), 1e-9, 0.0) < 1e-6);
        }
    }

    fn two_point_model() -> KrigingModel {
        let s = SampleSet::from_rows(&[vec![-0.6], vec![0.5]], Some(vec![1.0, 0.2])).unwrap();
        KrigingModel::with_theta(&s, &[2.0]).unwrap()
    }

    #[test]
    fn infill_matches_a_dense_grid_argmax() {
        let model = two_point_model();
        let y_min = 0.2;
        let grid = (0..10_000).map(|i| -1.0 + 2.0 * i as f64 / 9_999.0);
        let (mut best_u, mut best_ei) = (0.0, f64::NEG_INFINITY);
        for u in grid {
            let (y, s) = model.predict_with_sd(&[u]);
            let e = expected_improvement(y, s, y_min);
            if e > best_ei {
                best_ei = e;
                best_u = u;
            }
        }
        let mut r = rng::stream(1, Stream::InfillStarts);
        let u = maximize_ei(&model, y_min, 20, &mut r).unwrap();
        assert!((u[0] - best_u).abs() <= 1e-3, "{} vs grid {best_u}", u[0]);
    }

    #[test]
    fn infill_beats_every_raw_candidate() {
        let f = TestFunction::Hartman6;
        let space = f.space();
        let d = space.lhs_sample(20, 3).unwrap();
        let y: Vec<f64> = (0..20).map(|r| f.evaluate(0, &d.point(r)).unwrap()).collect();
        let y_min = y.iter().copied().fold(f64::INFINITY, f64::min);
        let s = space.normalize_samples(&d).unwrap().with_responses(y).unwrap();
        let model = KrigingModel::fit(&s, 3).unwrap();
        let mut r = rng::stream(9, Stream::InfillStarts);
        let u = maximize_ei(&model, y_min, 30, &mut r).unwrap();
        assert!(u.iter().all(|v| (-1.0..=1.0).contains(v)));
        let ei = |u: &[f64]| {
            let (y, s) = model.predict_with_sd(u);
            expected_improvement(y, s, y_min)
        };
        let mut r = rng::stream(9, Stream::InfillStarts);
        let raw = lhs_unit(30, 6, &mut r).unwrap().map(|t| 2.0 * t - 1.0);
        for i in 0..30 {
            let c: Vec<f64> = raw.row(i).iter().copied().collect();
            assert!(ei(&u) >= ei(&c));
        }
    }

    #[test]
    fn budget_equal_to_initial_design_is_pure_lhs() {
        let f = TestFunction::Hartman6;
        let config = EgoConfig::new(10, 10, 4);
        let result = ego_run(|x| f.evaluate(0, x), &f.space(), &config).unwrap();
        assert_eq!(result.history.len(), 10);
        let lhs = f.space().lhs_sample(10, 4).unwrap();
        let min = (0..10).map(|r| f.evaluate(0, &lhs.point(r)).unwrap()).fold(f64::INFINITY, f64::min);
        assert_eq!(result.best_y, min);
        assert_eq!(result.termination, Termination::BudgetExhausted);
    }

    #[test]
    fn short_run_invariants() {
        let f = TestFunction::Zakharov { dim: 2 };
        let config = EgoConfig {
            ei_restarts: 20,
            ..EgoConfig::new(6, 12, 11)
        };
        let a = ego_run(|x| f.evaluate(0, x), &f.space(), &config).unwrap();
        let b = ego_run(|x| f.evaluate(0, x), &f.space(), &config).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.history.len(), 12);
        let trace = a.running_best();
        assert!(trace.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(*trace.last().unwrap(), a.best_y);
        assert!(a.history.iter().all(|e| f.space().contains(&e.x)));
    }

    #[test]
    fn objective_failure_keeps_partial_history() {
        let f = TestFunction::Zakharov { dim: 2 };
        let calls = std::cell::Cell::new(0);
        let objective = |x: &[f64]| {
            calls.set(calls.get() + 1);
            if calls.get() > 8 {
                Err(Error::Evaluation(x.to_vec()))
            } else {
                f.evaluate(0, x)
            }
        };
        let config = EgoConfig {
            ei_restarts: 10,
            ..EgoConfig::new(5, 12, 2)
        };
        let result = ego_run(objective, &f.space(), &config).unwrap();
        assert_eq!(result.history.len(), 8);
        assert!(matches!(result.termination, Termination::ObjectiveFailed { .. }));
        assert!(result.best_y.is_finite());
    }

    #[test]
    fn config_validation() {
        assert!(EgoConfig::new(1, 5, 0).validate().is_err());
        assert!(EgoConfig::new(5, 4, 0).validate().is_err());
        assert!(EgoConfig::new(5, 5, 0).validate().is_ok());
    }
}
