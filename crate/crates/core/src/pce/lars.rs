//! Least-angle regression, used only for the order in which predictors enter.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Columns whose centred norm is below this fraction of their raw norm count as constant.
const ZERO_VARIANCE: f64 = 1e-12;

/// LARS entry order of the columns of `design` for response `y`.
///
/// Columns are centred and scaled to unit norm internally, so the order does
/// not depend on column scale or offset. Zero-variance columns are skipped
/// (with a warning). The path stops after `min(k - 1, P)` entries, when the
/// residual correlation vanishes, or when the active set becomes linearly
/// dependent.
pub fn lars_select(design: &DMatrix<f64>, y: &DVector<f64>) -> Result<Vec<usize>> {
    let k = design.nrows();
    if y.len() != k {
        return Err(Error::Shape(format!("{k} design rows but {} responses", y.len())));
    }
    if k < 2 {
        return Err(Error::InvalidArgument("LARS needs at least two samples".into()));
    }

    let mut columns: Vec<usize> = Vec::new();
    let mut xs = DMatrix::<f64>::zeros(k, 0);
    {
        let mut kept = Vec::new();
        for j in 0..design.ncols() {
            let col = design.column(j);
            let mean = col.mean();
            let centred = col.add_scalar(-mean);
            let norm = centred.norm();
            if !(norm > ZERO_VARIANCE * col.norm()) {
                log::warn!("LARS: column {j} has zero variance and is excluded");
                continue;
            }
            columns.push(j);
            kept.push(centred / norm);
        }
        if !kept.is_empty() {
            xs = DMatrix::from_columns(&kept);
        }
    }
    let p = columns.len();
    let max_steps = (k - 1).min(p);
    if max_steps == 0 {
        return Ok(Vec::new());
    }

    let yc = y.add_scalar(-y.mean());
    let mut fitted = DVector::<f64>::zeros(k);
    let mut corr = xs.tr_mul(&yc);
    let c_initial = corr.amax();
    if c_initial == 0.0 {
        return Ok(Vec::new());
    }
    let stop_below = 1e-12 * c_initial;

    let mut active: Vec<usize> = vec![corr.iamax()];
    let mut in_active = vec![false; p];
    in_active[active[0]] = true;

    while active.len() <= max_steps {
        let c_max = corr.amax();
        if c_max <= stop_below {
            break;
        }
        // equiangular direction of the signed active columns
        let signs: Vec<f64> = active.iter().map(|&j| corr[j].signum()).collect();
        let xa = DMatrix::from_fn(k, active.len(), |r, c| signs[c] * xs[(r, active[c])]);
        let gram = xa.tr_mul(&xa);
        let Some(chol) = gram.cholesky() else {
            log::debug!("LARS: active set became singular after {} entries", active.len() - 1);
            active.pop();
            break;
        };
        let g_inv_one = chol.solve(&DVector::from_element(active.len(), 1.0));
        let denom = g_inv_one.sum();
        if !(denom > 0.0) {
            active.pop();
            break;
        }
        let norm_a = 1.0 / denom.sqrt();
        let w = g_inv_one * norm_a;
        let u = &xa * w;
        let a = xs.tr_mul(&u);

        let mut gamma = c_max / norm_a;
        let mut entering = None;
        if active.len() < max_steps {
            for j in (0..p).filter(|&j| !in_active[j]) {
                for cand in [(c_max - corr[j]) / (norm_a - a[j]), (c_max + corr[j]) / (norm_a + a[j])] {
                    if cand > 1e-14 * gamma.max(1.0) && cand < gamma {
                        gamma = cand;
                        entering = Some(j);
                    }
                }
            }
        }
        fitted += &u * gamma;
        corr = xs.tr_mul(&(&yc - &fitted));
        match entering {
            Some(j) => {
                in_active[j] = true;
                active.push(j);
            }
            None => break,
        }
    }
    Ok(active.into_iter().map(|j| columns[j]).collect())
}
