//! Cyclic Jacobi eigensolver for small dense symmetric matrices.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub const MAX_SWEEPS: usize = 100;
/// Convergence: every off-diagonal entry at most this fraction of `||C||_F`.
pub const OFF_DIAGONAL_TOLERANCE: f64 = 1e-14;
/// Largest accepted `|C_ij - C_ji|` relative to `||C||_F`.
pub const SYMMETRY_TOLERANCE: f64 = 1e-10;

/// Eigenpairs with eigenvalues sorted descending and eigenvectors as columns.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricEigen {
    pub eigenvalues: DVector<f64>,
    pub eigenvectors: DMatrix<f64>,
    pub sweeps: usize,
}

/// Eigendecomposition `C = W diag(λ) Wᵀ` by cyclic Jacobi rotations.
///
/// Eigenvalues come out sorted in descending order. Each eigenvector is signed
/// so that its entry of largest magnitude is positive (first such entry on ties).
pub fn eigendecompose_symmetric(c: &DMatrix<f64>) -> Result<SymmetricEigen> {
    let m = c.nrows();
    if m != c.ncols() {
        return Err(Error::Shape(format!("matrix is {}x{}, not square", m, c.ncols())));
    }
    if c.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("matrix has non-finite entries".into()));
    }
    let norm = c.norm();
    for i in 0..m {
        for j in (i + 1)..m {
            if (c[(i, j)] - c[(j, i)]).abs() > SYMMETRY_TOLERANCE * norm {
                return Err(Error::InvalidArgument(format!(
                    "matrix is not symmetric at ({i}, {j})"
                )));
            }
        }
    }

    let mut a = c.clone();
    // work on the exactly symmetric part
    for i in 0..m {
        for j in (i + 1)..m {
            let avg = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = avg;
            a[(j, i)] = avg;
        }
    }
    let mut v = DMatrix::<f64>::identity(m, m);
    let tol = OFF_DIAGONAL_TOLERANCE * norm;

    let mut sweeps = 0;
    loop {
        let off = max_off_diagonal(&a);
        if off <= tol {
            break;
        }
        if sweeps == MAX_SWEEPS {
            return Err(Error::EigenNonConvergence { sweeps });
        }
        sweeps += 1;
        for p in 0..m {
            for q in (p + 1)..m {
                if a[(p, q)].abs() > tol {
                    rotate(&mut a, &mut v, p, q);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| a[(j, j)].total_cmp(&a[(i, i)]).then(i.cmp(&j)));
    let eigenvalues = DVector::from_iterator(m, order.iter().map(|&i| a[(i, i)]));
    let mut eigenvectors = DMatrix::zeros(m, m);
    for (dst, &src) in order.iter().enumerate() {
        eigenvectors.set_column(dst, &v.column(src));
    }
    apply_sign_convention(&mut eigenvectors);
    Ok(SymmetricEigen {
        eigenvalues,
        eigenvectors,
        sweeps,
    })
}

fn max_off_diagonal(a: &DMatrix<f64>) -> f64 {
    let m = a.nrows();
    let mut off = 0.0f64;
    for i in 0..m {
        for j in (i + 1)..m {
            off = off.max(a[(i, j)].abs());
        }
    }
    off
}

/// One symmetric Schur rotation zeroing `a[(p, q)]`; accumulates it into `v`.
fn rotate(a: &mut DMatrix<f64>, v: &mut DMatrix<f64>, p: usize, q: usize) {
    let apq = a[(p, q)];
    let tau = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let cos = 1.0 / (1.0 + t * t).sqrt();
    let sin = t * cos;
    let m = a.nrows();
    for k in 0..m {
        let (akp, akq) = (a[(k, p)], a[(k, q)]);
        a[(k, p)] = cos * akp - sin * akq;
        a[(k, q)] = sin * akp + cos * akq;
    }
    for k in 0..m {
        let (apk, aqk) = (a[(p, k)], a[(q, k)]);
        a[(p, k)] = cos * apk - sin * aqk;
        a[(q, k)] = sin * apk + cos * aqk;
    }
    a[(p, q)] = 0.0;
    a[(q, p)] = 0.0;
    for k in 0..m {
        let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
        v[(k, p)] = cos * vkp - sin * vkq;
        v[(k, q)] = sin * vkp + cos * vkq;
    }
}

/// Flip each column so its largest-magnitude entry is positive.
///
/// Entries within a relative 1e-12 of the column maximum count as ties and the
/// lowest index wins, which keeps the choice stable under roundoff.
pub fn apply_sign_convention(w: &mut DMatrix<f64>) {
    for mut col in w.column_iter_mut() {
        let max = col.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        if max == 0.0 {
            continue;
        }
        let pivot = col
            .iter()
            .copied()
            .find(|v| v.abs() >= max * (1.0 - 1e-12))
            .expect("max exists");
        if pivot < 0.0 {
            col.neg_mut();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn reconstruct(e: &SymmetricEigen) -> DMatrix<f64> {
        &e.eigenvectors * DMatrix::from_diagonal(&e.eigenvalues) * e.eigenvectors.transpose()
    }

    #[test]
    fn diagonal_input() {
        let c = DMatrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, 1.0]);
        let e = eigendecompose_symmetric(&c).unwrap();
        assert_eq!(e.eigenvalues.as_slice(), &[3.0, 1.0]);
        assert_eq!(e.eigenvectors, DMatrix::identity(2, 2));
        let c = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 3.0]);
        let e = eigendecompose_symmetric(&c).unwrap();
        assert_eq!(e.eigenvalues.as_slice(), &[3.0, 1.0]);
        assert_eq!(e.eigenvectors.column(0).as_slice(), &[0.0, 1.0]);
    }

    #[test]
    fn two_by_two_by_hand() {
        // characteristic polynomial (2 - λ)^2 - 1 = 0  =>  λ = 3, 1
        let c = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let e = eigendecompose_symmetric(&c).unwrap();
        assert!((e.eigenvalues[0] - 3.0).abs() < 1e-14);
        assert!((e.eigenvalues[1] - 1.0).abs() < 1e-14);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((e.eigenvectors[(0, 0)] - r).abs() < 1e-14);
        assert!((e.eigenvectors[(1, 0)] - r).abs() < 1e-14);
        // (1, -1)/√2: tie in magnitude, first entry made positive
        assert!((e.eigenvectors[(0, 1)] - r).abs() < 1e-14);
        assert!((e.eigenvectors[(1, 1)] + r).abs() < 1e-14);
        assert!((reconstruct(&e) - &c).norm() <= 1e-12 * c.norm());
    }

    #[test]
    fn zero_and_scalar_matrices() {
        let e = eigendecompose_symmetric(&DMatrix::zeros(3, 3)).unwrap();
        assert_eq!(e.eigenvalues.as_slice(), &[0.0; 3]);
        let e = eigendecompose_symmetric(&DMatrix::from_element(1, 1, -2.0)).unwrap();
        assert_eq!(e.eigenvalues.as_slice(), &[-2.0]);
    }

    #[test]
    fn rejects_asymmetric_or_nonsquare() {
        let c = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(eigendecompose_symmetric(&c).is_err());
        assert!(eigendecompose_symmetric(&DMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn sign_convention_lowest_index_on_ties() {
        let mut w = DMatrix::from_row_slice(3, 2, &[-0.5, 0.1, 0.5, -0.9, 0.0, 0.3]);
        apply_sign_convention(&mut w);
        assert_eq!(w.column(0).as_slice(), &[0.5, -0.5, -0.0]);
        assert_eq!(w.column(1).as_slice(), &[-0.1, 0.9, -0.3]);
    }

    fn symmetric(m: usize) -> impl Strategy<Value = DMatrix<f64>> {
        prop::collection::vec(-10.0..10.0f64, m * m).prop_map(move |v| {
            let a = DMatrix::from_vec(m, m, v);
            (&a + a.transpose()) * 0.5
        })
    }

    proptest! {
        #[test]
        fn decomposition_contracts(c in (1usize..=12).prop_flat_map(symmetric)) {
            let m = c.nrows();
            let e = eigendecompose_symmetric(&c).unwrap();
            let norm = c.norm();
            prop_assert!((reconstruct(&e) - &c).norm() <= 1e-12 * norm.max(f64::MIN_POSITIVE));
            let ortho = e.eigenvectors.transpose() * &e.eigenvectors - DMatrix::identity(m, m);
            prop_assert!(ortho.amax() <= 1e-10);
            prop_assert!((e.eigenvalues.sum() - c.trace()).abs() <= 1e-10 * norm.max(1.0));
            for w in e.eigenvalues.as_slice().windows(2) {
                prop_assert!(w[0] >= w[1]);
            }
        }
    }
}
