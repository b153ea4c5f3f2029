//! Orthonormal Legendre polynomials on `[-1, 1]` under the uniform measure.
//!
//! `φ_d(u) = sqrt(2d + 1) · P_d(u)`, so `E[φ_a φ_b] = δ_ab` for `u ~ U(-1, 1)`.

/// `φ_d(u)` via the three-term recurrence
/// `(d + 1) P_{d+1} = (2d + 1) u P_d - d P_{d-1}`.
pub fn legendre_eval(degree: usize, u: f64) -> f64 {
    let mut table = vec![0.0; degree + 1];
    fill_values(&mut table, u);
    table[degree]
}

/// `φ'_d(u)`.
pub fn legendre_derivative(degree: usize, u: f64) -> f64 {
    let mut values = vec![0.0; degree + 1];
    let mut derivs = vec![0.0; degree + 1];
    fill_values_and_derivatives(&mut values, &mut derivs, u);
    derivs[degree]
}

fn fill_raw(p: &mut [f64], u: f64) {
    if p.is_empty() {
        return;
    }
    p[0] = 1.0;
    if p.len() > 1 {
        p[1] = u;
    }
    for d in 1..p.len().saturating_sub(1) {
        let df = d as f64;
        p[d + 1] = ((2.0 * df + 1.0) * u * p[d] - df * p[d - 1]) / (df + 1.0);
    }
}

/// Fills `out[d] = φ_d(u)` for every `d < out.len()`.
pub fn fill_values(out: &mut [f64], u: f64) {
    fill_raw(out, u);
    for (d, v) in out.iter_mut().enumerate() {
        *v *= ((2 * d + 1) as f64).sqrt();
    }
}

/// Fills values and first derivatives of `φ_0..φ_{len-1}` at `u`.
///
/// Derivatives use `P'_{d+1} = P'_{d-1} + (2d + 1) P_d`, which stays finite at `u = ±1`.
pub fn fill_values_and_derivatives(values: &mut [f64], derivs: &mut [f64], u: f64) {
    debug_assert_eq!(values.len(), derivs.len());
    fill_raw(values, u);
    let n = values.len();
    if n > 0 {
        derivs[0] = 0.0;
    }
    if n > 1 {
        derivs[1] = 1.0;
    }
    for d in 1..n.saturating_sub(1) {
        derivs[d + 1] = derivs[d - 1] + (2 * d + 1) as f64 * values[d];
    }
    for d in 0..n {
        let s = ((2 * d + 1) as f64).sqrt();
        values[d] *= s;
        derivs[d] *= s;
    }
}
