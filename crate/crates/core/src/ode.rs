//! Adaptive Dormand-Prince 5(4) integration of linear systems `x' = A x`.

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Error, Result};

/// Absolute and relative error tolerances of the integrator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub atol: f64,
    pub rtol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { atol: 1e-10, rtol: 1e-8 }
    }
}

const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrates `x' = a x` from `x0` at `times[0]` and returns the solution at
/// every entry of the non-decreasing grid `times`.
pub fn integrate_linear(a: &DMatrix<f64>, x0: &DVector<f64>, times: &[f64], tol: Tolerances) -> Result<Vec<DVector<f64>>> {
    if times.is_empty() {
        return Ok(Vec::new());
    }
    if times.windows(2).any(|w| !(w[1] >= w[0])) || times.iter().any(|t| !t.is_finite()) {
        return Err(invalid("t_grid", "must be finite and non-decreasing"));
    }
    let norm = a.iter().map(|v| v.abs()).fold(0.0, f64::max) * (a.nrows() as f64).sqrt();
    let mut h = if norm > 0.0 { 0.1 / norm } else { 1.0 };
    let mut t = times[0];
    let mut x = x0.clone();
    let mut out = Vec::with_capacity(times.len());
    out.push(x.clone());
    let mut k: Vec<DVector<f64>> = vec![DVector::zeros(x.len()); 7];
    for &target in &times[1..] {
        while t < target {
            let step = h.min(target - t);
            let last = step == target - t;
            k[0] = a * &x;
            for s in 1..7 {
                let mut y = x.clone();
                for (r, kr) in k.iter().enumerate().take(s) {
                    if A[s][r] != 0.0 {
                        y.axpy(step * A[s][r], kr, 1.0);
                    }
                }
                k[s] = a * &y;
            }
            let mut x5 = x.clone();
            let mut err = DVector::zeros(x.len());
            for s in 0..7 {
                if B5[s] != 0.0 {
                    x5.axpy(step * B5[s], &k[s], 1.0);
                }
                err.axpy(step * (B5[s] - B4[s]), &k[s], 1.0);
            }
            let mut e = 0.0_f64;
            for i in 0..x.len() {
                let sc = tol.atol + tol.rtol * x[i].abs().max(x5[i].abs());
                e = e.max(err[i].abs() / sc);
            }
            if e <= 1.0 {
                t = if last { target } else { t + step };
                x = x5;
            }
            let fac = if e == 0.0 { 5.0 } else { (0.9 * e.powf(-0.2)).clamp(0.2, 5.0) };
            h = step * fac;
            if h < 1e-14 * t.abs().max(1.0) {
                return Err(Error::StepSizeUnderflow { t });
            }
        }
        out.push(x.clone());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_rotation() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        let x0 = DVector::from_vec(vec![1.0, 0.0]);
        let times: Vec<f64> = (0..=10).map(|i| i as f64).collect();
        let xs = integrate_linear(&a, &x0, &times, Tolerances { atol: 1e-12, rtol: 1e-10 }).unwrap();
        for (t, x) in times.iter().zip(&xs) {
            assert!((x[0] - t.cos()).abs() < 1e-8 && (x[1] - t.sin()).abs() < 1e-8);
        }
    }

    #[test]
    fn decay() {
        let a = DMatrix::from_element(1, 1, -2.0);
        let xs = integrate_linear(&a, &DVector::from_element(1, 1.0), &[0.0, 3.0], Tolerances::default()).unwrap();
        assert!((xs[1][0] - (-6.0_f64).exp()).abs() < 1e-10);
    }

    #[test]
    fn rejects_decreasing_grid() {
        let a = DMatrix::from_element(1, 1, -2.0);
        assert!(integrate_linear(&a, &DVector::from_element(1, 1.0), &[1.0, 0.0], Tolerances::default()).is_err());
    }
}
