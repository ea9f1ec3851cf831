//! Truncated oscillator Fock space and the displacement operator.
//!
//! The polaron transformation dresses the dot-occupied sector with
//! `D(lambda) = exp(lambda (b^dag - b))`. Its matrix elements are real and
//! follow from associated Laguerre polynomials; a matrix-exponential path on a
//! padded space is provided as an independent cross-check.

use nalgebra::DMatrix;

use crate::error::{invalid, Result};

/// Oscillator levels `0..=n_max`, plus the padding used by the
/// matrix-exponential construction of the displacement operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FockSpace {
    pub n_max: usize,
    pub build_pad: usize,
}

impl FockSpace {
    /// Space with the default padding `build_pad = n_max`.
    pub fn new(n_max: usize) -> Result<Self> {
        Self::with_pad(n_max, n_max)
    }

    pub fn with_pad(n_max: usize, build_pad: usize) -> Result<Self> {
        if n_max < 1 {
            return Err(invalid("n_fock", "at least two oscillator levels are required"));
        }
        Ok(Self { n_max, build_pad })
    }

    /// Number of retained levels, `n_max + 1`.
    pub fn dim(&self) -> usize {
        self.n_max + 1
    }
}

/// Renormalised chemical potential of the polaron frame, `mu - omega lambda^2`.
pub fn polaron_shift(mu: f64, omega: f64, lambda: f64) -> f64 {
    mu - omega * lambda * lambda
}

/// Transition energy `eps_kl = mu_tilde - omega (k - l)`.
///
/// An electron entering the dot while the oscillator goes from `|k>` to `|l>`
/// must supply `eps_kl`; leaving from `|l>` to `|k>` releases it.
pub fn transition_energy(mu_tilde: f64, omega: f64, k: usize, l: usize) -> f64 {
    mu_tilde - omega * (k as f64 - l as f64)
}

fn ln_factorials(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for k in 1..=n {
        acc += (k as f64).ln();
        out.push(acc);
    }
    out
}

/// `<k| exp(lambda (b^dag - b)) |l>` for `k, l <= n_max` from the Laguerre
/// closed form.
///
/// Each element is exact, so the result does not depend on `build_pad`. The
/// returned matrix satisfies `D(-lambda) = D(lambda)^T` to the last bit.
pub fn displacement_elements(space: &FockSpace, lambda: f64) -> Result<DMatrix<f64>> {
    if !lambda.is_finite() {
        return Err(invalid("lambda", "must be finite"));
    }
    let d = space.dim();
    if lambda == 0.0 {
        return Ok(DMatrix::identity(d, d));
    }
    let x = lambda * lambda;
    let lf = ln_factorials(d);
    let ln_abs = lambda.abs().ln();
    let mut out = DMatrix::zeros(d, d);
    let mut lag = vec![0.0; d];
    for a in 0..d {
        let af = a as f64;
        // L_n^{(a)}(x) by forward recurrence for n = 0..d-a.
        let len = d - a;
        lag[0] = 1.0;
        if len > 1 {
            lag[1] = 1.0 + af - x;
        }
        for n in 1..len.saturating_sub(1) {
            let nf = n as f64;
            lag[n + 1] = ((2.0 * nf + 1.0 + af - x) * lag[n] - (nf + af) * lag[n - 1]) / (nf + 1.0);
        }
        let sign_a = if lambda < 0.0 && a % 2 == 1 { -1.0 } else { 1.0 };
        for l in 0..len {
            let k = l + a;
            let mag = (0.5 * (lf[l] - lf[k]) + af * ln_abs - 0.5 * x).exp();
            let v = sign_a * mag * lag[l];
            out[(k, l)] = v;
            if a > 0 {
                out[(l, k)] = if a % 2 == 1 { -v } else { v };
            }
        }
    }
    Ok(out)
}

/// Displacement matrix from the matrix exponential of the generator
/// `lambda (b^dag - b)` on the padded space, truncated to `n_max`.
pub fn displacement_elements_expm(space: &FockSpace, lambda: f64) -> Result<DMatrix<f64>> {
    if !lambda.is_finite() {
        return Err(invalid("lambda", "must be finite"));
    }
    let dp = space.dim() + space.build_pad;
    let mut gen = DMatrix::<f64>::zeros(dp, dp);
    for n in 0..dp - 1 {
        let s = ((n + 1) as f64).sqrt() * lambda;
        gen[(n + 1, n)] = s;
        gen[(n, n + 1)] = -s;
    }
    let full = gen.exp();
    let d = space.dim();
    Ok(full.view((0, 0), (d, d)).into_owned())
}

/// Number of low-lying levels whose displaced images stay inside the
/// truncated space, so that `D(lambda) D(-lambda)` is the identity there to
/// high accuracy.
pub fn interior_levels(space: &FockSpace, lambda: f64) -> usize {
    let nmax = space.n_max as f64;
    let margin = lambda.abs() + 3.0;
    let mut count = 0;
    for n in 0..space.dim() {
        let reach = ((n as f64).sqrt() + margin).powi(2);
        if reach <= nmax {
            count = n + 1;
        } else {
            break;
        }
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn zero_displacement_is_identity() {
        let s = FockSpace::new(6).unwrap();
        assert_eq!(displacement_elements(&s, 0.0).unwrap(), DMatrix::identity(7, 7));
    }

    #[test]
    fn vacuum_column_is_coherent_state() {
        let s = FockSpace::new(10).unwrap();
        let lam = 0.7_f64;
        let d = displacement_elements(&s, lam).unwrap();
        let mut fact = 1.0;
        for k in 0..=10 {
            if k > 0 {
                fact *= k as f64;
            }
            let want = (-lam * lam / 2.0).exp() * lam.powi(k as i32) / fact.sqrt();
            assert_relative_eq!(d[(k, 0)], want, max_relative = 1e-13);
        }
    }

    #[test]
    fn transpose_is_negative_displacement() {
        let s = FockSpace::new(12).unwrap();
        let d = displacement_elements(&s, 1.3).unwrap();
        let m = displacement_elements(&s, -1.3).unwrap();
        assert_eq!(d.transpose(), m);
    }

    #[test]
    fn rejects_single_level() {
        assert!(FockSpace::new(0).is_err());
    }

    #[test]
    fn expm_matches_closed_form_small() {
        let s = FockSpace::with_pad(8, 30).unwrap();
        let a = displacement_elements(&s, 0.9).unwrap();
        let b = displacement_elements_expm(&s, 0.9).unwrap();
        assert!((a - b).amax() < 1e-12);
    }

    #[test]
    fn energies() {
        assert_relative_eq!(polaron_shift(1.0, 2.0, 0.5), 0.5);
        assert_relative_eq!(transition_energy(0.3, 2.0, 3, 1), 0.3 - 4.0);
    }
}
