//! Special functions needed for analytic tail corrections.

use num_complex::Complex64;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Scaled exponential integral `exp(z) E1(z)` on the principal branch.
///
/// Uses the power series for small `|z|` and a continued fraction otherwise.
/// The scaling keeps the value finite when `Re z` is large and negative.
pub fn scaled_e1(z: Complex64) -> Complex64 {
    if z.norm() <= 2.0 {
        e1_series(z) * z.exp()
    } else {
        e1_continued_fraction(z)
    }
}

/// Exponential integral `E1(z)`.
#[cfg(test)]
pub fn e1(z: Complex64) -> Complex64 {
    if z.norm() <= 2.0 {
        e1_series(z)
    } else {
        e1_continued_fraction(z) * (-z).exp()
    }
}

fn e1_series(z: Complex64) -> Complex64 {
    let mut sum = Complex64::new(0.0, 0.0);
    let mut term = Complex64::new(1.0, 0.0);
    for k in 1..200 {
        let kf = k as f64;
        term *= -z / kf;
        let add = term / kf;
        sum += add;
        if add.norm() < 1e-17 * sum.norm().max(1e-300) {
            break;
        }
    }
    -EULER_GAMMA - z.ln() - sum
}

/// Modified Lentz evaluation of
/// `exp(z) E1(z) = 1/(z + 1 - 1/(z + 3 - 4/(z + 5 - ...)))`.
fn e1_continued_fraction(z: Complex64) -> Complex64 {
    let tiny = 1e-300;
    let mut b = z + 1.0;
    let mut c = Complex64::new(1.0 / tiny, 0.0);
    let mut d = Complex64::new(1.0, 0.0) / b;
    let mut h = d;
    for i in 1..10_000 {
        let a = -((i * i) as f64);
        b += 2.0;
        d = Complex64::new(1.0, 0.0) / (a * d + b);
        c = b + a / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).norm() < 1e-16 {
            break;
        }
    }
    h
}
