//! Reference computations for tests.
//!
//! Everything here takes a different route from the production code:
//! adaptive Gauss-Kronrod quadrature instead of residues, Taylor-series
//! matrix exponentials instead of closed forms, contour expansions instead of
//! windowed transforms. The functions favour clarity over speed.

use nalgebra::{Complex, DMatrix};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for i in 0..7 {
        let x = h * XGK[i];
        let s = f(c - x) + f(c + x);
        k += WGK[i] * s;
        if i % 2 == 1 {
            g += WG[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Adaptive Gauss-Kronrod quadrature of `f` over `[a, b]`.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let mut stack = vec![(a, b, 0usize)];
    let mut total = 0.0;
    let mut comp = 0.0;
    while let Some((lo, hi, depth)) = stack.pop() {
        let (v, e) = gk15(f, lo, hi);
        let scale = tol * (hi - lo) / (b - a);
        if e <= scale.max(1e-300) || depth > 60 {
            // Kahan summation keeps many small panels accurate.
            let y = v - comp;
            let t = total + y;
            comp = (t - total) - y;
            total = t;
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((lo, mid, depth + 1));
            stack.push((mid, hi, depth + 1));
        }
    }
    total
}

/// `int_a^inf f(x) dx` through the map `x = a + t / (1 - t)`.
pub fn integrate_to_infinity(f: &dyn Fn(f64) -> f64, a: f64, tol: f64) -> f64 {
    let g = |t: f64| {
        if t >= 1.0 {
            return 0.0;
        }
        let u = 1.0 - t;
        f(a + t / u) / (u * u)
    };
    integrate(&g, 0.0, 1.0, tol)
}

/// `int_{-inf}^{inf} f(x) dx`, split at `center` with extra resolution in
/// `center +- width`.
pub fn integrate_real_line(f: &dyn Fn(f64) -> f64, center: f64, width: f64, tol: f64) -> f64 {
    let mid = integrate(f, center - width, center + width, tol);
    let hi = integrate_to_infinity(f, center + width, tol);
    let lo = integrate_to_infinity(&|x| f(-x), -(center - width), tol);
    mid + hi + lo
}

/// `PV int g(w) / (w - a) dw` by symmetric folding around the pole.
pub fn principal_value(g: &dyn Fn(f64) -> f64, a: f64, scale: f64, tol: f64) -> f64 {
    let h = |x: f64| if x == 0.0 { 0.0 } else { (g(a + x) - g(a - x)) / x };
    integrate(&h, 0.0, scale, tol) + integrate_to_infinity(&h, scale, tol)
}

/// Matrix exponential by scaling and squaring with a Taylor series.
pub fn expm(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let norm = m.iter().map(|x| x.abs()).sum::<f64>().max(1e-300);
    let squarings = (norm.log2().ceil() + 4.0).max(0.0) as i32;
    let a = m / 2f64.powi(squarings);
    let mut result = DMatrix::identity(n, n);
    let mut term = DMatrix::identity(n, n);
    for k in 1..40 {
        term = &term * &a / k as f64;
        result += &term;
        if term.amax() < 1e-18 {
            break;
        }
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// Lorentzian lead with primitive parameters.
#[derive(Debug, Clone, Copy)]
pub struct Lead {
    pub gamma_rate: f64,
    pub temperature: f64,
    pub mu: f64,
    pub center: f64,
    pub width: f64,
}

impl Lead {
    pub fn upsilon(&self, e: f64) -> f64 {
        let x = e - self.center;
        self.gamma_rate * self.width * self.width / (x * x + self.width * self.width)
    }

    pub fn fermi(&self, e: f64) -> f64 {
        let x = (e - self.mu) / self.temperature;
        if x > 0.0 {
            (-x).exp() / (1.0 + (-x).exp())
        } else {
            1.0 / (1.0 + x.exp())
        }
    }

    fn upsilon_c(&self, z: Complex<f64>) -> Complex<f64> {
        let x = z - self.center;
        self.gamma_rate * self.width * self.width / (x * x + self.width * self.width)
    }

    fn fermi_c(&self, z: Complex<f64>) -> Complex<f64> {
        1.0 / (((z - self.mu) / self.temperature).exp() + 1.0)
    }

    /// `(1/2pi) int Upsilon f e^{i w s}` for `s > 0` from the pole expansion in
    /// the upper half plane.
    pub fn correlation_in(&self, s: f64) -> Complex<f64> {
        assert!(s > 0.0);
        let i = Complex::new(0.0, 1.0);
        let pole = Complex::new(self.center, self.width);
        let mut v = 0.5 * self.gamma_rate * self.width * self.fermi_c(pole) * (i * pole * s).exp();
        for k in 0..100_000 {
            let nu = std::f64::consts::PI * self.temperature * (2 * k + 1) as f64;
            let z = Complex::new(self.mu, nu);
            let t = -i * self.temperature * self.upsilon_c(z) * (i * z * s).exp();
            v += t;
            if t.norm() < 1e-18 {
                break;
            }
        }
        v
    }

    /// `(1/2pi) int Upsilon (1 - f) e^{-i w s}` for `s > 0`.
    pub fn correlation_out(&self, s: f64) -> Complex<f64> {
        assert!(s > 0.0);
        let i = Complex::new(0.0, 1.0);
        let pole = Complex::new(self.center, self.width);
        let one = Complex::new(1.0, 0.0);
        let mut v = 0.5 * self.gamma_rate * self.width * (one - self.fermi_c(pole)) * (i * pole * s).exp();
        for k in 0..100_000 {
            let nu = std::f64::consts::PI * self.temperature * (2 * k + 1) as f64;
            let z = Complex::new(self.mu, nu);
            let t = i * self.temperature * self.upsilon_c(z) * (i * z * s).exp();
            v += t;
            if t.norm() < 1e-18 {
                break;
            }
        }
        v.conj()
    }
}
