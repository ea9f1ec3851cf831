use nalgebra::DMatrix;
use nems_core::fock::{displacement_elements, displacement_elements_expm, interior_levels, FockSpace};
use proptest::prelude::*;

fn generator(dim: usize, lambda: f64) -> DMatrix<f64> {
    let mut g = DMatrix::zeros(dim, dim);
    for n in 0..dim - 1 {
        let s = ((n + 1) as f64).sqrt() * lambda;
        g[(n + 1, n)] = s;
        g[(n, n + 1)] = -s;
    }
    g
}

fn oracle(n_max: usize, lambda: f64, pad: usize) -> DMatrix<f64> {
    let d = n_max + 1;
    let full = nems_oracles::expm(&generator(d + pad, lambda));
    full.view((0, 0), (d, d)).into_owned()
}

#[test]
fn closed_form_matches_taylor_exponential() {
    for &(n, lam) in &[(5usize, 0.3), (12, 1.0), (25, 2.0), (40, 3.0)] {
        let s = FockSpace::new(n).unwrap();
        let d = displacement_elements(&s, lam).unwrap();
        let o = oracle(n, lam, 2 * n + 40);
        let err = (&d - &o).amax();
        assert!(err < 1e-10, "n={n} lambda={lam}: {err:e}");
    }
}

#[test]
fn expm_path_matches_closed_form() {
    let s = FockSpace::with_pad(40, 80).unwrap();
    let d = displacement_elements(&s, 3.0).unwrap();
    let e = displacement_elements_expm(&s, 3.0).unwrap();
    assert!((d - e).amax() < 1e-10);
}

#[test]
fn large_space_stays_finite() {
    let s = FockSpace::new(60).unwrap();
    let d = displacement_elements(&s, 3.0).unwrap();
    assert!(d.iter().all(|v| v.is_finite() && v.abs() <= 1.0 + 1e-12));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn inverse_on_interior(lambda in -3.0f64..3.0, n in 10usize..60) {
        let s = FockSpace::new(n).unwrap();
        let d = displacement_elements(&s, lambda).unwrap();
        let m = displacement_elements(&s, -lambda).unwrap();
        let p = &d * &m;
        let k = interior_levels(&s, lambda);
        for i in 0..k {
            for j in 0..k {
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!((p[(i, j)] - want).abs() < 1e-8, "({i},{j}) {}", p[(i, j)]);
            }
        }
    }

    #[test]
    fn parity_symmetry(lambda in -3.0f64..3.0, n in 2usize..30) {
        let s = FockSpace::new(n).unwrap();
        let d = displacement_elements(&s, lambda).unwrap();
        for k in 0..=n {
            for l in 0..=n {
                let sign = if (k + l) % 2 == 0 { 1.0 } else { -1.0 };
                prop_assert_eq!(d[(l, k)], sign * d[(k, l)]);
            }
        }
    }
}
