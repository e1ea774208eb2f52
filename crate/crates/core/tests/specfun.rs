mod common;

use common::{i_integral, i_series, j_integral, j_series, k_integral};
use num_complex::Complex64;
use qpsense::specfun::{bessel_i, bessel_j, bessel_k};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn rel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm()
}

#[test]
fn j0_at_one_matches_series_oracle() {
    let oracle = j_series(0, 1.0, 30);
    // frozen from the 30-term series
    assert!((oracle - 0.765_197_686_557_966_6).abs() < 1e-16);
    let got = bessel_j(0, 1.0).unwrap();
    assert!((got - oracle).abs() / oracle < 1e-12);
    let j1 = bessel_j(1, 1.0).unwrap();
    assert!((j1 - j_series(1, 1.0, 30)).abs() / j1 < 1e-12);
}

#[test]
fn j_matches_series_on_small_arguments() {
    for i in 0..=500 {
        let x = 5.0 * i as f64 / 500.0;
        for order in 0..2 {
            let got = bessel_j(order, x).unwrap();
            let want = j_series(order, x, 40);
            let err = (got - want).abs();
            assert!(err <= 1e-12 * want.abs().max(1e-2), "J{order}({x}): {got} vs {want}");
        }
    }
}

#[test]
fn j_matches_trapezoid_integral_up_to_one_hundred() {
    for i in 0..=2000 {
        let x = 100.0 * i as f64 / 2000.0;
        for order in 0..2 {
            let got = bessel_j(order, x).unwrap();
            let want = j_integral(order, x);
            // relative where the function is not near a zero
            let scale = want.abs().max(1e-2);
            assert!((got - want).abs() <= 1e-12 * scale, "J{order}({x}): {got} vs {want}");
        }
    }
}

#[test]
fn i0_at_one_matches_series_oracle() {
    let oracle = i_series(0, c(1.0, 0.0), 30);
    assert!((oracle.re - 1.266_065_877_752_008_4).abs() < 1e-15);
    assert!(rel(bessel_i(0, c(1.0, 0.0)).unwrap(), oracle) < 1e-10);
}

#[test]
fn i_matches_integral_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..300 {
        let re = rng.random_range(0.0..40.0);
        let im = rng.random_range(-re..=re);
        let z = c(re, im);
        for order in 0..2 {
            let got = bessel_i(order, z).unwrap();
            let want = i_integral(order, z);
            assert!(rel(got, want) < 1e-10, "I{order}({z}): {got} vs {want}");
        }
    }
}

#[test]
fn i_matches_mpmath_reference() {
    // mpmath besseli(0, 3+2j) at 30 digits
    let want = c(-0.469_517_192_044_070_2, 4.313_788_409_468_922);
    assert!(rel(bessel_i(0, c(3.0, 2.0)).unwrap(), want) < 1e-13);
}

#[test]
fn k_values_match_quadrature_oracle() {
    let k0_one = k_integral(0, c(1.0, 0.0));
    assert!((k0_one.re - 0.421_024_438_240_708_3).abs() < 1e-13);
    assert!(rel(bessel_k(0, c(1.0, 0.0)).unwrap(), k0_one) < 1e-10);

    let k1_five = k_integral(1, c(5.0, 0.0));
    assert!((k1_five.re - 0.004_044_613_445_452_164).abs() < 1e-15);
    assert!(rel(bessel_k(1, c(5.0, 0.0)).unwrap(), k1_five) < 1e-10);
}

#[test]
fn k_matches_quadrature_on_random_arguments() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..200 {
        let re = rng.random_range(0.1..30.0);
        let im = rng.random_range(-re..=re);
        let z = c(re, im);
        for order in 0..2 {
            let got = bessel_k(order, z).unwrap();
            let want = k_integral(order, z);
            assert!(rel(got, want) < 1e-10, "K{order}({z}): {got} vs {want}");
        }
    }
}

#[test]
fn k_matches_mpmath_reference() {
    let k1 = c(1.095_525_871_395_681, -0.944_722_668_909_898_6);
    assert!(rel(bessel_k(1, c(0.5, 0.3)).unwrap(), k1) < 1e-13);
    let k0 = c(3.541_990_073_554_431_5e-10, 4.313_392_294_730_901_3e-10);
    assert!(rel(bessel_k(0, c(20.0, -7.0)).unwrap(), k0) < 1e-12);
}

#[test]
fn wronskian_at_two() {
    let z = c(2.0, 0.0);
    let w = bessel_i(0, z).unwrap() * bessel_k(1, z).unwrap() + bessel_i(1, z).unwrap() * bessel_k(0, z).unwrap();
    assert!((w - c(0.5, 0.0)).norm() < 1e-14);
}

#[test]
fn k1_is_minus_derivative_of_k0() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..200 {
        let re = rng.random_range(0.1..50.0);
        let im = rng.random_range(-re..=re);
        let z = c(re, im);
        let h = 1e-6 * z.norm();
        let d = (bessel_k(0, z + h).unwrap() - bessel_k(0, z - h).unwrap()) / (2.0 * h);
        let k1 = bessel_k(1, z).unwrap();
        assert!(rel(-d, k1) < 1e-6, "z = {z}");
    }
}

mod props {
    use super::*;
    use proptest::prelude::*;

    fn arg() -> impl Strategy<Value = Complex64> {
        (0.1f64..50.0, -1.0f64..1.0).prop_map(|(re, t)| Complex64::new(re, t * re))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn wronskian_identity(z in arg()) {
            let w = bessel_i(0, z).unwrap() * bessel_k(1, z).unwrap()
                + bessel_i(1, z).unwrap() * bessel_k(0, z).unwrap();
            prop_assert!(rel(w, z.inv()) < 1e-9);
        }

        #[test]
        fn conjugate_symmetry(z in arg()) {
            for order in 0..2 {
                let a = bessel_i(order, z.conj()).unwrap();
                let b = bessel_i(order, z).unwrap().conj();
                prop_assert!(rel(a, b) < 1e-14);
                let a = bessel_k(order, z.conj()).unwrap();
                let b = bessel_k(order, z).unwrap().conj();
                prop_assert!(rel(a, b) < 1e-14);
            }
        }
    }
}
