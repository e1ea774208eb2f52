//! Bessel kernels used by the waveguide characteristic equations.
//!
//! `J0`, `J1` are evaluated for real non-negative arguments; `I0`, `I1`,
//! `K0`, `K1` for complex arguments. Internally the modified functions are
//! carried exponentially scaled (`e^{-z} I(z)`, `e^{z} K(z)`) so that the
//! ratios `I1/I0` and `K1/K0` stay finite for arguments far beyond the
//! range where the unscaled values overflow.

use num_complex::Complex64;
use std::f64::consts::PI;
use thiserror::Error;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Below this modulus `I` is summed from its power series.
pub const I_SERIES_LIMIT: f64 = 17.0;
/// Below this modulus `K` uses the logarithmic series; above it Steed's
/// continued fraction.
pub const K_SERIES_LIMIT: f64 = 2.0;
/// Arguments with a larger modulus are rejected.
pub const MAX_MODULUS: f64 = 1.0e4;

/// Largest real part for which `e^{z}` is representable.
const MAX_EXP_ARG: f64 = 709.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpecFunError {
    #[error("unsupported Bessel order {0} (only 0 and 1 are implemented)")]
    UnsupportedOrder(u32),
    #[error("argument {0} outside the domain of the real-argument Bessel function")]
    Domain(f64),
    #[error("argument {re}{im:+}i overflows the exponentially growing branch")]
    Range { re: f64, im: f64 },
    #[error("argument {re}{im:+}i is not on the principal branch (Re z > 0 required)")]
    Branch { re: f64, im: f64 },
    #[error("non-finite argument")]
    NonFinite,
}

pub type Result<T> = std::result::Result<T, SpecFunError>;

fn check_order(order: u32) -> Result<()> {
    if order > 1 {
        Err(SpecFunError::UnsupportedOrder(order))
    } else {
        Ok(())
    }
}

fn check_finite(z: Complex64) -> Result<()> {
    if z.re.is_finite() && z.im.is_finite() {
        Ok(())
    } else {
        Err(SpecFunError::NonFinite)
    }
}

/// Bessel function of the first kind `J_order(x)` for `x >= 0`.
pub fn bessel_j(order: u32, x: f64) -> Result<f64> {
    check_order(order)?;
    if !x.is_finite() {
        return Err(SpecFunError::NonFinite);
    }
    if x < 0.0 {
        return Err(SpecFunError::Domain(x));
    }
    let (j0, j1) = j01(x);
    Ok(if order == 0 { j0 } else { j1 })
}

/// `(J0(x), J1(x))` for `x >= 0`.
pub(crate) fn j01(x: f64) -> (f64, f64) {
    if x == 0.0 {
        (1.0, 0.0)
    } else if x < 1.0e-3 {
        j01_series(x)
    } else if x < 25.0 {
        j01_miller(x)
    } else {
        j01_hankel(x)
    }
}

fn j01_series(x: f64) -> (f64, f64) {
    let q = -0.25 * x * x;
    let (mut t0, mut t1) = (1.0, 0.5 * x);
    let (mut s0, mut s1) = (t0, t1);
    for k in 1..30 {
        let k = k as f64;
        t0 *= q / (k * k);
        t1 *= q / (k * (k + 1.0));
        s0 += t0;
        s1 += t1;
    }
    (s0, s1)
}

// Backward recurrence J_{k-1} = (2k/x) J_k - J_{k+1}, normalized with
// J0 + 2 sum J_{2k} = 1.
fn j01_miller(x: f64) -> (f64, f64) {
    let start = 2 * ((x as usize + 40) / 2 + 8);
    let (mut jp1, mut jk) = (0.0_f64, 1.0e-30_f64);
    let mut norm = 0.0;
    let mut j1 = 0.0;
    for k in (1..=start).rev() {
        let jm1 = 2.0 * k as f64 / x * jk - jp1;
        jp1 = jk;
        jk = jm1;
        // jk now holds J_{k-1}
        if (k - 1) % 2 == 0 && k - 1 > 0 {
            norm += 2.0 * jk;
        }
        if k - 1 == 1 {
            j1 = jk;
        }
        if jk.abs() > 1.0e250 {
            jk *= 1.0e-250;
            jp1 *= 1.0e-250;
            norm *= 1.0e-250;
            j1 *= 1.0e-250;
        }
    }
    norm += jk;
    (jk / norm, j1 / norm)
}

fn hankel_coeff(nu: f64, k: usize) -> f64 {
    let mu = 4.0 * nu * nu;
    let mut a = 1.0;
    for j in 1..=k {
        let odd = (2 * j - 1) as f64;
        a *= (mu - odd * odd) / (j as f64 * 8.0);
    }
    a
}

fn hankel_pq(nu: f64, x: f64) -> (f64, f64) {
    let (mut p, mut q) = (0.0, 0.0);
    let mut prev = f64::INFINITY;
    for k in 0..80 {
        let term = hankel_coeff(nu, k) / x.powi(k as i32);
        if term.abs() > prev {
            break;
        }
        prev = term.abs();
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 0 {
            p += sign * term;
        } else {
            q += sign * term;
        }
        if term.abs() < 1.0e-17 * p.abs().max(1.0) {
            break;
        }
    }
    (p, q)
}

fn j01_hankel(x: f64) -> (f64, f64) {
    let amp = (2.0 / (PI * x)).sqrt();
    let eval = |nu: f64| {
        let (p, q) = hankel_pq(nu, x);
        let chi = x - (0.5 * nu + 0.25) * PI;
        amp * (p * chi.cos() - q * chi.sin())
    };
    (eval(0.0), eval(1.0))
}

/// Modified Bessel function of the first kind `I_order(z)`.
pub fn bessel_i(order: u32, z: Complex64) -> Result<Complex64> {
    check_order(order)?;
    check_finite(z)?;
    if z.norm() > MAX_MODULUS || z.re.abs() > MAX_EXP_ARG {
        return Err(SpecFunError::Range { re: z.re, im: z.im });
    }
    // I0 is even, I1 odd.
    let (w, sign) = if z.re < 0.0 { (-z, -1.0) } else { (z, 1.0) };
    let (i0, i1) = i01_scaled(w);
    let scale = w.exp();
    Ok(if order == 0 { i0 * scale } else { i1 * scale * sign })
}

/// Modified Bessel function of the second kind `K_order(z)`, principal branch.
pub fn bessel_k(order: u32, z: Complex64) -> Result<Complex64> {
    check_order(order)?;
    check_finite(z)?;
    if z.re <= 0.0 {
        return Err(SpecFunError::Branch { re: z.re, im: z.im });
    }
    if z.norm() > MAX_MODULUS {
        return Err(SpecFunError::Range { re: z.re, im: z.im });
    }
    let (k0, k1) = k01_scaled(z);
    let scale = (-z).exp();
    Ok(if order == 0 { k0 * scale } else { k1 * scale })
}

/// `I1(z)/I0(z)`, finite for any `|z| <= MAX_MODULUS`.
pub fn ratio_i1_i0(z: Complex64) -> Result<Complex64> {
    check_finite(z)?;
    if z.norm() > MAX_MODULUS {
        return Err(SpecFunError::Range { re: z.re, im: z.im });
    }
    let (w, sign) = if z.re < 0.0 { (-z, -1.0) } else { (z, 1.0) };
    let (i0, i1) = i01_scaled(w);
    Ok(i1 / i0 * sign)
}

/// `K1(z)/K0(z)` for `Re z > 0`.
pub fn ratio_k1_k0(z: Complex64) -> Result<Complex64> {
    check_finite(z)?;
    if z.re <= 0.0 {
        return Err(SpecFunError::Branch { re: z.re, im: z.im });
    }
    if z.norm() > MAX_MODULUS {
        return Err(SpecFunError::Range { re: z.re, im: z.im });
    }
    let (k0, k1) = k01_scaled(z);
    Ok(k1 / k0)
}

/// `(e^{-z} I0(z), e^{-z} I1(z))` for `Re z >= 0`.
pub(crate) fn i01_scaled(z: Complex64) -> (Complex64, Complex64) {
    if z.norm() < I_SERIES_LIMIT {
        let (i0, i1) = i01_series(z);
        let s = (-z).exp();
        (i0 * s, i1 * s)
    } else {
        i01_asymptotic_scaled(z)
    }
}

/// Power series of `I0`, `I1`, summed until the terms stop contributing.
pub(crate) fn i01_series(z: Complex64) -> (Complex64, Complex64) {
    let q = z * z * 0.25;
    let mut t0 = Complex64::new(1.0, 0.0);
    let mut t1 = z * 0.5;
    let (mut s0, mut s1) = (t0, t1);
    for k in 1..200 {
        let k = k as f64;
        t0 = t0 * q / (k * k);
        t1 = t1 * q / (k * (k + 1.0));
        s0 += t0;
        s1 += t1;
        if t0.norm() <= 1.0e-17 * s0.norm() && t1.norm() <= 1.0e-17 * s1.norm() {
            break;
        }
    }
    (s0, s1)
}

fn i01_asymptotic_scaled(z: Complex64) -> (Complex64, Complex64) {
    let inv = z.inv();
    let sum = |nu: f64, alternating: bool| {
        let mut acc = Complex64::new(0.0, 0.0);
        let mut pow = Complex64::new(1.0, 0.0);
        let mut prev = f64::INFINITY;
        for k in 0..80 {
            let a = hankel_coeff(nu, k);
            let sign = if alternating && k % 2 == 1 { -1.0 } else { 1.0 };
            let term = pow * (a * sign);
            let mag = term.norm();
            if mag > prev {
                break;
            }
            prev = mag;
            acc += term;
            if mag < 1.0e-17 * acc.norm() {
                break;
            }
            pow *= inv;
        }
        acc
    };
    let pref = (2.0 * PI * z).sqrt().inv();
    // Recessive e^{-2z} contribution; matters only when Re z is small.
    let recessive = (-2.0 * z).exp();
    let i_sign = if z.im >= 0.0 {
        Complex64::new(0.0, 1.0)
    } else {
        Complex64::new(0.0, -1.0)
    };
    let i0 = pref * (sum(0.0, true) + i_sign * recessive * sum(0.0, false));
    let i1 = pref * (sum(1.0, true) - i_sign * recessive * sum(1.0, false));
    (i0, i1)
}

/// `(e^{z} K0(z), e^{z} K1(z))` for `Re z > 0`.
pub(crate) fn k01_scaled(z: Complex64) -> (Complex64, Complex64) {
    if z.norm() <= K_SERIES_LIMIT {
        let (k0, k1) = k01_series(z);
        let s = z.exp();
        (k0 * s, k1 * s)
    } else {
        k01_steed_scaled(z)
    }
}

// 1/z without squaring the modulus, which underflows below ~1e-154.
fn safe_inv(z: Complex64) -> Complex64 {
    let m = z.re.abs().max(z.im.abs());
    let w = z / m;
    w.inv() / m
}

// Logarithmic series:
//   K0 = -(ln(z/2) + gamma) I0 + sum_k H_k q^k / (k!)^2
//   K1 = 1/z + ln(z/2) I1 - (z/4) sum_k (psi(k+1) + psi(k+2)) q^k / (k!(k+1)!)
// with q = z^2/4, H_k the harmonic numbers and psi(k+1) = H_k - gamma.
fn k01_series(z: Complex64) -> (Complex64, Complex64) {
    let (i0, i1) = i01_series(z);
    let log_half = (z * 0.5).ln();
    let q = z * z * 0.25;
    let mut t0 = Complex64::new(1.0, 0.0);
    let mut t1 = Complex64::new(1.0, 0.0);
    let mut harmonic = 0.0;
    let mut s0 = Complex64::new(0.0, 0.0);
    let mut s1 = t1 * (2.0 * -EULER_GAMMA + 1.0);
    for k in 1..200 {
        let kf = k as f64;
        harmonic += 1.0 / kf;
        t0 = t0 * q / (kf * kf);
        t1 = t1 * q / (kf * (kf + 1.0));
        let psi_k1 = harmonic - EULER_GAMMA;
        let psi_k2 = psi_k1 + 1.0 / (kf + 1.0);
        let d0 = t0 * harmonic;
        let d1 = t1 * (psi_k1 + psi_k2);
        s0 += d0;
        s1 += d1;
        if d0.norm() <= 1.0e-17 * s0.norm() && d1.norm() <= 1.0e-17 * s1.norm() {
            break;
        }
    }
    let k0 = -(log_half + EULER_GAMMA) * i0 + s0;
    let k1 = safe_inv(z) + log_half * i1 - z * 0.25 * s1;
    (k0, k1)
}

// Steed's continued fraction for K_mu and K_{mu+1} at mu = 0
// (Thompson & Barnett), valid for Re z > 0.
fn k01_steed_scaled(z: Complex64) -> (Complex64, Complex64) {
    let one = Complex64::new(1.0, 0.0);
    let a1 = 0.25;
    let mut b = (z + 1.0) * 2.0;
    let mut d = b.inv();
    let mut delh = d;
    let mut h = delh;
    let mut q1 = Complex64::new(0.0, 0.0);
    let mut q2 = one;
    let mut q = Complex64::new(a1, 0.0);
    let mut c = Complex64::new(a1, 0.0);
    let mut a = -a1;
    let mut s = one + q * delh;
    for i in 1..20_000 {
        let fi = i as f64;
        a -= 2.0 * fi;
        c = c * (-a) / (fi + 1.0);
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = (b + d * a).inv();
        delh = (b * d - 1.0) * delh;
        h += delh;
        let dels = q * delh;
        s += dels;
        if dels.norm() < 1.0e-17 * s.norm() {
            break;
        }
    }
    h *= a1;
    let k0 = (PI / (2.0 * z)).sqrt() / s;
    let k1 = k0 * (z + 0.5 - h) / z;
    (k0, k1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn rel(a: Complex64, b: Complex64) -> f64 {
        (a - b).norm() / b.norm()
    }

    #[test]
    fn trivial_values() {
        assert_eq!(bessel_j(0, 0.0).unwrap(), 1.0);
        assert_eq!(bessel_j(1, 0.0).unwrap(), 0.0);
        assert_eq!(bessel_i(0, c(0.0, 0.0)).unwrap(), c(1.0, 0.0));
        assert_eq!(bessel_i(1, c(0.0, 0.0)).unwrap(), c(0.0, 0.0));
    }

    #[test]
    fn rejects_bad_order_and_branch() {
        assert_eq!(bessel_j(2, 1.0), Err(SpecFunError::UnsupportedOrder(2)));
        assert!(matches!(
            bessel_i(3, c(1.0, 0.0)),
            Err(SpecFunError::UnsupportedOrder(3))
        ));
        assert!(matches!(bessel_k(0, c(0.0, 1.0)), Err(SpecFunError::Branch { .. })));
        assert!(matches!(bessel_k(1, c(-1.0, 0.0)), Err(SpecFunError::Branch { .. })));
        assert!(matches!(bessel_j(0, -1.0), Err(SpecFunError::Domain(_))));
        assert!(matches!(bessel_i(0, c(800.0, 0.0)), Err(SpecFunError::Range { .. })));
        assert!(matches!(bessel_i(0, c(f64::NAN, 0.0)), Err(SpecFunError::NonFinite)));
    }

    #[test]
    fn i_series_and_asymptotic_overlap_at_crossover() {
        for k in 0..64 {
            let theta = -PI / 4.0 + PI / 2.0 * k as f64 / 63.0;
            let z = Complex64::from_polar(I_SERIES_LIMIT, theta);
            let (s0, s1) = i01_series(z);
            let e = (-z).exp();
            let (a0, a1) = i01_asymptotic_scaled(z);
            assert!(rel(a0, s0 * e) < 1e-10, "I0 overlap at {z}");
            assert!(rel(a1, s1 * e) < 1e-10, "I1 overlap at {z}");
        }
    }

    #[test]
    fn k_series_and_continued_fraction_overlap() {
        for k in 0..64 {
            let theta = -PI / 3.0 + 2.0 * PI / 3.0 * k as f64 / 63.0;
            let z = Complex64::from_polar(K_SERIES_LIMIT, theta);
            let (s0, s1) = k01_series(z);
            let e = z.exp();
            let (a0, a1) = k01_steed_scaled(z);
            assert!(rel(a0, s0 * e) < 1e-12, "K0 overlap at {z}");
            assert!(rel(a1, s1 * e) < 1e-12, "K1 overlap at {z}");
        }
    }

    #[test]
    fn ratios_survive_large_arguments() {
        let z = c(2200.0, 15.0);
        let ri = ratio_i1_i0(z).unwrap();
        let rk = ratio_k1_k0(z).unwrap();
        // Leading asymptotics: I1/I0 ~ 1 - 1/(2z), K1/K0 ~ 1 + 1/(2z).
        assert!(rel(ri, 1.0 - 0.5 / z) < 1e-6);
        assert!(rel(rk, 1.0 + 0.5 / z) < 1e-6);
        assert!(matches!(bessel_i(0, z), Err(SpecFunError::Range { .. })));
    }

    #[test]
    fn i_reflection_parity() {
        let z = c(3.0, 1.5);
        let a = bessel_i(1, -z).unwrap();
        let b = bessel_i(1, z).unwrap();
        assert!(rel(a, -b) < 1e-14);
        assert!(rel(bessel_i(0, -z).unwrap(), bessel_i(0, z).unwrap()) < 1e-14);
    }
}
