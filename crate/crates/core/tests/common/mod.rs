//! Independent oracles shared by the integration and acceptance suites.
//! Nothing here calls into the library's numerical kernels.
#![allow(dead_code)]

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use std::f64::consts::PI;

/// Truncated power series sum_k (-1)^k (x/2)^(2k+n) / (k! (k+n)!).
pub fn j_series(n: u32, x: f64, terms: usize) -> f64 {
    let q = -0.25 * x * x;
    let mut t = if n == 0 { 1.0 } else { 0.5 * x };
    let mut s = t;
    for k in 1..terms {
        let k = k as f64;
        t *= q / (k * (k + n as f64));
        s += t;
    }
    s
}

/// J_n(x) = (1/2pi) int_0^{2pi} cos(n t - x sin t) dt by the periodic
/// trapezoid rule, which converges geometrically once the point count
/// exceeds x.
pub fn j_integral(n: u32, x: f64) -> f64 {
    let m = 4 * (x as usize) + 256;
    let h = 2.0 * PI / m as f64;
    (0..m)
        .map(|i| {
            let t = i as f64 * h;
            (n as f64 * t - x * t.sin()).cos()
        })
        .sum::<f64>()
        / m as f64
}

/// sum_k (z/2)^(2k+n) / (k! (k+n)!), fixed number of terms.
pub fn i_series(n: u32, z: Complex64, terms: usize) -> Complex64 {
    let q = z * z * 0.25;
    let mut t = if n == 0 { Complex64::new(1.0, 0.0) } else { z * 0.5 };
    let mut s = t;
    for k in 1..terms {
        let k = k as f64;
        t = t * q / (k * (k + n as f64));
        s += t;
    }
    s
}

/// I_n(z) = (1/2pi) int_0^{2pi} e^{z cos t} cos(n t) dt, periodic trapezoid.
pub fn i_integral(n: u32, z: Complex64) -> Complex64 {
    let m = 4 * (z.norm() as usize) + 256;
    let h = 2.0 * PI / m as f64;
    (0..m)
        .map(|i| {
            let t = i as f64 * h;
            (z * t.cos()).exp() * (n as f64 * t).cos()
        })
        .sum::<Complex64>()
        / m as f64
}

#[allow(clippy::too_many_arguments)]
fn simpson_adaptive<F: Fn(f64) -> Complex64>(
    f: &F,
    a: f64,
    b: f64,
    fa: Complex64,
    fm: Complex64,
    fb: Complex64,
    whole: Complex64,
    tol: f64,
    depth: u32,
) -> Complex64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.norm() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_adaptive(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_adaptive(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Adaptive Simpson quadrature of a complex integrand on [a, b].
pub fn integrate<F: Fn(f64) -> Complex64>(f: F, a: f64, b: f64, tol: f64) -> Complex64 {
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_adaptive(&f, a, b, fa, fm, fb, whole, tol, 40)
}

/// K_n(z) = int_0^inf e^{-z cosh t} cosh(n t) dt for Re z > 0.
pub fn k_integral(n: u32, z: Complex64) -> Complex64 {
    // Truncate where e^{-Re z (cosh t - 1)} < 1e-20.
    let upper = (1.0 + 46.0 / z.re).acosh() + 1.0;
    // Pull out e^{-z} so the tolerance is relative.
    let g = |t: f64| (-z * (t.cosh() - 1.0)).exp() * (n as f64 * t).cosh();
    // split into unit panels so the absolute tolerance tracks the integrand
    let panels = upper.ceil() as usize;
    let scaled: Complex64 = (0..panels)
        .map(|i| {
            let a = upper * i as f64 / panels as f64;
            let b = upper * (i + 1) as f64 / panels as f64;
            let scale = g(a).norm().max(g(b).norm()).max(1e-300);
            integrate(g, a, b, 1e-13 * scale)
        })
        .sum();
    scaled * (-z).exp()
}

pub fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Mixed-state QFI from the symmetric logarithmic derivative.
///
/// Builds the two-mode state sum_n c_n |n, N-n> (amplitudes sqrt(x_n) times
/// the supplied phases), applies the phase e^{i phi n_1}, sends mode 1
/// through a beamsplitter of transmissivity eta (Kraus operators on the
/// (N+1)^2-dimensional Fock space), and evaluates
/// 2 sum_{ij} |<i|d rho|j>|^2 / (p_i + p_j) over the eigenbasis of rho.
pub fn qfi_sld_oracle(x: &[f64], phases: &[f64], eta: f64, phi: f64) -> f64 {
    let n_max = x.len() - 1;
    let dim1 = n_max + 1;
    let dim = dim1 * dim1;
    let idx = |a: usize, b: usize| a * dim1 + b;
    let mut psi = vec![Complex64::new(0.0, 0.0); dim];
    let mut dpsi = vec![Complex64::new(0.0, 0.0); dim];
    for n in 0..=n_max {
        let amp = Complex64::from_polar(x[n].sqrt(), phases[n] + phi * n as f64);
        psi[idx(n, n_max - n)] = amp;
        dpsi[idx(n, n_max - n)] = amp * Complex64::new(0.0, n as f64);
    }
    let zero = Complex64::new(0.0, 0.0);
    let mut rho = DMatrix::from_element(dim, dim, zero);
    let mut drho = DMatrix::from_element(dim, dim, zero);
    for l in 0..=n_max {
        // K_l |a, b> = sqrt(C(a,l) eta^(a-l) (1-eta)^l) |a-l, b>
        let apply = |v: &[Complex64]| {
            let mut out = vec![zero; dim];
            for a in l..dim1 {
                let w = (binomial(a, l) * eta.powi((a - l) as i32) * (1.0 - eta).powi(l as i32)).sqrt();
                for b in 0..dim1 {
                    out[idx(a - l, b)] += v[idx(a, b)] * w;
                }
            }
            out
        };
        let kp = apply(&psi);
        let kdp = apply(&dpsi);
        for i in 0..dim {
            for j in 0..dim {
                rho[(i, j)] += kp[i] * kp[j].conj();
                drho[(i, j)] += kdp[i] * kp[j].conj() + kp[i] * kdp[j].conj();
            }
        }
    }
    let eig = SymmetricEigen::new(rho);
    let vecs = eig.eigenvectors;
    let vals = eig.eigenvalues;
    let projected = vecs.adjoint() * drho * &vecs;
    let mut f = 0.0;
    for i in 0..dim {
        for j in 0..dim {
            let s = vals[i] + vals[j];
            if s < 1e-14 {
                continue;
            }
            f += 2.0 * projected[(i, j)].norm_sqr() / s;
        }
    }
    f
}

/// Same state, loss applied before the phase:
/// `rho = U (sum_l K_l |psi><psi| K_l^dag) U^dag`, `d rho = i [n_1, rho]`.
pub fn qfi_sld_oracle_loss_first(x: &[f64], eta: f64, phi: f64) -> f64 {
    let n_max = x.len() - 1;
    let dim1 = n_max + 1;
    let dim = dim1 * dim1;
    let idx = |a: usize, b: usize| a * dim1 + b;
    let zero = Complex64::new(0.0, 0.0);
    let mut psi = vec![zero; dim];
    for n in 0..=n_max {
        psi[idx(n, n_max - n)] = Complex64::new(x[n].sqrt(), 0.0);
    }
    let mut rho = DMatrix::from_element(dim, dim, zero);
    for l in 0..=n_max {
        let mut kp = vec![zero; dim];
        for a in l..dim1 {
            let w = (binomial(a, l) * eta.powi((a - l) as i32) * (1.0 - eta).powi(l as i32)).sqrt();
            for b in 0..dim1 {
                kp[idx(a - l, b)] += psi[idx(a, b)] * w;
            }
        }
        for i in 0..dim {
            for j in 0..dim {
                rho[(i, j)] += kp[i] * kp[j].conj();
            }
        }
    }
    let count = |i: usize| (i / dim1) as f64;
    let mut drho = DMatrix::from_element(dim, dim, zero);
    for i in 0..dim {
        for j in 0..dim {
            let u = Complex64::from_polar(1.0, phi * (count(i) - count(j)));
            rho[(i, j)] *= u;
            drho[(i, j)] = Complex64::new(0.0, count(i) - count(j)) * rho[(i, j)];
        }
    }
    let eig = SymmetricEigen::new(rho);
    let projected = eig.eigenvectors.adjoint() * drho * &eig.eigenvectors;
    let vals = eig.eigenvalues;
    let mut f = 0.0;
    for i in 0..dim {
        for j in 0..dim {
            let s = vals[i] + vals[j];
            if s >= 1e-14 {
                f += 2.0 * projected[(i, j)].norm_sqr() / s;
            }
        }
    }
    f
}

/// Random point of the simplex, uniform by normalized exponentials.
pub fn random_simplex<R: rand::Rng>(rng: &mut R, dim: usize) -> Vec<f64> {
    let e: Vec<f64> = (0..dim).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let s: f64 = e.iter().sum();
    e.iter().map(|v| v / s).collect()
}

/// Exhaustive enumeration of the simplex {x_i = k_i * step, sum = 1}.
pub fn simplex_grid<F: FnMut(&[f64])>(dim: usize, steps: usize, mut visit: F) {
    let mut counts = vec![0usize; dim];
    fn rec<F: FnMut(&[f64])>(pos: usize, left: usize, steps: usize, counts: &mut Vec<usize>, visit: &mut F) {
        let dim = counts.len();
        if pos == dim - 1 {
            counts[pos] = left;
            let x: Vec<f64> = counts.iter().map(|&c| c as f64 / steps as f64).collect();
            visit(&x);
            return;
        }
        for c in 0..=left {
            counts[pos] = c;
            rec(pos + 1, left - c, steps, counts, visit);
        }
    }
    rec(0, steps, steps, &mut counts, &mut visit);
}
