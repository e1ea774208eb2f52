//! Phase and refractive-index resolution: error propagation, quantum Fisher
//! information under loss in the sensing arm, optimal definite-N states and
//! the SNL/SIL/HL benchmarks.
//!
//! Loss is a beamsplitter of transmissivity `eta` in mode 1. For an input
//! `sum_n c_n |n, N-n>` with `x_n = |c_n|^2`,
//!
//! ```text
//! F_Q = 4 ( sum_n n^2 x_n - sum_l (sum_n n x_n B_l^n)^2 / (sum_n x_n B_l^n) )
//! B_l^n = C(n, l) eta^(n-l) (1-eta)^l
//! ```
//!
//! where `l` counts the photons lost. Divergent resolutions are `+inf`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use thiserror::Error;

/// Largest supported photon number.
pub const MAX_PHOTONS: usize = 60;
/// Allowed deviation of `sum x_n` from one.
pub const SIMPLEX_TOL: f64 = 1e-12;
pub const OPTIMIZER_MAX_ITER: usize = 100_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimationError {
    #[error("transmissivity must lie in (0, 1], got {0}")]
    InvalidTransmissivity(f64),
    #[error("photon number {0} outside [1, {MAX_PHOTONS}]")]
    InvalidPhotonNumber(usize),
    #[error("B coefficient needs 0 <= l <= n <= N, got n={n}, l={l}, N={photons}")]
    IndexDomain { n: usize, l: usize, photons: usize },
    #[error("invalid probability {value} at index {index}")]
    InvalidProbability { index: usize, value: f64 },
    #[error("probabilities sum to {0}, not 1")]
    NotNormalized(f64),
    #[error("second moment {second_moment} below squared mean {mean}^2")]
    NegativeVariance { mean: f64, second_moment: f64 },
    #[error("tolerance must be positive, got {0}")]
    InvalidTolerance(f64),
    #[error("optimizer stopped after {iterations} iterations with duality gap {gap:e}")]
    NotConverged {
        iterations: usize,
        gap: f64,
        best: Box<FisherResult>,
    },
}

pub type Result<T> = std::result::Result<T, EstimationError>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossChannel {
    eta: f64,
}

impl LossChannel {
    pub fn new(eta: f64) -> Result<Self> {
        check_eta(eta)?;
        Ok(LossChannel { eta })
    }

    pub fn lossless() -> Self {
        LossChannel { eta: 1.0 }
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }
}

/// Moments of an observable and the slope of its mean with respect to the
/// measured parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservableStats {
    pub mean: f64,
    pub second_moment: f64,
    pub slope: f64,
}

impl ObservableStats {
    /// Rejects a negative variance beyond rounding.
    pub fn new(mean: f64, second_moment: f64, slope: f64) -> Result<Self> {
        let tol = 1e-12 * second_moment.abs().max(1.0);
        if second_moment < mean * mean - tol {
            return Err(EstimationError::NegativeVariance { mean, second_moment });
        }
        Ok(ObservableStats {
            mean,
            second_moment,
            slope,
        })
    }

    pub fn variance(&self) -> f64 {
        (self.second_moment - self.mean * self.mean).max(0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FisherResult {
    pub qfi: f64,
    pub delta_phi: f64,
    pub x: Vec<f64>,
}

impl FisherResult {
    fn new(qfi: f64, x: Vec<f64>) -> Self {
        FisherResult {
            qfi,
            delta_phi: crb_delta_phi(qfi),
            x,
        }
    }
}

fn check_eta(eta: f64) -> Result<()> {
    if eta > 0.0 && eta <= 1.0 {
        Ok(())
    } else {
        Err(EstimationError::InvalidTransmissivity(eta))
    }
}

fn check_photons(photons: usize) -> Result<()> {
    if (1..=MAX_PHOTONS).contains(&photons) {
        Ok(())
    } else {
        Err(EstimationError::InvalidPhotonNumber(photons))
    }
}

/// Validates a probability vector of length `N + 1`.
pub fn check_distribution(x: &[f64]) -> Result<()> {
    check_photons(x.len().saturating_sub(1))?;
    if let Some((index, &value)) = x.iter().enumerate().find(|(_, v)| !(**v >= 0.0) || !v.is_finite()) {
        return Err(EstimationError::InvalidProbability { index, value });
    }
    let sum: f64 = x.iter().sum();
    if (sum - 1.0).abs() > SIMPLEX_TOL {
        return Err(EstimationError::NotNormalized(sum));
    }
    Ok(())
}

/// `Delta O / |d<O>/dn|`; `+inf` for a flat signal.
pub fn error_propagation(stats: &ObservableStats) -> f64 {
    if stats.slope == 0.0 {
        return f64::INFINITY;
    }
    stats.variance().sqrt() / stats.slope.abs()
}

/// `d<O>/dn = d<O>/dphi * dphi/dn`.
pub fn chain_sensitivity(d_mean_d_phi: f64, d_phi_d_n: f64) -> f64 {
    d_mean_d_phi * d_phi_d_n
}

/// `delta_phi / |dphi/dn|`; `+inf` for a zero slope.
pub fn delta_n_from_phi(delta_phi: f64, d_phi_d_n: f64) -> f64 {
    if d_phi_d_n == 0.0 || delta_phi.is_infinite() {
        return f64::INFINITY;
    }
    delta_phi / d_phi_d_n.abs()
}

fn ln_binomial(n: usize, k: usize) -> f64 {
    (0..k).map(|i| ((n - i) as f64 / (i + 1) as f64).ln()).sum()
}

// B_l^n in log space; eta = 1 handled exactly.
fn b_unchecked(n: usize, l: usize, eta: f64) -> f64 {
    if eta == 1.0 {
        return if l == 0 { 1.0 } else { 0.0 };
    }
    (ln_binomial(n, l) + (n - l) as f64 * eta.ln() + l as f64 * (-eta).ln_1p()).exp()
}

/// Probability that `l` of the `n` photons in the sensing arm are lost.
pub fn b_coefficient(n: usize, l: usize, photons: usize, eta: f64) -> Result<f64> {
    check_eta(eta)?;
    check_photons(photons)?;
    if l > n || n > photons {
        return Err(EstimationError::IndexDomain { n, l, photons });
    }
    Ok(b_unchecked(n, l, eta))
}

/// Table of `B_l^n` for one `(N, eta)`, indexed `[l][n]`.
#[derive(Debug, Clone)]
struct LossKernel {
    photons: usize,
    b: Vec<Vec<f64>>,
}

impl LossKernel {
    fn new(photons: usize, eta: f64) -> Self {
        let b = (0..=photons)
            .map(|l| {
                (0..=photons)
                    .map(|n| if n < l { 0.0 } else { b_unchecked(n, l, eta) })
                    .collect()
            })
            .collect();
        LossKernel { photons, b }
    }

    /// Hessian restricted to `support`, row-major:
    /// `-8 sum_l B_l^a B_l^b (a - m_l)(b - m_l) / P_l`.
    fn hessian(&self, x: &[f64], support: &[usize]) -> Vec<f64> {
        let k = support.len();
        let mut h = vec![0.0; k * k];
        for l in 0..=self.photons {
            let row = &self.b[l];
            let (mut p, mut s) = (0.0, 0.0);
            for n in l..=self.photons {
                p += x[n] * row[n];
                s += n as f64 * x[n] * row[n];
            }
            if p <= 0.0 {
                continue;
            }
            let m = s / p;
            let v: Vec<f64> = support.iter().map(|&a| row[a] * (a as f64 - m)).collect();
            for i in 0..k {
                for j in 0..k {
                    h[i * k + j] -= 8.0 * v[i] * v[j] / p;
                }
            }
        }
        h
    }

    fn qfi(&self, x: &[f64]) -> f64 {
        self.evaluate(x, None)
    }

    /// F_Q, and optionally its gradient
    /// `dF/dx_n = 4 sum_l B_l^n (n - m_l)^2`, `m_l = S_l / P_l`.
    ///
    /// Since `sum_l B_l^n = 1`, F_Q equals `4 sum_l sum_n x_n B_l^n (n - m_l)^2`,
    /// a sum of non-negative sector variances. That form is evaluated
    /// instead of the difference of two large sums, which cancels badly when
    /// the phase information is small.
    fn evaluate(&self, x: &[f64], mut grad: Option<&mut [f64]>) -> f64 {
        let big_n = self.photons;
        let mut f = 0.0;
        if let Some(g) = grad.as_deref_mut() {
            g.fill(0.0);
        }
        for l in 0..=big_n {
            let row = &self.b[l];
            let mut p = 0.0;
            let mut s = 0.0;
            for n in l..=big_n {
                let w = x[n] * row[n];
                p += w;
                s += n as f64 * w;
            }
            if p <= 0.0 {
                // Empty sector: the one-sided derivative along each x_n
                // vanishes as well.
                continue;
            }
            let m = s / p;
            for n in l..=big_n {
                let d = n as f64 - m;
                let t = row[n] * d * d;
                f += x[n] * t;
                if let Some(g) = grad.as_deref_mut() {
                    g[n] += t;
                }
            }
        }
        if let Some(g) = grad {
            for v in g.iter_mut() {
                *v *= 4.0;
            }
        }
        (4.0 * f).min((big_n * big_n) as f64)
    }
}

/// Quantum Fisher information of `sum_n sqrt(x_n) |n, N-n>` after the lossy
/// sensing arm.
pub fn qfi_definite_n(x: &[f64], eta: f64) -> Result<f64> {
    check_eta(eta)?;
    check_distribution(x)?;
    Ok(LossKernel::new(x.len() - 1, eta).qfi(x))
}

/// `2 N^2 eta^N / (1 + eta^N)`, the NOON-state value of `qfi_definite_n`.
pub fn noon_qfi(photons: usize, eta: f64) -> f64 {
    let t = eta.powi(photons as i32);
    2.0 * (photons * photons) as f64 * t / (1.0 + t)
}

/// `x_0 = x_N = 1/2`.
pub fn noon_distribution(photons: usize) -> Vec<f64> {
    let mut x = vec![0.0; photons + 1];
    x[0] = 0.5;
    x[photons] = 0.5;
    x
}

/// Maximizes F_Q over the probability simplex for fixed `N` and `eta`.
///
/// F_Q is concave in `x`. Rounds of exponentiated-gradient ascent find the
/// support of the optimum; Newton steps on that support then remove the
/// slow tail of the first-order method. The run stops once the Frank-Wolfe
/// gap `max_n g_n - <x, g>` (a strict bound on `F_max - qfi`) or the Newton
/// decrement certificate of the polish falls below `tol`.
pub fn optimize_input_state(photons: usize, eta: f64, tol: f64) -> Result<FisherResult> {
    check_photons(photons)?;
    check_eta(eta)?;
    if !(tol > 0.0) {
        return Err(EstimationError::InvalidTolerance(tol));
    }
    let kernel = LossKernel::new(photons, eta);
    let mut it = Iterate::new(&kernel, vec![1.0 / (photons + 1) as f64; photons + 1]);
    let mut step = 1.0 / (photons * photons) as f64;
    let mut iterations = 0;
    for _ in 0..OPTIMIZER_ROUNDS {
        iterations += exponentiated_gradient(&kernel, &mut it, &mut step, tol);
        if it.gap <= tol {
            return Ok(FisherResult::new(it.f, it.x));
        }
        let (spent, certified) = newton_polish(&kernel, &mut it, tol);
        iterations += spent;
        if certified {
            return Ok(FisherResult::new(it.f, it.x));
        }
        if iterations >= OPTIMIZER_MAX_ITER {
            break;
        }
    }
    Err(EstimationError::NotConverged {
        iterations,
        gap: it.gap,
        best: Box::new(FisherResult::new(it.f, it.x)),
    })
}

const OPTIMIZER_ROUNDS: usize = 50;
const EG_ROUND_ITER: usize = 2000;
const NEWTON_ITER: usize = 30;
const BACKTRACK_STEPS: usize = 30;
/// Coordinates below this weight are outside the Newton support.
const SUPPORT_FLOOR: f64 = 1e-10;

struct Iterate {
    x: Vec<f64>,
    g: Vec<f64>,
    f: f64,
    gap: f64,
}

impl Iterate {
    fn new(kernel: &LossKernel, x: Vec<f64>) -> Self {
        let mut g = vec![0.0; x.len()];
        let f = kernel.evaluate(&x, Some(&mut g));
        let g_max = g.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mean: f64 = x.iter().zip(&g).map(|(a, b)| a * b).sum();
        Iterate {
            x,
            g,
            f,
            gap: (g_max - mean).max(0.0),
        }
    }
}

// Multiplicative updates with step doubling on success and halving on
// failure. Returns the number of iterations spent.
fn exponentiated_gradient(kernel: &LossKernel, it: &mut Iterate, step: &mut f64, tol: f64) -> usize {
    let dim = it.x.len();
    let mut trial = vec![0.0; dim];
    for k in 0..EG_ROUND_ITER {
        if it.gap <= tol {
            return k;
        }
        let g_max = it.g.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        // The floor lets sectors that underflowed regain weight.
        for ((t, x), g) in trial.iter_mut().zip(&it.x).zip(&it.g) {
            *t = x.max(1e-300) * (*step * (g - g_max)).exp();
        }
        let z: f64 = trial.iter().sum();
        trial.iter_mut().for_each(|v| *v /= z);
        let next = Iterate::new(kernel, trial.clone());
        if next.f > it.f {
            *it = next;
            *step = (*step * 2.0).min(1e12);
        } else {
            *step *= 0.5;
            if *step < 1e-30 {
                *step = 1.0 / (kernel.photons * kernel.photons) as f64;
                return k + 1;
            }
        }
    }
    EG_ROUND_ITER
}

// Newton iteration on the face spanned by the current support, solving the
// reduced Newton system on the tangent space of the simplex.
//
// Returns the iterations spent and whether optimality is certified. The FW
// gap is first order in the distance to the optimum, so on a face with
// strong curvature it stalls far above the true deficit. The certificate
// used instead is the Newton decrement `-g^T H^+ g / 2` on the face, plus
// the gradient along flat directions and the gap to sectors off the face.
fn newton_polish(kernel: &LossKernel, it: &mut Iterate, tol: f64) -> (usize, bool) {
    for k in 0..NEWTON_ITER {
        if it.gap <= tol {
            return (k, true);
        }
        // Sectors already carrying weight, plus those the gradient asks for.
        let mean: f64 = it.x.iter().zip(&it.g).map(|(a, b)| a * b).sum();
        let support: Vec<usize> = (0..it.x.len())
            .filter(|&n| it.x[n] > SUPPORT_FLOOR || it.g[n] > mean + tol)
            .collect();
        let m = support.len();
        if m < 2 {
            return (k, false);
        }
        // Tangent directions of the face: d = Z y with Z = [I; -1^T], so the
        // last support coordinate absorbs the normalization.
        let h = DMatrix::from_row_slice(m, m, &kernel.hessian(&it.x, &support));
        let mut z = DMatrix::zeros(m, m - 1);
        for i in 0..m - 1 {
            z[(i, i)] = 1.0;
            z[(m - 1, i)] = -1.0;
        }
        let g = DVector::from_iterator(m, support.iter().map(|&n| it.g[n]));
        let reduced = z.transpose() * &h * &z;
        let rg = z.transpose() * g;
        // Pseudo-inverse over the strictly concave directions only.
        let eig = SymmetricEigen::new(reduced);
        let cutoff = 1e-13 * eig.eigenvalues.amax().max(f64::MIN_POSITIVE);
        let mut y = DVector::zeros(m - 1);
        let mut certificate = 0.0;
        for (j, &lambda) in eig.eigenvalues.iter().enumerate() {
            let v = eig.eigenvectors.column(j);
            let c = v.dot(&rg);
            if lambda < -cutoff {
                y -= v * (c / lambda);
                certificate += 0.5 * c * c / -lambda;
            } else {
                certificate += c.abs();
            }
        }
        let outside = (0..it.x.len())
            .filter(|n| !support.contains(n))
            .map(|n| it.g[n] - mean)
            .fold(0.0f64, f64::max);
        if certificate + outside <= tol && support.iter().all(|&n| it.x[n] > 0.0) {
            return (k, true);
        }
        let d = z * y;
        // Longest step keeping x non-negative, capped at the full step.
        let mut alpha: f64 = 1.0;
        for i in 0..m {
            if d[i] < 0.0 && it.x[support[i]] > SUPPORT_FLOOR {
                alpha = alpha.min(-it.x[support[i]] / d[i]);
            }
        }
        // Backtracking: near the optimum F is flat to rounding, so the gap
        // also counts as progress.
        let slack = 4.0 * f64::EPSILON * it.f.abs().max(1.0);
        let mut accepted = false;
        for _ in 0..BACKTRACK_STEPS {
            let mut x = vec![0.0; it.x.len()];
            for i in 0..m {
                x[support[i]] = (it.x[support[i]] + alpha * d[i]).max(0.0);
            }
            let z: f64 = x.iter().sum();
            x.iter_mut().for_each(|v| *v /= z);
            let next = Iterate::new(kernel, x);
            if next.f > it.f || (next.f >= it.f - slack && next.gap < it.gap) {
                *it = next;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            return (k + 1, false);
        }
    }
    (NEWTON_ITER, false)
}

/// Cramer-Rao phase resolution `F_Q^{-1/2}`; `+inf` when `F_Q = 0`.
pub fn crb_delta_phi(qfi: f64) -> f64 {
    if qfi > 0.0 {
        1.0 / qfi.sqrt()
    } else {
        f64::INFINITY
    }
}

/// `1/sqrt(N)`.
pub fn snl_delta_phi(photons: usize) -> f64 {
    1.0 / (photons as f64).sqrt()
}

/// `1/N`.
pub fn hl_delta_phi(photons: usize) -> f64 {
    1.0 / photons as f64
}

/// `(1 + sqrt(eta)) / (2 sqrt(N eta))`, the best phase resolution of a
/// coherent probe behind an optimally unbalanced beamsplitter.
pub fn sil_delta_phi(photons: usize, eta: f64) -> f64 {
    (1.0 + eta.sqrt()) / (2.0 * (photons as f64 * eta).sqrt())
}

pub fn snl_delta_n(photons: usize, d_phi_d_n: f64) -> f64 {
    delta_n_from_phi(snl_delta_phi(photons), d_phi_d_n)
}

pub fn hl_delta_n(photons: usize, d_phi_d_n: f64) -> f64 {
    delta_n_from_phi(hl_delta_phi(photons), d_phi_d_n)
}

pub fn sil_delta_n(photons: usize, eta: f64, d_phi_d_n: f64) -> f64 {
    delta_n_from_phi(sil_delta_phi(photons, eta), d_phi_d_n)
}

/// `delta_n_SIL - delta_n_HL = (1/sqrt(N)) ((1 + sqrt(eta))/(2 sqrt(eta)) - 1/sqrt(N)) / |dphi/dn|`.
pub fn sil_hl_gap(photons: usize, eta: f64, d_phi_d_n: f64) -> f64 {
    let rn = (photons as f64).sqrt();
    let inner = (1.0 + eta.sqrt()) / (2.0 * eta.sqrt()) - 1.0 / rn;
    delta_n_from_phi(inner / rn, d_phi_d_n)
}
