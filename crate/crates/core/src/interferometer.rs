//! Two-mode Mach-Zehnder algebra for coherent and definite-photon-number
//! inputs.
//!
//! Mode 1 carries the sensing arm: a state `sum_n c_n |n, N-n>` picks up
//! `e^{i n phi}` on propagation. Coherent probes are handled in closed form
//! and never expanded in a Fock basis.

use num_complex::Complex64;
use std::f64::consts::FRAC_1_SQRT_2;
use thiserror::Error;

/// Allowed deviation of `sum |c_n|^2` from one.
pub const NORMALIZATION_TOL: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum InterferometerError {
    #[error("photon number must be at least 1")]
    NoPhotons,
    #[error("state is not normalized: sum of probabilities = {0}")]
    NotNormalized(f64),
    #[error("invalid probability {value} at index {index}")]
    InvalidProbability { index: usize, value: f64 },
    #[error("non-finite amplitude or phase")]
    NonFinite,
}

pub type Result<T> = std::result::Result<T, InterferometerError>;

/// Coherent state `|alpha>` in mode 1, vacuum in mode 2, ahead of the first
/// beamsplitter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherentProbe {
    alpha: Complex64,
}

impl CoherentProbe {
    pub fn new(alpha: Complex64) -> Result<Self> {
        if !alpha.re.is_finite() || !alpha.im.is_finite() {
            return Err(InterferometerError::NonFinite);
        }
        Ok(CoherentProbe { alpha })
    }

    /// Real amplitude `sqrt(N)`.
    pub fn with_mean_photons(n: f64) -> Result<Self> {
        if !(n >= 0.0) || !n.is_finite() {
            return Err(InterferometerError::NonFinite);
        }
        Self::new(Complex64::new(n.sqrt(), 0.0))
    }

    pub fn alpha(&self) -> Complex64 {
        self.alpha
    }

    pub fn mean_photons(&self) -> f64 {
        self.alpha.norm_sqr()
    }
}

/// Relative phase `phi = beta l` accumulated in the sensing arm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseSetting(f64);

impl PhaseSetting {
    pub fn new(phi: f64) -> Result<Self> {
        if !phi.is_finite() {
            return Err(InterferometerError::NonFinite);
        }
        Ok(PhaseSetting(phi))
    }

    pub fn phi(&self) -> f64 {
        self.0
    }
}

/// `sum_n c_n |n, N-n>` with `N + 1` coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct DefiniteNState {
    coeffs: Vec<Complex64>,
}

impl DefiniteNState {
    pub fn new(coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() < 2 {
            return Err(InterferometerError::NoPhotons);
        }
        if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(InterferometerError::NonFinite);
        }
        let sum: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum();
        if (sum - 1.0).abs() > NORMALIZATION_TOL {
            return Err(InterferometerError::NotNormalized(sum));
        }
        Ok(DefiniteNState { coeffs })
    }

    /// Real non-negative amplitudes `c_n = sqrt(x_n)`.
    pub fn from_probabilities(x: &[f64]) -> Result<Self> {
        if let Some((index, &value)) = x.iter().enumerate().find(|(_, v)| !(**v >= 0.0) || !v.is_finite()) {
            return Err(InterferometerError::InvalidProbability { index, value });
        }
        Self::new(x.iter().map(|&p| Complex64::new(p.sqrt(), 0.0)).collect())
    }

    /// `(|N,0> + |0,N>)/sqrt(2)`.
    pub fn noon(photons: usize) -> Result<Self> {
        if photons == 0 {
            return Err(InterferometerError::NoPhotons);
        }
        let mut coeffs = vec![Complex64::new(0.0, 0.0); photons + 1];
        coeffs[0] = Complex64::new(FRAC_1_SQRT_2, 0.0);
        coeffs[photons] = Complex64::new(FRAC_1_SQRT_2, 0.0);
        Self::new(coeffs)
    }

    pub fn photons(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.coeffs.iter().map(|c| c.norm_sqr()).collect()
    }

    /// The state after the sensing arm: `c_n -> c_n e^{i n phi}`.
    pub fn propagate(&self, phase: PhaseSetting) -> DefiniteNState {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(n, c)| c * Complex64::from_polar(1.0, n as f64 * phase.phi()))
            .collect();
        DefiniteNState { coeffs }
    }

    /// `<A>` for `A = |0,N><N,0| + |N,0><0,N|` after the sensing arm.
    pub fn expectation_a(&self, phase: PhaseSetting) -> f64 {
        let out = self.propagate(phase);
        let (c0, cn) = (out.coeffs[0], out.coeffs[self.photons()]);
        2.0 * (c0.conj() * cn).re
    }

    /// `<A^2>`; `A^2` projects onto `|0,N>` and `|N,0>`.
    pub fn second_moment_a(&self) -> f64 {
        self.coeffs[0].norm_sqr() + self.coeffs[self.photons()].norm_sqr()
    }
}

/// Output amplitudes of a balanced MZ fed with `|alpha, 0>`:
/// `(alpha (e^{i phi} - 1)/2, i alpha (e^{i phi} + 1)/2)`.
pub fn mz_coherent_output(probe: &CoherentProbe, phase: PhaseSetting) -> (Complex64, Complex64) {
    let e = Complex64::from_polar(1.0, phase.phi());
    let a = probe.alpha;
    (0.5 * a * (e - 1.0), Complex64::i() * 0.5 * a * (e + 1.0))
}

/// `<M> = <n2> - <n1> = |alpha|^2 cos(phi)`.
pub fn expectation_m(probe: &CoherentProbe, phase: PhaseSetting) -> f64 {
    probe.mean_photons() * phase.phi().cos()
}

/// `<M>` evaluated from the output amplitudes.
pub fn intensity_difference(probe: &CoherentProbe, phase: PhaseSetting) -> f64 {
    let (a1, a2) = mz_coherent_output(probe, phase);
    a2.norm_sqr() - a1.norm_sqr()
}

/// `<M^2>` from the output amplitudes. The two outputs are independent
/// coherent states, so `Var(M) = <n1> + <n2>`.
pub fn second_moment_m(probe: &CoherentProbe, phase: PhaseSetting) -> f64 {
    let (a1, a2) = mz_coherent_output(probe, phase);
    let (n1, n2) = (a1.norm_sqr(), a2.norm_sqr());
    n1 + n2 + (n2 - n1) * (n2 - n1)
}

/// `<A> = cos(N phi)` for the NOON state.
pub fn expectation_a(photons: usize, phase: PhaseSetting) -> f64 {
    (photons as f64 * phase.phi()).cos()
}

/// `1/(|alpha| |sin phi|)`; `+inf` at the fringe extrema.
pub fn delta_phi_coherent(probe: &CoherentProbe, phase: PhaseSetting) -> f64 {
    let d = probe.alpha.norm() * phase.phi().sin().abs();
    if d == 0.0 {
        f64::INFINITY
    } else {
        1.0 / d
    }
}

/// `1/N`, independent of the bias phase.
pub fn delta_phi_noon(photons: usize) -> f64 {
    1.0 / photons as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn ph(phi: f64) -> PhaseSetting {
        PhaseSetting::new(phi).unwrap()
    }

    #[test]
    fn output_at_zero_and_pi() {
        let alpha = Complex64::new(1.3, -0.4);
        let p = CoherentProbe::new(alpha).unwrap();
        let (a, b) = mz_coherent_output(&p, ph(0.0));
        assert_eq!(a, Complex64::new(0.0, 0.0));
        assert!((b - Complex64::i() * alpha).norm() < 1e-15);
        let (a, b) = mz_coherent_output(&p, ph(PI));
        assert!((a + alpha).norm() < 1e-15);
        assert!(b.norm() < 1e-15);
    }

    #[test]
    fn coherent_examples() {
        let p = CoherentProbe::with_mean_photons(4.0).unwrap();
        assert_eq!(expectation_m(&p, ph(0.0)), 4.0);
        assert!(expectation_m(&p, ph(PI / 2.0)).abs() < 1e-15);
        assert!((delta_phi_coherent(&p, ph(PI / 2.0)) - 0.5).abs() < 1e-15);
        assert!((delta_phi_coherent(&p, ph(PI / 6.0)) - 1.0).abs() < 1e-15);
        assert_eq!(delta_phi_coherent(&p, ph(0.0)), f64::INFINITY);
    }

    #[test]
    fn noon_examples() {
        assert_eq!(expectation_a(4, ph(0.0)), 1.0);
        assert!((expectation_a(4, ph(PI / 4.0)) + 1.0).abs() < 1e-15);
        assert_eq!(delta_phi_noon(4), 0.25);
        assert_eq!(delta_phi_noon(1), 1.0);
        assert_eq!(delta_phi_noon(16), 0.0625);
        let s = DefiniteNState::noon(4).unwrap();
        let x = s.probabilities();
        assert!((x[0] - 0.5).abs() < 1e-15 && (x[4] - 0.5).abs() < 1e-15);
        assert!(x[1..4].iter().all(|&v| v == 0.0));
        assert!((s.expectation_a(ph(0.3)) - (1.2f64).cos()).abs() < 1e-15);
        assert!((s.second_moment_a() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_states() {
        assert_eq!(DefiniteNState::noon(0), Err(InterferometerError::NoPhotons));
        assert!(matches!(
            DefiniteNState::from_probabilities(&[0.5, 0.4]),
            Err(InterferometerError::NotNormalized(_))
        ));
        assert!(matches!(
            DefiniteNState::from_probabilities(&[1.5, -0.5]),
            Err(InterferometerError::InvalidProbability { index: 1, .. })
        ));
        assert!(PhaseSetting::new(f64::NAN).is_err());
    }
}
