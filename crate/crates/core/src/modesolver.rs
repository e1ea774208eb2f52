//! Guided modes of circular nanowires.
//!
//! Two characteristic equations are solved for the complex wavenumber `k`:
//!
//! * metal core, lowest-order plasmonic TM mode:
//!   `(eps_m/k_m) I1(k_m r)/I0(k_m r) + (eps_c/k_c) K1(k_c r)/K0(k_c r) = 0`
//!   with `k_m = k0 sqrt(n^2 - eps_m)`, `k_c = k0 sqrt(n^2 - eps_c)`;
//! * dielectric core, fundamental LP01 mode:
//!   `u J1(u)/J0(u) - w K1(w)/K0(w) = 0`, `u = k_d r`, `w = k_c r`,
//!   `k_d = k0 sqrt(eps_d - n^2)`.
//!
//! Here `n = k/k0` is the effective index. Lengths are in nm and
//! wavenumbers in rad/nm throughout.

use crate::materials::{MaterialError, MaterialModel};
use crate::specfun::{self, SpecFunError};
use num_complex::Complex64;
use std::f64::consts::PI;
use std::fmt;
use std::path::Path;
use thiserror::Error;

/// Lower edge of the TM0 scan window is `n_clad + SCAN_OFFSET`.
pub const SCAN_OFFSET: f64 = 1e-6;
/// Upper edge of the TM0 scan window (effective index).
pub const SCAN_MAX_NEFF: f64 = 4.0;
pub const SCAN_POINTS: usize = 400;
pub const NEWTON_MAX_ITER: usize = 100;
pub const NEWTON_TOL: f64 = 1e-12;
pub const NEWTON_FD_STEP: f64 = 1e-8;
/// Accepted normalized residual at a returned root.
pub const RESIDUAL_TOL: f64 = 1e-10;
/// Default finite-difference step for `d beta / d n_bio`, RIU.
pub const DEFAULT_FD_STEP: f64 = 1e-5;
/// Largest tolerated relative change of the slope when the step is halved.
pub const RICHARDSON_TOL: f64 = 1e-4;
/// First zero of J0; the single-mode cutoff of a step-index wire.
pub const SINGLE_MODE_V: f64 = 2.405;

#[derive(Debug, Error)]
pub enum ModeError {
    #[error(transparent)]
    Material(#[from] MaterialError),
    #[error("residual evaluation failed: {0}")]
    Residual(#[from] SpecFunError),
    #[error("invalid waveguide: {0}")]
    InvalidSpec(String),
    #[error("operation requires a {expected} core")]
    WrongCoreKind { expected: CoreKind },
    #[error("no guided mode found for n_clad = {n_clad}")]
    NoRoot { n_clad: f64 },
    #[error("Newton iteration did not converge after {iterations} steps (last n_eff = {last})")]
    NotConverged { iterations: usize, last: Complex64 },
    #[error("root n_eff = {n_eff} is not a bound, decaying mode")]
    Unphysical { n_eff: Complex64 },
    #[error("slope unstable under step halving: {coarse} vs {fine}")]
    DerivativeUnstable { coarse: f64, fine: f64 },
    #[error("n_bio = {n_bio} outside [{min}, {max}]")]
    OutOfRange { n_bio: f64, min: f64, max: f64 },
    #[error("dispersion table line {line}: {msg}")]
    TableParse { line: usize, msg: String },
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, ModeError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoreKind {
    Metal,
    Dielectric,
}

impl fmt::Display for CoreKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CoreKind::Metal => "metal",
            CoreKind::Dielectric => "dielectric",
        })
    }
}

/// Circular wire of radius `r` in a homogeneous cladding.
#[derive(Debug, Clone, PartialEq)]
pub struct NanowireSpec {
    core_kind: CoreKind,
    radius: f64,
    core: MaterialModel,
    n_clad: f64,
    lambda0: f64,
    length: f64,
}

impl NanowireSpec {
    pub fn new(
        core_kind: CoreKind,
        radius: f64,
        core: MaterialModel,
        n_clad: f64,
        lambda0: f64,
        length: f64,
    ) -> Result<Self> {
        for (name, v) in [
            ("radius", radius),
            ("lambda0", lambda0),
            ("length", length),
            ("n_clad", n_clad),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ModeError::InvalidSpec(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(NanowireSpec {
            core_kind,
            radius,
            core,
            n_clad,
            lambda0,
            length,
        })
    }

    pub fn core_kind(&self) -> CoreKind {
        self.core_kind
    }
    pub fn radius(&self) -> f64 {
        self.radius
    }
    pub fn core(&self) -> &MaterialModel {
        &self.core
    }
    pub fn n_clad(&self) -> f64 {
        self.n_clad
    }
    pub fn lambda0(&self) -> f64 {
        self.lambda0
    }
    pub fn length(&self) -> f64 {
        self.length
    }

    /// Free-space wavenumber `2 pi / lambda0`, rad/nm.
    pub fn k0(&self) -> f64 {
        2.0 * PI / self.lambda0
    }

    /// Same wire in a different cladding.
    pub fn with_cladding(&self, n_clad: f64) -> Result<Self> {
        let mut out = self.clone();
        if !(n_clad > 0.0 && n_clad.is_finite()) {
            return Err(ModeError::InvalidSpec(format!("n_clad must be positive, got {n_clad}")));
        }
        out.n_clad = n_clad;
        Ok(out)
    }

    pub fn with_radius(&self, radius: f64) -> Result<Self> {
        Self::new(
            self.core_kind,
            radius,
            self.core.clone(),
            self.n_clad,
            self.lambda0,
            self.length,
        )
    }

    pub fn core_permittivity(&self) -> Result<Complex64> {
        Ok(self.core.permittivity(self.lambda0)?)
    }

    /// Real core index of a dielectric wire.
    pub fn core_index(&self) -> Result<f64> {
        Ok(self.core_permittivity()?.re.max(0.0).sqrt())
    }

    /// Solves for the guided mode appropriate to the core kind.
    pub fn solve(&self, seed: Option<Complex64>) -> Result<ModeSolution> {
        match self.core_kind {
            CoreKind::Metal => solve_tm0(self, seed),
            CoreKind::Dielectric => solve_lp01(self),
        }
    }
}

/// A solved guided mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeSolution {
    /// Complex wavenumber, rad/nm.
    pub k: Complex64,
    /// Propagation constant `Re k`, rad/nm.
    pub beta: f64,
    /// Attenuation `Im k`, 1/nm.
    pub kappa: f64,
    pub n_eff: Complex64,
    /// Normalized characteristic-equation residual at `k`.
    pub residual: f64,
    /// Transverse core argument (`k_m r` or `k_d r`), when solved.
    pub core_arg: Option<Complex64>,
    /// Transverse cladding argument `k_clad r`, when solved.
    pub clad_arg: Option<Complex64>,
}

impl ModeSolution {
    fn from_neff(n_eff: Complex64, k0: f64, residual: f64) -> Self {
        let k = n_eff * k0;
        ModeSolution {
            k,
            beta: k.re,
            kappa: k.im,
            n_eff,
            residual,
            core_arg: None,
            clad_arg: None,
        }
    }
}

/// Square root with `Re >= 0`, and `Im >= 0` on the imaginary axis.
fn branch_sqrt(z: Complex64) -> Complex64 {
    let s = z.sqrt();
    if s.re < 0.0 || (s.re == 0.0 && s.im < 0.0) {
        -s
    } else {
        s
    }
}

struct Tm0Equation {
    eps_m: Complex64,
    eps_c: f64,
    k0: f64,
    radius: f64,
}

impl Tm0Equation {
    fn new(spec: &NanowireSpec, lossless: bool) -> Result<Self> {
        let mut eps_m = spec.core_permittivity()?;
        if lossless {
            eps_m.im = 0.0;
        }
        Ok(Tm0Equation {
            eps_m,
            eps_c: spec.n_clad * spec.n_clad,
            k0: spec.k0(),
            radius: spec.radius,
        })
    }

    fn args(&self, n: Complex64) -> (Complex64, Complex64) {
        let km = branch_sqrt(n * n - self.eps_m) * self.k0;
        let kc = branch_sqrt(n * n - self.eps_c) * self.k0;
        (km, kc)
    }

    /// LHS value (nm) and its normalization `|eps_m / k_m|`.
    fn eval(&self, n: Complex64) -> Result<(Complex64, f64)> {
        let (km, kc) = self.args(n);
        let core = self.eps_m / km * specfun::ratio_i1_i0(km * self.radius)?;
        let clad = self.eps_c / kc * specfun::ratio_k1_k0(kc * self.radius)?;
        Ok((core + clad, (self.eps_m / km).norm()))
    }

    fn real_residual(&self, n: f64) -> Result<f64> {
        Ok(self.eval(Complex64::new(n, 0.0))?.0.re)
    }
}

/// LHS of the TM0 characteristic equation at wavenumber `k` (rad/nm).
pub fn tm0_residual(k: Complex64, spec: &NanowireSpec) -> Result<Complex64> {
    if spec.core_kind != CoreKind::Metal {
        return Err(ModeError::WrongCoreKind {
            expected: CoreKind::Metal,
        });
    }
    let eq = Tm0Equation::new(spec, false)?;
    Ok(eq.eval(k / eq.k0)?.0)
}

/// Brent's method on a sign-changing bracket.
fn brent<F>(mut f: F, mut a: f64, mut b: f64, mut fa: f64, mut fb: f64, xtol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.abs() < fb.abs() {
        std::mem::swap(&mut a, &mut b);
        std::mem::swap(&mut fa, &mut fb);
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..200 {
        if fb == 0.0 {
            return Ok(b);
        }
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b)?;
    }
    Ok(b)
}

fn lossless_root_scan(eq: &Tm0Equation, n_clad: f64) -> Result<f64> {
    let lo = n_clad + SCAN_OFFSET;
    let hi = SCAN_MAX_NEFF;
    if lo >= hi {
        return Err(ModeError::NoRoot { n_clad });
    }
    let step = (hi - lo) / (SCAN_POINTS - 1) as f64;
    let samples: Vec<(f64, f64)> = (0..SCAN_POINTS)
        .map(|i| {
            let n = if i == SCAN_POINTS - 1 { hi } else { lo + step * i as f64 };
            eq.real_residual(n).map(|f| (n, f))
        })
        .collect::<Result<_>>()?;
    // Largest effective index first: the lowest-order mode.
    for w in samples.windows(2).rev() {
        let ((a, fa), (b, fb)) = (w[0], w[1]);
        if fa.signum() != fb.signum() && fa.is_finite() && fb.is_finite() {
            let root = brent(|n| eq.real_residual(n), a, b, fa, fb, 1e-15)?;
            let (res, scale) = eq.eval(Complex64::new(root, 0.0))?;
            if res.norm() <= RESIDUAL_TOL * scale {
                return Ok(root);
            }
        }
    }
    Err(ModeError::NoRoot { n_clad })
}

/// Local bracket search outward from `seed`.
fn lossless_root_near(eq: &Tm0Equation, n_clad: f64, seed: f64) -> Result<f64> {
    let lo_limit = n_clad + SCAN_OFFSET;
    let f0 = eq.real_residual(seed)?;
    let mut delta = 1e-4;
    while delta < 0.5 {
        for b in [seed + delta, seed - delta] {
            if b <= lo_limit || b > SCAN_MAX_NEFF {
                continue;
            }
            let fb = eq.real_residual(b)?;
            if fb.signum() != f0.signum() {
                let (lo, hi, flo, fhi) = if b < seed { (b, seed, fb, f0) } else { (seed, b, f0, fb) };
                let root = brent(|n| eq.real_residual(n), lo, hi, flo, fhi, 1e-15)?;
                let (res, scale) = eq.eval(Complex64::new(root, 0.0))?;
                if res.norm() <= RESIDUAL_TOL * scale {
                    return Ok(root);
                }
            }
        }
        delta *= 4.0;
    }
    Err(ModeError::NoRoot { n_clad })
}

fn newton_complex(eq: &Tm0Equation, start: Complex64) -> Result<Complex64> {
    let mut n = start;
    for _ in 0..NEWTON_MAX_ITER {
        let h = NEWTON_FD_STEP;
        let f = eq.eval(n)?.0;
        let df = (eq.eval(n + h)?.0 - eq.eval(n - h)?.0) / (2.0 * h);
        let dn = f / df;
        n -= dn;
        if !(n.re.is_finite() && n.im.is_finite()) {
            break;
        }
        if dn.norm() < NEWTON_TOL {
            return Ok(n);
        }
    }
    Err(ModeError::NotConverged {
        iterations: NEWTON_MAX_ITER,
        last: n,
    })
}

fn finish_tm0(eq: &Tm0Equation, n_eff: Complex64) -> Result<ModeSolution> {
    let (res, scale) = eq.eval(n_eff)?;
    let (km, kc) = eq.args(n_eff);
    if n_eff.re <= 0.0 || n_eff.im < 0.0 || kc.re <= 0.0 {
        return Err(ModeError::Unphysical { n_eff });
    }
    let residual = res.norm() / scale;
    if residual > RESIDUAL_TOL {
        return Err(ModeError::NotConverged {
            iterations: NEWTON_MAX_ITER,
            last: n_eff,
        });
    }
    let mut sol = ModeSolution::from_neff(n_eff, eq.k0, residual);
    sol.core_arg = Some(km * eq.radius);
    sol.clad_arg = Some(kc * eq.radius);
    Ok(sol)
}

/// Plasmonic TM0 mode of a metal wire.
///
/// The lossless equation (real `eps_m`) is bracketed on a fixed scan of the
/// effective index and refined with Brent's method; with loss enabled the
/// lossless root seeds a complex Newton iteration. A `seed` (effective index)
/// replaces the scan with a local search and falls back to it on failure.
pub fn solve_tm0(spec: &NanowireSpec, seed: Option<Complex64>) -> Result<ModeSolution> {
    if spec.core_kind != CoreKind::Metal {
        return Err(ModeError::WrongCoreKind {
            expected: CoreKind::Metal,
        });
    }
    let lossless_eq = Tm0Equation::new(spec, true)?;
    let lossy = spec.core_permittivity()?.im != 0.0;

    if let Some(seed) = seed {
        let attempt = if lossy {
            let eq = Tm0Equation::new(spec, false)?;
            newton_complex(&eq, seed).and_then(|n| finish_tm0(&eq, n))
        } else {
            lossless_root_near(&lossless_eq, spec.n_clad, seed.re)
                .and_then(|n| finish_tm0(&lossless_eq, Complex64::new(n, 0.0)))
        };
        if attempt.is_ok() {
            return attempt;
        }
    }

    let real_root = lossless_root_scan(&lossless_eq, spec.n_clad)?;
    if !lossy {
        return finish_tm0(&lossless_eq, Complex64::new(real_root, 0.0));
    }
    let eq = Tm0Equation::new(spec, false)?;
    let n = newton_complex(&eq, Complex64::new(real_root, 0.0))?;
    finish_tm0(&eq, n)
}

struct Lp01Equation {
    v: f64,
}

impl Lp01Equation {
    /// `u J1(u)/J0(u) - w K1(w)/K0(w)` and the larger of the two magnitudes.
    fn eval(&self, w: f64) -> Result<(f64, f64)> {
        let u = (self.v * self.v - w * w).max(0.0).sqrt();
        let (j0, j1) = specfun::j01(u);
        let core = if u == 0.0 { 0.0 } else { u * j1 / j0 };
        let clad = w * specfun::ratio_k1_k0(Complex64::new(w, 0.0))?.re;
        Ok((core - clad, core.abs().max(clad.abs())))
    }
}

/// LP01 residual `u J1(u)/J0(u) - w K1(w)/K0(w)` at a real effective index.
pub fn lp01_residual(n_eff: f64, spec: &NanowireSpec) -> Result<f64> {
    if spec.core_kind != CoreKind::Dielectric {
        return Err(ModeError::WrongCoreKind {
            expected: CoreKind::Dielectric,
        });
    }
    let n_core = spec.core_index()?;
    let kr = spec.k0() * spec.radius;
    let u = kr * (n_core * n_core - n_eff * n_eff).max(0.0).sqrt();
    let w = kr * (n_eff * n_eff - spec.n_clad * spec.n_clad).max(0.0).sqrt();
    let (j0, j1) = specfun::j01(u);
    let core = if u == 0.0 { 0.0 } else { u * j1 / j0 };
    let clad = if w == 0.0 {
        0.0
    } else {
        w * specfun::ratio_k1_k0(Complex64::new(w, 0.0))?.re
    };
    Ok(core - clad)
}

/// Smallest cladding argument probed by the LP01 scan.
const LP01_W_MIN: f64 = 1e-300;
const LP01_SCAN_POINTS: usize = 1200;
const LP01_LINEAR_POINTS: usize = 400;
const LP01_LINEAR_FLOOR: f64 = 1e-3;
const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Fundamental LP01 mode of a dielectric wire.
///
/// Solved in the cladding argument `w = k_clad r` on a logarithmic scale:
/// for thin wires the mode sits exponentially close to the cladding index.
pub fn solve_lp01(spec: &NanowireSpec) -> Result<ModeSolution> {
    if spec.core_kind != CoreKind::Dielectric {
        return Err(ModeError::WrongCoreKind {
            expected: CoreKind::Dielectric,
        });
    }
    let n_core = spec.core_index()?;
    let n_clad = spec.n_clad;
    if n_core <= n_clad {
        return Err(ModeError::NoRoot { n_clad });
    }
    let kr = spec.k0() * spec.radius;
    let v = kr * ((n_core - n_clad) * (n_core + n_clad)).sqrt();
    let eq = Lp01Equation { v };

    // s = ln(w), scanned from just below V downwards: linear in w first so
    // the poles of J1/J0 are resolved, then logarithmic towards cutoff.
    let s_hi = v.ln() + (-1e-12f64).ln_1p();
    let s_mid = (v * LP01_LINEAR_FLOOR).ln();
    let s_lo = LP01_W_MIN.ln();
    let linear = (0..LP01_LINEAR_POINTS).map(|i| {
        let t = i as f64 / LP01_LINEAR_POINTS as f64;
        (s_hi.exp() * (1.0 - t) + v * LP01_LINEAR_FLOOR * t).ln()
    });
    let logarithmic = (0..LP01_SCAN_POINTS).map(|i| s_mid - (s_mid - s_lo) * i as f64 / (LP01_SCAN_POINTS - 1) as f64);
    let f = |s: f64| eq.eval(s.exp()).map(|(r, _)| r);
    let mut prev: Option<(f64, f64)> = None;
    let mut root = None;
    for s in linear.chain(logarithmic) {
        let cur = (s, f(s)?);
        if let Some(prev) = prev {
            if cur.1.signum() != prev.1.signum() && cur.1.is_finite() && prev.1.is_finite() {
                let r = brent(f, cur.0, prev.0, cur.1, prev.1, 1e-15)?;
                let (res, scale) = eq.eval(r.exp())?;
                // Sign changes across the poles of J1/J0 are rejected here.
                if res.abs() <= RESIDUAL_TOL * scale.max(1e-300) {
                    root = Some((r.exp(), res.abs() / scale.max(1e-300)));
                    break;
                }
            }
        }
        prev = Some(cur);
    }
    if root.is_none() && prev.is_some_and(|p| p.1 < 0.0) {
        // Below the smallest representable scan point the small-argument
        // form w K1/K0 = 1/(ln(2/w) - gamma) is exact to O(w^2 ln w).
        let (j0, j1) = specfun::j01(v);
        let core = v * j1 / j0;
        if core > 0.0 {
            let ln_w = std::f64::consts::LN_2 - EULER_GAMMA - 1.0 / core;
            root = Some((ln_w.exp(), 0.0));
        }
    }
    let (w, residual) = root.ok_or(ModeError::NoRoot { n_clad })?;
    let u = (v * v - w * w).max(0.0).sqrt();
    // n_eff^2 = n_clad^2 + (w/kr)^2, kept accurate when w/kr is tiny.
    let q = (w / kr) * (w / kr);
    let n_eff = n_clad + q / (n_clad + (n_clad * n_clad + q).sqrt());
    let mut sol = ModeSolution::from_neff(Complex64::new(n_eff, 0.0), spec.k0(), residual);
    sol.core_arg = Some(Complex64::new(u, 0.0));
    sol.clad_arg = Some(Complex64::new(w, 0.0));
    Ok(sol)
}

/// Whether only the fundamental mode is guided: `sqrt(u^2 + w^2) < 2.405`
/// at the solved mode. Non-guiding configurations report `false`.
pub fn single_mode_check(spec: &NanowireSpec, mode: &ModeSolution) -> bool {
    if spec.core_kind != CoreKind::Dielectric {
        return false;
    }
    let n_core = match spec.core_index() {
        Ok(n) => n,
        Err(_) => return false,
    };
    if n_core <= spec.n_clad {
        return false;
    }
    match (mode.core_arg, mode.clad_arg) {
        (Some(u), Some(w)) => (u.norm_sqr() + w.norm_sqr()).sqrt() < SINGLE_MODE_V,
        _ => false,
    }
}

/// Photon survival probability `exp(-2 kappa l)` over length `l` (nm).
pub fn transmissivity(mode: &ModeSolution, length: f64) -> f64 {
    (-2.0 * mode.kappa * length).exp()
}

/// Anything that maps a cladding index to a guided mode.
pub trait Transducer: Sync {
    fn mode_at(&self, n_bio: f64) -> Result<ModeSolution>;

    /// Same, seeded with a nearby solution.
    fn mode_near(&self, n_bio: f64, _near: &ModeSolution) -> Result<ModeSolution> {
        self.mode_at(n_bio)
    }

    fn lambda0(&self) -> f64;

    /// Range of `n_bio` over which the transducer is defined, if bounded.
    fn valid_range(&self) -> Option<(f64, f64)> {
        None
    }

    /// `d beta / d n_bio` in rad/nm per RIU.
    fn beta_slope(&self, n_bio: f64, step: f64, center: &ModeSolution) -> Result<f64> {
        central_slope(self, n_bio, step, center)
    }
}

impl Transducer for NanowireSpec {
    fn mode_at(&self, n_bio: f64) -> Result<ModeSolution> {
        self.with_cladding(n_bio)?.solve(None)
    }

    fn mode_near(&self, n_bio: f64, near: &ModeSolution) -> Result<ModeSolution> {
        self.with_cladding(n_bio)?.solve(Some(near.n_eff))
    }

    fn lambda0(&self) -> f64 {
        self.lambda0
    }
}

fn central_slope<T: Transducer + ?Sized>(t: &T, n_bio: f64, step: f64, center: &ModeSolution) -> Result<f64> {
    let diff = |h: f64| -> Result<f64> {
        let up = t.mode_near(n_bio + h, center)?;
        let down = t.mode_near(n_bio - h, center)?;
        Ok((up.beta - down.beta) / (2.0 * h))
    };
    let coarse = diff(step)?;
    let fine = diff(0.5 * step)?;
    if (coarse - fine).abs() > RICHARDSON_TOL * coarse.abs().max(fine.abs()) {
        return Err(ModeError::DerivativeUnstable { coarse, fine });
    }
    Ok(coarse)
}

/// `d beta / d n_bio` by central differences with step `step`, checked
/// against the half step.
pub fn dbeta_dn<T: Transducer + ?Sized>(t: &T, n_bio: f64, step: f64) -> Result<f64> {
    if !(step > 0.0) {
        return Err(ModeError::InvalidSpec(format!(
            "finite-difference step must be positive, got {step}"
        )));
    }
    if let Some((min, max)) = t.valid_range() {
        if n_bio - step < min || n_bio + step > max {
            return Err(ModeError::OutOfRange { n_bio, min, max });
        }
    }
    let center = t.mode_at(n_bio)?;
    central_slope(t, n_bio, step, &center)
}

/// Effective index versus cladding index, typically exported by an
/// external mode solver.
#[derive(Debug, Clone, PartialEq)]
pub struct DispersionTable {
    lambda0: f64,
    geometry: String,
    n_bio: Vec<f64>,
    n_eff: Vec<Complex64>,
    slopes_re: Vec<f64>,
    slopes_im: Vec<f64>,
}

impl DispersionTable {
    pub fn new(lambda0: f64, geometry: impl Into<String>, rows: Vec<(f64, Complex64)>) -> Result<Self> {
        if !(lambda0 > 0.0 && lambda0.is_finite()) {
            return Err(ModeError::InvalidSpec(format!(
                "lambda0 must be positive, got {lambda0}"
            )));
        }
        if rows.len() < 4 {
            return Err(ModeError::InvalidSpec(format!(
                "dispersion table needs at least 4 rows, got {}",
                rows.len()
            )));
        }
        for (i, w) in rows.windows(2).enumerate() {
            if !(w[1].0 > w[0].0) {
                return Err(ModeError::InvalidSpec(format!(
                    "n_bio must be strictly increasing (row {})",
                    i + 2
                )));
            }
        }
        for (i, (nb, ne)) in rows.iter().enumerate() {
            if !(nb.is_finite() && ne.re.is_finite() && ne.im.is_finite()) {
                return Err(ModeError::InvalidSpec(format!("non-finite value in row {}", i + 1)));
            }
            if ne.im < 0.0 {
                return Err(ModeError::InvalidSpec(format!("negative Im n_eff in row {}", i + 1)));
            }
        }
        let (n_bio, n_eff): (Vec<f64>, Vec<Complex64>) = rows.into_iter().unzip();
        let re: Vec<f64> = n_eff.iter().map(|z| z.re).collect();
        let im: Vec<f64> = n_eff.iter().map(|z| z.im).collect();
        let slopes_re = pchip_slopes(&n_bio, &re);
        let slopes_im = pchip_slopes(&n_bio, &im);
        Ok(DispersionTable {
            lambda0,
            geometry: geometry.into(),
            n_bio,
            n_eff,
            slopes_re,
            slopes_im,
        })
    }

    /// Parses the hand-off format:
    ///
    /// ```text
    /// # lambda0_nm=810
    /// # geometry=silver wedge, top angle 70.6 deg, ...
    /// # (other comment lines are ignored)
    /// n_bio  re_n_eff  im_n_eff
    /// ```
    pub fn parse(text: &str) -> Result<Self> {
        let mut lambda0 = None;
        let mut geometry = String::new();
        let mut rows = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() {
                continue;
            }
            if let Some(comment) = trimmed.strip_prefix('#') {
                let comment = comment.trim();
                if let Some(v) = comment.strip_prefix("lambda0_nm=") {
                    lambda0 = Some(v.trim().parse::<f64>().map_err(|_| ModeError::TableParse {
                        line,
                        msg: format!("bad lambda0_nm value {v:?}"),
                    })?);
                } else if let Some(v) = comment.strip_prefix("geometry=") {
                    geometry = v.trim().to_string();
                }
                continue;
            }
            let fields: Vec<&str> = trimmed
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|s| !s.is_empty())
                .collect();
            if fields.len() != 3 {
                return Err(ModeError::TableParse {
                    line,
                    msg: format!("expected 3 columns, found {}", fields.len()),
                });
            }
            let mut nums = [0.0; 3];
            for (slot, field) in nums.iter_mut().zip(&fields) {
                *slot = field.parse().map_err(|_| ModeError::TableParse {
                    line,
                    msg: format!("not a number: {field:?}"),
                })?;
            }
            rows.push((nums[0], Complex64::new(nums[1], nums[2])));
        }
        let lambda0 = lambda0.ok_or(ModeError::TableParse {
            line: 0,
            msg: "missing '# lambda0_nm=' header".into(),
        })?;
        Self::new(lambda0, geometry, rows)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ModeError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Serializes in the format accepted by [`DispersionTable::parse`].
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "# lambda0_nm={}\n# geometry={}\n# columns: n_bio re_n_eff im_n_eff\n",
            self.lambda0, self.geometry
        );
        for (nb, ne) in self.rows() {
            out.push_str(&format!("{nb:.16e} {:.16e} {:.16e}\n", ne.re, ne.im));
        }
        out
    }

    pub fn lambda0(&self) -> f64 {
        self.lambda0
    }

    pub fn geometry(&self) -> &str {
        &self.geometry
    }

    pub fn range(&self) -> (f64, f64) {
        (self.n_bio[0], *self.n_bio.last().unwrap())
    }

    pub fn rows(&self) -> impl Iterator<Item = (f64, Complex64)> + '_ {
        self.n_bio.iter().copied().zip(self.n_eff.iter().copied())
    }

    fn locate(&self, n_bio: f64) -> Result<usize> {
        let (min, max) = self.range();
        if !(n_bio >= min && n_bio <= max) {
            return Err(ModeError::OutOfRange { n_bio, min, max });
        }
        Ok(match self.n_bio.binary_search_by(|x| x.total_cmp(&n_bio)) {
            Ok(i) => i.min(self.n_bio.len() - 2),
            Err(i) => i - 1,
        })
    }

    /// Effective index and its derivative with respect to `n_bio`.
    fn eval(&self, n_bio: f64) -> Result<(Complex64, Complex64)> {
        if let Ok(i) = self.n_bio.binary_search_by(|x| x.total_cmp(&n_bio)) {
            return Ok((self.n_eff[i], Complex64::new(self.slopes_re[i], self.slopes_im[i])));
        }
        let i = self.locate(n_bio)?;
        let x = (self.n_bio[i], self.n_bio[i + 1]);
        let re = hermite(
            x,
            (self.n_eff[i].re, self.n_eff[i + 1].re),
            (self.slopes_re[i], self.slopes_re[i + 1]),
            n_bio,
        );
        let im = hermite(
            x,
            (self.n_eff[i].im, self.n_eff[i + 1].im),
            (self.slopes_im[i], self.slopes_im[i + 1]),
            n_bio,
        );
        Ok((Complex64::new(re.0, im.0), Complex64::new(re.1, im.1)))
    }
}

/// Monotone cubic interpolation of a dispersion table; exact at nodes.
pub fn interpolate_dispersion(table: &DispersionTable, n_bio: f64) -> Result<ModeSolution> {
    let (n_eff, _) = table.eval(n_bio)?;
    Ok(ModeSolution::from_neff(n_eff, 2.0 * PI / table.lambda0, 0.0))
}

impl Transducer for DispersionTable {
    fn mode_at(&self, n_bio: f64) -> Result<ModeSolution> {
        interpolate_dispersion(self, n_bio)
    }

    fn lambda0(&self) -> f64 {
        self.lambda0
    }

    fn valid_range(&self) -> Option<(f64, f64)> {
        Some(self.range())
    }

    /// Derivative of the interpolant, usable up to the table edges.
    fn beta_slope(&self, n_bio: f64, _step: f64, _center: &ModeSolution) -> Result<f64> {
        let (_, d) = self.eval(n_bio)?;
        Ok(d.re * 2.0 * PI / self.lambda0)
    }
}

/// Fritsch-Carlson node slopes (weighted harmonic mean in the interior,
/// shape-preserving three-point formula at the ends).
fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
    let mut d = vec![0.0; n];
    for k in 1..n - 1 {
        if delta[k - 1] * delta[k] > 0.0 {
            let w1 = 2.0 * h[k] + h[k - 1];
            let w2 = h[k] + 2.0 * h[k - 1];
            d[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
        }
    }
    let end = |h0: f64, h1: f64, d0: f64, d1: f64| {
        let s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if s.signum() != d0.signum() {
            0.0
        } else if d0.signum() != d1.signum() && s.abs() > 3.0 * d0.abs() {
            3.0 * d0
        } else {
            s
        }
    };
    d[0] = end(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = end(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    d
}

/// Cubic Hermite value and derivative on `[x0, x1]`.
fn hermite(x: (f64, f64), y: (f64, f64), d: (f64, f64), at: f64) -> (f64, f64) {
    let h = x.1 - x.0;
    let t = (at - x.0) / h;
    let t2 = t * t;
    let t3 = t2 * t;
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + t;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    let value = h00 * y.0 + h10 * h * d.0 + h01 * y.1 + h11 * h * d.1;
    let dh00 = (6.0 * t2 - 6.0 * t) / h;
    let dh10 = 3.0 * t2 - 4.0 * t + 1.0;
    let dh01 = (-6.0 * t2 + 6.0 * t) / h;
    let dh11 = 3.0 * t2 - 2.0 * t;
    let slope = dh00 * y.0 + dh10 * d.0 + dh01 * y.1 + dh11 * d.1;
    (value, slope)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::materials::DOPED_SILICA_INDEX;

    fn silver_wire(n_clad: f64, lossless: bool) -> NanowireSpec {
        let m = MaterialModel::silver().with_lossless(lossless);
        NanowireSpec::new(CoreKind::Metal, 50.0, m, n_clad, 810.0, 4000.0).unwrap()
    }

    fn silica_wire(n_clad: f64) -> NanowireSpec {
        let m = MaterialModel::constant_index(DOPED_SILICA_INDEX).unwrap();
        NanowireSpec::new(CoreKind::Dielectric, 50.0, m, n_clad, 810.0, 4000.0).unwrap()
    }

    #[test]
    fn branch_sqrt_convention() {
        assert_eq!(branch_sqrt(Complex64::new(-4.0, -0.0)), Complex64::new(0.0, 2.0));
        assert_eq!(branch_sqrt(Complex64::new(-4.0, 0.0)), Complex64::new(0.0, 2.0));
        assert!(branch_sqrt(Complex64::new(-1.0, -3.0)).re > 0.0);
    }

    #[test]
    fn invalid_specs_rejected() {
        let m = MaterialModel::silver();
        assert!(NanowireSpec::new(CoreKind::Metal, 0.0, m.clone(), 1.2, 810.0, 1.0).is_err());
        assert!(NanowireSpec::new(CoreKind::Metal, 50.0, m.clone(), 1.2, -810.0, 1.0).is_err());
        assert!(NanowireSpec::new(CoreKind::Metal, 50.0, m, 1.2, 810.0, 0.0).is_err());
    }

    #[test]
    fn wrong_core_kind_is_an_error() {
        assert!(matches!(
            solve_tm0(&silica_wire(1.2), None),
            Err(ModeError::WrongCoreKind { .. })
        ));
        assert!(matches!(
            solve_lp01(&silver_wire(1.2, true)),
            Err(ModeError::WrongCoreKind { .. })
        ));
    }

    #[test]
    fn lossless_tm0_is_exactly_real() {
        let sol = solve_tm0(&silver_wire(1.25, true), None).unwrap();
        assert_eq!(sol.kappa, 0.0);
        assert_eq!(sol.n_eff.im, 0.0);
        assert!(sol.residual <= RESIDUAL_TOL);
        assert!(sol.n_eff.re > 1.25);
    }

    #[test]
    fn lossy_tm0_decays() {
        let sol = solve_tm0(&silver_wire(1.25, false), None).unwrap();
        assert!(sol.kappa > 0.0);
        let eta = transmissivity(&sol, 4000.0);
        assert!(eta > 0.0 && eta < 1.0);
        assert!(sol.residual <= RESIDUAL_TOL);
    }

    #[test]
    fn seeded_solve_agrees_with_scan() {
        let spec = silver_wire(1.3, false);
        let a = solve_tm0(&spec, None).unwrap();
        let b = solve_tm0(&spec, Some(a.n_eff + Complex64::new(0.01, 0.0))).unwrap();
        assert!((a.n_eff - b.n_eff).norm() < 1e-11);
        let spec = silver_wire(1.3, true);
        let a = solve_tm0(&spec, None).unwrap();
        let b = solve_tm0(&spec, Some(a.n_eff + 0.02)).unwrap();
        assert!((a.n_eff - b.n_eff).norm() < 1e-13);
    }

    #[test]
    fn tm0_residual_conjugate_symmetry_for_real_permittivity() {
        let spec = silver_wire(1.25, true);
        let k0 = spec.k0();
        let k = Complex64::new(1.5 * k0, 0.01 * k0);
        let a = tm0_residual(k.conj(), &spec).unwrap();
        let b = tm0_residual(k, &spec).unwrap().conj();
        assert!((a - b).norm() <= 1e-14 * b.norm());
    }

    #[test]
    fn lp01_is_real_and_bounded() {
        for n_clad in [1.1, 1.25, 1.4] {
            let sol = solve_lp01(&silica_wire(n_clad)).unwrap();
            assert_eq!(sol.kappa, 0.0);
            assert!(sol.n_eff.re >= n_clad && sol.n_eff.re < DOPED_SILICA_INDEX);
            assert!(sol.clad_arg.unwrap().re > 0.0);
            assert!(sol.residual <= RESIDUAL_TOL);
        }
    }

    #[test]
    fn lp01_no_mode_without_index_contrast() {
        assert!(matches!(solve_lp01(&silica_wire(1.5)), Err(ModeError::NoRoot { .. })));
        assert!(matches!(
            solve_lp01(&silica_wire(DOPED_SILICA_INDEX)),
            Err(ModeError::NoRoot { .. })
        ));
    }

    #[test]
    fn single_mode_flags() {
        let spec = silica_wire(1.1);
        let sol = solve_lp01(&spec).unwrap();
        assert!(single_mode_check(&spec, &sol));
        let same = silica_wire(DOPED_SILICA_INDEX);
        assert!(!single_mode_check(&same, &sol));
    }

    #[test]
    fn transmissivity_values() {
        let mut sol = ModeSolution::from_neff(Complex64::new(1.5, 0.0), 0.01, 0.0);
        assert_eq!(transmissivity(&sol, 1234.0), 1.0);
        let l = 4000.0;
        sol.kappa = std::f64::consts::LN_2 / (2.0 * l);
        assert!((transmissivity(&sol, l) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn pchip_reproduces_linear_data() {
        let rows: Vec<(f64, Complex64)> = (0..6)
            .map(|i| {
                let x = 1.3 + 0.02 * i as f64 + 0.003 * (i * i) as f64;
                (x, Complex64::new(2.0 * x - 1.0, 0.5 * x))
            })
            .collect();
        let t = DispersionTable::new(810.0, "linear", rows.clone()).unwrap();
        for (x, y) in &rows {
            assert_eq!(interpolate_dispersion(&t, *x).unwrap().n_eff, *y);
        }
        for q in [1.305, 1.33, 1.37, 1.42] {
            let n = interpolate_dispersion(&t, q).unwrap().n_eff;
            assert!((n.re - (2.0 * q - 1.0)).abs() < 1e-14);
            assert!((n.im - 0.5 * q).abs() < 1e-14);
        }
        assert!(matches!(
            interpolate_dispersion(&t, 1.0),
            Err(ModeError::OutOfRange { .. })
        ));
    }

    #[test]
    fn dispersion_table_validation() {
        let row = |x: f64| (x, Complex64::new(x, 0.01));
        assert!(DispersionTable::new(810.0, "", vec![row(1.0), row(1.1), row(1.2)]).is_err());
        assert!(DispersionTable::new(810.0, "", vec![row(1.0), row(1.1), row(1.1), row(1.2)]).is_err());
        let neg = vec![row(1.0), row(1.1), (1.2, Complex64::new(1.2, -0.1)), row(1.3)];
        assert!(DispersionTable::new(810.0, "", neg).is_err());
    }

    #[test]
    fn dispersion_text_round_trip() {
        let rows: Vec<(f64, Complex64)> = (0..5)
            .map(|i| (1.33 + 0.01 * i as f64, Complex64::new(1.6 + 0.1 * i as f64, 0.02)))
            .collect();
        let t = DispersionTable::new(810.0, "wedge: top 70.6 deg, bottom 54.7 deg, tip radius 20 nm", rows).unwrap();
        let back = DispersionTable::parse(&t.to_text()).unwrap();
        assert_eq!(back, t);
        assert!(matches!(
            DispersionTable::parse("1 2 3\n"),
            Err(ModeError::TableParse { .. })
        ));
    }
}
