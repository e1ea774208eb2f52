mod common;

use common::{j_series, k_integral};
use num_complex::Complex64;
use qpsense::materials::{MaterialModel, DOPED_SILICA_INDEX};
use qpsense::modesolver::*;

fn silver_wire(n_clad: f64, lossless: bool) -> NanowireSpec {
    let m = MaterialModel::silver().with_lossless(lossless);
    NanowireSpec::new(CoreKind::Metal, 50.0, m, n_clad, 810.0, 4000.0).unwrap()
}

fn silica_wire(n_clad: f64) -> NanowireSpec {
    let m = MaterialModel::constant_index(DOPED_SILICA_INDEX).unwrap();
    NanowireSpec::new(CoreKind::Dielectric, 50.0, m, n_clad, 810.0, 4000.0).unwrap()
}

fn grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

#[test]
fn tm0_roots_match_high_precision_reference() {
    // mpmath findroot at 40 digits, eps_m from the bundled table at 810 nm
    let lossless = solve_tm0(&silver_wire(1.25, true), None).unwrap();
    assert!((lossless.n_eff.re - 1.557_186_669_445_704_7).abs() < 1e-12);
    let lossy = solve_tm0(&silver_wire(1.25, false), None).unwrap();
    let want = Complex64::new(1.555_717_556_171_567_8, 0.020_034_385_616_328_74);
    assert!((lossy.n_eff - want).norm() < 1e-12, "{}", lossy.n_eff);
}

#[test]
fn tm0_residual_brackets_lossless_root() {
    let spec = silver_wire(1.25, true);
    let k0 = spec.k0();
    let ns = grid(1.25 + 1e-6, 4.0, 400);
    let vals: Vec<f64> = ns
        .iter()
        .map(|&n| tm0_residual(Complex64::new(n * k0, 0.0), &spec).unwrap().re)
        .collect();
    let changes = vals.windows(2).filter(|w| w[0].signum() != w[1].signum()).count();
    assert!(changes >= 1);
    let sol = solve_tm0(&spec, None).unwrap();
    let at_root = tm0_residual(sol.k, &spec).unwrap();
    let eps_m = spec.core_permittivity().unwrap();
    let km = k0 * (sol.n_eff * sol.n_eff - eps_m).sqrt();
    assert!(at_root.norm() / (eps_m / km).norm() <= 1e-10);
}

#[test]
fn thick_wire_approaches_flat_interface_plasmon() {
    for n_clad in [1.1, 1.25, 1.4] {
        let spec = silver_wire(n_clad, true).with_radius(50_000.0).unwrap();
        let sol = solve_tm0(&spec, None).unwrap();
        let em = spec.core_permittivity().unwrap().re;
        let ec = n_clad * n_clad;
        let flat = (em * ec / (em + ec)).sqrt();
        assert!((sol.n_eff.re - flat).abs() / flat < 1e-3, "{} vs {flat}", sol.n_eff.re);
    }
}

#[test]
fn metal_beta_increases_with_cladding_index() {
    let ns = grid(1.1, 1.4, 31);
    let betas: Vec<f64> = ns
        .iter()
        .map(|&n| solve_tm0(&silver_wire(n, true), None).unwrap().beta)
        .collect();
    assert!(betas.windows(2).all(|w| w[1] > w[0]));
    let betas: Vec<f64> = ns.iter().map(|&n| solve_lp01(&silica_wire(n)).unwrap().beta).collect();
    assert!(betas.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn lossy_wire_has_partial_transmission() {
    for n in grid(1.1, 1.4, 7) {
        let sol = solve_tm0(&silver_wire(n, false), None).unwrap();
        assert!(sol.kappa > 0.0);
        let eta = transmissivity(&sol, 4000.0);
        assert!(eta > 0.0 && eta < 1.0);
    }
}

/// Bisection on the LP01 equation in ln(w), using only the test-side
/// series and quadrature Bessel oracles.
fn lp01_oracle_w(v: f64) -> f64 {
    let f = |s: f64| {
        let w: f64 = s.exp();
        let u = (v * v - w * w).sqrt();
        let core = u * j_series(1, u, 40) / j_series(0, u, 40);
        let clad = if w < 1e-4 {
            // small-argument expansion, error O(w^2 ln w)
            let l = -(0.5 * w).ln() - 0.577_215_664_901_532_9;
            w * (1.0 / w - 0.5 * w * l) / l
        } else {
            let z = Complex64::new(w, 0.0);
            w * (k_integral(1, z) / k_integral(0, z)).re
        };
        core - clad
    };
    let (mut lo, mut hi) = (-200.0f64, v.ln() - 1e-9);
    assert!(f(lo) > 0.0 && f(hi) < 0.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (0.5 * (lo + hi)).exp()
}

#[test]
fn lp01_root_matches_bisection_oracle() {
    let spec = silica_wire(1.25);
    let sol = solve_lp01(&spec).unwrap();
    let kr = spec.k0() * 50.0;
    let v = kr * (DOPED_SILICA_INDEX.powi(2) - 1.25f64.powi(2)).sqrt();
    let w_oracle = lp01_oracle_w(v);
    let w = sol.clad_arg.unwrap().re;
    assert!((w - w_oracle).abs() / w_oracle < 1e-6, "{w} vs {w_oracle}");
    // mpmath reference: w = 2.0946633757354540e-11
    assert!((w - 2.094_663_375_735_454e-11).abs() / w < 1e-9);
    // the root lies inside (n_clad, n_core)
    assert!(sol.n_eff.re >= 1.25 && sol.n_eff.re < DOPED_SILICA_INDEX);
    assert_eq!(sol.kappa, 0.0);
}

#[test]
fn lp01_approaches_cutoff_as_contrast_vanishes() {
    let mut last = f64::INFINITY;
    for n_clad in [1.0, 1.1, 1.2] {
        let sol = solve_lp01(&silica_wire(n_clad)).unwrap();
        let gap = sol.n_eff.re - n_clad;
        assert!(gap >= 0.0);
        assert!(gap < last);
        last = gap;
        assert_eq!(sol.kappa, 0.0);
    }
    let close = solve_lp01(&silica_wire(DOPED_SILICA_INDEX - 1e-3)).unwrap();
    assert!(close.clad_arg.unwrap().re < 1e-100);
}

#[test]
fn single_mode_condition_over_nanowire_range() {
    for n in grid(1.1, 1.4, 31) {
        let spec = silica_wire(n);
        let sol = solve_lp01(&spec).unwrap();
        assert!(single_mode_check(&spec, &sol), "n_clad = {n}");
    }
    let spec = silica_wire(1.1).with_radius(500.0).unwrap();
    let sol = solve_lp01(&spec).unwrap();
    let v = spec.k0() * 500.0 * (DOPED_SILICA_INDEX.powi(2) - 1.21f64).sqrt();
    assert!(v > 2.405);
    assert!(!single_mode_check(&spec, &sol));
}

struct ConstantBeta;

impl Transducer for ConstantBeta {
    fn mode_at(&self, _n_bio: f64) -> Result<ModeSolution> {
        Ok(ModeSolution {
            k: Complex64::new(0.012, 0.0),
            beta: 0.012,
            kappa: 0.0,
            n_eff: Complex64::new(0.012 * 810.0 / (2.0 * std::f64::consts::PI), 0.0),
            residual: 0.0,
            core_arg: None,
            clad_arg: None,
        })
    }
    fn lambda0(&self) -> f64 {
        810.0
    }
}

#[test]
fn slope_of_constant_beta_is_zero() {
    assert_eq!(dbeta_dn(&ConstantBeta, 1.3, DEFAULT_FD_STEP).unwrap(), 0.0);
}

#[test]
fn dielectric_slope_positive_and_below_metallic() {
    for n in [1.1, 1.2, 1.3, 1.4] {
        let d = dbeta_dn(&silica_wire(n), n, DEFAULT_FD_STEP).unwrap();
        let m = dbeta_dn(&silver_wire(n, true), n, DEFAULT_FD_STEP).unwrap();
        assert!(d > 0.0);
        assert!(m > d, "n = {n}: metal {m} vs dielectric {d}");
    }
}

#[test]
fn metallic_slope_matches_local_polynomial_fit() {
    let spec = silver_wire(1.25, true);
    let h = 1e-3;
    let betas: Vec<f64> = (-2..=2)
        .map(|i| {
            solve_tm0(&spec.with_cladding(1.25 + h * i as f64).unwrap(), None)
                .unwrap()
                .beta
        })
        .collect();
    // least-squares quadratic on x = -2h..2h: slope = sum(x y) / sum(x^2)
    let num: f64 = (-2..=2).zip(&betas).map(|(i, b)| i as f64 * h * b).sum();
    let den: f64 = (-2..=2).map(|i| (i as f64 * h).powi(2)).sum();
    let fit = num / den;
    let fd = dbeta_dn(&spec, 1.25, DEFAULT_FD_STEP).unwrap();
    assert!((fd - fit).abs() / fit < 1e-5, "{fd} vs {fit}");
}

#[test]
fn interpolated_table_tracks_direct_solves() {
    let spec = silver_wire(1.25, false);
    let nodes = grid(1.1, 1.4, 31);
    let rows: Vec<(f64, Complex64)> = nodes.iter().map(|&n| (n, spec.mode_at(n).unwrap().n_eff)).collect();
    let table = DispersionTable::new(810.0, "silver nanowire r=50nm", rows).unwrap();
    for w in nodes.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        let direct = spec.mode_at(mid).unwrap().n_eff;
        let interp = interpolate_dispersion(&table, mid).unwrap().n_eff;
        assert!((direct - interp).norm() / direct.norm() < 1e-4);
    }
    for &n in &nodes {
        assert_eq!(
            interpolate_dispersion(&table, n).unwrap().n_eff,
            spec.mode_at(n).unwrap().n_eff
        );
    }
    // slope of the interpolant against the solver's finite difference
    let s_table = table
        .beta_slope(1.25, DEFAULT_FD_STEP, &table.mode_at(1.25).unwrap())
        .unwrap();
    let s_direct = dbeta_dn(&spec, 1.25, DEFAULT_FD_STEP).unwrap();
    assert!((s_table - s_direct).abs() / s_direct < 1e-3);
}

mod props {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn transmissivity_non_increasing_in_length(kappa in 0.0f64..1e-3, l1 in 1.0f64..1e5, dl in 0.0f64..1e5) {
            let mut sol = solve_tm0(&silver_wire(1.2, true), None).unwrap();
            sol.kappa = kappa;
            let a = transmissivity(&sol, l1);
            let b = transmissivity(&sol, l1 + dl);
            prop_assert!(b <= a);
            prop_assert!(a > 0.0 && a <= 1.0);
        }
    }
}
