//! Sweeps of the cladding index through a transducer into per-strategy
//! resolution tables.

use crate::estimation::{
    self, crb_delta_phi, delta_n_from_phi, error_propagation, hl_delta_n, noon_distribution, noon_qfi,
    optimize_input_state, qfi_definite_n, sil_delta_n, snl_delta_n, EstimationError, ObservableStats,
};
use crate::materials::BioMedium;
use crate::modesolver::{
    transmissivity, CoreKind, DispersionTable, ModeError, NanowireSpec, Transducer, DEFAULT_FD_STEP,
};
use rayon::prelude::*;
use std::fmt;
use thiserror::Error;

/// Photon-number optimizer tolerance on F_Q used by sweeps.
pub const DEFAULT_OPTIMIZER_TOL: f64 = 1e-10;
pub const DEFAULT_GRID_POINTS: usize = 201;
pub const NANOWIRE_RANGE: (f64, f64) = (1.1, 1.4);
/// BSA concentration range, g per 100 ml.
pub const BSA_RANGE: (f64, f64) = (0.0, 60.0);

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("invalid scenario: {}", .0.join("; "))]
    Invalid(Vec<String>),
    #[error(transparent)]
    Mode(#[from] ModeError),
    #[error(transparent)]
    Estimation(#[from] EstimationError),
}

pub type Result<T> = std::result::Result<T, ScenarioError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Strategy {
    Classical,
    Noon,
    Optimal,
    Sil,
    Hl,
    Snl,
}

impl Strategy {
    pub const ALL: [Strategy; 6] = [
        Strategy::Classical,
        Strategy::Noon,
        Strategy::Optimal,
        Strategy::Sil,
        Strategy::Hl,
        Strategy::Snl,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Classical => "classical",
            Strategy::Noon => "noon",
            Strategy::Optimal => "optimal",
            Strategy::Sil => "sil",
            Strategy::Hl => "hl",
            Strategy::Snl => "snl",
        }
    }

    pub fn parse(s: &str) -> Option<Strategy> {
        Strategy::ALL.into_iter().find(|v| v.name() == s)
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A resolution column of a table.
///
/// `ClassicalEnvelope` and `NoonEnvelope` hold the value at the optimal bias
/// phase; the raw columns diverge at fringe extrema.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Column {
    Classical,
    ClassicalEnvelope,
    Noon,
    NoonEnvelope,
    Optimal,
    Fixed,
    Sil,
    Hl,
    Snl,
}

impl Column {
    pub fn name(self) -> &'static str {
        match self {
            Column::Classical => "dn_classical",
            Column::ClassicalEnvelope => "dn_classical_envelope",
            Column::Noon => "dn_noon",
            Column::NoonEnvelope => "dn_noon_envelope",
            Column::Optimal => "dn_optimal",
            Column::Fixed => "dn_fixed",
            Column::Sil => "dn_sil",
            Column::Hl => "dn_hl",
            Column::Snl => "dn_snl",
        }
    }
}

#[derive(Debug, Clone)]
pub enum TransducerSource {
    Nanowire(NanowireSpec),
    Table(DispersionTable),
}

impl TransducerSource {
    pub fn as_transducer(&self) -> &dyn Transducer {
        match self {
            TransducerSource::Nanowire(s) => s,
            TransducerSource::Table(t) => t,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            TransducerSource::Nanowire(s) => match s.core_kind() {
                CoreKind::Metal => format!(
                    "nanowire core=metal radius_nm={} lossless={}",
                    s.radius(),
                    s.core().is_lossless()
                ),
                CoreKind::Dielectric => format!(
                    "nanowire core=dielectric radius_nm={} core_index={}",
                    s.radius(),
                    s.core_index().unwrap_or(f64::NAN)
                ),
            },
            TransducerSource::Table(t) => format!("dispersion table geometry=\"{}\"", t.geometry()),
        }
    }
}

/// `points` evenly spaced values over `[a, b]`, endpoints exact.
pub fn linspace(a: f64, b: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..points)
            .map(|i| {
                if i == points - 1 {
                    b
                } else {
                    a + (b - a) * i as f64 / (points - 1) as f64
                }
            })
            .collect(),
    }
}

pub fn nanowire_grid() -> Vec<f64> {
    linspace(NANOWIRE_RANGE.0, NANOWIRE_RANGE.1, DEFAULT_GRID_POINTS)
}

/// BSA concentrations over [0, 60] g/100ml mapped to `n_bio`.
pub fn bsa_grid(points: usize) -> Vec<f64> {
    linspace(BSA_RANGE.0, BSA_RANGE.1, points)
        .into_iter()
        .map(|c| BioMedium::bsa(c).expect("non-negative concentration").bio_index())
        .collect()
}

pub fn wedge_grid() -> Vec<f64> {
    bsa_grid(DEFAULT_GRID_POINTS)
}

#[derive(Debug, Clone)]
pub struct SensingScenario {
    pub transducer: TransducerSource,
    /// Sensing-arm length, nm.
    pub length: f64,
    pub photons: usize,
    pub strategies: Vec<Strategy>,
    pub grid: Vec<f64>,
    /// Finite-difference step for `d beta / d n_bio`, RIU.
    pub fd_step: f64,
    pub optimizer_tol: f64,
}

impl SensingScenario {
    /// All strategies, default step and tolerance.
    pub fn new(transducer: TransducerSource, length: f64, photons: usize, grid: Vec<f64>) -> Result<Self> {
        let s = SensingScenario {
            transducer,
            length,
            photons,
            strategies: Strategy::ALL.to_vec(),
            grid,
            fd_step: DEFAULT_FD_STEP,
            optimizer_tol: DEFAULT_OPTIMIZER_TOL,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn with_strategies(mut self, strategies: Vec<Strategy>) -> Result<Self> {
        self.strategies = strategies;
        self.validate()?;
        Ok(self)
    }

    pub fn with_grid(mut self, grid: Vec<f64>) -> Result<Self> {
        self.grid = grid;
        self.validate()?;
        Ok(self)
    }

    pub fn with_photons(mut self, photons: usize) -> Result<Self> {
        self.photons = photons;
        self.validate()?;
        Ok(self)
    }

    pub fn with_fd_step(mut self, fd_step: f64) -> Result<Self> {
        self.fd_step = fd_step;
        self.validate()?;
        Ok(self)
    }

    pub fn lambda0(&self) -> f64 {
        self.transducer.as_transducer().lambda0()
    }

    /// Every violated invariant, not just the first.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.length > 0.0 && self.length.is_finite()) {
            out.push(format!("length must be positive, got {}", self.length));
        }
        if !(1..=estimation::MAX_PHOTONS).contains(&self.photons) {
            out.push(format!(
                "photons must lie in [1, {}], got {}",
                estimation::MAX_PHOTONS,
                self.photons
            ));
        }
        if self.strategies.is_empty() {
            out.push("at least one strategy is required".into());
        }
        if !(self.fd_step > 0.0 && self.fd_step.is_finite()) {
            out.push(format!("fd_step must be positive, got {}", self.fd_step));
        }
        if !(self.optimizer_tol > 0.0) {
            out.push(format!(
                "optimizer tolerance must be positive, got {}",
                self.optimizer_tol
            ));
        }
        if self.grid.is_empty() {
            out.push("grid is empty".into());
        }
        if self.grid.iter().any(|v| !v.is_finite() || *v <= 0.0) {
            out.push("grid values must be finite and positive".into());
        }
        if self.grid.windows(2).any(|w| !(w[1] > w[0])) {
            out.push("grid must be strictly increasing".into());
        }
        if let (Some((min, max)), Some(first), Some(last)) = (
            self.transducer.as_transducer().valid_range(),
            self.grid.first(),
            self.grid.last(),
        ) {
            if *first < min || *last > max {
                out.push(format!(
                    "grid [{first}, {last}] leaves the transducer range [{min}, {max}]"
                ));
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(ScenarioError::Invalid(v))
        }
    }

    /// `# key=value` lines describing the scenario, with no timestamp.
    pub fn provenance(&self) -> Vec<String> {
        let strategies: Vec<&str> = self.strategies.iter().map(|s| s.name()).collect();
        vec![
            format!("generator=qpsense {}", env!("CARGO_PKG_VERSION")),
            format!("transducer={}", self.transducer.describe()),
            format!("lambda0_nm={}", self.lambda0()),
            format!("length_nm={}", self.length),
            format!("photons={}", self.photons),
            format!("strategies={}", strategies.join(",")),
            format!("fd_step={}", self.fd_step),
            format!("optimizer_tol={}", self.optimizer_tol),
            format!(
                "grid=n_bio {} points [{}, {}]",
                self.grid.len(),
                self.grid.first().copied().unwrap_or(f64::NAN),
                self.grid.last().copied().unwrap_or(f64::NAN)
            ),
        ]
    }
}

/// Transducer quantities at one grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingPoint {
    pub n_bio: f64,
    /// `beta l`, rad.
    pub phi: f64,
    pub eta: f64,
    /// `l d beta / d n_bio`, rad per RIU.
    pub dphi_dn: f64,
}

/// Solves the transducer at `n_bio`.
pub fn operating_point(scenario: &SensingScenario, n_bio: f64) -> Result<OperatingPoint> {
    let t = scenario.transducer.as_transducer();
    let mode = t.mode_at(n_bio)?;
    let slope = t.beta_slope(n_bio, scenario.fd_step, &mode)?;
    Ok(OperatingPoint {
        n_bio,
        phi: mode.beta * scenario.length,
        eta: transmissivity(&mode, scenario.length).min(1.0),
        dphi_dn: scenario.length * slope,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResolutionRow {
    pub point: OperatingPoint,
    /// Aligned with the table's columns; `+inf` marks a divergence.
    pub delta_n: Vec<f64>,
    /// Optimal (or fixed) state `x_n`, when computed.
    pub x: Option<Vec<f64>>,
    /// Why the row could not be computed.
    pub failure: Option<String>,
}

impl ResolutionRow {
    pub fn failed(&self) -> bool {
        self.failure.is_some()
    }
}

#[derive(Debug, Clone)]
pub struct ResolutionTable {
    pub provenance: Vec<String>,
    pub photons: usize,
    pub columns: Vec<Column>,
    pub rows: Vec<ResolutionRow>,
}

impl ResolutionTable {
    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.failed()).count()
    }

    pub fn column_index(&self, c: Column) -> Option<usize> {
        self.columns.iter().position(|&v| v == c)
    }

    /// `(n_bio, value)` of one column over the rows that did not fail.
    pub fn series(&self, c: Column) -> Vec<(f64, f64)> {
        match self.column_index(c) {
            None => Vec::new(),
            Some(i) => self
                .rows
                .iter()
                .filter(|r| !r.failed())
                .map(|r| (r.point.n_bio, r.delta_n[i]))
                .collect(),
        }
    }

    pub fn value(&self, row: usize, c: Column) -> Option<f64> {
        let r = self.rows.get(row)?;
        if r.failed() {
            return None;
        }
        self.column_index(c).map(|i| r.delta_n[i])
    }
}

fn columns_for(strategies: &[Strategy], fixed: bool) -> Vec<Column> {
    let mut cols = Vec::new();
    for s in Strategy::ALL {
        if !strategies.contains(&s) {
            continue;
        }
        match s {
            Strategy::Classical => cols.extend([Column::Classical, Column::ClassicalEnvelope]),
            Strategy::Noon => cols.extend([Column::Noon, Column::NoonEnvelope]),
            Strategy::Optimal if !fixed => cols.push(Column::Optimal),
            Strategy::Optimal => {}
            Strategy::Sil => cols.push(Column::Sil),
            Strategy::Hl => cols.push(Column::Hl),
            Strategy::Snl => cols.push(Column::Snl),
        }
    }
    if fixed {
        cols.push(Column::Fixed);
    }
    cols
}

/// Coherent probe behind a balanced MZ: `1/(sqrt(N) |sin phi|)`, from error
/// propagation on `M = n2 - n1`. The lossless expression is used at every
/// `eta`; `sil` is the loss-aware classical benchmark.
fn classical_delta_n(photons: usize, p: &OperatingPoint) -> f64 {
    let n = photons as f64;
    let (s, c) = p.phi.sin_cos();
    let stats = ObservableStats {
        mean: n * c,
        second_moment: n + n * n * c * c,
        slope: -n * s * p.dphi_dn,
    };
    error_propagation(&stats)
}

/// NOON raw value: error propagation on `A` when lossless, the Cramer-Rao
/// bound of the lossy NOON state otherwise.
fn noon_delta_n(photons: usize, p: &OperatingPoint) -> f64 {
    if p.eta < 1.0 {
        return delta_n_from_phi(crb_delta_phi(noon_qfi(photons, p.eta)), p.dphi_dn);
    }
    let n = photons as f64;
    let (s, c) = (n * p.phi).sin_cos();
    let stats = ObservableStats {
        mean: c,
        second_moment: 1.0,
        slope: -n * s * p.dphi_dn,
    };
    error_propagation(&stats)
}

fn noon_envelope(photons: usize, p: &OperatingPoint) -> f64 {
    delta_n_from_phi(crb_delta_phi(noon_qfi(photons, p.eta)), p.dphi_dn)
}

enum StateChoice<'a> {
    Optimize,
    Fixed(&'a [f64]),
}

fn evaluate_row(
    scenario: &SensingScenario,
    columns: &[Column],
    n_bio: f64,
    state: &StateChoice<'_>,
) -> std::result::Result<ResolutionRow, String> {
    let p = operating_point(scenario, n_bio).map_err(|e| e.to_string())?;
    let n = scenario.photons;
    let mut x = None;
    let mut delta_n = Vec::with_capacity(columns.len());
    for &c in columns {
        let v = match c {
            Column::Classical => classical_delta_n(n, &p),
            Column::ClassicalEnvelope => snl_delta_n(n, p.dphi_dn),
            Column::Noon => noon_delta_n(n, &p),
            Column::NoonEnvelope => noon_envelope(n, &p),
            Column::Optimal => {
                let r = optimize_input_state(n, p.eta, scenario.optimizer_tol).map_err(|e| e.to_string())?;
                let v = delta_n_from_phi(r.delta_phi, p.dphi_dn);
                x = Some(r.x);
                v
            }
            Column::Fixed => {
                let StateChoice::Fixed(fixed) = state else {
                    unreachable!("fixed column only in fixed-state sweeps")
                };
                let f = qfi_definite_n(fixed, p.eta).map_err(|e| e.to_string())?;
                x = Some(fixed.to_vec());
                delta_n_from_phi(crb_delta_phi(f), p.dphi_dn)
            }
            Column::Sil => sil_delta_n(n, p.eta, p.dphi_dn),
            Column::Hl => hl_delta_n(n, p.dphi_dn),
            Column::Snl => snl_delta_n(n, p.dphi_dn),
        };
        delta_n.push(v);
    }
    Ok(ResolutionRow {
        point: p,
        delta_n,
        x,
        failure: None,
    })
}

fn run(scenario: &SensingScenario, columns: Vec<Column>, state: StateChoice<'_>) -> ResolutionTable {
    let rows = scenario
        .grid
        .par_iter()
        .map(|&n_bio| {
            evaluate_row(scenario, &columns, n_bio, &state).unwrap_or_else(|msg| ResolutionRow {
                point: OperatingPoint {
                    n_bio,
                    phi: f64::NAN,
                    eta: f64::NAN,
                    dphi_dn: f64::NAN,
                },
                delta_n: vec![f64::NAN; columns.len()],
                x: None,
                failure: Some(msg),
            })
        })
        .collect();
    ResolutionTable {
        provenance: scenario.provenance(),
        photons: scenario.photons,
        columns,
        rows,
    }
}

/// Resolution of every requested strategy at every grid point, in grid
/// order. Grid points where the transducer or optimizer fails become failed
/// rows; see [`ResolutionTable::failures`].
pub fn sweep(scenario: &SensingScenario) -> Result<ResolutionTable> {
    scenario.validate()?;
    Ok(run(
        scenario,
        columns_for(&scenario.strategies, false),
        StateChoice::Optimize,
    ))
}

/// Like [`sweep`], but the quantum state is held at `x` instead of being
/// re-optimized per row; its resolution is the `dn_fixed` column.
pub fn fixed_state_sweep(scenario: &SensingScenario, x: &[f64]) -> Result<ResolutionTable> {
    scenario.validate()?;
    estimation::check_distribution(x)?;
    if x.len() != scenario.photons + 1 {
        return Err(ScenarioError::Invalid(vec![format!(
            "state has {} coefficients, expected N + 1 = {}",
            x.len(),
            scenario.photons + 1
        )]));
    }
    let mut table = run(scenario, columns_for(&scenario.strategies, true), StateChoice::Fixed(x));
    table.provenance.push(format!(
        "fixed_state={}",
        x.iter().map(|v| format!("{v:.16e}")).collect::<Vec<_>>().join(" ")
    ));
    Ok(table)
}

/// The optimal state at one grid point, for reuse in fixed-state sweeps.
pub fn optimal_state_at(scenario: &SensingScenario, n_bio: f64) -> Result<Vec<f64>> {
    let p = operating_point(scenario, n_bio)?;
    Ok(optimize_input_state(scenario.photons, p.eta, scenario.optimizer_tol)?.x)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingRow {
    pub photons: usize,
    pub noon: f64,
    pub optimal: f64,
    pub sil: f64,
    pub hl: f64,
    pub snl: f64,
    pub x: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ScalingTable {
    pub provenance: Vec<String>,
    pub point: OperatingPoint,
    pub rows: Vec<ScalingRow>,
}

/// Resolutions versus photon number at the scenario's single grid point,
/// re-optimizing the state for every `N`.
pub fn n_scaling_study(scenario: &SensingScenario, photons: &[usize]) -> Result<ScalingTable> {
    scenario.validate()?;
    let mut bad = Vec::new();
    if scenario.grid.len() != 1 {
        bad.push(format!(
            "scaling study needs exactly one grid point, got {}",
            scenario.grid.len()
        ));
    }
    if photons.is_empty() {
        bad.push("photon-number list is empty".into());
    }
    if photons.windows(2).any(|w| w[1] <= w[0]) {
        bad.push("photon numbers must be strictly increasing".into());
    }
    if photons.iter().any(|&n| n == 0 || n > estimation::MAX_PHOTONS) {
        bad.push(format!("photon numbers must lie in [1, {}]", estimation::MAX_PHOTONS));
    }
    if !bad.is_empty() {
        return Err(ScenarioError::Invalid(bad));
    }
    let p = operating_point(scenario, scenario.grid[0])?;
    let rows = photons
        .par_iter()
        .map(|&n| -> Result<ScalingRow> {
            let opt = optimize_input_state(n, p.eta, scenario.optimizer_tol)?;
            let noon = qfi_definite_n(&noon_distribution(n), p.eta)?;
            Ok(ScalingRow {
                photons: n,
                noon: delta_n_from_phi(crb_delta_phi(noon), p.dphi_dn),
                optimal: delta_n_from_phi(opt.delta_phi, p.dphi_dn),
                sil: sil_delta_n(n, p.eta, p.dphi_dn),
                hl: hl_delta_n(n, p.dphi_dn),
                snl: snl_delta_n(n, p.dphi_dn),
                x: opt.x,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut provenance = scenario.provenance();
    provenance.retain(|l| !l.starts_with("photons="));
    provenance.push(format!(
        "photon_numbers={}",
        photons.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(",")
    ));
    Ok(ScalingTable {
        provenance,
        point: p,
        rows,
    })
}
