//! Datasets behind the published figures, one CSV (and SVG) per panel.

use super::output::{Cell, Dataset};
use super::{io_error, resolution_dataset, CliError, Figure, ReproduceArgs};
use crate::estimation::sil_hl_gap;
use crate::interferometer::{self, CoherentProbe, PhaseSetting};
use crate::materials::{MaterialModel, DOPED_SILICA_INDEX};
use crate::modesolver::{CoreKind, DispersionTable, NanowireSpec};
use crate::scenario::{
    fixed_state_sweep, linspace, n_scaling_study, nanowire_grid, optimal_state_at, sweep, wedge_grid, ResolutionTable,
    SensingScenario, Strategy, TransducerSource, BSA_RANGE, DEFAULT_GRID_POINTS, NANOWIRE_RANGE,
};
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub const RADIUS_NM: f64 = 50.0;
pub const LENGTH_NM: f64 = 4000.0;
pub const LAMBDA0_NM: f64 = 810.0;
pub const PHOTONS: usize = 4;
/// Points where fixed states are optimized, nanowire then wedge.
pub const NANOWIRE_FIXED_POINTS: [f64; 3] = [1.13, 1.19, 1.37];
pub const WEDGE_FIXED_POINTS: [f64; 3] = [1.34392, 1.36576, 1.43128];
pub const SCALING_PHOTONS: [usize; 18] = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 12, 16, 20, 24, 32, 40, 48, 60];
const PHASE_POINTS: usize = 401;

pub const WEDGE_FORMAT: &str = "external FEM data required: pass --wedge-data with a wedge dispersion table \
(plain text; header lines `# lambda0_nm=<value>` and `# geometry=<description>`, then whitespace- or comma-separated \
columns n_bio, Re n_eff, Im n_eff covering n_bio in [1.333, 1.4422]), or --skip-wedge";

fn invalid(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

pub fn nanowire(kind: CoreKind, lossless: bool) -> TransducerSource {
    let material = match kind {
        CoreKind::Metal => MaterialModel::silver().with_lossless(lossless),
        CoreKind::Dielectric => MaterialModel::constant_index(DOPED_SILICA_INDEX).expect("positive index"),
    };
    let spec =
        NanowireSpec::new(kind, RADIUS_NM, material, NANOWIRE_RANGE.0, LAMBDA0_NM, LENGTH_NM).expect("valid geometry");
    TransducerSource::Nanowire(spec)
}

fn scenario(t: TransducerSource, grid: Vec<f64>, strategies: Vec<Strategy>) -> Result<SensingScenario, CliError> {
    SensingScenario::new(t, LENGTH_NM, PHOTONS, grid)
        .and_then(|s| s.with_strategies(strategies))
        .map_err(invalid)
}

/// Collects panels, writes them and the manifest.
struct Writer {
    dir: PathBuf,
    manifest: String,
    failures: usize,
}

impl Writer {
    fn new(dir: PathBuf, figure: &str) -> Result<Self, CliError> {
        std::fs::create_dir_all(&dir).map_err(|e| io_error(&dir, e))?;
        let mut manifest = String::new();
        let _ = writeln!(manifest, "figure={figure}");
        let _ = writeln!(manifest, "generator=qpsense {}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(manifest, "radius_nm={RADIUS_NM}");
        let _ = writeln!(manifest, "length_nm={LENGTH_NM}");
        let _ = writeln!(manifest, "lambda0_nm={LAMBDA0_NM}");
        let _ = writeln!(manifest, "photons={PHOTONS}");
        let _ = writeln!(manifest, "dielectric_core_index={DOPED_SILICA_INDEX}");
        Ok(Writer {
            dir,
            manifest,
            failures: 0,
        })
    }

    fn count(&mut self, table: &ResolutionTable) {
        self.failures += table.failures();
    }

    fn panel(&mut self, name: &str, ds: &Dataset, x: &str, ys: &[&str]) -> Result<(), CliError> {
        let csv = self.dir.join(format!("{name}.csv"));
        ds.write_csv(&csv).map_err(|e| io_error(&csv, e))?;
        let svg = self.dir.join(format!("{name}.svg"));
        std::fs::write(&svg, ds.to_svg(x, ys)).map_err(|e| io_error(&svg, e))?;
        let _ = writeln!(
            self.manifest,
            "panel={name} csv={name}.csv svg={name}.svg title=\"{}\"",
            ds.title
        );
        Ok(())
    }

    fn finish(self) -> Result<(), CliError> {
        let path = self.dir.join("manifest.txt");
        std::fs::write(&path, &self.manifest).map_err(|e| io_error(&path, e))?;
        if self.failures > 0 {
            return Err(CliError::Runtime(format!(
                "{} grid points failed; see the failure columns under {}",
                self.failures,
                self.dir.display()
            )));
        }
        Ok(())
    }
}

pub fn reproduce(a: &ReproduceArgs) -> Result<(), CliError> {
    let name = match a.figure {
        Figure::Fig2 => "fig2",
        Figure::Fig3 => "fig3",
        Figure::Fig4 => "fig4",
        Figure::Fig5 => "fig5",
    };
    let wedge = match (a.figure, &a.wedge_data) {
        (Figure::Fig4 | Figure::Fig5, Some(p)) => Some(load_wedge(p)?),
        (Figure::Fig4 | Figure::Fig5, None) if !a.skip_wedge => return Err(CliError::Usage(WEDGE_FORMAT.into())),
        _ => None,
    };
    let mut w = Writer::new(a.out.clone().unwrap_or_else(|| PathBuf::from(name)), name)?;
    if let Some(p) = &a.wedge_data {
        let _ = writeln!(w.manifest, "wedge_data={}", p.display());
    }
    match a.figure {
        Figure::Fig2 => fig2(&mut w)?,
        Figure::Fig3 => fig3(&mut w)?,
        Figure::Fig4 => fig4(&mut w, wedge)?,
        Figure::Fig5 => fig5(&mut w, wedge)?,
    }
    w.finish()
}

fn load_wedge(path: &Path) -> Result<TransducerSource, CliError> {
    DispersionTable::from_path(path)
        .map(TransducerSource::Table)
        .map_err(|e| CliError::Usage(format!("{e}\n{WEDGE_FORMAT}")))
}

/// Renames every column but `n_bio` with a suffix.
fn suffixed(ds: &Dataset, suffix: &str) -> Dataset {
    let mut out = ds.clone();
    for c in out.columns.iter_mut().skip(1) {
        *c = format!("{c}_{suffix}");
    }
    out
}

/// Joins datasets that share their first column, row by row.
fn join(title: &str, parts: &[Dataset]) -> Dataset {
    let mut columns = vec![parts[0].columns[0].clone()];
    let mut provenance = Vec::new();
    for p in parts {
        columns.extend(p.columns.iter().skip(1).cloned());
        for line in &p.provenance {
            if !provenance.contains(line) {
                provenance.push(line.clone());
            }
        }
    }
    let mut ds = Dataset::new(title, provenance, columns);
    for i in 0..parts[0].rows.len() {
        let mut row = vec![parts[0].rows[i][0].clone()];
        for p in parts {
            row.extend(p.rows[i].iter().skip(1).cloned());
        }
        ds.push(row);
    }
    ds
}

fn fig2(w: &mut Writer) -> Result<(), CliError> {
    let strategies = vec![Strategy::Classical, Strategy::Noon];
    let mut b_parts = Vec::new();
    let mut c_parts = Vec::new();
    for (label, kind) in [("dielectric", CoreKind::Dielectric), ("plasmonic", CoreKind::Metal)] {
        let s = scenario(nanowire(kind, true), nanowire_grid(), strategies.clone())?;
        let table = sweep(&s).map_err(invalid)?;
        w.count(&table);
        let full = resolution_dataset("", &table);
        let mut obs = Dataset::new(
            "",
            Vec::new(),
            vec!["n_bio".into(), "phi".into(), "m_over_m0".into(), "a_over_a0".into()],
        );
        for r in &table.rows {
            let phi = r.point.phi;
            let (m, a) = match PhaseSetting::new(phi) {
                Ok(ph) => {
                    let probe = CoherentProbe::with_mean_photons(PHOTONS as f64).expect("positive");
                    (
                        interferometer::expectation_m(&probe, ph) / PHOTONS as f64,
                        interferometer::expectation_a(PHOTONS, ph),
                    )
                }
                Err(_) => (f64::NAN, f64::NAN),
            };
            obs.push([r.point.n_bio, phi, m, a].into_iter().map(Cell::Num).collect());
        }
        b_parts.push(suffixed(&obs, label));
        let dn = full.select(
            "",
            &[
                "n_bio",
                "dn_classical",
                "dn_classical_envelope",
                "dn_noon",
                "dn_noon_envelope",
                "failure",
            ],
        );
        let mut dn = suffixed(&dn, label);
        dn.provenance = table.provenance.clone();
        c_parts.push(dn);
    }
    let b = join(
        "normalized observables <M>/M0 and <A>/A0 versus n_bio, lossless, N=4",
        &b_parts,
    );
    w.panel(
        "fig2b",
        &b,
        "n_bio",
        &[
            "m_over_m0_dielectric",
            "a_over_a0_dielectric",
            "m_over_m0_plasmonic",
            "a_over_a0_plasmonic",
        ],
    )?;
    let c = join(
        "resolution versus n_bio, lossless, N=4: raw and optimal-bias envelope",
        &c_parts,
    );
    w.panel(
        "fig2c",
        &c,
        "n_bio",
        &[
            "dn_classical_envelope_dielectric",
            "dn_noon_envelope_dielectric",
            "dn_classical_envelope_plasmonic",
            "dn_noon_envelope_plasmonic",
        ],
    )
}

fn fig3(w: &mut Writer) -> Result<(), CliError> {
    let probe = CoherentProbe::with_mean_photons(PHOTONS as f64).expect("positive");
    let mut a = Dataset::new(
        "observables versus phase, N=4",
        vec![format!("photons={PHOTONS}")],
        vec!["phi".into(), "m_over_m0".into(), "a_over_a0".into()],
    );
    for phi in linspace(0.0, 2.0 * PI, PHASE_POINTS) {
        let ph = PhaseSetting::new(phi).expect("finite");
        let m = interferometer::expectation_m(&probe, ph) / PHOTONS as f64;
        let v = interferometer::expectation_a(PHOTONS, ph);
        a.push(vec![Cell::Num(phi), Cell::Num(m), Cell::Num(v)]);
    }
    w.panel("fig3a", &a, "phi", &["m_over_m0", "a_over_a0"])?;

    let mut b = Dataset::new(
        "lossless phase uncertainty at optimal bias versus N",
        Vec::new(),
        vec!["photons".into(), "dphi_classical".into(), "dphi_noon".into()],
    );
    for n in 1..=10usize {
        let p = CoherentProbe::with_mean_photons(n as f64).expect("positive");
        let c = interferometer::delta_phi_coherent(&p, PhaseSetting::new(PI / 2.0).expect("finite"));
        b.push(vec![
            Cell::Int(n as i64),
            Cell::Num(c),
            Cell::Num(interferometer::delta_phi_noon(n)),
        ]);
    }
    w.panel("fig3b", &b, "photons", &["dphi_classical", "dphi_noon"])?;

    let mut parts = Vec::new();
    for (label, kind) in [("dielectric", CoreKind::Dielectric), ("plasmonic", CoreKind::Metal)] {
        let s = scenario(nanowire(kind, true), nanowire_grid(), vec![Strategy::Hl])?;
        let table = sweep(&s).map_err(invalid)?;
        w.count(&table);
        let mut ds = Dataset::new(
            "",
            table.provenance.clone(),
            vec![
                "n_bio".into(),
                "beta_per_nm".into(),
                "dbeta_dn_per_nm".into(),
                "failure".into(),
            ],
        );
        for r in &table.rows {
            let p = r.point;
            ds.push(vec![
                Cell::Num(p.n_bio),
                Cell::Num(p.phi / LENGTH_NM),
                Cell::Num(p.dphi_dn / LENGTH_NM),
                r.failure.clone().map_or(Cell::Empty, Cell::Text),
            ]);
        }
        parts.push(suffixed(&ds, label));
    }
    let all = join("", &parts);
    let c = all.select(
        "propagation constant versus n_bio, lossless",
        &[
            "n_bio",
            "beta_per_nm_dielectric",
            "beta_per_nm_plasmonic",
            "failure_dielectric",
            "failure_plasmonic",
        ],
    );
    w.panel(
        "fig3c",
        &c,
        "n_bio",
        &["beta_per_nm_dielectric", "beta_per_nm_plasmonic"],
    )?;
    let d = all.select(
        "slope of the propagation constant versus n_bio, lossless",
        &[
            "n_bio",
            "dbeta_dn_per_nm_dielectric",
            "dbeta_dn_per_nm_plasmonic",
            "failure_dielectric",
            "failure_plasmonic",
        ],
    );
    w.panel(
        "fig3d",
        &d,
        "n_bio",
        &["dbeta_dn_per_nm_dielectric", "dbeta_dn_per_nm_plasmonic"],
    )
}

/// Prepends the BSA concentration to a wedge dataset.
fn with_concentration(ds: &Dataset) -> Dataset {
    let conc = linspace(BSA_RANGE.0, BSA_RANGE.1, DEFAULT_GRID_POINTS);
    let mut out = ds.clone();
    out.columns.insert(0, "bsa_g_per_100ml".into());
    for (row, c) in out.rows.iter_mut().zip(conc) {
        row.insert(0, Cell::Num(c));
    }
    out
}

fn waveguides(wedge: Option<TransducerSource>) -> Vec<(&'static str, &'static str, TransducerSource, Vec<f64>)> {
    let mut out = vec![("nanowire", "a", nanowire(CoreKind::Metal, false), nanowire_grid())];
    if let Some(t) = wedge {
        out.push(("wedge", "b", t, wedge_grid()));
    }
    out
}

fn fig4(w: &mut Writer, wedge: Option<TransducerSource>) -> Result<(), CliError> {
    let strategies = vec![Strategy::Noon, Strategy::Optimal, Strategy::Sil, Strategy::Hl];
    for (label, letter, t, grid) in waveguides(wedge) {
        let is_wedge = label == "wedge";
        let s = scenario(t, grid, strategies.clone())?;
        let table = sweep(&s).map_err(invalid)?;
        w.count(&table);
        let mut full = resolution_dataset("", &table);
        if is_wedge {
            full = with_concentration(&full);
        }
        let lead: Vec<&str> = if is_wedge {
            vec!["bsa_g_per_100ml", "n_bio"]
        } else {
            vec!["n_bio"]
        };
        let pick = |rest: &[&str]| -> Vec<String> {
            lead.iter()
                .chain(rest)
                .map(|s| s.to_string())
                .chain(["failure".to_string()])
                .collect()
        };
        let xs: Vec<String> = (0..=PHOTONS).map(|n| format!("x_{n}")).collect();
        let xs_ref: Vec<&str> = xs.iter().map(String::as_str).collect();
        let dn = ["dn_noon", "dn_optimal", "dn_sil", "dn_hl"];

        let (eta_panel, x_panel, dn_panel) = match letter {
            "a" => ("fig4a", "fig4c", "fig4e"),
            _ => ("fig4b", "fig4d", "fig4f"),
        };
        let cols = pick(&["eta"]);
        let ds = full.select(
            format!("transmissivity versus n_bio, {label}"),
            &cols.iter().map(String::as_str).collect::<Vec<_>>(),
        );
        w.panel(eta_panel, &ds, "n_bio", &["eta"])?;
        let cols = pick(&xs_ref);
        let ds = full.select(
            format!("optimal state x_n versus n_bio, {label}, N=4"),
            &cols.iter().map(String::as_str).collect::<Vec<_>>(),
        );
        w.panel(x_panel, &ds, "n_bio", &xs_ref)?;
        let cols = pick(&dn);
        let ds = full.select(
            format!("resolution versus n_bio, {label}, N=4"),
            &cols.iter().map(String::as_str).collect::<Vec<_>>(),
        );
        w.panel(dn_panel, &ds, "n_bio", &dn)?;
    }
    Ok(())
}

fn fig5(w: &mut Writer, wedge: Option<TransducerSource>) -> Result<(), CliError> {
    for (label, letter, t, grid) in waveguides(wedge) {
        let is_wedge = label == "wedge";
        let points = if is_wedge {
            WEDGE_FIXED_POINTS
        } else {
            NANOWIRE_FIXED_POINTS
        };
        let s = scenario(t, grid, vec![Strategy::Sil, Strategy::Hl])?;
        let mut parts = Vec::new();
        for (i, &p) in points.iter().enumerate() {
            let x = optimal_state_at(&s, p).map_err(invalid)?;
            let table = fixed_state_sweep(&s, &x).map_err(invalid)?;
            w.count(&table);
            let _ = writeln!(
                w.manifest,
                "{label}_fixed_point_{}={p} x={}",
                i + 1,
                x.iter().map(|v| format!("{v:.16e}")).collect::<Vec<_>>().join(" ")
            );
            let full = resolution_dataset("", &table);
            let mut names = vec!["n_bio", "dn_fixed"];
            if i == 0 {
                names.extend(["dn_sil", "dn_hl"]);
            }
            names.push("failure");
            let mut ds = full.select("", &names);
            ds.columns = ds
                .columns
                .iter()
                .map(|c| match c.as_str() {
                    "dn_fixed" | "failure" => format!("{c}_{}", i + 1),
                    _ => c.clone(),
                })
                .collect();
            parts.push(ds);
        }
        let mut ds = join(
            &format!("resolution of states held fixed from three optimization points, {label}, N=4"),
            &parts,
        );
        if is_wedge {
            ds = with_concentration(&ds);
        }
        w.panel(
            &format!("fig5{letter}"),
            &ds,
            "n_bio",
            &["dn_fixed_1", "dn_fixed_2", "dn_fixed_3", "dn_sil", "dn_hl"],
        )?;

        let single = s.clone().with_grid(vec![points[1]]).map_err(invalid)?;
        let study = n_scaling_study(&single, &SCALING_PHOTONS).map_err(invalid)?;
        let mut sc = Dataset::new(
            format!("resolution versus photon number at n_bio={}, {label}", points[1]),
            study.provenance.clone(),
            [
                "photons",
                "eta",
                "dn_noon",
                "dn_optimal",
                "dn_sil",
                "dn_hl",
                "dn_snl",
                "gap_sil_hl",
                "relative_gap",
            ]
            .iter()
            .map(|s| s.to_string())
            .collect(),
        );
        for r in &study.rows {
            let gap = sil_hl_gap(r.photons, study.point.eta, study.point.dphi_dn);
            sc.push(vec![
                Cell::Int(r.photons as i64),
                Cell::Num(study.point.eta),
                Cell::Num(r.noon),
                Cell::Num(r.optimal),
                Cell::Num(r.sil),
                Cell::Num(r.hl),
                Cell::Num(r.snl),
                Cell::Num(gap),
                Cell::Num(gap / r.sil),
            ]);
        }
        let letter2 = if is_wedge { "d" } else { "c" };
        w.panel(
            &format!("fig5{letter2}"),
            &sc,
            "photons",
            &["dn_noon", "dn_optimal", "dn_sil", "dn_hl", "dn_snl"],
        )?;
    }
    Ok(())
}
