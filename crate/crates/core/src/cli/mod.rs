//! The `qpsense` command line.
//!
//! Exit codes: 0 on success, 1 when a computation fails, 2 for usage and
//! configuration errors.

pub mod config;
pub mod figures;
pub mod output;

use crate::materials::{MaterialModel, DOPED_SILICA_INDEX};
use crate::modesolver::{single_mode_check, transmissivity, CoreKind, NanowireSpec};
use crate::scenario::{fixed_state_sweep, sweep, Column, ResolutionTable};
use clap::{Parser, Subcommand, ValueEnum};
use config::{ConfigError, RunConfig};
use output::{format_number, Cell, Dataset};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Parser)]
#[command(name = "qpsense", version, about = "Quantum plasmonic sensing simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the guided mode of a circular nanowire.
    ModeSolve(ModeSolveArgs),
    /// Run a resolution sweep described by a TOML file.
    Sweep { config: PathBuf },
    /// Regenerate the datasets behind one figure.
    Reproduce(ReproduceArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WireKind {
    Metal,
    Dielectric,
}

#[derive(Debug, clap::Args)]
pub struct ModeSolveArgs {
    #[arg(long, value_enum)]
    pub kind: WireKind,
    /// Core radius, nm.
    #[arg(long)]
    pub r: f64,
    /// Cladding index.
    #[arg(long)]
    pub nclad: f64,
    /// Free-space wavelength, nm.
    #[arg(long, default_value_t = 810.0)]
    pub lambda0: f64,
    /// Core index of a dielectric wire.
    #[arg(long)]
    pub ncore: Option<f64>,
    /// Drop the imaginary part of the silver permittivity.
    #[arg(long)]
    pub lossless: bool,
    /// Propagation length for the transmissivity, nm.
    #[arg(long, default_value_t = 4000.0)]
    pub length: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Figure {
    Fig2,
    Fig3,
    Fig4,
    Fig5,
}

#[derive(Debug, clap::Args)]
pub struct ReproduceArgs {
    #[arg(value_enum)]
    pub figure: Figure,
    /// Wedge-waveguide dispersion table, needed by fig4 and fig5.
    #[arg(long)]
    pub wedge_data: Option<PathBuf>,
    /// Produce only the nanowire panels of fig4 and fig5.
    #[arg(long, conflicts_with = "wedge_data")]
    pub skip_wedge: bool,
    /// Output directory; defaults to the figure name.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

pub(crate) fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Runtime(format!("cannot write {}: {e}", path.display()))
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let result = match cli.command {
        Command::ModeSolve(a) => mode_solve(&a).map(|text| print!("{text}")),
        Command::Sweep { config } => cmd_sweep(&config),
        Command::Reproduce(a) => figures::reproduce(&a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// `key=value` lines describing the solved mode.
pub fn mode_solve(a: &ModeSolveArgs) -> Result<String, CliError> {
    let (kind, material) = match a.kind {
        WireKind::Metal => {
            if a.ncore.is_some() {
                return Err(CliError::Usage("--ncore applies only to --kind dielectric".into()));
            }
            (CoreKind::Metal, MaterialModel::silver().with_lossless(a.lossless))
        }
        WireKind::Dielectric => {
            if a.lossless {
                return Err(CliError::Usage("--lossless applies only to --kind metal".into()));
            }
            let m = MaterialModel::constant_index(a.ncore.unwrap_or(DOPED_SILICA_INDEX))
                .map_err(|e| CliError::Usage(e.to_string()))?;
            (CoreKind::Dielectric, m)
        }
    };
    let spec = NanowireSpec::new(kind, a.r, material, a.nclad, a.lambda0, a.length)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let mode = spec.solve(None).map_err(|e| CliError::Runtime(e.to_string()))?;
    let mut out = String::new();
    for (k, v) in [
        ("n_eff_re", mode.n_eff.re),
        ("n_eff_im", mode.n_eff.im),
        ("beta_per_nm", mode.beta),
        ("kappa_per_nm", mode.kappa),
        ("eta", transmissivity(&mode, a.length)),
        ("residual", mode.residual),
    ] {
        out.push_str(&format!("{k}={}\n", format_number(v)));
    }
    if kind == CoreKind::Dielectric {
        out.push_str(&format!("single_mode={}\n", single_mode_check(&spec, &mode)));
    }
    Ok(out)
}

/// Fixed column layout of a resolution table: `n_bio, phi, eta, dphi_dn`,
/// one `dn_*` column per strategy, `x_0..x_N` when a state was computed,
/// then `failure` (empty for good rows).
pub fn resolution_dataset(title: &str, table: &ResolutionTable) -> Dataset {
    let with_x = table
        .columns
        .iter()
        .any(|c| matches!(c, Column::Optimal | Column::Fixed));
    let mut columns: Vec<String> = ["n_bio", "phi", "eta", "dphi_dn"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    columns.extend(table.columns.iter().map(|c| c.name().to_string()));
    if with_x {
        columns.extend((0..=table.photons).map(|n| format!("x_{n}")));
    }
    columns.push("failure".into());
    let mut ds = Dataset::new(title, table.provenance.clone(), columns);
    for r in &table.rows {
        let p = &r.point;
        let mut row: Vec<Cell> = [p.n_bio, p.phi, p.eta, p.dphi_dn].into_iter().map(Cell::Num).collect();
        row.extend(r.delta_n.iter().map(|&v| Cell::Num(v)));
        if with_x {
            match &r.x {
                Some(x) => row.extend(x.iter().map(|&v| Cell::Num(v))),
                None => row.extend((0..=table.photons).map(|_| Cell::Num(f64::NAN))),
            }
        }
        row.push(r.failure.clone().map_or(Cell::Empty, Cell::Text));
        ds.push(row);
    }
    ds
}

fn cmd_sweep(path: &Path) -> Result<(), CliError> {
    let cfg = RunConfig::from_path(path)?;
    let table = match &cfg.fixed_state {
        Some(x) => fixed_state_sweep(&cfg.scenario, x),
        None => sweep(&cfg.scenario),
    }
    .map_err(|e| CliError::Usage(e.to_string()))?;
    let ds = resolution_dataset("resolution sweep", &table);
    ds.write_csv(&cfg.csv).map_err(|e| io_error(&cfg.csv, e))?;
    if let Some(svg) = &cfg.svg {
        let ys: Vec<&str> = table.columns.iter().map(|c| c.name()).collect();
        std::fs::write(svg, ds.to_svg("n_bio", &ys)).map_err(|e| io_error(svg, e))?;
    }
    let failed = table.failures();
    if failed > 0 {
        return Err(CliError::Runtime(format!(
            "{failed} of {} grid points failed; see the failure column of {}",
            table.rows.len(),
            cfg.csv.display()
        )));
    }
    Ok(())
}
