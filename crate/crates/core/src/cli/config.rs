//! Sweep configuration files.
//!
//! A TOML document; every key below is optional unless marked required.
//!
//! ```toml
//! [transducer]
//! kind = "nanowire"      # required: "nanowire" | "table"
//! core = "silver"        # nanowire: "silver" | "dielectric" | "drude_lorentz"
//! radius_nm = 50.0
//! lambda0_nm = 810.0
//! lossless = false       # metal cores only
//! core_index = 1.4475    # dielectric only
//! path = "wedge.txt"     # table only, relative to this file
//!
//! [transducer.drude_lorentz]   # required with core = "drude_lorentz"
//! plasma_ev = 9.01
//! drude_weight = 0.845   # defaults to 1
//! damping_ev = 0.048
//! oscillators = [{ strength = 0.065, frequency_ev = 0.816, width_ev = 3.886 }]
//!
//! [probe]
//! photons = 4
//! strategies = ["classical", "noon", "optimal", "sil", "hl", "snl"]
//! fixed_state = [0.5, 0.0, 0.0, 0.0, 0.5]   # holds the state fixed
//!
//! [grid]
//! variable = "n_bio"     # "n_bio" | "bsa_concentration" (g/100ml)
//! start = 1.1
//! stop = 1.4
//! points = 201
//! values = [1.2, 1.3]    # instead of start/stop/points
//!
//! [run]
//! length_nm = 4000.0
//! fd_step = 1e-5
//! optimizer_tol = 1e-10
//!
//! [output]
//! csv = "sweep.csv"      # required, relative to this file
//! svg = "sweep.svg"
//! ```
//!
//! Unknown sections or keys and wrongly typed values are errors. All of
//! them are reported together.

use crate::materials::{BioMedium, DrudeLorentz, MaterialModel, DOPED_SILICA_INDEX};
use crate::modesolver::{CoreKind, DispersionTable, NanowireSpec, DEFAULT_FD_STEP};
use crate::scenario::{
    linspace, SensingScenario, Strategy, TransducerSource, DEFAULT_GRID_POINTS, DEFAULT_OPTIMIZER_TOL, NANOWIRE_RANGE,
};
use std::path::{Path, PathBuf};
use thiserror::Error;
use toml::{Table, Value};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{} configuration error(s):\n  {}", .0.len(), .0.join("\n  "))]
    Invalid(Vec<String>),
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub scenario: SensingScenario,
    pub fixed_state: Option<Vec<f64>>,
    pub csv: PathBuf,
    pub svg: Option<PathBuf>,
}

/// Typed access to one section that records every problem it meets.
struct Section<'a> {
    name: &'static str,
    table: Option<&'a Table>,
    seen: Vec<&'static str>,
}

impl<'a> Section<'a> {
    fn new(root: &'a Table, name: &'static str, errors: &mut Vec<String>) -> Self {
        let table = match root.get(name) {
            None => None,
            Some(Value::Table(t)) => Some(t),
            Some(_) => {
                errors.push(format!("[{name}] must be a table"));
                None
            }
        };
        Section {
            name,
            table,
            seen: Vec::new(),
        }
    }

    fn raw(&mut self, key: &'static str) -> Option<&'a Value> {
        self.seen.push(key);
        self.table.and_then(|t| t.get(key))
    }

    fn type_error(&self, key: &str, want: &str, errors: &mut Vec<String>) {
        errors.push(format!("{}.{key}: expected {want}", self.name));
    }

    fn float(&mut self, key: &'static str, errors: &mut Vec<String>) -> Option<f64> {
        match self.raw(key)? {
            Value::Float(v) => Some(*v),
            Value::Integer(v) => Some(*v as f64),
            _ => {
                self.type_error(key, "a number", errors);
                None
            }
        }
    }

    fn int(&mut self, key: &'static str, errors: &mut Vec<String>) -> Option<i64> {
        match self.raw(key)? {
            Value::Integer(v) => Some(*v),
            _ => {
                self.type_error(key, "an integer", errors);
                None
            }
        }
    }

    fn string(&mut self, key: &'static str, errors: &mut Vec<String>) -> Option<&'a str> {
        match self.raw(key)? {
            Value::String(v) => Some(v.as_str()),
            _ => {
                self.type_error(key, "a string", errors);
                None
            }
        }
    }

    fn boolean(&mut self, key: &'static str, errors: &mut Vec<String>) -> Option<bool> {
        match self.raw(key)? {
            Value::Boolean(v) => Some(*v),
            _ => {
                self.type_error(key, "true or false", errors);
                None
            }
        }
    }

    fn array(&mut self, key: &'static str, errors: &mut Vec<String>) -> Option<&'a Vec<Value>> {
        match self.raw(key)? {
            Value::Array(v) => Some(v),
            _ => {
                self.type_error(key, "an array", errors);
                None
            }
        }
    }

    fn floats(&mut self, key: &'static str, errors: &mut Vec<String>) -> Option<Vec<f64>> {
        let arr = self.array(key, errors)?;
        let mut out = Vec::with_capacity(arr.len());
        for v in arr {
            match v {
                Value::Float(f) => out.push(*f),
                Value::Integer(i) => out.push(*i as f64),
                _ => {
                    self.type_error(key, "an array of numbers", errors);
                    return None;
                }
            }
        }
        Some(out)
    }

    fn present(&self, key: &str) -> bool {
        self.table.is_some_and(|t| t.contains_key(key))
    }

    fn finish(self, errors: &mut Vec<String>) {
        if let Some(t) = self.table {
            for key in t.keys() {
                if !self.seen.contains(&key.as_str()) {
                    errors.push(format!("{}.{key}: unknown key", self.name));
                }
            }
        }
    }
}

const SECTIONS: [&str; 5] = ["transducer", "probe", "grid", "run", "output"];

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    /// Parses a document; relative paths resolve against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self, ConfigError> {
        let root: Table = text
            .parse()
            .map_err(|e: toml::de::Error| ConfigError::Invalid(vec![e.to_string().trim().to_string()]))?;
        let mut errors = Vec::new();
        for key in root.keys() {
            if !SECTIONS.contains(&key.as_str()) {
                errors.push(format!("[{key}]: unknown section"));
            }
        }

        let mut run = Section::new(&root, "run", &mut errors);
        let length = run.float("length_nm", &mut errors).unwrap_or(4000.0);
        let fd_step = run.float("fd_step", &mut errors).unwrap_or(DEFAULT_FD_STEP);
        let optimizer_tol = run.float("optimizer_tol", &mut errors).unwrap_or(DEFAULT_OPTIMIZER_TOL);
        run.finish(&mut errors);

        let transducer = parse_transducer(&root, base, length, &mut errors);

        let mut probe = Section::new(&root, "probe", &mut errors);
        let photons = probe.int("photons", &mut errors).unwrap_or(4);
        if photons < 1 {
            errors.push(format!("probe.photons: must be at least 1, got {photons}"));
        }
        let strategies = match probe.array("strategies", &mut errors) {
            None => Strategy::ALL.to_vec(),
            Some(arr) => {
                let mut out = Vec::new();
                for v in arr {
                    match v.as_str().and_then(Strategy::parse) {
                        Some(s) if !out.contains(&s) => out.push(s),
                        Some(s) => errors.push(format!("probe.strategies: duplicate \"{s}\"")),
                        None => errors.push(format!(
                            "probe.strategies: unknown strategy {v}; expected one of classical, noon, optimal, sil, hl, snl"
                        )),
                    }
                }
                out
            }
        };
        let fixed_state = probe.floats("fixed_state", &mut errors);
        if let Some(x) = &fixed_state {
            if photons >= 1 && x.len() != photons as usize + 1 {
                errors.push(format!(
                    "probe.fixed_state: needs photons + 1 = {} entries, got {}",
                    photons + 1,
                    x.len()
                ));
            }
        }
        probe.finish(&mut errors);

        let grid = parse_grid(&root, &mut errors);

        let mut output = Section::new(&root, "output", &mut errors);
        let csv = output.string("csv", &mut errors).map(|p| base.join(p));
        if csv.is_none() && !output.present("csv") {
            errors.push("output.csv: required".into());
        }
        let svg = output.string("svg", &mut errors).map(|p| base.join(p));
        output.finish(&mut errors);

        let mut scenario = None;
        if let Some(t) = transducer {
            let s = SensingScenario {
                transducer: t,
                length,
                photons: photons.max(0) as usize,
                strategies,
                grid: grid.unwrap_or_default(),
                fd_step,
                optimizer_tol,
            };
            errors.extend(s.violations());
            scenario = Some(s);
        }
        if !errors.is_empty() {
            errors.dedup();
            return Err(ConfigError::Invalid(errors));
        }
        Ok(RunConfig {
            scenario: scenario.expect("no errors implies a transducer"),
            fixed_state,
            csv: csv.expect("no errors implies output.csv"),
            svg,
        })
    }
}

fn parse_transducer(root: &Table, base: &Path, length: f64, errors: &mut Vec<String>) -> Option<TransducerSource> {
    let mut sec = Section::new(root, "transducer", errors);
    let kind = sec.string("kind", errors);
    let core = sec.string("core", errors);
    let radius = sec.float("radius_nm", errors).unwrap_or(50.0);
    let lambda0 = sec.float("lambda0_nm", errors).unwrap_or(810.0);
    let lossless = sec.boolean("lossless", errors);
    let core_index = sec.float("core_index", errors);
    let path = sec.string("path", errors);
    let drude = sec.raw("drude_lorentz").and_then(|v| {
        v.clone()
            .try_into::<DrudeLorentz>()
            .map_err(|e| errors.push(format!("transducer.drude_lorentz: {}", e.to_string().trim())))
            .ok()
    });
    let drude_present = sec.present("drude_lorentz");
    let table_present = sec.table.is_some();
    sec.finish(errors);
    if !table_present {
        errors.push("[transducer]: required section".into());
        return None;
    }
    match kind {
        Some("nanowire") => {
            if path.is_some() {
                errors.push("transducer.path: only valid with kind = \"table\"".into());
            }
            let core = core.unwrap_or("silver");
            if drude_present && core != "drude_lorentz" {
                errors.push("transducer.drude_lorentz: only valid with core = \"drude_lorentz\"".into());
            }
            let (kind, material) = match core {
                "drude_lorentz" => {
                    if core_index.is_some() {
                        errors.push("transducer.core_index: only valid with core = \"dielectric\"".into());
                    }
                    if !drude_present {
                        errors.push("transducer.drude_lorentz: required with core = \"drude_lorentz\"".into());
                    }
                    let m = drude.map(|p| MaterialModel::drude_lorentz(p).with_lossless(lossless.unwrap_or(false)));
                    (CoreKind::Metal, m)
                }
                "silver" => {
                    if core_index.is_some() {
                        errors.push("transducer.core_index: only valid with core = \"dielectric\"".into());
                    }
                    (
                        CoreKind::Metal,
                        Some(MaterialModel::silver().with_lossless(lossless.unwrap_or(false))),
                    )
                }
                "dielectric" => {
                    if lossless.is_some() {
                        errors.push("transducer.lossless: only valid with a metal core".into());
                    }
                    let n = core_index.unwrap_or(DOPED_SILICA_INDEX);
                    let m = MaterialModel::constant_index(n)
                        .map_err(|e| errors.push(format!("transducer.core_index: {e}")))
                        .ok();
                    (CoreKind::Dielectric, m)
                }
                other => {
                    errors.push(format!(
                        "transducer.core: unknown core \"{other}\"; expected silver, drude_lorentz or dielectric"
                    ));
                    (CoreKind::Metal, None)
                }
            };
            let material = material?;
            // the cladding index is overwritten per grid point
            // a bad length is reported by the scenario checks
            let length = if length > 0.0 && length.is_finite() {
                length
            } else {
                1.0
            };
            match NanowireSpec::new(kind, radius, material, NANOWIRE_RANGE.0, lambda0, length) {
                Ok(s) => Some(TransducerSource::Nanowire(s)),
                Err(e) => {
                    errors.push(format!("transducer: {e}"));
                    None
                }
            }
        }
        Some("table") => {
            for (key, set) in [
                ("core", core.is_some()),
                ("lossless", lossless.is_some()),
                ("core_index", core_index.is_some()),
                ("drude_lorentz", drude_present),
            ] {
                if set {
                    errors.push(format!("transducer.{key}: only valid with kind = \"nanowire\""));
                }
            }
            let Some(p) = path else {
                errors.push("transducer.path: required with kind = \"table\"".into());
                return None;
            };
            match DispersionTable::from_path(base.join(p)) {
                Ok(t) => Some(TransducerSource::Table(t)),
                Err(e) => {
                    errors.push(format!("transducer.path: {e}"));
                    None
                }
            }
        }
        Some(other) => {
            errors.push(format!(
                "transducer.kind: unknown kind \"{other}\"; expected nanowire or table"
            ));
            None
        }
        None => {
            errors.push("transducer.kind: required".into());
            None
        }
    }
}

fn parse_grid(root: &Table, errors: &mut Vec<String>) -> Option<Vec<f64>> {
    let mut sec = Section::new(root, "grid", errors);
    let variable = sec.string("variable", errors).unwrap_or("n_bio");
    let values = sec.floats("values", errors);
    let range_keys = ["start", "stop", "points"].iter().any(|k| sec.present(k));
    let start = sec.float("start", errors);
    let stop = sec.float("stop", errors);
    let points = sec.int("points", errors);
    sec.finish(errors);
    if values.is_some() && range_keys {
        errors.push("grid: give either values or start/stop/points, not both".into());
        return None;
    }
    let raw = match values {
        Some(v) => v,
        None => {
            let (a, b) = match variable {
                "bsa_concentration" => (start.unwrap_or(0.0), stop.unwrap_or(60.0)),
                _ => (start.unwrap_or(NANOWIRE_RANGE.0), stop.unwrap_or(NANOWIRE_RANGE.1)),
            };
            let n = points.unwrap_or(DEFAULT_GRID_POINTS as i64);
            if n < 1 {
                errors.push(format!("grid.points: must be at least 1, got {n}"));
                return None;
            }
            if n > 1 && !(b > a) {
                errors.push(format!("grid: stop ({b}) must exceed start ({a})"));
                return None;
            }
            linspace(a, b, n as usize)
        }
    };
    match variable {
        "n_bio" => Some(raw),
        "bsa_concentration" => {
            let mut out = Vec::with_capacity(raw.len());
            for c in raw {
                match BioMedium::bsa(c) {
                    Ok(m) => out.push(m.bio_index()),
                    Err(e) => {
                        errors.push(format!("grid: {e}"));
                        return None;
                    }
                }
            }
            Some(out)
        }
        other => {
            errors.push(format!(
                "grid.variable: unknown variable \"{other}\"; expected n_bio or bsa_concentration"
            ));
            None
        }
    }
}
