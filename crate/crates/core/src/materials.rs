//! Complex relative permittivity of the waveguide media.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

/// Photon energy times wavelength, eV nm.
pub const HC_EV_NM: f64 = 1_239.841_984_332_002_6;

/// Bundled silver permittivity table (see the header of `data/silver.txt`).
pub const SILVER_TABLE: &str = include_str!("../data/silver.txt");

/// Refractive index of water, used as the BSA solvent.
pub const WATER_INDEX: f64 = 1.333;
/// Refractive-index increment of BSA in water, RIU per g/100ml.
pub const BSA_COEFFICIENT: f64 = 0.00182;
/// Doped-silica core index.
pub const DOPED_SILICA_INDEX: f64 = 1.4475;

#[derive(Debug, Error)]
pub enum MaterialError {
    #[error("wavelength {lambda0} nm outside tabulated range [{min}, {max}] nm")]
    Extrapolation { lambda0: f64, min: f64, max: f64 },
    #[error("invalid wavelength {0} nm")]
    InvalidWavelength(f64),
    #[error("refractive index must be positive, got {0}")]
    InvalidIndex(f64),
    #[error("concentration must be non-negative, got {0}")]
    NegativeConcentration(f64),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("permittivity table needs at least two rows")]
    TooFewRows,
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, MaterialError>;

/// Rows of `(lambda0 [nm], eps)` with strictly increasing wavelength.
#[derive(Debug, Clone, PartialEq)]
pub struct PermittivityTable {
    header: Vec<String>,
    wavelengths: Vec<f64>,
    values: Vec<Complex64>,
}

impl PermittivityTable {
    pub fn new(rows: Vec<(f64, Complex64)>) -> Result<Self> {
        let mut table = PermittivityTable {
            header: Vec::new(),
            wavelengths: Vec::with_capacity(rows.len()),
            values: Vec::with_capacity(rows.len()),
        };
        for (i, (lambda0, eps)) in rows.into_iter().enumerate() {
            table.push(i + 1, lambda0, eps)?;
        }
        if table.wavelengths.len() < 2 {
            return Err(MaterialError::TooFewRows);
        }
        Ok(table)
    }

    fn push(&mut self, line: usize, lambda0: f64, eps: Complex64) -> Result<()> {
        let err = |msg: &str| MaterialError::Parse {
            line,
            msg: msg.to_string(),
        };
        if !(lambda0.is_finite() && eps.re.is_finite() && eps.im.is_finite()) {
            return Err(err("non-finite value"));
        }
        if lambda0 <= 0.0 {
            return Err(err("wavelength must be positive"));
        }
        if eps.im < 0.0 {
            return Err(err("negative Im(eps) (active medium)"));
        }
        if let Some(&last) = self.wavelengths.last() {
            if lambda0 <= last {
                return Err(err("wavelengths must be strictly increasing"));
            }
        }
        self.wavelengths.push(lambda0);
        self.values.push(eps);
        Ok(())
    }

    /// Parses `#` header lines followed by `lambda0 re_eps im_eps` rows.
    /// Malformed rows are errors.
    pub fn parse(text: &str) -> Result<Self> {
        let mut table = PermittivityTable {
            header: Vec::new(),
            wavelengths: Vec::new(),
            values: Vec::new(),
        };
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() {
                continue;
            }
            if let Some(comment) = trimmed.strip_prefix('#') {
                table.header.push(comment.trim().to_string());
                continue;
            }
            let fields: Vec<&str> = trimmed.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(MaterialError::Parse {
                    line,
                    msg: format!("expected 3 columns, found {}", fields.len()),
                });
            }
            let mut nums = [0.0; 3];
            for (slot, field) in nums.iter_mut().zip(&fields) {
                *slot = field.parse().map_err(|_| MaterialError::Parse {
                    line,
                    msg: format!("not a number: {field:?}"),
                })?;
            }
            table.push(line, nums[0], Complex64::new(nums[1], nums[2]))?;
        }
        if table.wavelengths.len() < 2 {
            return Err(MaterialError::TooFewRows);
        }
        Ok(table)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| MaterialError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn header(&self) -> &[String] {
        &self.header
    }

    pub fn range(&self) -> (f64, f64) {
        (self.wavelengths[0], *self.wavelengths.last().unwrap())
    }

    pub fn rows(&self) -> impl Iterator<Item = (f64, Complex64)> + '_ {
        self.wavelengths.iter().copied().zip(self.values.iter().copied())
    }

    /// Linear interpolation in wavelength; exact at nodes.
    pub fn interpolate(&self, lambda0: f64) -> Result<Complex64> {
        let (min, max) = self.range();
        if !(lambda0 >= min && lambda0 <= max) {
            return Err(MaterialError::Extrapolation { lambda0, min, max });
        }
        match self.wavelengths.binary_search_by(|w| w.total_cmp(&lambda0)) {
            Ok(i) => Ok(self.values[i]),
            Err(i) => {
                let (x0, x1) = (self.wavelengths[i - 1], self.wavelengths[i]);
                let (y0, y1) = (self.values[i - 1], self.values[i]);
                let t = (lambda0 - x0) / (x1 - x0);
                Ok(y0 + (y1 - y0) * t)
            }
        }
    }
}

/// One Lorentz oscillator; strength is relative to the squared plasma frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Oscillator {
    pub strength: f64,
    pub frequency_ev: f64,
    pub width_ev: f64,
}

/// `eps(w) = 1 - f0 wp^2 / (w (w + i G0)) + sum_j f_j wp^2 / (w_j^2 - w^2 - i w G_j)`,
/// all frequencies in eV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DrudeLorentz {
    pub plasma_ev: f64,
    #[serde(default = "unit_weight")]
    pub drude_weight: f64,
    pub damping_ev: f64,
    #[serde(default)]
    pub oscillators: Vec<Oscillator>,
}

fn unit_weight() -> f64 {
    1.0
}

impl DrudeLorentz {
    /// Silver parameter set of the table bundled as [`SILVER_TABLE`].
    pub fn silver() -> Self {
        let osc = |strength, frequency_ev, width_ev| Oscillator {
            strength,
            frequency_ev,
            width_ev,
        };
        DrudeLorentz {
            plasma_ev: 9.01,
            drude_weight: 0.845,
            damping_ev: 0.048,
            oscillators: vec![
                osc(0.065, 0.816, 3.886),
                osc(0.124, 4.481, 0.452),
                osc(0.011, 8.185, 0.065),
                osc(0.840, 9.083, 0.916),
                osc(5.646, 20.29, 2.419),
            ],
        }
    }

    pub fn evaluate(&self, lambda0: f64) -> Complex64 {
        let w = HC_EV_NM / lambda0;
        let wp2 = self.plasma_ev * self.plasma_ev;
        let i = Complex64::i();
        let mut eps = Complex64::new(1.0, 0.0) - self.drude_weight * wp2 / (w * (w + i * self.damping_ev));
        for o in &self.oscillators {
            let denom = Complex64::new(o.frequency_ev * o.frequency_ev - w * w, -w * o.width_ev);
            eps += o.strength * wp2 / denom;
        }
        eps
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MaterialKind {
    ConstantIndex(f64),
    Tabulated(PermittivityTable),
    DrudeLorentz(DrudeLorentz),
}

/// A medium's permittivity model plus the lossless switch.
#[derive(Debug, Clone, PartialEq)]
pub struct MaterialModel {
    kind: MaterialKind,
    lossless: bool,
}

impl MaterialModel {
    pub fn constant_index(n: f64) -> Result<Self> {
        if !(n > 0.0 && n.is_finite()) {
            return Err(MaterialError::InvalidIndex(n));
        }
        Ok(MaterialModel {
            kind: MaterialKind::ConstantIndex(n),
            lossless: false,
        })
    }

    pub fn tabulated(table: PermittivityTable) -> Self {
        MaterialModel {
            kind: MaterialKind::Tabulated(table),
            lossless: false,
        }
    }

    pub fn drude_lorentz(params: DrudeLorentz) -> Self {
        MaterialModel {
            kind: MaterialKind::DrudeLorentz(params),
            lossless: false,
        }
    }

    /// Silver from the bundled table.
    pub fn silver() -> Self {
        Self::tabulated(PermittivityTable::parse(SILVER_TABLE).expect("bundled silver table parses"))
    }

    pub fn with_lossless(mut self, lossless: bool) -> Self {
        self.lossless = lossless;
        self
    }

    pub fn is_lossless(&self) -> bool {
        self.lossless
    }

    pub fn kind(&self) -> &MaterialKind {
        &self.kind
    }

    pub fn permittivity(&self, lambda0: f64) -> Result<Complex64> {
        if !(lambda0 > 0.0 && lambda0.is_finite()) {
            return Err(MaterialError::InvalidWavelength(lambda0));
        }
        let eps = match &self.kind {
            MaterialKind::ConstantIndex(n) => Complex64::new(n * n, 0.0),
            MaterialKind::Tabulated(table) => table.interpolate(lambda0)?,
            MaterialKind::DrudeLorentz(dl) => dl.evaluate(lambda0),
        };
        Ok(if self.lossless {
            Complex64::new(eps.re, 0.0)
        } else {
            eps
        })
    }
}

/// Solvent plus solute at concentration `C` (g per 100 ml).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BioMedium {
    pub solvent_index: f64,
    pub solute_coefficient: f64,
    pub concentration: f64,
}

impl BioMedium {
    pub fn new(solvent_index: f64, solute_coefficient: f64, concentration: f64) -> Result<Self> {
        if !(concentration >= 0.0) {
            return Err(MaterialError::NegativeConcentration(concentration));
        }
        Ok(BioMedium {
            solvent_index,
            solute_coefficient,
            concentration,
        })
    }

    /// BSA dissolved in water.
    pub fn bsa(concentration: f64) -> Result<Self> {
        Self::new(WATER_INDEX, BSA_COEFFICIENT, concentration)
    }

    /// `n_s + A C`.
    pub fn bio_index(&self) -> f64 {
        self.solvent_index + self.solute_coefficient * self.concentration
    }
}
