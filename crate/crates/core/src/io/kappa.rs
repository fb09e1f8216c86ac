use std::path::Path;

use crate::error::{Error, Result};
use crate::io::parse_columns;

/// Wavelength in micrometres of the scaled frequency `nu`.
pub fn wavelength_um(nu: f64) -> f64 {
    3.0 / nu
}

/// Scaled frequency of a wavelength in micrometres.
pub fn frequency_from_um(lambda: f64) -> f64 {
    3.0 / lambda
}

/// Extra opacity added over a wavelength band.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Co2Modifier {
    pub band_min: f64,
    pub band_max: f64,
    pub level: f64,
}

impl Co2Modifier {
    pub const BAND: (f64, f64) = (14.0, 18.0);

    /// Constant plateau `level` on 14-18 um.
    pub fn plateau(level: f64) -> Result<Self> {
        Self::new(Self::BAND.0, Self::BAND.1, level)
    }

    pub fn new(band_min: f64, band_max: f64, level: f64) -> Result<Self> {
        if !(band_min > 0.0 && band_max > band_min) {
            return Err(Error::Config(format!("bad CO2 band [{band_min}, {band_max}]")));
        }
        if !(level >= 0.0) || !level.is_finite() {
            return Err(Error::Config(format!("added opacity must be finite and >= 0, got {level}")));
        }
        Ok(Self { band_min, band_max, level })
    }

    pub fn added(&self, lambda: f64) -> f64 {
        if lambda >= self.band_min && lambda <= self.band_max {
            self.level
        } else {
            0.0
        }
    }
}

/// Absorption against wavelength, linearly interpolated and floored.
#[derive(Debug, Clone, PartialEq)]
pub struct KappaTable {
    wavelengths: Vec<f64>,
    kappa: Vec<f64>,
    floor: f64,
    floored: usize,
    co2: Option<Co2Modifier>,
}

impl KappaTable {
    pub const DEFAULT_FLOOR: f64 = 1e-3;

    pub fn new(wavelengths: Vec<f64>, kappa: Vec<f64>, floor: f64) -> Result<Self> {
        if wavelengths.is_empty() {
            return Err(Error::Data("absorption table is empty".into()));
        }
        if wavelengths.len() != kappa.len() {
            return Err(Error::Data("absorption table columns differ in length".into()));
        }
        if wavelengths.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
            return Err(Error::Data("wavelengths must be finite and > 0".into()));
        }
        if let Some(w) = wavelengths.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::Data(format!("wavelengths must increase strictly (row {})", w + 2)));
        }
        if let Some(r) = kappa.iter().position(|&k| !(k >= 0.0) || !k.is_finite()) {
            return Err(Error::Data(format!("absorption must be finite and >= 0 (row {})", r + 1)));
        }
        if !(floor > 0.0) {
            return Err(Error::Data(format!("absorption floor must be > 0, got {floor}")));
        }
        let floored = kappa.iter().filter(|&&k| k < floor).count();
        let kappa = kappa.into_iter().map(|k| k.max(floor)).collect();
        Ok(Self {
            wavelengths,
            kappa,
            floor,
            floored,
            co2: None,
        })
    }

    /// Two columns `(wavelength um, kappa)`; `#` starts a comment.
    pub fn load(path: &Path, floor: f64) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let rows = parse_columns(path, &text, 2)?;
        if rows.is_empty() {
            return Err(Error::Data(format!("{}: no data rows", path.display())));
        }
        let (w, k) = rows.into_iter().map(|r| (r[0], r[1])).unzip();
        Self::new(w, k, floor)
    }

    pub fn wavelengths(&self) -> &[f64] {
        &self.wavelengths
    }

    /// Stored values after flooring, without any band modification.
    pub fn values(&self) -> &[f64] {
        &self.kappa
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }

    /// Number of rows raised to the floor.
    pub fn floored_rows(&self) -> usize {
        self.floored
    }

    pub fn co2(&self) -> Option<&Co2Modifier> {
        self.co2.as_ref()
    }

    /// Unmodified absorption at `lambda`, clamped to the end values outside the table.
    pub fn base_at(&self, lambda: f64) -> f64 {
        let (w, k) = (&self.wavelengths, &self.kappa);
        let n = w.len();
        if lambda <= w[0] {
            return k[0];
        }
        if lambda >= w[n - 1] {
            return k[n - 1];
        }
        let i = w.partition_point(|&v| v <= lambda) - 1;
        let t = (lambda - w[i]) / (w[i + 1] - w[i]);
        k[i] + t * (k[i + 1] - k[i])
    }

    pub fn at_wavelength(&self, lambda: f64) -> f64 {
        self.base_at(lambda) + self.co2.map_or(0.0, |m| m.added(lambda))
    }

    pub fn at_frequency(&self, nu: f64) -> f64 {
        self.at_wavelength(wavelength_um(nu))
    }

    /// `kappa_1 = kappa + added opacity`.
    pub fn apply_co2(&self, modifier: &Co2Modifier) -> Result<Self> {
        let (lo, hi) = (self.wavelengths[0], self.wavelengths[self.wavelengths.len() - 1]);
        if modifier.band_min < lo || modifier.band_max > hi {
            return Err(Error::Config(format!(
                "CO2 band [{}, {}] um lies outside the absorption data [{lo}, {hi}] um",
                modifier.band_min, modifier.band_max
            )));
        }
        Ok(Self {
            co2: Some(*modifier),
            ..self.clone()
        })
    }
}
