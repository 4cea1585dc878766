//! Ion species data: mass, the dipole transitions that set the optical
//! potential, and the branching into metastable (anti-trapped) states.
//!
//! Species are loaded from a small JSON file:
//!
//! ```json
//! {
//!   "label": "171Yb+",
//!   "mass_amu": 171.0,
//!   "lines": [{ "wavelength_nm": 369.52, "linewidth_mhz": 19.6 }],
//!   "branch_ratio_meta": 0.005,
//!   "metastable_lifetime_ms": 61.8
//! }
//! ```
//!
//! `linewidth_mhz` is the natural linewidth `Gamma / 2 pi`.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::constants::{angular_frequency_from_wavelength, ATOMIC_MASS_UNIT, SPEED_OF_LIGHT};
use crate::error::{Error, Result};

const SHIPPED_YB171: &str = include_str!("../../data/yb171.json");

/// One ground-state dipole transition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtomicLine {
    /// `omega_a`, rad/s.
    pub transition_angular_frequency: f64,
    /// `Gamma_a`, rad/s.
    pub natural_linewidth: f64,
}

impl AtomicLine {
    pub fn new(transition_angular_frequency: f64, natural_linewidth: f64) -> Result<Self> {
        if !(transition_angular_frequency > 0.0) || !(natural_linewidth > 0.0) {
            return Err(Error::Species(format!(
                "line frequencies must be positive (omega_a = {transition_angular_frequency}, Gamma_a = {natural_linewidth})"
            )));
        }
        if natural_linewidth / transition_angular_frequency >= 1e-6 {
            return Err(Error::Species(format!(
                "linewidth {natural_linewidth:.3e} rad/s is not narrow compared to omega_a = {transition_angular_frequency:.3e} rad/s"
            )));
        }
        Ok(AtomicLine {
            transition_angular_frequency,
            natural_linewidth,
        })
    }

    /// From a vacuum wavelength in meters and `Gamma / 2 pi` in Hz.
    pub fn from_wavelength(wavelength: f64, linewidth_hz: f64) -> Result<Self> {
        if !(wavelength > 0.0) {
            return Err(Error::Species(format!("wavelength must be positive, got {wavelength}")));
        }
        Self::new(
            angular_frequency_from_wavelength(wavelength),
            2.0 * PI * linewidth_hz,
        )
    }

    pub fn wavelength(&self) -> f64 {
        2.0 * PI * SPEED_OF_LIGHT / self.transition_angular_frequency
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IonSpecies {
    pub label: String,
    /// kg
    pub mass: f64,
    pub lines: Vec<AtomicLine>,
    /// Fraction of scattering events that end in a metastable state.
    pub branch_ratio_meta: f64,
    /// s
    pub metastable_lifetime: f64,
}

/// On-disk representation of [`IonSpecies`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeciesFile {
    #[serde(default)]
    pub label: Option<String>,
    pub mass_amu: f64,
    pub lines: Vec<LineEntry>,
    pub branch_ratio_meta: f64,
    pub metastable_lifetime_ms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineEntry {
    pub wavelength_nm: f64,
    pub linewidth_mhz: f64,
}

impl IonSpecies {
    pub fn new(
        label: impl Into<String>,
        mass: f64,
        lines: Vec<AtomicLine>,
        branch_ratio_meta: f64,
        metastable_lifetime: f64,
    ) -> Result<Self> {
        if !(mass > 0.0) {
            return Err(Error::Species(format!("mass must be positive, got {mass}")));
        }
        if lines.is_empty() {
            return Err(Error::Species("at least one atomic line is required".into()));
        }
        if !(0.0..=1.0).contains(&branch_ratio_meta) {
            return Err(Error::Species(format!(
                "branch_ratio_meta must lie in [0, 1], got {branch_ratio_meta}"
            )));
        }
        if !(metastable_lifetime >= 0.0) {
            return Err(Error::Species(format!(
                "metastable lifetime must be non-negative, got {metastable_lifetime}"
            )));
        }
        Ok(IonSpecies {
            label: label.into(),
            mass,
            lines,
            branch_ratio_meta,
            metastable_lifetime,
        })
    }

    /// The shipped 171Yb+ data (two S-P lines, mass 171 u).
    pub fn ytterbium_171() -> Self {
        Self::from_json(SHIPPED_YB171).expect("shipped species file is valid")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: SpeciesFile = serde_json::from_str(text)?;
        Self::try_from(file)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn to_file_repr(&self) -> SpeciesFile {
        SpeciesFile {
            label: Some(self.label.clone()),
            mass_amu: self.mass / ATOMIC_MASS_UNIT,
            lines: self
                .lines
                .iter()
                .map(|l| LineEntry {
                    wavelength_nm: l.wavelength() * 1e9,
                    linewidth_mhz: l.natural_linewidth / (2.0 * PI) / 1e6,
                })
                .collect(),
            branch_ratio_meta: self.branch_ratio_meta,
            metastable_lifetime_ms: self.metastable_lifetime * 1e3,
        }
    }
}

impl TryFrom<SpeciesFile> for IonSpecies {
    type Error = Error;

    fn try_from(file: SpeciesFile) -> Result<Self> {
        let lines = file
            .lines
            .iter()
            .map(|l| AtomicLine::from_wavelength(l.wavelength_nm * 1e-9, l.linewidth_mhz * 1e6))
            .collect::<Result<Vec<_>>>()?;
        IonSpecies::new(
            file.label.unwrap_or_else(|| "ion".to_string()),
            file.mass_amu * ATOMIC_MASS_UNIT,
            lines,
            file.branch_ratio_meta,
            file.metastable_lifetime_ms * 1e-3,
        )
    }
}
