//! Experiment configuration files.
//!
//! JSON with unit-suffixed keys. Unknown keys are rejected.
//!
//! ```json
//! {
//!   "trap": { "omega_r_mhz": 0.5, "wavelength_nm": 1064, "waist_um": 21.0, "aspect_ratio": 4.0 },
//!   "task": "equilibrate",
//!   "task_params": { "n_ions": 10 },
//!   "seed": 1
//! }
//! ```

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::CliError;
use crate::physics::constants::{kelvin_to_joule, ATOMIC_MASS_UNIT};
use crate::physics::{intensity_from_power, trap_depth, IonSpecies, LatticeVariant, OpticalTrapConfig, TrapConfig};
use crate::spin::ModePartition;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    #[serde(alias = "Equilibrate")]
    Equilibrate,
    #[serde(alias = "Modes")]
    Modes,
    #[serde(alias = "TransitionScan", alias = "transition_scan")]
    TransitionScan,
    #[serde(alias = "WaistScan", alias = "waist_scan")]
    WaistScan,
    #[serde(alias = "Barrier")]
    Barrier,
    #[serde(alias = "Spin")]
    Spin,
    #[serde(alias = "Lifetime")]
    Lifetime,
    #[serde(alias = "TableOne", alias = "table_one")]
    TableOne,
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::Equilibrate => "equilibrate",
            Task::Modes => "modes",
            Task::TransitionScan => "transition-scan",
            Task::WaistScan => "waist-scan",
            Task::Barrier => "barrier",
            Task::Spin => "spin",
            Task::Lifetime => "lifetime",
            Task::TableOne => "table-one",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrapSection {
    /// Radial DC frequency `omega_r / 2 pi`.
    pub omega_r_mhz: f64,
    #[serde(default)]
    pub anisotropy: f64,
    #[serde(default = "default_wavelength_nm")]
    pub wavelength_nm: f64,
    /// Omitted for a uniform (infinitely wide) beam.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub waist_um: Option<f64>,
    #[serde(default)]
    pub lattice_variant: LatticeVariant,
    /// Optical depth. At most one of `depth_mk`, `aspect_ratio`, `input_power_w`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth_mk: Option<f64>,
    /// Sets the depth so that `omega_z / omega_r` at the origin equals this.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aspect_ratio: Option<f64>,
    /// Cavity input power; needs `finesse` and `waist_um`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_power_w: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub finesse: Option<f64>,
}

fn default_wavelength_nm() -> f64 {
    1064.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Relative to the config file; the shipped Yb+ data when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub species_file: Option<PathBuf>,
    pub trap: TrapSection,
    /// Must agree with the task named on the command line when given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task: Option<Task>,
    #[serde(default)]
    pub task_params: serde_json::Map<String, serde_json::Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Parse(e.to_string()))
    }

    /// Task parameters as `T`; missing or mistyped keys are validation errors.
    pub fn params<T: DeserializeOwned>(&self) -> Result<T, CliError> {
        serde_json::from_value(serde_json::Value::Object(self.task_params.clone()))
            .map_err(|e| CliError::Validation(format!("task_params: {e}")))
    }

    pub fn species(&self, config_dir: &Path) -> Result<IonSpecies, CliError> {
        match &self.species_file {
            None => Ok(IonSpecies::ytterbium_171()),
            Some(p) => {
                let path = if p.is_absolute() { p.clone() } else { config_dir.join(p) };
                IonSpecies::from_file(&path).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
            }
        }
    }
}

fn positive(name: &str, v: f64) -> Result<f64, CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::Validation(format!("{name} must be positive and finite, got {v}")))
    }
}

impl TrapSection {
    pub fn waist(&self) -> Result<f64, CliError> {
        match self.waist_um {
            None => Ok(f64::INFINITY),
            Some(w) => Ok(positive("waist_um", w)? * 1e-6),
        }
    }

    /// Trap with the optical depth resolved from whichever depth key is set.
    pub fn build(&self, species: &IonSpecies) -> Result<TrapConfig, CliError> {
        let set = [self.depth_mk.is_some(), self.aspect_ratio.is_some(), self.input_power_w.is_some()];
        if set.iter().filter(|&&b| b).count() > 1 {
            return Err(CliError::Validation(
                "give at most one of trap.depth_mk, trap.aspect_ratio, trap.input_power_w".into(),
            ));
        }
        let omega_r = 2.0 * PI * positive("omega_r_mhz", self.omega_r_mhz)? * 1e6;
        let wavelength = positive("wavelength_nm", self.wavelength_nm)? * 1e-9;
        let waist = self.waist()?;
        if !(self.anisotropy > -1.0) {
            return Err(CliError::Validation(format!("anisotropy must exceed -1, got {}", self.anisotropy)));
        }
        let mut optical = OpticalTrapConfig::new(wavelength, waist, 0.0)
            .map_err(CliError::validation)?
            .with_variant(self.lattice_variant);
        if let Some(f) = self.finesse {
            optical = optical.with_cavity(positive("finesse", f)?, self.input_power_w.unwrap_or(0.0));
        }
        let trap = TrapConfig::new(omega_r, self.anisotropy, optical).map_err(CliError::validation)?;

        if let Some(mk) = self.depth_mk {
            if !(mk >= 0.0) {
                return Err(CliError::Validation(format!("depth_mk must be non-negative, got {mk}")));
            }
            return Ok(trap.with_depth(kelvin_to_joule(mk * 1e-3)));
        }
        if let Some(alpha) = self.aspect_ratio {
            return trap.with_aspect_ratio(positive("aspect_ratio", alpha)?, species).map_err(CliError::validation);
        }
        if let Some(p) = self.input_power_w {
            let finesse = self
                .finesse
                .ok_or_else(|| CliError::Validation("input_power_w needs trap.finesse".into()))?;
            if self.waist_um.is_none() {
                return Err(CliError::Validation("input_power_w needs trap.waist_um".into()));
            }
            let i = intensity_from_power(p, finesse, waist).map_err(CliError::validation)?;
            let u = trap_depth(species, trap.optical.laser_angular_frequency(), i).map_err(CliError::validation)?;
            return Ok(trap.with_depth(u));
        }
        Ok(trap)
    }
}

fn default_restarts() -> usize {
    crate::equilibrium::DEFAULT_RESTARTS
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquilibrateParams {
    pub n_ions: usize,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModesParams {
    pub n_ions: usize,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    /// Index into the energy-sorted equilibria (0 = stable).
    #[serde(default)]
    pub configuration: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionScanParams {
    pub n_values: Vec<usize>,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaistScanParams {
    pub n_ions: usize,
    pub waists_um: Vec<f64>,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BarrierParams {
    pub n_ions: usize,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    /// Equilibrium indices (energy order) of start and target.
    #[serde(default)]
    pub from: usize,
    #[serde(default = "one")]
    pub to: usize,
    #[serde(default = "default_paths")]
    pub n_paths: usize,
    #[serde(default = "default_samples")]
    pub n_samples: usize,
    #[serde(default = "one_f")]
    pub temperature_mk: f64,
    /// `d` as a fraction of the start-target distance.
    #[serde(default = "default_d_fraction")]
    pub d_fraction: f64,
    #[serde(default = "default_epsilon_over_d")]
    pub epsilon_over_d: f64,
}

fn one() -> usize {
    1
}
fn one_f() -> f64 {
    1.0
}
fn default_paths() -> usize {
    10
}
fn default_samples() -> usize {
    1000
}
fn default_d_fraction() -> f64 {
    0.05
}
fn default_epsilon_over_d() -> f64 {
    2.5
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpinParams {
    pub n_ions: usize,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    /// Drive frequency relative to the highest used mode; ignored when `mu_mhz` is set.
    #[serde(default = "default_mu_ratio")]
    pub mu_over_omega_max: f64,
    /// Drive frequency `mu / 2 pi`.
    #[serde(default)]
    pub mu_mhz: Option<f64>,
    #[serde(default = "default_rabi_khz")]
    pub rabi_khz: f64,
    /// Sets `E_recoil = (h / lambda)^2 / 2m`.
    #[serde(default = "default_sdf_wavelength_nm")]
    pub sdf_wavelength_nm: f64,
    #[serde(default = "default_partition")]
    pub mode_partition: ModePartition,
    /// Optional drive-frequency sweep, relative to the highest used mode.
    #[serde(default)]
    pub sweep_mu_over_omega_max: Vec<f64>,
}

fn default_mu_ratio() -> f64 {
    1.002
}
fn default_rabi_khz() -> f64 {
    100.0
}
fn default_sdf_wavelength_nm() -> f64 {
    355.0
}
fn default_partition() -> ModePartition {
    ModePartition::OutOfPlane
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LifetimeParams {
    pub n_ions: usize,
    /// Peak intensity; otherwise from the trap's cavity power or depth.
    #[serde(default)]
    pub intensity_w_per_m2: Option<f64>,
    #[serde(default = "default_pressure_mbar")]
    pub pressure_mbar: f64,
    #[serde(default = "default_temperature_k")]
    pub temperature_k: f64,
    #[serde(default = "default_gas_polarizability_a3")]
    pub gas_polarizability_a3: f64,
    #[serde(default = "default_gas_mass_amu")]
    pub gas_mass_amu: f64,
}

fn default_pressure_mbar() -> f64 {
    1e-11
}
fn default_temperature_k() -> f64 {
    300.0
}
fn default_gas_polarizability_a3() -> f64 {
    0.787
}
fn default_gas_mass_amu() -> f64 {
    2.0
}

impl LifetimeParams {
    pub fn gas_mass(&self) -> f64 {
        self.gas_mass_amu * ATOMIC_MASS_UNIT
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableOneParams {
    #[serde(default = "default_table_ns")]
    pub n_values: Vec<usize>,
    /// Overrides `trap.finesse`; 3000 when neither is set.
    #[serde(default)]
    pub finesse: Option<f64>,
    /// Explicit waists, one per `n_values` entry; otherwise chosen from `waist_grid_um`.
    #[serde(default)]
    pub waists_um: Option<Vec<f64>>,
    #[serde(default = "default_waist_grid")]
    pub waist_grid_um: Vec<f64>,
    #[serde(default = "default_asymptote_tolerance")]
    pub asymptote_tolerance: f64,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
}

fn default_table_ns() -> Vec<usize> {
    vec![5, 10, 20, 30]
}
fn default_waist_grid() -> Vec<f64> {
    (0..=390).map(|k| 5.0 + 0.5 * k as f64).collect()
}
fn default_asymptote_tolerance() -> f64 {
    0.02
}
