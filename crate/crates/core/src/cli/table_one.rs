//! Minimum optical trapping parameters that keep N-ion crystals planar.
//!
//! Per ion number: the stable configuration and its geometry, a beam waist,
//! the transition aspect ratio at that waist, the Stark shift (trap depth)
//! that reaches it, and the cavity intensity, input power and off-resonant
//! scattering rate that go with that depth.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::equilibrium::{find_equilibria, EquilibriumResult};
use crate::error::{Error, Result};
use crate::lifetime::scattering_rates;
use crate::physics::constants::{joule_to_kelvin, PLANCK};
use crate::physics::{power_from_intensity, stark_shift_per_intensity, IonSpecies, TrapConfig};
use crate::transition::{alpha_tr_at, smallest_waist_near_asymptote, waist_sweep_fixed};

#[derive(Debug, Clone, PartialEq)]
pub struct TableOneSettings {
    pub n_values: Vec<usize>,
    pub finesse: f64,
    /// m, one per entry of `n_values`; chosen from `waist_grid` when absent.
    pub waists: Option<Vec<f64>>,
    /// m
    pub waist_grid: Vec<f64>,
    pub asymptote_tolerance: f64,
    pub restarts: usize,
    pub seed: u64,
}

/// One column; a cell is `None` when it or a quantity it depends on failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableOneColumn {
    pub n_ions: usize,
    pub configuration: Option<Vec<usize>>,
    pub min_spacing_m: Option<f64>,
    pub radius_m: Option<f64>,
    pub waist_m: Option<f64>,
    pub alpha_tr: Option<f64>,
    pub stark_shift_j: Option<f64>,
    pub intensity_w_per_m2: Option<f64>,
    pub power_w: Option<f64>,
    pub gamma_off_per_s: Option<f64>,
    pub errors: Vec<String>,
}

impl TableOneColumn {
    fn empty(n_ions: usize) -> Self {
        TableOneColumn {
            n_ions,
            configuration: None,
            min_spacing_m: None,
            radius_m: None,
            waist_m: None,
            alpha_tr: None,
            stark_shift_j: None,
            intensity_w_per_m2: None,
            power_w: None,
            gamma_off_per_s: None,
            errors: Vec::new(),
        }
    }
}

/// Waist, `alpha_tr` at it, depth, intensity, power and scattering rate for
/// one configuration. Cells are filled in order until one fails.
fn fill_optics(
    col: &mut TableOneColumn,
    eq: &EquilibriumResult,
    trap: &TrapConfig,
    species: &IonSpecies,
    settings: &TableOneSettings,
    explicit_waist: Option<f64>,
) -> Result<()> {
    let w0 = match explicit_waist {
        Some(w) => w,
        None => {
            let asymptote = alpha_tr_at(&eq.positions, &trap.with_waist(f64::INFINITY), species)?;
            let points: Vec<_> = waist_sweep_fixed(eq, trap, species, &settings.waist_grid)
                .into_iter()
                .filter_map(|p| p.ok())
                .collect();
            smallest_waist_near_asymptote(&points, asymptote, settings.asymptote_tolerance).ok_or_else(|| {
                Error::Domain(format!(
                    "no grid waist has alpha_tr within {} of the asymptote {asymptote:.4}",
                    settings.asymptote_tolerance
                ))
            })?
        }
    };
    col.waist_m = Some(w0);
    let at_waist = trap.with_waist(w0);
    let alpha = alpha_tr_at(&eq.positions, &at_waist, species)?;
    col.alpha_tr = Some(alpha);
    let depth = at_waist.depth_for_aspect_ratio(alpha, species)?;
    col.stark_shift_j = Some(depth);
    let omega_l = trap.optical.laser_angular_frequency();
    let intensity = depth / stark_shift_per_intensity(species, omega_l)?.abs();
    col.intensity_w_per_m2 = Some(intensity);
    col.power_w = Some(power_from_intensity(intensity, settings.finesse, w0)?);
    col.gamma_off_per_s = Some(scattering_rates(species, omega_l, intensity)?.0);
    Ok(())
}

fn column(n: usize, k: usize, trap: &TrapConfig, species: &IonSpecies, settings: &TableOneSettings) -> TableOneColumn {
    let mut col = TableOneColumn::empty(n);
    let eq = match find_equilibria(n, trap, species, settings.restarts, settings.seed) {
        Ok(mut v) => v.swap_remove(0),
        Err(e) => {
            col.errors.push(format!("equilibrium: {e}"));
            return col;
        }
    };
    col.configuration = Some(eq.ring_configuration.clone());
    col.radius_m = Some(eq.r_max);
    col.min_spacing_m = eq.d_min;
    let explicit = settings.waists.as_ref().map(|w| w[k]);
    if let Err(e) = fill_optics(&mut col, &eq, trap, species, settings, explicit) {
        col.errors.push(e.to_string());
    }
    col
}

/// All columns, computed in parallel. Only malformed settings are an error;
/// per-column failures are recorded in the column.
pub fn table_one(trap: &TrapConfig, species: &IonSpecies, settings: &TableOneSettings) -> Result<Vec<TableOneColumn>> {
    if let Some(w) = &settings.waists {
        if w.len() != settings.n_values.len() {
            return Err(Error::Domain(format!(
                "{} waists given for {} ion numbers",
                w.len(),
                settings.n_values.len()
            )));
        }
        if w.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::Domain("waists must be positive".into()));
        }
    } else if settings.waist_grid.is_empty() || settings.waist_grid.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::Domain("waist grid must be non-empty and positive".into()));
    }
    if !(settings.finesse > 0.0) {
        return Err(Error::Domain("finesse must be positive".into()));
    }
    Ok(settings
        .n_values
        .par_iter()
        .enumerate()
        .map(|(k, &n)| column(n, k, trap, species, settings))
        .collect())
}

fn sig(v: f64, digits: i32) -> String {
    let decimals = (digits - 1 - v.abs().log10().floor() as i32).max(0) as usize;
    format!("{v:.decimals$}")
}

/// Rounded to 6 decimals with trailing zeros dropped.
fn trim(v: f64) -> String {
    format!("{}", (v * 1e6).round() / 1e6)
}

fn cell(v: Option<f64>, f: impl Fn(f64) -> String) -> String {
    v.map(f).unwrap_or_else(|| "ERROR".to_string())
}

/// Rows in the reference layout: a label column then one column per ion number.
pub fn table_rows(cols: &[TableOneColumn], trap: &TrapConfig, finesse: f64) -> (Vec<String>, Vec<Vec<String>>) {
    let mut header = vec!["row".to_string()];
    header.extend(cols.iter().map(|c| format!("N={}", c.n_ions)));
    let row = |label: &str, f: &dyn Fn(&TableOneColumn) -> String| {
        let mut r = vec![label.to_string()];
        r.extend(cols.iter().map(f));
        r
    };
    let um = |v: f64| format!("{:.1}", v * 1e6);
    let omega_r_mhz = trap.omega_x_dc / (2.0 * PI) / 1e6;
    let wavelength_nm = trap.optical.wavelength * 1e9;
    let rows = vec![
        row("Ion number N", &|c| c.n_ions.to_string()),
        row("Ion configuration", &|c| match &c.configuration {
            Some(v) => format!("[{}]", v.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(", ")),
            None => "ERROR".into(),
        }),
        row("Radial DC trap frequency ω_r^DC", &|_| format!("2π × {} MHz", trim(omega_r_mhz))),
        row("Laser wavelength λ", &|_| format!("{} nm", trim(wavelength_nm))),
        row("Minimum ion spacing [μm]", &|c| cell(c.min_spacing_m, um)),
        row("Ion crystal radius [μm]", &|c| cell(c.radius_m, um)),
        row("Trapping beam waist w_0 [μm]", &|c| cell(c.waist_m, um)),
        row("Minimum required AC Stark shift at center [MHz·h] ([mK])", &|c| {
            cell(c.stark_shift_j, |u| format!("{:.0} ({:.1})", u / PLANCK / 1e6, joule_to_kelvin(u) * 1e3))
        }),
        row("Minimum required cavity intensity at center [W/m^2]", &|c| {
            cell(c.intensity_w_per_m2, |i| format!("{i:.2e}"))
        }),
        row("Cavity finesse F", &|_| sig(finesse, 4)),
        row("Minimum required laser power [W]", &|c| cell(c.power_w, |p| sig(p, 2))),
        row("Off-resonant scattering rate of an ion at center Γ_off [s^-1]", &|c| {
            cell(c.gamma_off_per_s, |g| format!("{g:.1}"))
        }),
    ];
    (header, rows)
}
