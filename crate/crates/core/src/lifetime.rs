//! Off-resonant scattering, the scattering-limited trapping lifetime, and
//! background-gas and recoil heating estimates.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::physics::constants::{
    ATOMIC_MASS_UNIT, BOLTZMANN, ELEMENTARY_CHARGE, HBAR, PLANCK, SPEED_OF_LIGHT, VACUUM_PERMITTIVITY,
};
use crate::physics::trap::detuning_factors;
use crate::physics::IonSpecies;

/// Upper bound on heating from non-Langevin (glancing) collisions, K/s.
pub const NON_LANGEVIN_HEATING_BOUND: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LifetimeEstimate {
    #[serde(rename = "gamma_off_per_s")]
    pub gamma_off: f64,
    #[serde(rename = "gamma_meta_per_s")]
    pub gamma_meta: f64,
    pub n_ions: usize,
    /// `f64::INFINITY` when nothing scatters into metastable states
    /// (serialized as `null`).
    #[serde(rename = "tau_s")]
    pub tau: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeatingReport {
    #[serde(rename = "langevin_rate_per_s")]
    pub langevin_rate: f64,
    #[serde(rename = "recoil_energy_j")]
    pub recoil_energy: f64,
    #[serde(rename = "recoil_heating_rate_k_per_s")]
    pub recoil_heating_rate: f64,
    #[serde(rename = "non_langevin_heating_bound_k_per_s")]
    pub non_langevin_heating_bound: f64,
    #[serde(rename = "background_pressure_pa")]
    pub background_pressure: f64,
    #[serde(rename = "gas_polarizability_c_m2_per_v")]
    pub gas_polarizability: f64,
    #[serde(rename = "gas_mass_kg")]
    pub gas_mass: f64,
    #[serde(rename = "temperature_k")]
    pub temperature: f64,
}

/// Background gas for Langevin collisions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackgroundGas {
    pub label: String,
    /// kg
    pub mass: f64,
    /// SI polarizability, C m^2 / V.
    pub polarizability: f64,
}

impl BackgroundGas {
    /// From a polarizability volume in cubic angstroms.
    pub fn from_volume(label: &str, mass: f64, volume_a3: f64) -> Self {
        BackgroundGas {
            label: label.to_string(),
            mass,
            polarizability: 4.0 * PI * VACUUM_PERMITTIVITY * volume_a3 * 1e-30,
        }
    }

    /// Molecular hydrogen, 0.787 A^3.
    pub fn hydrogen() -> Self {
        Self::from_volume("H2", 2.0 * ATOMIC_MASS_UNIT, 0.787)
    }
}

/// Total off-resonant photon scattering rate `gamma_off` and the rate into
/// metastable states `gamma_meta = gamma_off * branch_ratio_meta`, both 1/s.
pub fn scattering_rates(species: &IonSpecies, omega_l: f64, intensity: f64) -> Result<(f64, f64)> {
    if !(intensity >= 0.0) {
        return Err(Error::Domain(format!("intensity must be non-negative, got {intensity}")));
    }
    let c2 = SPEED_OF_LIGHT * SPEED_OF_LIGHT;
    let per_intensity: f64 = detuning_factors(species, omega_l)?
        .into_iter()
        .map(|(wa, t)| 3.0 * PI * c2 / (2.0 * HBAR * wa.powi(3)) * (omega_l / wa).powi(3) * t * t)
        .sum();
    let gamma_off = per_intensity * intensity;
    Ok((gamma_off, gamma_off * species.branch_ratio_meta))
}

/// `tau = 1 / (gamma_meta N)`: time until the probability that no ion has
/// left the trap falls to 1/e. Infinite when `gamma_meta = 0`.
pub fn trapping_lifetime(gamma_meta: f64, n_ions: usize) -> Result<f64> {
    if !(gamma_meta >= 0.0) || n_ions == 0 {
        return Err(Error::Domain(format!(
            "need gamma_meta >= 0 and at least one ion (gamma_meta = {gamma_meta}, N = {n_ions})"
        )));
    }
    if gamma_meta == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(1.0 / (gamma_meta * n_ions as f64))
}

pub fn lifetime_estimate(species: &IonSpecies, omega_l: f64, intensity: f64, n_ions: usize) -> Result<LifetimeEstimate> {
    let (gamma_off, gamma_meta) = scattering_rates(species, omega_l, intensity)?;
    Ok(LifetimeEstimate {
        gamma_off,
        gamma_meta,
        n_ions,
        tau: trapping_lifetime(gamma_meta, n_ions)?,
    })
}

/// Langevin capture rate of one ion in a background gas, 1/s:
/// `n k_L` with `n = P / (k_B T)` and `k_L = (e / (2 eps0)) sqrt(alpha / mu)`.
pub fn langevin_rate(
    pressure: f64,
    temperature: f64,
    gas_polarizability: f64,
    gas_mass: f64,
    species: &IonSpecies,
) -> Result<f64> {
    if !(pressure >= 0.0) || !(temperature > 0.0) || !(gas_polarizability > 0.0) || !(gas_mass > 0.0) {
        return Err(Error::Domain(
            "pressure must be non-negative; temperature, polarizability and gas mass positive".into(),
        ));
    }
    let reduced = gas_mass * species.mass / (gas_mass + species.mass);
    let density = pressure / (BOLTZMANN * temperature);
    let k_l = ELEMENTARY_CHARGE / (2.0 * VACUUM_PERMITTIVITY) * (gas_polarizability / reduced).sqrt();
    Ok(density * k_l)
}

/// Single-photon recoil energy `(h / lambda)^2 / 2m` in J and the resulting
/// heating rate `gamma_off E_rec / k_B` in K/s.
pub fn recoil_heating(wavelength: f64, species: &IonSpecies, gamma_off: f64) -> Result<(f64, f64)> {
    if !(wavelength > 0.0) || !(gamma_off >= 0.0) {
        return Err(Error::Domain("wavelength must be positive and gamma_off non-negative".into()));
    }
    let p = PLANCK / wavelength;
    let e_rec = p * p / (2.0 * species.mass);
    Ok((e_rec, gamma_off * e_rec / BOLTZMANN))
}

pub fn heating_report(
    species: &IonSpecies,
    gas: &BackgroundGas,
    pressure: f64,
    temperature: f64,
    wavelength: f64,
    gamma_off: f64,
) -> Result<HeatingReport> {
    let (recoil_energy, recoil_heating_rate) = recoil_heating(wavelength, species, gamma_off)?;
    Ok(HeatingReport {
        langevin_rate: langevin_rate(pressure, temperature, gas.polarizability, gas.mass, species)?,
        recoil_energy,
        recoil_heating_rate,
        non_langevin_heating_bound: NON_LANGEVIN_HEATING_BOUND,
        background_pressure: pressure,
        gas_polarizability: gas.polarizability,
        gas_mass: gas.mass,
        temperature,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::constants::angular_frequency_from_wavelength;
    use crate::physics::trap::trap_depth;
    use proptest::prelude::*;

    fn yb() -> IonSpecies {
        IonSpecies::ytterbium_171()
    }

    fn w1064() -> f64 {
        angular_frequency_from_wavelength(1064e-9)
    }

    #[test]
    fn scattering_matches_hand_evaluation() {
        // each line written out separately
        let (c, hbar) = (299_792_458.0f64, 1.054_571_817e-34f64);
        let wl = 2.0 * PI * c / 1064e-9;
        let mut expect = 0.0;
        for (lambda, mhz) in [(369.52e-9, 19.6), (328.94e-9, 25.4)] {
            let wa = 2.0 * PI * c / lambda;
            let g = 2.0 * PI * mhz * 1e6;
            let a = g / (wa - wl) + g / (wa + wl);
            expect += 3.0 * PI * c * c / (2.0 * hbar * wa * wa * wa) * (wl / wa).powi(3) * a * a;
        }
        let i = 1.16e12;
        let (off, meta) = scattering_rates(&yb(), w1064(), i).unwrap();
        assert!((off - expect * i).abs() < 1e-9 * off);
        assert!((meta - off * yb().branch_ratio_meta).abs() < 1e-15 * off);
        assert_eq!(scattering_rates(&yb(), w1064(), 0.0).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn meta_rate_and_lifetime_identities() {
        let meta = 30.0 * yb().branch_ratio_meta;
        assert!((meta - 0.15).abs() < 1e-12);
        let tau = trapping_lifetime(meta, 20).unwrap();
        assert!((tau - 0.333).abs() < 5e-4, "tau = {tau}");
        assert!((trapping_lifetime(0.15, 1).unwrap() - 6.67).abs() < 5e-3);
        assert_eq!(trapping_lifetime(0.0, 5).unwrap(), f64::INFINITY);
        assert!(trapping_lifetime(0.1, 0).is_err());
    }

    #[test]
    fn langevin_rate_for_hydrogen() {
        let h2 = BackgroundGas::hydrogen();
        let rate = langevin_rate(1e-9, 300.0, h2.polarizability, h2.mass, &yb()).unwrap();
        let per_hour = rate * 3600.0;
        assert!((per_hour - 1.3).abs() < 0.13, "{per_hour} per hour");
        assert_eq!(langevin_rate(0.0, 300.0, h2.polarizability, h2.mass, &yb()).unwrap(), 0.0);
        let r: Vec<f64> = [1e-9, 3e-9, 7e-9]
            .iter()
            .map(|&p| langevin_rate(p, 300.0, h2.polarizability, h2.mass, &yb()).unwrap() / p)
            .collect();
        assert!((r[0] - r[1]).abs() < 1e-12 * r[0] && (r[0] - r[2]).abs() < 1e-12 * r[0]);
    }

    #[test]
    fn langevin_symmetric_in_reduced_mass() {
        let h2 = BackgroundGas::hydrogen();
        let mut swapped = yb();
        swapped.mass = h2.mass;
        let a = langevin_rate(1e-9, 300.0, h2.polarizability, h2.mass, &yb()).unwrap();
        let b = langevin_rate(1e-9, 300.0, h2.polarizability, yb().mass, &swapped).unwrap();
        assert!((a - b).abs() < 1e-14 * a);
    }

    #[test]
    fn recoil_energy_and_heating() {
        let (e, _) = recoil_heating(1064e-9, &yb(), 0.0).unwrap();
        let mk = e / BOLTZMANN * 1e3;
        assert!((mk - 5e-5).abs() < 0.05 * 5e-5, "{mk} mK");
        let (_, rate) = recoil_heating(1064e-9, &yb(), 3.6).unwrap();
        assert!((rate - 3.6 * e / BOLTZMANN).abs() < 1e-15 * rate);
        let (e10, _) = recoil_heating(10640e-9, &yb(), 0.0).unwrap();
        assert!((e10 * 100.0 - e).abs() < 1e-12 * e);
    }

    #[test]
    fn report_fields_are_nonnegative() {
        let r = heating_report(&yb(), &BackgroundGas::hydrogen(), 1e-9, 300.0, 1064e-9, 3.6).unwrap();
        let v = serde_json::to_value(r).unwrap();
        for (k, x) in v.as_object().unwrap() {
            assert!(x.as_f64().unwrap() >= 0.0, "{k}");
        }
        assert!(v.get("langevin_rate_per_s").is_some());
    }

    proptest! {
        #[test]
        fn scattering_per_depth_is_intensity_independent(i in 1e6f64..1e14) {
            let (off, _) = scattering_rates(&yb(), w1064(), i).unwrap();
            let (off0, _) = scattering_rates(&yb(), w1064(), 1e12).unwrap();
            let u = trap_depth(&yb(), w1064(), i).unwrap();
            let u0 = trap_depth(&yb(), w1064(), 1e12).unwrap();
            prop_assert!(((off / u) - (off0 / u0)).abs() <= 1e-10 * (off0 / u0));
        }

        #[test]
        fn survival_identity(g in 1e-4f64..1e3, n in 1usize..200) {
            let tau = trapping_lifetime(g, n).unwrap();
            prop_assert!(((-g * tau * n as f64).exp() - (-1.0f64).exp()).abs() < 1e-15);
            let half = trapping_lifetime(g, 2 * n).unwrap();
            prop_assert!((2.0 * half - tau).abs() <= 1e-15 * tau);
        }
    }
}
