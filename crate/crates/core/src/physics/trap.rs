//! Hybrid trap configuration and the closed-form single-ion quantities.
//!
//! The in-plane confinement comes from a DC quadrupole with frequencies
//! `omega_x^DC`, `omega_y^DC`; Laplace's equation forces an anti-confining
//! `(omega_z^DC)^2 = (omega_x^DC)^2 + (omega_y^DC)^2` along z. The cavity
//! standing wave provides the out-of-plane confinement.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::constants::{angular_frequency_from_wavelength, SPEED_OF_LIGHT};
use super::species::IonSpecies;
use crate::error::{Error, Result};

/// Where the ions sit in the standing wave.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LatticeVariant {
    /// `+U_depth * envelope * sin^2(kz)`: ions at a node.
    #[default]
    NodeSin2,
    /// `-U_depth * envelope * cos^2(kz)`: ions at an antinode.
    AntinodeCos2,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpticalTrapConfig {
    /// m
    pub wavelength: f64,
    /// m; `f64::INFINITY` selects the uniform-waist limit.
    pub waist: f64,
    /// J
    pub depth: f64,
    pub lattice_variant: LatticeVariant,
    pub finesse: f64,
    /// W
    pub input_power: f64,
}

impl OpticalTrapConfig {
    pub fn new(wavelength: f64, waist: f64, depth: f64) -> Result<Self> {
        if !(wavelength > 0.0) || !(waist > 0.0) {
            return Err(Error::Domain(format!(
                "wavelength and waist must be positive (got {wavelength}, {waist})"
            )));
        }
        if !(depth >= 0.0) {
            return Err(Error::Domain(format!("trap depth must be non-negative, got {depth}")));
        }
        Ok(OpticalTrapConfig {
            wavelength,
            waist,
            depth,
            lattice_variant: LatticeVariant::NodeSin2,
            finesse: 0.0,
            input_power: 0.0,
        })
    }

    pub fn with_variant(mut self, variant: LatticeVariant) -> Self {
        self.lattice_variant = variant;
        self
    }

    pub fn with_cavity(mut self, finesse: f64, input_power: f64) -> Self {
        self.finesse = finesse;
        self.input_power = input_power;
        self
    }

    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.wavelength
    }

    pub fn laser_angular_frequency(&self) -> f64 {
        angular_frequency_from_wavelength(self.wavelength)
    }

    /// `z_R = pi w0^2 / lambda`
    pub fn rayleigh_range(&self) -> f64 {
        PI * self.waist * self.waist / self.wavelength
    }

    /// `w(z) = w0 sqrt(1 + (z/z_R)^2)`
    pub fn beam_radius(&self, z: f64) -> f64 {
        if self.is_uniform() {
            return f64::INFINITY;
        }
        let zr = self.rayleigh_range();
        self.waist * (1.0 + (z / zr).powi(2)).sqrt()
    }

    pub fn is_uniform(&self) -> bool {
        self.waist.is_infinite()
    }

    /// Curvature `d^2 U_opt / dz^2` on axis at the origin, per unit depth.
    pub(crate) fn axial_curvature_per_depth(&self) -> f64 {
        let k = self.wavenumber();
        match self.lattice_variant {
            LatticeVariant::NodeSin2 => 2.0 * k * k,
            LatticeVariant::AntinodeCos2 => {
                let zr_term = if self.is_uniform() {
                    0.0
                } else {
                    2.0 / self.rayleigh_range().powi(2)
                };
                2.0 * k * k + zr_term
            }
        }
    }

    /// Radial curvature `d^2 U_opt / dx^2` at the origin, per unit depth.
    pub(crate) fn radial_curvature_per_depth(&self) -> f64 {
        match self.lattice_variant {
            LatticeVariant::NodeSin2 => 0.0,
            LatticeVariant::AntinodeCos2 if self.is_uniform() => 0.0,
            LatticeVariant::AntinodeCos2 => 4.0 / (self.waist * self.waist),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrapConfig {
    /// rad/s
    pub omega_x_dc: f64,
    /// rad/s, equal to `omega_x_dc * (1 + anisotropy)`
    pub omega_y_dc: f64,
    pub anisotropy: f64,
    pub optical: OpticalTrapConfig,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveFrequencies {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl EffectiveFrequencies {
    /// `alpha = omega_z / omega_r` with `omega_r = omega_x`.
    pub fn aspect_ratio(&self) -> f64 {
        self.z / self.x
    }
}

impl TrapConfig {
    pub fn new(omega_r_dc: f64, anisotropy: f64, optical: OpticalTrapConfig) -> Result<Self> {
        if !(omega_r_dc >= 0.0) {
            return Err(Error::Domain(format!("DC frequency must be non-negative, got {omega_r_dc}")));
        }
        let omega_y_dc = omega_r_dc * (1.0 + anisotropy);
        if !(omega_y_dc >= 0.0) {
            return Err(Error::Domain(format!("anisotropy {anisotropy} gives a negative omega_y")));
        }
        Ok(TrapConfig {
            omega_x_dc: omega_r_dc,
            omega_y_dc,
            anisotropy,
            optical,
        })
    }

    /// Laplace constraint: `(omega_z^DC)^2 = (omega_x^DC)^2 + (omega_y^DC)^2`.
    pub fn omega_z_dc_sq(&self) -> f64 {
        self.omega_x_dc * self.omega_x_dc + self.omega_y_dc * self.omega_y_dc
    }

    pub fn omega_z_dc(&self) -> f64 {
        self.omega_z_dc_sq().sqrt()
    }

    pub fn with_depth(mut self, depth: f64) -> Self {
        self.optical.depth = depth;
        self
    }

    pub fn with_waist(mut self, waist: f64) -> Self {
        self.optical.waist = waist;
        self
    }

    pub fn is_rotationally_symmetric(&self) -> bool {
        self.omega_x_dc == self.omega_y_dc
    }

    /// In-plane frequencies at the origin; independent of whether z is confined.
    pub fn radial_frequencies(&self, species: &IonSpecies) -> (f64, f64) {
        let extra = self.optical.radial_curvature_per_depth() * self.optical.depth / species.mass;
        (
            (self.omega_x_dc.powi(2) + extra).sqrt(),
            (self.omega_y_dc.powi(2) + extra).sqrt(),
        )
    }

    /// Trap depth that puts the aspect ratio `omega_z / omega_x` at `alpha`.
    pub fn depth_for_aspect_ratio(&self, alpha: f64, species: &IonSpecies) -> Result<f64> {
        if !(alpha >= 0.0) {
            return Err(Error::Domain(format!("aspect ratio must be non-negative, got {alpha}")));
        }
        let m = species.mass;
        let cz = self.optical.axial_curvature_per_depth() / m;
        let cr = self.optical.radial_curvature_per_depth() / m;
        let denom = cz - alpha * alpha * cr;
        if !(denom > 0.0) {
            return Err(Error::Domain(format!(
                "aspect ratio {alpha} unreachable: radial optical curvature grows as fast as axial"
            )));
        }
        Ok((alpha * alpha * self.omega_x_dc.powi(2) + self.omega_z_dc_sq()) / denom)
    }

    pub fn with_aspect_ratio(&self, alpha: f64, species: &IonSpecies) -> Result<Self> {
        Ok(self.with_depth(self.depth_for_aspect_ratio(alpha, species)?))
    }
}

/// Circulating intensity at the cavity center, `I_max = 2 F P_in / (pi^2 w0^2)`.
pub fn intensity_from_power(input_power: f64, finesse: f64, waist: f64) -> Result<f64> {
    if !(waist > 0.0) || !waist.is_finite() {
        return Err(Error::Domain(format!("waist must be positive and finite, got {waist}")));
    }
    if !(input_power >= 0.0) || !(finesse >= 0.0) {
        return Err(Error::Domain(format!(
            "power and finesse must be non-negative (got {input_power}, {finesse})"
        )));
    }
    Ok(2.0 * finesse * input_power / (PI * PI * waist * waist))
}

/// Inverse of [`intensity_from_power`].
pub fn power_from_intensity(intensity: f64, finesse: f64, waist: f64) -> Result<f64> {
    if !(finesse > 0.0) || !(waist > 0.0) || !waist.is_finite() {
        return Err(Error::Domain(format!(
            "finesse and waist must be positive (got {finesse}, {waist})"
        )));
    }
    Ok(intensity * PI * PI * waist * waist / (2.0 * finesse))
}

/// `Gamma_a/(omega_a - omega_l) + Gamma_a/(omega_a + omega_l)` for each line,
/// after checking the laser is off resonance.
pub(crate) fn detuning_factors(species: &IonSpecies, omega_l: f64) -> Result<Vec<(f64, f64)>> {
    if !(omega_l > 0.0) {
        return Err(Error::Domain(format!("laser frequency must be positive, got {omega_l}")));
    }
    species
        .lines
        .iter()
        .map(|line| {
            let wa = line.transition_angular_frequency;
            if ((wa - omega_l) / wa).abs() < 1e-6 {
                return Err(Error::Resonance {
                    laser: omega_l,
                    transition: wa,
                });
            }
            let g = line.natural_linewidth;
            Ok((wa, g / (wa - omega_l) + g / (wa + omega_l)))
        })
        .collect()
}

/// Signed AC Stark shift of the ground state per unit intensity, J m^2 / W.
pub fn stark_shift_per_intensity(species: &IonSpecies, omega_l: f64) -> Result<f64> {
    let c2 = SPEED_OF_LIGHT * SPEED_OF_LIGHT;
    Ok(-detuning_factors(species, omega_l)?
        .into_iter()
        .map(|(wa, t)| 3.0 * PI * c2 / (2.0 * wa.powi(3)) * t)
        .sum::<f64>())
}

/// Optical trap depth: magnitude of the maximum AC Stark shift at intensity `i_max`.
pub fn trap_depth(species: &IonSpecies, omega_l: f64, i_max: f64) -> Result<f64> {
    if !(i_max >= 0.0) {
        return Err(Error::Domain(format!("intensity must be non-negative, got {i_max}")));
    }
    Ok((stark_shift_per_intensity(species, omega_l)? * i_max).abs())
}

/// Effective trap frequencies at the origin from a harmonic expansion of the
/// single-ion DC + optical potential.
pub fn effective_frequencies(trap: &TrapConfig, species: &IonSpecies) -> Result<EffectiveFrequencies> {
    let m = species.mass;
    let wz_sq = trap.optical.axial_curvature_per_depth() * trap.optical.depth / m - trap.omega_z_dc_sq();
    if !(wz_sq > 0.0) {
        return Err(Error::AntiTrapped { omega_z_sq: wz_sq });
    }
    let (x, y) = trap.radial_frequencies(species);
    Ok(EffectiveFrequencies {
        x,
        y,
        z: wz_sq.sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::constants::{BOLTZMANN, PLANCK};
    use proptest::prelude::*;

    fn yb() -> IonSpecies {
        IonSpecies::ytterbium_171()
    }

    fn mhz(f: f64) -> f64 {
        2.0 * PI * f * 1e6
    }

    #[test]
    fn intensity_table_values() {
        let i10 = intensity_from_power(0.84, 3000.0, 21.0e-6).unwrap();
        assert!((i10 / 1.158e12 - 1.0).abs() < 1e-3, "{i10}");
        assert!((i10 / 1.16e12 - 1.0).abs() < 0.03);
        let i5 = intensity_from_power(0.31, 3000.0, 14.4e-6).unwrap();
        assert!((i5 / 9.09e11 - 1.0).abs() < 1e-3, "{i5}");
        assert!((i5 / 9.22e11 - 1.0).abs() < 0.03);
        assert_eq!(intensity_from_power(0.0, 3000.0, 21.0e-6).unwrap(), 0.0);
    }

    #[test]
    fn intensity_rejects_bad_waist() {
        assert!(matches!(intensity_from_power(1.0, 3000.0, 0.0), Err(Error::Domain(_))));
        assert!(intensity_from_power(1.0, 3000.0, -1e-6).is_err());
    }

    #[test]
    fn trap_depth_zero_and_linear() {
        let wl = angular_frequency_from_wavelength(1064e-9);
        assert_eq!(trap_depth(&yb(), wl, 0.0).unwrap(), 0.0);
        let a = trap_depth(&yb(), wl, 1e12).unwrap();
        let b = trap_depth(&yb(), wl, 2e12).unwrap();
        assert_eq!(b, 2.0 * a);
    }

    #[test]
    fn trap_depth_matches_direct_sum() {
        // Independent evaluation of the two-line sum.
        let c = 299_792_458.0_f64;
        let wl = 2.0 * PI * c / 1064e-9;
        let mut s = 0.0;
        for (lam, g_mhz) in [(369.52e-9, 19.6), (328.94e-9, 25.4)] {
            let wa = 2.0 * PI * c / lam;
            let g = 2.0 * PI * g_mhz * 1e6;
            s += 3.0 * PI * c * c / (2.0 * wa * wa * wa) * (g / (wa - wl) + g / (wa + wl));
        }
        let expected = s * 1.16e12;
        let got = trap_depth(&yb(), wl, 1.16e12).unwrap();
        assert!((got / expected - 1.0).abs() < 1e-12);
        // 26.44 mK (551 MHz h) with the shipped two-line data
        assert!((got / BOLTZMANN * 1e3 - 26.44).abs() < 0.01);
        assert!((got / PLANCK / 1e6 - 550.9).abs() < 0.1);
    }

    #[test]
    fn resonance_rejected() {
        let species = yb();
        let wa = species.lines[0].transition_angular_frequency;
        assert!(matches!(
            trap_depth(&species, wa * (1.0 + 1e-8), 1e12),
            Err(Error::Resonance { .. })
        ));
    }

    #[test]
    fn laplace_constraint() {
        let opt = OpticalTrapConfig::new(1064e-9, 20e-6, 0.0).unwrap();
        for (w, a) in [(mhz(0.5), 0.0), (mhz(0.5), 0.1), (mhz(1.3), 0.37)] {
            let t = TrapConfig::new(w, a, opt).unwrap();
            let resid = t.omega_z_dc_sq() - t.omega_x_dc.powi(2) - t.omega_y_dc.powi(2);
            assert!(resid.abs() <= 1e-15 * t.omega_z_dc_sq());
        }
    }

    #[test]
    fn anisotropy_definition() {
        let opt = OpticalTrapConfig::new(1064e-9, 20e-6, 0.0).unwrap();
        let t = TrapConfig::new(mhz(0.5), 0.1, opt).unwrap();
        assert_eq!(t.omega_y_dc, 1.1 * t.omega_x_dc);
    }

    #[test]
    fn dc_only_is_anti_trapped() {
        let opt = OpticalTrapConfig::new(1064e-9, 20e-6, 0.0).unwrap();
        let t = TrapConfig::new(mhz(0.5), 0.0, opt).unwrap();
        match effective_frequencies(&t, &yb()) {
            Err(Error::AntiTrapped { omega_z_sq }) => {
                assert!((omega_z_sq + 2.0 * mhz(0.5).powi(2)).abs() < 1e-3 * mhz(0.5).powi(2));
            }
            other => panic!("expected anti-trapped, got {other:?}"),
        }
    }

    #[test]
    fn table_one_operating_point_frequencies() {
        let depth = 17.3e-3 * BOLTZMANN;
        let opt = OpticalTrapConfig::new(1064e-9, f64::INFINITY, depth).unwrap();
        let t = TrapConfig::new(mhz(0.5), 0.0, opt).unwrap();
        let f = effective_frequencies(&t, &yb()).unwrap();
        assert!((f.z / (2.0 * PI) / 1e6 - 0.99).abs() < 0.01, "{}", f.z / (2.0 * PI));
        assert!((f.aspect_ratio() - 2.0).abs() < 0.03);
        // consistent with the large-N power law at N = 10 (1.1 * 10^0.265 = 2.02)
        assert!((f.aspect_ratio() / (1.1 * 10f64.powf(0.265)) - 1.0).abs() < 0.05);
    }

    #[test]
    fn aspect_ratio_round_trip() {
        for variant in [LatticeVariant::NodeSin2, LatticeVariant::AntinodeCos2] {
            let opt = OpticalTrapConfig::new(1064e-9, 25e-6, 0.0).unwrap().with_variant(variant);
            let t = TrapConfig::new(mhz(0.5), 0.05, opt).unwrap();
            let t2 = t.with_aspect_ratio(2.3, &yb()).unwrap();
            let f = effective_frequencies(&t2, &yb()).unwrap();
            assert!((f.aspect_ratio() / 2.3 - 1.0).abs() < 1e-12);
        }
    }

    /// Second differences of the single-ion potential at the origin.
    fn numerical_curvatures(t: &TrapConfig) -> [f64; 3] {
        use crate::potential::{CrystalPositions, PotentialModel};
        let model = PotentialModel::new(t, &yb());
        let e = |p: [f64; 3]| model.total_energy(&CrystalPositions::from_xyz(&[p])).unwrap().total;
        let mut out = [0.0; 3];
        for (axis, h) in [(0, 2e-8), (1, 2e-8), (2, 2e-10)] {
            let mut plus = [0.0; 3];
            let mut minus = [0.0; 3];
            plus[axis] = h;
            minus[axis] = -h;
            out[axis] = (e(plus) - 2.0 * e([0.0; 3]) + e(minus)) / (h * h);
        }
        out
    }

    #[test]
    fn frequencies_match_second_differences() {
        let m = yb().mass;
        for variant in [LatticeVariant::NodeSin2, LatticeVariant::AntinodeCos2] {
            let opt = OpticalTrapConfig::new(1064e-9, 18e-6, 30e-3 * BOLTZMANN)
                .unwrap()
                .with_variant(variant);
            let t = TrapConfig::new(mhz(0.5), 0.1, opt).unwrap();
            let f = effective_frequencies(&t, &yb()).unwrap();
            let c = numerical_curvatures(&t);
            assert!((c[0] / (m * f.x * f.x) - 1.0).abs() < 1e-6, "{variant:?} x");
            assert!((c[1] / (m * f.y * f.y) - 1.0).abs() < 1e-6, "{variant:?} y");
            assert!((c[2] / (m * f.z * f.z) - 1.0).abs() < 1e-6, "{variant:?} z");
        }
    }

    proptest! {
        #[test]
        fn depth_and_intensity_are_homogeneous(scale in 1e-3f64..1e3, base in 1e10f64..1e13) {
            let wl = angular_frequency_from_wavelength(1064e-9);
            let a = trap_depth(&yb(), wl, base).unwrap();
            let b = trap_depth(&yb(), wl, base * scale).unwrap();
            prop_assert!((b / (a * scale) - 1.0).abs() < 1e-12);
            let p = base * 1e-12;
            let ia = intensity_from_power(p, 3000.0, 20e-6).unwrap();
            let ib = intensity_from_power(p * scale, 3000.0, 20e-6).unwrap();
            prop_assert!((ib / (ia * scale) - 1.0).abs() < 1e-12);
        }
    }
}
