//! Physical constants in SI units (CODATA 2018).

use std::f64::consts::PI;

/// Elementary charge, C.
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
/// Vacuum permittivity, F/m.
pub const VACUUM_PERMITTIVITY: f64 = 8.854_187_812_8e-12;
/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.380_649e-23;
/// Planck constant, J s.
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Reduced Planck constant, J s.
pub const HBAR: f64 = PLANCK / (2.0 * PI);
/// Unified atomic mass unit, kg.
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;

/// `e^2 / (4 pi eps0)` in J m: the Coulomb energy of two unit charges at 1 m.
pub fn coulomb_constant() -> f64 {
    ELEMENTARY_CHARGE * ELEMENTARY_CHARGE / (4.0 * PI * VACUUM_PERMITTIVITY)
}

/// The same constants as a value, for code that wants to pass them around.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    pub elementary_charge: f64,
    pub vacuum_permittivity: f64,
    pub speed_of_light: f64,
    pub boltzmann: f64,
    pub planck: f64,
    pub atomic_mass_unit: f64,
}

pub const CODATA: PhysicalConstants = PhysicalConstants {
    elementary_charge: ELEMENTARY_CHARGE,
    vacuum_permittivity: VACUUM_PERMITTIVITY,
    speed_of_light: SPEED_OF_LIGHT,
    boltzmann: BOLTZMANN,
    planck: PLANCK,
    atomic_mass_unit: ATOMIC_MASS_UNIT,
};

/// Energy in kelvin (E / k_B) to joules.
pub fn kelvin_to_joule(t: f64) -> f64 {
    t * BOLTZMANN
}

pub fn joule_to_kelvin(e: f64) -> f64 {
    e / BOLTZMANN
}

/// Angular frequency of light with the given vacuum wavelength.
pub fn angular_frequency_from_wavelength(wavelength: f64) -> f64 {
    2.0 * PI * SPEED_OF_LIGHT / wavelength
}
