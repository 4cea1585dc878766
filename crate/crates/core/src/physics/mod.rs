//! Constants, species data, trap configuration and single-ion quantities.

pub mod constants;
pub mod species;
pub mod trap;

pub use species::{AtomicLine, IonSpecies};
pub use trap::{
    effective_frequencies, intensity_from_power, power_from_intensity, stark_shift_per_intensity,
    trap_depth, EffectiveFrequencies, LatticeVariant, OpticalTrapConfig, TrapConfig,
};

use constants::coulomb_constant;

/// Characteristic crystal length `(e^2 / (4 pi eps0 m omega^2))^(1/3)`.
pub fn characteristic_length(species: &IonSpecies, omega: f64) -> f64 {
    (coulomb_constant() / (species.mass * omega * omega)).cbrt()
}

/// Closed-form spacing of two ions in a harmonic well of frequency `omega`.
pub fn two_ion_spacing(species: &IonSpecies, omega: f64) -> f64 {
    (2.0 * coulomb_constant() / (species.mass * omega * omega)).cbrt()
}
