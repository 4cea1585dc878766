//! The planar-to-3D structural transition: the aspect ratio `alpha_tr` at which
//! the lowest out-of-plane mode of a fixed planar configuration goes soft.

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::equilibrium::{find_equilibria, EquilibriumResult, Stability};
use crate::error::{Error, Result};
use crate::modes::out_of_plane_block;
use crate::physics::constants::coulomb_constant;
use crate::physics::{IonSpecies, LatticeVariant, TrapConfig};
use crate::potential::{CrystalPositions, PotentialModel};

/// Upper end of the scanned aspect-ratio range.
pub const MAX_ALPHA: f64 = 10.0;
const START_ALPHA: f64 = 0.5;
const GROWTH: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitionPoint {
    pub n_ions: usize,
    pub alpha_tr: f64,
    pub stability: Stability,
    /// Beam waist, m (infinite for a uniform beam).
    pub w0: f64,
    pub w0_over_rmax: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub prefactor: f64,
    pub exponent: f64,
    /// RMS residual in log space.
    pub residual: f64,
}

impl PowerLawFit {
    pub fn eval(&self, n: f64) -> f64 {
        self.prefactor * n.powf(self.exponent)
    }
}

fn lowest_eigenvalue(m: DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m).eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
}

/// Lowest out-of-plane `omega^2` of `positions` when the trap is set to aspect ratio `alpha`.
pub fn lowest_out_of_plane_sq(
    positions: &CrystalPositions,
    trap: &TrapConfig,
    species: &IonSpecies,
    alpha: f64,
) -> Result<f64> {
    let t = trap.with_aspect_ratio(alpha, species)?;
    let block = out_of_plane_block(positions, &PotentialModel::new(&t, species))?;
    Ok(lowest_eigenvalue(block))
}

/// Root of the lowest out-of-plane `omega^2` in `alpha`, with the planar
/// positions held fixed while the optical depth is varied.
pub fn find_alpha_tr(eq: &EquilibriumResult, trap: &TrapConfig, species: &IonSpecies) -> Result<TransitionPoint> {
    let alpha_tr = alpha_tr_at(&eq.positions, trap, species)?;
    Ok(TransitionPoint {
        n_ions: eq.n_ions(),
        alpha_tr,
        stability: eq.stability,
        w0: trap.optical.waist,
        w0_over_rmax: if eq.r_max > 0.0 { trap.optical.waist / eq.r_max } else { f64::INFINITY },
    })
}

pub fn alpha_tr_at(positions: &CrystalPositions, trap: &TrapConfig, species: &IonSpecies) -> Result<f64> {
    if positions.n_ions() <= 1 {
        return Ok(0.0);
    }
    let f = |a: f64| lowest_out_of_plane_sq(positions, trap, species, a);

    let mut lo = 0.0;
    let mut hi = START_ALPHA;
    loop {
        if f(hi)? > 0.0 {
            break;
        }
        lo = hi;
        if hi >= MAX_ALPHA {
            return Err(Error::BracketFailure { max_alpha: MAX_ALPHA });
        }
        hi = (hi * GROWTH).min(MAX_ALPHA);
    }
    if lo == 0.0 && f(0.0)? > 0.0 {
        return Ok(0.0);
    }
    while hi - lo > 1e-13 * hi {
        let mid = 0.5 * (lo + hi);
        if f(mid)? > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Closed form valid for a uniform beam: the optical term then shifts every
/// ion's out-of-plane curvature equally, so `alpha_tr = sqrt(lambda_max(A)) / omega_r`
/// with `A` the mass-weighted Coulomb Laplacian.
pub fn uniform_waist_alpha_tr(positions: &CrystalPositions, trap: &TrapConfig, species: &IonSpecies) -> Result<f64> {
    let n = positions.n_ions();
    if n <= 1 {
        return Ok(0.0);
    }
    let kc = coulomb_constant() / species.mass;
    let mut a = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let p = positions.ion(i);
            let q = positions.ion(j);
            let d = ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2)).sqrt();
            let c = kc / (d * d * d);
            a[(i, j)] -= c;
            a[(j, i)] -= c;
            a[(i, i)] += c;
            a[(j, j)] += c;
        }
    }
    let lmax = SymmetricEigen::new(a).eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let omega_r = trap.radial_frequencies(species).0;
    Ok(lmax.sqrt() / omega_r)
}

/// Least squares of `ln alpha` against `ln N`.
pub fn fit_power_law(points: &[(f64, f64)]) -> Result<PowerLawFit> {
    if points.len() < 3 {
        return Err(Error::InsufficientData {
            needed: 3,
            got: points.len(),
        });
    }
    if points.iter().any(|&(n, a)| !(n > 0.0) || !(a > 0.0)) {
        return Err(Error::FitFailure("power-law fit needs positive values".into()));
    }
    let (b, ln_a, residual) = log_log_fit(points.iter().map(|&(n, a)| (n.ln(), a.ln())))?;
    Ok(PowerLawFit {
        prefactor: ln_a.exp(),
        exponent: b,
        residual,
    })
}

/// Straight-line fit `y = slope * x + intercept`; returns (slope, intercept, rms residual).
pub(crate) fn log_log_fit(pts: impl Iterator<Item = (f64, f64)>) -> Result<(f64, f64, f64)> {
    let pts: Vec<(f64, f64)> = pts.collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if !(sxx > 1e-24 * n) {
        return Err(Error::FitFailure("abscissae are degenerate".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rms = (pts.iter().map(|p| (p.1 - slope * p.0 - intercept).powi(2)).sum::<f64>() / n).sqrt();
    Ok((slope, intercept, rms))
}

/// Stable configuration of `n` ions and its transition point.
pub fn stable_transition(
    n: usize,
    trap: &TrapConfig,
    species: &IonSpecies,
    n_restarts: usize,
    seed: u64,
) -> Result<(EquilibriumResult, TransitionPoint)> {
    let eq = find_equilibria(n, trap, species, n_restarts, seed)?.swap_remove(0);
    let tp = find_alpha_tr(&eq, trap, species)?;
    Ok((eq, tp))
}

/// `alpha_tr` of the stable configuration for every `n` in `ns`, in parallel.
pub fn alpha_tr_scan(
    ns: &[usize],
    trap: &TrapConfig,
    species: &IonSpecies,
    n_restarts: usize,
    seed: u64,
) -> Vec<Result<TransitionPoint>> {
    ns.par_iter()
        .map(|&n| stable_transition(n, trap, species, n_restarts, seed).map(|r| r.1))
        .collect()
}

/// Transition point of the stable configuration at each waist; a failing
/// point does not stop the sweep. With a node lattice the optical potential
/// vanishes in the plane, so the equilibrium is solved once; otherwise it is
/// re-solved per waist.
pub fn waist_sweep(
    n: usize,
    trap_template: &TrapConfig,
    species: &IonSpecies,
    w0_values: &[f64],
    n_restarts: usize,
    seed: u64,
) -> Vec<Result<TransitionPoint>> {
    if trap_template.optical.lattice_variant == LatticeVariant::NodeSin2 {
        return match find_equilibria(n, trap_template, species, n_restarts, seed) {
            Ok(mut eqs) => waist_sweep_fixed(&eqs.swap_remove(0), trap_template, species, w0_values),
            Err(e) => {
                let msg = e.to_string();
                w0_values.iter().map(|_| Err(Error::Domain(msg.clone()))).collect()
            }
        };
    }
    w0_values
        .par_iter()
        .map(|&w0| {
            check_waist(w0)?;
            let trap = trap_template.with_waist(w0);
            stable_transition(n, &trap, species, n_restarts, seed).map(|r| r.1)
        })
        .collect()
}

/// Transition point of `eq` at each waist with its positions held fixed.
pub fn waist_sweep_fixed(
    eq: &EquilibriumResult,
    trap_template: &TrapConfig,
    species: &IonSpecies,
    w0_values: &[f64],
) -> Vec<Result<TransitionPoint>> {
    w0_values
        .par_iter()
        .map(|&w0| {
            check_waist(w0)?;
            find_alpha_tr(eq, &trap_template.with_waist(w0), species)
        })
        .collect()
}

fn check_waist(w0: f64) -> Result<()> {
    if !(w0 > 0.0) {
        return Err(Error::Domain(format!("waist must be positive, got {w0}")));
    }
    Ok(())
}

/// Smallest waist whose `alpha_tr` lies within `relative_tolerance` of `asymptote`.
pub fn smallest_waist_near_asymptote(points: &[TransitionPoint], asymptote: f64, relative_tolerance: f64) -> Option<f64> {
    points
        .iter()
        .filter(|p| (p.alpha_tr / asymptote - 1.0).abs() <= relative_tolerance)
        .map(|p| p.w0)
        .min_by(f64::total_cmp)
}
