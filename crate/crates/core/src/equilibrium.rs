//! Planar equilibrium search by multistart minimization, with deduplication,
//! stability classification, ring structure and crystal metrics.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matching::same_shape;
use crate::optimize::{bfgs, newton_polish, MinimizeOptions};
use crate::physics::constants::coulomb_constant;
use crate::physics::{characteristic_length, IonSpecies, TrapConfig};
use crate::potential::{CrystalPositions, PotentialModel};

pub const DEFAULT_RESTARTS: usize = 50;

/// Convergence threshold on the in-plane gradient, in units of `e^2/(4 pi eps0 l^2)`.
pub const GRADIENT_TOLERANCE: f64 = 1e-8;

/// Shell boundary: consecutive centroid distances further apart than this (in `l`).
pub const SHELL_GAP: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stability {
    Stable,
    Metastable,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RingConfiguration {
    /// Ion counts per shell, innermost first.
    pub counts: Vec<usize>,
    /// Set when the gap criterion could not separate shells cleanly; `counts`
    /// is then the single shell `[N]`.
    pub ambiguous: bool,
}

#[derive(Debug, Clone)]
pub struct EquilibriumResult {
    pub positions: CrystalPositions,
    /// J
    pub energy: f64,
    pub stability: Stability,
    pub ring_configuration: Vec<usize>,
    pub ring_ambiguous: bool,
    /// m
    pub r_max: f64,
    /// m; `None` for a single ion.
    pub d_min: Option<f64>,
    /// Other restarts that converged to this same configuration.
    pub n_found_duplicates: usize,
    /// In-plane gradient norm at `positions`, J/m.
    pub gradient_norm: f64,
}

impl EquilibriumResult {
    pub fn n_ions(&self) -> usize {
        self.positions.n_ions()
    }

    pub fn planar(&self) -> Vec<f64> {
        self.positions.planar()
    }
}

/// Length scale `l` set by the weaker radial DC frequency.
pub fn length_scale(trap: &TrapConfig, species: &IonSpecies) -> Result<f64> {
    let omega = trap.omega_x_dc.min(trap.omega_y_dc);
    if !(omega > 0.0) {
        return Err(Error::Domain("equilibrium search needs nonzero radial DC confinement".into()));
    }
    Ok(characteristic_length(species, omega))
}

/// Dimensionless view of the planar potential: lengths in `l`, energies in `kc/l`.
struct Scaled<'a> {
    model: &'a PotentialModel,
    l: f64,
    e0: f64,
}

impl Scaled<'_> {
    fn to_si(&self, u: &[f64]) -> Vec<f64> {
        u.iter().map(|v| v * self.l).collect()
    }

    fn value_grad(&self, u: &[f64]) -> Result<(f64, Vec<f64>)> {
        let xy = self.to_si(u);
        let e = self.model.planar_energy(&xy)? / self.e0;
        let g = self.model.planar_gradient(&xy)?;
        let gs = self.l / self.e0;
        Ok((e, g.into_iter().map(|v| v * gs).collect()))
    }

    fn hessian(&self, u: &[f64]) -> Result<DMatrix<f64>> {
        Ok(self.model.planar_hessian(&self.to_si(u))? * (self.l * self.l / self.e0))
    }
}

/// True when no in-plane Hessian eigenvalue is negative beyond `1e-6` of the
/// largest, ignoring the rigid-rotation zero mode of a rotationally symmetric
/// trap. Concentric rings with coprime ion counts can turn against each other
/// at almost no cost, so a numerically flat direction is allowed.
fn is_strict_minimum(hess: &DMatrix<f64>, u: &[f64], rotational: bool) -> bool {
    let eig = SymmetricEigen::new(hess.clone());
    let mut skip = None;
    if rotational {
        let rot = DVector::from_iterator(u.len(), u.chunks_exact(2).flat_map(|p| [-p[1], p[0]]));
        let rn = rot.norm();
        if rn > 0.0 {
            let rot = rot / rn;
            skip = (0..eig.eigenvalues.len())
                .map(|k| (k, eig.eigenvectors.column(k).dot(&rot).powi(2)))
                .filter(|&(_, o)| o > 0.5)
                .max_by(|a, b| a.1.total_cmp(&b.1))
                .map(|(k, _)| k);
        }
    }
    log::trace!("in-plane eigenvalues {:?}, skipped {:?}", eig.eigenvalues.as_slice(), skip);
    let lmax = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    eig.eigenvalues
        .iter()
        .enumerate()
        .filter(|&(k, _)| Some(k) != skip)
        .all(|(_, &lam)| lam > -1e-6 * lmax)
}

struct Candidate {
    u: Vec<f64>,
    energy: f64,
    gradient_norm: f64,
}

fn run_restart(scaled: &Scaled, n: usize, seed: u64, restart: usize, rotational: bool) -> Option<Candidate> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(restart as u64);
    let radius = 1.5 * (n as f64).sqrt();
    let u0: Vec<f64> = (0..n)
        .flat_map(|_| {
            let r = radius * rng.random::<f64>().sqrt();
            let t = 2.0 * std::f64::consts::PI * rng.random::<f64>();
            [r * t.cos(), r * t.sin()]
        })
        .collect();
    let opts = MinimizeOptions {
        max_iterations: 5_000,
        gradient_tolerance: 0.1 * GRADIENT_TOLERANCE,
    };
    let m = bfgs(|u| scaled.value_grad(u), &u0, &opts).ok()?;
    log::debug!("restart {restart}: bfgs {} iterations, gradient {:.3e}", m.iterations, m.gradient_norm);
    let (u, e, g) = newton_polish(|u| scaled.value_grad(u), |u| scaled.hessian(u), &m.x, 8, 1e-9).ok()?;
    let gn = g.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(gn < GRADIENT_TOLERANCE) {
        log::debug!("restart {restart}: gradient {gn:.3e} above tolerance");
        return None;
    }
    let h = scaled.hessian(&u).ok()?;
    if !is_strict_minimum(&h, &u, rotational) {
        log::debug!("restart {restart}: converged to a saddle");
        return None;
    }
    Some(Candidate {
        u,
        energy: e,
        gradient_norm: gn,
    })
}

/// All distinct planar minima found from `n_restarts` random starts, lowest
/// energy first. The first entry is labeled [`Stability::Stable`].
pub fn find_equilibria(
    n: usize,
    trap: &TrapConfig,
    species: &IonSpecies,
    n_restarts: usize,
    seed: u64,
) -> Result<Vec<EquilibriumResult>> {
    if n == 0 {
        return Err(Error::Domain("need at least one ion".into()));
    }
    if n_restarts == 0 {
        return Err(Error::Domain("need at least one restart".into()));
    }
    let l = length_scale(trap, species)?;
    let model = PotentialModel::new(trap, species);
    let e0 = coulomb_constant() / l;
    let scaled = Scaled { model: &model, l, e0 };
    let rotational = trap.is_rotationally_symmetric();

    let mut candidates: Vec<Candidate> = (0..n_restarts)
        .into_par_iter()
        .map(|r| run_restart(&scaled, n, seed, r, rotational))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();
    if candidates.is_empty() {
        return Err(Error::ConvergenceFailure { restarts: n_restarts });
    }
    candidates.sort_by(|a, b| a.energy.total_cmp(&b.energy));

    let mut unique: Vec<(Candidate, usize)> = Vec::new();
    for c in candidates {
        match unique.iter_mut().find(|(k, _)| same_configuration(&k.u, k.energy, &c.u, c.energy, 1.0, 1.0)) {
            Some((_, dups)) => *dups += 1,
            None => unique.push((c, 0)),
        }
    }

    unique
        .into_iter()
        .enumerate()
        .map(|(idx, (c, dups))| {
            let xy: Vec<f64> = c.u.iter().map(|v| v * l).collect();
            let positions = CrystalPositions::from_planar(&xy);
            let rings = ring_configuration(&positions, l);
            let (r_max, d_min) = metrics(&xy);
            Ok(EquilibriumResult {
                positions,
                energy: c.energy * e0,
                stability: if idx == 0 { Stability::Stable } else { Stability::Metastable },
                ring_configuration: rings.counts,
                ring_ambiguous: rings.ambiguous,
                r_max,
                d_min,
                n_found_duplicates: dups,
                gradient_norm: c.gradient_norm * e0 / l,
            })
        })
        .collect()
}

/// Identity test used for deduplication: energies within relative 1e-9 and
/// shapes equal within `1e-3 * l` up to rotation, reflection and relabeling.
///
/// Concentric shells with coprime ion counts can turn against each other
/// along a numerically flat valley, deforming each shell slightly. Minima
/// with equal energy, equal shell counts and sorted centroid distances within
/// `0.05 * l` are therefore also treated as one configuration.
/// `energy_unit` floors the energy tolerance for configurations near zero energy.
pub fn same_configuration(a: &[f64], ea: f64, b: &[f64], eb: f64, l: f64, energy_unit: f64) -> bool {
    if a.len() != b.len() || (ea - eb).abs() > 1e-9 * ea.abs().max(eb.abs()).max(energy_unit) {
        return false;
    }
    if same_shape(a, b, 1e-3 * l) {
        return true;
    }
    let (sa, sb) = (split_shells(a, l), split_shells(b, l));
    let counts = |s: &[Vec<f64>]| s.iter().map(|v| v.len()).collect::<Vec<_>>();
    if sa.len() < 2 || counts(&sa) != counts(&sb) {
        return false;
    }
    let radii = |s: &[Vec<f64>]| {
        let mut r: Vec<f64> = s.iter().flat_map(|v| v.chunks_exact(2).map(|p| p[0].hypot(p[1]))).collect();
        r.sort_by(f64::total_cmp);
        r
    };
    radii(&sa).iter().zip(radii(&sb)).all(|(x, y)| (x - y).abs() < 0.05 * l)
}

fn split_shells(xy: &[f64], l: f64) -> Vec<Vec<f64>> {
    let n = xy.len() / 2;
    let cx = xy.iter().step_by(2).sum::<f64>() / n as f64;
    let cy = xy.iter().skip(1).step_by(2).sum::<f64>() / n as f64;
    let mut idx: Vec<(f64, usize)> = (0..n)
        .map(|i| ((xy[2 * i] - cx).hypot(xy[2 * i + 1] - cy), i))
        .collect();
    idx.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut shells: Vec<Vec<f64>> = Vec::new();
    let mut last = f64::NEG_INFINITY;
    for (r, i) in idx {
        if shells.is_empty() || r - last > SHELL_GAP * l {
            shells.push(Vec::new());
        }
        shells.last_mut().unwrap().extend([xy[2 * i] - cx, xy[2 * i + 1] - cy]);
        last = r;
    }
    shells
}

/// Re-run deduplication on an existing result list.
pub fn dedup(results: &[EquilibriumResult], l: f64) -> Vec<EquilibriumResult> {
    let e0 = coulomb_constant() / l;
    let mut out: Vec<EquilibriumResult> = Vec::new();
    for r in results {
        let xy = r.planar();
        if !out.iter().any(|k| same_configuration(&k.planar(), k.energy, &xy, r.energy, l, e0)) {
            out.push(r.clone());
        }
    }
    out
}

fn centroid_distances(positions: &CrystalPositions) -> Vec<f64> {
    let c = positions.centroid();
    (0..positions.n_ions())
        .map(|i| {
            let p = positions.ion(i);
            ((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2) + (p[2] - c[2]).powi(2)).sqrt()
        })
        .collect()
}

/// Shell counts from innermost outward. A gap within 20% of the threshold
/// makes the split unreliable; the result is then `[N]`, flagged.
pub fn ring_configuration(positions: &CrystalPositions, length_scale: f64) -> RingConfiguration {
    let n = positions.n_ions();
    let mut r = centroid_distances(positions);
    r.sort_by(f64::total_cmp);
    let gap = SHELL_GAP * length_scale;
    let mut counts = Vec::new();
    let mut current = 0;
    let mut ambiguous = false;
    for k in 0..n {
        current += 1;
        if k + 1 < n {
            let d = r[k + 1] - r[k];
            if d > gap {
                counts.push(current);
                current = 0;
            } else if d > 0.8 * gap {
                ambiguous = true;
            }
        }
    }
    if current > 0 {
        counts.push(current);
    }
    if ambiguous {
        log::warn!("ring structure ambiguous for {n} ions; reporting a single shell");
        counts = vec![n];
    }
    RingConfiguration { counts, ambiguous }
}

fn metrics(xy: &[f64]) -> (f64, Option<f64>) {
    let pos = CrystalPositions::from_planar(xy);
    let r_max = centroid_distances(&pos).into_iter().fold(0.0, f64::max);
    let n = pos.n_ions();
    let mut d_min = f64::INFINITY;
    for i in 0..n {
        for j in (i + 1)..n {
            d_min = d_min.min((xy[2 * i] - xy[2 * j]).hypot(xy[2 * i + 1] - xy[2 * j + 1]));
        }
    }
    (r_max, (n >= 2).then_some(d_min))
}

/// `(r_max, d_min)`: largest distance from the centroid and smallest pair spacing.
pub fn crystal_metrics(positions: &CrystalPositions) -> Result<(f64, f64)> {
    if positions.n_ions() < 2 {
        return Err(Error::Domain("minimum spacing needs at least two ions".into()));
    }
    let c = positions.centroid();
    let n = positions.n_ions();
    let mut r_max = 0.0f64;
    let mut d_min = f64::INFINITY;
    for i in 0..n {
        let p = positions.ion(i);
        r_max = r_max.max(((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2) + (p[2] - c[2]).powi(2)).sqrt());
        for j in (i + 1)..n {
            let q = positions.ion(j);
            d_min = d_min.min(((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2)).sqrt());
        }
    }
    Ok((r_max, d_min))
}
