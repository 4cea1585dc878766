//! Upper bounds on potential barriers between planar configurations from a
//! Boltzmann-biased random walk in the 2N-dimensional in-plane coordinate space.
//!
//! Each step samples candidates uniformly from the "grey region": the cube of
//! side `epsilon` around the current point, intersected with the ball of
//! points at least `d` closer to the target. One candidate is then picked
//! with probability proportional to `exp(-E / (k_B T_p))`. The highest energy
//! met along a path bounds the barrier from above; the lowest such peak over
//! several paths is reported.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::equilibrium::EquilibriumResult;
use crate::error::{Error, Result};
use crate::matching::align;
use crate::physics::constants::BOLTZMANN;
use crate::physics::{IonSpecies, TrapConfig};
use crate::potential::PotentialModel;

/// Proposal rounds per step (one plus ten retries) before giving up on an
/// empty grey region.
pub const MAX_PROPOSAL_ROUNDS: usize = 11;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BarrierWalkParams {
    /// Required progress towards the target per step, m.
    pub d: f64,
    /// Side of the sampling cube, m.
    pub epsilon: f64,
    pub n_samples: usize,
    /// Selection temperature `T_p`, K.
    pub temperature: f64,
    pub n_paths: usize,
    pub max_iterations: usize,
    pub seed: u64,
}

impl BarrierWalkParams {
    /// Defaults scaled to the start-target distance: `d = dist/20`,
    /// `epsilon = 2.5 d`, 1000 samples, 1 mK, 10 paths, `10 ceil(dist/d)` steps.
    pub fn for_distance(distance: f64, seed: u64) -> Self {
        let d = distance / 20.0;
        BarrierWalkParams {
            d,
            epsilon: 2.5 * d,
            n_samples: 1000,
            temperature: 1e-3,
            n_paths: 10,
            max_iterations: 10 * (distance / d).ceil() as usize,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.d > 0.0) || !(self.epsilon > self.d) {
            return Err(Error::Domain(format!(
                "need epsilon > d > 0 (d = {}, epsilon = {})",
                self.d, self.epsilon
            )));
        }
        if self.n_samples == 0 || self.n_paths == 0 {
            return Err(Error::Domain("n_samples and n_paths must be at least 1".into()));
        }
        if !(self.temperature > 0.0) {
            return Err(Error::Domain("selection temperature must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BarrierPath {
    /// Planar configurations `(x1, y1, ...)`, m.
    pub points: Vec<Vec<f64>>,
    /// J
    pub energies: Vec<f64>,
    /// J
    pub peak_energy: f64,
    /// `(peak - start) / k_B`, K.
    pub barrier_from_start: f64,
    pub converged: bool,
}

impl BarrierPath {
    /// Cumulative arc length along the path, normalized to end at 1.
    pub fn path_coordinate(&self) -> Vec<f64> {
        let mut s = vec![0.0];
        for w in self.points.windows(2) {
            let step = distance(&w[0], &w[1]);
            s.push(s.last().unwrap() + step);
        }
        let total = *s.last().unwrap();
        if total > 0.0 {
            s.iter_mut().for_each(|v| *v /= total);
        }
        s
    }
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

fn ln_ball_volume(dim: usize, radius: f64) -> f64 {
    let k = dim as f64;
    0.5 * k * std::f64::consts::PI.ln() - ln_gamma(0.5 * k + 1.0) + k * radius.ln()
}

/// Up to `n_samples` points drawn uniformly from the grey region around `x`.
/// Proposals come from whichever of cube and ball is smaller and are kept if
/// they also lie in the other.
pub fn sample_grey_region<R: Rng>(
    x: &[f64],
    target: &[f64],
    params: &BarrierWalkParams,
    rng: &mut R,
) -> Result<Vec<Vec<f64>>> {
    let dim = x.len();
    let radius = distance(x, target) - params.d;
    if !(radius > 0.0) {
        return Err(Error::Domain("already within d of the target".into()));
    }
    let half = 0.5 * params.epsilon;
    let in_cube = |y: &[f64]| y.iter().zip(x).all(|(a, b)| (a - b).abs() <= half);
    let in_ball = |y: &[f64]| distance(y, target) <= radius;
    let from_ball = ln_ball_volume(dim, radius) < dim as f64 * params.epsilon.ln();

    let mut accepted = Vec::new();
    let mut draws = 0;
    for _ in 0..MAX_PROPOSAL_ROUNDS {
        for _ in 0..params.n_samples {
            draws += 1;
            let y: Vec<f64> = if from_ball {
                let g: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
                let gn = g.iter().map(|v| v * v).sum::<f64>().sqrt();
                let r = radius * rng.random::<f64>().powf(1.0 / dim as f64);
                target.iter().zip(&g).map(|(c, v)| c + r * v / gn).collect()
            } else {
                x.iter().map(|c| c + params.epsilon * (rng.random::<f64>() - 0.5)).collect()
            };
            let keep = if from_ball { in_cube(&y) } else { in_ball(&y) };
            if keep {
                accepted.push(y);
                if accepted.len() == params.n_samples {
                    return Ok(accepted);
                }
            }
        }
    }
    if accepted.is_empty() {
        return Err(Error::SamplingFailure { draws });
    }
    Ok(accepted)
}

/// Normalized selection probabilities `exp(-(E_j - E_min) / (k_B T))`.
/// Candidates with non-finite energy get zero weight.
pub fn boltzmann_weights(energies: &[f64], temperature: f64) -> Vec<f64> {
    let emin = energies.iter().cloned().filter(|e| e.is_finite()).fold(f64::INFINITY, f64::min);
    let kt = BOLTZMANN * temperature;
    let w: Vec<f64> = energies
        .iter()
        .map(|&e| if e.is_finite() { (-(e - emin) / kt).exp() } else { 0.0 })
        .collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|v| v / total).collect()
}

/// One walk step from `x` towards `target`.
pub fn propose_step<R: Rng>(
    x: &[f64],
    target: &[f64],
    params: &BarrierWalkParams,
    model: &PotentialModel,
    rng: &mut R,
) -> Result<(Vec<f64>, f64)> {
    let candidates = sample_grey_region(x, target, params, rng)?;
    let energies: Vec<f64> = candidates
        .iter()
        .map(|c| model.planar_energy(c).unwrap_or(f64::INFINITY))
        .collect();
    if energies.iter().all(|e| !e.is_finite()) {
        return Err(Error::SamplingFailure { draws: candidates.len() });
    }
    let weights = boltzmann_weights(&energies, params.temperature);
    let pick = WeightedIndex::new(&weights)
        .map_err(|e| Error::Domain(format!("selection weights: {e}")))?
        .sample(rng);
    Ok((candidates[pick].clone(), energies[pick]))
}

/// Walk from `x0` until within `d` of `xf` or out of iterations.
pub fn optimize_path<R: Rng>(
    x0: &[f64],
    xf: &[f64],
    params: &BarrierWalkParams,
    model: &PotentialModel,
    rng: &mut R,
) -> Result<BarrierPath> {
    params.validate()?;
    let e0 = model.planar_energy(x0)?;
    let mut points = vec![x0.to_vec()];
    let mut energies = vec![e0];
    let mut x = x0.to_vec();
    let mut converged = distance(&x, xf) <= params.d;
    for _ in 0..params.max_iterations {
        if converged {
            break;
        }
        let (next, e) = propose_step(&x, xf, params, model, rng)?;
        points.push(next.clone());
        energies.push(e);
        x = next;
        converged = distance(&x, xf) <= params.d;
    }
    let peak_energy = energies.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(BarrierPath {
        points,
        energies,
        peak_energy,
        barrier_from_start: (peak_energy - e0) / BOLTZMANN,
        converged,
    })
}

/// Lowest peak over the converged paths: `(barrier in K, index of best path)`.
pub fn barrier_upper_bound(paths: &[BarrierPath]) -> Result<(f64, usize)> {
    paths
        .iter()
        .enumerate()
        .filter(|(_, p)| p.converged)
        .min_by(|a, b| a.1.peak_energy.total_cmp(&b.1.peak_energy))
        .map(|(k, p)| ((p.peak_energy - p.energies[0]) / BOLTZMANN, k))
        .ok_or(Error::NoConvergedPaths)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BarrierEstimate {
    /// K
    pub barrier: f64,
    /// Lowest peak minus the target's energy, K: the barrier for the reverse
    /// transition read off the same paths.
    pub reverse_barrier: f64,
    pub best_path: usize,
    pub paths: Vec<BarrierPath>,
    /// Target configuration after alignment onto the start, m.
    pub aligned_target: Vec<f64>,
    pub params: BarrierWalkParams,
}

/// Barrier for leaving `start` towards `end`. The target is first aligned to
/// the start by the best rotation/reflection and relabeling; `params` default
/// to [`BarrierWalkParams::for_distance`] of the aligned distance.
pub fn estimate_barrier(
    start: &EquilibriumResult,
    end: &EquilibriumResult,
    trap: &TrapConfig,
    species: &IonSpecies,
    params: Option<BarrierWalkParams>,
    seed: u64,
) -> Result<BarrierEstimate> {
    let x0 = start.planar();
    let al = align(&x0, &end.planar(), trap.is_rotationally_symmetric(), 360);
    let xf = al.aligned;
    if al.distance <= 0.0 {
        return Err(Error::Domain("start and target are the same configuration".into()));
    }
    let params = params.unwrap_or_else(|| BarrierWalkParams::for_distance(al.distance, seed));
    params.validate()?;
    let model = PotentialModel::new(trap, species);
    let paths: Vec<BarrierPath> = (0..params.n_paths)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
            rng.set_stream(k as u64);
            optimize_path(&x0, &xf, &params, &model, &mut rng)
        })
        .collect::<Result<_>>()?;
    let (barrier, best_path) = barrier_upper_bound(&paths)?;
    let reverse_barrier = (paths[best_path].peak_energy - end.energy) / BOLTZMANN;
    Ok(BarrierEstimate {
        barrier,
        reverse_barrier,
        best_path,
        paths,
        aligned_target: xf,
        params,
    })
}
