//! Phonon-mediated spin-spin couplings from spin-dependent-force drives.
//!
//! `J_ij = (E_recoil / hbar) sum_n Omega_in Omega_jn sum_m b_im b_jm / (mu_n^2 - omega_m^2)`,
//! in rad/s. Positive couplings are anti-ferromagnetic.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::equilibrium::EquilibriumResult;
use crate::error::{Error, Result};
use crate::modes::{ModeSpectrum, Partition};
use crate::physics::constants::HBAR;
use crate::potential::CrystalPositions;
use crate::transition::log_log_fit;

/// Default resonance tolerance as a fraction of the highest used mode frequency.
pub const RESONANCE_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModePartition {
    OutOfPlane,
    InPlane,
    All,
}

impl ModePartition {
    fn contains(&self, p: Partition) -> bool {
        match self {
            ModePartition::OutOfPlane => p == Partition::OutOfPlane,
            ModePartition::InPlane => p == Partition::InPlane,
            ModePartition::All => true,
        }
    }

    /// Force direction used when none is given: z for out-of-plane drives, x otherwise.
    pub fn default_force_direction(&self) -> [f64; 3] {
        match self {
            ModePartition::OutOfPlane | ModePartition::All => [0.0, 0.0, 1.0],
            ModePartition::InPlane => [1.0, 0.0, 0.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpinDriveConfig {
    /// SDF frequencies, rad/s.
    pub mu_n: Vec<f64>,
    /// `rabi[i][n]` is ion i's Rabi frequency for drive n, rad/s.
    pub rabi: Vec<Vec<f64>>,
    /// J
    pub recoil_energy: f64,
    pub mode_partition_used: ModePartition,
    /// Unit vector along which the force pushes; `b_im` is the mode's projection on it.
    #[serde(default)]
    pub force_direction: Option<[f64; 3]>,
    /// rad/s; defaults to `RESONANCE_TOLERANCE * omega_max`.
    #[serde(default)]
    pub resonance_tolerance: Option<f64>,
}

impl SpinDriveConfig {
    /// One out-of-plane drive with the same Rabi frequency on every ion.
    pub fn single(mu: f64, rabi: f64, n_ions: usize, recoil_energy: f64) -> Self {
        SpinDriveConfig {
            mu_n: vec![mu],
            rabi: vec![vec![rabi]; n_ions],
            recoil_energy,
            mode_partition_used: ModePartition::OutOfPlane,
            force_direction: None,
            resonance_tolerance: None,
        }
    }

    pub fn with_mu(&self, mu: f64) -> Self {
        let mut d = self.clone();
        d.mu_n = vec![mu; self.mu_n.len().max(1)];
        if d.rabi.iter().any(|r| r.len() != d.mu_n.len()) {
            d.rabi.iter_mut().for_each(|r| r.resize(d.mu_n.len(), r.first().copied().unwrap_or(0.0)));
        }
        d
    }

    fn validate(&self, n_ions: usize) -> Result<()> {
        if self.mu_n.is_empty() {
            return Err(Error::Domain("at least one drive frequency is required".into()));
        }
        if self.rabi.len() != n_ions || self.rabi.iter().any(|r| r.len() != self.mu_n.len()) {
            return Err(Error::Domain(format!(
                "rabi must be {n_ions} x {} (ions x drives)",
                self.mu_n.len()
            )));
        }
        if self.rabi.iter().flatten().any(|&v| !(v >= 0.0)) {
            return Err(Error::Domain("Rabi frequencies must be nonnegative".into()));
        }
        if !(self.recoil_energy >= 0.0) {
            return Err(Error::Domain("recoil energy must be nonnegative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaFit {
    pub beta: f64,
    /// RMS residual of `ln|J|`.
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct SpinGraph {
    /// rad/s, symmetric with zero diagonal.
    pub j: DMatrix<f64>,
    pub beta_fit: Option<BetaFit>,
    /// Fraction of pairs with `J_ij > 0`.
    pub af_fraction: f64,
}

impl SpinGraph {
    pub fn n_ions(&self) -> usize {
        self.j.nrows()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpinEdge {
    pub i: usize,
    pub j: usize,
    /// m
    pub r: f64,
    /// rad/s
    pub coupling: f64,
}

/// Mode amplitudes `b_im` and frequencies of the used modes, checked against
/// the drive frequencies.
fn used_modes(spectrum: &ModeSpectrum, drive: &SpinDriveConfig) -> Result<(Vec<usize>, DMatrix<f64>)> {
    let n = spectrum.n_ions();
    let modes: Vec<usize> = (0..spectrum.n_modes())
        .filter(|&m| drive.mode_partition_used.contains(spectrum.partition[m]))
        .collect();
    if let Some(&m) = modes.iter().find(|&&m| spectrum.imaginary[m]) {
        return Err(Error::Domain(format!("mode {m} is unstable (imaginary frequency)")));
    }
    let dir = drive
        .force_direction
        .unwrap_or_else(|| drive.mode_partition_used.default_force_direction());
    let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(norm > 0.0) {
        return Err(Error::Domain("force direction must be nonzero".into()));
    }
    let b = DMatrix::from_fn(n, modes.len(), |i, k| {
        (0..3).map(|a| spectrum.eigenvectors[(3 * i + a, modes[k])] * dir[a]).sum::<f64>() / norm
    });

    let omega_max = modes.iter().map(|&m| spectrum.frequencies[m]).fold(0.0, f64::max);
    let tol = drive.resonance_tolerance.unwrap_or(RESONANCE_TOLERANCE * omega_max);
    for (d, &mu) in drive.mu_n.iter().enumerate() {
        for &m in &modes {
            if (mu - spectrum.frequencies[m]).abs() < tol {
                return Err(Error::DriveResonance { drive: d, mode: m, mu, omega: spectrum.frequencies[m] });
            }
        }
    }
    Ok((modes, b))
}

/// Coupling matrix for `drive` over the modes of `spectrum`; the power-law
/// fit against the positions of `eq` is attached when it succeeds.
pub fn compute_jij(spectrum: &ModeSpectrum, eq: &EquilibriumResult, drive: &SpinDriveConfig) -> Result<SpinGraph> {
    compute_jij_at(spectrum, &eq.positions, drive)
}

pub fn compute_jij_at(spectrum: &ModeSpectrum, positions: &CrystalPositions, drive: &SpinDriveConfig) -> Result<SpinGraph> {
    let n = spectrum.n_ions();
    if positions.n_ions() != n {
        return Err(Error::Domain("spectrum and positions differ in ion count".into()));
    }
    drive.validate(n)?;
    let (modes, b) = used_modes(spectrum, drive)?;

    // kernel_n(i, j) = sum_m b_im b_jm / (mu_n^2 - omega_m^2)
    let mut j = DMatrix::<f64>::zeros(n, n);
    for (d, &mu) in drive.mu_n.iter().enumerate() {
        let inv = DMatrix::from_fn(modes.len(), 1, |k, _| 1.0 / (mu * mu - spectrum.omega_sq[modes[k]]));
        let scaled = DMatrix::from_fn(n, modes.len(), |i, k| b[(i, k)] * inv[k]);
        let kernel = &scaled * b.transpose();
        for r in 0..n {
            for c in 0..n {
                j[(r, c)] += drive.rabi[r][d] * drive.rabi[c][d] * kernel[(r, c)];
            }
        }
    }
    j *= drive.recoil_energy / HBAR;
    for r in 0..n {
        j[(r, r)] = 0.0;
        for c in 0..r {
            let avg = 0.5 * (j[(r, c)] + j[(c, r)]);
            j[(r, c)] = avg;
            j[(c, r)] = avg;
        }
    }

    let pairs = n * (n - 1) / 2;
    let af = (0..n).flat_map(|r| (0..r).map(move |c| (r, c))).filter(|&(r, c)| j[(r, c)] > 0.0).count();
    let mut graph = SpinGraph {
        j,
        beta_fit: None,
        af_fraction: if pairs > 0 { af as f64 / pairs as f64 } else { 0.0 },
    };
    graph.beta_fit = fit_beta_at(&graph, positions).ok();
    Ok(graph)
}

/// Pairs `i < j` with their separation and coupling.
pub fn edges(graph: &SpinGraph, positions: &CrystalPositions) -> Vec<SpinEdge> {
    let n = graph.n_ions();
    let mut out = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for k in i + 1..n {
            let (a, b) = (positions.ion(i), positions.ion(k));
            let r = (0..3).map(|d| (a[d] - b[d]).powi(2)).sum::<f64>().sqrt();
            out.push(SpinEdge { i, j: k, r, coupling: graph.j[(i, k)] });
        }
    }
    out
}

/// Least-squares `ln|J_ij| = c - beta ln r_ij` over all pairs.
pub fn fit_beta(graph: &SpinGraph, eq: &EquilibriumResult) -> Result<BetaFit> {
    fit_beta_at(graph, &eq.positions)
}

pub fn fit_beta_at(graph: &SpinGraph, positions: &CrystalPositions) -> Result<BetaFit> {
    let e = edges(graph, positions);
    if let Some(z) = e.iter().find(|e| e.coupling == 0.0 || !e.coupling.is_finite()) {
        return Err(Error::FitFailure(format!("coupling between ions {} and {} is zero", z.i, z.j)));
    }
    let mut distances: Vec<f64> = e.iter().map(|e| e.r).collect();
    distances.sort_by(f64::total_cmp);
    distances.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * b.abs());
    if distances.len() < 3 {
        return Err(Error::InsufficientData { needed: 3, got: distances.len() });
    }
    let (slope, _, residual) = log_log_fit(e.iter().map(|e| (e.r.ln(), e.coupling.abs().ln())))?;
    Ok(BetaFit { beta: -slope, residual })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepPoint {
    /// rad/s
    pub mu: f64,
    pub beta: Option<f64>,
    pub residual: Option<f64>,
    pub af_fraction: Option<f64>,
    pub error: Option<String>,
}

/// One coupling graph and fit per drive frequency, in parallel. Failures
/// (resonances, failed fits) are recorded per point.
pub fn beta_sweep(
    spectrum: &ModeSpectrum,
    eq: &EquilibriumResult,
    mu_values: &[f64],
    template: &SpinDriveConfig,
) -> Vec<SweepPoint> {
    mu_values
        .par_iter()
        .map(|&mu| {
            let fit = compute_jij(spectrum, eq, &template.with_mu(mu))
                .and_then(|g| fit_beta(&g, eq).map(|f| (f, g.af_fraction)));
            match fit {
                Ok((f, af)) => SweepPoint {
                    mu,
                    beta: Some(f.beta),
                    residual: Some(f.residual),
                    af_fraction: Some(af),
                    error: None,
                },
                Err(e) => SweepPoint { mu, beta: None, residual: None, af_fraction: None, error: Some(e.to_string()) },
            }
        })
        .collect()
}

/// Highest frequency among the modes a drive would use.
pub fn max_mode_frequency(spectrum: &ModeSpectrum, partition: ModePartition) -> f64 {
    (0..spectrum.n_modes())
        .filter(|&m| partition.contains(spectrum.partition[m]))
        .map(|m| spectrum.frequencies[m])
        .fold(0.0, f64::max)
}
