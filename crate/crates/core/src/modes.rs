//! Normal modes of a planar crystal.
//!
//! At a planar configuration the Hessian splits exactly into an in-plane
//! block and an out-of-plane (z) block, which are diagonalized separately in
//! mass-weighted coordinates so eigenvalues are `omega^2`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::equilibrium::EquilibriumResult;
use crate::error::{Error, Result};
use crate::physics::{IonSpecies, TrapConfig};
use crate::potential::{CrystalPositions, PotentialModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Partition {
    OutOfPlane,
    InPlane,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModeLabel {
    #[serde(rename = "COM")]
    Com,
    TiltX,
    TiltY,
    SaddleXY,
    Other,
}

impl ModeLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            ModeLabel::Com => "COM",
            ModeLabel::TiltX => "TiltX",
            ModeLabel::TiltY => "TiltY",
            ModeLabel::SaddleXY => "SaddleXY",
            ModeLabel::Other => "Other",
        }
    }
}

/// Modes ordered out-of-plane first, then in-plane; each group by descending `omega^2`.
#[derive(Debug, Clone)]
pub struct ModeSpectrum {
    /// Signed eigenvalues `omega_m^2`, rad^2/s^2.
    pub omega_sq: Vec<f64>,
    /// `sqrt(|omega_m^2|)`, rad/s.
    pub frequencies: Vec<f64>,
    pub imaginary: Vec<bool>,
    pub partition: Vec<Partition>,
    /// Column `m` is mode `m` over the 3N coordinates `(x1, y1, z1, ...)`.
    pub eigenvectors: DMatrix<f64>,
    /// Filled by [`label_modes`] for out-of-plane modes.
    pub labels: Vec<Option<ModeLabel>>,
}

impl ModeSpectrum {
    pub fn n_modes(&self) -> usize {
        self.omega_sq.len()
    }

    pub fn n_ions(&self) -> usize {
        self.n_modes() / 3
    }

    /// Indices of the modes in `partition`, in spectrum order.
    pub fn indices(&self, partition: Partition) -> Vec<usize> {
        (0..self.n_modes()).filter(|&m| self.partition[m] == partition).collect()
    }

    /// Per-ion amplitudes of an out-of-plane mode (its z components).
    pub fn z_amplitudes(&self, mode: usize) -> Vec<f64> {
        (0..self.n_ions()).map(|i| self.eigenvectors[(3 * i + 2, mode)]).collect()
    }

    /// Per-ion displacement components of mode `m` along `axis` (0 = x, 1 = y, 2 = z).
    pub fn amplitudes(&self, mode: usize, axis: usize) -> Vec<f64> {
        (0..self.n_ions()).map(|i| self.eigenvectors[(3 * i + axis, mode)]).collect()
    }
}

/// Mass-weighted out-of-plane block `H_zz / m` at a planar configuration.
pub fn out_of_plane_block(positions: &CrystalPositions, model: &PotentialModel) -> Result<DMatrix<f64>> {
    let h = model.hessian(positions)?;
    let n = positions.n_ions();
    Ok(DMatrix::from_fn(n, n, |i, j| h[(3 * i + 2, 3 * j + 2)] / model.mass()))
}

fn sorted_eigen(block: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(block);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(eig.eigenvectors.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Spectrum at fixed planar positions.
pub fn normal_modes_at(positions: &CrystalPositions, trap: &TrapConfig, species: &IonSpecies) -> Result<ModeSpectrum> {
    if !positions.is_planar() {
        return Err(Error::Domain("normal modes need a planar configuration".into()));
    }
    let n = positions.n_ions();
    let model = PotentialModel::new(trap, species);
    let h = model.hessian(positions)? / species.mass;

    let zb = DMatrix::from_fn(n, n, |i, j| h[(3 * i + 2, 3 * j + 2)]);
    let xyb = DMatrix::from_fn(2 * n, 2 * n, |r, c| h[(3 * (r / 2) + r % 2, 3 * (c / 2) + c % 2)]);
    let (zvals, zvecs) = sorted_eigen(zb);
    let (pvals, pvecs) = sorted_eigen(xyb);

    let mut eigenvectors = DMatrix::zeros(3 * n, 3 * n);
    for m in 0..n {
        for i in 0..n {
            eigenvectors[(3 * i + 2, m)] = zvecs[(i, m)];
        }
    }
    for m in 0..2 * n {
        for r in 0..2 * n {
            eigenvectors[(3 * (r / 2) + r % 2, n + m)] = pvecs[(r, m)];
        }
    }
    let omega_sq: Vec<f64> = zvals.into_iter().chain(pvals).collect();
    Ok(ModeSpectrum {
        frequencies: omega_sq.iter().map(|w| w.abs().sqrt()).collect(),
        imaginary: omega_sq.iter().map(|&w| w < 0.0).collect(),
        partition: (0..3 * n)
            .map(|m| if m < n { Partition::OutOfPlane } else { Partition::InPlane })
            .collect(),
        labels: vec![None; 3 * n],
        omega_sq,
        eigenvectors,
    })
}

pub fn normal_modes(eq: &EquilibriumResult, trap: &TrapConfig, species: &IonSpecies) -> Result<ModeSpectrum> {
    normal_modes_at(&eq.positions, trap, species)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowestOutOfPlane {
    /// `sqrt(|omega^2|)`, rad/s.
    pub frequency: f64,
    pub omega_sq: f64,
    pub imaginary: bool,
}

pub fn out_of_plane_lowest(spectrum: &ModeSpectrum) -> LowestOutOfPlane {
    let m = spectrum
        .indices(Partition::OutOfPlane)
        .into_iter()
        .min_by(|&a, &b| spectrum.omega_sq[a].total_cmp(&spectrum.omega_sq[b]))
        .expect("spectrum has out-of-plane modes");
    LowestOutOfPlane {
        frequency: spectrum.frequencies[m],
        omega_sq: spectrum.omega_sq[m],
        imaginary: spectrum.imaginary[m],
    }
}

/// Normalized `{1, x, y, xy}` evaluated at the ion positions relative to the
/// centroid. Entries that vanish identically (e.g. `x` for one ion) are `None`.
fn polynomial_basis(positions: &CrystalPositions) -> [(ModeLabel, Option<DVector<f64>>); 4] {
    let n = positions.n_ions();
    let c = positions.centroid();
    let x: Vec<f64> = (0..n).map(|i| positions.ion(i)[0] - c[0]).collect();
    let y: Vec<f64> = (0..n).map(|i| positions.ion(i)[1] - c[1]).collect();
    let scale = x.iter().chain(&y).fold(0.0f64, |a, v| a.max(v.abs()));
    let make = |f: &dyn Fn(usize) -> f64| {
        let v = DVector::from_fn(n, |i, _| f(i));
        let norm = v.norm();
        // relative to what a unit-scale pattern of this size would give
        (norm > 1e-9 * (n as f64).sqrt()).then(|| v / norm)
    };
    let s = if scale > 0.0 { scale } else { 1.0 };
    [
        (ModeLabel::Com, make(&|_| 1.0)),
        (ModeLabel::TiltX, make(&|i| x[i] / s)),
        (ModeLabel::TiltY, make(&|i| y[i] / s)),
        (ModeLabel::SaddleXY, make(&|i| x[i] * y[i] / (s * s))),
    ]
}

/// Label out-of-plane modes by their dominant polynomial pattern. Modes whose
/// frequencies agree to relative 1e-6 are first rotated within their common
/// subspace to line up with the basis.
pub fn label_modes(spectrum: &mut ModeSpectrum, eq: &EquilibriumResult) {
    label_modes_at(spectrum, &eq.positions)
}

pub fn label_modes_at(spectrum: &mut ModeSpectrum, positions: &CrystalPositions) {
    let n = positions.n_ions();
    let basis = polynomial_basis(positions);
    let z_modes = spectrum.indices(Partition::OutOfPlane);

    let mut groups: Vec<Vec<usize>> = Vec::new();
    for &m in &z_modes {
        let w = spectrum.omega_sq[m];
        match groups.last_mut() {
            Some(g) if {
                let w0 = spectrum.omega_sq[g[0]];
                (w.abs().sqrt() - w0.abs().sqrt()).abs() <= 1e-6 * w0.abs().sqrt().max(w.abs().sqrt())
            } => g.push(m),
            _ => groups.push(vec![m]),
        }
    }

    for group in groups {
        let mut sub: Vec<DVector<f64>> = group
            .iter()
            .map(|&m| DVector::from_vec(spectrum.z_amplitudes(m)))
            .collect();
        if group.len() > 1 {
            sub = rotate_to_basis(&sub, &basis);
            for (k, &m) in group.iter().enumerate() {
                for i in 0..n {
                    spectrum.eigenvectors[(3 * i + 2, m)] = sub[k][i];
                }
            }
        }
        for (k, &m) in group.iter().enumerate() {
            let best = basis
                .iter()
                .filter_map(|(label, v)| v.as_ref().map(|v| (*label, v.dot(&sub[k]).powi(2))))
                .max_by(|a, b| a.1.total_cmp(&b.1));
            spectrum.labels[m] = Some(match best {
                Some((label, o)) if o > 0.5 => label,
                _ => ModeLabel::Other,
            });
        }
    }
}

/// Orthonormal basis of span(`sub`) built greedily from the projections of
/// the polynomial patterns with the largest weight in the subspace.
fn rotate_to_basis(sub: &[DVector<f64>], basis: &[(ModeLabel, Option<DVector<f64>>); 4]) -> Vec<DVector<f64>> {
    let project = |v: &DVector<f64>, space: &[DVector<f64>]| {
        space.iter().fold(DVector::zeros(v.len()), |acc, s| acc + s * s.dot(v))
    };
    let mut remaining: Vec<DVector<f64>> = sub.to_vec();
    let mut out = Vec::new();
    let mut used = [false; 4];
    while !remaining.is_empty() {
        let pick = basis
            .iter()
            .enumerate()
            .filter(|(k, _)| !used[*k])
            .filter_map(|(k, (_, v))| v.as_ref().map(|v| (k, project(v, &remaining))))
            .max_by(|a, b| a.1.norm_squared().total_cmp(&b.1.norm_squared()));
        let Some((k, p)) = pick.filter(|(_, p)| p.norm() > 1e-8) else {
            out.extend(remaining);
            break;
        };
        used[k] = true;
        let v = &p / p.norm();
        // new orthonormal basis of the remaining subspace, orthogonal to v
        let mut next: Vec<DVector<f64>> = Vec::new();
        for r in &remaining {
            let mut w = r - &v * v.dot(r);
            for q in &next {
                w -= q * q.dot(&w);
            }
            if w.norm() > 1e-8 {
                next.push(&w / w.norm());
            }
        }
        next.truncate(remaining.len() - 1);
        out.push(v);
        remaining = next;
    }
    out
}

/// `min_i |b_i| / max_i |b_i|` over the z amplitudes of the highest
/// out-of-plane mode.
pub fn com_amplitude_ratio(spectrum: &ModeSpectrum) -> f64 {
    let m = spectrum.indices(Partition::OutOfPlane)[0];
    let a: Vec<f64> = spectrum.z_amplitudes(m).iter().map(|v| v.abs()).collect();
    let max = a.iter().cloned().fold(0.0, f64::max);
    a.iter().cloned().fold(f64::INFINITY, f64::min) / max
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::find_equilibria;
    use crate::physics::{effective_frequencies, OpticalTrapConfig};
    use std::f64::consts::PI;

    fn yb() -> IonSpecies {
        IonSpecies::ytterbium_171()
    }

    fn trap(anisotropy: f64, waist: f64, fz_mhz: f64) -> TrapConfig {
        let opt = OpticalTrapConfig::new(1064e-9, waist, 0.0).unwrap();
        let t = TrapConfig::new(2.0 * PI * 0.5e6, anisotropy, opt).unwrap();
        t.with_aspect_ratio(fz_mhz / 0.5, &yb()).unwrap()
    }

    #[test]
    fn uniform_waist_com_frequencies_exact() {
        let t = trap(0.1, f64::INFINITY, 2.0);
        let eq = &find_equilibria(6, &t, &yb(), 10, 1).unwrap()[0];
        let s = normal_modes(eq, &t, &yb()).unwrap();
        let f = effective_frequencies(&t, &yb()).unwrap();
        assert!((s.frequencies[0] / f.z - 1.0).abs() < 1e-10);
        let u = s.z_amplitudes(0);
        assert!(u.iter().all(|v| (v.abs() - 1.0 / 6f64.sqrt()).abs() < 1e-8));
        let inplane: Vec<f64> = s.indices(Partition::InPlane).iter().map(|&m| s.frequencies[m]).collect();
        for target in [f.x, f.y] {
            assert!(inplane.iter().any(|w| (w / target - 1.0).abs() < 1e-10), "{target}");
        }
    }

    #[test]
    fn eigenvectors_orthonormal_and_partitioned() {
        let t = trap(0.05, 15e-6, 1.5);
        let eq = &find_equilibria(7, &t, &yb(), 10, 2).unwrap()[0];
        let s = normal_modes(eq, &t, &yb()).unwrap();
        let g = s.eigenvectors.transpose() * &s.eigenvectors;
        assert!((g - DMatrix::identity(21, 21)).abs().max() < 1e-10);
        for m in 0..21 {
            let z: f64 = s.amplitudes(m, 2).iter().map(|v| v * v).sum();
            let expect = if s.partition[m] == Partition::OutOfPlane { 1.0 } else { 0.0 };
            assert!((z - expect).abs() < 1e-12);
        }
        for p in [Partition::OutOfPlane, Partition::InPlane] {
            let w: Vec<f64> = s.indices(p).iter().map(|&m| s.omega_sq[m]).collect();
            assert!(w.windows(2).all(|v| v[0] >= v[1]));
        }
    }

    #[test]
    fn out_of_plane_trace_identity() {
        let t = trap(0.1, 12e-6, 1.8);
        let eq = &find_equilibria(8, &t, &yb(), 10, 4).unwrap()[0];
        let s = normal_modes(eq, &t, &yb()).unwrap();
        let block = out_of_plane_block(&eq.positions, &PotentialModel::new(&t, &yb())).unwrap();
        let sum: f64 = s.indices(Partition::OutOfPlane).iter().map(|&m| s.omega_sq[m]).sum();
        assert!((sum / block.trace() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn square_crystal_matches_finite_difference_spectrum() {
        let t = trap(0.1, 20e-6, 1.5);
        let eq = &find_equilibria(4, &t, &yb(), 10, 3).unwrap()[0];
        let s = normal_modes(eq, &t, &yb()).unwrap();
        let model = PotentialModel::new(&t, &yb());
        let x0 = eq.positions.coords().to_vec();
        let h = 1e-10;
        let mut fd = DMatrix::zeros(12, 12);
        for k in 0..12 {
            let mut p = x0.clone();
            p[k] += h;
            let gp = model.gradient(&CrystalPositions::new(p.clone()).unwrap()).unwrap();
            p[k] -= 2.0 * h;
            let gm = model.gradient(&CrystalPositions::new(p).unwrap()).unwrap();
            for r in 0..12 {
                fd[(r, k)] = (gp[r] - gm[r]) / (2.0 * h) / yb().mass;
            }
        }
        let fd = (&fd + fd.transpose()) * 0.5;
        let mut oracle: Vec<f64> = SymmetricEigen::new(fd).eigenvalues.iter().copied().collect();
        let mut ours = s.omega_sq.clone();
        oracle.sort_by(f64::total_cmp);
        ours.sort_by(f64::total_cmp);
        let scale = ours.iter().map(|v| v.abs()).fold(0.0, f64::max);
        for (a, b) in ours.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-5 * a.abs().max(1e-3 * scale), "{a} vs {b}");
        }
    }

    #[test]
    fn single_ion_mode_is_com() {
        let t = trap(0.0, 20e-6, 1.0);
        let eq = &find_equilibria(1, &t, &yb(), 1, 0).unwrap()[0];
        let mut s = normal_modes(eq, &t, &yb()).unwrap();
        label_modes(&mut s, eq);
        assert_eq!(s.labels[0], Some(ModeLabel::Com));
    }

    #[test]
    fn ten_ion_labels_com_then_tilts() {
        let t = trap(0.1, f64::INFINITY, 2.0);
        let eq = &find_equilibria(10, &t, &yb(), 20, 1).unwrap()[0];
        let mut s = normal_modes(eq, &t, &yb()).unwrap();
        label_modes(&mut s, eq);
        assert_eq!(s.labels[0], Some(ModeLabel::Com));
        let mut tilts = [s.labels[1].unwrap(), s.labels[2].unwrap()];
        tilts.sort_by_key(|l| *l as u8);
        assert_eq!(tilts, [ModeLabel::TiltX, ModeLabel::TiltY]);
    }

    #[test]
    fn degenerate_tilts_are_resolved_in_symmetric_trap() {
        let t = trap(0.0, f64::INFINITY, 2.0);
        let eq = &find_equilibria(10, &t, &yb(), 20, 1).unwrap()[0];
        let mut s = normal_modes(eq, &t, &yb()).unwrap();
        label_modes(&mut s, eq);
        let l: Vec<_> = (0..3).map(|m| s.labels[m].unwrap()).collect();
        assert_eq!(l[0], ModeLabel::Com);
        assert!(l[1..].contains(&ModeLabel::TiltX) && l[1..].contains(&ModeLabel::TiltY));
        let g = s.eigenvectors.transpose() * &s.eigenvectors;
        assert!((g - DMatrix::identity(30, 30)).abs().max() < 1e-10);
    }

    #[test]
    fn below_transition_is_imaginary() {
        let t = trap(0.0, f64::INFINITY, 0.6);
        let eq = &find_equilibria(10, &t, &yb(), 10, 1).unwrap()[0];
        let s = normal_modes(eq, &t, &yb()).unwrap();
        assert!(out_of_plane_lowest(&s).imaginary);
        let t = trap(0.0, f64::INFINITY, 2.0);
        let s = normal_modes(eq, &t, &yb()).unwrap();
        let low = out_of_plane_lowest(&s);
        assert!(!low.imaginary && low.frequency > 0.0);
    }
}
