//! Total N-ion potential: Coulomb repulsion, DC quadrupole and the cavity
//! standing wave, with analytic gradient and Hessian.
//!
//! Coordinates are SI meters, flattened as `(x1, y1, z1, x2, ...)`. The planar
//! variants take `(x1, y1, x2, y2, ...)` with every `z = 0`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::physics::constants::coulomb_constant;
use crate::physics::{IonSpecies, LatticeVariant, TrapConfig};

/// Pairs closer than this are treated as coincident.
pub const MIN_PAIR_DISTANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct CrystalPositions {
    coords: Vec<f64>,
}

impl CrystalPositions {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if !coords.len().is_multiple_of(3) {
            return Err(Error::Domain(format!(
                "coordinate vector length {} is not a multiple of 3",
                coords.len()
            )));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::Domain("non-finite coordinate".into()));
        }
        Ok(CrystalPositions { coords })
    }

    pub fn from_xyz(ions: &[[f64; 3]]) -> Self {
        CrystalPositions {
            coords: ions.iter().flatten().copied().collect(),
        }
    }

    /// Lift `(x1, y1, x2, y2, ...)` into the z = 0 plane.
    pub fn from_planar(xy: &[f64]) -> Self {
        let mut coords = Vec::with_capacity(xy.len() / 2 * 3);
        for p in xy.chunks_exact(2) {
            coords.extend_from_slice(&[p[0], p[1], 0.0]);
        }
        CrystalPositions { coords }
    }

    pub fn n_ions(&self) -> usize {
        self.coords.len() / 3
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn ion(&self, i: usize) -> [f64; 3] {
        [self.coords[3 * i], self.coords[3 * i + 1], self.coords[3 * i + 2]]
    }

    pub fn planar(&self) -> Vec<f64> {
        self.coords
            .chunks_exact(3)
            .flat_map(|p| [p[0], p[1]])
            .collect()
    }

    pub fn is_planar(&self) -> bool {
        self.coords.chunks_exact(3).all(|p| p[2] == 0.0)
    }

    pub fn centroid(&self) -> [f64; 3] {
        let n = self.n_ions().max(1) as f64;
        let mut c = [0.0; 3];
        for p in self.coords.chunks_exact(3) {
            for k in 0..3 {
                c[k] += p[k];
            }
        }
        c.map(|v| v / n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBreakdown {
    pub coulomb: f64,
    pub dc: f64,
    pub optical: f64,
    pub total: f64,
}

/// Value, gradient and Hessian of the beam envelope `(w0/w(z))^2 exp(-2 rho^2 / w(z)^2)`.
struct Envelope {
    value: f64,
    grad: [f64; 3],
    hess: [[f64; 3]; 3],
}

/// Precomputed constants of one trap + species combination.
#[derive(Debug, Clone, Copy)]
pub struct PotentialModel {
    coulomb: f64,
    mass: f64,
    wx2: f64,
    wy2: f64,
    wz_dc2: f64,
    depth: f64,
    k: f64,
    waist: f64,
    rayleigh: f64,
    uniform: bool,
    variant: LatticeVariant,
}

impl PotentialModel {
    pub fn new(trap: &TrapConfig, species: &IonSpecies) -> Self {
        let opt = &trap.optical;
        PotentialModel {
            coulomb: coulomb_constant(),
            mass: species.mass,
            wx2: trap.omega_x_dc.powi(2),
            wy2: trap.omega_y_dc.powi(2),
            wz_dc2: trap.omega_z_dc_sq(),
            depth: opt.depth,
            k: opt.wavenumber(),
            waist: opt.waist,
            rayleigh: opt.rayleigh_range(),
            uniform: opt.is_uniform(),
            variant: opt.lattice_variant,
        }
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    fn envelope(&self, x: f64, y: f64, z: f64) -> Envelope {
        if self.uniform {
            return Envelope {
                value: 1.0,
                grad: [0.0; 3],
                hess: [[0.0; 3]; 3],
            };
        }
        let a = self.waist * self.waist;
        let zr2 = self.rayleigh * self.rayleigh;
        let q = 1.0 / (a * (1.0 + z * z / zr2));
        let rho2 = x * x + y * y;
        let e = (-2.0 * rho2 * q).exp();
        let value = a * q * e;

        let gx = -4.0 * a * q * q * x * e;
        let gy = -4.0 * a * q * q * y * e;
        let gxx = a * q * q * e * (-4.0 + 16.0 * q * x * x);
        let gyy = a * q * q * e * (-4.0 + 16.0 * q * y * y);
        let gxy = 16.0 * a * q * q * q * x * y * e;

        // z enters only through q = 1/w(z)^2
        let g_q = a * e * (1.0 - 2.0 * rho2 * q);
        let g_qq = -4.0 * a * rho2 * e * (1.0 - rho2 * q);
        let gx_q = -8.0 * a * x * q * e * (1.0 - rho2 * q);
        let gy_q = -8.0 * a * y * q * e * (1.0 - rho2 * q);
        let dq = -2.0 * a * z * q * q / zr2;
        let ddq = -2.0 * a * q * q / zr2 + 8.0 * a * a * z * z * q * q * q / (zr2 * zr2);

        let gz = g_q * dq;
        let gzz = g_qq * dq * dq + g_q * ddq;
        let gxz = gx_q * dq;
        let gyz = gy_q * dq;

        Envelope {
            value,
            grad: [gx, gy, gz],
            hess: [[gxx, gxy, gxz], [gxy, gyy, gyz], [gxz, gyz, gzz]],
        }
    }

    /// Standing-wave factor and its first two z derivatives.
    fn lattice(&self, z: f64) -> (f64, f64, f64) {
        let s = (self.k * z).sin();
        let value = match self.variant {
            LatticeVariant::NodeSin2 => s * s,
            LatticeVariant::AntinodeCos2 => s * s - 1.0,
        };
        let two_kz = 2.0 * self.k * z;
        (value, self.k * two_kz.sin(), 2.0 * self.k * self.k * two_kz.cos())
    }

    fn check_pairs(&self, c: &[f64]) -> Result<()> {
        let n = c.len() / 3;
        for i in 0..n {
            for j in (i + 1)..n {
                let d = dist3(c, i, j);
                if !(d > MIN_PAIR_DISTANCE) {
                    return Err(Error::SingularConfiguration { i, j, distance: d });
                }
            }
        }
        Ok(())
    }

    pub fn total_energy(&self, pos: &CrystalPositions) -> Result<EnergyBreakdown> {
        let c = pos.coords();
        let n = pos.n_ions();
        self.check_pairs(c)?;
        let mut coulomb = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                coulomb += self.coulomb / dist3(c, i, j);
            }
        }
        let mut dc = 0.0;
        let mut optical = 0.0;
        for p in c.chunks_exact(3) {
            dc += 0.5 * self.mass * (self.wx2 * p[0] * p[0] + self.wy2 * p[1] * p[1] - self.wz_dc2 * p[2] * p[2]);
            if self.depth != 0.0 {
                let env = self.envelope(p[0], p[1], p[2]);
                optical += self.depth * env.value * self.lattice(p[2]).0;
            }
        }
        Ok(EnergyBreakdown {
            coulomb,
            dc,
            optical,
            total: coulomb + dc + optical,
        })
    }

    pub fn gradient(&self, pos: &CrystalPositions) -> Result<Vec<f64>> {
        let c = pos.coords();
        let n = pos.n_ions();
        self.check_pairs(c)?;
        let mut g = vec![0.0; 3 * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let r = [c[3 * i] - c[3 * j], c[3 * i + 1] - c[3 * j + 1], c[3 * i + 2] - c[3 * j + 2]];
                let d = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
                let f = self.coulomb / (d * d * d);
                for k in 0..3 {
                    g[3 * i + k] -= f * r[k];
                    g[3 * j + k] += f * r[k];
                }
            }
        }
        for (i, p) in c.chunks_exact(3).enumerate() {
            g[3 * i] += self.mass * self.wx2 * p[0];
            g[3 * i + 1] += self.mass * self.wy2 * p[1];
            g[3 * i + 2] -= self.mass * self.wz_dc2 * p[2];
            if self.depth != 0.0 {
                let env = self.envelope(p[0], p[1], p[2]);
                let (s, ds, _) = self.lattice(p[2]);
                g[3 * i] += self.depth * env.grad[0] * s;
                g[3 * i + 1] += self.depth * env.grad[1] * s;
                g[3 * i + 2] += self.depth * (env.grad[2] * s + env.value * ds);
            }
        }
        Ok(g)
    }

    pub fn hessian(&self, pos: &CrystalPositions) -> Result<DMatrix<f64>> {
        let c = pos.coords();
        let n = pos.n_ions();
        self.check_pairs(c)?;
        let mut h = DMatrix::zeros(3 * n, 3 * n);
        for i in 0..n {
            for j in (i + 1)..n {
                let r = [c[3 * i] - c[3 * j], c[3 * i + 1] - c[3 * j + 1], c[3 * i + 2] - c[3 * j + 2]];
                let d2 = r[0] * r[0] + r[1] * r[1] + r[2] * r[2];
                let d = d2.sqrt();
                let inv3 = self.coulomb / (d2 * d);
                let inv5 = 3.0 * inv3 / d2;
                for a in 0..3 {
                    for b in 0..3 {
                        let block = inv5 * (r[a] * r[b]) - if a == b { inv3 } else { 0.0 };
                        h[(3 * i + a, 3 * i + b)] += block;
                        h[(3 * j + a, 3 * j + b)] += block;
                        h[(3 * i + a, 3 * j + b)] -= block;
                        h[(3 * j + a, 3 * i + b)] -= block;
                    }
                }
            }
        }
        for (i, p) in c.chunks_exact(3).enumerate() {
            h[(3 * i, 3 * i)] += self.mass * self.wx2;
            h[(3 * i + 1, 3 * i + 1)] += self.mass * self.wy2;
            h[(3 * i + 2, 3 * i + 2)] -= self.mass * self.wz_dc2;
            if self.depth != 0.0 {
                let env = self.envelope(p[0], p[1], p[2]);
                let (s, ds, dds) = self.lattice(p[2]);
                let u = self.depth;
                for a in 0..2 {
                    for b in 0..2 {
                        h[(3 * i + a, 3 * i + b)] += u * env.hess[a][b] * s;
                    }
                    let xz = u * (env.hess[a][2] * s + env.grad[a] * ds);
                    h[(3 * i + a, 3 * i + 2)] += xz;
                    h[(3 * i + 2, 3 * i + a)] += xz;
                }
                h[(3 * i + 2, 3 * i + 2)] +=
                    u * (env.hess[2][2] * s + 2.0 * env.grad[2] * ds + env.value * dds);
            }
        }
        Ok(h)
    }

    /// Energy of a planar configuration `(x1, y1, x2, y2, ...)`.
    pub fn planar_energy(&self, xy: &[f64]) -> Result<f64> {
        let n = xy.len() / 2;
        let mut e = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                let d = dist2(xy, i, j);
                if !(d > MIN_PAIR_DISTANCE) {
                    return Err(Error::SingularConfiguration { i, j, distance: d });
                }
                e += self.coulomb / d;
            }
        }
        for p in xy.chunks_exact(2) {
            e += 0.5 * self.mass * (self.wx2 * p[0] * p[0] + self.wy2 * p[1] * p[1]);
        }
        e += self.planar_optical(xy);
        Ok(e)
    }

    fn planar_optical(&self, xy: &[f64]) -> f64 {
        match self.variant {
            LatticeVariant::NodeSin2 => 0.0,
            LatticeVariant::AntinodeCos2 if self.depth == 0.0 => 0.0,
            LatticeVariant::AntinodeCos2 => xy
                .chunks_exact(2)
                .map(|p| -self.depth * self.envelope(p[0], p[1], 0.0).value)
                .sum(),
        }
    }

    /// In-plane gradient of a planar configuration.
    pub fn planar_gradient(&self, xy: &[f64]) -> Result<Vec<f64>> {
        let full = self.gradient(&CrystalPositions::from_planar(xy))?;
        Ok(full.chunks_exact(3).flat_map(|g| [g[0], g[1]]).collect())
    }

    /// In-plane (2N x 2N) Hessian block of a planar configuration.
    pub fn planar_hessian(&self, xy: &[f64]) -> Result<DMatrix<f64>> {
        let full = self.hessian(&CrystalPositions::from_planar(xy))?;
        let n = xy.len() / 2;
        Ok(DMatrix::from_fn(2 * n, 2 * n, |r, c| full[(3 * (r / 2) + r % 2, 3 * (c / 2) + c % 2)]))
    }
}

fn dist3(c: &[f64], i: usize, j: usize) -> f64 {
    let dx = c[3 * i] - c[3 * j];
    let dy = c[3 * i + 1] - c[3 * j + 1];
    let dz = c[3 * i + 2] - c[3 * j + 2];
    (dx * dx + dy * dy + dz * dz).sqrt()
}

fn dist2(c: &[f64], i: usize, j: usize) -> f64 {
    let dx = c[2 * i] - c[2 * j];
    let dy = c[2 * i + 1] - c[2 * j + 1];
    (dx * dx + dy * dy).sqrt()
}

pub fn total_energy(pos: &CrystalPositions, trap: &TrapConfig, species: &IonSpecies) -> Result<EnergyBreakdown> {
    PotentialModel::new(trap, species).total_energy(pos)
}

pub fn gradient(pos: &CrystalPositions, trap: &TrapConfig, species: &IonSpecies) -> Result<Vec<f64>> {
    PotentialModel::new(trap, species).gradient(pos)
}

pub fn hessian(pos: &CrystalPositions, trap: &TrapConfig, species: &IonSpecies) -> Result<DMatrix<f64>> {
    PotentialModel::new(trap, species).hessian(pos)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::constants::BOLTZMANN;
    use crate::physics::{two_ion_spacing, OpticalTrapConfig};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn yb() -> IonSpecies {
        IonSpecies::ytterbium_171()
    }

    fn trap(variant: LatticeVariant, waist: f64) -> TrapConfig {
        let opt = OpticalTrapConfig::new(1064e-9, waist, 25e-3 * BOLTZMANN)
            .unwrap()
            .with_variant(variant);
        TrapConfig::new(2.0 * PI * 0.5e6, 0.1, opt).unwrap()
    }

    /// Random cloud with coordinates of a few microns; z kept within a
    /// fraction of a wavelength so the lattice term is exercised.
    fn cloud(n: usize, seed: u64) -> CrystalPositions {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ions: Vec<[f64; 3]> = (0..n)
            .map(|_| {
                [
                    rng.random_range(-8e-6..8e-6),
                    rng.random_range(-8e-6..8e-6),
                    rng.random_range(-0.2e-6..0.2e-6),
                ]
            })
            .collect();
        CrystalPositions::from_xyz(&ions)
    }

    /// Term-by-term summation written out independently of `PotentialModel`.
    fn brute_force_energy(pos: &CrystalPositions, t: &TrapConfig, m: f64) -> f64 {
        let kc = 1.602176634e-19f64.powi(2) / (4.0 * PI * 8.8541878128e-12);
        let n = pos.n_ions();
        let mut e = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i < j {
                    let (a, b) = (pos.ion(i), pos.ion(j));
                    e += kc / ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt();
                }
            }
        }
        let wz2 = t.omega_x_dc.powi(2) + t.omega_y_dc.powi(2);
        let o = &t.optical;
        let zr = PI * o.waist * o.waist / o.wavelength;
        for i in 0..n {
            let [x, y, z] = pos.ion(i);
            e += 0.5 * m * ((t.omega_x_dc * x).powi(2) + (t.omega_y_dc * y).powi(2) - wz2 * z * z);
            let w = o.waist * (1.0 + (z / zr).powi(2)).sqrt();
            let env = (o.waist / w).powi(2) * (-2.0 * (x * x + y * y) / (w * w)).exp();
            let kz = 2.0 * PI * z / o.wavelength;
            e += match o.lattice_variant {
                LatticeVariant::NodeSin2 => o.depth * env * kz.sin().powi(2),
                LatticeVariant::AntinodeCos2 => -o.depth * env * kz.cos().powi(2),
            };
        }
        e
    }

    #[test]
    fn single_ion_at_origin_is_zero() {
        let t = trap(LatticeVariant::NodeSin2, 20e-6);
        let e = total_energy(&CrystalPositions::from_xyz(&[[0.0; 3]]), &t, &yb()).unwrap();
        assert_eq!((e.coulomb, e.dc, e.optical, e.total), (0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn two_ion_equilibrium() {
        let t = trap(LatticeVariant::NodeSin2, 20e-6);
        let t = TrapConfig::new(t.omega_x_dc, 0.0, t.optical).unwrap();
        let l = two_ion_spacing(&yb(), t.omega_x_dc);
        assert!((l * 1e6 - 5.48).abs() < 0.01, "{l}");
        let pos = CrystalPositions::from_xyz(&[[-l / 2.0, 0.0, 0.0], [l / 2.0, 0.0, 0.0]]);
        let g = gradient(&pos, &t, &yb()).unwrap();
        let scale = coulomb_constant() / (l * l);
        assert!(g.iter().all(|v| v.abs() < 1e-9 * scale), "{g:?}");
    }

    #[test]
    fn energy_matches_brute_force() {
        for variant in [LatticeVariant::NodeSin2, LatticeVariant::AntinodeCos2] {
            let t = trap(variant, 15e-6);
            let pos = cloud(5, 11);
            let e = total_energy(&pos, &t, &yb()).unwrap();
            let oracle = brute_force_energy(&pos, &t, yb().mass);
            assert!((e.total / oracle - 1.0).abs() < 1e-12, "{variant:?}");
            assert!((e.total - (e.coulomb + e.dc + e.optical)).abs() <= 1e-12 * e.total.abs());
        }
    }

    #[test]
    fn coincident_ions_fail() {
        let t = trap(LatticeVariant::NodeSin2, 20e-6);
        let pos = CrystalPositions::from_xyz(&[[1e-6, 0.0, 0.0], [1e-6, 0.0, 0.0]]);
        assert!(matches!(
            total_energy(&pos, &t, &yb()),
            Err(Error::SingularConfiguration { i: 0, j: 1, .. })
        ));
        assert!(gradient(&pos, &t, &yb()).is_err());
        assert!(hessian(&pos, &t, &yb()).is_err());
    }

    #[test]
    fn gradient_matches_central_differences() {
        for (variant, waist) in [
            (LatticeVariant::NodeSin2, 15e-6),
            (LatticeVariant::AntinodeCos2, 15e-6),
            (LatticeVariant::NodeSin2, f64::INFINITY),
        ] {
            let t = trap(variant, waist);
            let model = PotentialModel::new(&t, &yb());
            let pos = cloud(6, 3);
            let g = model.gradient(&pos).unwrap();
            let h = 1e-10;
            let scale = g.iter().map(|v| v.abs()).fold(0.0, f64::max);
            for k in 0..g.len() {
                let mut p = pos.coords().to_vec();
                p[k] += h;
                let ep = model.total_energy(&CrystalPositions::new(p.clone()).unwrap()).unwrap().total;
                p[k] -= 2.0 * h;
                let em = model.total_energy(&CrystalPositions::new(p).unwrap()).unwrap().total;
                let fd = (ep - em) / (2.0 * h);
                assert!((fd - g[k]).abs() < 1e-6 * scale, "{variant:?} k={k}: {fd} vs {}", g[k]);
            }
        }
    }

    #[test]
    fn hessian_matches_finite_differences_and_is_symmetric() {
        for variant in [LatticeVariant::NodeSin2, LatticeVariant::AntinodeCos2] {
            let t = trap(variant, 15e-6);
            let model = PotentialModel::new(&t, &yb());
            let pos = cloud(4, 5);
            let hm = model.hessian(&pos).unwrap();
            assert_eq!(hm, hm.transpose());
            let h = 1e-11;
            let scale = hm.iter().map(|v| v.abs()).fold(0.0, f64::max);
            for k in 0..hm.ncols() {
                let mut p = pos.coords().to_vec();
                p[k] += h;
                let gp = model.gradient(&CrystalPositions::new(p.clone()).unwrap()).unwrap();
                p[k] -= 2.0 * h;
                let gm = model.gradient(&CrystalPositions::new(p).unwrap()).unwrap();
                for r in 0..hm.nrows() {
                    let fd = (gp[r] - gm[r]) / (2.0 * h);
                    assert!((fd - hm[(r, k)]).abs() < 1e-5 * scale, "{variant:?} ({r},{k})");
                }
            }
        }
    }

    #[test]
    fn planar_hessian_decouples_z() {
        for variant in [LatticeVariant::NodeSin2, LatticeVariant::AntinodeCos2] {
            let t = trap(variant, 12e-6);
            let mut pos = cloud(7, 9).coords().to_vec();
            for p in pos.chunks_exact_mut(3) {
                p[2] = 0.0;
            }
            let h = hessian(&CrystalPositions::new(pos).unwrap(), &t, &yb()).unwrap();
            for i in 0..7 {
                for j in 0..7 {
                    assert_eq!(h[(3 * i + 2, 3 * j)], 0.0);
                    assert_eq!(h[(3 * i + 2, 3 * j + 1)], 0.0);
                    assert_eq!(h[(3 * i, 3 * j + 2)], 0.0);
                }
            }
        }
    }

    #[test]
    fn coulomb_gradient_sums_to_zero_and_is_translation_invariant() {
        let mut t = trap(LatticeVariant::NodeSin2, 15e-6);
        t.omega_x_dc = 0.0;
        t.omega_y_dc = 0.0;
        t.optical.depth = 0.0;
        let pos = cloud(8, 21);
        let g = gradient(&pos, &t, &yb()).unwrap();
        for k in 0..3 {
            let s: f64 = g.iter().skip(k).step_by(3).sum();
            let mag: f64 = g.iter().skip(k).step_by(3).map(|v| v.abs()).sum();
            assert!(s.abs() < 1e-13 * mag);
        }
        let shifted: Vec<f64> = pos.coords().iter().enumerate().map(|(i, v)| v + [1e-6, -2e-6, 0.3e-6][i % 3]).collect();
        let g2 = gradient(&CrystalPositions::new(shifted).unwrap(), &t, &yb()).unwrap();
        for (a, b) in g.iter().zip(&g2) {
            assert!((a - b).abs() < 1e-9 * a.abs().max(1e-20));
        }
    }

    #[test]
    fn node_optical_term_vanishes_in_plane() {
        let t = trap(LatticeVariant::NodeSin2, 10e-6);
        let mut pos = cloud(5, 2).coords().to_vec();
        for p in pos.chunks_exact_mut(3) {
            p[2] = 0.0;
        }
        let e = total_energy(&CrystalPositions::new(pos).unwrap(), &t, &yb()).unwrap();
        assert_eq!(e.optical, 0.0);
    }

    #[test]
    fn planar_helpers_agree_with_full_model() {
        let t = trap(LatticeVariant::AntinodeCos2, 12e-6);
        let model = PotentialModel::new(&t, &yb());
        let xy = cloud(5, 4).planar();
        let full = model.total_energy(&CrystalPositions::from_planar(&xy)).unwrap().total;
        assert!((model.planar_energy(&xy).unwrap() / full - 1.0).abs() < 1e-13);
    }

    #[test]
    fn swapping_ions_keeps_energy() {
        let t = trap(LatticeVariant::NodeSin2, 15e-6);
        let pos = cloud(5, 8);
        let mut c = pos.coords().to_vec();
        for k in 0..3 {
            c.swap(k, 9 + k);
        }
        let a = total_energy(&pos, &t, &yb()).unwrap().total;
        let b = total_energy(&CrystalPositions::new(c).unwrap(), &t, &yb()).unwrap().total;
        assert!((a - b).abs() <= 1e-14 * a.abs());
    }
}
