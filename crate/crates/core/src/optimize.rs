//! Unconstrained minimization: BFGS with backtracking line search, plus a
//! Newton polish that works in the span of the well-curved eigenvectors.
//!
//! Callers are expected to pass dimensionless coordinates so that tolerances
//! are meaningful.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::Result;

#[derive(Debug, Clone, Copy)]
pub struct MinimizeOptions {
    pub max_iterations: usize,
    pub gradient_tolerance: f64,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        MinimizeOptions {
            max_iterations: 5000,
            gradient_tolerance: 1e-8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub gradient_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// BFGS on `f`, which returns value and gradient. Points where `f` fails are
/// treated as infinitely high and the line search backs off from them.
pub fn bfgs<F>(mut f: F, x0: &[f64], opts: &MinimizeOptions) -> Result<Minimum>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let (mut fx, mut g) = f(&x)?;
    let mut hinv = DMatrix::<f64>::identity(n, n);
    let mut iterations = 0;

    while iterations < opts.max_iterations {
        if norm(&g) < opts.gradient_tolerance {
            break;
        }
        iterations += 1;
        let gv = DVector::from_column_slice(&g);
        let mut p: Vec<f64> = (-(&hinv * &gv)).iter().copied().collect();
        let mut slope = dot(&p, &g);
        if !(slope < 0.0) {
            hinv.fill_with_identity();
            p = g.iter().map(|v| -v).collect();
            slope = dot(&p, &g);
        }
        // cap the step so a poor inverse-Hessian estimate cannot fling ions apart
        let pn = norm(&p);
        let max_step = 1.0 + norm(&x) * 0.1;
        if pn > max_step {
            let s = max_step / pn;
            p.iter_mut().for_each(|v| *v *= s);
            slope *= s;
        }

        let mut t = 1.0;
        let mut accepted = None;
        let gnorm = norm(&g);
        for _ in 0..60 {
            let xt: Vec<f64> = x.iter().zip(&p).map(|(a, b)| a + t * b).collect();
            if let Ok((ft, gt)) = f(&xt) {
                // near the minimum the energy change drops below rounding;
                // a smaller gradient at an energy equal to working precision is progress too
                let flat = (ft - fx).abs() <= 1e-13 * fx.abs().max(1.0) && norm(&gt) < gnorm;
                if ft.is_finite() && (ft <= fx + 1e-4 * t * slope || flat) {
                    accepted = Some((xt, ft, gt));
                    break;
                }
            }
            t *= 0.5;
        }
        let Some((xn, fnew, gn)) = accepted else {
            if hinv == DMatrix::identity(n, n) {
                break;
            }
            hinv.fill_with_identity();
            continue;
        };

        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-14 * norm(&s) * norm(&y) {
            if iterations == 1 {
                hinv *= sy / dot(&y, &y);
            }
            let sv = DVector::from_vec(s);
            let yv = DVector::from_vec(y);
            let hy = &hinv * &yv;
            let yhy = yv.dot(&hy);
            let rho = 1.0 / sy;
            // H+ = H + (sy + yHy) ss^T / sy^2 - (Hy s^T + s y^T H) / sy
            hinv += (&sv * sv.transpose()) * ((sy + yhy) * rho * rho);
            hinv -= (&hy * sv.transpose() + &sv * hy.transpose()) * rho;
        }
        x = xn;
        fx = fnew;
        g = gn;
    }

    let gradient_norm = norm(&g);
    Ok(Minimum {
        x,
        value: fx,
        gradient_norm,
        iterations,
        converged: gradient_norm < opts.gradient_tolerance,
    })
}

/// Newton iterations using the analytic Hessian. Directions whose curvature is
/// below `relative_cutoff` times the largest eigenvalue (for example the
/// rotational zero mode of a symmetric trap) are left untouched.
pub fn newton_polish<F, H>(
    mut f: F,
    mut hess: H,
    x0: &[f64],
    max_iterations: usize,
    relative_cutoff: f64,
) -> Result<(Vec<f64>, f64, Vec<f64>)>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
    H: FnMut(&[f64]) -> Result<DMatrix<f64>>,
{
    let mut x = x0.to_vec();
    let (mut fx, mut g) = f(&x)?;
    for _ in 0..max_iterations {
        let eig = SymmetricEigen::new(hess(&x)?);
        let lmax = eig.eigenvalues.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let gv = DVector::from_column_slice(&g);
        let mut step = DVector::zeros(x.len());
        for (k, &lam) in eig.eigenvalues.iter().enumerate() {
            if lam.abs() > relative_cutoff * lmax {
                let v = eig.eigenvectors.column(k);
                step -= v * (v.dot(&gv) / lam);
            }
        }
        let xn: Vec<f64> = x.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
        let Ok((fnew, gn)) = f(&xn) else { break };
        if norm(&gn) >= norm(&g) {
            break;
        }
        x = xn;
        fx = fnew;
        g = gn;
    }
    Ok((x, fx, g))
}
