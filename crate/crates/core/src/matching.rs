//! Comparing planar point sets up to rotation, reflection and relabeling.
//!
//! Configurations are flat `(x1, y1, x2, y2, ...)` slices.

use pathfinding::kuhn_munkres::kuhn_munkres_min;
use pathfinding::matrix::Matrix;

/// Planar isometry about the origin: optional reflection `y -> -y`, then a
/// rotation by `angle`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanarTransform {
    pub reflect: bool,
    pub angle: f64,
}

impl PlanarTransform {
    pub const IDENTITY: PlanarTransform = PlanarTransform {
        reflect: false,
        angle: 0.0,
    };

    pub fn apply(&self, xy: &[f64]) -> Vec<f64> {
        let (s, c) = self.angle.sin_cos();
        xy.chunks_exact(2)
            .flat_map(|p| {
                let (x, y) = (p[0], if self.reflect { -p[1] } else { p[1] });
                [c * x - s * y, s * x + c * y]
            })
            .collect()
    }
}

fn centered(xy: &[f64]) -> Vec<f64> {
    let n = (xy.len() / 2).max(1) as f64;
    let cx = xy.iter().step_by(2).sum::<f64>() / n;
    let cy = xy.iter().skip(1).step_by(2).sum::<f64>() / n;
    xy.chunks_exact(2).flat_map(|p| [p[0] - cx, p[1] - cy]).collect()
}

fn point(xy: &[f64], i: usize) -> (f64, f64) {
    (xy[2 * i], xy[2 * i + 1])
}

/// Greedy nearest-neighbour pairing; true when every point of `a` finds an
/// unused partner in `b` within `tol`.
fn greedy_match(a: &[f64], b: &[f64], tol: f64) -> bool {
    let n = a.len() / 2;
    let mut used = vec![false; n];
    for i in 0..n {
        let (ax, ay) = point(a, i);
        let mut best = None;
        let mut best_d = f64::INFINITY;
        for j in (0..n).filter(|&j| !used[j]) {
            let (bx, by) = point(b, j);
            let d = (ax - bx).hypot(ay - by);
            if d < best_d {
                best_d = d;
                best = Some(j);
            }
        }
        match best {
            Some(j) if best_d <= tol => used[j] = true,
            _ => return false,
        }
    }
    true
}

/// True if `b` coincides with `a` after centering and some rotation,
/// reflection and permutation, each point within `tol`.
pub fn same_shape(a: &[f64], b: &[f64], tol: f64) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let n = a.len() / 2;
    if n <= 1 {
        return true;
    }
    let a = centered(a);
    let b = centered(b);
    let radius = |xy: &[f64], i: usize| point(xy, i).0.hypot(point(xy, i).1);
    let r0 = (0..n).max_by(|&i, &j| radius(&a, i).total_cmp(&radius(&a, j))).unwrap();
    let (ax, ay) = point(&a, r0);
    let ra = ax.hypot(ay);
    if ra <= tol {
        // every point sits at the centroid
        return greedy_match(&a, &b, tol);
    }
    for reflect in [false, true] {
        let bt = PlanarTransform { reflect, angle: 0.0 }.apply(&b);
        for j in 0..n {
            let (bx, by) = point(&bt, j);
            if (bx.hypot(by) - ra).abs() > tol {
                continue;
            }
            let angle = ay.atan2(ax) - by.atan2(bx);
            let rotated = PlanarTransform { reflect: false, angle }.apply(&bt);
            if greedy_match(&a, &rotated, tol) {
                return true;
            }
        }
    }
    false
}

/// Result of aligning one configuration onto another.
#[derive(Debug, Clone)]
pub struct Alignment {
    pub transform: PlanarTransform,
    /// `assignment[i]` is the index in the moved set paired with ion `i` of the reference.
    pub assignment: Vec<usize>,
    /// Moved configuration, transformed and relabeled to match the reference order.
    pub aligned: Vec<f64>,
    /// Euclidean distance between the reference and `aligned`.
    pub distance: f64,
}

fn optimal_assignment(a: &[f64], b: &[f64], scale: f64) -> Vec<usize> {
    let n = a.len() / 2;
    let costs = Matrix::from_fn(n, n, |(i, j)| {
        let (ax, ay) = point(a, i);
        let (bx, by) = point(b, j);
        (((ax - bx).powi(2) + (ay - by).powi(2)) / (scale * scale) * 1e9).round() as i64
    });
    kuhn_munkres_min(&costs).1
}

fn relabel(b: &[f64], assignment: &[usize]) -> Vec<f64> {
    assignment.iter().flat_map(|&j| [b[2 * j], b[2 * j + 1]]).collect()
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Rotation angle that best maps paired points `b` onto `a` (2D Kabsch).
fn kabsch_angle(a: &[f64], b: &[f64]) -> f64 {
    let (mut sin_sum, mut cos_sum) = (0.0, 0.0);
    for (p, q) in a.chunks_exact(2).zip(b.chunks_exact(2)) {
        cos_sum += p[0] * q[0] + p[1] * q[1];
        sin_sum += q[0] * p[1] - q[1] * p[0];
    }
    sin_sum.atan2(cos_sum)
}

/// Align `moved` onto `reference` about the origin, minimizing the Euclidean
/// distance over relabelings and the allowed isometries. With
/// `continuous_rotation` any rotation is allowed, otherwise only the
/// reflections and half-turn that preserve an anisotropic quadrupole.
pub fn align(reference: &[f64], moved: &[f64], continuous_rotation: bool, angle_grid: usize) -> Alignment {
    let n = reference.len() / 2;
    let scale = reference
        .chunks_exact(2)
        .map(|p| p[0].hypot(p[1]))
        .fold(0.0, f64::max)
        .max(1e-30);

    let mut candidates = Vec::new();
    for reflect in [false, true] {
        if continuous_rotation {
            let steps = angle_grid.max(1);
            for k in 0..steps {
                let angle = 2.0 * std::f64::consts::PI * k as f64 / steps as f64;
                candidates.push(PlanarTransform { reflect, angle });
            }
        } else {
            candidates.push(PlanarTransform { reflect, angle: 0.0 });
            candidates.push(PlanarTransform {
                reflect,
                angle: std::f64::consts::PI,
            });
        }
    }

    let mut best: Option<Alignment> = None;
    for mut transform in candidates {
        let mut moved_t = transform.apply(moved);
        let mut assignment = optimal_assignment(reference, &moved_t, scale);
        if continuous_rotation {
            for _ in 0..5 {
                let relabeled = relabel(&moved_t, &assignment);
                let delta = kabsch_angle(reference, &relabeled);
                if delta.abs() < 1e-14 {
                    break;
                }
                transform.angle += delta;
                moved_t = transform.apply(moved);
                let next = optimal_assignment(reference, &moved_t, scale);
                if next == assignment {
                    let relabeled = relabel(&moved_t, &assignment);
                    transform.angle += kabsch_angle(reference, &relabeled);
                    moved_t = transform.apply(moved);
                    break;
                }
                assignment = next;
            }
        }
        let aligned = relabel(&moved_t, &assignment);
        let d = distance(reference, &aligned);
        if best.as_ref().is_none_or(|b| d < b.distance) {
            best = Some(Alignment {
                transform,
                assignment,
                aligned,
                distance: d,
            });
        }
    }
    let mut best = best.expect("at least one candidate transform");
    if n == 0 {
        best.distance = 0.0;
    }
    best
}
