//! Closed-form vertical trajectories of `φ(z) = z`.

use serde::Serialize;

use crate::geometry::segment_distance;
use crate::{Complex64, Point};

fn zeta(z: Point) -> Complex64 {
    z.powf(1.5) * (2.0 / 3.0)
}

/// The vertical trajectory of `φ = z` through `z0` (with `Re z0 > 0`),
/// parametrized by the imaginary part of the natural parameter:
/// `z(t) = (3/2 (ζ₀ + it))^{2/3}`, `ζ₀ = (2/3) z0^{3/2}`.
pub fn z_vertical_trajectory(z0: Point) -> impl Fn(f64) -> Point {
    let z0z = zeta(z0);
    move |t| ((z0z + Complex64::new(0.0, t)) * 1.5).powf(2.0 / 3.0)
}

/// Distances between a polyline and the analytic trajectory through `z0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CurveDistance {
    /// Largest distance from a polyline vertex to the analytic curve.
    pub vertex_max: f64,
    /// Symmetric Hausdorff distance (includes chord sag between vertices).
    pub hausdorff: f64,
}

/// Nearest parameter on the analytic curve to `p`, by Newton's method on
/// the squared distance, started from the natural-parameter estimate.
fn project(z0: Point, p: Point) -> (f64, f64) {
    let z0z = zeta(z0);
    let mut t = (zeta(p) - z0z).im;
    for _ in 0..20 {
        let w = (z0z + Complex64::new(0.0, t)) * 1.5;
        let z = w.powf(2.0 / 3.0);
        let dz = Complex64::new(0.0, 1.0) * w.powf(-1.0 / 3.0);
        let ddz = w.powf(-4.0 / 3.0) * 0.5;
        let g = ((z - p).conj() * dz).re;
        let dg = dz.norm_sqr() + ((z - p).conj() * ddz).re;
        let step = g / dg;
        t -= step;
        if step.abs() < 1e-17 * (1.0 + t.abs()) {
            break;
        }
    }
    let curve = z_vertical_trajectory(z0);
    (t, (curve(t) - p).norm())
}

pub fn hausdorff_to_z_trajectory(points: &[Point], z0: Point) -> CurveDistance {
    let projected: Vec<(f64, f64)> = points.iter().map(|&p| project(z0, p)).collect();
    let vertex_max = projected.iter().map(|&(_, d)| d).fold(0.0, f64::max);
    let curve = z_vertical_trajectory(z0);
    let ts: Vec<f64> = projected.iter().map(|&(t, _)| t).collect();
    let mut sag: f64 = 0.0;
    for k in 0..points.len().saturating_sub(1) {
        let (a, b) = (ts[k], ts[k + 1]);
        for j in 1..8 {
            let t = a + (b - a) * (j as f64 / 8.0);
            let c = curve(t);
            let lo = k.saturating_sub(1);
            let hi = (k + 2).min(points.len() - 1);
            let d = (lo..hi).map(|i| segment_distance(c, points[i], points[i + 1])).fold(f64::INFINITY, f64::min);
            sag = sag.max(d);
        }
    }
    CurveDistance { vertex_max, hausdorff: vertex_max.max(sag) }
}
