use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::geometry::{shoelace, Domain, TriangleMesh};
use crate::mapping::DiscreteMap;
use crate::sparse::DirichletSolver;
use crate::{Complex64, Error, Point, Result};

/// Boundary positions spread into a full-length vector (interior entries
/// are left at the reference position).
pub(crate) fn spread(mesh: &TriangleMesh, boundary: &[(usize, Point)]) -> Vec<Point> {
    let mut values = mesh.vertices().to_vec();
    for &(v, w) in boundary {
        values[v] = w;
    }
    values
}

/// Discrete harmonic (cotangent-weight) extension of boundary values.
pub fn harmonic_with(mesh: Arc<TriangleMesh>, boundary: &[(usize, Point)]) -> Result<DiscreteMap> {
    let fixed = mesh.is_boundary_flags();
    let mut values = spread(&mesh, boundary);
    if fixed.iter().all(|&f| f) {
        return DiscreteMap::new(mesh, values);
    }
    let solver = DirichletSolver::new(&mesh, &fixed)?;
    let x = solver.harmonic(&values);
    for (k, &v) in solver.free_vertices().iter().enumerate() {
        values[v] = x[k];
    }
    DiscreteMap::new(mesh, values)
}

fn polygon_centroid(poly: &[Point]) -> Point {
    let n = poly.len();
    let mut c = Complex64::new(0.0, 0.0);
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        c += (a + b) * (a.re * b.im - b.re * a.im);
    }
    c / (6.0 * shoelace(poly))
}

/// Radial ("star-cone") extension: every ray from the source centroid is
/// mapped linearly onto the segment from the target centroid to the image
/// of the ray's boundary point. Injective when the source is star-shaped
/// about its centroid, the target about its own, and the mesh resolves the
/// boundary data.
pub fn star_cone(mesh: Arc<TriangleMesh>, boundary: &[(usize, Point)], target: &Domain) -> Result<DiscreteMap> {
    let poly = mesh.boundary_polygon();
    let images: Vec<Point> = {
        let mut by_vertex = spread(&mesh, boundary);
        mesh.boundary_loop().iter().map(|&v| std::mem::take(&mut by_vertex[v])).collect()
    };
    let cs = polygon_centroid(&poly);
    let ct = target.centroid();
    if !mesh_contains(&poly, cs) || !target.contains_strict(ct) {
        return Err(Error::NoInjectiveInit(0));
    }
    let flags = mesh.is_boundary_flags();
    let mut values = spread(&mesh, boundary);
    let n = poly.len();
    for (v, &z) in mesh.vertices().iter().enumerate() {
        if flags[v] {
            continue;
        }
        let dir = z - cs;
        if dir.norm() == 0.0 {
            values[v] = ct;
            continue;
        }
        let mut hit = None;
        for i in 0..n {
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            // Solve cs + r·dir = a + t(b − a), r > 0, t ∈ [0, 1].
            let e = b - a;
            let den = dir.re * (-e.im) - dir.im * (-e.re);
            if den == 0.0 {
                continue;
            }
            let rhs = a - cs;
            let r = (rhs.re * (-e.im) - rhs.im * (-e.re)) / den;
            let t = (dir.re * rhs.im - dir.im * rhs.re) / den;
            if r > 0.0 && (-1e-12..=1.0 + 1e-12).contains(&t) && hit.is_none_or(|(rr, _, _)| r < rr) {
                hit = Some((r, i, t.clamp(0.0, 1.0)));
            }
        }
        let Some((r, i, t)) = hit else {
            return Err(Error::NoInjectiveInit(0));
        };
        let b = images[i] + (images[(i + 1) % n] - images[i]) * t;
        values[v] = ct + (b - ct) * (1.0 / r);
    }
    DiscreteMap::new(mesh, values)
}

fn mesh_contains(poly: &[Point], p: Point) -> bool {
    crate::geometry::winding_number(poly, p) != 0
}

/// Smooth displacement vanishing on the boundary: a sum of three
/// compactly supported bumps `a (1 − |z − c|²/r²)⁴₊`.
pub(crate) fn random_bumps(mesh: &TriangleMesh, rng: &mut ChaCha8Rng, amplitude: f64) -> Vec<Complex64> {
    let interior = mesh.interior_vertices();
    let diam = mesh.diameter_estimate();
    let flags = mesh.is_boundary_flags();
    let mut bumps = Vec::new();
    for _ in 0..3 {
        let c = if interior.is_empty() { mesh.vertices()[0] } else { mesh.vertices()[interior[rng.gen_range(0..interior.len())]] };
        let r = diam * rng.gen_range(0.3..0.6);
        let a = Complex64::from_polar(amplitude * rng.gen_range(0.5..1.0), rng.gen_range(0.0..std::f64::consts::TAU));
        bumps.push((c, r, a));
    }
    mesh.vertices()
        .iter()
        .enumerate()
        .map(|(v, &z)| {
            if flags[v] {
                return Complex64::new(0.0, 0.0);
            }
            bumps
                .iter()
                .map(|&(c, r, a)| {
                    let u = 1.0 - (z - c).norm_sqr() / (r * r);
                    if u > 0.0 {
                        a * u.powi(4)
                    } else {
                        Complex64::new(0.0, 0.0)
                    }
                })
                .sum()
        })
        .collect()
}

/// `base + t·bumps`, with `t` halved from 1 until the map is injective;
/// new bumps are drawn up to `resamples` times.
pub(crate) fn perturbed(base: &DiscreteMap, rng: &mut ChaCha8Rng, amplitude: f64, resamples: usize) -> Result<DiscreteMap> {
    for _ in 0..resamples.max(1) {
        let disp = random_bumps(base.reference(), rng, amplitude);
        let mut t = 1.0;
        for _ in 0..40 {
            let targets = base.targets().iter().zip(&disp).map(|(b, d)| b + d * t).collect();
            let cand = DiscreteMap::new(base.reference().clone(), targets)?;
            if cand.min_jacobian() > 0.0 {
                return Ok(cand);
            }
            t *= 0.5;
        }
    }
    Err(Error::NoInjectiveInit(resamples))
}
