use serde::{Deserialize, Serialize};

use super::{Domain, TriangleMesh};
use crate::{Error, Point, Result};

/// One row of a boundary correspondence table: source arclength fraction
/// `s ∈ [0, 1)` and its image `w` on the target boundary.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundarySample {
    pub s: f64,
    pub w: [f64; 2],
}

/// Orientation-preserving homeomorphism between boundary curves, given by
/// samples and interpolated linearly in target arclength.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryMap {
    samples: Vec<BoundarySample>,
}

impl BoundaryMap {
    /// Checks `s` is strictly increasing in `[0, 1)`. Monotonicity of the
    /// images is checked against a target in [`BoundaryMap::boundary_targets`].
    pub fn new(samples: Vec<BoundarySample>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InvalidArgument("boundary map needs at least 2 samples".into()));
        }
        for (i, smp) in samples.iter().enumerate() {
            if !(0.0..1.0).contains(&smp.s) {
                return Err(Error::NotMonotone { index: i, detail: format!("s = {} outside [0, 1)", smp.s) });
            }
            if i > 0 && smp.s <= samples[i - 1].s {
                return Err(Error::NotMonotone {
                    index: i,
                    detail: format!("s = {} does not exceed previous {}", smp.s, samples[i - 1].s),
                });
            }
        }
        Ok(Self { samples })
    }

    /// `n` equally spaced source fractions `k/n` mapped to target arclength
    /// fraction `fraction(s)`.
    pub fn from_fractions(target: &Domain, n: usize, fraction: impl Fn(f64) -> f64) -> Result<Self> {
        let len = target.perimeter();
        let samples = (0..n)
            .map(|k| {
                let s = k as f64 / n as f64;
                let w = target.point_at_arclength(fraction(s) * len);
                BoundarySample { s, w: [w.re, w.im] }
            })
            .collect();
        Self::new(samples)
    }

    /// Samples `f` at the vertices of `source`, with `s` their arclength
    /// fractions. Exact for maps that are affine along each source edge.
    pub fn from_vertex_images(source: &Domain, f: impl Fn(Point) -> Point) -> Result<Self> {
        let len = source.perimeter();
        let mut acc = 0.0;
        let mut samples = Vec::with_capacity(source.edge_count());
        for i in 0..source.edge_count() {
            let (a, b) = source.edge(i);
            let w = f(a);
            samples.push(BoundarySample { s: acc / len, w: [w.re, w.im] });
            acc += (b - a).norm();
        }
        Self::new(samples)
    }

    /// The identity correspondence of `domain` onto itself.
    pub fn identity(domain: &Domain) -> Self {
        Self::from_vertex_images(domain, |z| z).expect("polygon vertices are increasing")
    }

    pub fn samples(&self) -> &[BoundarySample] {
        &self.samples
    }

    /// Positions of the mesh boundary vertices, one per entry of
    /// `mesh.boundary_loop()`, obtained by arclength interpolation between
    /// samples on `target`'s boundary.
    pub fn boundary_targets(&self, mesh: &TriangleMesh, target: &Domain) -> Result<Vec<(usize, Point)>> {
        let len = target.perimeter();
        let tol = 1e-9 * target.diameter().max(1.0);
        let n = self.samples.len();
        let mut t0 = 0.0;
        let mut unwrapped = Vec::with_capacity(n + 1);
        for (i, smp) in self.samples.iter().enumerate() {
            let (t, d) = target.project(Point::new(smp.w[0], smp.w[1]));
            if d > tol {
                return Err(Error::InvalidArgument(format!(
                    "sample {i} lies {d:e} off the target boundary"
                )));
            }
            if i == 0 {
                t0 = t;
                unwrapped.push(0.0);
                continue;
            }
            let u = (t - t0).rem_euclid(len);
            if u <= unwrapped[i - 1] {
                return Err(Error::NotMonotone {
                    index: i,
                    detail: format!("target arclength {u} does not advance past {}", unwrapped[i - 1]),
                });
            }
            unwrapped.push(u);
        }
        unwrapped.push(len);
        let mut s_ext: Vec<f64> = self.samples.iter().map(|x| x.s).collect();
        s_ext.push(self.samples[0].s + 1.0);

        let fractions = mesh.boundary_fractions();
        let mut out = Vec::with_capacity(fractions.len());
        for (k, &v) in mesh.boundary_loop().iter().enumerate() {
            let mut s = fractions[k];
            if s < s_ext[0] {
                s += 1.0;
            }
            let i = match s_ext.iter().rposition(|&si| si <= s) {
                Some(i) if i < n => i,
                _ => n - 1,
            };
            let lam = (s - s_ext[i]) / (s_ext[i + 1] - s_ext[i]);
            let u = unwrapped[i] + lam * (unwrapped[i + 1] - unwrapped[i]);
            out.push((v, target.point_at_arclength(t0 + u)));
        }
        Ok(out)
    }
}

/// Winding number of a closed polygon around `p`.
pub fn winding_number(poly: &[Point], p: Point) -> i64 {
    let mut total = 0.0;
    for i in 0..poly.len() {
        let a = poly[i] - p;
        let b = poly[(i + 1) % poly.len()] - p;
        total += (b / a).arg();
    }
    (total / (2.0 * std::f64::consts::PI)).round() as i64
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::geometry::triangulate;

    #[test]
    fn identity_on_square() {
        let d = Domain::rectangle(1.0, 1.0).unwrap();
        let m = triangulate(&d, 0.25).unwrap();
        let bt = BoundaryMap::identity(&d).boundary_targets(&m, &d).unwrap();
        for (v, w) in bt {
            assert!((m.vertices()[v] - w).norm() < 1e-15);
        }
    }

    #[test]
    fn rotation_on_disk_polygon() {
        let d = Domain::disk_polygon(64, 1.0).unwrap();
        let m = triangulate(&d, 0.2).unwrap();
        let bmap = BoundaryMap::from_vertex_images(&d, |z| z * Point::new(0.0, 1.0)).unwrap();
        let poly: Vec<Point> = bmap.boundary_targets(&m, &d).unwrap().into_iter().map(|x| x.1).collect();
        for (k, &v) in m.boundary_loop().iter().enumerate() {
            let z = m.vertices()[v];
            let expected = Point::from_polar(z.norm(), z.arg() + PI / 2.0);
            assert!((poly[k] - expected).norm() < 1e-12);
        }
        assert_eq!(winding_number(&poly, Point::new(0.1, -0.2)), 1);
    }

    #[test]
    fn swapped_samples_rejected() {
        let d = Domain::rectangle(1.0, 1.0).unwrap();
        let m = triangulate(&d, 0.5).unwrap();
        let mut samples = BoundaryMap::identity(&d).samples().to_vec();
        let (a, b) = (samples[1].w, samples[2].w);
        samples[1].w = b;
        samples[2].w = a;
        let err = BoundaryMap::new(samples).unwrap().boundary_targets(&m, &d).unwrap_err();
        assert!(err.to_string().contains("monotonicity violated"));
        assert!(matches!(err, Error::NotMonotone { index: 2, .. }));
    }

    #[test]
    fn decreasing_s_rejected() {
        let s = vec![
            BoundarySample { s: 0.5, w: [0., 0.] },
            BoundarySample { s: 0.2, w: [1., 0.] },
        ];
        assert!(matches!(BoundaryMap::new(s), Err(Error::NotMonotone { index: 1, .. })));
    }
}
