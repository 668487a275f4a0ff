use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::geometry::{orient2d, Locator};
use crate::mapping::DiscreteMap;
use crate::{Complex64, Error, Point, Result};

type ScalarFn = Arc<dyn Fn(Point) -> f64 + Send + Sync>;
type GradFn = Arc<dyn Fn(Point) -> Complex64 + Send + Sync>;

/// How `Φ` is averaged over an image triangle.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Quadrature {
    /// One point: the image centroid.
    #[default]
    Centroid,
    /// Three interior points `(2/3, 1/6, 1/6)`, exact for quadratics.
    ThreePoint,
    /// Exact integration for constant, radial, sampled and pullback
    /// weights (pullbacks are clipped against their mesh).
    Exact,
}

/// A positive weight `Φ` on the target domain.
#[derive(Clone)]
pub enum WeightFn {
    Constant(f64),
    /// `c0 + c2 |w|²`.
    Radial { c0: f64, c2: f64 },
    /// Arbitrary closure; the gradient falls back to central differences
    /// when not given.
    Analytic { value: ScalarFn, gradient: Option<GradFn> },
    /// Per-vertex samples, interpolated linearly on the locator's mesh.
    Samples { locator: Arc<Locator>, values: Vec<f64> },
    /// `K_f^{p−1}` for a stored map `f`, evaluated on `f`'s reference domain.
    Pullback { map: DiscreteMap, locator: Arc<Locator>, p: f64 },
    /// `K_h^{p−1}` of the map being evaluated itself (the weight of the
    /// inner-variational equation). Only meaningful per triangle.
    OwnDistortion { p: f64 },
}

impl fmt::Debug for WeightFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightFn::Constant(c) => write!(f, "Constant({c})"),
            WeightFn::Radial { c0, c2 } => write!(f, "Radial {{ c0: {c0}, c2: {c2} }}"),
            WeightFn::Analytic { .. } => write!(f, "Analytic"),
            WeightFn::Samples { values, .. } => write!(f, "Samples({} values)", values.len()),
            WeightFn::Pullback { p, .. } => write!(f, "Pullback {{ p: {p} }}"),
            WeightFn::OwnDistortion { p } => write!(f, "OwnDistortion {{ p: {p} }}"),
        }
    }
}

/// Serializable description of the closed-form weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum WeightSpec {
    Constant { value: f64 },
    Radial { c0: f64, c2: f64 },
}

impl From<&WeightSpec> for WeightFn {
    fn from(spec: &WeightSpec) -> Self {
        match *spec {
            WeightSpec::Constant { value } => WeightFn::Constant(value),
            WeightSpec::Radial { c0, c2 } => WeightFn::Radial { c0, c2 },
        }
    }
}

impl WeightFn {
    pub fn analytic(value: impl Fn(Point) -> f64 + Send + Sync + 'static) -> Self {
        WeightFn::Analytic { value: Arc::new(value), gradient: None }
    }

    pub fn samples(locator: Arc<Locator>, values: Vec<f64>) -> Result<Self> {
        if values.len() != locator.mesh().vertex_count() {
            return Err(Error::InvalidArgument("one sample per vertex required".into()));
        }
        Ok(WeightFn::Samples { locator, values })
    }

    /// `K_f^{p−1}` pulled back through `f`.
    pub fn pullback(map: DiscreteMap, p: f64) -> Self {
        let locator = Arc::new(Locator::new((**map.reference()).clone()));
        WeightFn::Pullback { map, locator, p }
    }

    /// Whether Φ is constant on the triangles of some mesh (so its
    /// gradient vanishes almost everywhere).
    pub fn is_piecewise_constant(&self) -> bool {
        matches!(self, WeightFn::Constant(_) | WeightFn::Pullback { .. } | WeightFn::OwnDistortion { .. })
    }

    /// `Φ(w)`, with a location hint for mesh-based kinds.
    pub fn value(&self, w: Point, hint: &mut usize) -> Result<f64> {
        match self {
            WeightFn::Constant(c) => Ok(*c),
            WeightFn::Radial { c0, c2 } => Ok(c0 + c2 * w.norm_sqr()),
            WeightFn::Analytic { value, .. } => Ok(value(w)),
            WeightFn::Samples { locator, values } => {
                let loc = locator.locate(w, *hint)?;
                *hint = loc.triangle;
                let tri = locator.mesh().triangles()[loc.triangle];
                Ok((0..3).map(|k| loc.bary[k] * values[tri[k]]).sum())
            }
            WeightFn::Pullback { map, locator, p } => {
                let loc = locator.locate(w, *hint)?;
                *hint = loc.triangle;
                Ok(map.triangle_derivs(loc.triangle).distortion.powf(p - 1.0))
            }
            WeightFn::OwnDistortion { .. } => Err(Error::InvalidArgument(
                "own-distortion weight has no pointwise value".into(),
            )),
        }
    }

    /// `∂Φ/∂x + i ∂Φ/∂y` at `w`.
    pub fn gradient(&self, w: Point, hint: &mut usize) -> Result<Complex64> {
        match self {
            WeightFn::Constant(_) | WeightFn::Pullback { .. } | WeightFn::OwnDistortion { .. } => {
                Ok(Complex64::new(0.0, 0.0))
            }
            WeightFn::Radial { c2, .. } => Ok(w * (2.0 * c2)),
            WeightFn::Analytic { value, gradient } => match gradient {
                Some(g) => Ok(g(w)),
                None => {
                    let h = 1e-6 * (1.0 + w.norm());
                    let dx = (value(w + h) - value(w - h)) / (2.0 * h);
                    let i = Complex64::new(0.0, h);
                    let dy = (value(w + i) - value(w - i)) / (2.0 * h);
                    Ok(Complex64::new(dx, dy))
                }
            },
            WeightFn::Samples { locator, values } => {
                let loc = locator.locate(w, *hint)?;
                *hint = loc.triangle;
                let tri = locator.mesh().triangles()[loc.triangle];
                let c = locator.mesh().corners(loc.triangle);
                Ok(linear_gradient(c, [values[tri[0]], values[tri[1]], values[tri[2]]]))
            }
        }
    }

    /// Average of Φ over the triangle with corners `tri`.
    pub fn triangle_average(&self, tri: [Point; 3], quad: Quadrature, hint: &mut usize) -> Result<f64> {
        match quad {
            Quadrature::Centroid => self.value((tri[0] + tri[1] + tri[2]) / 3.0, hint),
            Quadrature::ThreePoint => {
                let mut s = 0.0;
                for pt in three_point_nodes(tri) {
                    s += self.value(pt, hint)?;
                }
                Ok(s / 3.0)
            }
            Quadrature::Exact => self.exact_average(tri, hint),
        }
    }

    fn exact_average(&self, tri: [Point; 3], hint: &mut usize) -> Result<f64> {
        match self {
            WeightFn::Constant(c) => Ok(*c),
            WeightFn::Radial { c0, c2 } => {
                let [a, b, c] = tri;
                let m = (a.norm_sqr() + b.norm_sqr() + c.norm_sqr()
                    + (a * b.conj()).re + (a * c.conj()).re + (b * c.conj()).re)
                    / 6.0;
                Ok(c0 + c2 * m)
            }
            WeightFn::Samples { locator, values } => {
                clipped_average(locator, tri, |t, poly_centroid| {
                    let b = locator.barycentric(t, poly_centroid);
                    let ids = locator.mesh().triangles()[t];
                    (0..3).map(|k| b[k] * values[ids[k]]).sum()
                })
            }
            WeightFn::Pullback { map, locator, p } => {
                let _ = hint;
                clipped_average(locator, tri, |t, _| map.triangle_derivs(t).distortion.powf(p - 1.0))
            }
            WeightFn::Analytic { .. } | WeightFn::OwnDistortion { .. } => Err(Error::InvalidArgument(
                "exact quadrature is only available for constant, radial, sampled and pullback weights".into(),
            )),
        }
    }
}

pub(crate) fn three_point_nodes(tri: [Point; 3]) -> [Point; 3] {
    let [a, b, c] = tri;
    [
        a * (2.0 / 3.0) + (b + c) / 6.0,
        b * (2.0 / 3.0) + (a + c) / 6.0,
        c * (2.0 / 3.0) + (a + b) / 6.0,
    ]
}

/// Gradient (`∂x + i∂y`) of the linear interpolant of `v` on `c`.
pub(crate) fn linear_gradient(c: [Point; 3], v: [f64; 3]) -> Complex64 {
    let d = orient2d(c[0], c[1], c[2]);
    let mut g = Complex64::new(0.0, 0.0);
    for k in 0..3 {
        let e = c[(k + 2) % 3] - c[(k + 1) % 3];
        // ∇λ_k is the inward normal of the opposite edge, scaled by 1/(2A).
        g += Complex64::new(-e.im, e.re) * (v[k] / d);
    }
    g
}

/// Area-weighted average over `tri` of a function constant (or linear,
/// evaluated at piece centroids) on each mesh triangle.
fn clipped_average(locator: &Locator, tri: [Point; 3], per_piece: impl Fn(usize, Point) -> f64) -> Result<f64> {
    let lo = Point::new(tri.iter().map(|p| p.re).fold(f64::INFINITY, f64::min), tri.iter().map(|p| p.im).fold(f64::INFINITY, f64::min));
    let hi = Point::new(tri.iter().map(|p| p.re).fold(f64::NEG_INFINITY, f64::max), tri.iter().map(|p| p.im).fold(f64::NEG_INFINITY, f64::max));
    let total_area = 0.5 * orient2d(tri[0], tri[1], tri[2]);
    if !(total_area > 0.0) {
        return Err(Error::InvalidArgument("exact quadrature needs a positively oriented triangle".into()));
    }
    let mut integral = 0.0;
    let mut covered = 0.0;
    for t in locator.candidates(lo, hi) {
        let poly = clip_convex(&tri, locator.mesh().corners(t));
        if poly.len() < 3 {
            continue;
        }
        let (area, centroid) = polygon_area_centroid(&poly);
        if area <= 0.0 {
            continue;
        }
        integral += area * per_piece(t, centroid);
        covered += area;
    }
    if (covered - total_area).abs() > 1e-9 * total_area.max(1e-300) {
        return Err(Error::OutsideMesh {
            point: (tri[0] + tri[1] + tri[2]) / 3.0,
            distance: (total_area - covered).abs(),
        });
    }
    Ok(integral / covered)
}

/// Sutherland–Hodgman clip of a convex polygon against a ccw triangle.
pub fn clip_convex(subject: &[Point], clip: [Point; 3]) -> Vec<Point> {
    let mut out: Vec<Point> = subject.to_vec();
    for k in 0..3 {
        let a = clip[k];
        let b = clip[(k + 1) % 3];
        let input = std::mem::take(&mut out);
        if input.is_empty() {
            break;
        }
        let n = input.len();
        for i in 0..n {
            let p = input[i];
            let q = input[(i + 1) % n];
            let sp = orient2d(a, b, p);
            let sq = orient2d(a, b, q);
            if sp >= 0.0 {
                out.push(p);
            }
            if (sp >= 0.0) != (sq >= 0.0) {
                let t = sp / (sp - sq);
                out.push(p + (q - p) * t);
            }
        }
    }
    out
}

pub fn polygon_area_centroid(poly: &[Point]) -> (f64, Point) {
    let n = poly.len();
    let mut a = 0.0;
    let mut c = Complex64::new(0.0, 0.0);
    // Relative to the first vertex for accuracy on small pieces.
    let o = poly[0];
    for i in 1..n - 1 {
        let p = poly[i] - o;
        let q = poly[i + 1] - o;
        let cross = p.re * q.im - p.im * q.re;
        a += cross;
        c += (p + q) * cross;
    }
    if a == 0.0 {
        return (0.0, o);
    }
    (0.5 * a, o + c / (3.0 * a))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clip_square_corner() {
        let tri = [Point::new(0., 0.), Point::new(1., 0.), Point::new(0., 1.)];
        let square = [Point::new(0.25, 0.25), Point::new(2., 0.25), Point::new(2., 2.), Point::new(0.25, 2.)];
        let clipped = clip_convex(&square, tri);
        let (area, _) = polygon_area_centroid(&clipped);
        // Triangle with legs 0.5 remains.
        assert!((area - 0.125).abs() < 1e-15);
    }

    #[test]
    fn radial_exact_matches_three_point() {
        let w = WeightFn::Radial { c0: 0.3, c2: 2.0 };
        let tri = [Point::new(0.1, 0.), Point::new(1., 0.2), Point::new(0.3, 0.9)];
        let mut h = 0;
        let e = w.triangle_average(tri, Quadrature::Exact, &mut h).unwrap();
        let t = w.triangle_average(tri, Quadrature::ThreePoint, &mut h).unwrap();
        assert!((e - t).abs() < 1e-14);
    }

    #[test]
    fn linear_gradient_recovers_plane() {
        let c = [Point::new(0.1, 0.), Point::new(1., 0.2), Point::new(0.3, 0.9)];
        let f = |p: Point| 2.0 * p.re - 3.0 * p.im + 1.0;
        let g = linear_gradient(c, [f(c[0]), f(c[1]), f(c[2])]);
        assert!((g - Complex64::new(2.0, -3.0)).norm() < 1e-14);
    }
}
