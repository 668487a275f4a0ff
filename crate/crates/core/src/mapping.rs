//! Piecewise-linear maps over a reference triangulation: Wirtinger
//! derivatives, Jacobians, distortion, inversion and composition.

use std::sync::Arc;

use crate::geometry::{orient2d, Locator, TriangleMesh};
use crate::{Complex64, Error, Point, Result};

/// Per-triangle data of the affine restriction of a PL map.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TriangleDerivs {
    pub fz: Complex64,
    pub fzb: Complex64,
    /// `|f_z|² − |f_z̄|²`, computed as image area over reference area so its
    /// sign agrees exactly with the image orientation.
    pub jacobian: f64,
    /// `(|f_z|² + |f_z̄|²) / J` for `J > 0`, `1` for `J = 0`, `+∞` for `J < 0`.
    pub distortion: f64,
    /// Reference (source) area.
    pub area: f64,
}

impl TriangleDerivs {
    pub fn from_corners(p: [Point; 3], q: [Point; 3]) -> Self {
        let (fz, fzb) = affine_wirtinger(p, q);
        let area = 0.5 * orient2d(p[0], p[1], p[2]);
        let jacobian = 0.5 * orient2d(q[0], q[1], q[2]) / area;
        Self { fz, fzb, jacobian, distortion: distortion_value(fz, fzb, jacobian), area }
    }

    /// `‖Df‖² = 2(|f_z|² + |f_z̄|²)`.
    pub fn hs_norm_sqr(&self) -> f64 {
        2.0 * (self.fz.norm_sqr() + self.fzb.norm_sqr())
    }

    pub fn is_oriented(&self) -> bool {
        self.jacobian > 0.0
    }
}

/// Distortion from Wirtinger derivatives and Jacobian.
pub fn distortion_value(fz: Complex64, fzb: Complex64, jacobian: f64) -> f64 {
    if jacobian > 0.0 {
        (fz.norm_sqr() + fzb.norm_sqr()) / jacobian
    } else if jacobian == 0.0 {
        1.0
    } else {
        f64::INFINITY
    }
}

/// `(a, b)` with `q_k − q_0 = a (p_k − p_0) + b conj(p_k − p_0)`: the
/// Wirtinger derivatives of the affine map sending `p` to `q`.
pub fn affine_wirtinger(p: [Point; 3], q: [Point; 3]) -> (Complex64, Complex64) {
    let e1 = p[1] - p[0];
    let e2 = p[2] - p[0];
    let d1 = q[1] - q[0];
    let d2 = q[2] - q[0];
    let det = e1 * e2.conj() - e2 * e1.conj();
    let a = (d1 * e2.conj() - d2 * e1.conj()) / det;
    let b = (e1 * d2 - e2 * d1) / det;
    (a, b)
}

/// A diffeomorphism known in closed form.
pub trait SmoothMap: Sync {
    fn eval(&self, z: Point) -> Point;
    /// `(f_z, f_z̄)` at `z`.
    fn wirtinger(&self, z: Point) -> (Complex64, Complex64);
    fn inverse(&self, w: Point) -> Result<Point>;
}

/// Per-triangle derivative data of a map.
#[derive(Clone, Debug, PartialEq)]
pub struct DerivField {
    pub triangles: Vec<TriangleDerivs>,
}

impl DerivField {
    pub fn min_jacobian(&self) -> f64 {
        self.triangles.iter().map(|t| t.jacobian).fold(f64::INFINITY, f64::min)
    }

    /// Triangles with `J ≤ 0`.
    pub fn flipped(&self) -> Vec<usize> {
        (0..self.triangles.len()).filter(|&t| !self.triangles[t].is_oriented()).collect()
    }

    pub fn max_distortion(&self) -> f64 {
        self.triangles.iter().map(|t| t.distortion).fold(0.0, f64::max)
    }
}

/// A piecewise-linear map: one target point per reference vertex.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteMap {
    reference: Arc<TriangleMesh>,
    targets: Vec<Point>,
}

impl DiscreteMap {
    pub fn new(reference: Arc<TriangleMesh>, targets: Vec<Point>) -> Result<Self> {
        if targets.len() != reference.vertex_count() {
            return Err(Error::InvalidArgument(format!(
                "{} targets for {} vertices",
                targets.len(),
                reference.vertex_count()
            )));
        }
        if targets.iter().any(|t| !t.re.is_finite() || !t.im.is_finite()) {
            return Err(Error::InvalidArgument("non-finite target".into()));
        }
        Ok(Self { reference, targets })
    }

    pub fn identity(reference: Arc<TriangleMesh>) -> Self {
        let targets = reference.vertices().to_vec();
        Self { reference, targets }
    }

    pub fn from_fn(reference: Arc<TriangleMesh>, f: impl Fn(Point) -> Point) -> Self {
        let targets = reference.vertices().iter().map(|&z| f(z)).collect();
        Self { reference, targets }
    }

    pub fn reference(&self) -> &Arc<TriangleMesh> {
        &self.reference
    }

    pub fn targets(&self) -> &[Point] {
        &self.targets
    }

    pub fn into_targets(self) -> Vec<Point> {
        self.targets
    }

    pub fn image_corners(&self, t: usize) -> [Point; 3] {
        let [a, b, c] = self.reference.triangles()[t];
        [self.targets[a], self.targets[b], self.targets[c]]
    }

    pub fn image_centroid(&self, t: usize) -> Point {
        let [a, b, c] = self.image_corners(t);
        (a + b + c) / 3.0
    }

    pub fn triangle_derivs(&self, t: usize) -> TriangleDerivs {
        TriangleDerivs::from_corners(self.reference.corners(t), self.image_corners(t))
    }

    pub fn derivatives(&self) -> DerivField {
        DerivField {
            triangles: (0..self.reference.triangle_count()).map(|t| self.triangle_derivs(t)).collect(),
        }
    }

    pub fn min_jacobian(&self) -> f64 {
        (0..self.reference.triangle_count())
            .map(|t| self.triangle_derivs(t).jacobian)
            .fold(f64::INFINITY, f64::min)
    }

    /// The inverse PL map, defined on the image triangulation.
    pub fn invert(&self) -> Result<DiscreteMap> {
        let flipped = self.derivatives().flipped();
        if !flipped.is_empty() {
            return Err(Error::NotInvertible { triangles: flipped });
        }
        let image = self.reference.with_vertices(self.targets.clone())?;
        Ok(DiscreteMap { reference: Arc::new(image), targets: self.reference.vertices().to_vec() })
    }

    /// Value at an arbitrary point of the reference domain.
    pub fn evaluate(&self, locator: &Locator, z: Point, hint: usize) -> Result<(Point, usize)> {
        let loc = locator.locate(z, hint)?;
        let [a, b, c] = self.image_corners(loc.triangle);
        Ok((a * loc.bary[0] + b * loc.bary[1] + c * loc.bary[2], loc.triangle))
    }

    /// Largest vertex distance between two maps on the same mesh.
    pub fn linf_distance(&self, other: &DiscreteMap) -> f64 {
        self.targets
            .iter()
            .zip(&other.targets)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// `outer ∘ inner`, sampled at the vertices of `inner`'s reference mesh.
pub fn compose(outer: &DiscreteMap, inner: &DiscreteMap) -> Result<DiscreteMap> {
    let locator = Locator::new((**outer.reference()).clone());
    compose_with(outer, &locator, inner)
}

/// As [`compose`], reusing a locator built on `outer`'s reference mesh.
pub fn compose_with(outer: &DiscreteMap, locator: &Locator, inner: &DiscreteMap) -> Result<DiscreteMap> {
    let mut hint = 0;
    let mut targets = Vec::with_capacity(inner.targets.len());
    for &w in &inner.targets {
        let (value, t) = outer.evaluate(locator, w, hint)?;
        hint = t;
        targets.push(value);
    }
    DiscreteMap::new(inner.reference.clone(), targets)
}
