//! Hopf differentials `φ = Φ(h) h_z conj(h_z̄)`, the unit factor γ,
//! horizontal/vertical derivatives, loop-integral holomorphy residuals and
//! both sides of the integral identity comparing two maps with equal image.

use std::sync::Arc;

use serde::Serialize;

use crate::energy::{three_point_nodes, triangle_weights, weighted_dirichlet, Quadrature, WeightFn};
use crate::geometry::{segment_distance, Locator, MeshTopology, TriangleMesh};
use crate::mapping::{compose_with, DiscreteMap, SmoothMap, TriangleDerivs};
use crate::{Complex64, Error, Point, Result};

/// `γ = 0` below this fraction of `|h_z|² + |h_z̄|²`.
pub const GAMMA_THRESHOLD: f64 = 1e-14;

/// Per-triangle Hopf differential of a map.
#[derive(Clone, Debug)]
pub struct HopfField {
    pub reference: Arc<TriangleMesh>,
    pub phi: Vec<Complex64>,
    /// Derivatives of the map the field was built from (absent for fields
    /// given directly as values).
    pub derivs: Option<Vec<TriangleDerivs>>,
    /// `Φ_T` used on each triangle.
    pub weights: Vec<f64>,
}

impl HopfField {
    /// A field given directly by per-triangle values, e.g. a sampled test
    /// function.
    pub fn from_values(reference: Arc<TriangleMesh>, phi: Vec<Complex64>) -> Result<Self> {
        if phi.len() != reference.triangle_count() {
            return Err(Error::InvalidArgument("one value per triangle required".into()));
        }
        let weights = vec![1.0; phi.len()];
        Ok(Self { reference, phi, derivs: None, weights })
    }

    /// Samples `f` at triangle centroids.
    pub fn sample(reference: Arc<TriangleMesh>, f: impl Fn(Complex64) -> Complex64) -> Self {
        let phi = (0..reference.triangle_count()).map(|t| f(reference.centroid(t))).collect();
        let weights = vec![1.0; reference.triangle_count()];
        Self { reference, phi, derivs: None, weights }
    }

    pub fn max_modulus(&self) -> f64 {
        self.phi.iter().map(|p| p.norm()).fold(0.0, f64::max)
    }
}

/// `Φ(h) h_z conj(h_z̄)` on every triangle; Φ is averaged over each image
/// triangle with `quad`.
pub fn hopf_differential(h: &DiscreteMap, phi: &WeightFn, quad: Quadrature) -> Result<HopfField> {
    let weights = triangle_weights(h, phi, quad)?;
    let derivs: Vec<_> = h.derivatives().triangles;
    let values = derivs.iter().zip(&weights).map(|(d, w)| d.fz * d.fzb.conj() * *w).collect();
    Ok(HopfField { reference: h.reference().clone(), phi: values, derivs: Some(derivs), weights })
}

/// Per-triangle `γ = h_z conj(h_z̄) / |h_z conj(h_z̄)|`, or 0.
#[derive(Clone, Debug, PartialEq)]
pub struct GammaField {
    pub gamma: Vec<Complex64>,
}

pub fn gamma_of(fz: Complex64, fzb: Complex64) -> Complex64 {
    let prod = fz * fzb.conj();
    let m = prod.norm();
    if m < GAMMA_THRESHOLD * (fz.norm_sqr() + fzb.norm_sqr()) || m == 0.0 {
        Complex64::new(0.0, 0.0)
    } else {
        prod / m
    }
}

pub fn gamma_field(h: &DiscreteMap) -> GammaField {
    GammaField {
        gamma: h.derivatives().triangles.iter().map(|d| gamma_of(d.fz, d.fzb)).collect(),
    }
}

/// Loop residuals `|∮ φ dz| / area(ring)` around interior vertices.
#[derive(Clone, Debug, Serialize)]
pub struct ResidualRecord {
    /// `(vertex, residual)` pairs, residuals already normalized.
    pub loop_residuals: Vec<(usize, f64)>,
    pub max_rel: f64,
    /// Ring-area-weighted mean of the normalized residuals.
    pub mean_rel: f64,
    /// Largest residual over vertices at least
    /// [`INTERIOR_MARGIN`]` · diameter` away from the boundary (falls back
    /// to `max_rel` when there are none). The first rings at a polygonal
    /// boundary carry an O(1) layer that does not shrink under refinement.
    pub interior_max_rel: f64,
    /// Scale used in the normalization: `radius / max_T |φ_T|`.
    pub scale: f64,
}

/// Relative boundary distance defining [`ResidualRecord::interior_max_rel`].
pub const INTERIOR_MARGIN: f64 = 0.1;

/// Morera-style residual of a per-triangle field. Around each interior
/// vertex the boundary of its one-ring is integrated with each triangle's
/// own value on its outer edge, so constants cancel exactly and linear
/// functions sampled at centroids cancel exactly as well.
///
/// Values are divided by the ring area and multiplied by
/// `R / max_T |φ_T|` (`R` the mesh radius about its vertex mean), which
/// makes them invariant under scaling of φ and of the domain. A field that
/// vanishes identically has residual 0.
pub fn holomorphy_residual(field: &HopfField) -> Result<ResidualRecord> {
    let mesh = &field.reference;
    let interior = mesh.interior_vertices();
    if interior.is_empty() {
        return Err(Error::InvalidMesh("mesh has no interior vertex".into()));
    }
    let topo = MeshTopology::build(mesh);
    let (_, radius) = mesh.center_and_radius();
    let max_phi = field.max_modulus();
    let scale = if max_phi > 0.0 { radius / max_phi } else { 0.0 };
    let mut out = Vec::with_capacity(interior.len());
    let mut weighted = 0.0;
    let mut total_area = 0.0;
    let mut max_rel: f64 = 0.0;
    let boundary = mesh.boundary_polygon();
    let margin = INTERIOR_MARGIN * mesh.diameter_estimate();
    let deep = |p: Complex64| {
        (0..boundary.len()).all(|i| segment_distance(p, boundary[i], boundary[(i + 1) % boundary.len()]) >= margin)
    };
    let mut interior_max: Option<f64> = None;
    for &v in &interior {
        let mut loop_sum = Complex64::new(0.0, 0.0);
        let mut ring_area = 0.0;
        for &t in &topo.vertex_triangles[v] {
            let tri = mesh.triangles()[t];
            let k = tri.iter().position(|&i| i == v).expect("vertex in its star");
            let a = mesh.vertices()[tri[(k + 1) % 3]];
            let b = mesh.vertices()[tri[(k + 2) % 3]];
            loop_sum += field.phi[t] * (b - a);
            ring_area += mesh.signed_area(t);
        }
        let r = loop_sum.norm() / ring_area * scale;
        max_rel = max_rel.max(r);
        if deep(mesh.vertices()[v]) {
            interior_max = Some(interior_max.unwrap_or(0.0).max(r));
        }
        weighted += r * ring_area;
        total_area += ring_area;
        out.push((v, r));
    }
    Ok(ResidualRecord {
        loop_residuals: out,
        max_rel,
        mean_rel: weighted / total_area,
        interior_max_rel: interior_max.unwrap_or(max_rel),
        scale,
    })
}

/// Horizontal and vertical derivatives of `h` on one triangle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HvRecord {
    pub dh: Complex64,
    pub dv: Complex64,
    /// `| |∂_H h| − (|h_z| + |h_z̄|) |`.
    pub horizontal_residual: f64,
    /// `| |∂_H h|·|∂_V h| − J |`.
    pub product_residual: f64,
    /// `| Φ(|∂_H h|² − |∂_V h|²) − 4|φ| |`.
    pub weight_residual: f64,
    /// Amount by which `|∂_V h|² ≤ J ≤ |∂_H h|²` fails (0 when it holds).
    pub order_violation: f64,
    /// φ vanished here; `∂_H h = ∂_V h = h_z` by convention.
    pub skipped: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct HvReport {
    pub triangles: Vec<HvRecord>,
    pub skipped: usize,
    pub max_residual: f64,
}

/// `∂_H h = h_z + (φ/|φ|) h_z̄` and `∂_V h = h_z − (φ/|φ|) h_z̄`, with the
/// residuals of the identities that hold when φ is `h`'s own Hopf field.
pub fn hv_derivatives(h: &DiscreteMap, field: &HopfField) -> Result<HvReport> {
    let n = h.reference().triangle_count();
    if field.phi.len() != n {
        return Err(Error::InvalidArgument("field and map have different meshes".into()));
    }
    let mut triangles = Vec::with_capacity(n);
    let mut skipped = 0;
    let mut max_residual: f64 = 0.0;
    for t in 0..n {
        let d = h.triangle_derivs(t);
        let phi = field.phi[t];
        let w = field.weights[t];
        let rec = if phi.norm() == 0.0 {
            skipped += 1;
            HvRecord {
                dh: d.fz,
                dv: d.fz,
                horizontal_residual: 0.0,
                product_residual: 0.0,
                weight_residual: 0.0,
                order_violation: 0.0,
                skipped: true,
            }
        } else {
            let u = phi / phi.norm();
            let dh = d.fz + u * d.fzb;
            let dv = d.fz - u * d.fzb;
            let (mh, mv) = (dh.norm(), dv.norm());
            let j = d.jacobian;
            let order_violation = (mv * mv - j).max(0.0).max(j - mh * mh);
            HvRecord {
                dh,
                dv,
                horizontal_residual: (mh - (d.fz.norm() + d.fzb.norm())).abs(),
                product_residual: (mh * mv - j).abs(),
                weight_residual: (w * (mh * mh - mv * mv) - 4.0 * phi.norm()).abs(),
                order_violation: order_violation.max(0.0),
                skipped: false,
            }
        };
        max_residual = max_residual
            .max(rec.horizontal_residual)
            .max(rec.product_residual)
            .max(rec.weight_residual)
            .max(rec.order_violation);
        triangles.push(rec);
    }
    Ok(HvReport { triangles, skipped, max_residual })
}

/// Both sides of
/// `𝓔^Φ[H] − 𝓔^Φ[h] = 4∫[|f_z − γ f_z̄|²/J_f − 1] Φ(h)|h_z h_z̄|
///                  + 4∫ Φ(h)(|h_z| − |h_z̄|)² |f_z̄|²/J_f`, `f = H⁻¹∘h`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IdentityRecord {
    pub lhs: f64,
    pub rhs_term1: f64,
    pub rhs_term2: f64,
    pub gap: f64,
}

impl IdentityRecord {
    /// `gap / |lhs|`, or the absolute gap when `lhs` vanishes.
    pub fn relative_gap(&self) -> f64 {
        if self.lhs == 0.0 {
            self.gap
        } else {
            self.gap / self.lhs.abs()
        }
    }
}

/// `h` and `H` must share their reference mesh and have the same image.
pub fn integral_identity(h: &DiscreteMap, big_h: &DiscreteMap, phi: &WeightFn, quad: Quadrature) -> Result<IdentityRecord> {
    if !Arc::ptr_eq(h.reference(), big_h.reference()) && h.reference() != big_h.reference() {
        return Err(Error::InvalidArgument("h and H must share a reference mesh".into()));
    }
    let area_h: f64 = (0..h.reference().triangle_count()).map(|t| h.triangle_derivs(t).jacobian * h.triangle_derivs(t).area).sum();
    let area_big: f64 = (0..h.reference().triangle_count())
        .map(|t| big_h.triangle_derivs(t).jacobian * big_h.triangle_derivs(t).area)
        .sum();
    if (area_h - area_big).abs() > 1e-9 * area_h.abs().max(area_big.abs()) {
        return Err(Error::InvalidArgument(format!(
            "h and H have different images (areas {area_h} and {area_big})"
        )));
    }
    let h_inv = big_h.invert()?;
    let locator = Locator::new((**h_inv.reference()).clone());
    let f = compose_with(&h_inv, &locator, h)?;
    let flipped = f.derivatives().flipped();
    if !flipped.is_empty() {
        return Err(Error::NotInvertible { triangles: flipped });
    }
    let lhs = weighted_dirichlet(big_h, phi, quad)?.total - weighted_dirichlet(h, phi, quad)?.total;
    let weights = triangle_weights(h, phi, quad)?;
    let mut t1 = 0.0;
    let mut t2 = 0.0;
    for (t, w) in weights.iter().enumerate() {
        let dh = h.triangle_derivs(t);
        let df = f.triangle_derivs(t);
        let (a, b) = identity_terms(dh.fz, dh.fzb, df.fz, df.fzb, *w);
        t1 += a * dh.area;
        t2 += b * dh.area;
    }
    Ok(IdentityRecord { lhs, rhs_term1: t1, rhs_term2: t2, gap: (lhs - (t1 + t2)).abs() })
}

/// Integrand of the two right-hand terms at one point, given the
/// derivatives of `h` and of `f = H⁻¹∘h`.
fn identity_terms(hz: Complex64, hzb: Complex64, fz: Complex64, fzb: Complex64, weight: f64) -> (f64, f64) {
    let gamma = gamma_of(hz, hzb);
    let jf = fz.norm_sqr() - fzb.norm_sqr();
    let t1 = 4.0 * ((fz - gamma * fzb).norm_sqr() / jf - 1.0) * weight * (hz * hzb).norm();
    let t2 = 4.0 * weight * (hz.norm() - hzb.norm()).powi(2) * fzb.norm_sqr() / jf;
    (t1, t2)
}

/// The identity for closed-form maps `h`, `H` of a common domain onto a
/// common image: both sides are integrated with `quad` over `mesh`, using
/// exact derivatives and `f_z, f_z̄` from the chain rule at `f = H⁻¹(h(z))`.
/// The gap is then pure quadrature error (`O(edge²)` for the centroid rule).
pub fn integral_identity_smooth(
    mesh: &TriangleMesh,
    h: &dyn SmoothMap,
    big_h: &dyn SmoothMap,
    phi: &WeightFn,
    quad: Quadrature,
) -> Result<IdentityRecord> {
    let hs = |a: Complex64, b: Complex64| 2.0 * (a.norm_sqr() + b.norm_sqr());
    let (mut lhs, mut t1, mut t2) = (0.0, 0.0, 0.0);
    let mut hint = 0;
    for t in 0..mesh.triangle_count() {
        let corners = mesh.corners(t);
        let area = mesh.signed_area(t);
        let nodes: Vec<(Point, f64)> = match quad {
            Quadrature::Centroid => vec![(mesh.centroid(t), 1.0)],
            Quadrature::ThreePoint => three_point_nodes(corners).into_iter().map(|z| (z, 1.0 / 3.0)).collect(),
            Quadrature::Exact => {
                return Err(Error::InvalidArgument("closed-form pairs use centroid or three-point quadrature".into()))
            }
        };
        for (z, wt) in nodes {
            let (hz, hzb) = h.wirtinger(z);
            let w = h.eval(z);
            let x = big_h.inverse(w)?;
            let (big_z, big_zb) = big_h.wirtinger(x);
            let weight = phi.value(w, &mut hint)?;
            // Df = (DH)⁻¹ ∘ Dh in Wirtinger form.
            let j = big_z.norm_sqr() - big_zb.norm_sqr();
            let (ia, ib) = (big_z.conj() / j, -big_zb / j);
            let (fz, fzb) = (ia * hz + ib * hzb.conj(), ia * hzb + ib * hz.conj());
            let weight_big = phi.value(big_h.eval(z), &mut hint)?;
            let (big_z0, big_zb0) = big_h.wirtinger(z);
            lhs += wt * area * (weight_big * hs(big_z0, big_zb0) - weight * hs(hz, hzb));
            let (a, b) = identity_terms(hz, hzb, fz, fzb, weight);
            t1 += wt * area * a;
            t2 += wt * area * b;
        }
    }
    Ok(IdentityRecord { lhs, rhs_term1: t1, rhs_term2: t2, gap: (lhs - (t1 + t2)).abs() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{triangulate, Domain};
    use crate::Point;

    fn disk(edge: f64) -> Arc<TriangleMesh> {
        Arc::new(triangulate(&Domain::disk_polygon(64, 1.0).unwrap(), edge).unwrap())
    }

    #[test]
    fn affine_field_is_constant() {
        let (a, b) = (Complex64::new(1.2, 0.3), Complex64::new(0.2, -0.4));
        let h = DiscreteMap::from_fn(disk(0.3), move |z| a * z + b * z.conj());
        let f = hopf_differential(&h, &WeightFn::Constant(1.0), Quadrature::Centroid).unwrap();
        for p in &f.phi {
            assert!((p - a * b.conj()).norm() < 1e-14);
        }
        assert!(holomorphy_residual(&f).unwrap().max_rel < 1e-12);
    }

    #[test]
    fn identity_field_vanishes() {
        let h = DiscreteMap::identity(disk(0.3));
        let f = hopf_differential(&h, &WeightFn::Radial { c0: 1.0, c2: 1.0 }, Quadrature::Centroid).unwrap();
        assert!(f.phi.iter().all(|p| p.norm() == 0.0));
        assert_eq!(holomorphy_residual(&f).unwrap().max_rel, 0.0);
        let hv = hv_derivatives(&h, &f).unwrap();
        assert_eq!(hv.skipped, h.reference().triangle_count());
    }

    #[test]
    fn quadratic_conjugate_map() {
        let h = DiscreteMap::from_fn(disk(0.05), |z: Point| z + 0.25 * z.conj() * z.conj());
        let f = hopf_differential(&h, &WeightFn::Constant(1.0), Quadrature::Centroid).unwrap();
        // Linear interpolation of a quadratic: first-order accurate derivatives.
        let mut err: f64 = 0.0;
        for t in 0..f.phi.len() {
            let c = h.reference().centroid(t);
            err = err.max((f.phi[t] - c / 2.0).norm());
        }
        assert!(err < 0.25 * h.reference().max_edge(), "{err}");
    }

    #[test]
    fn sampled_linear_and_conjugate() {
        let m = disk(0.1);
        let lin = holomorphy_residual(&HopfField::sample(m.clone(), |z| z)).unwrap();
        assert!(lin.max_rel < 1e-10, "{}", lin.max_rel);
        let conj = holomorphy_residual(&HopfField::sample(m, |z| z.conj())).unwrap();
        // Centroid sampling integrates conj(z) to (2/3)·2i·area on each ring.
        let expected = 4.0 / 3.0 * conj.scale;
        for &(_, r) in &conj.loop_residuals {
            assert!((r - expected).abs() < 1e-9 * expected);
        }
    }

    #[test]
    fn hv_affine_example() {
        let h = DiscreteMap::from_fn(disk(0.3), |z: Point| 2.0 * z + 0.5 * z.conj());
        let f = hopf_differential(&h, &WeightFn::Constant(1.0), Quadrature::Centroid).unwrap();
        let hv = hv_derivatives(&h, &f).unwrap();
        for r in &hv.triangles {
            assert!((r.dh - 2.5).norm() < 1e-13 && (r.dv - 1.5).norm() < 1e-13);
        }
        assert!(hv.max_residual < 1e-12);
    }

    #[test]
    fn gamma_unit_or_zero() {
        assert_eq!(gamma_of(Complex64::new(1.0, 0.0), Complex64::new(1e-20, 0.0)), Complex64::new(0.0, 0.0));
        let g = gamma_of(Complex64::new(1.0, 1.0), Complex64::new(0.0, 0.5));
        assert!((g.norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn identity_pair_is_trivial() {
        let h = DiscreteMap::from_fn(disk(0.2), |z: Point| z + 0.1 * z * z);
        let r = integral_identity(&h, &h, &WeightFn::Constant(1.0), Quadrature::Centroid).unwrap();
        assert!(r.lhs.abs() < 1e-14 && r.rhs_term1.abs() < 1e-9 && r.rhs_term2.abs() < 1e-9);
    }

    #[test]
    fn different_images_rejected() {
        let m = disk(0.3);
        let h = DiscreteMap::identity(m.clone());
        let big = DiscreteMap::from_fn(m, |z| 2.0 * z);
        assert!(integral_identity(&h, &big, &WeightFn::Constant(1.0), Quadrature::Centroid).is_err());
    }
}
