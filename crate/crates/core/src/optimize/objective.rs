use crate::energy::{three_point_nodes, Quadrature, WeightFn};
use crate::geometry::orient2d;
use crate::mapping::DiscreteMap;
use crate::{Complex64, Error, Point, Result};

/// A functional in the form the optimizer evaluates it: per-triangle
/// densities with analytic gradients, `+∞` on triangles with `J ≤ 0`.
#[derive(Clone, Debug)]
pub enum Objective {
    /// `Σ K^p · area`, in the forward variable.
    MeanDistortion { p: f64 },
    /// `½ Σ K^{p−1} ‖Dh‖² · area`.
    InverseEnergy { p: f64 },
    /// `Σ Φ_T ‖Dh‖² · area` with Φ sampled at the image (centroid or
    /// three-point rule).
    WeightedDirichlet { weight: WeightFn, quadrature: Quadrature },
}

type Mat = [[f64; 2]; 2];

fn edge_matrix(c: [Point; 3]) -> Mat {
    let e1 = c[1] - c[0];
    let e2 = c[2] - c[0];
    [[e1.re, e2.re], [e1.im, e2.im]]
}

fn mul(a: Mat, b: Mat) -> Mat {
    [
        [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
        [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
    ]
}

fn inverse(a: Mat) -> Mat {
    let d = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    [[a[1][1] / d, -a[0][1] / d], [-a[1][0] / d, a[0][0] / d]]
}

fn transpose(a: Mat) -> Mat {
    [[a[0][0], a[1][0]], [a[0][1], a[1][1]]]
}

/// `∂ det / ∂M`.
fn cofactor(m: Mat) -> Mat {
    [[m[1][1], -m[1][0]], [-m[0][1], m[0][0]]]
}

fn frob2(m: Mat) -> f64 {
    m.iter().flatten().map(|x| x * x).sum()
}

fn lin(a: f64, x: Mat, b: f64, y: Mat) -> Mat {
    [[a * x[0][0] + b * y[0][0], a * x[0][1] + b * y[0][1]], [a * x[1][0] + b * y[1][0], a * x[1][1] + b * y[1][1]]]
}

/// Compensated (Neumaier) sum in a fixed order.
pub(crate) fn stable_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

impl Objective {
    pub fn label(&self) -> &'static str {
        match self {
            Objective::MeanDistortion { .. } => "mean-distortion",
            Objective::InverseEnergy { .. } => "inverse-energy",
            Objective::WeightedDirichlet { .. } => "weighted-dirichlet",
        }
    }

    pub fn p(&self) -> Option<f64> {
        match self {
            Objective::MeanDistortion { p } | Objective::InverseEnergy { p } => Some(*p),
            Objective::WeightedDirichlet { .. } => None,
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        match self {
            Objective::MeanDistortion { p } | Objective::InverseEnergy { p } if !(*p >= 1.0) || !p.is_finite() => {
                Err(Error::InvalidArgument(format!("exponent must be finite and ≥ 1, got {p}")))
            }
            Objective::WeightedDirichlet { weight, quadrature } => {
                if matches!(weight, WeightFn::OwnDistortion { .. }) {
                    return Err(Error::InvalidArgument(
                        "own-distortion weight is not a fixed weight; minimize the inverse energy instead".into(),
                    ));
                }
                if *quadrature == Quadrature::Exact {
                    return Err(Error::InvalidArgument("exact quadrature is not differentiable; use centroid or three-point".into()));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Energy and gradient (`∂E/∂x + i ∂E/∂y` per vertex) of one triangle.
    fn triangle(&self, reference: [Point; 3], image: [Point; 3], area: f64, hint: &mut usize, want_grad: bool) -> Result<(f64, [Complex64; 3])> {
        let zero = [Complex64::new(0.0, 0.0); 3];
        let image_area2 = orient2d(image[0], image[1], image[2]);
        let dp_inv = inverse(edge_matrix(reference));
        let m = mul(edge_matrix(image), dp_inv);
        let s = frob2(m);
        let d = 0.5 * image_area2 / area;
        let (energy, g_m, extra) = match self {
            Objective::MeanDistortion { p } => {
                if d <= 0.0 {
                    return Ok((f64::INFINITY, zero));
                }
                let k = s / (2.0 * d);
                let e = k.powf(*p) * area;
                let dk = lin(1.0 / d, m, -s / (2.0 * d * d), cofactor(m));
                (e, lin(p * k.powf(p - 1.0), dk, 0.0, m), zero)
            }
            Objective::InverseEnergy { p } => {
                if d <= 0.0 {
                    return Ok((f64::INFINITY, zero));
                }
                let half = 0.5 * s;
                let e = half.powf(*p) * d.powf(1.0 - p) * area;
                let g = lin(
                    p * half.powf(p - 1.0) * d.powf(1.0 - p),
                    m,
                    (1.0 - p) * half.powf(*p) * d.powf(-p),
                    cofactor(m),
                );
                (e, g, zero)
            }
            Objective::WeightedDirichlet { weight, quadrature } => {
                let (phi, dphi) = match quadrature {
                    Quadrature::ThreePoint => {
                        let nodes = three_point_nodes(image);
                        let mut v = 0.0;
                        let mut grads = [Complex64::new(0.0, 0.0); 3];
                        for (j, &n) in nodes.iter().enumerate() {
                            v += weight.value(n, hint)? / 3.0;
                            if want_grad {
                                let g = weight.gradient(n, hint)? / 3.0;
                                for (k, slot) in grads.iter_mut().enumerate() {
                                    *slot += g * if j == k { 2.0 / 3.0 } else { 1.0 / 6.0 };
                                }
                            }
                        }
                        (v, grads)
                    }
                    _ => {
                        let c = (image[0] + image[1] + image[2]) / 3.0;
                        let v = weight.value(c, hint)?;
                        let g = if want_grad { weight.gradient(c, hint)? / 3.0 } else { Complex64::new(0.0, 0.0) };
                        (v, [g; 3])
                    }
                };
                if !(phi > 0.0) {
                    return Err(Error::NonPositiveWeight { value: phi, at: (image[0] + image[1] + image[2]) / 3.0 });
                }
                let e = phi * s * area;
                (e, lin(2.0 * phi, m, 0.0, m), [dphi[0] * (s * area), dphi[1] * (s * area), dphi[2] * (s * area)])
            }
        };
        if !want_grad {
            return Ok((energy, zero));
        }
        // dE/dDq = area · G · Dp^{-T}; columns belong to corners 1 and 2.
        let gq = mul(g_m, transpose(dp_inv));
        let g1 = Complex64::new(gq[0][0], gq[1][0]) * area;
        let g2 = Complex64::new(gq[0][1], gq[1][1]) * area;
        Ok((energy, [-(g1 + g2) + extra[0], g1 + extra[1], g2 + extra[2]]))
    }

    /// Per-triangle energies, `None` if some triangle has `J ≤ 0`.
    pub fn triangle_energies(&self, map: &DiscreteMap) -> Result<Option<Vec<f64>>> {
        let mesh = map.reference();
        let mut hint = 0;
        let mut parts = Vec::with_capacity(mesh.triangle_count());
        for t in 0..mesh.triangle_count() {
            let (e, _) = self.triangle(mesh.corners(t), map.image_corners(t), mesh.signed_area(t), &mut hint, false)?;
            if !e.is_finite() {
                return Ok(None);
            }
            parts.push(e);
        }
        Ok(Some(parts))
    }

    /// Energy change of one triangle when its image corners move by
    /// `disp`, computed from the increments of `‖M‖²` and `det M` so that
    /// it keeps relative accuracy for tiny moves. `None` if the moved
    /// triangle has `J ≤ 0`.
    fn triangle_change(&self, reference: [Point; 3], image: [Point; 3], disp: [Complex64; 3], area: f64, hint: &mut usize) -> Result<Option<f64>> {
        let moved = [image[0] + disp[0], image[1] + disp[1], image[2] + disp[2]];
        if orient2d(moved[0], moved[1], moved[2]) <= 0.0 {
            return Ok(None);
        }
        let dp_inv = inverse(edge_matrix(reference));
        let m = mul(edge_matrix(image), dp_inv);
        let dm = mul(edge_matrix(disp), dp_inv);
        let s = frob2(m);
        let ds = 2.0 * (m[0][0] * dm[0][0] + m[0][1] * dm[0][1] + m[1][0] * dm[1][0] + m[1][1] * dm[1][1]) + frob2(dm);
        let d = 0.5 * orient2d(image[0], image[1], image[2]) / area;
        let cof = cofactor(m);
        let dd = cof[0][0] * dm[0][0] + cof[0][1] * dm[0][1] + cof[1][0] * dm[1][0] + cof[1][1] * dm[1][1]
            + (dm[0][0] * dm[1][1] - dm[0][1] * dm[1][0]);
        if d <= 0.0 || d + dd <= 0.0 {
            return Ok(None);
        }
        let change = match self {
            Objective::MeanDistortion { p } => {
                let e = (s / (2.0 * d)).powf(*p) * area;
                e * (p * ((ds / s).ln_1p() - (dd / d).ln_1p())).exp_m1()
            }
            Objective::InverseEnergy { p } => {
                let e = (0.5 * s).powf(*p) * d.powf(1.0 - p) * area;
                e * (p * (ds / s).ln_1p() + (1.0 - p) * (dd / d).ln_1p()).exp_m1()
            }
            Objective::WeightedDirichlet { weight, quadrature } => {
                let mut sample = |c: [Point; 3]| -> Result<f64> {
                    match quadrature {
                        Quadrature::ThreePoint => {
                            let mut v = 0.0;
                            for n in three_point_nodes(c) {
                                v += weight.value(n, hint)? / 3.0;
                            }
                            Ok(v)
                        }
                        _ => weight.value((c[0] + c[1] + c[2]) / 3.0, hint),
                    }
                };
                let phi = sample(image)?;
                let phi_new = sample(moved)?;
                if !(phi_new > 0.0) {
                    return Err(Error::NonPositiveWeight { value: phi_new, at: (moved[0] + moved[1] + moved[2]) / 3.0 });
                }
                area * (phi_new * ds + (phi_new - phi) * s)
            }
        };
        Ok(Some(change))
    }

    /// Energy change when the image points move by `disp` (`None` if a
    /// triangle would flip), summed per triangle.
    pub fn energy_change(&self, map: &DiscreteMap, disp: &[Complex64]) -> Result<Option<f64>> {
        let mesh = map.reference();
        let mut hint = 0;
        let mut parts = Vec::with_capacity(mesh.triangle_count());
        for (t, tri) in mesh.triangles().iter().enumerate() {
            let d = [disp[tri[0]], disp[tri[1]], disp[tri[2]]];
            match self.triangle_change(mesh.corners(t), map.image_corners(t), d, mesh.signed_area(t), &mut hint)? {
                Some(c) => parts.push(c),
                None => return Ok(None),
            }
        }
        Ok(Some(stable_sum(parts.into_iter())))
    }

    /// Total energy (`+∞` if some triangle has `J ≤ 0`).
    pub fn energy(&self, map: &DiscreteMap) -> Result<f64> {
        Ok(self.triangle_energies(map)?.map_or(f64::INFINITY, |parts| stable_sum(parts.into_iter())))
    }

    /// Energy and per-vertex gradient.
    pub fn energy_and_gradient(&self, map: &DiscreteMap) -> Result<(f64, Vec<Complex64>)> {
        let (parts, grad) = self.parts_and_gradient(map)?;
        Ok((parts.map_or(f64::INFINITY, |p| stable_sum(p.into_iter())), grad))
    }

    fn parts_and_gradient(&self, map: &DiscreteMap) -> Result<(Option<Vec<f64>>, Vec<Complex64>)> {
        let mesh = map.reference();
        let mut grad = vec![Complex64::new(0.0, 0.0); mesh.vertex_count()];
        let mut hint = 0;
        let mut parts = Vec::with_capacity(mesh.triangle_count());
        for (t, tri) in mesh.triangles().iter().enumerate() {
            let (e, g) = self.triangle(mesh.corners(t), map.image_corners(t), mesh.signed_area(t), &mut hint, true)?;
            if !e.is_finite() {
                return Ok((None, grad));
            }
            parts.push(e);
            for k in 0..3 {
                grad[tri[k]] += g[k];
            }
        }
        Ok((Some(parts), grad))
    }

    /// Energy of the triangles around vertex `v` (for finite differences).
    pub fn star_energy(&self, map: &DiscreteMap, star: &[usize]) -> Result<f64> {
        let mesh = map.reference();
        let mut hint = star.first().copied().unwrap_or(0);
        let mut parts = Vec::with_capacity(star.len());
        for &t in star {
            let (e, _) = self.triangle(mesh.corners(t), map.image_corners(t), mesh.signed_area(t), &mut hint, false)?;
            parts.push(e);
        }
        Ok(stable_sum(parts.into_iter()))
    }

    /// Weight whose Hopf differential is holomorphic at critical points.
    pub fn hopf_weight(&self) -> WeightFn {
        match self {
            Objective::MeanDistortion { p } | Objective::InverseEnergy { p } => WeightFn::OwnDistortion { p: *p },
            Objective::WeightedDirichlet { weight, .. } => weight.clone(),
        }
    }

    pub fn quadrature(&self) -> Quadrature {
        match self {
            Objective::WeightedDirichlet { quadrature, .. } => *quadrature,
            _ => Quadrature::Centroid,
        }
    }
}
