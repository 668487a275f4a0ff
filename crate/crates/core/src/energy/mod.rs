//! The four energy functionals and the relations between them.
//!
//! Constants are stated relative to `‖Dh‖² = 2(|h_z|² + |h_z̄|²)`:
//! `mean_distortion` carries 1, `inverse_energy` carries ½ and
//! `weighted_dirichlet` carries the full Hilbert–Schmidt norm, i.e. 2 in
//! front of `|h_z|² + |h_z̄|²`.

mod weight;

use serde::Serialize;

use crate::mapping::DiscreteMap;
use crate::{Error, Result};

pub use weight::{clip_convex, polygon_area_centroid, Quadrature, WeightFn, WeightSpec};
pub(crate) use weight::three_point_nodes;

/// Value of a functional with its per-triangle contributions.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnergyBreakdown {
    pub total: f64,
    pub per_triangle: Vec<f64>,
    /// Factor in front of `|D·|²` relative to the Hilbert–Schmidt convention.
    pub convention_constant: f64,
    /// Triangles with `J ≤ 0` (their contribution is `+∞`).
    pub offenders: Vec<usize>,
}

impl EnergyBreakdown {
    fn from_parts(per_triangle: Vec<f64>, convention_constant: f64, offenders: Vec<usize>) -> Self {
        // Fixed left-to-right order keeps totals reproducible.
        let total = per_triangle.iter().sum();
        Self { total, per_triangle, convention_constant, offenders }
    }

    pub fn is_finite(&self) -> bool {
        self.total.is_finite()
    }
}

/// `Σ_T K_T^p · area(T)`, with `K = 1` on `J = 0` and `K = ∞` on `J < 0`.
pub fn mean_distortion(f: &DiscreteMap, p: f64) -> EnergyBreakdown {
    let mut per = Vec::with_capacity(f.reference().triangle_count());
    let mut offenders = Vec::new();
    for t in 0..f.reference().triangle_count() {
        let d = f.triangle_derivs(t);
        if d.jacobian < 0.0 {
            offenders.push(t);
        }
        per.push(d.distortion.powf(p) * d.area);
    }
    EnergyBreakdown::from_parts(per, 1.0, offenders)
}

/// Like [`mean_distortion`] but every triangle with `J ≤ 0` costs `+∞`:
/// the form used when minimizing over diffeomorphisms.
pub fn mean_distortion_barrier(f: &DiscreteMap, p: f64) -> EnergyBreakdown {
    let mut e = mean_distortion(f, p);
    for t in 0..e.per_triangle.len() {
        if f.triangle_derivs(t).jacobian <= 0.0 && !e.offenders.contains(&t) {
            e.offenders.push(t);
            e.per_triangle[t] = f64::INFINITY;
        }
    }
    e.offenders.sort_unstable();
    e.total = e.per_triangle.iter().sum();
    e
}

/// `½ Σ_T K_T^{p−1} ‖Dh_T‖² · area(T)`; `+∞` if any `J ≤ 0`.
pub fn inverse_energy(h: &DiscreteMap, p: f64) -> EnergyBreakdown {
    let mut per = Vec::with_capacity(h.reference().triangle_count());
    let mut offenders = Vec::new();
    for t in 0..h.reference().triangle_count() {
        let d = h.triangle_derivs(t);
        if d.jacobian <= 0.0 {
            offenders.push(t);
            per.push(f64::INFINITY);
        } else {
            per.push(d.distortion.powf(p - 1.0) * 0.5 * d.hs_norm_sqr() * d.area);
        }
    }
    EnergyBreakdown::from_parts(per, 0.5, offenders)
}

/// Per-triangle weights `Φ_T`: the average of Φ over each image triangle
/// (or `K_h^{p−1}` for [`WeightFn::OwnDistortion`]).
pub fn triangle_weights(h: &DiscreteMap, phi: &WeightFn, quad: Quadrature) -> Result<Vec<f64>> {
    let n = h.reference().triangle_count();
    let mut out = Vec::with_capacity(n);
    let mut hint = 0;
    for t in 0..n {
        let value = match phi {
            WeightFn::OwnDistortion { p } => h.triangle_derivs(t).distortion.powf(p - 1.0),
            _ => phi.triangle_average(h.image_corners(t), quad, &mut hint)?,
        };
        if !(value > 0.0) {
            return Err(Error::NonPositiveWeight { value, at: h.image_centroid(t) });
        }
        out.push(value);
    }
    Ok(out)
}

/// `Σ_T Φ_T · 2(|h_z|² + |h_z̄|²) · area(T)`.
pub fn weighted_dirichlet(h: &DiscreteMap, phi: &WeightFn, quad: Quadrature) -> Result<EnergyBreakdown> {
    let weights = triangle_weights(h, phi, quad)?;
    let per = weights
        .iter()
        .enumerate()
        .map(|(t, w)| {
            let d = h.triangle_derivs(t);
            w * d.hs_norm_sqr() * d.area
        })
        .collect();
    Ok(EnergyBreakdown::from_parts(per, 2.0, Vec::new()))
}

/// Both sides of the Hölder comparison
/// `𝓔^Φ[g] ≤ 2 𝓔_p[f]^{(p−1)/p} 𝓔_p[g⁻¹]^{1/p}` with `Φ = K_f^{p−1}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HolderRecord {
    pub p: f64,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs − lhs`; nonnegative up to roundoff.
    pub gap: f64,
}

impl HolderRecord {
    pub fn relative_gap(&self) -> f64 {
        self.gap / self.rhs.abs().max(f64::MIN_POSITIVE)
    }
}

/// `f: Y → X` and `g: X → Y`. The weight `K_f^{p−1}` is integrated exactly
/// over the image triangles of `g`, which makes the discrete inequality an
/// exact Hölder inequality (no quadrature slack).
pub fn holder_check(f: &DiscreteMap, g: &DiscreteMap, p: f64) -> Result<HolderRecord> {
    if !(p > 1.0) {
        return Err(Error::InvalidArgument(format!("Hölder comparison needs p > 1, got {p}")));
    }
    let phi = WeightFn::pullback(f.clone(), p);
    let lhs = weighted_dirichlet(g, &phi, Quadrature::Exact)?.total;
    let g_inv = g.invert()?;
    let ef = mean_distortion(f, p).total;
    let eg = mean_distortion(&g_inv, p).total;
    let rhs = 2.0 * ef.powf((p - 1.0) / p) * eg.powf(1.0 / p);
    Ok(HolderRecord { p, lhs, rhs, gap: rhs - lhs })
}

/// Summary written by the CLI.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnergyReport {
    pub functional: String,
    pub p: Option<f64>,
    pub convention_constant: f64,
    pub total: f64,
    pub min_density: f64,
    pub max_density: f64,
}

impl EnergyReport {
    pub fn new(functional: &str, p: Option<f64>, map: &DiscreteMap, e: &EnergyBreakdown) -> Self {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (t, v) in e.per_triangle.iter().enumerate() {
            let density = v / map.triangle_derivs(t).area;
            lo = lo.min(density);
            hi = hi.max(density);
        }
        Self {
            functional: functional.to_string(),
            p,
            convention_constant: e.convention_constant,
            total: e.total,
            min_density: lo,
            max_density: hi,
        }
    }
}
