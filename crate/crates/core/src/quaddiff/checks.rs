use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::trace::{phi_length, trace, Termination, TraceOptions, Trajectory, TrajectoryKind};
use super::QuadraticDifferential;
use crate::geometry::{triangulate, Domain};
use crate::{Complex64, Error, Point, Result};

/// Outcome of comparing a trajectory against perturbed competitors.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MinimalityRecord {
    pub traj_length: f64,
    pub min_competitor: f64,
    /// `min_competitor − traj_length`.
    pub margin: f64,
    pub competitors: usize,
    /// Competitors rejected for leaving the domain (and redrawn).
    pub discarded: usize,
    /// The trajectory has coincident endpoints.
    pub degenerate: bool,
}

const COMPETITOR_SAMPLES: usize = 512;

/// Compares the `|φ|^{1/2}`-length of `traj` with `competitors` random
/// curves through its endpoints: the chord plus sine bumps of total
/// amplitude at most a quarter of the domain diameter.
pub fn minimality_check(qd: &QuadraticDifferential, traj: &Trajectory, competitors: usize, seed: u64) -> Result<MinimalityRecord> {
    let (Some(&a), Some(&b)) = (traj.points.first(), traj.points.last()) else {
        return Err(Error::InvalidArgument("empty trajectory".into()));
    };
    let domain = qd.domain();
    let diam = domain.diameter();
    let tol = 1e-9 * diam;
    if !domain.contains(a, tol) || !domain.contains(b, tol) {
        return Err(Error::InvalidArgument("trajectory endpoints must lie in the closed domain".into()));
    }
    let traj_length = phi_length(qd, &traj.points);
    let chord = b - a;
    let degenerate = chord.norm() <= 1e-12 * diam;
    let normal = if degenerate { Complex64::new(0.0, 1.0) } else { Complex64::new(0.0, 1.0) * chord / chord.norm() };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let max_amp = diam / 4.0;
    let mut min_competitor = f64::INFINITY;
    let mut accepted = 0;
    let mut discarded = 0;
    while accepted < competitors {
        if discarded > 1000 * competitors.max(1) {
            return Err(Error::Numerical("competitors keep leaving the domain".into()));
        }
        let total = rng.gen_range(0.0..=max_amp);
        let mut amps = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let norm: f64 = amps.iter().map(|x: &f64| x.abs()).sum::<f64>().max(1e-300);
        for x in &mut amps {
            *x *= total / norm;
        }
        let curve: Vec<Point> = (0..=COMPETITOR_SAMPLES)
            .map(|k| {
                let t = k as f64 / COMPETITOR_SAMPLES as f64;
                let bump: f64 = amps
                    .iter()
                    .enumerate()
                    .map(|(j, c)| c * ((j + 1) as f64 * std::f64::consts::PI * t).sin())
                    .sum();
                a + chord * t + normal * bump
            })
            .collect();
        if !curve.iter().all(|&p| domain.contains(p, tol)) {
            discarded += 1;
            continue;
        }
        accepted += 1;
        min_competitor = min_competitor.min(phi_length(qd, &curve));
    }
    let margin = if competitors == 0 { 0.0 } else { min_competitor - traj_length };
    Ok(MinimalityRecord { traj_length, min_competitor, margin, competitors, discarded, degenerate })
}

/// One vertical line `Re ζ = xi` of a family, with its trajectory
/// components.
#[derive(Clone, Debug, Serialize)]
pub struct FamilyLine {
    pub xi: f64,
    pub trajectories: Vec<Trajectory>,
}

/// Vertical trajectories at uniform natural-parameter spacing.
#[derive(Clone, Debug, Serialize)]
pub struct Family {
    pub spacing: f64,
    pub xi_range: (f64, f64),
    pub lines: Vec<FamilyLine>,
}

/// Natural parameter along the closed boundary polygon, subdivided so each
/// piece is at most `max_piece` long.
fn boundary_zeta(qd: &QuadraticDifferential, max_piece: f64) -> (Vec<Point>, Vec<Complex64>) {
    let domain = qd.domain();
    let mut pts = Vec::new();
    for i in 0..domain.edge_count() {
        let (a, b) = domain.edge(i);
        let n = ((b - a).norm() / max_piece).ceil().max(1.0) as usize;
        for k in 0..n {
            pts.push(a + (b - a) * (k as f64 / n as f64));
        }
    }
    pts.push(pts[0]);
    let zeta = super::natural_parameter(qd, &pts);
    (pts, zeta)
}

/// Seeds vertical trajectories on every boundary crossing of the lines
/// `Re ζ = ξ_i`, `ξ_i` the midpoints of a uniform partition of the
/// boundary's `Re ζ` range with spacing at most `spacing`, traces them and
/// removes duplicates (each component is found from both of its ends).
/// φ must have no zeros in the closed domain.
pub fn vertical_family(qd: &QuadraticDifferential, spacing: f64, step: f64) -> Result<Family> {
    if !(spacing > 0.0) {
        return Err(Error::InvalidArgument("spacing must be positive".into()));
    }
    let domain = qd.domain();
    let diam = domain.diameter();
    if let Some(c) = qd.critical_points().iter().find(|&&c| domain.contains(c, 1e-9 * diam)) {
        return Err(Error::InvalidArgument(format!("φ has a zero at {c} in the domain")));
    }
    let (pts, zeta) = boundary_zeta(qd, (spacing / 8.0).min(diam / 64.0));
    let closure = (zeta[zeta.len() - 1] - zeta[0]).norm();
    if closure > 1e-8 * zeta.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0) {
        return Err(Error::Numerical(format!("natural parameter not single-valued on the boundary (mismatch {closure:e})")));
    }
    let xs: Vec<f64> = zeta.iter().map(|z| z.re).collect();
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let n = ((hi - lo) / spacing).ceil().max(1.0) as usize;
    let delta = (hi - lo) / n as f64;
    let opts = TraceOptions::new(step);
    let mut lines = Vec::with_capacity(n);
    for i in 0..n {
        let xi = lo + (i as f64 + 0.5) * delta;
        let mut seeds = Vec::new();
        for j in 0..pts.len() - 1 {
            let (a, b) = (xs[j] - xi, xs[j + 1] - xi);
            if a == 0.0 {
                seeds.push(pts[j]);
            } else if b != 0.0 && (a < 0.0) != (b < 0.0) {
                seeds.push(refine_crossing(qd, pts[j], pts[j + 1], zeta[j], xi));
            }
        }
        let mut trajectories: Vec<Trajectory> = Vec::new();
        for s in seeds {
            if trajectories.iter().any(|t| has_end_near(t, s, 1e-6 * diam)) {
                continue;
            }
            let t = trace(qd, s, TrajectoryKind::Vertical, &opts)?;
            if t.ends != [Termination::Boundary, Termination::Boundary] || t.points.len() < 2 {
                continue;
            }
            trajectories.push(t);
        }
        lines.push(FamilyLine { xi, trajectories });
    }
    Ok(Family { spacing: delta, xi_range: (lo, hi), lines })
}

fn has_end_near(t: &Trajectory, p: Point, tol: f64) -> bool {
    let first = t.points[0];
    let last = t.points[t.points.len() - 1];
    (first - p).norm() <= tol || (last - p).norm() <= tol
}

/// Point on the segment `[a, b]` where `Re ζ = xi`, by Newton iteration on
/// the segment parameter (ζ integrated from `a`, where it equals `za`).
fn refine_crossing(qd: &QuadraticDifferential, a: Point, b: Point, za: Complex64, xi: f64) -> Point {
    let d = b - a;
    let root_a = qd.eval(a).sqrt();
    let zeta_at = |s: f64| -> (Complex64, Complex64) {
        let mut root = root_a;
        let m = 8;
        let mut acc = Complex64::new(0.0, 0.0);
        for k in 0..m {
            for &(t, w) in &[(0.112_701_665_379_258_3, 5.0 / 18.0), (0.5, 8.0 / 18.0), (0.887_298_334_620_741_7, 5.0 / 18.0)] {
                root = qd.sqrt_near(a + d * (s * (k as f64 + t) / m as f64), root);
                acc += root * w;
            }
        }
        let end_root = qd.sqrt_near(a + d * s, root);
        (za + acc * d * (s / m as f64), end_root * d)
    };
    // Match the branch used on the boundary: ζ' along the segment.
    let (mut lo, mut hi) = (0.0, 1.0);
    let f_lo = zeta_at(0.0).0.re - xi;
    let mut s = 0.5;
    for _ in 0..60 {
        let (z, dz) = zeta_at(s);
        let f = z.re - xi;
        if (f < 0.0) == (f_lo < 0.0) {
            lo = s;
        } else {
            hi = s;
        }
        let newton = s - f / dz.re;
        let next = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if (next - s).abs() < 1e-16 {
            s = next;
            break;
        }
        s = next;
    }
    a + d * s
}

/// Per-trajectory integrals `∫ |φ|^{1/2} F |dz|` and `∫ |φ|^{1/2} G |dz|`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LineComparison {
    pub xi: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FubiniRecord {
    pub spacing: f64,
    /// `∫_U |φ| F` by triangle quadrature.
    pub domain_lhs: f64,
    /// `∫_U |φ| G` by triangle quadrature.
    pub domain_rhs: f64,
    /// `Σ δ ∫_γ |φ|^{1/2} F`: the family's reconstruction of `domain_lhs`.
    pub family_lhs: f64,
    pub family_rhs: f64,
    pub line_comparisons: Vec<LineComparison>,
    pub all_lines_hold: bool,
    /// Largest `Re ζ` interval not represented by a traced line.
    pub coverage_gap: f64,
    /// `max(|family_lhs − domain_lhs|, |family_rhs − domain_rhs|)`.
    pub reconstruction_error: f64,
}

impl FubiniRecord {
    /// Whether `domain_lhs ≤ domain_rhs + tol`.
    pub fn domain_inequality_holds(&self, tol: f64) -> bool {
        self.domain_lhs <= self.domain_rhs + tol
    }
}

fn line_integral(qd: &QuadraticDifferential, curve: &[Point], f: &dyn Fn(Point) -> f64) -> f64 {
    const GL: [(f64, f64); 3] = [(0.112_701_665_379_258_3, 5.0 / 18.0), (0.5, 8.0 / 18.0), (0.887_298_334_620_741_7, 5.0 / 18.0)];
    curve
        .windows(2)
        .map(|w| {
            let d = w[1] - w[0];
            let s: f64 = GL.iter().map(|&(t, wt)| {
                let p = w[0] + d * t;
                wt * qd.eval(p).norm().sqrt() * f(p)
            }).sum();
            s * d.norm()
        })
        .sum()
}

// Degree-5 seven-point rule on the reference triangle.
const DUNAVANT5: [(f64, f64, f64); 7] = [
    (1.0 / 3.0, 1.0 / 3.0, 0.225),
    (0.059_715_871_789_770, 0.470_142_064_105_115, 0.132_394_152_788_506),
    (0.470_142_064_105_115, 0.059_715_871_789_770, 0.132_394_152_788_506),
    (0.470_142_064_105_115, 0.470_142_064_105_115, 0.132_394_152_788_506),
    (0.797_426_985_353_087, 0.101_286_507_323_456, 0.125_939_180_544_827),
    (0.101_286_507_323_456, 0.797_426_985_353_087, 0.125_939_180_544_827),
    (0.101_286_507_323_456, 0.101_286_507_323_456, 0.125_939_180_544_827),
];

/// `∫_D g` over a polygonal domain: triangulation with edge `edge` and a
/// degree-5 rule per triangle.
pub fn domain_integral(domain: &Domain, edge: f64, g: &dyn Fn(Point) -> f64) -> Result<f64> {
    let mesh = triangulate(domain, edge)?;
    let mut total = 0.0;
    for t in 0..mesh.triangle_count() {
        let [a, b, c] = mesh.corners(t);
        let area = mesh.signed_area(t);
        let s: f64 = DUNAVANT5.iter().map(|&(l1, l2, w)| w * g(a * (1.0 - l1 - l2) + b * l1 + c * l2)).sum();
        total += s * area;
    }
    Ok(total)
}

/// Compares `∫_γ |φ|^{1/2} F ≤ ∫_γ |φ|^{1/2} G` on every line of the family
/// with `∫_U |φ| F ≤ ∫_U |φ| G` over the domain. Fails with
/// [`Error::CoverageGap`] when the family leaves a `Re ζ` gap wider than
/// twice its spacing.
pub fn fubini_check(
    qd: &QuadraticDifferential,
    f: &dyn Fn(Point) -> f64,
    g: &dyn Fn(Point) -> f64,
    family: &Family,
    quad_edge: f64,
) -> Result<FubiniRecord> {
    let delta = family.spacing;
    let mut covered: Vec<f64> = family.lines.iter().filter(|l| !l.trajectories.is_empty()).map(|l| l.xi).collect();
    covered.sort_by(f64::total_cmp);
    let (lo, hi) = family.xi_range;
    let mut gap: f64 = 0.0;
    let mut prev = lo;
    for &x in &covered {
        gap = gap.max(x - prev);
        prev = x;
    }
    gap = gap.max(hi - prev);
    if gap > 2.0 * delta {
        return Err(Error::CoverageGap { gap, allowed: 2.0 * delta });
    }
    let mut comparisons = Vec::new();
    let (mut fam_l, mut fam_r) = (0.0, 0.0);
    for line in &family.lines {
        let (mut l, mut r) = (0.0, 0.0);
        for t in &line.trajectories {
            l += line_integral(qd, &t.points, f);
            r += line_integral(qd, &t.points, g);
        }
        fam_l += delta * l;
        fam_r += delta * r;
        comparisons.push(LineComparison { xi: line.xi, lhs: l, rhs: r, holds: l <= r });
    }
    let domain_lhs = domain_integral(qd.domain(), quad_edge, &|p| qd.eval(p).norm() * f(p))?;
    let domain_rhs = domain_integral(qd.domain(), quad_edge, &|p| qd.eval(p).norm() * g(p))?;
    let all_lines_hold = comparisons.iter().all(|c| c.holds);
    Ok(FubiniRecord {
        spacing: delta,
        domain_lhs,
        domain_rhs,
        family_lhs: fam_l,
        family_rhs: fam_r,
        line_comparisons: comparisons,
        all_lines_hold,
        coverage_gap: gap,
        reconstruction_error: (fam_l - domain_lhs).abs().max((fam_r - domain_rhs).abs()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fubini_unit_square() {
        let qd = QuadraticDifferential::parse("1", Domain::rectangle(1.0, 1.0).unwrap()).unwrap();
        let fam = vertical_family(&qd, 0.1, 1e-2).unwrap();
        assert_eq!(fam.lines.len(), 10);
        assert!(fam.lines.iter().all(|l| l.trajectories.len() == 1));
        let r = fubini_check(&qd, &|p| p.re, &|_| 1.0, &fam, 0.25).unwrap();
        assert!((r.domain_lhs - 0.5).abs() < 1e-12 && (r.domain_rhs - 1.0).abs() < 1e-12);
        assert!(r.reconstruction_error < 1e-12, "{r:?}");
        for c in &r.line_comparisons {
            assert!((c.lhs - c.xi).abs() < 1e-12 && (c.rhs - 1.0).abs() < 1e-12);
        }
        assert!(r.all_lines_hold);
    }

    #[test]
    fn gaps_are_reported() {
        let qd = QuadraticDifferential::parse("1", Domain::rectangle(1.0, 1.0).unwrap()).unwrap();
        let mut fam = vertical_family(&qd, 0.1, 1e-2).unwrap();
        for l in &mut fam.lines[3..6] {
            l.trajectories.clear();
        }
        assert!(matches!(fubini_check(&qd, &|_| 1.0, &|_| 1.0, &fam, 0.25), Err(Error::CoverageGap { .. })));
    }

    #[test]
    fn straight_chord_is_minimal() {
        let qd = QuadraticDifferential::parse("1", Domain::rectangle(1.0, 1.0).unwrap()).unwrap();
        let t = trace(&qd, Point::new(0.5, 0.2), TrajectoryKind::Vertical, &TraceOptions::new(1e-2)).unwrap();
        let r = minimality_check(&qd, &t, 200, 3).unwrap();
        assert!(r.margin >= 0.0, "{r:?}");
        assert!(!r.degenerate);
    }

    #[test]
    fn degenerate_trajectory_flagged() {
        let qd = QuadraticDifferential::parse("1", Domain::rectangle(1.0, 1.0).unwrap()).unwrap();
        let p = Point::new(0.5, 0.5);
        let t = Trajectory {
            kind: TrajectoryKind::Vertical,
            points: vec![p, p],
            start_index: 0,
            ends: [Termination::StepLimit; 2],
            phi_length: 0.0,
            near_tangential: false,
        };
        let r = minimality_check(&qd, &t, 20, 1).unwrap();
        assert!(r.degenerate && r.margin >= 0.0);
    }
}
