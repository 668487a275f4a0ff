use serde::{Deserialize, Serialize};

use super::QuadraticDifferential;
use crate::{Complex64, Error, Point, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrajectoryKind {
    /// `γ'² φ(γ) < 0`.
    Vertical,
    /// `γ'² φ(γ) > 0`.
    Horizontal,
}

impl TrajectoryKind {
    /// Unit factor `c` in `dz/ds = c / √φ`.
    fn factor(self) -> Complex64 {
        match self {
            TrajectoryKind::Vertical => Complex64::new(0.0, 1.0),
            TrajectoryKind::Horizontal => Complex64::new(1.0, 0.0),
        }
    }
}

impl std::str::FromStr for TrajectoryKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "vertical" => Ok(Self::Vertical),
            "horizontal" => Ok(Self::Horizontal),
            _ => Err(Error::InvalidArgument(format!("unknown trajectory kind {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    Boundary,
    CriticalPoint,
    StepLimit,
}

/// A traced trajectory, ordered from one end to the other.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub kind: TrajectoryKind,
    pub points: Vec<Point>,
    /// Index of the start point within `points`.
    pub start_index: usize,
    /// Why each end stopped: `[first point, last point]`.
    pub ends: [Termination; 2],
    pub phi_length: f64,
    /// An end left the boundary at a grazing angle (|sin| < 1e-3).
    pub near_tangential: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceOptions {
    /// Step in the `|φ|^{1/2}` metric.
    pub step: f64,
    /// Step limit per direction.
    pub max_steps: usize,
}

impl TraceOptions {
    pub fn new(step: f64) -> Self {
        Self { step, max_steps: 1_000_000 }
    }
}

/// Direction field `c/√φ` on the branch continuing `prev`.
fn direction(qd: &QuadraticDifferential, c: Complex64, z: Point, prev: Complex64) -> Result<Complex64> {
    let d = c / qd.eval(z).sqrt();
    let cos = (d * prev.conj()).re / (d.norm() * prev.norm());
    if !cos.is_finite() || cos.abs() < 0.5 {
        return Err(Error::BranchFlip { point: z });
    }
    Ok(if cos < 0.0 { -d } else { d })
}

fn rk4(qd: &QuadraticDifferential, c: Complex64, z: Point, prev: Complex64, ds: f64) -> Result<(Point, Complex64)> {
    let k1 = direction(qd, c, z, prev)?;
    let k2 = direction(qd, c, z + k1 * (0.5 * ds), k1)?;
    let k3 = direction(qd, c, z + k2 * (0.5 * ds), k1)?;
    let k4 = direction(qd, c, z + k3 * ds, k1)?;
    Ok((z + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (ds / 6.0), k1))
}

struct HalfTrace {
    points: Vec<Point>,
    end: Termination,
    grazing: bool,
}

fn trace_half(qd: &QuadraticDifferential, kind: TrajectoryKind, start: Point, initial: Complex64, opts: &TraceOptions) -> Result<HalfTrace> {
    let c = kind.factor();
    let domain = qd.domain();
    let phi_start = qd.eval(start).norm();
    let mut z = start;
    let mut prev = initial;
    let mut points = vec![start];
    for _ in 0..opts.max_steps {
        let phi = qd.eval(z).norm();
        // Keep Euclidean steps bounded where |φ| drops below its start value.
        let ds = opts.step * (phi / phi_start).sqrt().min(1.0);
        let (next, k1) = rk4(qd, c, z, prev, ds)?;
        prev = k1;
        if domain.signed_distance(next) <= 0.0 {
            // Bisect the step length for the boundary crossing.
            let (mut lo, mut hi) = (0.0, 1.0);
            let mut inside = z;
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                let (p, _) = rk4(qd, c, z, prev, mid * ds)?;
                if domain.signed_distance(p) > 0.0 {
                    lo = mid;
                    inside = p;
                } else {
                    hi = mid;
                }
                if hi - lo < 1e-17 {
                    break;
                }
            }
            let (exit, _) = rk4(qd, c, z, prev, hi * ds)?;
            let end = if (exit - inside).norm() < 1e-300 { inside } else { exit };
            if (end - z).norm() > 0.0 {
                points.push(end);
            }
            let grazing = is_grazing(qd, end, prev);
            return Ok(HalfTrace { points, end: Termination::Boundary, grazing });
        }
        z = next;
        points.push(z);
        let euclid = ds / qd.eval(z).norm().sqrt();
        if qd.is_critical(z) || qd.critical_distance(z) < euclid {
            return Ok(HalfTrace { points, end: Termination::CriticalPoint, grazing: false });
        }
    }
    Ok(HalfTrace { points, end: Termination::StepLimit, grazing: false })
}

fn is_grazing(qd: &QuadraticDifferential, p: Point, dir: Complex64) -> bool {
    let domain = qd.domain();
    let mut best = (f64::INFINITY, Complex64::new(1.0, 0.0));
    for i in 0..domain.edge_count() {
        let (a, b) = domain.edge(i);
        let d = crate::geometry::segment_distance(p, a, b);
        if d < best.0 {
            best = (d, b - a);
        }
    }
    let t = best.1 / best.1.norm();
    let u = dir / dir.norm();
    (t.conj() * u).im.abs() < 1e-3
}

/// Traces the trajectory through `start` in both directions until each end
/// reaches the boundary, a critical ball, or the step limit.
pub fn trace(qd: &QuadraticDifferential, start: Point, kind: TrajectoryKind, opts: &TraceOptions) -> Result<Trajectory> {
    if !(opts.step > 0.0) || !opts.step.is_finite() {
        return Err(Error::InvalidArgument(format!("step must be positive, got {}", opts.step)));
    }
    let domain = qd.domain();
    if !domain.contains(start, 1e-12 * domain.diameter()) {
        return Err(Error::InvalidArgument(format!("start {start} lies outside the domain")));
    }
    if qd.is_critical(start) {
        return Err(Error::CriticalStart { point: start, modulus: qd.eval(start).norm() });
    }
    let d0 = kind.factor() / qd.eval(start).sqrt();
    let fwd = trace_half(qd, kind, start, d0, opts)?;
    let bwd = trace_half(qd, kind, start, -d0, opts)?;
    let mut points: Vec<Point> = bwd.points.iter().rev().copied().collect();
    let start_index = points.len() - 1;
    points.extend_from_slice(&fwd.points[1..]);
    let phi_length = phi_length(qd, &points);
    Ok(Trajectory {
        kind,
        points,
        start_index,
        ends: [bwd.end, fwd.end],
        phi_length,
        near_tangential: fwd.grazing || bwd.grazing,
    })
}

const GL2: [f64; 2] = [0.211_324_865_405_187_1, 0.788_675_134_594_812_9];

/// `∫ |φ|^{1/2} |dz|` along a polyline by two-point Gauss–Legendre per
/// segment.
pub fn phi_length(qd: &QuadraticDifferential, curve: &[Point]) -> f64 {
    curve
        .windows(2)
        .map(|w| {
            let d = w[1] - w[0];
            let s: f64 = GL2.iter().map(|&t| qd.eval(w[0] + d * t).norm().sqrt()).sum();
            0.5 * s * d.norm()
        })
        .sum()
}

/// [`phi_length`] with every segment split into `n` equal pieces.
pub fn phi_length_subdivided(qd: &QuadraticDifferential, curve: &[Point], n: usize) -> f64 {
    let n = n.max(1);
    let mut fine = Vec::with_capacity((curve.len().max(1) - 1) * n + 1);
    for w in curve.windows(2) {
        for k in 0..n {
            fine.push(w[0] + (w[1] - w[0]) * (k as f64 / n as f64));
        }
    }
    if let Some(&last) = curve.last() {
        fine.push(last);
    }
    phi_length(qd, &fine)
}

const GL3: [(f64, f64); 3] = [
    (0.112_701_665_379_258_3, 5.0 / 18.0),
    (0.5, 8.0 / 18.0),
    (0.887_298_334_620_741_7, 5.0 / 18.0),
];

/// `ζ(z_k) − ζ(z_0)` with `ζ = ∫ √φ dz` integrated along the polyline,
/// branch chosen by continuity from the principal root at `z_0`.
pub fn natural_parameter(qd: &QuadraticDifferential, curve: &[Point]) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(curve.len());
    let mut zeta = Complex64::new(0.0, 0.0);
    out.push(zeta);
    let Some(&first) = curve.first() else {
        return Vec::new();
    };
    let mut root = qd.eval(first).sqrt();
    for w in curve.windows(2) {
        let d = w[1] - w[0];
        let mut s = Complex64::new(0.0, 0.0);
        for &(t, wt) in &GL3 {
            root = qd.sqrt_near(w[0] + d * t, root);
            s += root * wt;
        }
        root = qd.sqrt_near(w[1], root);
        zeta += s * d;
        out.push(zeta);
    }
    out
}

/// Deviation of the natural-parameter image from a straight line:
/// `max |Re Δζ| / max |Δζ|` for vertical, `max |Im Δζ| / max |Δζ|` for
/// horizontal trajectories.
pub fn straightness(qd: &QuadraticDifferential, traj: &Trajectory) -> f64 {
    let zeta = natural_parameter(qd, &traj.points);
    let span = zeta.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if span == 0.0 {
        return 0.0;
    }
    let off = zeta
        .iter()
        .map(|z| match traj.kind {
            TrajectoryKind::Vertical => z.re.abs(),
            TrajectoryKind::Horizontal => z.im.abs(),
        })
        .fold(0.0, f64::max);
    off / span
}
