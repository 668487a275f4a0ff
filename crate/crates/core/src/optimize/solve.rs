use serde::Serialize;

use super::objective::Objective;
use super::SolveOptions;
use crate::hopf::{holomorphy_residual, hopf_differential};
use crate::mapping::DiscreteMap;
use crate::sparse::DirichletSolver;
use crate::{Complex64, Error, Point, Result};

/// Outcome of a descent run.
#[derive(Clone, Debug, Serialize)]
pub struct SolveReport {
    #[serde(skip)]
    pub map: DiscreteMap,
    pub functional: String,
    pub p: Option<f64>,
    pub energy: f64,
    /// `(iteration, energy)` after every accepted step, starting at 0.
    pub energy_trace: Vec<(usize, f64)>,
    pub grad_norm: f64,
    pub tol_grad: f64,
    /// Largest normalized loop residual of the map's Hopf differential.
    pub hopf_residual: f64,
    /// Area-weighted mean of the same residuals.
    pub hopf_residual_mean: f64,
    /// Largest residual away from the boundary layer.
    pub hopf_residual_interior: f64,
    pub min_j: f64,
    pub iterations: usize,
    pub converged: bool,
    pub stop_reason: String,
    /// `map` is the inverse of the problem's unknown.
    pub inverse: bool,
}

impl SolveReport {
    /// The problem's unknown: `map` itself, or its inverse.
    pub fn unknown(&self) -> Result<DiscreteMap> {
        if self.inverse {
            self.map.invert()
        } else {
            Ok(self.map.clone())
        }
    }
}

/// Smallest positive root of `a x² + b x + c`, `∞` if none.
fn smallest_positive_root(a: f64, b: f64, c: f64) -> f64 {
    let scale = a.abs().max(b.abs()).max(c.abs());
    if scale == 0.0 {
        return f64::INFINITY;
    }
    if a.abs() <= 1e-14 * scale {
        return if b.abs() > 0.0 && -c / b > 0.0 { -c / b } else { f64::INFINITY };
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return f64::INFINITY;
    }
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    let mut best = f64::INFINITY;
    for r in [q / a, if q != 0.0 { c / q } else { f64::INFINITY }] {
        if r > 0.0 && r < best {
            best = r;
        }
    }
    best
}

/// Largest step keeping every image area at least 0.1 of its current value
/// (and at most 0.9 of the step that would flip a triangle).
fn feasible_step(map: &DiscreteMap, dir: &[Complex64]) -> f64 {
    let mesh = map.reference();
    let q = map.targets();
    let mut alpha = f64::INFINITY;
    for tri in mesh.triangles() {
        let [i, j, k] = *tri;
        let (e1, e2) = (q[j] - q[i], q[k] - q[i]);
        let (f1, f2) = (dir[j] - dir[i], dir[k] - dir[i]);
        let cross = |a: Complex64, b: Complex64| a.re * b.im - a.im * b.re;
        let a0 = cross(e1, e2);
        let b = cross(e1, f2) + cross(f1, e2);
        let c = cross(f1, f2);
        let flip = smallest_positive_root(c, b, a0);
        let floor = smallest_positive_root(c, b, 0.9 * a0);
        alpha = alpha.min(floor).min(0.9 * flip);
    }
    alpha
}

fn free_norm(g: &[Complex64], fixed: &[bool]) -> f64 {
    g.iter().zip(fixed).filter(|(_, &f)| !f).map(|(x, _)| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Preconditioned gradient descent on the free vertices of `start`.
///
/// Directions are `−(2L)⁻¹ g`, `L` the cotangent stiffness matrix (an exact
/// Newton step for the unweighted Dirichlet energy). Steps are capped by
/// [`feasible_step`] and chosen by Armijo backtracking; only strict
/// decreases are accepted.
pub fn descend(objective: &Objective, start: DiscreteMap, fixed: &[bool], options: &SolveOptions) -> Result<SolveReport> {
    objective.validate()?;
    let mesh = start.reference().clone();
    if start.min_jacobian() <= 0.0 {
        return Err(Error::NotInvertible { triangles: start.derivatives().flipped() });
    }
    let solver = DirichletSolver::new(&mesh, fixed)?;
    let free = solver.free_vertices().to_vec();
    let diam = {
        let (lo, hi) = bbox(start.targets());
        (hi - lo).norm()
    };
    let mut map = start;
    let (mut energy, mut grad) = objective.energy_and_gradient(&map)?;
    if !energy.is_finite() {
        return Err(Error::Numerical("initial energy is not finite".into()));
    }
    let mut trace = vec![(0, energy)];
    let mut alpha_prev: f64 = 1.0;
    let mut iterations = 0;
    let mut converged = false;
    let mut stop_reason = String::from("iteration limit");
    let mut tol = options.tol_grad.unwrap_or(1e-8 * energy / diam);
    let mut gnorm = free_norm(&grad, fixed);
    while iterations < options.max_iters {
        tol = options.tol_grad.unwrap_or(1e-8 * energy / diam);
        if gnorm <= tol {
            converged = true;
            stop_reason = "gradient tolerance".into();
            break;
        }
        let rhs: Vec<Point> = free.iter().map(|&v| grad[v]).collect();
        let step = solver.solve(&rhs);
        let mut dir = vec![Complex64::new(0.0, 0.0); mesh.vertex_count()];
        for (k, &v) in free.iter().enumerate() {
            dir[v] = -step[k] * 0.5;
        }
        let slope: f64 = free.iter().map(|&v| (grad[v].conj() * dir[v]).re).sum();
        if !(slope < 0.0) {
            stop_reason = "not a descent direction".into();
            break;
        }
        let mut alpha = (2.0 * alpha_prev).min(feasible_step(&map, &dir));
        let mut accepted = None;
        for _ in 0..60 {
            let disp: Vec<Complex64> = dir.iter().map(|d| d * alpha).collect();
            // The decrease is accumulated per triangle from the displacement;
            // differencing two totals would lose it to roundoff near
            // convergence.
            if let Some(delta) = objective.energy_change(&map, &disp)? {
                if delta < 0.0 && delta <= options.armijo * alpha * slope {
                    let targets: Vec<Point> = map.targets().iter().zip(&disp).map(|(q, d)| q + d).collect();
                    let trial = DiscreteMap::new(mesh.clone(), targets)?;
                    if trial.min_jacobian() > 0.0 {
                        accepted = Some((trial, delta));
                        break;
                    }
                }
            }
            alpha *= 0.5;
        }
        let Some((next, delta)) = accepted else {
            stop_reason = "line search stalled".into();
            break;
        };
        map = next;
        let (_, g) = objective.energy_and_gradient(&map)?;
        energy += delta;
        grad = g;
        gnorm = free_norm(&grad, fixed);
        alpha_prev = alpha;
        iterations += 1;
        trace.push((iterations, energy));
    }
    if !converged && gnorm <= tol {
        converged = true;
        stop_reason = "gradient tolerance".into();
    }
    let field = hopf_differential(&map, &objective.hopf_weight(), objective.quadrature())?;
    let residual = holomorphy_residual(&field).ok();
    Ok(SolveReport {
        functional: objective.label().into(),
        p: objective.p(),
        energy,
        energy_trace: trace,
        grad_norm: gnorm,
        tol_grad: tol,
        hopf_residual: residual.as_ref().map_or(0.0, |r| r.max_rel),
        hopf_residual_mean: residual.as_ref().map_or(0.0, |r| r.mean_rel),
        hopf_residual_interior: residual.as_ref().map_or(0.0, |r| r.interior_max_rel),
        min_j: map.min_jacobian(),
        iterations,
        converged,
        stop_reason,
        inverse: false,
        map,
    })
}

fn bbox(points: &[Point]) -> (Point, Point) {
    let mut lo = points[0];
    let mut hi = points[0];
    for p in points {
        lo = Point::new(lo.re.min(p.re), lo.im.min(p.im));
        hi = Point::new(hi.re.max(p.re), hi.im.max(p.im));
    }
    (lo, hi)
}

