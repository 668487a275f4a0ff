use std::sync::Arc;

use rand::Rng;
use serde::Serialize;

use super::objective::Objective;
use super::solve::{descend, SolveReport};
use super::{harmonic_extension, init, minimize, run_rng, Functional, Init, Problem, SolveOptions};
use crate::geometry::{triangulate, Domain, MeshTopology};
use crate::hopf::{holomorphy_residual, hopf_differential};
use crate::mapping::DiscreteMap;
use crate::synth::choquet_boundary;
use crate::{Complex64, Error, Point, Result};

/// Multi-start evidence for uniqueness of the discrete minimizer.
#[derive(Clone, Debug, Serialize)]
pub struct UniquenessRecord {
    pub reports: Vec<SolveReport>,
    /// Max vertex distance between the optimized maps of runs `i` and `j`.
    pub pairwise_linf: Vec<Vec<f64>>,
    pub max_pairwise: f64,
    pub all_converged: bool,
    /// Some run did not converge; the distances are not evidence.
    pub inconclusive: bool,
}

/// Runs `problem` from `n_starts` independent random injective starts
/// (RNG stream `k` of `seed` for run `k`), concurrently.
pub fn uniqueness_experiment(problem: &Problem, n_starts: usize, seed: u64) -> Result<UniquenessRecord> {
    if n_starts < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 starts, got {n_starts}")));
    }
    let problem = Problem { options: SolveOptions { seed, ..problem.options.clone() }, ..problem.clone() };
    let results: Vec<Result<SolveReport>> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..n_starts)
            .map(|k| {
                let problem = &problem;
                s.spawn(move || minimize(problem, Init::Random { run: k as u64 }))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("solver thread panicked")).collect()
    });
    let reports = results.into_iter().collect::<Result<Vec<_>>>()?;
    let mut pairwise_linf = vec![vec![0.0; n_starts]; n_starts];
    let mut max_pairwise: f64 = 0.0;
    for i in 0..n_starts {
        for j in i + 1..n_starts {
            let d = reports[i].map.linf_distance(&reports[j].map);
            pairwise_linf[i][j] = d;
            pairwise_linf[j][i] = d;
            max_pairwise = max_pairwise.max(d);
        }
    }
    let all_converged = reports.iter().all(|r| r.converged);
    Ok(UniquenessRecord { reports, pairwise_linf, max_pairwise, all_converged, inconclusive: !all_converged })
}

/// Minimality certificate by comparison with same-boundary competitors.
#[derive(Clone, Debug, Serialize)]
pub struct EquivalenceRecord {
    /// No competitor beat `h` by more than `1e-9` (relative to its energy).
    pub is_min_cert: bool,
    pub hopf_residual: f64,
    pub energy: f64,
    /// `E[competitor] − E[h]`; the last entry is the one-step descent
    /// competitor.
    pub competitor_gaps: Vec<f64>,
}

/// Compares `h` against `competitors` random bump perturbations (boundary
/// fixed, re-sampled until injective) and one preconditioned descent step.
pub fn equivalence_check(h: &DiscreteMap, objective: &Objective, competitors: usize, seed: u64) -> Result<EquivalenceRecord> {
    objective.validate()?;
    if h.min_jacobian() <= 0.0 {
        return Err(Error::NotInvertible { triangles: h.derivatives().flipped() });
    }
    let energy = objective.energy(h)?;
    let field = hopf_differential(h, &objective.hopf_weight(), objective.quadrature())?;
    let hopf_residual = holomorphy_residual(&field).map_or(0.0, |r| r.max_rel);
    let (lo, hi) = h.targets().iter().fold((h.targets()[0], h.targets()[0]), |(lo, hi), p| {
        (Point::new(lo.re.min(p.re), lo.im.min(p.im)), Point::new(hi.re.max(p.re), hi.im.max(p.im)))
    });
    let amplitude = 0.05 * (hi - lo).norm();
    let mut gaps = Vec::with_capacity(competitors + 1);
    for k in 0..competitors {
        let mut rng = run_rng(seed, k as u64);
        let c = init::perturbed(h, &mut rng, amplitude, 20)?;
        gaps.push(objective.energy(&c)? - energy);
    }
    let fixed = h.reference().is_boundary_flags();
    let step = descend(objective, h.clone(), &fixed, &SolveOptions { max_iters: 1, tol_grad: Some(0.0), ..Default::default() })?;
    gaps.push(step.energy - energy);
    let floor = -1e-9 * energy.abs().max(1.0);
    Ok(EquivalenceRecord { is_min_cert: gaps.iter().all(|&g| g >= floor), hopf_residual, energy, competitor_gaps: gaps })
}

/// Analytic vs central-difference gradients at random interior vertices.
#[derive(Clone, Debug, Serialize)]
pub struct GradientCheck {
    pub vertices: Vec<usize>,
    /// Per vertex `|g_fd − g| / |g|`.
    pub relative_errors: Vec<f64>,
    pub max_rel: f64,
}

pub fn gradient_check(objective: &Objective, map: &DiscreteMap, count: usize, seed: u64) -> Result<GradientCheck> {
    let mesh = map.reference();
    let interior = mesh.interior_vertices();
    if interior.is_empty() {
        return Err(Error::InvalidArgument("mesh has no interior vertex".into()));
    }
    let topo = MeshTopology::build(mesh);
    let (_, grad) = objective.energy_and_gradient(map)?;
    let mut rng = run_rng(seed, 0);
    let mut vertices = Vec::with_capacity(count);
    let mut relative_errors = Vec::with_capacity(count);
    for _ in 0..count {
        let v = interior[rng.gen_range(0..interior.len())];
        let star = &topo.vertex_triangles[v];
        let local_edge = star
            .iter()
            .flat_map(|&t| {
                let c = map.image_corners(t);
                [(c[1] - c[0]).norm(), (c[2] - c[1]).norm(), (c[0] - c[2]).norm()]
            })
            .fold(f64::INFINITY, f64::min);
        let h = 1e-4 * local_edge;
        let mut fd = Complex64::new(0.0, 0.0);
        for (dir, slot) in [(Complex64::new(h, 0.0), 0), (Complex64::new(0.0, h), 1)] {
            let shifted = |sign: f64| -> Result<f64> {
                let mut q = map.targets().to_vec();
                q[v] += dir * sign;
                objective.star_energy(&DiscreteMap::new(mesh.clone(), q)?, star)
            };
            let d = (shifted(1.0)? - shifted(-1.0)?) / (2.0 * h);
            if slot == 0 {
                fd.re = d;
            } else {
                fd.im = d;
            }
        }
        let scale = grad[v].norm().max(1e-300);
        vertices.push(v);
        relative_errors.push((fd - grad[v]).norm() / scale);
    }
    let max_rel = relative_errors.iter().copied().fold(0.0, f64::max);
    Ok(GradientCheck { vertices, relative_errors, max_rel })
}

/// Harmonic extension vs `p = 2` minimizer on boundary data onto the
/// L-shape that squeezes the reentrant corner into a short arc.
#[derive(Clone, Debug, Serialize)]
pub struct ChoquetRecord {
    #[serde(skip)]
    pub harmonic: DiscreteMap,
    #[serde(skip)]
    pub target: Domain,
    /// Vertices whose harmonic image lies outside the L by more than 1e-3.
    pub exterior_vertices: Vec<usize>,
    /// Largest distance of a harmonic image point outside the L.
    pub max_margin: f64,
    pub harmonic_min_j: f64,
    pub minimizer: SolveReport,
    /// `min J` of the minimizer `f: disk → L` (the inverse of the optimized map).
    pub p2_min_j: f64,
    pub p2_converged: bool,
}

pub fn choquet_experiment(edge: f64, options: SolveOptions) -> Result<ChoquetRecord> {
    let disk = Domain::disk_polygon(64, 1.0)?;
    let target = Domain::l_shape();
    let source = Arc::new(triangulate(&disk, edge)?);
    let boundary = choquet_boundary()?;
    let harmonic = harmonic_extension(source.clone(), &boundary, &target)?;
    let mut exterior_vertices = Vec::new();
    let mut max_margin: f64 = 0.0;
    for (v, &w) in harmonic.targets().iter().enumerate() {
        let margin = -target.signed_distance(w);
        max_margin = max_margin.max(margin);
        if margin >= 1e-3 {
            exterior_vertices.push(v);
        }
    }
    let problem = Problem::new(source, target.clone(), boundary, Functional::MeanDistortion { p: 2.0 })?.with_options(options);
    let minimizer = minimize(&problem, Init::Base)?;
    let p2_min_j = minimizer.unknown()?.min_jacobian();
    Ok(ChoquetRecord {
        harmonic_min_j: harmonic.min_jacobian(),
        harmonic,
        target,
        exterior_vertices,
        max_margin,
        p2_converged: minimizer.converged,
        minimizer,
        p2_min_j,
    })
}
