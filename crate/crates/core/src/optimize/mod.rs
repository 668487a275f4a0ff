//! Minimization over discrete diffeomorphisms with fixed boundary values,
//! and the experiments built on it (multi-start uniqueness, minimality
//! certificates, the Choquet example).
//!
//! Mean-distortion problems `𝓔_p[f] → min` over `f: Y → X` are solved in
//! the inverse variable `h = f⁻¹: X → Y`, where the energy becomes
//! `½∫ K_h^{p−1} ‖Dh‖²`; the discrete identity
//! `mean_distortion(invert(h)) = inverse_energy(h)` is exact per triangle.

mod experiments;
mod init;
mod objective;
mod solve;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::energy::{Quadrature, WeightFn, WeightSpec};
use crate::geometry::{triangulate, BoundaryMap, BoundarySample, Domain, TriangleMesh};
use crate::mapping::DiscreteMap;
use crate::{Error, Point, Result};

pub use experiments::{
    choquet_experiment, equivalence_check, gradient_check, uniqueness_experiment, ChoquetRecord, EquivalenceRecord,
    GradientCheck, UniquenessRecord,
};
pub use init::{harmonic_with, star_cone};
pub use objective::Objective;
pub use solve::{descend, SolveReport};

/// The functional of a [`Problem`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Functional {
    /// `𝓔_p[f]` for `f: source → target`, `p > 1`.
    MeanDistortion { p: f64 },
    /// `𝔼_p[h]` for `h: source → target`, `p ≥ 1`.
    InverseEnergy { p: f64 },
    /// `𝓔^Φ[h]` for `h: source → target`.
    WeightedDirichlet {
        weight: WeightSpec,
        #[serde(default)]
        quadrature: Quadrature,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveOptions {
    /// Gradient-norm tolerance; `1e-8 · energy / diameter` when absent.
    pub tol_grad: Option<f64>,
    pub max_iters: usize,
    pub seed: u64,
    /// Bump fields drawn before giving up on a random start.
    pub init_resamples: usize,
    /// Amplitude of random starts relative to the target diameter.
    pub init_amplitude: f64,
    /// Sufficient-decrease constant.
    pub armijo: f64,
    /// Mesh edge of the target-side mesh used by mean-distortion problems
    /// (defaults to the source's mean boundary edge).
    pub inverse_edge: Option<f64>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol_grad: None,
            max_iters: 20_000,
            seed: 0,
            init_resamples: 20,
            init_amplitude: 0.3,
            armijo: 1e-4,
            inverse_edge: None,
        }
    }
}

/// A minimization problem with Dirichlet boundary data.
#[derive(Clone, Debug)]
pub struct Problem {
    pub source: Arc<TriangleMesh>,
    pub target: Domain,
    pub boundary: BoundaryMap,
    pub functional: Functional,
    pub options: SolveOptions,
    /// Replaces the closed-form weight of a weighted-Dirichlet functional
    /// (e.g. sampled or analytic Φ).
    pub weight: Option<WeightFn>,
}

/// How a run is started.
#[derive(Clone, Debug)]
pub enum Init {
    /// Harmonic extension if injective, otherwise the star-cone map.
    Base,
    /// `Base` plus a random bump field from the run's RNG stream.
    Random { run: u64 },
    /// A given map on the discretized mesh.
    Map(DiscreteMap),
}

/// The problem as the optimizer sees it.
#[derive(Clone, Debug)]
pub struct Discretized {
    /// Mesh carrying the optimized map.
    pub mesh: Arc<TriangleMesh>,
    pub boundary: Vec<(usize, Point)>,
    /// Image domain of the optimized map.
    pub image: Domain,
    pub objective: Objective,
    /// The optimized map is the inverse of the problem's unknown.
    pub inverse: bool,
}

impl Problem {
    pub fn new(source: Arc<TriangleMesh>, target: Domain, boundary: BoundaryMap, functional: Functional) -> Result<Self> {
        match functional {
            Functional::MeanDistortion { p } if !(p > 1.0 && p.is_finite()) => {
                return Err(Error::InvalidArgument(format!("mean-distortion problems need 1 < p < ∞, got {p}")))
            }
            Functional::InverseEnergy { p } if !(p >= 1.0 && p.is_finite()) => {
                return Err(Error::InvalidArgument(format!("inverse-energy problems need 1 ≤ p < ∞, got {p}")))
            }
            Functional::WeightedDirichlet { quadrature: Quadrature::Exact, .. } => {
                return Err(Error::InvalidArgument("exact quadrature cannot be minimized".into()))
            }
            _ => {}
        }
        Ok(Self { source, target, boundary, functional, options: SolveOptions::default(), weight: None })
    }

    pub fn with_options(mut self, options: SolveOptions) -> Self {
        self.options = options;
        self
    }

    pub fn with_weight(mut self, weight: WeightFn) -> Self {
        self.weight = Some(weight);
        self
    }

    /// The source boundary as a domain.
    pub fn source_domain(&self) -> Result<Domain> {
        Domain::polygon(self.source.boundary_polygon())
    }

    /// Builds the mesh, boundary values and objective to optimize.
    pub fn discretize(&self) -> Result<Discretized> {
        let forward = self.boundary.boundary_targets(&self.source, &self.target)?;
        match &self.functional {
            Functional::MeanDistortion { p } => {
                let poly = self.source.boundary_polygon();
                let n = poly.len();
                let mean_edge = (0..n).map(|i| (poly[(i + 1) % n] - poly[i]).norm()).sum::<f64>() / n as f64;
                let edge = self.options.inverse_edge.unwrap_or(mean_edge);
                let mesh = Arc::new(triangulate(&self.target, edge)?);
                let source_domain = self.source_domain()?;
                let inverse = invert_boundary(&forward, &self.source, &self.target)?;
                let boundary = inverse.boundary_targets(&mesh, &source_domain)?;
                Ok(Discretized {
                    mesh,
                    boundary,
                    image: source_domain,
                    objective: Objective::InverseEnergy { p: *p },
                    inverse: true,
                })
            }
            Functional::InverseEnergy { p } => Ok(Discretized {
                mesh: self.source.clone(),
                boundary: forward,
                image: self.target.clone(),
                objective: Objective::InverseEnergy { p: *p },
                inverse: false,
            }),
            Functional::WeightedDirichlet { weight, quadrature } => {
                let weight = self.weight.clone().unwrap_or_else(|| weight.into());
                let objective = Objective::WeightedDirichlet { weight, quadrature: *quadrature };
                objective.validate()?;
                Ok(Discretized { mesh: self.source.clone(), boundary: forward, image: self.target.clone(), objective, inverse: false })
            }
        }
    }
}

/// The inverse correspondence `∂X → ∂Y` of boundary values given at the
/// source boundary vertices, as samples keyed by target arclength.
fn invert_boundary(forward: &[(usize, Point)], source: &TriangleMesh, target: &Domain) -> Result<BoundaryMap> {
    let len = target.perimeter();
    let mut samples: Vec<BoundarySample> = forward
        .iter()
        .map(|&(v, w)| {
            let (t, _) = target.project(w);
            let s = (t / len).rem_euclid(1.0);
            let z = source.vertices()[v];
            BoundarySample { s: if s >= 1.0 { 0.0 } else { s }, w: [z.re, z.im] }
        })
        .collect();
    let start = samples
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.s.total_cmp(&b.1.s))
        .map(|(i, _)| i)
        .unwrap_or(0);
    samples.rotate_left(start);
    BoundaryMap::new(samples)
}

impl Discretized {
    pub fn fixed(&self) -> Vec<bool> {
        self.mesh.is_boundary_flags()
    }

    /// Harmonic extension of the boundary values.
    pub fn harmonic(&self) -> Result<DiscreteMap> {
        harmonic_with(self.mesh.clone(), &self.boundary)
    }

    /// Harmonic extension when injective, otherwise the star-cone map.
    pub fn base_map(&self) -> Result<DiscreteMap> {
        let h = self.harmonic()?;
        if h.min_jacobian() > 0.0 {
            return Ok(h);
        }
        let s = star_cone(self.mesh.clone(), &self.boundary, &self.image)?;
        if s.min_jacobian() > 0.0 {
            Ok(s)
        } else {
            Err(Error::NoInjectiveInit(0))
        }
    }

    pub fn initial(&self, init: &Init, options: &SolveOptions) -> Result<DiscreteMap> {
        match init {
            Init::Base => self.base_map(),
            Init::Random { run } => {
                let base = self.base_map()?;
                let mut rng = run_rng(options.seed, *run);
                init::perturbed(&base, &mut rng, options.init_amplitude * self.image.diameter(), options.init_resamples)
            }
            Init::Map(m) => {
                if m.reference().vertex_count() != self.mesh.vertex_count() || **m.reference() != *self.mesh {
                    return Err(Error::InvalidArgument("initial map lives on a different mesh".into()));
                }
                for &(v, w) in &self.boundary {
                    if (m.targets()[v] - w).norm() > 1e-9 * self.image.diameter() {
                        return Err(Error::InvalidArgument(format!("initial map violates the boundary data at vertex {v}")));
                    }
                }
                if m.min_jacobian() <= 0.0 {
                    return Err(Error::NotInvertible { triangles: m.derivatives().flipped() });
                }
                Ok(m.clone())
            }
        }
    }
}

/// Independent RNG stream for run `run` of seed `seed`.
pub(crate) fn run_rng(seed: u64, run: u64) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(run);
    rng
}

/// Harmonic extension of `boundary` into `mesh`: the minimizer of the
/// Dirichlet energy, with no injectivity guarantee.
pub fn harmonic_extension(mesh: Arc<TriangleMesh>, boundary: &BoundaryMap, target: &Domain) -> Result<DiscreteMap> {
    let values = boundary.boundary_targets(&mesh, target)?;
    harmonic_with(mesh, &values)
}

/// Runs the problem from `init`.
pub fn minimize(problem: &Problem, init: Init) -> Result<SolveReport> {
    let disc = problem.discretize()?;
    let start = disc.initial(&init, &problem.options)?;
    let mut report = descend(&disc.objective, start, &disc.fixed(), &problem.options)?;
    report.inverse = disc.inverse;
    Ok(report)
}
