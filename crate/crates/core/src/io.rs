//! JSON file formats: meshes, boundary maps, maps, problems and identity
//! pairs. Paths inside a file are resolved against that file's directory.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::energy::{Quadrature, WeightFn, WeightSpec};
use crate::geometry::{triangulate, BoundaryMap, BoundarySample, Domain, DomainKind, TriangleMesh};
use crate::mapping::DiscreteMap;
use crate::optimize::{Functional, Problem, SolveOptions};
use crate::synth::{self, AffinePair, BumpMap};
use crate::{Error, Point, Result};

fn to_xy(p: &Point) -> [f64; 2] {
    [p.re, p.im]
}

fn from_xy(v: &[f64; 2]) -> Point {
    Point::new(v[0], v[1])
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

fn resolve(base: &Path, rel: &str) -> PathBuf {
    let p = Path::new(rel);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// `{vertices: [[x, y]], triangles: [[i, j, k]], boundary_loop: [i]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeshFile {
    pub vertices: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
    pub boundary_loop: Vec<usize>,
}

impl From<&TriangleMesh> for MeshFile {
    fn from(mesh: &TriangleMesh) -> Self {
        Self {
            vertices: mesh.vertices().iter().map(to_xy).collect(),
            triangles: mesh.triangles().to_vec(),
            boundary_loop: mesh.boundary_loop().to_vec(),
        }
    }
}

impl MeshFile {
    pub fn into_mesh(self) -> Result<TriangleMesh> {
        TriangleMesh::new(self.vertices.iter().map(from_xy).collect(), self.triangles, self.boundary_loop)
    }
}

/// A mesh given by path, inline, or as a domain to triangulate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MeshSource {
    Path(String),
    Inline(MeshFile),
    Generate { domain: DomainKind, edge: f64 },
}

impl MeshSource {
    pub fn load(&self, base: &Path) -> Result<TriangleMesh> {
        match self {
            MeshSource::Path(p) => read_json::<MeshFile>(&resolve(base, p))?.into_mesh(),
            MeshSource::Inline(m) => m.clone().into_mesh(),
            MeshSource::Generate { domain, edge } => triangulate(&Domain::new(domain.clone())?, *edge),
        }
    }
}

/// Named boundary correspondences.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BoundaryGen {
    /// Source boundary vertices map to themselves (source and target coincide).
    Identity,
    /// Arclength-proportional.
    Uniform { samples: usize },
    /// The smooth circle homeomorphism `s + 0.08 sin 2πs + 0.03 sin 4πs`.
    Wobble { samples: usize },
    /// Circle onto the L-shape, squeezing the reentrant corner.
    Choquet,
    /// Restriction of `z ↦ a z + b z̄` to the source boundary vertices.
    Affine { a: [f64; 2], b: [f64; 2] },
}

/// A boundary map given by path, inline samples or a generator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BoundarySource {
    Path(String),
    Samples(Vec<BoundarySample>),
    Generate(BoundaryGen),
}

impl BoundarySource {
    pub fn load(&self, base: &Path, source: &TriangleMesh, target: &Domain) -> Result<BoundaryMap> {
        let source_domain = || Domain::polygon(source.boundary_polygon());
        match self {
            BoundarySource::Path(p) => BoundaryMap::new(read_json(&resolve(base, p))?),
            BoundarySource::Samples(s) => BoundaryMap::new(s.clone()),
            BoundarySource::Generate(g) => match g {
                BoundaryGen::Identity => Ok(BoundaryMap::identity(&source_domain()?)),
                BoundaryGen::Uniform { samples } => synth::uniform_boundary(target, *samples),
                BoundaryGen::Wobble { samples } => synth::wobble_boundary(target, *samples),
                BoundaryGen::Choquet => synth::choquet_boundary(),
                BoundaryGen::Affine { a, b } => {
                    let (a, b) = (from_xy(a), from_xy(b));
                    BoundaryMap::from_vertex_images(&source_domain()?, |z| a * z + b * z.conj())
                }
            },
        }
    }
}

/// `{mesh, targets: [[x, y]]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapFile {
    pub mesh: MeshSource,
    pub targets: Vec<[f64; 2]>,
}

impl MapFile {
    pub fn new(mesh: MeshSource, map: &DiscreteMap) -> Self {
        Self { mesh, targets: map.targets().iter().map(to_xy).collect() }
    }

    pub fn load(&self, base: &Path) -> Result<DiscreteMap> {
        let mesh = Arc::new(self.mesh.load(base)?);
        DiscreteMap::new(mesh, self.targets.iter().map(from_xy).collect())
    }
}

pub fn read_map(path: &Path) -> Result<DiscreteMap> {
    let file: MapFile = read_json(path)?;
    file.load(path.parent().unwrap_or(Path::new(".")))
}

/// A minimization problem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemFile {
    pub source: MeshSource,
    pub target: DomainKind,
    pub boundary: BoundarySource,
    pub functional: Functional,
    #[serde(default)]
    pub options: SolveOptions,
}

impl ProblemFile {
    pub fn build(&self, base: &Path) -> Result<Problem> {
        let source = Arc::new(self.source.load(base)?);
        let target = Domain::new(self.target.clone())?;
        let boundary = self.boundary.load(base, &source, &target)?;
        Ok(Problem::new(source, target, boundary, self.functional.clone())?.with_options(self.options.clone()))
    }
}

pub fn read_problem(path: &Path) -> Result<(ProblemFile, Problem)> {
    let file: ProblemFile = read_json(path)?;
    let problem = file.build(path.parent().unwrap_or(Path::new(".")))?;
    Ok((file, problem))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SyntheticPair {
    /// Affine maps with a common image on a sheared regular polygon.
    Affine,
    /// Bump diffeomorphisms of the 64-gon disk, identity on the boundary.
    Smooth,
}

/// Two maps `h`, `H` on one mesh with the same image, for the integral
/// identity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PairFile {
    Explicit {
        mesh: MeshSource,
        h: Vec<[f64; 2]>,
        #[serde(rename = "H")]
        big_h: Vec<[f64; 2]>,
        #[serde(default)]
        weight: Option<WeightSpec>,
        #[serde(default)]
        quadrature: Quadrature,
        #[serde(default)]
        tolerance: Option<f64>,
    },
    Synthetic {
        synthetic: SyntheticPair,
        #[serde(default)]
        seed: u64,
        #[serde(default)]
        edge: Option<f64>,
        #[serde(default)]
        tolerance: Option<f64>,
    },
}

/// A loaded pair with its weight and the tolerance to check the gap against.
#[derive(Clone, Debug)]
pub struct Pair {
    pub h: DiscreteMap,
    pub big_h: DiscreteMap,
    pub weight: WeightFn,
    pub quadrature: Quadrature,
    pub tolerance: f64,
    /// Closed forms of `h` and `H`, when known; the identity is then
    /// integrated from exact derivatives rather than the PL maps.
    pub closed_form: Option<(BumpMap, BumpMap)>,
}

/// Default gap tolerances: exact algebra for affine pairs, discretization
/// error otherwise.
pub const AFFINE_PAIR_TOL: f64 = 1e-10;
pub const SMOOTH_PAIR_TOL: f64 = 5e-3;

impl PairFile {
    pub fn load(&self, base: &Path) -> Result<Pair> {
        match self {
            PairFile::Explicit { mesh, h, big_h, weight, quadrature, tolerance } => {
                let mesh = Arc::new(mesh.load(base)?);
                Ok(Pair {
                    h: DiscreteMap::new(mesh.clone(), h.iter().map(from_xy).collect())?,
                    big_h: DiscreteMap::new(mesh, big_h.iter().map(from_xy).collect())?,
                    weight: weight.as_ref().map_or(WeightFn::Constant(1.0), WeightFn::from),
                    quadrature: *quadrature,
                    tolerance: tolerance.unwrap_or(SMOOTH_PAIR_TOL),
                    closed_form: None,
                })
            }
            PairFile::Synthetic { synthetic, seed, edge, tolerance } => {
                let (h, big_h, tol) = synthetic_pair(*synthetic, *seed, *edge)?;
                let (quadrature, closed_form) = match synthetic {
                    SyntheticPair::Affine => (Quadrature::Exact, None),
                    SyntheticPair::Smooth => (Quadrature::Centroid, Some(synth::smooth_pair(*seed))),
                };
                Ok(Pair { h, big_h, weight: WeightFn::Constant(1.0), quadrature, tolerance: tolerance.unwrap_or(tol), closed_form })
            }
        }
    }
}

/// Builds a synthetic pair; returns `(h, H, default tolerance)`.
pub fn synthetic_pair(kind: SyntheticPair, seed: u64, edge: Option<f64>) -> Result<(DiscreteMap, DiscreteMap, f64)> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    match kind {
        SyntheticPair::Affine => {
            let pair = AffinePair::random(&mut rng, 7)?;
            let mesh = Arc::new(triangulate(&pair.domain, edge.unwrap_or(0.3) * pair.domain.diameter() / 2.0)?);
            let h = DiscreteMap::from_fn(mesh.clone(), |z| pair.h.apply(z));
            let big_h = DiscreteMap::from_fn(mesh, |z| pair.big_h.apply(z));
            Ok((h, big_h, AFFINE_PAIR_TOL))
        }
        SyntheticPair::Smooth => {
            let disk = Domain::disk_polygon(64, 1.0)?;
            let mesh = Arc::new(triangulate(&disk, edge.unwrap_or(0.05))?);
            let (f, g) = synth::smooth_pair(seed);
            let h = DiscreteMap::from_fn(mesh.clone(), |z| f.eval(z));
            let big_h = DiscreteMap::from_fn(mesh, |z| g.eval(z));
            Ok((h, big_h, SMOOTH_PAIR_TOL))
        }
    }
}

pub fn read_pair(path: &Path) -> Result<Pair> {
    let file: PairFile = read_json(path)?;
    file.load(path.parent().unwrap_or(Path::new(".")))
}

/// Parses a domain argument: `disk:SIDES[:RADIUS]`, `rect:W:H`, `l-shape`,
/// `sector:R0:R1:HALF_ANGLE_DEG[:SEGMENTS]`, or a path to a JSON
/// [`DomainKind`].
pub fn parse_domain(text: &str) -> Result<Domain> {
    let bad = || Error::InvalidArgument(format!("cannot parse domain '{text}' (disk:N[:R], rect:W:H, l-shape, sector:R0:R1:DEG[:N] or a JSON file)"));
    let parts: Vec<&str> = text.split(':').collect();
    let num = |s: &str| s.parse::<f64>().map_err(|_| bad());
    match parts.as_slice() {
        ["l-shape"] => Ok(Domain::l_shape()),
        ["disk", n] => Domain::disk_polygon(n.parse().map_err(|_| bad())?, 1.0),
        ["disk", n, r] => Domain::disk_polygon(n.parse().map_err(|_| bad())?, num(r)?),
        ["rect", w, h] => Domain::rectangle(num(w)?, num(h)?),
        ["sector", r0, r1, a] => synth::sector(num(r0)?, num(r1)?, num(a)?.to_radians(), 64),
        ["sector", r0, r1, a, n] => synth::sector(num(r0)?, num(r1)?, num(a)?.to_radians(), n.parse().map_err(|_| bad())?),
        _ if Path::new(text).is_file() => Domain::new(read_json(Path::new(text))?),
        _ => Err(bad()),
    }
}

/// Parses `x,y`.
pub fn parse_point(text: &str) -> Result<Point> {
    let bad = || Error::InvalidArgument(format!("cannot parse point '{text}' (expected x,y)"));
    let (x, y) = text.split_once(',').ok_or_else(bad)?;
    Ok(Point::new(x.trim().parse().map_err(|_| bad())?, y.trim().parse().map_err(|_| bad())?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mesh_round_trip() {
        let mesh = triangulate(&Domain::rectangle(1.0, 1.0).unwrap(), 0.4).unwrap();
        let text = serde_json::to_string(&MeshFile::from(&mesh)).unwrap();
        let back: MeshFile = serde_json::from_str(&text).unwrap();
        assert_eq!(back.into_mesh().unwrap(), mesh);
    }

    #[test]
    fn problem_file() {
        let text = r#"{
            "source": {"domain": {"kind": "disk-polygon", "sides": 32, "radius": 1.0}, "edge": 0.3},
            "target": {"kind": "disk-polygon", "sides": 32, "radius": 1.0},
            "boundary": {"kind": "wobble", "samples": 128},
            "functional": {"kind": "mean-distortion", "p": 2.0},
            "options": {"seed": 7}
        }"#;
        let file: ProblemFile = serde_json::from_str(text).unwrap();
        let problem = file.build(Path::new(".")).unwrap();
        assert_eq!(problem.options.seed, 7);
        assert_eq!(problem.options.max_iters, SolveOptions::default().max_iters);
    }

    #[test]
    fn pair_files() {
        let file: PairFile = serde_json::from_str(r#"{"synthetic": "affine", "seed": 3}"#).unwrap();
        let pair = file.load(Path::new(".")).unwrap();
        assert_eq!(pair.tolerance, AFFINE_PAIR_TOL);
        let mesh = MeshSource::Inline(MeshFile::from(&**pair.h.reference()));
        let explicit = PairFile::Explicit {
            mesh,
            h: pair.h.targets().iter().map(to_xy).collect(),
            big_h: pair.big_h.targets().iter().map(to_xy).collect(),
            weight: None,
            quadrature: Quadrature::Exact,
            tolerance: Some(1e-10),
        };
        let text = serde_json::to_string(&explicit).unwrap();
        assert!(text.contains("\"H\""));
        let back: PairFile = serde_json::from_str(&text).unwrap();
        assert_eq!(back, explicit);
    }

    #[test]
    fn arguments() {
        assert_eq!(parse_point("1,0").unwrap(), Point::new(1.0, 0.0));
        assert!(parse_point("1").is_err());
        assert_eq!(parse_domain("disk:16:2").unwrap().vertices().len(), 16);
        assert!(parse_domain("hexagon").is_err());
    }
}
