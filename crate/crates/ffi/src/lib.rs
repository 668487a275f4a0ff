//! C ABI over the `distortion` crate.
//!
//! Objects are opaque heap handles released by their `*_free` function.
//! Every fallible call returns a [`DistortionStatus`]; on failure the message
//! is kept per thread and read back with [`distortion_last_error`]. Panics
//! never cross the boundary: they surface as `DISTORTION_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;
use std::sync::Arc;

use distortion::energy::{inverse_energy, mean_distortion, weighted_dirichlet, Quadrature, WeightFn};
use distortion::geometry::{triangulate, TriangleMesh};
use distortion::io::{self, ProblemFile};
use distortion::mapping::DiscreteMap;
use distortion::optimize::{minimize, Init, SolveReport};
use distortion::{Error, Point};

/// Result of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DistortionStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidMesh = 3,
    NotInvertible = 4,
    Numerical = 5,
    Io = 6,
    Panic = 7,
}

/// Energy selector for [`distortion_map_energy`].
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DistortionFunctional {
    /// Mean distortion `∫ K^p` of the map (`p > 1`).
    MeanDistortion = 0,
    /// Inverse energy `∫ K^{p−1} ‖Dh‖²` of the map (`p ≥ 1`).
    InverseEnergy = 1,
    /// Dirichlet energy `∫ ‖Df‖²` (identity on a unit square: 2; `p` ignored).
    Dirichlet = 2,
}

/// Triangle mesh with counterclockwise triangles.
pub struct DistortionMesh(Arc<TriangleMesh>);

/// Piecewise-linear map on a mesh.
pub struct DistortionMap(DiscreteMap);

/// Outcome of a minimization.
pub struct DistortionSolution(SolveReport);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(err: &Error) -> DistortionStatus {
    match err {
        Error::InvalidMesh(_) | Error::DegeneratePolygon(_) | Error::SelfIntersecting { .. } => {
            DistortionStatus::InvalidMesh
        }
        Error::NotInvertible { .. } => DistortionStatus::NotInvertible,
        Error::Numerical(_)
        | Error::NoInjectiveInit(_)
        | Error::BranchFlip { .. }
        | Error::CoverageGap { .. }
        | Error::CriticalStart { .. } => DistortionStatus::Numerical,
        Error::Io(_) | Error::Json(_) => DistortionStatus::Io,
        _ => DistortionStatus::InvalidArgument,
    }
}

struct Fail(DistortionStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(DistortionStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> Fail {
    Fail(DistortionStatus::InvalidArgument, msg.into())
}

/// Runs `f`, recording any failure (including a panic) as the last error.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> DistortionStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            DistortionStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            DistortionStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(s: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if s.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(s).to_str().map_err(|_| invalid(format!("{what} is not UTF-8")))
}

unsafe fn points(xy: *const f64, n: usize) -> Result<Vec<Point>, Fail> {
    if n == 0 {
        return Ok(Vec::new());
    }
    if xy.is_null() {
        return Err(null("coordinates"));
    }
    let raw = std::slice::from_raw_parts(xy, 2 * n);
    Ok(raw.chunks_exact(2).map(|c| Point::new(c[0], c[1])).collect())
}

unsafe fn store<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = value;
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn distortion_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the calling thread's last error message into `buf` (truncated,
/// always NUL-terminated when `len > 0`). Returns the full message length
/// without the terminator; 0 after a successful call.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn distortion_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Triangulates a domain (`disk:N[:R]`, `rect:W:H`, `l-shape`,
/// `sector:R0:R1:DEG[:N]` or a JSON file) with target edge length `edge`.
///
/// # Safety
/// `domain` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn distortion_mesh_triangulate(
    domain: *const c_char,
    edge: f64,
    out: *mut *mut DistortionMesh,
) -> DistortionStatus {
    guard(|| {
        let spec = str_arg(domain, "domain")?;
        if !(edge > 0.0 && edge.is_finite()) {
            return Err(invalid(format!("edge must be positive, got {edge}")));
        }
        let mesh = triangulate(&io::parse_domain(spec)?, edge)?;
        store(out, DistortionMesh(Arc::new(mesh)))
    })
}

/// Builds a mesh from interleaved `xy` coordinates (`2·vertex_count`
/// doubles), `3·triangle_count` vertex indices and the boundary loop.
///
/// # Safety
/// Arrays must hold the stated number of elements; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn distortion_mesh_new(
    xy: *const f64,
    vertex_count: usize,
    triangles: *const u32,
    triangle_count: usize,
    boundary: *const u32,
    boundary_count: usize,
    out: *mut *mut DistortionMesh,
) -> DistortionStatus {
    guard(|| {
        let vertices = points(xy, vertex_count)?;
        if triangles.is_null() || boundary.is_null() {
            return Err(null("index array"));
        }
        let tris = std::slice::from_raw_parts(triangles, 3 * triangle_count)
            .chunks_exact(3)
            .map(|c| [c[0] as usize, c[1] as usize, c[2] as usize])
            .collect();
        let ring = std::slice::from_raw_parts(boundary, boundary_count).iter().map(|&i| i as usize).collect();
        store(out, DistortionMesh(Arc::new(TriangleMesh::new(vertices, tris, ring)?)))
    })
}

/// Number of vertices (0 for a null handle).
///
/// # Safety
/// `mesh` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn distortion_mesh_vertex_count(mesh: *const DistortionMesh) -> usize {
    mesh.as_ref().map_or(0, |m| m.0.vertex_count())
}

/// Number of triangles (0 for a null handle).
///
/// # Safety
/// `mesh` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn distortion_mesh_triangle_count(mesh: *const DistortionMesh) -> usize {
    mesh.as_ref().map_or(0, |m| m.0.triangle_count())
}

/// Copies the vertex coordinates into `xy` (`2·capacity` doubles).
///
/// # Safety
/// `mesh` must be a live handle and `xy` must hold `2·capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn distortion_mesh_vertices(
    mesh: *const DistortionMesh,
    xy: *mut f64,
    capacity: usize,
) -> DistortionStatus {
    guard(|| copy_points(borrow(mesh, "mesh")?.0.vertices(), xy, capacity))
}

/// Releases a mesh. Maps built on it stay valid.
///
/// # Safety
/// `mesh` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn distortion_mesh_free(mesh: *mut DistortionMesh) {
    if !mesh.is_null() {
        drop(Box::from_raw(mesh));
    }
}

unsafe fn copy_points(src: &[Point], xy: *mut f64, capacity: usize) -> Result<(), Fail> {
    if capacity < src.len() {
        return Err(invalid(format!("buffer holds {capacity} points, need {}", src.len())));
    }
    if xy.is_null() {
        return Err(null("output buffer"));
    }
    let dst = std::slice::from_raw_parts_mut(xy, 2 * src.len());
    for (c, p) in dst.chunks_exact_mut(2).zip(src) {
        c[0] = p.re;
        c[1] = p.im;
    }
    Ok(())
}

/// The map sending vertex `i` of `mesh` to `(xy[2i], xy[2i+1])`.
///
/// # Safety
/// `mesh` must be a live handle, `xy` must hold `2·count` doubles and `out`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn distortion_map_new(
    mesh: *const DistortionMesh,
    xy: *const f64,
    count: usize,
    out: *mut *mut DistortionMap,
) -> DistortionStatus {
    guard(|| {
        let mesh = borrow(mesh, "mesh")?;
        let map = DiscreteMap::new(mesh.0.clone(), points(xy, count)?)?;
        store(out, DistortionMap(map))
    })
}

/// Number of vertices of the map's mesh (0 for a null handle).
///
/// # Safety
/// `map` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn distortion_map_vertex_count(map: *const DistortionMap) -> usize {
    map.as_ref().map_or(0, |m| m.0.targets().len())
}

/// Copies the vertex images into `xy` (`2·capacity` doubles).
///
/// # Safety
/// `map` must be a live handle and `xy` must hold `2·capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn distortion_map_targets(map: *const DistortionMap, xy: *mut f64, capacity: usize) -> DistortionStatus {
    guard(|| copy_points(borrow(map, "map")?.0.targets(), xy, capacity))
}

/// Smallest triangle Jacobian.
///
/// # Safety
/// `map` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn distortion_map_min_jacobian(map: *const DistortionMap, out: *mut f64) -> DistortionStatus {
    guard(|| write_out(out, borrow(map, "map")?.0.min_jacobian()))
}

/// Evaluates an energy of the map; `+∞` when a triangle is flipped.
///
/// # Safety
/// `map` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn distortion_map_energy(
    map: *const DistortionMap,
    functional: DistortionFunctional,
    p: f64,
    out: *mut f64,
) -> DistortionStatus {
    guard(|| {
        let map = &borrow(map, "map")?.0;
        let value = match functional {
            DistortionFunctional::MeanDistortion if p > 1.0 => mean_distortion(map, p).total,
            DistortionFunctional::InverseEnergy if p >= 1.0 => inverse_energy(map, p).total,
            DistortionFunctional::Dirichlet => weighted_dirichlet(map, &WeightFn::Constant(1.0), Quadrature::Centroid)?.total,
            _ => return Err(invalid(format!("exponent {p} out of range"))),
        };
        write_out(out, value)
    })
}

/// Releases a map.
///
/// # Safety
/// `map` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn distortion_map_free(map: *mut DistortionMap) {
    if !map.is_null() {
        drop(Box::from_raw(map));
    }
}

/// Minimizes the problem described by `problem_json` (the CLI's problem
/// format). Relative paths inside it resolve against `base_dir`, or the
/// working directory when `base_dir` is null. `seed` < 0 starts from the
/// problem's base map, otherwise from the first random start of that seed.
///
/// # Safety
/// Strings must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn distortion_minimize(
    problem_json: *const c_char,
    base_dir: *const c_char,
    seed: i64,
    out: *mut *mut DistortionSolution,
) -> DistortionStatus {
    guard(|| {
        let text = str_arg(problem_json, "problem")?;
        let base = if base_dir.is_null() { "." } else { str_arg(base_dir, "base directory")? };
        let mut file: ProblemFile = serde_json::from_str(text).map_err(|e| Fail(DistortionStatus::Io, e.to_string()))?;
        let init = if seed < 0 {
            Init::Base
        } else {
            file.options.seed = seed as u64;
            Init::Random { run: 0 }
        };
        let problem = file.build(Path::new(base))?;
        store(out, DistortionSolution(minimize(&problem, init)?))
    })
}

/// Final energy of a solution.
///
/// # Safety
/// `solution` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn distortion_solution_energy(solution: *const DistortionSolution, out: *mut f64) -> DistortionStatus {
    guard(|| write_out(out, borrow(solution, "solution")?.0.energy))
}

/// Accepted descent steps.
///
/// # Safety
/// `solution` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn distortion_solution_iterations(
    solution: *const DistortionSolution,
    out: *mut usize,
) -> DistortionStatus {
    guard(|| write_out(out, borrow(solution, "solution")?.0.iterations))
}

/// Whether the gradient tolerance was met.
///
/// # Safety
/// `solution` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn distortion_solution_converged(solution: *const DistortionSolution, out: *mut bool) -> DistortionStatus {
    guard(|| write_out(out, borrow(solution, "solution")?.0.converged))
}

/// The minimizing map of the problem's unknown (inverted back for
/// mean-distortion problems) as a new handle.
///
/// # Safety
/// `solution` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn distortion_solution_map(
    solution: *const DistortionSolution,
    out: *mut *mut DistortionMap,
) -> DistortionStatus {
    guard(|| store(out, DistortionMap(borrow(solution, "solution")?.0.unknown()?)))
}

/// Releases a solution.
///
/// # Safety
/// `solution` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn distortion_solution_free(solution: *mut DistortionSolution) {
    if !solution.is_null() {
        drop(Box::from_raw(solution));
    }
}
