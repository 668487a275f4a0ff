use thiserror::Error;

use crate::Point;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("polygon is degenerate: {0}")]
    DegeneratePolygon(String),

    #[error("polygon is self-intersecting: edges {first} and {second} cross")]
    SelfIntersecting { first: usize, second: usize },

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("monotonicity violated at sample {index}: {detail}")]
    NotMonotone { index: usize, detail: String },

    #[error("not invertible as orientation-preserving map: {} triangle(s) with J <= 0, first {:?}", .triangles.len(), .triangles.first())]
    NotInvertible { triangles: Vec<usize> },

    #[error("point ({}, {}) lies outside the mesh (distance {distance:e})", .point.re, .point.im)]
    OutsideMesh { point: Point, distance: f64 },

    #[error("nonpositive weight {value} at ({}, {})", .at.re, .at.im)]
    NonPositiveWeight { value: f64, at: Point },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("start point ({}, {}) is critical: |phi| = {modulus:e}", .point.re, .point.im)]
    CriticalStart { point: Point, modulus: f64 },

    #[error("direction field discontinuity near ({}, {})", .point.re, .point.im)]
    BranchFlip { point: Point },

    #[error("trajectory family leaves a gap of {gap:e} (allowed {allowed:e})")]
    CoverageGap { gap: f64, allowed: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("no injective initialization after {0} attempts")]
    NoInjectiveInit(usize),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
