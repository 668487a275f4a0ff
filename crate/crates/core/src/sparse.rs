//! Cotangent stiffness matrix and a factored Dirichlet solver for it.

use sprs::{CsMat, TriMat};
use sprs_ldl::{Ldl, LdlNumeric};

use crate::geometry::{orient2d, TriangleMesh};
use crate::{Error, Point, Result};

/// `Σ_T A_T ∇λ_i·∇λ_j`: the P1 stiffness matrix, i.e. `½(cot α + cot β)`
/// off the diagonal with rows summing to zero.
pub fn stiffness_entries(mesh: &TriangleMesh) -> Vec<(usize, usize, f64)> {
    let mut out = Vec::with_capacity(9 * mesh.triangle_count());
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let c = mesh.corners(t);
        let d = orient2d(c[0], c[1], c[2]);
        for k in 0..3 {
            let (i, j) = ((k + 1) % 3, (k + 2) % 3);
            // cot of the angle at corner k.
            let u = c[i] - c[k];
            let v = c[j] - c[k];
            let w = 0.5 * (u.re * v.re + u.im * v.im) / d;
            out.push((tri[i], tri[j], -w));
            out.push((tri[j], tri[i], -w));
            out.push((tri[i], tri[i], w));
            out.push((tri[j], tri[j], w));
        }
    }
    out
}

/// Stiffness matrix restricted to the free vertices, factored once.
pub struct DirichletSolver {
    /// Position of each mesh vertex among the free unknowns.
    index: Vec<Option<usize>>,
    free: Vec<usize>,
    factor: LdlNumeric<f64, usize>,
    /// Coupling `(free row, fixed vertex, weight)`.
    coupling: Vec<(usize, usize, f64)>,
}

impl DirichletSolver {
    /// `fixed[v]` marks Dirichlet vertices.
    pub fn new(mesh: &TriangleMesh, fixed: &[bool]) -> Result<Self> {
        let n = mesh.vertex_count();
        let mut index = vec![None; n];
        let mut free = Vec::new();
        for v in 0..n {
            if !fixed[v] {
                index[v] = Some(free.len());
                free.push(v);
            }
        }
        if free.is_empty() {
            return Err(Error::InvalidMesh("no free vertices".into()));
        }
        let mut tri = TriMat::new((free.len(), free.len()));
        let mut coupling = Vec::new();
        for (i, j, w) in stiffness_entries(mesh) {
            match (index[i], index[j]) {
                (Some(a), Some(b)) => tri.add_triplet(a, b, w),
                (Some(a), None) => coupling.push((a, j, w)),
                _ => {}
            }
        }
        let mat: CsMat<f64> = tri.to_csc();
        let factor = Ldl::new()
            .numeric(mat.view())
            .map_err(|e| Error::Numerical(format!("stiffness factorization failed: {e}")))?;
        if factor.d().iter().any(|&d| !(d > 0.0)) {
            return Err(Error::Numerical("stiffness matrix is singular or indefinite".into()));
        }
        Ok(Self { index, free, factor, coupling })
    }

    pub fn free_vertices(&self) -> &[usize] {
        &self.free
    }

    pub fn free_index(&self, v: usize) -> Option<usize> {
        self.index[v]
    }

    /// Solves `L x = rhs` on the free unknowns (complex right-hand side,
    /// real matrix).
    pub fn solve(&self, rhs: &[Point]) -> Vec<Point> {
        let re: Vec<f64> = rhs.iter().map(|z| z.re).collect();
        let im: Vec<f64> = rhs.iter().map(|z| z.im).collect();
        let xr = self.factor.solve(&re);
        let xi = self.factor.solve(&im);
        xr.into_iter().zip(xi).map(|(a, b)| Point::new(a, b)).collect()
    }

    /// Discrete harmonic values at the free vertices given values at all
    /// vertices (only the fixed ones are read).
    pub fn harmonic(&self, values: &[Point]) -> Vec<Point> {
        let mut rhs = vec![Point::new(0.0, 0.0); self.free.len()];
        for &(a, j, w) in &self.coupling {
            rhs[a] -= values[j] * w;
        }
        self.solve(&rhs)
    }
}
