use std::collections::HashMap;

use super::triangle_area;
use crate::{Error, Point, Result};

/// Triangulation of a planar polygonal domain.
///
/// Triangles are counterclockwise; `boundary_loop` lists the boundary
/// vertices once each, counterclockwise.
#[derive(Clone, Debug, PartialEq)]
pub struct TriangleMesh {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    boundary_loop: Vec<usize>,
}

impl TriangleMesh {
    /// Validates positivity of every triangle, edge-manifoldness,
    /// connectivity and that `boundary_loop` walks the boundary edges.
    pub fn new(
        vertices: Vec<Point>,
        triangles: Vec<[usize; 3]>,
        boundary_loop: Vec<usize>,
    ) -> Result<Self> {
        let mesh = Self { vertices, triangles, boundary_loop };
        mesh.validate()?;
        Ok(mesh)
    }

    /// Same combinatorics, new vertex positions. Fails if any triangle
    /// loses positive orientation.
    pub fn with_vertices(&self, vertices: Vec<Point>) -> Result<Self> {
        if vertices.len() != self.vertices.len() {
            return Err(Error::InvalidMesh(format!(
                "expected {} vertices, got {}",
                self.vertices.len(),
                vertices.len()
            )));
        }
        let mesh = Self {
            vertices,
            triangles: self.triangles.clone(),
            boundary_loop: self.boundary_loop.clone(),
        };
        let bad: Vec<usize> = (0..mesh.triangles.len())
            .filter(|&t| !(mesh.signed_area(t) > 0.0))
            .collect();
        if !bad.is_empty() {
            return Err(Error::NotInvertible { triangles: bad });
        }
        Ok(mesh)
    }

    fn validate(&self) -> Result<()> {
        let nv = self.vertices.len();
        if self.triangles.is_empty() {
            return Err(Error::InvalidMesh("no triangles".into()));
        }
        let mut used = vec![false; nv];
        let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
        for (t, tri) in self.triangles.iter().enumerate() {
            if tri.iter().any(|&i| i >= nv) {
                return Err(Error::InvalidMesh(format!("triangle {t} has an out-of-range index")));
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(Error::InvalidMesh(format!("triangle {t} repeats a vertex")));
            }
            if !(self.signed_area(t) > 0.0) {
                return Err(Error::InvalidMesh(format!(
                    "triangle {t} has nonpositive signed area {}",
                    self.signed_area(t)
                )));
            }
            for k in 0..3 {
                used[tri[k]] = true;
                let e = (tri[k], tri[(k + 1) % 3]);
                if directed.insert(e, t).is_some() {
                    return Err(Error::InvalidMesh(format!(
                        "directed edge {e:?} used twice (non-manifold or inconsistent orientation)"
                    )));
                }
            }
        }
        if let Some(v) = used.iter().position(|u| !u) {
            return Err(Error::InvalidMesh(format!("vertex {v} belongs to no triangle")));
        }
        let boundary: HashMap<usize, usize> = directed
            .keys()
            .filter(|&&(a, b)| !directed.contains_key(&(b, a)))
            .map(|&(a, b)| (a, b))
            .collect();
        let nb = boundary.len();
        if nb != self.boundary_loop.len() || nb < 3 {
            return Err(Error::InvalidMesh(format!(
                "boundary has {nb} edges but boundary_loop has {} vertices",
                self.boundary_loop.len()
            )));
        }
        for i in 0..nb {
            let a = self.boundary_loop[i];
            let b = self.boundary_loop[(i + 1) % nb];
            if boundary.get(&a) != Some(&b) {
                return Err(Error::InvalidMesh(format!(
                    "boundary_loop step {a} -> {b} is not a counterclockwise boundary edge"
                )));
            }
        }
        // Connectivity over shared edges.
        let topo = MeshTopology::build(self);
        let mut seen = vec![false; self.triangles.len()];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(t) = stack.pop() {
            for n in topo.neighbors[t].iter().flatten() {
                if !seen[*n] {
                    seen[*n] = true;
                    count += 1;
                    stack.push(*n);
                }
            }
        }
        if count != self.triangles.len() {
            return Err(Error::InvalidMesh("mesh is not connected".into()));
        }
        Ok(())
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary_loop(&self) -> &[usize] {
        &self.boundary_loop
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn corners(&self, t: usize) -> [Point; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn signed_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.corners(t);
        triangle_area(a, b, c)
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.signed_area(t)).sum()
    }

    pub fn min_area(&self) -> f64 {
        (0..self.triangles.len())
            .map(|t| self.signed_area(t))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_edge(&self) -> f64 {
        let mut m: f64 = 0.0;
        for t in 0..self.triangles.len() {
            let c = self.corners(t);
            for k in 0..3 {
                m = m.max((c[k] - c[(k + 1) % 3]).norm());
            }
        }
        m
    }

    pub fn centroid(&self, t: usize) -> Point {
        let [a, b, c] = self.corners(t);
        (a + b + c) / 3.0
    }

    /// Boundary loop positions as a polygon.
    pub fn boundary_polygon(&self) -> Vec<Point> {
        self.boundary_loop.iter().map(|&i| self.vertices[i]).collect()
    }

    /// Cumulative arclength fraction of each boundary loop vertex, starting
    /// at 0 for `boundary_loop[0]`.
    pub fn boundary_fractions(&self) -> Vec<f64> {
        let poly = self.boundary_polygon();
        let n = poly.len();
        let mut acc = Vec::with_capacity(n);
        let mut s = 0.0;
        for i in 0..n {
            acc.push(s);
            s += (poly[(i + 1) % n] - poly[i]).norm();
        }
        acc.iter().map(|a| a / s).collect()
    }

    pub fn is_boundary_flags(&self) -> Vec<bool> {
        let mut f = vec![false; self.vertices.len()];
        for &b in &self.boundary_loop {
            f[b] = true;
        }
        f
    }

    pub fn interior_vertices(&self) -> Vec<usize> {
        let f = self.is_boundary_flags();
        (0..self.vertices.len()).filter(|&v| !f[v]).collect()
    }

    /// Mean vertex position and the largest distance of a vertex from it.
    pub fn center_and_radius(&self) -> (Point, f64) {
        let n = self.vertices.len() as f64;
        let c = self.vertices.iter().sum::<Point>() / n;
        let r = self.vertices.iter().map(|v| (v - c).norm()).fold(0.0, f64::max);
        (c, r)
    }

    pub fn diameter_estimate(&self) -> f64 {
        2.0 * self.center_and_radius().1
    }
}

/// Adjacency derived from a [`TriangleMesh`].
#[derive(Clone, Debug)]
pub struct MeshTopology {
    /// `neighbors[t][k]`: triangle across the edge opposite corner `k`.
    pub neighbors: Vec<[Option<usize>; 3]>,
    /// Triangles incident to each vertex, ascending.
    pub vertex_triangles: Vec<Vec<usize>>,
}

impl MeshTopology {
    pub fn build(mesh: &TriangleMesh) -> Self {
        let tris = mesh.triangles();
        let mut directed: HashMap<(usize, usize), usize> = HashMap::with_capacity(3 * tris.len());
        for (t, tri) in tris.iter().enumerate() {
            for k in 0..3 {
                directed.insert((tri[k], tri[(k + 1) % 3]), t);
            }
        }
        let mut neighbors = vec![[None; 3]; tris.len()];
        let mut vertex_triangles = vec![Vec::new(); mesh.vertex_count()];
        for (t, tri) in tris.iter().enumerate() {
            for k in 0..3 {
                let a = tri[(k + 1) % 3];
                let b = tri[(k + 2) % 3];
                neighbors[t][k] = directed.get(&(b, a)).copied();
                vertex_triangles[tri[k]].push(t);
            }
        }
        Self { neighbors, vertex_triangles }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> TriangleMesh {
        let v = vec![
            Point::new(0., 0.),
            Point::new(1., 0.),
            Point::new(1., 1.),
            Point::new(0., 1.),
        ];
        TriangleMesh::new(v, vec![[0, 1, 2], [0, 2, 3]], vec![0, 1, 2, 3]).unwrap()
    }

    #[test]
    fn two_triangle_square() {
        let m = square();
        assert_eq!(m.total_area(), 1.0);
        assert!(m.interior_vertices().is_empty());
        let topo = MeshTopology::build(&m);
        assert_eq!(topo.neighbors[0][1], Some(1));
        assert_eq!(topo.neighbors[1][2], Some(0));
    }

    #[test]
    fn rejects_clockwise_triangle() {
        let m = square();
        let err = TriangleMesh::new(m.vertices().to_vec(), vec![[0, 2, 1], [0, 2, 3]], vec![0, 1, 2, 3]);
        assert!(matches!(err, Err(Error::InvalidMesh(_))));
    }

    #[test]
    fn rejects_wrong_boundary_loop() {
        let m = square();
        let err = TriangleMesh::new(m.vertices().to_vec(), m.triangles().to_vec(), vec![0, 3, 2, 1]);
        assert!(err.is_err());
    }

    #[test]
    fn fractions_of_square() {
        let f = square().boundary_fractions();
        assert_eq!(f, vec![0.0, 0.25, 0.5, 0.75]);
    }
}
