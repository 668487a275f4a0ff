use super::{orient2d, segment_distance, MeshTopology, TriangleMesh};
use crate::{Error, Point, Result};

/// Triangle containing a point, with barycentric coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Location {
    pub triangle: usize,
    pub bary: [f64; 3],
}

/// Point location over a fixed mesh: triangle walk from a hint, with an
/// exhaustive fallback. Results do not depend on the hint: points on shared
/// edges resolve to the lowest-index containing triangle.
#[derive(Clone, Debug)]
pub struct Locator {
    mesh: TriangleMesh,
    topo: MeshTopology,
    grid: Grid,
    tolerance: f64,
}

const ON_EDGE: f64 = 1e-12;

impl Locator {
    pub fn new(mesh: TriangleMesh) -> Self {
        let topo = MeshTopology::build(&mesh);
        let grid = Grid::build(&mesh);
        let tolerance = 1e-9 * mesh.diameter_estimate().max(1.0);
        Self { mesh, topo, grid, tolerance }
    }

    pub fn mesh(&self) -> &TriangleMesh {
        &self.mesh
    }

    pub fn topology(&self) -> &MeshTopology {
        &self.topo
    }

    pub fn barycentric(&self, t: usize, p: Point) -> [f64; 3] {
        let [a, b, c] = self.mesh.corners(t);
        let d = orient2d(a, b, c);
        [orient2d(p, b, c) / d, orient2d(a, p, c) / d, orient2d(a, b, p) / d]
    }

    /// Locates `p`, starting the walk at triangle `hint`.
    pub fn locate(&self, p: Point, hint: usize) -> Result<Location> {
        let n = self.mesh.triangle_count();
        let mut t = hint.min(n - 1);
        for _ in 0..n {
            let b = self.barycentric(t, p);
            let (k, min) = argmin(&b);
            if min >= -ON_EDGE {
                return Ok(self.canonical(t, p, b));
            }
            match self.topo.neighbors[t][k] {
                Some(next) => t = next,
                None => break,
            }
        }
        self.fallback(p)
    }

    fn canonical(&self, t: usize, p: Point, b: [f64; 3]) -> Location {
        if b.iter().all(|&x| x > ON_EDGE) {
            return Location { triangle: t, bary: b };
        }
        let tri = self.mesh.triangles()[t];
        let mut best = Location { triangle: t, bary: b };
        for &v in &tri {
            for &s in &self.topo.vertex_triangles[v] {
                if s < best.triangle {
                    let bs = self.barycentric(s, p);
                    if argmin(&bs).1 >= -ON_EDGE {
                        best = Location { triangle: s, bary: bs };
                    }
                }
            }
        }
        best
    }

    fn fallback(&self, p: Point) -> Result<Location> {
        let mut best: Option<(f64, usize)> = None;
        for t in 0..self.mesh.triangle_count() {
            let d = self.distance_to_triangle(t, p);
            if best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, t));
            }
        }
        let (d, t) = best.expect("mesh has triangles");
        if d > self.tolerance {
            return Err(Error::OutsideMesh { point: p, distance: d });
        }
        let b = self.barycentric(t, p);
        Ok(self.canonical(t, p, b))
    }

    pub fn distance_to_triangle(&self, t: usize, p: Point) -> f64 {
        let b = self.barycentric(t, p);
        if argmin(&b).1 >= 0.0 {
            return 0.0;
        }
        let [a, bb, c] = self.mesh.corners(t);
        segment_distance(p, a, bb)
            .min(segment_distance(p, bb, c))
            .min(segment_distance(p, c, a))
    }

    /// Triangles whose bounding boxes meet the box `[lo, hi]`, ascending.
    pub fn candidates(&self, lo: Point, hi: Point) -> Vec<usize> {
        self.grid.query(lo, hi)
    }
}

fn argmin(b: &[f64; 3]) -> (usize, f64) {
    let mut k = 0;
    for i in 1..3 {
        if b[i] < b[k] {
            k = i;
        }
    }
    (k, b[k])
}

#[derive(Clone, Debug)]
struct Grid {
    origin: Point,
    cell: f64,
    nx: usize,
    ny: usize,
    cells: Vec<Vec<usize>>,
}

impl Grid {
    fn build(mesh: &TriangleMesh) -> Self {
        let vs = mesh.vertices();
        let mut lo = vs[0];
        let mut hi = vs[0];
        for p in vs {
            lo = Point::new(lo.re.min(p.re), lo.im.min(p.im));
            hi = Point::new(hi.re.max(p.re), hi.im.max(p.im));
        }
        let side = (mesh.triangle_count() as f64).sqrt().ceil().max(1.0);
        let cell = ((hi.re - lo.re).max(hi.im - lo.im) / side).max(1e-300);
        let nx = ((hi.re - lo.re) / cell).floor() as usize + 1;
        let ny = ((hi.im - lo.im) / cell).floor() as usize + 1;
        let mut grid = Self { origin: lo, cell, nx, ny, cells: vec![Vec::new(); nx * ny] };
        for t in 0..mesh.triangle_count() {
            let c = mesh.corners(t);
            let tlo = Point::new(c.iter().map(|p| p.re).fold(f64::INFINITY, f64::min), c.iter().map(|p| p.im).fold(f64::INFINITY, f64::min));
            let thi = Point::new(c.iter().map(|p| p.re).fold(f64::NEG_INFINITY, f64::max), c.iter().map(|p| p.im).fold(f64::NEG_INFINITY, f64::max));
            let (i0, j0) = grid.cell_of(tlo);
            let (i1, j1) = grid.cell_of(thi);
            for j in j0..=j1 {
                for i in i0..=i1 {
                    grid.cells[j * nx + i].push(t);
                }
            }
        }
        grid
    }

    fn cell_of(&self, p: Point) -> (usize, usize) {
        let i = ((p.re - self.origin.re) / self.cell).floor().max(0.0) as usize;
        let j = ((p.im - self.origin.im) / self.cell).floor().max(0.0) as usize;
        (i.min(self.nx - 1), j.min(self.ny - 1))
    }

    fn query(&self, lo: Point, hi: Point) -> Vec<usize> {
        let (i0, j0) = self.cell_of(lo);
        let (i1, j1) = self.cell_of(hi);
        let mut out = Vec::new();
        for j in j0..=j1 {
            for i in i0..=i1 {
                out.extend_from_slice(&self.cells[j * self.nx + i]);
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{triangulate, Domain};

    #[test]
    fn walk_matches_exhaustive_search() {
        let m = triangulate(&Domain::l_shape(), 0.3).unwrap();
        let loc = Locator::new(m.clone());
        for k in 0..200 {
            let p = Point::new(0.01 + (k as f64 * 0.618).fract() * 1.98, 0.01 + (k as f64 * 0.414).fract() * 0.98);
            let a = loc.locate(p, 0).unwrap();
            let b = loc.locate(p, m.triangle_count() - 1).unwrap();
            assert_eq!(a.triangle, b.triangle);
            assert!(a.bary.iter().all(|&x| x >= -1e-12));
        }
    }

    #[test]
    fn shared_vertex_resolves_to_lowest_index() {
        let m = triangulate(&Domain::rectangle(1.0, 1.0).unwrap(), 0.25).unwrap();
        let loc = Locator::new(m.clone());
        let v = m.interior_vertices()[0];
        let p = m.vertices()[v];
        let lowest = *loc.topology().vertex_triangles[v].iter().min().unwrap();
        for hint in 0..m.triangle_count() {
            assert_eq!(loc.locate(p, hint).unwrap().triangle, lowest);
        }
    }

    #[test]
    fn outside_point_is_an_error() {
        let loc = Locator::new(triangulate(&Domain::l_shape(), 0.5).unwrap());
        assert!(matches!(loc.locate(Point::new(1.5, 1.5), 0), Err(Error::OutsideMesh { .. })));
    }
}
