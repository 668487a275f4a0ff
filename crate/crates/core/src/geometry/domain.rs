use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{orient2d, segment_distance, segments_intersect, shoelace};
use crate::{Error, Point, Result};

/// How a [`Domain`] was specified.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DomainKind {
    /// Regular `sides`-gon inscribed in the circle of radius `radius` about 0,
    /// first vertex at angle 0.
    DiskPolygon { sides: usize, radius: f64 },
    /// `[0, width] × [0, height]`.
    Rectangle { width: f64, height: f64 },
    Polygon { vertices: Vec<[f64; 2]> },
}

/// A simple, counterclockwise polygon.
#[derive(Clone, Debug, PartialEq)]
pub struct Domain {
    kind: DomainKind,
    vertices: Vec<Point>,
    convex: bool,
}

impl Domain {
    pub fn new(kind: DomainKind) -> Result<Self> {
        match kind {
            DomainKind::DiskPolygon { sides, radius } => Self::disk_polygon(sides, radius),
            DomainKind::Rectangle { width, height } => Self::rectangle(width, height),
            DomainKind::Polygon { vertices } => {
                Self::polygon(vertices.iter().map(|v| Point::new(v[0], v[1])).collect())
            }
        }
    }

    pub fn disk_polygon(sides: usize, radius: f64) -> Result<Self> {
        if sides < 3 || !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::DegeneratePolygon(format!(
                "disk polygon needs sides >= 3 and radius > 0 (got {sides}, {radius})"
            )));
        }
        let vertices = (0..sides)
            .map(|k| Point::from_polar(radius, 2.0 * PI * k as f64 / sides as f64))
            .collect();
        Self::build(DomainKind::DiskPolygon { sides, radius }, vertices)
    }

    pub fn rectangle(width: f64, height: f64) -> Result<Self> {
        if !(width > 0.0 && height > 0.0) {
            return Err(Error::DegeneratePolygon(format!(
                "rectangle needs positive sides (got {width} x {height})"
            )));
        }
        let vertices = vec![
            Point::new(0.0, 0.0),
            Point::new(width, 0.0),
            Point::new(width, height),
            Point::new(0.0, height),
        ];
        Self::build(DomainKind::Rectangle { width, height }, vertices)
    }

    /// Arbitrary simple polygon; clockwise input is reversed (keeping the
    /// first vertex first).
    pub fn polygon(vertices: Vec<Point>) -> Result<Self> {
        let kind = DomainKind::Polygon {
            vertices: vertices.iter().map(|p| [p.re, p.im]).collect(),
        };
        Self::build(kind, vertices)
    }

    /// The L-shaped hexagon `(0,0),(2,0),(2,1),(1,1),(1,2),(0,2)`.
    pub fn l_shape() -> Self {
        Self::polygon(
            [(0., 0.), (2., 0.), (2., 1.), (1., 1.), (1., 2.), (0., 2.)]
                .iter()
                .map(|&(x, y)| Point::new(x, y))
                .collect(),
        )
        .expect("L-shape is simple")
    }

    fn build(kind: DomainKind, mut vertices: Vec<Point>) -> Result<Self> {
        let n = vertices.len();
        if n < 3 {
            return Err(Error::DegeneratePolygon(format!("{n} vertices")));
        }
        if vertices.iter().any(|p| !p.re.is_finite() || !p.im.is_finite()) {
            return Err(Error::DegeneratePolygon("non-finite vertex".into()));
        }
        for i in 0..n {
            if vertices[i] == vertices[(i + 1) % n] {
                return Err(Error::DegeneratePolygon(format!("repeated vertex {i}")));
            }
        }
        let area = shoelace(&vertices);
        if area == 0.0 {
            return Err(Error::DegeneratePolygon("zero area".into()));
        }
        if area < 0.0 {
            vertices[1..].reverse();
        }
        check_simple(&vertices)?;
        let convex = (0..n).all(|i| {
            orient2d(vertices[i], vertices[(i + 1) % n], vertices[(i + 2) % n]) >= 0.0
        });
        Ok(Self { kind, vertices, convex })
    }

    pub fn kind(&self) -> &DomainKind {
        &self.kind
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn is_convex(&self) -> bool {
        self.convex
    }

    pub fn area(&self) -> f64 {
        shoelace(&self.vertices)
    }

    pub fn edge(&self, i: usize) -> (Point, Point) {
        let n = self.vertices.len();
        (self.vertices[i % n], self.vertices[(i + 1) % n])
    }

    pub fn edge_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn perimeter(&self) -> f64 {
        (0..self.edge_count())
            .map(|i| {
                let (a, b) = self.edge(i);
                (b - a).norm()
            })
            .sum()
    }

    pub fn bbox(&self) -> (Point, Point) {
        let mut lo = self.vertices[0];
        let mut hi = self.vertices[0];
        for p in &self.vertices {
            lo = Point::new(lo.re.min(p.re), lo.im.min(p.im));
            hi = Point::new(hi.re.max(p.re), hi.im.max(p.im));
        }
        (lo, hi)
    }

    pub fn diameter(&self) -> f64 {
        let mut d: f64 = 0.0;
        for a in &self.vertices {
            for b in &self.vertices {
                d = d.max((a - b).norm());
            }
        }
        d
    }

    /// Area centroid.
    pub fn centroid(&self) -> Point {
        let n = self.vertices.len();
        let mut c = Point::new(0.0, 0.0);
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            let cross = a.re * b.im - b.re * a.im;
            c += (a + b) * cross;
        }
        c / (6.0 * self.area())
    }

    pub fn boundary_distance(&self, p: Point) -> f64 {
        (0..self.edge_count())
            .map(|i| {
                let (a, b) = self.edge(i);
                segment_distance(p, a, b)
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Crossing-number test; points on the boundary may land either side.
    pub fn contains_strict(&self, p: Point) -> bool {
        let mut inside = false;
        let n = self.vertices.len();
        let mut j = n - 1;
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[j];
            if (a.im > p.im) != (b.im > p.im) {
                let x = a.re + (p.im - a.im) * (b.re - a.re) / (b.im - a.im);
                if p.re < x {
                    inside = !inside;
                }
            }
            j = i;
        }
        inside
    }

    /// Signed distance to the boundary: positive inside, negative outside.
    pub fn signed_distance(&self, p: Point) -> f64 {
        let d = self.boundary_distance(p);
        if self.contains_strict(p) {
            d
        } else {
            -d
        }
    }

    /// Inside or within `tol` of the boundary.
    pub fn contains(&self, p: Point, tol: f64) -> bool {
        self.contains_strict(p) || self.boundary_distance(p) <= tol
    }

    /// Point at arclength `t` along the boundary from vertex 0 (taken
    /// modulo the perimeter).
    pub fn point_at_arclength(&self, t: f64) -> Point {
        let total = self.perimeter();
        let mut t = t.rem_euclid(total);
        for i in 0..self.edge_count() {
            let (a, b) = self.edge(i);
            let len = (b - a).norm();
            if t <= len || i + 1 == self.edge_count() {
                return a + (b - a) * (t / len).min(1.0);
            }
            t -= len;
        }
        unreachable!("polygon has edges")
    }

    /// Arclength position of the boundary point nearest to `p`, and the
    /// distance to it.
    pub fn project(&self, p: Point) -> (f64, f64) {
        let mut best = (0.0, f64::INFINITY);
        let mut start = 0.0;
        for i in 0..self.edge_count() {
            let (a, b) = self.edge(i);
            let ab = b - a;
            let len = ab.norm();
            let t = (((p - a) * ab.conj()).re / (len * len)).clamp(0.0, 1.0);
            let d = (p - (a + ab * t)).norm();
            if d < best.1 {
                best = (start + t * len, d);
            }
            start += len;
        }
        best
    }
}

fn check_simple(v: &[Point]) -> Result<()> {
    let n = v.len();
    for i in 0..n {
        let (a, b) = (v[i], v[(i + 1) % n]);
        for j in i + 1..n {
            let (c, d) = (v[j], v[(j + 1) % n]);
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                // Adjacent edges share one endpoint; they must not fold back.
                let (shared, p, q) = if j == i + 1 { (b, a, d) } else { (a, b, c) };
                if orient2d(p, shared, q) == 0.0 && ((p - shared) * (q - shared).conj()).re > 0.0 {
                    return Err(Error::SelfIntersecting { first: i, second: j });
                }
                continue;
            }
            if segments_intersect(a, b, c, d) {
                return Err(Error::SelfIntersecting { first: i, second: j });
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_square() {
        let d = Domain::rectangle(1.0, 1.0).unwrap();
        assert!(d.is_convex());
        assert_eq!(d.area(), 1.0);
        assert_eq!(d.perimeter(), 4.0);
    }

    #[test]
    fn regular_64_gon_area() {
        let d = Domain::disk_polygon(64, 1.0).unwrap();
        assert!(d.is_convex());
        let expected = 32.0 * (PI / 32.0).sin();
        assert!((d.area() - expected).abs() < 1e-13);
        assert!((d.area() - 3.1365).abs() < 1e-4);
    }

    #[test]
    fn l_shape_is_not_convex() {
        let d = Domain::l_shape();
        assert!(!d.is_convex());
        assert_eq!(d.area(), 3.0);
    }

    #[test]
    fn bowtie_reports_crossing_edges() {
        let pts = [(0., 0.), (2., 0.), (0., 1.), (0.5, 1.5)]
            .iter()
            .map(|&(x, y)| Point::new(x, y))
            .collect();
        match Domain::polygon(pts) {
            Err(Error::SelfIntersecting { first, second }) => {
                assert_eq!((first, second), (1, 3));
            }
            other => panic!("expected self-intersection, got {other:?}"),
        }
    }

    #[test]
    fn clockwise_input_is_reoriented() {
        let pts = [(0., 0.), (0., 1.), (1., 1.), (1., 0.)]
            .iter()
            .map(|&(x, y)| Point::new(x, y))
            .collect();
        let d = Domain::polygon(pts).unwrap();
        assert!(d.area() > 0.0);
        assert_eq!(d.vertices()[0], Point::new(0.0, 0.0));
    }

    #[test]
    fn degenerate_inputs_rejected() {
        assert!(Domain::disk_polygon(2, 1.0).is_err());
        assert!(Domain::rectangle(0.0, 1.0).is_err());
        let line = vec![Point::new(0., 0.), Point::new(1., 0.), Point::new(2., 0.)];
        assert!(matches!(Domain::polygon(line), Err(Error::DegeneratePolygon(_))));
    }

    #[test]
    fn arclength_round_trip() {
        let d = Domain::l_shape();
        for k in 0..40 {
            let t = 8.0 * k as f64 / 40.0;
            let p = d.point_at_arclength(t);
            let (s, dist) = d.project(p);
            assert!(dist < 1e-14);
            assert!((s - t).abs() < 1e-12 || (s - t).abs() > 8.0 - 1e-12);
        }
    }

    #[test]
    fn signed_distance_sign() {
        let d = Domain::l_shape();
        assert!(d.signed_distance(Point::new(0.5, 0.5)) > 0.0);
        assert!(d.signed_distance(Point::new(1.5, 1.5)) < 0.0);
        assert!((d.signed_distance(Point::new(1.5, 1.5)) + 0.5).abs() < 1e-15);
    }
}
