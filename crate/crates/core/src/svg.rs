//! SVG figures on a fixed 800×800 canvas: meshes, maps over their target
//! outline, |φ| heat maps and trajectory families.

use std::fmt::Write;

use crate::geometry::{Domain, TriangleMesh};
use crate::hopf::HopfField;
use crate::mapping::DiscreteMap;
use crate::quaddiff::Trajectory;
use crate::Point;

pub const CANVAS: f64 = 800.0;
const MARGIN: f64 = 20.0;

const STYLE: &str = "<style>\
.outline{fill:none;stroke:#222;stroke-width:1.5}\
.target{fill:none;stroke:#c33;stroke-width:1.5;stroke-dasharray:6 3}\
.tri{fill:none;stroke:#46a;stroke-width:0.5}\
.flipped{fill:#f88;stroke:#a00;stroke-width:0.8}\
.heat{stroke:none}\
.trajectory{fill:none;stroke:#284;stroke-width:1}\
.exterior{fill:#d22;stroke:none}\
.notice{font:16px sans-serif;fill:#555}\
</style>";

/// World-to-canvas transform fitting a bounding box, y axis up.
struct View {
    lo: Point,
    scale: f64,
}

impl View {
    fn fit<'a>(points: impl Iterator<Item = &'a Point>) -> Option<Self> {
        let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in points {
            if p.re.is_finite() && p.im.is_finite() {
                lo = Point::new(lo.re.min(p.re), lo.im.min(p.im));
                hi = Point::new(hi.re.max(p.re), hi.im.max(p.im));
            }
        }
        if !(lo.re <= hi.re) {
            return None;
        }
        let span = (hi.re - lo.re).max(hi.im - lo.im).max(1e-12);
        Some(Self { lo: Point::new(lo.re, hi.im), scale: (CANVAS - 2.0 * MARGIN) / span })
    }

    fn xy(&self, p: Point) -> (f64, f64) {
        (MARGIN + (p.re - self.lo.re) * self.scale, MARGIN + (self.lo.im - p.im) * self.scale)
    }

    fn points(&self, pts: &[Point]) -> String {
        let mut s = String::new();
        for (k, &p) in pts.iter().enumerate() {
            let (x, y) = self.xy(p);
            if k > 0 {
                s.push(' ');
            }
            let _ = write!(s, "{x:.3},{y:.3}");
        }
        s
    }
}

fn open() -> String {
    format!("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{CANVAS}\" height=\"{CANVAS}\" viewBox=\"0 0 {CANVAS} {CANVAS}\">{STYLE}\n")
}

/// Minimal valid document carrying a notice instead of a figure.
pub fn empty(notice: &str) -> String {
    let text = notice.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;");
    format!("{}<text class=\"notice\" x=\"{MARGIN}\" y=\"{}\">{text}</text>\n</svg>\n", open(), CANVAS / 2.0)
}

fn polygon(out: &mut String, view: &View, pts: &[Point], class: &str, extra: &str) {
    let _ = writeln!(out, "<polygon class=\"{class}\" points=\"{}\"{extra}/>", view.points(pts));
}

fn outline(out: &mut String, view: &View, domain: &Domain, class: &str) {
    polygon(out, view, domain.vertices(), class, "");
}

/// Wireframe of a mesh, one `tri` polygon per triangle.
pub fn render_mesh(mesh: &TriangleMesh) -> String {
    let Some(view) = View::fit(mesh.vertices().iter()) else {
        return empty("empty mesh");
    };
    let mut out = open();
    for t in 0..mesh.triangle_count() {
        polygon(&mut out, &view, &mesh.corners(t), "tri", "");
    }
    out.push_str("</svg>\n");
    out
}

/// Image wireframe over the target outline; triangles with `J ≤ 0` get
/// class `flipped`, vertices listed in `exterior` a `exterior` marker.
pub fn render_map(map: &DiscreteMap, target: Option<&Domain>, exterior: &[usize]) -> String {
    let extra = target.map(|d| d.vertices()).unwrap_or(&[]);
    let Some(view) = View::fit(map.targets().iter().chain(extra)) else {
        return empty("empty map");
    };
    let mut out = open();
    if let Some(d) = target {
        outline(&mut out, &view, d, "target");
    }
    let derivs = map.derivatives();
    for t in 0..map.reference().triangle_count() {
        let class = if derivs.triangles[t].jacobian > 0.0 { "tri" } else { "flipped" };
        polygon(&mut out, &view, &map.image_corners(t), class, "");
    }
    for &v in exterior {
        let (x, y) = view.xy(map.targets()[v]);
        let _ = writeln!(out, "<circle class=\"exterior\" cx=\"{x:.3}\" cy=\"{y:.3}\" r=\"3\"/>");
    }
    out.push_str("</svg>\n");
    out
}

/// `|φ|` per triangle of the reference mesh, white (0) to dark red (max).
pub fn render_hopf(field: &HopfField) -> String {
    let mesh = &field.reference;
    let Some(view) = View::fit(mesh.vertices().iter()) else {
        return empty("empty field");
    };
    let max = field.max_modulus();
    let mut out = open();
    for t in 0..mesh.triangle_count() {
        let u = if max > 0.0 { (field.phi[t].norm() / max).clamp(0.0, 1.0) } else { 0.0 };
        let g = (255.0 * (1.0 - u)).round() as u8;
        let fill = format!(" fill=\"#{:02x}{g:02x}{g:02x}\"", (255.0 - 80.0 * u).round() as u8);
        polygon(&mut out, &view, &mesh.corners(t), "heat", &fill);
    }
    out.push_str("</svg>\n");
    out
}

/// Trajectories as polylines over the domain outline.
pub fn render_trajectories(domain: &Domain, trajectories: &[&Trajectory]) -> String {
    if trajectories.is_empty() {
        return empty("no trajectories");
    }
    let Some(view) = View::fit(domain.vertices().iter()) else {
        return empty("empty domain");
    };
    let mut out = open();
    outline(&mut out, &view, domain, "outline");
    for tr in trajectories {
        let _ = writeln!(out, "<polyline class=\"trajectory\" points=\"{}\"/>", view.points(&tr.points));
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::geometry::triangulate;
    use crate::quaddiff::{vertical_family, QuadraticDifferential};

    #[test]
    fn mesh_triangle_count() {
        let mesh = triangulate(&Domain::rectangle(1.0, 1.0).unwrap(), 0.3).unwrap();
        let svg = render_mesh(&mesh);
        assert_eq!(svg.matches("class=\"tri\"").count(), mesh.triangle_count());
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
    }

    #[test]
    fn flipped_and_exterior_classes() {
        let mesh = Arc::new(triangulate(&Domain::rectangle(1.0, 1.0).unwrap(), 0.5).unwrap());
        let map = DiscreteMap::from_fn(mesh, |z| z.conj());
        let svg = render_map(&map, None, &[0, 1]);
        assert_eq!(svg.matches("class=\"flipped\"").count(), map.reference().triangle_count());
        assert_eq!(svg.matches("class=\"exterior\"").count(), 2);
    }

    #[test]
    fn unit_field_gives_parallel_strokes() {
        let qd = QuadraticDifferential::parse("1", Domain::rectangle(1.0, 1.0).unwrap()).unwrap();
        let fam = vertical_family(&qd, 0.1, 0.05).unwrap();
        let trajs: Vec<&Trajectory> = fam.lines.iter().flat_map(|l| l.trajectories.iter()).collect();
        let svg = render_trajectories(qd.domain(), &trajs);
        assert_eq!(svg.matches("<polyline").count(), 10);
        for line in svg.lines().filter(|l| l.starts_with("<polyline")) {
            let pts = line.split('"').nth(3).unwrap();
            let xs: Vec<&str> = pts.split(' ').map(|p| p.split(',').next().unwrap()).collect();
            assert!(xs.iter().all(|x| *x == xs[0]));
        }
    }

    #[test]
    fn empty_artifacts() {
        let svg = render_trajectories(&Domain::l_shape(), &[]);
        assert!(svg.contains("no trajectories") && svg.ends_with("</svg>\n"));
    }
}
