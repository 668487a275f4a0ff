//! Randomized invariants of the geometry, mapping, energy, Hopf and
//! trajectory layers.

use std::sync::Arc;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use distortion::energy::{holder_check, inverse_energy, mean_distortion, weighted_dirichlet, Quadrature, WeightFn};
use distortion::geometry::{shoelace, triangulate, winding_number, Domain, TriangleMesh};
use distortion::hopf::{gamma_field, hopf_differential, hv_derivatives, integral_identity};
use distortion::io::{synthetic_pair, MapFile, MeshFile, MeshSource, SyntheticPair};
use distortion::mapping::DiscreteMap;
use distortion::quaddiff::{trace, Polynomial, QuadraticDifferential, TraceOptions, TrajectoryKind};
use distortion::synth::{wobble_boundary, Affine, BumpMap};
use distortion::{Complex64, Point};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn complex(r: f64) -> impl Strategy<Value = Complex64> {
    (-r..r, -r..r).prop_map(|(a, b)| c(a, b))
}

/// Orientation-preserving affine part `(a, b)` with `|b| < 0.9 |a|`.
fn affine() -> impl Strategy<Value = Affine> {
    (0.3f64..3.0, 0.0..std::f64::consts::TAU, 0.0f64..0.9, 0.0..std::f64::consts::TAU)
        .prop_map(|(r, t, k, s)| Affine::new(Complex64::from_polar(r, t), Complex64::from_polar(r * k, s)))
}

fn disk_mesh(sides: usize, edge: f64) -> Arc<TriangleMesh> {
    Arc::new(triangulate(&Domain::disk_polygon(sides, 1.0).unwrap(), edge).unwrap())
}

/// A bump diffeomorphism around a random affine map, sampled on the disk.
fn smooth_map(seed: u64, m: &Arc<TriangleMesh>) -> DiscreteMap {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = Affine::random(&mut rng, 0.7);
    let f = BumpMap::random_around(&mut rng, a, c(0.0, 0.0), 0.9, 3, 0.7);
    DiscreteMap::from_fn(m.clone(), |z| f.eval(z))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn meshes_tile_their_domain(sides in 3usize..40, radius in 0.2f64..3.0, rel_edge in 0.08f64..0.5) {
        let d = Domain::disk_polygon(sides, radius).unwrap();
        let m = triangulate(&d, rel_edge * radius).unwrap();
        prop_assert!(m.min_area() > 0.0);
        prop_assert!((m.total_area() - d.area()).abs() <= 1e-12 * d.area().max(1.0));
        prop_assert!(shoelace(&m.boundary_polygon()) > 0.0);
        prop_assert!(d.is_convex());
    }

    #[test]
    fn triangulation_is_deterministic(w in 0.5f64..3.0, h in 0.5f64..3.0, edge in 0.1f64..0.6) {
        let d = Domain::rectangle(w, h).unwrap();
        prop_assert_eq!(triangulate(&d, edge).unwrap(), triangulate(&d, edge).unwrap());
    }

    #[test]
    fn boundary_targets_wind_once(samples in 16usize..200, edge in 0.1f64..0.4) {
        let d = Domain::disk_polygon(48, 1.0).unwrap();
        let m = triangulate(&d, edge).unwrap();
        let b = wobble_boundary(&d, samples).unwrap();
        let targets: Vec<Point> = b.boundary_targets(&m, &d).unwrap().into_iter().map(|(_, p)| p).collect();
        prop_assert_eq!(winding_number(&targets, c(0.05, -0.02)), 1);
    }

    #[test]
    fn affine_distortion_algebra(a in affine(), shift in complex(2.0)) {
        let m = disk_mesh(12, 0.5);
        let f = DiscreteMap::from_fn(m, |z| a.apply(z) + shift);
        let exact = a.distortion();
        for t in f.derivatives().triangles {
            prop_assert!((t.jacobian - (t.fz.norm_sqr() - t.fzb.norm_sqr())).abs() <= 1e-14 * t.fz.norm_sqr().max(1.0) * 10.0);
            prop_assert!(t.distortion >= 1.0);
            prop_assert!((t.distortion - exact).abs() <= 1e-12 * exact);
        }
    }

    #[test]
    fn conformal_maps_have_unit_distortion(a in complex(3.0), b in complex(3.0)) {
        prop_assume!(a.norm() > 0.05);
        let f = DiscreteMap::from_fn(disk_mesh(16, 0.4), |z| a * z + b);
        for t in f.derivatives().triangles {
            prop_assert!((t.distortion - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn orientation_flag_matches_image_area(seed in 0u64..1000) {
        let m = disk_mesh(16, 0.3);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        use rand::Rng;
        let targets: Vec<Point> = m.vertices().iter().map(|&z| z + c(rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3))).collect();
        let f = DiscreteMap::new(m.clone(), targets).unwrap();
        let flipped = f.derivatives().flipped();
        for t in 0..m.triangle_count() {
            let [a, b, cc] = f.image_corners(t);
            let signed = ((b - a).conj() * (cc - a)).im;
            prop_assert_eq!(flipped.contains(&t), signed <= 0.0);
        }
    }

    #[test]
    fn duality_is_exact(seed in 0u64..10_000, p in 1.01f64..4.0) {
        let f = smooth_map(seed, &disk_mesh(24, 0.25));
        let h = f.invert().unwrap();
        let e = mean_distortion(&f, p).total;
        prop_assert!((inverse_energy(&h, p).total - e).abs() <= 1e-10 * e);
        let phi = WeightFn::pullback(f.clone(), p);
        let lhs = weighted_dirichlet(&h, &phi, Quadrature::Exact).unwrap().total;
        prop_assert!((lhs - 2.0 * e).abs() <= 1e-10 * e);
    }

    #[test]
    fn mean_distortion_is_monotone_in_p(seed in 0u64..10_000, p in 1.01f64..3.0, dp in 0.0f64..2.0) {
        let f = smooth_map(seed, &disk_mesh(24, 0.25));
        prop_assert!(mean_distortion(&f, p).total <= mean_distortion(&f, p + dp).total * (1.0 + 1e-14));
    }

    #[test]
    fn holder_never_violated(seed in 0u64..10_000, p in 1.05f64..4.0) {
        let m = disk_mesh(24, 0.25);
        let f = smooth_map(seed, &m);
        let image = Arc::new(m.with_vertices(f.targets().to_vec()).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let u = BumpMap::random_in_disk(&mut rng, c(0.0, 0.0), 0.9, 2, 0.6);
        let g = DiscreteMap::new(image, m.vertices().iter().map(|&z| u.eval(z)).collect()).unwrap();
        let rec = holder_check(&f, &g, p).unwrap();
        prop_assert!(rec.gap >= -1e-9 * rec.rhs, "{:?}", rec);
    }

    #[test]
    fn hopf_order_and_gamma(seed in 0u64..10_000, c2 in 0.0f64..1.0) {
        let h = smooth_map(seed, &disk_mesh(24, 0.2));
        for g in gamma_field(&h).gamma {
            let m = g.norm();
            prop_assert!(m == 0.0 || (m - 1.0).abs() <= 1e-15);
        }
        let field = hopf_differential(&h, &WeightFn::Radial { c0: 1.0, c2 }, Quadrature::Centroid).unwrap();
        let rep = hv_derivatives(&h, &field).unwrap();
        for r in &rep.triangles {
            prop_assert!(r.order_violation <= 1e-12 && r.horizontal_residual <= 1e-12);
        }
    }

    #[test]
    fn identity_terms_are_translation_invariant(seed in 0u64..50, shift in complex(5.0)) {
        let (h, big_h, _) = synthetic_pair(SyntheticPair::Smooth, seed, Some(0.2)).unwrap();
        let r0 = integral_identity(&h, &big_h, &WeightFn::Constant(1.0), Quadrature::Centroid).unwrap();
        let moved = |m: &DiscreteMap| DiscreteMap::new(m.reference().clone(), m.targets().iter().map(|&w| w + shift).collect()).unwrap();
        let r1 = integral_identity(&moved(&h), &moved(&big_h), &WeightFn::Constant(1.0), Quadrature::Centroid).unwrap();
        prop_assert!(r0.rhs_term2 >= 0.0);
        let scale = r0.rhs_term1.abs() + r0.rhs_term2.abs() + r0.lhs.abs();
        prop_assert!((r0.lhs - r1.lhs).abs() <= 1e-9 * scale);
        prop_assert!((r0.rhs_term1 - r1.rhs_term1).abs() <= 1e-9 * scale);
        prop_assert!((r0.rhs_term2 - r1.rhs_term2).abs() <= 1e-9 * scale);
    }

    #[test]
    fn affine_pairs_satisfy_the_identity(seed in 0u64..10_000) {
        let (h, big_h, tol) = synthetic_pair(SyntheticPair::Affine, seed, None).unwrap();
        let rec = integral_identity(&h, &big_h, &WeightFn::Radial { c0: 0.5, c2: 1.0 }, Quadrature::Exact).unwrap();
        prop_assert!(rec.gap <= tol, "{:?}", rec);
    }

    /// Checked on segments that resolve the local curvature (no longer than
    /// a quarter of their distance to a zero of φ); the chord error grows
    /// like the fourth power of that ratio.
    #[test]
    fn vertical_tangent_condition(c0 in complex(0.5), start in complex(0.8)) {
        let qd = QuadraticDifferential::polynomial(Polynomial::new(vec![c0, c(1.0, 0.0)]), Domain::disk_polygon(64, 2.0).unwrap()).unwrap();
        prop_assume!(qd.eval(start).norm() > 0.05);
        let t = trace(&qd, start, TrajectoryKind::Vertical, &TraceOptions::new(1e-3)).unwrap();
        let mut checked = 0;
        for w in t.points.windows(2) {
            let d = w[1] - w[0];
            let mid = (w[0] + w[1]) * 0.5;
            if d.norm() > 0.25 * qd.critical_distance(mid) {
                continue;
            }
            let phi = qd.eval(mid);
            prop_assert!((phi * d * d).re / (phi.norm() * d.norm_sqr()) <= -1.0 + 1e-6);
            checked += 1;
        }
        prop_assert!(checked * 10 >= (t.points.len() - 1) * 9);
    }

    #[test]
    fn map_files_round_trip(seed in 0u64..10_000) {
        let f = smooth_map(seed, &disk_mesh(20, 0.3));
        let file = MapFile::new(MeshSource::Inline(MeshFile::from(&**f.reference())), &f);
        let text = serde_json::to_string(&file).unwrap();
        let back: MapFile = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back.load(std::path::Path::new(".")).unwrap(), f);
    }
}
