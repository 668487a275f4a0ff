//! Closed-form test maps and boundary data: affine maps, smooth bump
//! diffeomorphisms with Newton inverses, affine pairs with a common image,
//! and the boundary correspondences used by the experiments.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::geometry::{BoundaryMap, Domain};
use crate::mapping::SmoothMap;
use crate::{Complex64, Error, Point, Result};

/// `z ↦ a z + b z̄ + c`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Affine {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
}

impl Affine {
    pub fn new(a: Complex64, b: Complex64) -> Self {
        Self { a, b, c: Complex64::new(0.0, 0.0) }
    }

    pub fn identity() -> Self {
        Self::new(Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0))
    }

    pub fn rotation(theta: f64) -> Self {
        Self::new(Complex64::from_polar(1.0, theta), Complex64::new(0.0, 0.0))
    }

    pub fn apply(&self, z: Point) -> Point {
        self.a * z + self.b * z.conj() + self.c
    }

    pub fn jacobian(&self) -> f64 {
        self.a.norm_sqr() - self.b.norm_sqr()
    }

    pub fn distortion(&self) -> f64 {
        (self.a.norm_sqr() + self.b.norm_sqr()) / self.jacobian()
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &Affine) -> Affine {
        Affine {
            a: self.a * inner.a + self.b * inner.b.conj(),
            b: self.a * inner.b + self.b * inner.a.conj(),
            c: self.apply(inner.c),
        }
    }

    pub fn inverse(&self) -> Affine {
        let j = self.jacobian();
        let lin = Affine::new(self.a.conj() / j, -self.b / j);
        Affine { c: -lin.apply(self.c), ..lin }
    }

    /// Random orientation-preserving affine map with `|b| ≤ ratio·|a|`.
    pub fn random(rng: &mut ChaCha8Rng, ratio: f64) -> Self {
        let a = Complex64::from_polar(rng.gen_range(0.5..2.0), rng.gen_range(0.0..std::f64::consts::TAU));
        let b = Complex64::from_polar(a.norm() * ratio * rng.gen_range(0.0..1.0), rng.gen_range(0.0..std::f64::consts::TAU));
        Self::new(a, b)
    }
}

/// `a (1 − |z − c|²/r²)⁴` inside the disk `|z − c| < r`, 0 outside.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bump {
    pub center: Point,
    pub radius: f64,
    pub amplitude: Complex64,
}

/// Bound on `|∂_z B| + |∂_z̄ B|` per unit amplitude and inverse radius.
const BUMP_SLOPE: f64 = 2.23;

impl Bump {
    fn value_and_derivs(&self, z: Point) -> (Complex64, Complex64, Complex64) {
        let d = z - self.center;
        let u = 1.0 - d.norm_sqr() / (self.radius * self.radius);
        if u <= 0.0 {
            let zero = Complex64::new(0.0, 0.0);
            return (zero, zero, zero);
        }
        let r2 = self.radius * self.radius;
        let u3 = u * u * u;
        let dz = self.amplitude * (-4.0 * u3 / r2) * d.conj();
        let dzb = self.amplitude * (-4.0 * u3 / r2) * d;
        (self.amplitude * (u3 * u), dz, dzb)
    }
}

/// An affine map plus compactly supported bumps. With the bumps' total
/// slope below `|a| − |b|` this is a diffeomorphism, equal to the affine
/// part outside the supports.
#[derive(Clone, Debug, PartialEq)]
pub struct BumpMap {
    pub affine: Affine,
    pub bumps: Vec<Bump>,
}

impl BumpMap {
    pub fn eval(&self, z: Point) -> Point {
        self.affine.apply(z) + self.bumps.iter().map(|b| b.value_and_derivs(z).0).sum::<Complex64>()
    }

    /// `(f_z, f_z̄)` at `z`.
    pub fn wirtinger(&self, z: Point) -> (Complex64, Complex64) {
        let mut fz = self.affine.a;
        let mut fzb = self.affine.b;
        for b in &self.bumps {
            let (_, dz, dzb) = b.value_and_derivs(z);
            fz += dz;
            fzb += dzb;
        }
        (fz, fzb)
    }

    /// Solves `f(z) = w` by Newton's method from the affine inverse.
    pub fn inverse(&self, w: Point) -> Result<Point> {
        let mut z = self.affine.inverse().apply(w);
        for _ in 0..100 {
            let r = self.eval(z) - w;
            if r.norm() <= 1e-15 * (1.0 + w.norm()) {
                return Ok(z);
            }
            // Solve fz·δ + fzb·conj(δ) = −r.
            let (a, b) = self.wirtinger(z);
            let j = a.norm_sqr() - b.norm_sqr();
            let delta = (a.conj() * (-r) - b * (-r).conj()) / j;
            z += delta;
        }
        let r = (self.eval(z) - w).norm();
        if r <= 1e-12 * (1.0 + w.norm()) {
            Ok(z)
        } else {
            Err(Error::Numerical(format!("Newton inverse did not converge at {w} (residual {r:e})")))
        }
    }

    /// Identity plus `count` random bumps supported inside the disk of
    /// radius `inner_radius` about `center`, with total slope at most
    /// `slope` (so `J ≥ (1 − slope)²`).
    pub fn random_in_disk(rng: &mut ChaCha8Rng, center: Point, inner_radius: f64, count: usize, slope: f64) -> Self {
        Self::random_around(rng, Affine::identity(), center, inner_radius, count, slope)
    }

    /// `affine` plus random bumps as in [`BumpMap::random_in_disk`]; the
    /// slope budget is relative to `|a| − |b|`.
    pub fn random_around(rng: &mut ChaCha8Rng, affine: Affine, center: Point, inner_radius: f64, count: usize, slope: f64) -> Self {
        let budget = slope * (affine.a.norm() - affine.b.norm()) / count.max(1) as f64;
        let bumps = (0..count)
            .map(|_| {
                let radius = inner_radius * rng.gen_range(0.3..0.6);
                let reach = inner_radius - radius;
                let center = center + Complex64::from_polar(reach * rng.gen_range(0.0f64..1.0).sqrt(), rng.gen_range(0.0..std::f64::consts::TAU));
                let amp = budget * radius / BUMP_SLOPE * rng.gen_range(0.5..1.0);
                Bump { center, radius, amplitude: Complex64::from_polar(amp, rng.gen_range(0.0..std::f64::consts::TAU)) }
            })
            .collect();
        Self { affine, bumps }
    }
}

/// Two affine maps `h`, `H` on `X = S(regular n-gon)` with the same image:
/// `H = h ∘ f⁻¹` where `f = S R S⁻¹` permutes the vertices of `X`.
#[derive(Clone, Debug)]
pub struct AffinePair {
    pub domain: Domain,
    pub h: Affine,
    pub big_h: Affine,
    /// `f = H⁻¹ ∘ h`.
    pub f: Affine,
}

/// Two random bump diffeomorphisms of the unit 64-gon disk, equal to the
/// identity near its boundary (so they share boundary values and image).
pub fn smooth_pair(seed: u64) -> (BumpMap, BumpMap) {
    use rand::SeedableRng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let origin = Complex64::new(0.0, 0.0);
    let h = BumpMap::random_in_disk(&mut rng, origin, 0.9, 3, 0.5);
    let big_h = BumpMap::random_in_disk(&mut rng, origin, 0.9, 3, 0.5);
    (h, big_h)
}

impl SmoothMap for Affine {
    fn eval(&self, z: Point) -> Point {
        self.apply(z)
    }

    fn wirtinger(&self, _: Point) -> (Complex64, Complex64) {
        (self.a, self.b)
    }

    fn inverse(&self, w: Point) -> Result<Point> {
        Ok(Affine::inverse(self).apply(w))
    }
}

impl SmoothMap for BumpMap {
    fn eval(&self, z: Point) -> Point {
        BumpMap::eval(self, z)
    }

    fn wirtinger(&self, z: Point) -> (Complex64, Complex64) {
        BumpMap::wirtinger(self, z)
    }

    fn inverse(&self, w: Point) -> Result<Point> {
        BumpMap::inverse(self, w)
    }
}

impl AffinePair {
    pub fn new(sides: usize, shear: Affine, turns: usize, h: Affine) -> Result<Self> {
        let ngon = Domain::disk_polygon(sides, 1.0)?;
        let domain = Domain::polygon(ngon.vertices().iter().map(|&z| shear.apply(z)).collect())?;
        let rot = Affine::rotation(std::f64::consts::TAU * turns as f64 / sides as f64);
        let f = shear.compose(&rot).compose(&shear.inverse());
        let big_h = h.compose(&f.inverse());
        Ok(Self { domain, h, big_h, f })
    }

    pub fn random(rng: &mut ChaCha8Rng, sides: usize) -> Result<Self> {
        let shear = Affine::random(rng, 0.5);
        let turns = rng.gen_range(1..sides);
        let h = Affine { c: Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)), ..Affine::random(rng, 0.7) };
        Self::new(sides, shear, turns, h)
    }
}

/// Fraction map of the smooth degree-one circle homeomorphism
/// `s + 0.08 sin 2πs + 0.03 sin 4πs`.
pub fn wobble(s: f64) -> f64 {
    use std::f64::consts::TAU;
    s + 0.08 * (TAU * s).sin() + 0.03 * (2.0 * TAU * s).sin()
}

/// Disk-to-disk boundary data following [`wobble`].
pub fn wobble_boundary(target: &Domain, samples: usize) -> Result<BoundaryMap> {
    BoundaryMap::from_fractions(target, samples, wobble)
}

/// Arclength-proportional boundary data.
pub fn uniform_boundary(target: &Domain, samples: usize) -> Result<BoundaryMap> {
    BoundaryMap::from_fractions(target, samples, |s| s)
}

/// Target arclength (out of 8) of source fraction `s` for the Choquet
/// example: the whole reentrant part `(2,1) → (1,1) → (1,2)` is squeezed
/// into 5% of the circle.
fn choquet_arclength(s: f64) -> f64 {
    const KNOTS: [(f64, f64); 6] = [(0.0, 0.0), (0.05, 2.0), (0.5, 3.0), (0.55, 5.0), (0.95, 6.0), (1.0, 8.0)];
    for w in KNOTS.windows(2) {
        let ((s0, t0), (s1, t1)) = (w[0], w[1]);
        if s <= s1 {
            return t0 + (t1 - t0) * (s - s0) / (s1 - s0);
        }
    }
    8.0
}

/// Boundary data from the circle (fraction `s`) onto the L-shape
/// `(0,0),(2,0),(2,1),(1,1),(1,2),(0,2)`: `[0, .05]` covers the bottom edge,
/// `[.05, .5]` the right edge `x = 2`, `[.5, .55]` the reentrant corner,
/// `[.55, .95]` the top edge `y = 2` and `[.95, 1)` the left edge. Its
/// harmonic extension sends the disk center near `(1.21, 1.14)`, outside
/// the L.
pub fn choquet_boundary() -> Result<BoundaryMap> {
    let target = Domain::l_shape();
    // 400 samples put every knot and every L corner on a sample.
    BoundaryMap::from_fractions(&target, 400, |s| choquet_arclength(s) / 8.0)
}

/// Polygonal annular sector `{r0 < |z| < r1, |arg z| < half_angle}` with
/// `segments` pieces per arc.
pub fn sector(r0: f64, r1: f64, half_angle: f64, segments: usize) -> Result<Domain> {
    if !(0.0 < r0 && r0 < r1) || !(0.0 < half_angle && half_angle < std::f64::consts::PI) || segments == 0 {
        return Err(Error::InvalidArgument(format!("bad sector r0={r0} r1={r1} half_angle={half_angle} segments={segments}")));
    }
    let arc = |r: f64, from: f64, to: f64| {
        (0..=segments).map(move |k| Complex64::from_polar(r, from + (to - from) * k as f64 / segments as f64))
    };
    Domain::polygon(arc(r1, -half_angle, half_angle).chain(arc(r0, half_angle, -half_angle)).collect())
}
