//! Holomorphic quadratic differentials `φ(z) dz²`: trajectory tracing,
//! `|φ|^{1/2}`-lengths, natural parameters, the minimality property of
//! vertical arcs and the Fubini-type comparison over trajectory families.

mod checks;
mod oracle;
mod poly;
mod trace;

use std::fmt;
use std::sync::Arc;

use crate::geometry::Domain;
use crate::{Complex64, Error, Point, Result};

pub use checks::{
    domain_integral, fubini_check, minimality_check, vertical_family, Family, FamilyLine, FubiniRecord,
    LineComparison, MinimalityRecord,
};
pub use oracle::{hausdorff_to_z_trajectory, z_vertical_trajectory, CurveDistance};
pub use poly::Polynomial;
pub use trace::{
    natural_parameter, phi_length, phi_length_subdivided, straightness, trace, Termination, TraceOptions, Trajectory,
    TrajectoryKind,
};

type PhiFn = Arc<dyn Fn(Point) -> Complex64 + Send + Sync>;

/// How the coefficient φ is given.
#[derive(Clone)]
pub enum QdForm {
    Polynomial(Polynomial),
    Analytic { f: PhiFn, label: String },
}

impl fmt::Debug for QdForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QdForm::Polynomial(p) => write!(f, "Polynomial({p})"),
            QdForm::Analytic { label, .. } => write!(f, "Analytic({label})"),
        }
    }
}

/// A holomorphic quadratic differential on a polygonal domain.
#[derive(Clone, Debug)]
pub struct QuadraticDifferential {
    form: QdForm,
    domain: Domain,
    critical_points: Vec<Point>,
    max_modulus: f64,
    eps_crit: f64,
}

/// Default critical-ball threshold relative to `max |φ|`.
pub const EPS_CRIT_REL: f64 = 1e-8;

impl QuadraticDifferential {
    pub fn polynomial(p: Polynomial, domain: Domain) -> Result<Self> {
        if p.is_zero() {
            return Err(Error::InvalidArgument("φ ≡ 0 has no trajectories".into()));
        }
        let critical_points = p.roots();
        Ok(Self::assemble(QdForm::Polynomial(p), domain, critical_points))
    }

    pub fn parse(text: &str, domain: Domain) -> Result<Self> {
        Self::polynomial(Polynomial::parse(text)?, domain)
    }

    /// A closure-valued φ; its zeros in the domain must be supplied.
    pub fn analytic(
        f: impl Fn(Point) -> Complex64 + Send + Sync + 'static,
        label: &str,
        critical_points: Vec<Point>,
        domain: Domain,
    ) -> Self {
        Self::assemble(QdForm::Analytic { f: Arc::new(f), label: label.into() }, domain, critical_points)
    }

    fn assemble(form: QdForm, domain: Domain, critical_points: Vec<Point>) -> Self {
        let mut qd = Self { form, domain, critical_points, max_modulus: 0.0, eps_crit: 0.0 };
        // Maximum modulus is attained on the boundary.
        let mut m: f64 = 0.0;
        for i in 0..qd.domain.edge_count() {
            let (a, b) = qd.domain.edge(i);
            for k in 0..=256 {
                m = m.max(qd.eval(a + (b - a) * (k as f64 / 256.0)).norm());
            }
        }
        qd.max_modulus = m;
        qd.eps_crit = EPS_CRIT_REL * m;
        qd
    }

    pub fn with_eps_crit(mut self, eps: f64) -> Self {
        self.eps_crit = eps;
        self
    }

    pub fn form(&self) -> &QdForm {
        &self.form
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn critical_points(&self) -> &[Point] {
        &self.critical_points
    }

    pub fn max_modulus(&self) -> f64 {
        self.max_modulus
    }

    pub fn eps_crit(&self) -> f64 {
        self.eps_crit
    }

    pub fn eval(&self, z: Point) -> Complex64 {
        match &self.form {
            QdForm::Polynomial(p) => p.eval(z),
            QdForm::Analytic { f, .. } => f(z),
        }
    }

    pub fn is_critical(&self, z: Point) -> bool {
        self.eval(z).norm() <= self.eps_crit
    }

    /// The square root of `φ(z)` on the branch closest to `prev`.
    pub fn sqrt_near(&self, z: Point, prev: Complex64) -> Complex64 {
        let r = self.eval(z).sqrt();
        if (r * prev.conj()).re < 0.0 {
            -r
        } else {
            r
        }
    }

    /// Distance from `z` to the nearest critical point, `∞` if none.
    pub fn critical_distance(&self, z: Point) -> f64 {
        self.critical_points.iter().map(|c| (c - z).norm()).fold(f64::INFINITY, f64::min)
    }
}
