//! The `distortion` command line.
//!
//! Every command writes a JSON report (checks with their tolerances plus the
//! command's record) and figures into `--out`. Exit status: 0 when every
//! check passed, 2 for configuration errors, 3 for numerical failures
//! (including non-convergence), 4 when a property check failed.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::energy::{Quadrature, WeightFn};
use crate::geometry::triangulate;
use crate::hopf::{holomorphy_residual, hopf_differential, hv_derivatives, integral_identity, integral_identity_smooth, HvReport, ResidualRecord};
use crate::io::{self, MapFile, MeshFile, MeshSource};
use crate::optimize::{choquet_experiment, minimize, uniqueness_experiment, Functional, Init, SolveOptions, SolveReport};
use crate::quaddiff::{
    fubini_check, hausdorff_to_z_trajectory, minimality_check, straightness, trace, vertical_family, CurveDistance,
    MinimalityRecord, Polynomial, QuadraticDifferential, TraceOptions, Trajectory, TrajectoryKind,
};
use crate::report::{self, Check, Report};
use crate::{svg, Error, Point, Result};

pub const EXIT_OK: u8 = 0;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;
pub const EXIT_VIOLATION: u8 = 4;

#[derive(Debug, Parser)]
#[command(name = "distortion", version, about = "Mean-distortion minimization and identity checks for planar PL maps")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Output {
    /// Output directory (created if missing).
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Triangulate a domain.
    Mesh {
        /// `disk:N[:R]`, `rect:W:H`, `l-shape`, `sector:R0:R1:DEG[:N]` or a JSON file.
        #[arg(long)]
        domain: String,
        #[arg(long, default_value_t = 0.1)]
        mesh_edge: f64,
        #[command(flatten)]
        output: Output,
    },
    /// Minimize the problem's functional.
    Minimize {
        #[arg(long)]
        problem: PathBuf,
        /// Start from run 0 of this seed's random stream instead of the base map.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the exponent of a mean-distortion / inverse-energy problem.
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        tol_grad: Option<f64>,
        /// Edge of the target-side mesh of a mean-distortion problem.
        #[arg(long)]
        mesh_edge: Option<f64>,
        #[command(flatten)]
        output: Output,
    },
    /// Check the integral identity on a pair `h`, `H` with a common image.
    VerifyIdentity {
        #[arg(long)]
        pair: PathBuf,
        /// Overrides the pair's gap tolerance.
        #[arg(long)]
        tol: Option<f64>,
        #[command(flatten)]
        output: Output,
    },
    /// Horizontal/vertical derivative identities and holomorphy residual of a map.
    VerifyHopf {
        #[arg(long)]
        map: PathBuf,
        /// Use the map's own distortion `K^{p−1}` as weight (Φ ≡ 1 otherwise).
        #[arg(long)]
        p: Option<f64>,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        #[command(flatten)]
        output: Output,
    },
    /// Trace one trajectory of a polynomial quadratic differential.
    Trace {
        #[arg(long)]
        qd: String,
        #[arg(long, value_parser = io::parse_point)]
        start: Point,
        #[arg(long, default_value = "vertical")]
        kind: TrajectoryKind,
        #[arg(long, default_value_t = 1e-3)]
        step: f64,
        #[arg(long, default_value = "disk:64:2")]
        domain: String,
        /// Random competitors for the minimality check.
        #[arg(long, default_value_t = 200)]
        competitors: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Tolerance against the analytic curve (φ = z, vertical only).
        #[arg(long, default_value_t = 1e-4)]
        tol: f64,
        #[command(flatten)]
        output: Output,
    },
    /// Compare a vertical-trajectory family with the domain integrals.
    Fubini {
        #[arg(long)]
        qd: String,
        #[arg(long)]
        domain: String,
        /// Natural-parameter spacing of the family.
        #[arg(long, default_value_t = 1e-2)]
        spacing: f64,
        #[arg(long, default_value_t = 1e-3)]
        step: f64,
        #[arg(long, default_value_t = 0.02)]
        quad_edge: f64,
        /// `re(P)`, `im(P)` or `abs(P)` for a polynomial `P` in z.
        #[arg(long, default_value = "re(z)")]
        f: String,
        #[arg(long, default_value = "abs(z)")]
        g: String,
        /// Allowed gap between family and domain integrals.
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
        #[command(flatten)]
        output: Output,
    },
    /// Multi-start minimization.
    Uniqueness {
        #[arg(long)]
        problem: PathBuf,
        #[arg(long, default_value_t = 5)]
        starts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        tol_grad: Option<f64>,
        /// Allowed max pairwise vertex distance.
        #[arg(long, default_value_t = 1e-4)]
        tol: f64,
        #[command(flatten)]
        output: Output,
    },
    /// Harmonic extension vs p = 2 minimizer onto the L-shape.
    Choquet {
        #[arg(long, default_value_t = 0.1)]
        mesh_edge: f64,
        #[arg(long)]
        tol_grad: Option<f64>,
        #[command(flatten)]
        output: Output,
    },
    /// Collect the checks of every report under a directory.
    Report {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        output: Output,
    },
}

/// Exit status for a library error.
pub fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Numerical(_)
        | Error::NoInjectiveInit(_)
        | Error::NotInvertible { .. }
        | Error::BranchFlip { .. }
        | Error::CoverageGap { .. } => EXIT_NUMERICAL,
        _ => EXIT_CONFIG,
    }
}

/// Parses `argv`, runs the command and reports errors on stderr.
pub fn main_with_args<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match run(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn prepare(out: &Path) -> Result<()> {
    fs::create_dir_all(out)?;
    Ok(())
}

/// Writes `report.json`-style output and returns the exit status; a failed
/// check marked numerical (non-convergence) maps to 3, others to 4.
fn finish<T: Serialize>(out: &Path, name: &str, mut rep: Report<T>, artifacts: Vec<String>, numerical: &[&str]) -> Result<u8> {
    rep.artifacts = artifacts;
    report::write_json(&out.join(format!("{name}.json")), &rep)?;
    let failed: Vec<&Check> = rep.checks.iter().filter(|c| !c.passed).collect();
    for c in &failed {
        eprintln!("check failed: {} = {:e} (tolerance {:e})", c.name, c.value, c.tolerance);
    }
    Ok(if failed.is_empty() {
        EXIT_OK
    } else if failed.iter().all(|c| numerical.contains(&c.name.as_str())) {
        EXIT_NUMERICAL
    } else {
        EXIT_VIOLATION
    })
}

fn write(out: &Path, name: &str, text: &str) -> Result<String> {
    fs::write(out.join(name), text)?;
    Ok(name.to_string())
}

/// JSON files under `dir`, recursively.
fn json_files(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        if path.is_dir() {
            json_files(&path, out)?;
        } else if path.extension().is_some_and(|x| x == "json") {
            out.push(path);
        }
    }
    Ok(())
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("--{name} must be positive and finite, got {v}")))
    }
}

fn apply_p(functional: &mut Functional, p: Option<f64>) -> Result<()> {
    if let Some(p) = p {
        match functional {
            Functional::MeanDistortion { p: q } | Functional::InverseEnergy { p: q } => *q = p,
            Functional::WeightedDirichlet { .. } => {
                return Err(Error::InvalidArgument("--p does not apply to a weighted-Dirichlet problem".into()))
            }
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct MeshData {
    vertices: usize,
    triangles: usize,
    min_area: f64,
    max_edge: f64,
}

#[derive(Serialize)]
struct MinimizeData<'a> {
    report: &'a SolveReport,
    map_file: &'a str,
}

#[derive(Serialize)]
struct HopfData {
    weight: String,
    hv: HvReport,
    residual: Option<ResidualRecord>,
}

#[derive(Serialize)]
struct TraceData {
    trajectory: Trajectory,
    straightness: f64,
    analytic: Option<CurveDistance>,
    minimality: MinimalityRecord,
}

/// `re(P)`, `im(P)` or `abs(P)`.
fn scalar_field(text: &str) -> Result<Box<dyn Fn(Point) -> f64>> {
    let bad = || Error::InvalidArgument(format!("cannot parse field '{text}' (re(P), im(P) or abs(P))"));
    let (head, rest) = text.trim().split_once('(').ok_or_else(bad)?;
    let inner = rest.strip_suffix(')').ok_or_else(bad)?;
    let poly = Polynomial::parse(inner)?;
    Ok(match head.trim() {
        "re" => Box::new(move |z| poly.eval(z).re),
        "im" => Box::new(move |z| poly.eval(z).im),
        "abs" => Box::new(move |z| poly.eval(z).norm()),
        _ => return Err(bad()),
    })
}

pub fn run(command: &Command) -> Result<u8> {
    match command {
        Command::Mesh { domain, mesh_edge, output } => {
            check_positive("mesh-edge", *mesh_edge)?;
            let mesh = triangulate(&io::parse_domain(domain)?, *mesh_edge)?;
            prepare(&output.out)?;
            let artifacts = vec![
                write(&output.out, "mesh.json", &report::to_json(&MeshFile::from(&mesh))?)?,
                write(&output.out, "mesh.svg", &svg::render_mesh(&mesh))?,
            ];
            let data = MeshData {
                vertices: mesh.vertex_count(),
                triangles: mesh.triangle_count(),
                min_area: mesh.min_area(),
                max_edge: mesh.max_edge(),
            };
            let checks = vec![Check::at_least("min_area", data.min_area, f64::MIN_POSITIVE)];
            finish(&output.out, "mesh-report", Report::new("mesh", None, checks, data), artifacts, &[])
        }
        Command::Minimize { problem, seed, p, tol_grad, mesh_edge, output } => {
            let (mut file, _) = io::read_problem(problem)?;
            apply_p(&mut file.functional, *p)?;
            if let Some(t) = tol_grad {
                check_positive("tol-grad", *t)?;
                file.options.tol_grad = Some(*t);
            }
            if let Some(e) = mesh_edge {
                check_positive("mesh-edge", *e)?;
                file.options.inverse_edge = Some(*e);
            }
            let init = match seed {
                Some(s) => {
                    file.options.seed = *s;
                    Init::Random { run: 0 }
                }
                None => Init::Base,
            };
            let problem = file.build(problem.parent().unwrap_or(Path::new(".")))?;
            prepare(&output.out)?;
            let r = minimize(&problem, init)?;
            let map_file = MapFile::new(MeshSource::Inline(MeshFile::from(&**r.map.reference())), &r.map);
            let target = problem.discretize()?.image;
            let artifacts = vec![
                write(&output.out, "map.json", &report::to_json(&map_file)?)?,
                write(&output.out, "map.svg", &svg::render_map(&r.map, Some(&target), &[]))?,
                {
                    report::write_trace_csv(&output.out.join("energy_trace.csv"), &r.energy_trace)?;
                    "energy_trace.csv".to_string()
                },
            ];
            let monotone = r.energy_trace.windows(2).all(|w| w[1].1 <= w[0].1);
            let checks = vec![
                Check::at_most("grad_norm", r.grad_norm, r.tol_grad),
                Check::holds("converged", r.converged),
                Check::at_least("min_j", r.min_j, f64::MIN_POSITIVE),
                Check::holds("energy_nonincreasing", monotone),
            ];
            let data = MinimizeData { report: &r, map_file: "map.json" };
            let rep = Report::new("minimize", Some(problem.options.seed), checks, data);
            finish(&output.out, "minimize", rep, artifacts, &["grad_norm", "converged"])
        }
        Command::VerifyIdentity { pair, tol, output } => {
            let pair = io::read_pair(pair)?;
            let tolerance = tol.unwrap_or(pair.tolerance);
            prepare(&output.out)?;
            let rec = match &pair.closed_form {
                Some((h, big_h)) => integral_identity_smooth(pair.h.reference(), h, big_h, &pair.weight, pair.quadrature)?,
                None => integral_identity(&pair.h, &pair.big_h, &pair.weight, pair.quadrature)?,
            };
            let checks = vec![Check::at_most("relative_gap", rec.relative_gap(), tolerance)];
            let artifacts = vec![write(&output.out, "pair.svg", &svg::render_map(&pair.h, None, &[]))?];
            finish(&output.out, "identity", Report::new("verify-identity", None, checks, rec), artifacts, &[])
        }
        Command::VerifyHopf { map, p, tol, output } => {
            let h = io::read_map(map)?;
            let (weight, label) = match p {
                Some(p) if *p >= 1.0 => (WeightFn::OwnDistortion { p: *p }, format!("own-distortion p={p}")),
                Some(p) => return Err(Error::InvalidArgument(format!("--p must be ≥ 1, got {p}"))),
                None => (WeightFn::Constant(1.0), "constant 1".to_string()),
            };
            prepare(&output.out)?;
            let field = hopf_differential(&h, &weight, Quadrature::Centroid)?;
            let hv = hv_derivatives(&h, &field)?;
            let residual = holomorphy_residual(&field).ok();
            let artifacts = vec![write(&output.out, "hopf.svg", &svg::render_hopf(&field))?];
            let checks = vec![Check::at_most("hv_max_residual", hv.max_residual, *tol)];
            let data = HopfData { weight: label, hv, residual };
            finish(&output.out, "hopf", Report::new("verify-hopf", None, checks, data), artifacts, &[])
        }
        Command::Trace { qd, start, kind, step, domain, competitors, seed, tol, output } => {
            check_positive("step", *step)?;
            let d = io::parse_domain(domain)?;
            let poly = Polynomial::parse(qd)?;
            let is_z = poly.coeffs().len() == 2 && poly.coeffs()[0].norm() == 0.0 && poly.coeffs()[1] == Point::new(1.0, 0.0);
            let q = QuadraticDifferential::polynomial(poly, d)?;
            prepare(&output.out)?;
            let t = trace(&q, *start, *kind, &TraceOptions::new(*step))?;
            let minimality = minimality_check(&q, &t, *competitors, *seed)?;
            let analytic = (is_z && *kind == TrajectoryKind::Vertical).then(|| hausdorff_to_z_trajectory(&t.points, *start));
            let mut checks = vec![Check::at_least("minimality_margin", minimality.margin, -1e-9)];
            if let Some(a) = &analytic {
                checks.push(Check::at_most("hausdorff_to_analytic", a.hausdorff, *tol));
            }
            let artifacts = vec![
                write(&output.out, "trajectory.json", &report::to_json(&t)?)?,
                write(&output.out, "trajectory.svg", &svg::render_trajectories(q.domain(), &[&t]))?,
            ];
            let data = TraceData { straightness: straightness(&q, &t), trajectory: t, analytic, minimality };
            finish(&output.out, "trace", Report::new("trace", Some(*seed), checks, data), artifacts, &[])
        }
        Command::Fubini { qd, domain, spacing, step, quad_edge, f, g, tol, output } => {
            for (n, v) in [("spacing", spacing), ("step", step), ("quad-edge", quad_edge)] {
                check_positive(n, *v)?;
            }
            let q = QuadraticDifferential::parse(qd, io::parse_domain(domain)?)?;
            let (ff, gg) = (scalar_field(f)?, scalar_field(g)?);
            prepare(&output.out)?;
            let family = vertical_family(&q, *spacing, *step)?;
            let rec = fubini_check(&q, &*ff, &*gg, &family, *quad_edge)?;
            let trajs: Vec<&Trajectory> = family.lines.iter().flat_map(|l| l.trajectories.iter()).collect();
            let artifacts = vec![
                write(&output.out, "family.json", &report::to_json(&family)?)?,
                write(&output.out, "family.svg", &svg::render_trajectories(q.domain(), &trajs))?,
            ];
            let checks = vec![
                Check::at_most("reconstruction_error", rec.reconstruction_error, *tol),
                Check::holds("domain_inequality_if_all_lines_hold", !rec.all_lines_hold || rec.domain_inequality_holds(*tol)),
            ];
            finish(&output.out, "fubini", Report::new("fubini", None, checks, rec), artifacts, &[])
        }
        Command::Uniqueness { problem, starts, seed, p, tol_grad, tol, output } => {
            let (mut file, _) = io::read_problem(problem)?;
            apply_p(&mut file.functional, *p)?;
            if let Some(t) = tol_grad {
                check_positive("tol-grad", *t)?;
                file.options.tol_grad = Some(*t);
            }
            let pr = file.build(problem.parent().unwrap_or(Path::new(".")))?;
            prepare(&output.out)?;
            let rec = uniqueness_experiment(&pr, *starts, *seed)?;
            report::write_matrix_csv(&output.out.join("pairwise.csv"), &rec.pairwise_linf)?;
            let checks = vec![
                Check::holds("all_converged", rec.all_converged),
                Check::at_most("max_pairwise", rec.max_pairwise, *tol),
            ];
            let rep = Report::new("uniqueness", Some(*seed), checks, rec);
            finish(&output.out, "uniqueness", rep, vec!["pairwise.csv".into()], &["all_converged"])
        }
        Command::Choquet { mesh_edge, tol_grad, output } => {
            check_positive("mesh-edge", *mesh_edge)?;
            prepare(&output.out)?;
            let rec = choquet_experiment(*mesh_edge, SolveOptions { tol_grad: *tol_grad, ..Default::default() })?;
            let artifacts = vec![
                write(&output.out, "harmonic.svg", &svg::render_map(&rec.harmonic, Some(&rec.target), &rec.exterior_vertices))?,
                write(&output.out, "minimizer.svg", &svg::render_map(&rec.minimizer.map, None, &[]))?,
            ];
            let checks = vec![
                Check::at_least("exterior_vertices", rec.exterior_vertices.len() as f64, 1.0),
                Check::at_least("max_exterior_margin", rec.max_margin, 1e-3),
                Check::at_least("p2_min_j", rec.p2_min_j, f64::MIN_POSITIVE),
                Check::holds("p2_converged", rec.p2_converged),
            ];
            finish(&output.out, "choquet", Report::new("choquet", None, checks, rec), artifacts, &["p2_converged"])
        }
        Command::Report { input, output } => {
            let mut entries = Vec::new();
            json_files(input, &mut entries)?;
            entries.sort();
            let mut rows = Vec::new();
            let mut summary = Vec::new();
            for path in entries {
                let value: serde_json::Value = io::read_json(&path)?;
                let (Some(command), Some(checks)) = (value.get("command"), value.get("checks")) else {
                    continue;
                };
                let name = path.strip_prefix(input).unwrap_or(&path).to_string_lossy().into_owned();
                let checks: Vec<Check> = checks
                    .as_array()
                    .into_iter()
                    .flatten()
                    .filter_map(|c| {
                        let get = |k: &str| c.get(k).and_then(|v| v.as_f64());
                        let (value, tol) = (get("value").unwrap_or(f64::NAN), get("tolerance")?);
                        let name = c.get("name")?.as_str()?;
                        Some(match c.get("comparison")?.as_str()? {
                            "at-most" => Check::at_most(name, value, tol),
                            _ => Check::at_least(name, value, tol),
                        })
                    })
                    .collect();
                let passed = checks.iter().all(|c| c.passed);
                summary.push(serde_json::json!({"file": name, "command": command, "passed": passed}));
                rows.extend(checks.into_iter().map(|c| (name.clone(), c)));
            }
            prepare(&output.out)?;
            report::write_checks_csv(&output.out.join("summary.csv"), &rows)?;
            let failed = rows.iter().filter(|(_, c)| !c.passed).count();
            let checks = vec![Check::at_most("failed_checks", failed as f64, 0.0)];
            let rep = Report::new("report", None, checks, summary);
            finish(&output.out, "summary", rep, vec!["summary.csv".into()], &[])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fields() {
        let f = scalar_field("abs(z^2)").unwrap();
        assert!((f(Point::new(0.0, 2.0)) - 4.0).abs() < 1e-15);
        assert!(scalar_field("sin(z)").is_err());
    }

    #[test]
    fn config_errors_exit_2() {
        assert_eq!(main_with_args(["distortion", "mesh", "--domain", "blob"]), EXIT_CONFIG);
        assert_eq!(main_with_args(["distortion", "frobnicate"]), EXIT_CONFIG);
        assert_eq!(exit_code(&Error::Numerical("x".into())), EXIT_NUMERICAL);
    }

    #[test]
    fn domain_ranges() {
        let dir = std::env::temp_dir().join("distortion-cli-unit");
        assert_eq!(
            main_with_args(["distortion", "mesh", "--domain", "l-shape", "--mesh-edge", "-1", "--out", dir.to_str().unwrap()]),
            EXIT_CONFIG
        );
    }
}
