use std::ffi::{c_char, CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use distortion_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 512];
    unsafe {
        distortion_last_error(buf.as_mut_ptr(), buf.len());
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

fn square(edge: f64) -> *mut DistortionMesh {
    let spec = CString::new("rect:1:1").unwrap();
    let mut mesh = ptr::null_mut();
    let s = unsafe { distortion_mesh_triangulate(spec.as_ptr(), edge, &mut mesh) };
    assert_eq!(s, DistortionStatus::Ok, "{}", last_error());
    mesh
}

fn vertices(mesh: *const DistortionMesh) -> Vec<f64> {
    let n = unsafe { distortion_mesh_vertex_count(mesh) };
    let mut xy = vec![0.0; 2 * n];
    assert_eq!(unsafe { distortion_mesh_vertices(mesh, xy.as_mut_ptr(), n) }, DistortionStatus::Ok);
    xy
}

#[test]
fn identity_energies() {
    let mesh = square(0.2);
    let xy = vertices(mesh);
    let mut map = ptr::null_mut();
    unsafe {
        assert_eq!(distortion_map_new(mesh, xy.as_ptr(), xy.len() / 2, &mut map), DistortionStatus::Ok);
        distortion_mesh_free(mesh);
        let mut e = 0.0;
        for (f, p, want) in [
            (DistortionFunctional::MeanDistortion, 3.0, 1.0),
            (DistortionFunctional::InverseEnergy, 2.0, 1.0),
            (DistortionFunctional::Dirichlet, 0.0, 2.0),
        ] {
            assert_eq!(distortion_map_energy(map, f, p, &mut e), DistortionStatus::Ok);
            assert!((e - want).abs() < 1e-12, "{f:?}: {e}");
        }
        assert_eq!(
            distortion_map_energy(map, DistortionFunctional::MeanDistortion, 1.0, &mut e),
            DistortionStatus::InvalidArgument
        );
        assert!(last_error().contains("exponent"));
        let mut j = 0.0;
        assert_eq!(distortion_map_min_jacobian(map, &mut j), DistortionStatus::Ok);
        assert!((j - 1.0).abs() < 1e-12);
        assert_eq!(last_error(), "");
        distortion_map_free(map);
    }
}

#[test]
fn errors_are_reported() {
    unsafe {
        let mut mesh = ptr::null_mut();
        let bad = CString::new("blob").unwrap();
        assert_eq!(distortion_mesh_triangulate(bad.as_ptr(), 0.1, &mut mesh), DistortionStatus::InvalidArgument);
        assert!(mesh.is_null());
        assert!(!last_error().is_empty());
        assert_eq!(distortion_mesh_triangulate(ptr::null(), 0.1, &mut mesh), DistortionStatus::NullPointer);

        // a clockwise triangle
        let xy = [0.0, 0.0, 0.0, 1.0, 1.0, 0.0];
        let tri = [0u32, 1, 2];
        let ring = [0u32, 1, 2];
        let s = distortion_mesh_new(xy.as_ptr(), 3, tri.as_ptr(), 1, ring.as_ptr(), 3, &mut mesh);
        assert_eq!(s, DistortionStatus::InvalidMesh, "{}", last_error());

        let sq = square(0.5);
        let mut map = ptr::null_mut();
        let short = [0.0; 4];
        assert_ne!(distortion_map_new(sq, short.as_ptr(), 2, &mut map), DistortionStatus::Ok);
        let mut buf = [0.0; 2];
        assert_eq!(distortion_mesh_vertices(sq, buf.as_mut_ptr(), 1), DistortionStatus::InvalidArgument);
        distortion_mesh_free(sq);

        // null handles are inert
        distortion_mesh_free(ptr::null_mut());
        distortion_map_free(ptr::null_mut());
        distortion_solution_free(ptr::null_mut());
        assert_eq!(distortion_mesh_vertex_count(ptr::null()), 0);
        assert_eq!(distortion_last_error(ptr::null_mut(), 0), last_error().len());
    }
}

#[test]
fn truncated_error_message() {
    unsafe {
        let mut mesh = ptr::null_mut();
        distortion_mesh_triangulate(ptr::null(), 0.1, &mut mesh);
        let mut buf = [1 as c_char; 4];
        let full = distortion_last_error(buf.as_mut_ptr(), buf.len());
        assert!(full > 3);
        assert_eq!(buf[3], 0);
    }
}

#[test]
fn minimize_problem() {
    let problem = CString::new(
        r#"{
            "source": {"domain": {"kind": "disk-polygon", "sides": 32, "radius": 1.0}, "edge": 0.2},
            "target": {"kind": "disk-polygon", "sides": 32, "radius": 1.0},
            "boundary": {"kind": "wobble", "samples": 32},
            "functional": {"kind": "mean-distortion", "p": 2.0}
        }"#,
    )
    .unwrap();
    unsafe {
        let mut sol = ptr::null_mut();
        let s = distortion_minimize(problem.as_ptr(), ptr::null(), -1, &mut sol);
        assert_eq!(s, DistortionStatus::Ok, "{}", last_error());
        let mut converged = false;
        let mut iters = 0usize;
        let mut energy = 0.0;
        distortion_solution_converged(sol, &mut converged);
        distortion_solution_iterations(sol, &mut iters);
        distortion_solution_energy(sol, &mut energy);
        assert!(converged && iters > 0 && energy >= 1.0, "{converged} {iters} {energy}");

        let mut map = ptr::null_mut();
        assert_eq!(distortion_solution_map(sol, &mut map), DistortionStatus::Ok);
        distortion_solution_free(sol);
        let mut j = 0.0;
        distortion_map_min_jacobian(map, &mut j);
        assert!(j > 0.0);
        // the minimizer's own mean distortion is the reported energy, up to the
        // target-side discretization
        let mut own = 0.0;
        distortion_map_energy(map, DistortionFunctional::MeanDistortion, 2.0, &mut own);
        assert!(own.is_finite() && own >= 1.0);
        let n = distortion_map_vertex_count(map);
        let mut xy = vec![0.0; 2 * n];
        assert_eq!(distortion_map_targets(map, xy.as_mut_ptr(), n), DistortionStatus::Ok);
        assert!(xy.chunks(2).all(|c| c[0].hypot(c[1]) <= 1.0 + 1e-9));
        distortion_map_free(map);

        let bad = CString::new("{").unwrap();
        assert_eq!(distortion_minimize(bad.as_ptr(), ptr::null(), 0, &mut sol), DistortionStatus::Io);
    }
}

#[test]
fn header_declares_every_export() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header = std::fs::read_to_string(dir.join("include/distortion.h")).unwrap();
    let source = std::fs::read_to_string(dir.join("src/lib.rs")).unwrap();
    let exports: Vec<&str> = source
        .split("extern \"C\" fn ")
        .skip(1)
        .map(|s| s.split('(').next().unwrap())
        .collect();
    assert!(exports.len() >= 15);
    for name in exports {
        assert!(header.contains(&format!("{name}(")), "{name} missing from header");
    }
}

/// Compiles the C smoke program against the header and the shared library.
#[test]
fn c_program_links() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let exe = std::env::current_exe().unwrap();
    let lib_dir = exe.parent().and_then(|d| d.parent()).unwrap().to_path_buf();
    if !lib_dir.join("libdistortion_ffi.so").exists() && !lib_dir.join("libdistortion_ffi.dylib").exists() {
        eprintln!("shared library not built; skipping");
        return;
    }
    let out = std::env::temp_dir().join(format!("distortion-smoke-{}", std::process::id()));
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let status = Command::new(&cc)
        .arg(dir.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(dir.join("include"))
        .arg("-L")
        .arg(&lib_dir)
        .args(["-ldistortion_ffi", "-lm", "-o"])
        .arg(&out)
        .status();
    let Ok(status) = status else {
        eprintln!("no C compiler ({cc}); skipping");
        return;
    };
    assert!(status.success(), "C compilation failed");
    let run = Command::new(&out).env("LD_LIBRARY_PATH", &lib_dir).env("DYLD_LIBRARY_PATH", &lib_dir).output().unwrap();
    let _ = std::fs::remove_file(&out);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert!(String::from_utf8_lossy(&run.stdout).starts_with("ok "));
}
