use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use wentzell_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as std::ffi::c_char; 256];
    unsafe {
        wz_last_error(buf.as_mut_ptr(), buf.len());
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

fn assemble(form: i32, k: f64, gamma: f64) -> (i32, *mut WzSystem) {
    let mut sys = ptr::null_mut();
    let rc = unsafe { wz_system_assemble(form, 0.5, k, 8, 1.0, 1.0, 1.0, gamma, gamma, &mut sys) };
    (rc, sys)
}

#[test]
fn resolvent_of_constant() {
    let (rc, sys) = assemble(WZ_FORM_DIVERGENCE, 0.5, 0.0);
    assert_eq!(rc, WZ_OK);
    unsafe {
        assert_eq!(wz_system_class(sys), WZ_CLASS_WEAK);
        let n = wz_system_size(sys);
        let mut f = vec![0.0; n];
        assert_eq!(wz_system_interpolate(sys, [1.0].as_ptr(), 1, f.as_mut_ptr(), n), WZ_OK);
        let mut u = vec![0.0; n];
        let mut res = f64::NAN;
        assert_eq!(wz_resolvent_solve(sys, 2.0, f.as_ptr(), u.as_mut_ptr(), n, &mut res), WZ_OK);
        assert!(res <= 1e-10);
        let (mut m, mut e) = (0.0, 1.0);
        assert_eq!(wz_system_norms(sys, u.as_ptr(), n, &mut m, &mut e), WZ_OK);
        assert!(e.abs() < 1e-12, "energy of a constant: {e}");
        assert!(m > 0.0);
        wz_system_free(sys);
    }
}

#[test]
fn error_codes_and_messages() {
    let (rc, sys) = assemble(WZ_FORM_NONDIVERGENCE, 2.5, 0.0);
    assert_ne!(rc, WZ_OK);
    assert!(sys.is_null());
    assert!(!last_error().is_empty());

    let (rc, _) = assemble(WZ_FORM_DIVERGENCE, 0.5, 0.5);
    assert_eq!(rc, WZ_ERR_CONFIG);
    assert!(last_error().contains("gamma0"), "{}", last_error());

    let (rc, _) = assemble(7, 0.5, 0.0);
    assert_eq!(rc, WZ_ERR_INVALID);

    let (_, sys) = assemble(WZ_FORM_DIVERGENCE, 0.5, 0.0);
    unsafe {
        let n = wz_system_size(sys);
        let f = vec![1.0; n];
        let mut u = vec![0.0; n];
        assert_eq!(
            wz_resolvent_solve(sys, 0.0, f.as_ptr(), u.as_mut_ptr(), n, ptr::null_mut()),
            WZ_ERR_NOT_COERCIVE
        );
        assert_eq!(
            wz_resolvent_solve(sys, 1.0, f.as_ptr(), u.as_mut_ptr(), n - 1, ptr::null_mut()),
            WZ_ERR_LENGTH
        );
        assert_eq!(
            wz_resolvent_solve(ptr::null(), 1.0, f.as_ptr(), u.as_mut_ptr(), n, ptr::null_mut()),
            WZ_ERR_NULL
        );
        // success clears the message
        assert_eq!(wz_system_norms(sys, f.as_ptr(), n, ptr::null_mut(), ptr::null_mut()), WZ_OK);
        assert_eq!(wz_last_error(ptr::null_mut(), 0), 0);
        wz_system_free(sys);
        wz_system_free(ptr::null_mut());
    }
}

#[test]
fn run_from_config() {
    let json = CString::new(
        r#"{"operator":"nondivergence","coefficient":{"x0":0.5,"K":1.5},
            "wentzell":{"beta0":1,"beta1":1,"gamma0":-1,"gamma1":-1},
            "time":{"T":0.1,"dt":0.01},"mesh":{"n":8},"initial":"cosine"}"#,
    )
    .unwrap();
    unsafe {
        let mut tr = ptr::null_mut();
        assert_eq!(wz_run_config(json.as_ptr(), &mut tr), WZ_OK, "{}", last_error());
        assert_eq!(wz_trajectory_len(tr), 11);
        let (mut t, mut m0, mut m1) = (0.0, 0.0, 0.0);
        assert_eq!(wz_trajectory_state(tr, 0, ptr::null_mut(), &mut m0, ptr::null_mut()), WZ_OK);
        assert_eq!(wz_trajectory_state(tr, 10, &mut t, &mut m1, ptr::null_mut()), WZ_OK);
        assert!((t - 0.1).abs() < 1e-12);
        assert!(m1 < m0);
        assert_eq!(wz_trajectory_state(tr, 11, &mut t, ptr::null_mut(), ptr::null_mut()), WZ_ERR_LENGTH);
        let (mut c, mut e) = (0, 0);
        assert_eq!(wz_trajectory_checks(tr, &mut c, &mut e), WZ_OK);
        assert_eq!((c, e), (1, 1), "contraction, energy bound");

        let mut sys = ptr::null_mut();
        assert_eq!(wz_system_from_config(json.as_ptr(), &mut sys), WZ_OK);
        let n = wz_system_size(sys);
        let mut u = vec![0.0; n];
        assert_eq!(wz_trajectory_dofs(tr, 10, u.as_mut_ptr(), n), WZ_OK);
        let mut m = 0.0;
        wz_system_norms(sys, u.as_ptr(), n, &mut m, ptr::null_mut());
        assert_eq!(m, m1);
        wz_system_free(sys);
        wz_trajectory_free(tr);
    }

    let bad = CString::new(r#"{"operator":"divergence"}"#).unwrap();
    let mut tr = ptr::null_mut();
    assert_eq!(unsafe { wz_run_config(bad.as_ptr(), &mut tr) }, WZ_ERR_CONFIG);
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(wz_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

/// The generated header must compile as C and C++ when a compiler is around.
#[test]
fn header_compiles() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/wentzell.h");
    assert!(header.exists(), "build script did not write {}", header.display());
    let dir = tempfile_dir();
    let src = dir.join("use_header.c");
    std::fs::write(
        &src,
        format!(
            "#include \"{}\"\nint main(void) {{ WzSystem *s = 0; int rc = wz_system_assemble(WZ_FORM_DIVERGENCE, 0.5, 0.5, 8, 1.0, 1.0, 1.0, 0.0, 0.0, &s); wz_system_free(s); return rc; }}\n",
            header.display()
        ),
    )
    .unwrap();
    for (compiler, lang) in [("cc", "c"), ("c++", "c++")] {
        let Ok(out) = Command::new(compiler).args(["-fsyntax-only", "-Wall", "-Werror", "-x", lang]).arg(&src).output() else {
            eprintln!("{compiler} not available, skipping");
            continue;
        };
        assert!(out.status.success(), "{compiler}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

fn tempfile_dir() -> std::path::PathBuf {
    let d = std::env::temp_dir().join(format!("wentzell-ffi-{}", std::process::id()));
    std::fs::create_dir_all(&d).unwrap();
    d
}
