use dnls_ffi::*;
use std::ffi::CStr;
use std::ptr;

fn gaussian(l: f64, n: usize) -> Vec<f64> {
    let dx = 2.0 * l / n as f64;
    (0..n)
        .flat_map(|k| {
            let x = -l + k as f64 * dx;
            [(-x * x / 2.0).exp(), 0.0]
        })
        .collect()
}

fn l2(v: &[f64], dx: f64) -> f64 {
    (v.iter().map(|a| a * a).sum::<f64>() * dx).sqrt()
}

fn last_error() -> String {
    let p = dnls_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn plan_round_trip_and_flow() {
    let (l, n) = (40.0, 1024);
    let mut plan = ptr::null_mut();
    assert_eq!(
        unsafe { dnls_plan_new(l, n, 1.0, &mut plan) },
        DnlsStatus::Ok
    );
    assert_eq!(unsafe { dnls_plan_len(plan) }, n);
    let f = gaussian(l, n);
    let mut spec = vec![0.0; 2 * n];
    let mut back = vec![0.0; 2 * n];
    unsafe {
        assert_eq!(
            dnls_plan_forward(plan, f.as_ptr(), spec.as_mut_ptr()),
            DnlsStatus::Ok
        );
        assert_eq!(
            dnls_plan_inverse(plan, spec.as_ptr(), back.as_mut_ptr()),
            DnlsStatus::Ok
        );
    }
    let err = f
        .iter()
        .zip(&back)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(err < 1e-7, "{err:.2e}");
    let dx = 2.0 * l / n as f64;
    let dxi = std::f64::consts::PI / l;
    assert!((l2(&spec, dxi) / l2(&f, dx) - 1.0).abs() < 1e-8);

    // in place
    let mut u = f.clone();
    unsafe {
        assert_eq!(
            dnls_linear_flow(plan, 1.0, u.as_ptr(), u.as_mut_ptr()),
            DnlsStatus::Ok
        )
    };
    assert!((l2(&u, dx) / l2(&f, dx) - 1.0).abs() < 1e-8);
    unsafe { dnls_plan_free(plan) };
}

#[test]
fn state_outlives_plan() {
    let (l, n) = (40.0, 1024);
    let mut plan = ptr::null_mut();
    let mut state = ptr::null_mut();
    let u0: Vec<f64> = gaussian(l, n).iter().map(|v| 0.1 * v).collect();
    unsafe {
        assert_eq!(dnls_plan_new(l, n, 1.0, &mut plan), DnlsStatus::Ok);
        assert_eq!(
            dnls_state_new(plan, 1.0, u0.as_ptr(), &mut state),
            DnlsStatus::Ok
        );
        dnls_plan_free(plan);
        assert_eq!(dnls_state_advance(state, 1.0, 0.01), DnlsStatus::Ok);
    }
    let (mut t, mut drift, mut e) = (0.0, 1.0, 0.0);
    let mut u = vec![0.0; 2 * n];
    unsafe {
        assert_eq!(
            dnls_state_read(state, &mut t, u.as_mut_ptr(), &mut drift, &mut e),
            DnlsStatus::Ok
        );
        assert_eq!(
            dnls_state_read(
                state,
                ptr::null_mut(),
                ptr::null_mut(),
                ptr::null_mut(),
                ptr::null_mut()
            ),
            DnlsStatus::Ok
        );
    }
    assert_eq!(t, 1.0);
    assert!(drift < 1e-8);
    assert!(e > 0.0 && u.iter().all(|v| v.is_finite()));
    unsafe {
        assert_eq!(
            dnls_state_advance(state, 2.0, -0.1),
            DnlsStatus::InvalidArgument
        );
        dnls_state_free(state);
    }
}

#[test]
fn vops_match_on_odd_data() {
    let (l, n) = (8.0, 1024);
    let dx = 2.0 * l / n as f64;
    let psi: Vec<f64> = (0..n)
        .flat_map(|k| {
            let x = -l + k as f64 * dx;
            [x * (-x * x).exp(), 0.0]
        })
        .collect();
    let mut ops = ptr::null_mut();
    let mut v = vec![0.0; 2 * n];
    let mut back = vec![0.0; 2 * n];
    unsafe {
        assert_eq!(dnls_vops_new(1.0, &mut ops), DnlsStatus::Ok);
        assert_eq!(
            dnls_vops_apply(ops, l, n, 10.0, false, psi.as_ptr(), v.as_mut_ptr()),
            DnlsStatus::Ok
        );
        assert_eq!(
            dnls_vops_apply(ops, l, n, 10.0, true, v.as_ptr(), back.as_mut_ptr()),
            DnlsStatus::Ok
        );
        dnls_vops_free(ops);
    }
    assert!((l2(&v, dx) / l2(&psi, dx) - 1.0).abs() < 1e-3);
    let err = psi
        .iter()
        .zip(&back)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(err < 1e-3, "{err:.2e}");
}

#[test]
fn scalar_functions() {
    let (mut t, mut r, mut fr) = ([0.0; 2], [0.0; 2], [0.0; 2]);
    unsafe {
        assert_eq!(
            dnls_scattering(1.0, 2.0, t.as_mut_ptr(), r.as_mut_ptr()),
            DnlsStatus::Ok
        );
        assert_eq!(dnls_fresnel_fr(0.0, fr.as_mut_ptr()), DnlsStatus::Ok);
    }
    // T = i xi / (i xi - q), R = T - 1
    assert!((t[0] - 0.8).abs() < 1e-15 && (t[1] + 0.4).abs() < 1e-15);
    assert!((r[0] + 0.2).abs() < 1e-15 && (r[1] + 0.4).abs() < 1e-15);
    assert_eq!(fr, [0.5, 0.0]);
}

#[test]
fn errors_set_status_and_message() {
    dnls_clear_error();
    assert!(dnls_last_error().is_null());
    let mut plan = ptr::null_mut();
    assert_eq!(
        unsafe { dnls_plan_new(40.0, 1001, 1.0, &mut plan) },
        DnlsStatus::InvalidGrid
    );
    assert!(plan.is_null());
    assert!(last_error().contains("1001"));
    assert_eq!(
        unsafe { dnls_plan_new(40.0, 1024, -1.0, &mut plan) },
        DnlsStatus::Domain
    );
    let mut out = [0.0; 2];
    assert_eq!(
        unsafe { dnls_fresnel_fr(-1.0, out.as_mut_ptr()) },
        DnlsStatus::Domain
    );
    assert_eq!(
        unsafe { dnls_fresnel_fr(1.0, ptr::null_mut()) },
        DnlsStatus::NullPointer
    );
    assert!(last_error().contains("null"));
    assert_eq!(
        unsafe { dnls_plan_forward(ptr::null(), out.as_ptr(), out.as_mut_ptr()) },
        DnlsStatus::NullPointer
    );
    assert_eq!(unsafe { dnls_plan_len(ptr::null()) }, 0);
    unsafe {
        dnls_plan_free(ptr::null_mut());
        dnls_state_free(ptr::null_mut());
        dnls_vops_free(ptr::null_mut());
    }
    dnls_clear_error();
    assert!(dnls_last_error().is_null());
}

#[test]
fn header_declares_the_interface() {
    let h =
        std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/dnls.h")).unwrap();
    for sym in [
        "typedef struct DnlsPlan DnlsPlan",
        "DNLS_STATUS_OK = 0",
        "DNLS_STATUS_PANIC",
        "dnls_last_error",
        "dnls_plan_new",
        "dnls_vops_apply",
        "dnls_state_read",
        "dnls_fresnel_fr",
    ] {
        assert!(h.contains(sym), "missing {sym}");
    }
}

#[test]
fn header_compiles_as_c() {
    let dir = env!("CARGO_MANIFEST_DIR");
    let src = "#include \"dnls.h\"\nint main(void) { DnlsPlan *p = 0; return dnls_plan_new(40.0, 1024, 1.0, &p) == DNLS_STATUS_OK ? 0 : 1; }\n";
    let tmp = tempfile::tempdir().unwrap();
    let c = tmp.path().join("smoke.c");
    std::fs::write(&c, src).unwrap();
    let out = std::process::Command::new("cc")
        .args(["-fsyntax-only", "-Wall", "-Werror", "-I"])
        .arg(format!("{dir}/include"))
        .arg(&c)
        .output()
        .expect("C compiler available");
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}
