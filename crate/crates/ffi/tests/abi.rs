use std::ffi::CStr;
use std::ptr;

use fracspec_ffi::*;

fn problem(coefficients: u32) -> FracspecProblem {
    FracspecProblem {
        dim: 1,
        n: 64,
        half_length: 4.0,
        boundary: 0,
        coefficients,
        bump_scale: 1.0,
        bump_width: 2.0,
    }
}

fn new_op(spec: &FracspecProblem) -> *mut FracspecOperator {
    let mut op = ptr::null_mut();
    assert_eq!(unsafe { fracspec_operator_new(spec, &mut op) }, FracspecStatus::Ok);
    assert!(!op.is_null());
    op
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(fracspec_last_error_message()) }
        .to_string_lossy()
        .into_owned()
}

fn dofs(op: *const FracspecOperator) -> usize {
    let mut n = 0;
    assert_eq!(unsafe { fracspec_operator_dof_count(op, &mut n) }, FracspecStatus::Ok);
    n
}

#[test]
fn eigenvalues_match_dirichlet_laplacian() {
    let op = new_op(&problem(0));
    let n = dofs(op);
    assert_eq!(n, 62);
    let mut lam = vec![0.0; n];
    assert_eq!(
        unsafe { fracspec_operator_eigenvalues(op, lam.as_mut_ptr(), n) },
        FracspecStatus::Ok
    );
    let h = 8.0 / 63.0;
    for (k, l) in lam.iter().enumerate() {
        let s = ((k + 1) as f64 * std::f64::consts::PI / (2.0 * 63.0)).sin();
        let exact = 4.0 / (h * h) * s * s;
        assert!((l - exact).abs() <= 1e-10 * exact);
    }
    unsafe { fracspec_operator_free(op) };
}

#[test]
fn power_propagator_and_recovery() {
    let op = new_op(&problem(1));
    let n = dofs(op);
    let u: Vec<f64> = (0..n).map(|i| (-((i as f64 - 31.0) / 8.0).powi(2)).exp()).collect();

    let mut half = vec![0.0; n];
    let mut twice = vec![0.0; n];
    let mut one = vec![0.0; n];
    unsafe {
        assert_eq!(
            fracspec_fractional_power(op, 0.5, u.as_ptr(), half.as_mut_ptr(), n),
            FracspecStatus::Ok
        );
        assert_eq!(
            fracspec_fractional_power(op, 0.5, half.as_ptr(), twice.as_mut_ptr(), n),
            FracspecStatus::Ok
        );
        assert_eq!(
            fracspec_fractional_power(op, 1.0, u.as_ptr(), one.as_mut_ptr(), n),
            FracspecStatus::Ok
        );
    }
    let scale = one.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(twice.iter().zip(&one).all(|(a, b)| (a - b).abs() <= 1e-10 * scale));

    let zeros = vec![0.0; n];
    let (mut re, mut im) = (vec![0.0; n], vec![0.0; n]);
    let status = unsafe {
        fracspec_unitary_propagate(
            op,
            0.5,
            1.0,
            u.as_ptr(),
            zeros.as_ptr(),
            re.as_mut_ptr(),
            im.as_mut_ptr(),
            n,
        )
    };
    assert_eq!(status, FracspecStatus::Ok);
    let before: f64 = u.iter().map(|v| v * v).sum();
    let after: f64 = re.iter().zip(&im).map(|(a, b)| a * a + b * b).sum();
    assert!((after - before).abs() <= 1e-10 * before);

    let mut rec = vec![0.0; n];
    assert_eq!(
        unsafe { fracspec_conormal_recover(op, 0.5, u.as_ptr(), rec.as_mut_ptr(), n) },
        FracspecStatus::Ok
    );
    let err: f64 = rec
        .iter()
        .zip(&half)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    let norm: f64 = half.iter().map(|v| v * v).sum::<f64>().sqrt();
    assert!(err <= 1e-3 * norm);
    unsafe { fracspec_operator_free(op) };
}

#[test]
fn nonlocality_probe_positive() {
    let op = new_op(&problem(0));
    let mut ratio = 0.0;
    assert_eq!(
        unsafe { fracspec_nonlocality_probe(op, 0.5, &mut ratio) },
        FracspecStatus::Ok
    );
    assert!(ratio > 1e-6);
    assert_eq!(
        unsafe { fracspec_nonlocality_probe(op, 1.0, &mut ratio) },
        FracspecStatus::InvalidArgument
    );
    unsafe { fracspec_operator_free(op) };
}

#[test]
fn error_codes_and_messages() {
    let mut op = ptr::null_mut();
    assert_eq!(
        unsafe { fracspec_operator_new(ptr::null(), &mut op) },
        FracspecStatus::NullPointer
    );
    assert!(last_error().contains("spec"));

    let bad = FracspecProblem {
        boundary: 7,
        ..problem(0)
    };
    assert_eq!(
        unsafe { fracspec_operator_new(&bad, &mut op) },
        FracspecStatus::InvalidArgument
    );
    assert!(op.is_null());
    assert!(last_error().contains("boundary"));

    let op = new_op(&problem(0));
    assert!(last_error().is_empty());
    let mut out = vec![0.0; 3];
    let f = [1.0; 3];
    assert_eq!(
        unsafe { fracspec_fractional_power(op, 0.5, f.as_ptr(), out.as_mut_ptr(), 3) },
        FracspecStatus::LengthMismatch
    );
    let n = dofs(op);
    let f = vec![1.0; n];
    assert_eq!(
        unsafe { fracspec_fractional_power(op, 0.5, f.as_ptr(), ptr::null_mut(), n) },
        FracspecStatus::NullPointer
    );
    let mut g = vec![0.0; n];
    assert_eq!(
        unsafe { fracspec_fractional_power(op, -0.5, f.as_ptr(), g.as_mut_ptr(), n) },
        FracspecStatus::InvalidArgument
    );
    assert!(last_error().contains("alpha"));
    assert_eq!(
        unsafe { fracspec_operator_dof_count(ptr::null(), ptr::null_mut()) },
        FracspecStatus::NullPointer
    );
    unsafe {
        fracspec_operator_free(op);
        fracspec_operator_free(ptr::null_mut());
    }
}

#[test]
fn header_declares_every_entry_point() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/fracspec.h")).unwrap();
    for name in [
        "fracspec_operator_new",
        "fracspec_operator_free",
        "fracspec_operator_dof_count",
        "fracspec_operator_eigenvalues",
        "fracspec_fractional_power",
        "fracspec_unitary_propagate",
        "fracspec_conormal_recover",
        "fracspec_nonlocality_probe",
        "fracspec_last_error_message",
        "typedef struct FracspecOperator FracspecOperator",
        "FRACSPEC_STATUS_PANIC = 5",
    ] {
        assert!(header.contains(name), "{name} missing from header");
    }
}
