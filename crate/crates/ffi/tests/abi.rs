use std::ffi::{CStr, CString};
use std::process::Command;
use std::ptr;

use transmon_readout::discriminate::FnnModel;
use transmon_readout_ffi::*;

fn last_error() -> String {
    let p = tr_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn populations_match_closed_form() {
    let mut out = [0.0; 4];
    let status = unsafe { tr_populations(6.18, 5.21, 2.06, 1, 0.14, out.as_mut_ptr()) };
    assert_eq!(status, TrStatus::Ok);
    assert!((out[0] - (1.0 - (-0.14f64 / 6.18).exp())).abs() < 1e-15);
    assert!((out.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    assert!(tr_last_error().is_null());
}

#[test]
fn invalid_arguments_report_category_and_message() {
    let mut out = [0.0; 4];
    let status = unsafe { tr_populations(-1.0, 5.21, 2.06, 1, 0.14, out.as_mut_ptr()) };
    assert_eq!(status, TrStatus::Config);
    assert!(!last_error().is_empty());
    let status = unsafe { tr_populations(6.18, 5.21, 2.06, 7, 0.14, out.as_mut_ptr()) };
    assert_eq!(status, TrStatus::Config);
    let status = unsafe { tr_populations(6.18, 5.21, 2.06, 1, 0.14, ptr::null_mut()) };
    assert_eq!(status, TrStatus::NullPointer);
    assert_eq!(last_error(), "out is null");
}

#[test]
fn fidelity_functions() {
    let mut snr = 0.0;
    assert_eq!(
        unsafe { tr_snr_for_ideal_fidelity(0.9995, &mut snr) },
        TrStatus::Ok
    );
    assert!((tr_ideal_fidelity(snr) - 0.9995).abs() < 1e-12);
    assert_eq!(
        unsafe { tr_snr_for_ideal_fidelity(1.5, &mut snr) },
        TrStatus::Config
    );

    let m = [0.99, 0.01, 0.01, 0.99];
    let mut f = 0.0;
    assert_eq!(
        unsafe { tr_assignment_fidelity(m.as_ptr(), 2, &mut f) },
        TrStatus::Ok
    );
    assert!((f - 0.99).abs() < 1e-15);
    let bad = [0.5, 0.1, 0.1, 0.5];
    assert_eq!(
        unsafe { tr_assignment_fidelity(bad.as_ptr(), 2, &mut f) },
        TrStatus::Config
    );
}

#[test]
fn truth_table_is_exhaustive() {
    let expected = [
        (0, 0, TrLabel::Zero),
        (1, 1, TrLabel::One),
        (1, 2, TrLabel::Two),
        (0, 1, TrLabel::OverlapError),
        (0, 2, TrLabel::OverlapError),
        (1, 0, TrLabel::OverlapError),
    ];
    for (p, s, label) in expected {
        assert_eq!(tr_truth_table(p, s), label, "({p}, {s})");
    }
    assert_eq!(tr_truth_table(2, 0), TrLabel::Invalid);
    assert_eq!(tr_truth_table(0, 3), TrLabel::Invalid);
}

#[test]
fn spam_round_trip() {
    let m = [0.95, 0.03, 0.02, 0.04, 0.9, 0.05, 0.01, 0.07, 0.93];
    let truth = [0.2, 0.5, 0.3];
    let raw: Vec<f64> = (0..3)
        .map(|i| (0..3).map(|j| m[i * 3 + j] * truth[j]).sum())
        .collect();
    let mut out = [0.0; 3];
    let status = unsafe { tr_spam_mitigate(raw.as_ptr(), m.as_ptr(), 3, out.as_mut_ptr()) };
    assert_eq!(status, TrStatus::Ok);
    for (a, b) in out.iter().zip(truth) {
        assert!((a - b).abs() < 1e-12);
    }
    let singular = [0.5, 0.5, 0.5, 0.5];
    let status = unsafe { tr_spam_mitigate(raw.as_ptr(), singular.as_ptr(), 2, out.as_mut_ptr()) };
    assert_eq!(status, TrStatus::Numeric);
}

#[test]
fn fnn_handle_lifecycle() {
    let model = FnnModel::initialise(3);
    let json = CString::new(model.to_json().unwrap()).unwrap();
    let mut handle = ptr::null_mut();
    assert_eq!(
        unsafe { tr_fnn_from_json(json.as_ptr(), &mut handle) },
        TrStatus::Ok
    );
    assert!(!handle.is_null());

    let x = [0.3, -0.2, 0.8, 0.1];
    let mut p = [0.0; 3];
    let mut label = TrLabel::Invalid;
    let status = unsafe { tr_fnn_classify(handle, x.as_ptr(), p.as_mut_ptr(), &mut label) };
    assert_eq!(status, TrStatus::Ok);
    let expected = model.probabilities(&x);
    assert_eq!(p, expected);
    assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    assert_ne!(label, TrLabel::Invalid);

    let nan = [f64::NAN, 0.0, 0.0, 0.0];
    let status = unsafe { tr_fnn_classify(handle, nan.as_ptr(), ptr::null_mut(), &mut label) };
    assert_eq!(status, TrStatus::Config);
    unsafe { tr_fnn_free(handle) };
    unsafe { tr_fnn_free(ptr::null_mut()) };

    let garbage = CString::new("{\"format\": 1}").unwrap();
    let mut handle = ptr::null_mut();
    assert_ne!(
        unsafe { tr_fnn_from_json(garbage.as_ptr(), &mut handle) },
        TrStatus::Ok
    );
    assert!(handle.is_null());
}

#[test]
fn fnn_load_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    std::fs::write(&path, FnnModel::initialise(9).to_json().unwrap()).unwrap();
    let c_path = CString::new(path.to_str().unwrap()).unwrap();
    let mut handle = ptr::null_mut();
    assert_eq!(
        unsafe { tr_fnn_load(c_path.as_ptr(), &mut handle) },
        TrStatus::Ok
    );
    unsafe { tr_fnn_free(handle) };
    let missing = CString::new(dir.path().join("nope.json").to_str().unwrap()).unwrap();
    assert_eq!(
        unsafe { tr_fnn_load(missing.as_ptr(), &mut handle) },
        TrStatus::Io
    );
}

#[test]
fn header_compiles_as_c() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/transmon_readout.h");
    let text = std::fs::read_to_string(header).unwrap();
    for symbol in [
        "tr_populations",
        "tr_ideal_fidelity",
        "tr_snr_for_ideal_fidelity",
        "tr_truth_table",
        "tr_assignment_fidelity",
        "tr_spam_mitigate",
        "tr_fnn_from_json",
        "tr_fnn_load",
        "tr_fnn_classify",
        "tr_fnn_free",
        "tr_last_error",
        "TR_STATUS_NUMERIC = 3",
    ] {
        assert!(text.contains(symbol), "{symbol} missing from header");
    }
    let Ok(status) = Command::new("cc")
        .args(["-fsyntax-only", "-Wall", "-Werror", "-x", "c", header])
        .status()
    else {
        eprintln!("no C compiler; skipping syntax check");
        return;
    };
    assert!(status.success());
}
