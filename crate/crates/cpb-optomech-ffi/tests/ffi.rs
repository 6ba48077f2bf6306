use cpb_optomech::fock::FockConfig;
use cpb_optomech::sweep::{eval_point, run_sweep, table_csv, SweepConfig};
use cpb_optomech::{BiasPoint, CircuitParams, ModelTag};
use cpb_optomech_ffi::*;
use std::ffi::{c_char, CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

fn last_error() -> String {
    unsafe { CStr::from_ptr(cpb_last_error()) }.to_string_lossy().into_owned()
}

fn take_string(s: *mut c_char) -> String {
    let text = unsafe { CStr::from_ptr(s) }.to_string_lossy().into_owned();
    unsafe { cpb_string_free(s) };
    text
}

fn reference() -> *mut CpbParams {
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { cpb_params_reference(&mut h) }, CpbStatus::Ok);
    assert!(!h.is_null());
    h
}

fn default_config() -> String {
    let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("../cpb-optomech/configs/default.json");
    std::fs::read_to_string(p).unwrap()
}

#[test]
fn evaluate_matches_library() {
    let h = reference();
    let v = cpb_optomech::params::validate(&CircuitParams::default()).unwrap();
    let bias = BiasPoint::new(0.3, 0.1);
    for (m, tag) in [
        (CpbModel::Circuit, ModelTag::Circuit),
        (CpbModel::Perturbative2, ModelTag::Perturbative2),
        (CpbModel::Perturbative3, ModelTag::Perturbative3),
    ] {
        let mut out = CpbCoupling { omega_c: 0.0, g_rp: 0.0, g_0: 0.0, g_ck: 0.0, enhancement: 0.0 };
        assert_eq!(unsafe { cpb_evaluate(h, 0.3, 0.1, m, &mut out) }, CpbStatus::Ok, "{}", last_error());
        let row = &eval_point(&v, &bias, &[tag], &FockConfig::default())[0];
        assert_eq!(out.omega_c.to_bits(), row.omega_c.to_bits());
        assert_eq!(out.g_rp.to_bits(), row.g_rp.to_bits());
        assert_eq!(out.g_ck.to_bits(), row.g_ck.to_bits());
    }
    unsafe { cpb_params_free(h) };
}

#[test]
fn degenerate_point_reports_numerical() {
    let h = reference();
    let mut out = CpbCoupling { omega_c: 0.0, g_rp: 0.0, g_0: 0.0, g_ck: 0.0, enhancement: 0.0 };
    let s = unsafe { cpb_evaluate(h, 0.5, 0.5, CpbModel::Circuit, &mut out) };
    assert_eq!(s, CpbStatus::Numerical);
    assert_eq!(last_error(), "NonAnalyticPoint");
    assert!(out.g_rp.is_nan());
    unsafe { cpb_params_free(h) };
}

#[test]
fn nonfinite_bias_is_invalid_argument() {
    let h = reference();
    let mut out = CpbCoupling { omega_c: 0.0, g_rp: 0.0, g_0: 0.0, g_ck: 0.0, enhancement: 0.0 };
    let s = unsafe { cpb_evaluate(h, f64::NAN, 0.0, CpbModel::Circuit, &mut out) };
    assert_eq!(s, CpbStatus::InvalidArgument);
    unsafe { cpb_params_free(h) };
}

#[test]
fn null_handles() {
    let mut out = CpbCoupling { omega_c: 0.0, g_rp: 0.0, g_0: 0.0, g_ck: 0.0, enhancement: 0.0 };
    let s = unsafe { cpb_evaluate(ptr::null(), 0.3, 0.0, CpbModel::Circuit, &mut out) };
    assert_eq!(s, CpbStatus::NullPointer);
    unsafe { cpb_params_free(ptr::null_mut()) };
    unsafe { cpb_string_free(ptr::null_mut()) };
}

#[test]
fn params_from_json_and_energies_agree() {
    let json = CString::new(r#"{"e_c_ghz": 30, "e_j_ghz": 7.5, "asymmetry": 0, "gate_fraction": 0.99}"#).unwrap();
    let mut a = ptr::null_mut();
    let mut b = ptr::null_mut();
    assert_eq!(unsafe { cpb_params_from_json(json.as_ptr(), &mut a) }, CpbStatus::Ok, "{}", last_error());
    assert_eq!(unsafe { cpb_params_from_energies(30.0, 7.5, 0.0, 0.99, &mut b) }, CpbStatus::Ok);
    let mut da = CpbDerived { e_c: 0.0, e_j: 0.0, c_sigma1: 0.0, z0: 0.0, omega_c0: 0.0 };
    let mut db = da;
    unsafe {
        assert_eq!(cpb_params_derived(a, &mut da), CpbStatus::Ok);
        assert_eq!(cpb_params_derived(b, &mut db), CpbStatus::Ok);
        cpb_params_free(a);
        cpb_params_free(b);
    }
    assert_eq!(da, db);
    assert!(da.e_c > 0.0 && da.omega_c0 > 0.0);
}

#[test]
fn malformed_json_is_invalid_params() {
    let json = CString::new("{\"e_c_ghz\": ").unwrap();
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { cpb_params_from_json(json.as_ptr(), &mut h) }, CpbStatus::InvalidParams);
    assert!(h.is_null());
    assert!(!last_error().is_empty());
}

#[test]
fn sweep_csv_matches_library() {
    let text = default_config();
    let cfg = SweepConfig::from_json(&text).unwrap();
    let expected = table_csv(&run_sweep(&cfg, 1).unwrap().tables[0]);
    let c = CString::new(text).unwrap();
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { cpb_sweep_csv(c.as_ptr(), 2, &mut out) }, CpbStatus::Ok, "{}", last_error());
    assert_eq!(take_string(out), expected);
}

#[test]
fn sweep_json_carries_fingerprint() {
    let text = default_config();
    let fp = SweepConfig::from_json(&text).unwrap().fingerprint();
    let c = CString::new(text).unwrap();
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { cpb_sweep_json(c.as_ptr(), 1, &mut out) }, CpbStatus::Ok);
    let doc: serde_json::Value = serde_json::from_str(&take_string(out)).unwrap();
    assert_eq!(doc["fingerprint"], serde_json::Value::String(fp));
}

#[test]
fn bad_sweep_config_is_config_invalid() {
    let c = CString::new(r#"{"unknown_key": 1}"#).unwrap();
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { cpb_sweep_csv(c.as_ptr(), 1, &mut out) }, CpbStatus::ConfigInvalid);
    assert!(out.is_null());
}

#[test]
fn header_compiles_as_c() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR"));
    let src = std::env::temp_dir().join(format!("cpb_header_{}.c", std::process::id()));
    std::fs::write(
        &src,
        "#include \"cpb_optomech.h\"\n\
         int main(void) {\n\
           CpbParams *p = 0;\n\
           CpbCoupling c;\n\
           if (cpb_params_reference(&p) != CPB_STATUS_OK) return 1;\n\
           if (cpb_evaluate(p, 0.3, 0.0, CPB_MODEL_CIRCUIT, &c) != CPB_STATUS_OK) return 1;\n\
           cpb_params_free(p);\n\
           return 0;\n\
         }\n",
    )
    .unwrap();
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let status = Command::new(&cc)
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(dir.join("include"))
        .arg(&src)
        .status();
    let _ = std::fs::remove_file(&src);
    match status {
        Ok(s) => assert!(s.success(), "header does not compile"),
        Err(e) => eprintln!("skipping header check, no C compiler: {e}"),
    }
}
