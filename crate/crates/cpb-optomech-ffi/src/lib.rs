//! C ABI over `cpb-optomech`.
//!
//! Parameter sets live behind an opaque `CpbParams` handle. Every call returns a
//! `CpbStatus`; on anything but `CPB_STATUS_OK` the message is available from
//! `cpb_last_error` on the same thread. Strings handed out by the library are freed
//! with `cpb_string_free`.

use cpb_optomech::fock::FockConfig;
use cpb_optomech::params::{validate, CircuitParams, ParamsInput};
use cpb_optomech::sweep::{self, eval_point, run_sweep, SweepConfig, SweepError};
use cpb_optomech::{BiasPoint, ModelTag, ValidatedParams};
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CpbStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidParams = 3,
    ConfigInvalid = 4,
    /// The evaluation ran but the point is flagged; outputs hold NaN where undefined.
    Numerical = 5,
    Io = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CpbModel {
    Circuit = 0,
    Perturbative2 = 1,
    Perturbative3 = 2,
    FockOracle = 3,
}

impl From<CpbModel> for ModelTag {
    fn from(m: CpbModel) -> Self {
        match m {
            CpbModel::Circuit => ModelTag::Circuit,
            CpbModel::Perturbative2 => ModelTag::Perturbative2,
            CpbModel::Perturbative3 => ModelTag::Perturbative3,
            CpbModel::FockOracle => ModelTag::FockOracle,
        }
    }
}

/// Couplings at one bias point, rad/s.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CpbCoupling {
    pub omega_c: f64,
    pub g_rp: f64,
    pub g_0: f64,
    pub g_ck: f64,
    pub enhancement: f64,
}

/// Derived device quantities, SI units.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CpbDerived {
    pub e_c: f64,
    pub e_j: f64,
    pub c_sigma1: f64,
    pub z0: f64,
    pub omega_c0: f64,
}

/// Opaque parameter set.
pub struct CpbParams {
    inner: ValidatedParams,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

fn fail(status: CpbStatus, msg: impl Into<String>) -> CpbStatus {
    set_error(msg);
    status
}

fn guarded(f: impl FnOnce() -> CpbStatus) -> CpbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => {
            if status == CpbStatus::Ok {
                set_error("");
            }
            status
        }
        Err(_) => fail(CpbStatus::Panic, "internal panic"),
    }
}

unsafe fn read_str<'a>(s: *const c_char) -> Result<&'a str, CpbStatus> {
    if s.is_null() {
        return Err(fail(CpbStatus::NullPointer, "null string"));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| fail(CpbStatus::InvalidArgument, "string is not UTF-8"))
}

fn sweep_status(e: &SweepError) -> CpbStatus {
    match e {
        SweepError::Io { .. } => CpbStatus::Io,
        _ => CpbStatus::ConfigInvalid,
    }
}

unsafe fn hand_out(out: *mut *mut CpbParams, params: CircuitParams) -> CpbStatus {
    match validate(&params) {
        Ok(inner) => {
            *out = Box::into_raw(Box::new(CpbParams { inner }));
            CpbStatus::Ok
        }
        Err(e) => fail(CpbStatus::InvalidParams, e.to_string()),
    }
}

/// Message for the last failed call on this thread; empty after a success. Valid until
/// the next call on the same thread.
#[no_mangle]
pub extern "C" fn cpb_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// The reference device.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn cpb_params_reference(out: *mut *mut CpbParams) -> CpbStatus {
    guarded(|| {
        if out.is_null() {
            return fail(CpbStatus::NullPointer, "out is null");
        }
        hand_out(out, CircuitParams::default())
    })
}

/// Parameters from the JSON parameter object used in sweep configs.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cpb_params_from_json(
    json: *const c_char,
    out: *mut *mut CpbParams,
) -> CpbStatus {
    guarded(|| {
        if out.is_null() {
            return fail(CpbStatus::NullPointer, "out is null");
        }
        let text = match read_str(json) {
            Ok(t) => t,
            Err(s) => return s,
        };
        let input: ParamsInput = match serde_json::from_str(text) {
            Ok(p) => p,
            Err(e) => return fail(CpbStatus::InvalidParams, e.to_string()),
        };
        match input.resolve() {
            Ok(p) => hand_out(out, p),
            Err(e) => fail(CpbStatus::InvalidParams, e.to_string()),
        }
    })
}

/// Energy form: E_C and E_J in GHz, junction asymmetry d and the gate's share of the
/// island capacitance; everything else at the reference device.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cpb_params_from_energies(
    e_c_ghz: f64,
    e_j_ghz: f64,
    asymmetry: f64,
    gate_fraction: f64,
    out: *mut *mut CpbParams,
) -> CpbStatus {
    guarded(|| {
        if out.is_null() {
            return fail(CpbStatus::NullPointer, "out is null");
        }
        let input = ParamsInput {
            e_c_ghz: Some(e_c_ghz),
            e_j_ghz: Some(e_j_ghz),
            asymmetry: Some(asymmetry),
            gate_fraction: Some(gate_fraction),
            ..ParamsInput::default()
        };
        match input.resolve() {
            Ok(p) => hand_out(out, p),
            Err(e) => fail(CpbStatus::InvalidParams, e.to_string()),
        }
    })
}

/// # Safety
/// `params` must be null or a handle from this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn cpb_params_free(params: *mut CpbParams) {
    if !params.is_null() {
        drop(Box::from_raw(params));
    }
}

/// # Safety
/// `params` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cpb_params_derived(
    params: *const CpbParams,
    out: *mut CpbDerived,
) -> CpbStatus {
    guarded(|| {
        if params.is_null() || out.is_null() {
            return fail(CpbStatus::NullPointer, "null argument");
        }
        let v = &(*params).inner;
        *out = CpbDerived {
            e_c: v.e_c,
            e_j: v.e_j,
            c_sigma1: v.c_sigma1,
            z0: v.z0,
            omega_c0: v.omega_c0,
        };
        CpbStatus::Ok
    })
}

/// One model at one bias point. A flagged point returns `CPB_STATUS_NUMERICAL` with the
/// flag name as the error message and NaN in the undefined fields of `out`.
///
/// # Safety
/// `params` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cpb_evaluate(
    params: *const CpbParams,
    n_g: f64,
    f: f64,
    model: CpbModel,
    out: *mut CpbCoupling,
) -> CpbStatus {
    guarded(|| {
        if params.is_null() || out.is_null() {
            return fail(CpbStatus::NullPointer, "null argument");
        }
        if !n_g.is_finite() || !f.is_finite() {
            return fail(CpbStatus::InvalidArgument, "bias must be finite");
        }
        let v = &(*params).inner;
        let rows = eval_point(v, &BiasPoint::new(n_g, f), &[model.into()], &FockConfig::default());
        let r = &rows[0];
        *out = CpbCoupling {
            omega_c: r.omega_c,
            g_rp: r.g_rp,
            g_0: r.g_0,
            g_ck: r.g_ck,
            enhancement: r.enhancement,
        };
        match r.flags.first() {
            None => CpbStatus::Ok,
            Some(flag) => fail(CpbStatus::Numerical, flag.as_str()),
        }
    })
}

unsafe fn sweep_text(
    config_json: *const c_char,
    jobs: u32,
    out: *mut *mut c_char,
    render: fn(&sweep::SweepOutput) -> String,
) -> CpbStatus {
    guarded(|| {
        if out.is_null() {
            return fail(CpbStatus::NullPointer, "out is null");
        }
        let text = match read_str(config_json) {
            Ok(t) => t,
            Err(s) => return s,
        };
        let result = SweepConfig::from_json(text).and_then(|cfg| run_sweep(&cfg, jobs as usize));
        match result {
            Ok(o) => match CString::new(render(&o)) {
                Ok(s) => {
                    *out = s.into_raw();
                    CpbStatus::Ok
                }
                Err(_) => fail(CpbStatus::Panic, "output contains NUL"),
            },
            Err(e) => fail(sweep_status(&e), e.to_string()),
        }
    })
}

fn csv_of_all_tables(o: &sweep::SweepOutput) -> String {
    o.tables.iter().map(sweep::table_csv).collect::<Vec<_>>().join("\n")
}

/// Runs a sweep config and returns its CSV; in ratio mode the tables follow each other
/// separated by a blank line. `jobs` = 0 uses every core. Free with `cpb_string_free`.
///
/// # Safety
/// `config_json` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cpb_sweep_csv(
    config_json: *const c_char,
    jobs: u32,
    out: *mut *mut c_char,
) -> CpbStatus {
    sweep_text(config_json, jobs, out, csv_of_all_tables)
}

/// As `cpb_sweep_csv`, returning the JSON document with the config fingerprint.
///
/// # Safety
/// `config_json` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cpb_sweep_json(
    config_json: *const c_char,
    jobs: u32,
    out: *mut *mut c_char,
) -> CpbStatus {
    sweep_text(config_json, jobs, out, sweep::output_json)
}

/// # Safety
/// `s` must be null or a string returned by this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn cpb_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Library version, static storage.
#[no_mangle]
pub extern "C" fn cpb_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
