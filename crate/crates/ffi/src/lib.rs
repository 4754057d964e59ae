//! C ABI surface over the NSAC numerical laboratory.
//!
//! Conventions: opaque handles with explicit `_new`/`_free` pairs, integer
//! status codes for every fallible call, and a thread-local message buffer
//! readable through `nsac_last_error`. Complex matrices cross the boundary
//! as interleaved (re, im) doubles in row-major order.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};

use nsac_lab::decay::{fit_rate, FitMode, NormSeries};
use nsac_lab::error::Error;
use nsac_lab::grid::NormKind;
use nsac_lab::model::{ModelParams, PressureLaw, ViscosityLaw};
use nsac_lab::spectral::{green_symbol, green_tilde_physical, SystemKind};

/// Status code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum NsacStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DomainError = 3,
    RunFailed = 4,
    IoError = 5,
}

/// Opaque model-parameter handle.
pub struct NsacParams {
    inner: ModelParams,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn status_of(err: &Error) -> NsacStatus {
    match err {
        Error::Domain(_)
        | Error::Constitutive(_)
        | Error::StateValidity(_)
        | Error::SingularKernel(_) => NsacStatus::DomainError,
        Error::Parameter(_) | Error::Usage(_) | Error::Fit(_) => NsacStatus::InvalidArgument,
        Error::Io(_) | Error::Serde(_) | Error::Manifest(_) => NsacStatus::IoError,
        _ => NsacStatus::RunFailed,
    }
}

fn fail(err: Error) -> NsacStatus {
    let code = status_of(&err);
    set_error(&err.to_string());
    code
}

/// Copy the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `cap`). Returns the full message length in bytes.
///
/// # Safety
/// `buf` must point to `cap` writable bytes, or be null (query length only).
#[no_mangle]
pub unsafe extern "C" fn nsac_last_error(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|slot| {
        let msg = slot.borrow();
        let bytes = msg.as_bytes_with_nul();
        if !buf.is_null() && cap > 0 {
            let n = bytes.len().min(cap);
            std::ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
            // Always terminate.
            *buf.add(n - 1) = 0;
        }
        bytes.len() - 1
    })
}

/// Crate version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn nsac_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Allocate a parameter handle with the library defaults
/// (epsilon=1, v-bar=1, u-bar=0, p(v)=0.5 v^-2, nu(v)=1/v).
#[no_mangle]
pub extern "C" fn nsac_params_new() -> *mut NsacParams {
    Box::into_raw(Box::new(NsacParams { inner: ModelParams::default() }))
}

/// Free a parameter handle; null is ignored.
///
/// # Safety
/// `params` must have come from `nsac_params_new` and not yet been freed.
#[no_mangle]
pub unsafe extern "C" fn nsac_params_free(params: *mut NsacParams) {
    if !params.is_null() {
        drop(Box::from_raw(params));
    }
}

/// Set a numeric model parameter by key: epsilon, vbar, ubar, pressure_amp,
/// pressure_exp, viscosity_coeff.
///
/// # Safety
/// `params` must be a live handle; `key` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn nsac_params_set(
    params: *mut NsacParams,
    key: *const c_char,
    value: f64,
) -> NsacStatus {
    if params.is_null() || key.is_null() {
        set_error("null pointer");
        return NsacStatus::NullPointer;
    }
    let key = match CStr::from_ptr(key).to_str() {
        Ok(k) => k,
        Err(_) => {
            set_error("key is not valid UTF-8");
            return NsacStatus::InvalidArgument;
        }
    };
    let p = &mut (*params).inner;
    let result = match key {
        "epsilon" => {
            p.interface_thickness = value;
            Ok(())
        }
        "vbar" => {
            p.reference_volume = value;
            Ok(())
        }
        "ubar" => {
            p.reference_velocity = value;
            Ok(())
        }
        "pressure_amp" => PressureLaw::new(value, p.pressure.exponent()).map(|law| p.pressure = law),
        "pressure_exp" => PressureLaw::new(p.pressure.amplitude(), value).map(|law| p.pressure = law),
        "viscosity_coeff" => {
            p.viscosity = match p.viscosity {
                ViscosityLaw::Constant { .. } => ViscosityLaw::Constant { mu: value },
                ViscosityLaw::InverseVolume { .. } => ViscosityLaw::InverseVolume { mu: value },
            };
            Ok(())
        }
        other => Err(Error::Usage(format!("unknown parameter key '{other}'"))),
    };
    match result.and_then(|_| p.validate()) {
        Ok(()) => NsacStatus::Ok,
        Err(e) => fail(e),
    }
}

/// Select the viscosity law: 0 = inverse-volume, 1 = constant.
///
/// # Safety
/// `params` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn nsac_params_set_viscosity_model(
    params: *mut NsacParams,
    constant: c_int,
) -> NsacStatus {
    if params.is_null() {
        set_error("null pointer");
        return NsacStatus::NullPointer;
    }
    let p = &mut (*params).inner;
    let mu = p.viscosity.coefficient();
    p.viscosity = if constant != 0 {
        ViscosityLaw::Constant { mu }
    } else {
        ViscosityLaw::InverseVolume { mu }
    };
    NsacStatus::Ok
}

/// Sound speed c-bar = sqrt(-p'(v-bar)).
///
/// # Safety
/// `params` must be a live handle; `out` must point to a writable double.
#[no_mangle]
pub unsafe extern "C" fn nsac_sound_speed(params: *const NsacParams, out: *mut f64) -> NsacStatus {
    if params.is_null() || out.is_null() {
        set_error("null pointer");
        return NsacStatus::NullPointer;
    }
    match (*params).inner.sound_speed() {
        Ok(c) => {
            *out = c;
            NsacStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Pressure value and first two derivatives at v.
///
/// # Safety
/// `params` must be a live handle; the three outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn nsac_pressure_eval(
    params: *const NsacParams,
    v: f64,
    p_out: *mut f64,
    dp_out: *mut f64,
    ddp_out: *mut f64,
) -> NsacStatus {
    if params.is_null() || p_out.is_null() || dp_out.is_null() || ddp_out.is_null() {
        set_error("null pointer");
        return NsacStatus::NullPointer;
    }
    match (*params).inner.pressure.eval(v) {
        Ok((p, dp, ddp)) => {
            *p_out = p;
            *dp_out = dp;
            *ddp_out = ddp;
            NsacStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Green symbol of the linearized acoustic pair at (xi, t).
/// `which`: 0 = full system, 1 = modified parabolic.
/// `out` receives 8 doubles: row-major (re, im) pairs of the 2x2 matrix.
///
/// # Safety
/// `params` must be a live handle; `out` must point to 8 writable doubles.
#[no_mangle]
pub unsafe extern "C" fn nsac_green_symbol(
    params: *const NsacParams,
    xi: f64,
    t: f64,
    which: c_int,
    out: *mut f64,
) -> NsacStatus {
    if params.is_null() || out.is_null() {
        set_error("null pointer");
        return NsacStatus::NullPointer;
    }
    let kind = match which {
        0 => SystemKind::Nsac,
        1 => SystemKind::Parabolic,
        _ => {
            set_error("which must be 0 (full) or 1 (parabolic)");
            return NsacStatus::InvalidArgument;
        }
    };
    match green_symbol(xi, t, &(*params).inner, kind) {
        Ok(sym) => {
            let slots = std::slice::from_raw_parts_mut(out, 8);
            for r in 0..2 {
                for c in 0..2 {
                    slots[4 * r + 2 * c] = sym.matrix.e[r][c].re;
                    slots[4 * r + 2 * c + 1] = sym.matrix.e[r][c].im;
                }
            }
            NsacStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Closed-form parabolic Green function at (x, t); `out` receives the 2x2
/// real matrix row-major.
///
/// # Safety
/// `params` must be a live handle; `out` must point to 4 writable doubles.
#[no_mangle]
pub unsafe extern "C" fn nsac_green_tilde_physical(
    params: *const NsacParams,
    x: f64,
    t: f64,
    out: *mut f64,
) -> NsacStatus {
    if params.is_null() || out.is_null() {
        set_error("null pointer");
        return NsacStatus::NullPointer;
    }
    match green_tilde_physical(x, t, &(*params).inner) {
        Ok(m) => {
            let slots = std::slice::from_raw_parts_mut(out, 4);
            slots[0] = m[0][0];
            slots[1] = m[0][1];
            slots[2] = m[1][0];
            slots[3] = m[1][1];
            NsacStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Least-squares rate fit of a positive series.
/// `mode`: 0 = algebraic exponent of (1+t), 1 = exponential rate.
///
/// # Safety
/// `times` and `values` must point to `len` readable doubles; the outputs
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn nsac_fit_rate(
    times: *const f64,
    values: *const f64,
    len: usize,
    mode: c_int,
    t0: f64,
    t1: f64,
    fitted_out: *mut f64,
    stderr_out: *mut f64,
) -> NsacStatus {
    if times.is_null() || values.is_null() || fitted_out.is_null() || stderr_out.is_null() {
        set_error("null pointer");
        return NsacStatus::NullPointer;
    }
    let fit_mode = match mode {
        0 => FitMode::Algebraic,
        1 => FitMode::Exponential,
        _ => {
            set_error("mode must be 0 (algebraic) or 1 (exponential)");
            return NsacStatus::InvalidArgument;
        }
    };
    let t = std::slice::from_raw_parts(times, len).to_vec();
    let v = std::slice::from_raw_parts(values, len).to_vec();
    let series = match NormSeries::new(t, v, NormKind::Lp(2.0), 0, "ffi") {
        Ok(s) => s,
        Err(e) => return fail(e),
    };
    match fit_rate(&series, fit_mode, (t0, t1)) {
        Ok(fit) => {
            *fitted_out = fit.value;
            *stderr_out = fit.stderr;
            NsacStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Run a catalog experiment from flat `key=value` configuration text
/// (newline-separated). Writes series files and the manifest under
/// `out_dir`. `passed_out` receives whether every report and check passed.
///
/// # Safety
/// `config_text` and `out_dir` must be NUL-terminated strings; `passed_out`
/// must be writable or null.
#[no_mangle]
pub unsafe extern "C" fn nsac_run_experiment(
    config_text: *const c_char,
    out_dir: *const c_char,
    passed_out: *mut bool,
) -> NsacStatus {
    if config_text.is_null() || out_dir.is_null() {
        set_error("null pointer");
        return NsacStatus::NullPointer;
    }
    let text = match CStr::from_ptr(config_text).to_str() {
        Ok(s) => s,
        Err(_) => {
            set_error("config text is not valid UTF-8");
            return NsacStatus::InvalidArgument;
        }
    };
    let dir = match CStr::from_ptr(out_dir).to_str() {
        Ok(s) => s,
        Err(_) => {
            set_error("out_dir is not valid UTF-8");
            return NsacStatus::InvalidArgument;
        }
    };
    let mut overrides: Vec<(String, String)> = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        match line.split_once('=') {
            Some((k, v)) => overrides.push((k.trim().to_string(), v.trim().to_string())),
            None => {
                set_error(&format!("expected key=value, got '{line}'"));
                return NsacStatus::InvalidArgument;
            }
        }
    }
    overrides.push(("out_dir".to_string(), dir.to_string()));
    let cfg = match nsac_lab::cli::ExperimentConfig::load(None, &overrides) {
        Ok(c) => c,
        Err(e) => return fail(e),
    };
    match nsac_lab::cli::run_experiment(&cfg) {
        Ok(manifest) => {
            if !passed_out.is_null() {
                *passed_out = manifest.passed;
            }
            NsacStatus::Ok
        }
        Err(e) => fail(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn version_is_nul_terminated() {
        let v = unsafe { CStr::from_ptr(nsac_version()) };
        assert!(!v.to_str().unwrap().is_empty());
    }
}
