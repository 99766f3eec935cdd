//! C ABI over the `mdiqkd` key-rate pipeline.
//!
//! Every fallible function returns an [`MdiqkdStatus`] and writes its result
//! through an out-pointer. On failure a description is kept per thread and
//! can be read with [`mdiqkd_last_error_message`]. Panics never cross the
//! boundary; they are reported as [`MdiqkdStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use mdiqkd::cli::{analyse, MeasurementFile};
use mdiqkd::protocol::binary_entropy;
use mdiqkd::{physics, AnalysisVariant, Error, MeasurementSet, SecurityAnalysis};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MdiqkdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// Malformed JSON, unknown fields or values outside their domain.
    InvalidInput = 3,
    /// The measurements are inconsistent with any source; no key.
    Infeasible = 4,
    /// The LP solver failed or a scalar fell outside its domain.
    Numeric = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MdiqkdAnalysis {
    Asymptotic = 0,
    Gaussian = 1,
    Composable = 2,
}

impl From<MdiqkdAnalysis> for AnalysisVariant {
    fn from(a: MdiqkdAnalysis) -> Self {
        match a {
            MdiqkdAnalysis::Asymptotic => AnalysisVariant::Asymptotic,
            MdiqkdAnalysis::Gaussian => AnalysisVariant::FiniteGaussian,
            MdiqkdAnalysis::Composable => AnalysisVariant::FiniteComposable,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MdiqkdKeyRate {
    /// Secure key rate in bits per second, zero when `no_key`.
    pub rate_bps: f64,
    pub rate_per_clock: f64,
    /// Unclamped value of the rate formula per clock cycle.
    pub raw_rate_per_clock: f64,
    pub y_x_11_lower: f64,
    pub e_x_11_upper: f64,
    pub q_z_11: f64,
    pub no_key: bool,
}

/// Parsed measurement set. Create with [`mdiqkd_measurements_from_json`],
/// release with [`mdiqkd_measurements_free`].
pub struct MdiqkdMeasurements(MeasurementSet);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_last_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(e: &Error) -> MdiqkdStatus {
    match e {
        Error::Infeasible(_) => MdiqkdStatus::Infeasible,
        Error::Domain { .. } | Error::Solver(_) => MdiqkdStatus::Numeric,
        Error::InvalidParameters(_)
        | Error::InvalidMeasurements(_)
        | Error::InvalidAnalysis(_)
        | Error::InvalidModel(_)
        | Error::InvalidInput(_) => MdiqkdStatus::InvalidInput,
    }
}

struct Failure(MdiqkdStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

/// Runs `f`, records any failure for [`mdiqkd_last_error_message`] and turns
/// panics into a status.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> MdiqkdStatus {
    clear_last_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MdiqkdStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_last_error(message);
            status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {message}"));
            MdiqkdStatus::Panic
        }
    }
}

fn null(name: &str) -> Failure {
    Failure(MdiqkdStatus::NullPointer, format!("{name} is null"))
}

/// Parses a measurement file (the JSON accepted by `mdiqkd keyrate`).
///
/// # Safety
/// `json` must be null or a NUL-terminated string; `out` must be null or
/// valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn mdiqkd_measurements_from_json(
    json: *const c_char,
    out: *mut *mut MdiqkdMeasurements,
) -> MdiqkdStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        if json.is_null() {
            return Err(null("json"));
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|e| Failure(MdiqkdStatus::InvalidUtf8, format!("json: {e}")))?;
        let file = MeasurementFile::parse(text).map_err(|e| Failure(MdiqkdStatus::InvalidInput, e.to_string()))?;
        let m = file.to_measurements()?;
        *out = Box::into_raw(Box::new(MdiqkdMeasurements(m)));
        Ok(())
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `handle` must be null or come from [`mdiqkd_measurements_from_json`] and
/// not have been freed already.
#[no_mangle]
pub unsafe extern "C" fn mdiqkd_measurements_free(handle: *mut MdiqkdMeasurements) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Estimates the decoy bounds and the secure key rate with default settings
/// for `analysis`. A run that certifies no key still returns `Ok` with
/// `no_key` set; inconsistent data returns `Infeasible`.
///
/// # Safety
/// `handle` must be null or a live handle; `out` must be null or valid for
/// a write.
#[no_mangle]
pub unsafe extern "C" fn mdiqkd_key_rate(
    handle: *const MdiqkdMeasurements,
    analysis: MdiqkdAnalysis,
    out: *mut MdiqkdKeyRate,
) -> MdiqkdStatus {
    guard(|| {
        let m = handle.as_ref().ok_or_else(|| null("handle"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let r = analyse(&m.0, &SecurityAnalysis::new(analysis.into()))?;
        *out = MdiqkdKeyRate {
            rate_bps: r.rate_bps,
            rate_per_clock: r.rate_per_clock,
            raw_rate_per_clock: r.raw_rate_per_clock,
            y_x_11_lower: r.bounds.y_x_11_lower,
            e_x_11_upper: r.bounds.e_x_11_upper,
            q_z_11: r.q_z_11,
            no_key: r.no_key,
        };
        Ok(())
    })
}

/// Number of transmitted pulses recorded in the measurement set.
///
/// # Safety
/// `handle` must be null or a live handle; `out` must be null or valid for
/// a write.
#[no_mangle]
pub unsafe extern "C" fn mdiqkd_measurements_n_total(handle: *const MdiqkdMeasurements, out: *mut f64) -> MdiqkdStatus {
    guard(|| {
        let m = handle.as_ref().ok_or_else(|| null("handle"))?;
        *out.as_mut().ok_or_else(|| null("out"))? = m.0.n_total;
        Ok(())
    })
}

/// Binary Shannon entropy in bits.
///
/// # Safety
/// `out` must be null or valid for a write.
#[no_mangle]
pub unsafe extern "C" fn mdiqkd_binary_entropy(p: f64, out: *mut f64) -> MdiqkdStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = binary_entropy(p)?;
        Ok(())
    })
}

/// Phase error `2π·Δt·Δf` in radians.
///
/// # Safety
/// `out` must be null or valid for a write.
#[no_mangle]
pub unsafe extern "C" fn mdiqkd_phase_error(delta_t_s: f64, delta_f_hz: f64, out: *mut f64) -> MdiqkdStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = physics::phase_error(delta_t_s, delta_f_hz)?;
        Ok(())
    })
}

/// Rise of the X-basis QBER above 25 % for a phase error in radians.
#[no_mangle]
pub extern "C" fn mdiqkd_x_qber_penalty(delta_phi_rad: f64) -> f64 {
    physics::x_qber_penalty(delta_phi_rad)
}

/// Message for the most recent failure on this thread, or null when the last
/// call succeeded. The pointer stays valid until the next call into this
/// library from the same thread.
#[no_mangle]
pub extern "C" fn mdiqkd_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn mdiqkd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
