//! C ABI for the tideprob library.
//!
//! Conventions: every fallible function returns a [`tideprob_status`] and
//! writes its result through out-pointers; `TIDEPROB_OK` is 0. On failure the
//! thread-local message behind [`tideprob_last_error_message`] describes the
//! problem. Handle types (`tideprob_tide`, `tideprob_pattern`,
//! `tideprob_ccdf`, `tideprob_response`) are opaque: create them through this
//! API, share them freely across threads for reads, and release them with
//! the matching `_free` function exactly once.
//!
//! The matching C header lives at `include/tideprob.h` and is maintained by
//! hand; `tests/c_link.rs` compiles and runs a C program against it.

#![allow(non_camel_case_types)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use tideprob::ccdf::{
    build_phi0, build_phi_dt, build_phi_g_direct, build_phi_pattern, mofjeld_params, phi_erf,
    phi_infinity, BinSpec, CcdfTable, GMethodParams, MomentSummary,
};
use tideprob::hazard::{psi, ExceedanceLevels, PsiMode};
use tideprob::pattern::{extract_pattern, ExtractParams, GaugeSeries, WavePattern, WidthRule};
use tideprob::stage::{
    build_response, Extrapolation, Location, ResponseMode, StageDomain, StageResponse, StageSample,
};
use tideprob::tide::{
    compute_datums, ingest_tide_csv, synthesize_tide, GapPolicy, HarmonicConstituent,
    IngestOptions, TidalDatums, TideRecord,
};

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum tideprob_status {
    TIDEPROB_OK = 0,
    TIDEPROB_ERR_NULL_ARG = 1,
    TIDEPROB_ERR_UTF8 = 2,
    TIDEPROB_ERR_IO = 3,
    TIDEPROB_ERR_INVALID = 4,
    TIDEPROB_ERR_PANIC = 5,
}

use tideprob_status::*;

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(msg: &str) {
    let sanitized = msg.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn fail(status: tideprob_status, msg: &str) -> tideprob_status {
    set_error(msg);
    status
}

fn from_lib_error(err: tideprob::Error) -> tideprob_status {
    let status = match err {
        tideprob::Error::Io(_) => TIDEPROB_ERR_IO,
        _ => TIDEPROB_ERR_INVALID,
    };
    fail(status, &err.to_string())
}

/// Message for the most recent failure on the calling thread. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn tideprob_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

fn guarded(f: impl FnOnce() -> tideprob_status) -> tideprob_status {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => fail(TIDEPROB_ERR_PANIC, "internal panic"),
    }
}

macro_rules! require_nonnull {
    ($ptr:expr) => {
        if $ptr.is_null() {
            return fail(TIDEPROB_ERR_NULL_ARG, concat!(stringify!($ptr), " is null"));
        }
    };
}

/// Opaque tide record handle.
pub struct tideprob_tide(TideRecord);
/// Opaque wave pattern handle.
pub struct tideprob_pattern(WavePattern);
/// Opaque CCDF table handle.
pub struct tideprob_ccdf(CcdfTable);
/// Opaque stage response handle.
pub struct tideprob_response(StageResponse);

/// Site datums, meters relative to MSL.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct tideprob_datums {
    pub xi_mllw: f64,
    pub xi_mlw: f64,
    pub xi_msl: f64,
    pub xi_mhw: f64,
    pub xi_mhhw: f64,
    pub xi_lowest: f64,
    pub xi_highest: f64,
    pub sigma0: f64,
}

impl From<TidalDatums> for tideprob_datums {
    fn from(d: TidalDatums) -> Self {
        Self {
            xi_mllw: d.xi_mllw,
            xi_mlw: d.xi_mlw,
            xi_msl: d.xi_msl,
            xi_mhw: d.xi_mhw,
            xi_mhhw: d.xi_mhhw,
            xi_lowest: d.xi_lowest,
            xi_highest: d.xi_highest,
            sigma0: d.sigma0,
        }
    }
}

impl From<tideprob_datums> for TidalDatums {
    fn from(d: tideprob_datums) -> Self {
        Self {
            xi_mllw: d.xi_mllw,
            xi_mlw: d.xi_mlw,
            xi_msl: d.xi_msl,
            xi_mhw: d.xi_mhw,
            xi_mhhw: d.xi_mhhw,
            xi_lowest: d.xi_lowest,
            xi_highest: d.xi_highest,
            sigma0: d.sigma0,
        }
    }
}

/// Gaussian-method site constants.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct tideprob_g_params {
    pub sigma0: f64,
    pub alpha: f64,
    pub beta: f64,
    pub c: f64,
    pub alpha_prime: f64,
    pub beta_prime: f64,
    pub c_prime: f64,
    pub xi_ref: f64,
    pub subsidence: f64,
    pub t_g_minutes: u32,
    pub period_minutes: f64,
    pub efold_minutes: f64,
}

impl From<tideprob_g_params> for GMethodParams {
    fn from(g: tideprob_g_params) -> Self {
        Self {
            sigma0: g.sigma0,
            alpha: g.alpha,
            beta: g.beta,
            c: g.c,
            alpha_prime: g.alpha_prime,
            beta_prime: g.beta_prime,
            c_prime: g.c_prime,
            xi_ref: g.xi_ref,
            subsidence: g.subsidence,
            t_g_minutes: g.t_g_minutes,
            period_minutes: g.period_minutes,
            efold_minutes: g.efold_minutes,
        }
    }
}

/// Uniform stage binning.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct tideprob_bins {
    pub origin: f64,
    pub width: f64,
    pub n_bins: usize,
}

/// One harmonic constituent (`level = amplitude * cos(speed * t + phase)`,
/// t in hours, angles in degrees).
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct tideprob_constituent {
    pub amplitude_m: f64,
    pub speed_deg_per_hr: f64,
    pub phase_deg: f64,
}

fn bins_to_spec(bins: tideprob_bins) -> Result<BinSpec, tideprob::Error> {
    BinSpec::new(bins.origin, bins.width, bins.n_bins)
}

/// Published constants for Crescent City, CA.
#[no_mangle]
pub extern "C" fn tideprob_g_params_crescent_city() -> tideprob_g_params {
    let g = GMethodParams::crescent_city();
    tideprob_g_params {
        sigma0: g.sigma0,
        alpha: g.alpha,
        beta: g.beta,
        c: g.c,
        alpha_prime: g.alpha_prime,
        beta_prime: g.beta_prime,
        c_prime: g.c_prime,
        xi_ref: g.xi_ref,
        subsidence: g.subsidence,
        t_g_minutes: g.t_g_minutes,
        period_minutes: g.period_minutes,
        efold_minutes: g.efold_minutes,
    }
}

/// Ingest a `timestamp,level_m` CSV file. Gaps up to `gap_max_minutes` are
/// interpolated; pass a negative value to reject any gap. `rebase` nonzero
/// subtracts the mean.
///
/// # Safety
/// `path` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tideprob_tide_from_csv(
    path: *const c_char,
    gap_max_minutes: i64,
    rebase: bool,
    out: *mut *mut tideprob_tide,
) -> tideprob_status {
    guarded(|| {
        require_nonnull!(path);
        require_nonnull!(out);
        let Ok(path) = unsafe { CStr::from_ptr(path) }.to_str() else {
            return fail(TIDEPROB_ERR_UTF8, "path is not valid UTF-8");
        };
        let file = match std::fs::File::open(path) {
            Ok(f) => f,
            Err(e) => return fail(TIDEPROB_ERR_IO, &format!("cannot open {path}: {e}")),
        };
        let opts = IngestOptions {
            gap: if gap_max_minutes < 0 {
                GapPolicy::Fail
            } else {
                GapPolicy::Interpolate {
                    max_minutes: gap_max_minutes,
                }
            },
            rebase_to_mean: rebase,
            ..Default::default()
        };
        match ingest_tide_csv(std::io::BufReader::new(file), &opts) {
            Ok(rec) => {
                unsafe { *out = Box::into_raw(Box::new(tideprob_tide(rec))) };
                TIDEPROB_OK
            }
            Err(e) => from_lib_error(e),
        }
    })
}

/// Synthesize a record from constituents at one-minute cadence.
///
/// # Safety
/// `constituents` must point to `n_constituents` entries; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn tideprob_tide_synthesize(
    constituents: *const tideprob_constituent,
    n_constituents: usize,
    duration_days: f64,
    msl_offset_m: f64,
    out: *mut *mut tideprob_tide,
) -> tideprob_status {
    guarded(|| {
        require_nonnull!(constituents);
        require_nonnull!(out);
        let raw = unsafe { std::slice::from_raw_parts(constituents, n_constituents) };
        let cons: Vec<HarmonicConstituent> = raw
            .iter()
            .enumerate()
            .map(|(i, c)| {
                HarmonicConstituent::new(
                    &format!("c{i}"),
                    c.amplitude_m,
                    c.speed_deg_per_hr,
                    c.phase_deg,
                )
            })
            .collect();
        match synthesize_tide(&cons, duration_days, msl_offset_m) {
            Ok(rec) => {
                unsafe { *out = Box::into_raw(Box::new(tideprob_tide(rec))) };
                TIDEPROB_OK
            }
            Err(e) => from_lib_error(e),
        }
    })
}

/// Number of one-minute samples in a record.
///
/// # Safety
/// `tide` must be a live handle from this API.
#[no_mangle]
pub unsafe extern "C" fn tideprob_tide_len(tide: *const tideprob_tide) -> usize {
    if tide.is_null() {
        return 0;
    }
    unsafe { &*tide }.0.len()
}

/// Copy the level series into `out`, which must hold exactly `len` entries
/// equal to [`tideprob_tide_len`].
///
/// # Safety
/// `tide` must be a live handle; `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn tideprob_tide_levels(
    tide: *const tideprob_tide,
    out: *mut f64,
    len: usize,
) -> tideprob_status {
    guarded(|| {
        require_nonnull!(tide);
        require_nonnull!(out);
        let rec = unsafe { &*tide };
        if len != rec.0.len() {
            return fail(
                TIDEPROB_ERR_INVALID,
                &format!("buffer holds {len} values, record has {}", rec.0.len()),
            );
        }
        let dst = unsafe { std::slice::from_raw_parts_mut(out, len) };
        dst.copy_from_slice(rec.0.levels());
        TIDEPROB_OK
    })
}

/// Derive site datums from a record.
///
/// # Safety
/// `tide` must be a live handle; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tideprob_tide_datums(
    tide: *const tideprob_tide,
    out: *mut tideprob_datums,
) -> tideprob_status {
    guarded(|| {
        require_nonnull!(tide);
        require_nonnull!(out);
        match compute_datums(&unsafe { &*tide }.0) {
            Ok(d) => {
                unsafe { *out = d.into() };
                TIDEPROB_OK
            }
            Err(e) => from_lib_error(e),
        }
    })
}

/// Release a tide handle.
///
/// # Safety
/// `tide` must come from this API and not have been freed already.
#[no_mangle]
pub unsafe extern "C" fn tideprob_tide_free(tide: *mut tideprob_tide) {
    if !tide.is_null() {
        drop(unsafe { Box::from_raw(tide) });
    }
}

/// Bins spanning `[lo - max_offset - width, hi + width]`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tideprob_bins_covering(
    lo: f64,
    hi: f64,
    max_offset: f64,
    width: f64,
    out: *mut tideprob_bins,
) -> tideprob_status {
    guarded(|| {
        require_nonnull!(out);
        match BinSpec::covering(lo, hi, max_offset, width) {
            Ok(b) => {
                unsafe {
                    *out = tideprob_bins {
                        origin: b.origin(),
                        width: b.width(),
                        n_bins: b.n_bins(),
                    }
                };
                TIDEPROB_OK
            }
            Err(e) => from_lib_error(e),
        }
    })
}

/// Bins covering a record's range plus an offset allowance.
///
/// # Safety
/// `tide` must be a live handle; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tideprob_bins_for_tide(
    tide: *const tideprob_tide,
    max_offset: f64,
    width: f64,
    out: *mut tideprob_bins,
) -> tideprob_status {
    guarded(|| {
        require_nonnull!(tide);
        require_nonnull!(out);
        let rec = &unsafe { &*tide }.0;
        unsafe { tideprob_bins_covering(rec.min_level(), rec.max_level(), max_offset, width, out) }
    })
}

/// Load a pattern from its JSON file format.
///
/// # Safety
/// `path` must be a valid NUL-terminated string; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn tideprob_pattern_from_json_file(
    path: *const c_char,
    out: *mut *mut tideprob_pattern,
) -> tideprob_status {
    guarded(|| {
        require_nonnull!(path);
        require_nonnull!(out);
        let Ok(path) = unsafe { CStr::from_ptr(path) }.to_str() else {
            return fail(TIDEPROB_ERR_UTF8, "path is not valid UTF-8");
        };
        let text = match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) => return fail(TIDEPROB_ERR_IO, &format!("cannot read {path}: {e}")),
        };
        match WavePattern::from_json(&text) {
            Ok(p) => {
                unsafe { *out = Box::into_raw(Box::new(tideprob_pattern(p))) };
                TIDEPROB_OK
            }
            Err(e) => from_lib_error(e),
        }
    })
}

/// The shipped AASZe02 reference pattern.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tideprob_pattern_reference_aasze02(
    out: *mut *mut tideprob_pattern,
) -> tideprob_status {
    guarded(|| {
        require_nonnull!(out);
        unsafe { *out = Box::into_raw(Box::new(tideprob_pattern(WavePattern::aasze02()))) };
        TIDEPROB_OK
    })
}

/// Reduce a gauge series (parallel `minutes`/`eta` arrays of length `len`)
/// to a square-wave pattern. `width_rule`: 0 half-amplitude, 1 full run.
///
/// # Safety
/// `minutes` and `eta` must point to `len` entries; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn tideprob_pattern_extract(
    minutes: *const f64,
    eta: *const f64,
    len: usize,
    run_stage: f64,
    threshold_fraction: f64,
    min_gap_minutes: f64,
    width_rule: i32,
    out: *mut *mut tideprob_pattern,
) -> tideprob_status {
    guarded(|| {
        require_nonnull!(minutes);
        require_nonnull!(eta);
        require_nonnull!(out);
        let minutes = unsafe { std::slice::from_raw_parts(minutes, len) }.to_vec();
        let eta = unsafe { std::slice::from_raw_parts(eta, len) }.to_vec();
        let gauge = match GaugeSeries::new(minutes, eta, run_stage) {
            Ok(g) => g,
            Err(e) => return from_lib_error(e),
        };
        let params = ExtractParams {
            threshold_fraction,
            min_gap_minutes,
            width_rule: match width_rule {
                0 => WidthRule::HalfAmplitude,
                1 => WidthRule::FullRun,
                other => return fail(TIDEPROB_ERR_INVALID, &format!("unknown width rule {other}")),
            },
            source: "ffi".to_string(),
        };
        match extract_pattern(&gauge, &params) {
            Ok(p) => {
                unsafe { *out = Box::into_raw(Box::new(tideprob_pattern(p))) };
                TIDEPROB_OK
            }
            Err(e) => from_lib_error(e),
        }
    })
}

/// Pattern duration in minutes.
///
/// # Safety
/// `pattern` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn tideprob_pattern_duration(pattern: *const tideprob_pattern) -> u32 {
    if pattern.is_null() {
        return 0;
    }
    unsafe { &*pattern }.0.duration_minutes()
}

/// Number of waves in the pattern.
///
/// # Safety
/// `pattern` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn tideprob_pattern_wave_count(pattern: *const tideprob_pattern) -> usize {
    if pattern.is_null() {
        return 0;
    }
    unsafe { &*pattern }.0.wave_count()
}

/// Largest height deficit across the pattern's waves.
///
/// # Safety
/// `pattern` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn tideprob_pattern_max_offset(pattern: *const tideprob_pattern) -> f64 {
    if pattern.is_null() {
        return f64::NAN;
    }
    unsafe { &*pattern }.0.max_offset()
}

/// Contiguous window width covering the tallest wave and near-equal waves.
///
/// # Safety
/// `pattern` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn tideprob_pattern_recommend_dt(
    pattern: *const tideprob_pattern,
    near_equal_margin: f64,
) -> u32 {
    if pattern.is_null() {
        return 0;
    }
    tideprob::pattern::recommend_dt(&unsafe { &*pattern }.0, near_equal_margin)
}

/// Release a pattern handle.
///
/// # Safety
/// `pattern` must come from this API and not have been freed already.
#[no_mangle]
pub unsafe extern "C" fn tideprob_pattern_free(pattern: *mut tideprob_pattern) {
    if !pattern.is_null() {
        drop(unsafe { Box::from_raw(pattern) });
    }
}

unsafe fn build_ccdf(
    out: *mut *mut tideprob_ccdf,
    result: Result<CcdfTable, tideprob::Error>,
) -> tideprob_status {
    match result {
        Ok(table) => {
            unsafe { *out = Box::into_raw(Box::new(tideprob_ccdf(table))) };
            TIDEPROB_OK
        }
        Err(e) => from_lib_error(e),
    }
}

/// CCDF of the instantaneous tide.
///
/// # Safety
/// `tide` must be a live handle; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn tideprob_phi0(
    tide: *const tideprob_tide,
    bins: tideprob_bins,
    out: *mut *mut tideprob_ccdf,
) -> tideprob_status {
    guarded(|| {
        require_nonnull!(tide);
        require_nonnull!(out);
        let spec = match bins_to_spec(bins) {
            Ok(s) => s,
            Err(e) => return from_lib_error(e),
        };
        unsafe { build_ccdf(out, build_phi0(&(*tide).0, spec)) }
    })
}

/// CCDF of the windowed tide maximum.
///
/// # Safety
/// `tide` must be a live handle; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn tideprob_phi_dt(
    tide: *const tideprob_tide,
    dt_minutes: u32,
    bins: tideprob_bins,
    out: *mut *mut tideprob_ccdf,
) -> tideprob_status {
    guarded(|| {
        require_nonnull!(tide);
        require_nonnull!(out);
        let spec = match bins_to_spec(bins) {
            Ok(s) => s,
            Err(e) => return from_lib_error(e),
        };
        unsafe { build_ccdf(out, build_phi_dt(&(*tide).0, dt_minutes, spec)) }
    })
}

/// CCDF of the offset pattern maximum.
///
/// # Safety
/// `tide` and `pattern` must be live handles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn tideprob_phi_pattern(
    tide: *const tideprob_tide,
    pattern: *const tideprob_pattern,
    bins: tideprob_bins,
    out: *mut *mut tideprob_ccdf,
) -> tideprob_status {
    guarded(|| {
        require_nonnull!(tide);
        require_nonnull!(pattern);
        require_nonnull!(out);
        let spec = match bins_to_spec(bins) {
            Ok(s) => s,
            Err(e) => return from_lib_error(e),
        };
        unsafe { build_ccdf(out, build_phi_pattern(&(*tide).0, &(*pattern).0, spec)) }
    })
}

/// CCDF of the tide against the decaying proxy template.
///
/// # Safety
/// `tide` must be a live handle; `gp` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn tideprob_phi_g_direct(
    tide: *const tideprob_tide,
    amplitude_m: f64,
    gp: *const tideprob_g_params,
    bins: tideprob_bins,
    out: *mut *mut tideprob_ccdf,
) -> tideprob_status {
    guarded(|| {
        require_nonnull!(tide);
        require_nonnull!(gp);
        require_nonnull!(out);
        let spec = match bins_to_spec(bins) {
            Ok(s) => s,
            Err(e) => return from_lib_error(e),
        };
        let params: GMethodParams = unsafe { *gp }.into();
        unsafe {
            build_ccdf(
                out,
                build_phi_g_direct(&(*tide).0, amplitude_m, &params, spec),
            )
        }
    })
}

/// Discretize the Gaussian closed form onto a bin grid.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tideprob_phi_from_moments(
    xi0: f64,
    sigma: f64,
    bins: tideprob_bins,
    out: *mut *mut tideprob_ccdf,
) -> tideprob_status {
    guarded(|| {
        require_nonnull!(out);
        let spec = match bins_to_spec(bins) {
            Ok(s) => s,
            Err(e) => return from_lib_error(e),
        };
        let m = MomentSummary { xi0, sigma };
        unsafe { build_ccdf(out, CcdfTable::from_moments_erf(&m, spec, "g_erf")) }
    })
}

/// Gaussian moments from the site regression constants.
///
/// # Safety
/// `gp`, `datums`, `xi0_out`, and `sigma_out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn tideprob_mofjeld_moments(
    amplitude_m: f64,
    gp: *const tideprob_g_params,
    datums: *const tideprob_datums,
    xi0_out: *mut f64,
    sigma_out: *mut f64,
) -> tideprob_status {
    guarded(|| {
        require_nonnull!(gp);
        require_nonnull!(datums);
        require_nonnull!(xi0_out);
        require_nonnull!(sigma_out);
        let params: GMethodParams = unsafe { *gp }.into();
        let d: TidalDatums = unsafe { *datums }.into();
        match mofjeld_params(amplitude_m, &params, &d) {
            Ok(m) => {
                unsafe {
                    *xi0_out = m.xi0;
                    *sigma_out = m.sigma;
                }
                TIDEPROB_OK
            }
            Err(e) => from_lib_error(e),
        }
    })
}

/// Gaussian CCDF value `(1 - erf((xi - xi0)/(sqrt(2) sigma))) / 2`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tideprob_phi_erf(
    xi_hat: f64,
    xi0: f64,
    sigma: f64,
    out: *mut f64,
) -> tideprob_status {
    guarded(|| {
        require_nonnull!(out);
        match phi_erf(xi_hat, &MomentSummary { xi0, sigma }) {
            Ok(v) => {
                unsafe { *out = v };
                TIDEPROB_OK
            }
            Err(e) => from_lib_error(e),
        }
    })
}

/// Step CCDF of an unbounded window: 1 below the highest observable stage.
///
/// # Safety
/// `datums` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tideprob_phi_infinity(xi_hat: f64, datums: *const tideprob_datums) -> f64 {
    if datums.is_null() {
        return f64::NAN;
    }
    let d: TidalDatums = unsafe { *datums }.into();
    phi_infinity(xi_hat, &d)
}

/// Interpolate a CCDF at a stage.
///
/// # Safety
/// `ccdf` must be a live handle; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn tideprob_ccdf_eval(
    ccdf: *const tideprob_ccdf,
    xi_hat: f64,
    out: *mut f64,
) -> tideprob_status {
    guarded(|| {
        require_nonnull!(ccdf);
        require_nonnull!(out);
        unsafe { *out = (*ccdf).0.eval(xi_hat) };
        TIDEPROB_OK
    })
}

/// Mean and standard deviation of the CCDF's density.
///
/// # Safety
/// `ccdf` must be a live handle; the out-pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn tideprob_ccdf_moments(
    ccdf: *const tideprob_ccdf,
    xi0_out: *mut f64,
    sigma_out: *mut f64,
) -> tideprob_status {
    guarded(|| {
        require_nonnull!(ccdf);
        require_nonnull!(xi0_out);
        require_nonnull!(sigma_out);
        match unsafe { &*ccdf }.0.moments() {
            Ok(m) => {
                unsafe {
                    *xi0_out = m.xi0;
                    *sigma_out = m.sigma;
                }
                TIDEPROB_OK
            }
            Err(e) => from_lib_error(e),
        }
    })
}

/// Number of bins in the table.
///
/// # Safety
/// `ccdf` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn tideprob_ccdf_n_bins(ccdf: *const tideprob_ccdf) -> usize {
    if ccdf.is_null() {
        return 0;
    }
    unsafe { &*ccdf }.0.bins().n_bins()
}

/// Number of slider stops behind the table (0 for synthetic tables).
///
/// # Safety
/// `ccdf` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn tideprob_ccdf_n_windows(ccdf: *const tideprob_ccdf) -> u64 {
    if ccdf.is_null() {
        return 0;
    }
    unsafe { &*ccdf }.0.n_windows()
}

/// Copy bin left edges, CCDF values, and densities into caller buffers of
/// exactly `len == tideprob_ccdf_n_bins(...)` entries. Any of the three
/// destination pointers may be NULL to skip that column.
///
/// # Safety
/// Non-NULL destinations must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn tideprob_ccdf_values(
    ccdf: *const tideprob_ccdf,
    edges_out: *mut f64,
    phi_out: *mut f64,
    pdf_out: *mut f64,
    len: usize,
) -> tideprob_status {
    guarded(|| {
        require_nonnull!(ccdf);
        let table = &unsafe { &*ccdf }.0;
        let n = table.bins().n_bins();
        if len != n {
            return fail(
                TIDEPROB_ERR_INVALID,
                &format!("buffer holds {len} values, table has {n} bins"),
            );
        }
        if !edges_out.is_null() {
            let dst = unsafe { std::slice::from_raw_parts_mut(edges_out, len) };
            for (i, v) in dst.iter_mut().enumerate() {
                *v = table.bins().left_edge(i);
            }
        }
        if !phi_out.is_null() {
            unsafe { std::slice::from_raw_parts_mut(phi_out, len) }.copy_from_slice(table.phi());
        }
        if !pdf_out.is_null() {
            unsafe { std::slice::from_raw_parts_mut(pdf_out, len) }.copy_from_slice(table.pdf());
        }
        TIDEPROB_OK
    })
}

/// Release a CCDF handle.
///
/// # Safety
/// `ccdf` must come from this API and not have been freed already.
#[no_mangle]
pub unsafe extern "C" fn tideprob_ccdf_free(ccdf: *mut tideprob_ccdf) {
    if !ccdf.is_null() {
        drop(unsafe { Box::from_raw(ccdf) });
    }
}

/// Build a stage response from parallel `stages`/`qois` arrays.
/// `mode`: 0 piecewise-linear, 1 slope-one. `extrapolation`: 0 linear
/// continuation, 1 clamp. A floor applies only with `has_floor` nonzero.
///
/// # Safety
/// `stages` and `qois` must point to `n` entries; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn tideprob_response_new(
    lon: f64,
    lat: f64,
    bathy_m: f64,
    stages: *const f64,
    qois: *const f64,
    n: usize,
    mode: i32,
    extrapolation: i32,
    has_floor: bool,
    floor: f64,
    out: *mut *mut tideprob_response,
) -> tideprob_status {
    guarded(|| {
        require_nonnull!(stages);
        require_nonnull!(qois);
        require_nonnull!(out);
        let stages = unsafe { std::slice::from_raw_parts(stages, n) };
        let qois = unsafe { std::slice::from_raw_parts(qois, n) };
        let samples: Vec<StageSample> = stages
            .iter()
            .zip(qois)
            .map(|(&s, &q)| StageSample::new(s, q))
            .collect();
        let mode = match mode {
            0 => ResponseMode::PiecewiseLinear,
            1 => ResponseMode::SlopeOneSingleRun,
            other => return fail(TIDEPROB_ERR_INVALID, &format!("unknown mode {other}")),
        };
        let extrapolation = match extrapolation {
            0 => Extrapolation::LinearContinuation,
            1 => Extrapolation::Clamp,
            other => {
                return fail(
                    TIDEPROB_ERR_INVALID,
                    &format!("unknown extrapolation {other}"),
                )
            }
        };
        let built = build_response(
            Location::new(lon, lat, bathy_m),
            samples,
            mode,
            extrapolation,
        )
        .and_then(|sr| {
            if has_floor {
                sr.with_floor(floor)
            } else {
                Ok(sr)
            }
        });
        match built {
            Ok(sr) => {
                unsafe { *out = Box::into_raw(Box::new(tideprob_response(sr))) };
                TIDEPROB_OK
            }
            Err(e) => from_lib_error(e),
        }
    })
}

/// Evaluate the response at a stage.
///
/// # Safety
/// `response` must be a live handle; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn tideprob_response_eval(
    response: *const tideprob_response,
    stage: f64,
    out: *mut f64,
) -> tideprob_status {
    guarded(|| {
        require_nonnull!(response);
        require_nonnull!(out);
        unsafe { *out = (*response).0.eval_z(stage) };
        TIDEPROB_OK
    })
}

/// Lowest stage in `[domain_lo, domain_hi]` above which the response exceeds
/// `qoi_level`; may be +/- infinity.
///
/// # Safety
/// `response` must be a live handle; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn tideprob_response_inverse(
    response: *const tideprob_response,
    qoi_level: f64,
    domain_lo: f64,
    domain_hi: f64,
    out: *mut f64,
) -> tideprob_status {
    guarded(|| {
        require_nonnull!(response);
        require_nonnull!(out);
        let domain = match StageDomain::new(domain_lo, domain_hi) {
            Ok(d) => d,
            Err(e) => return from_lib_error(e),
        };
        unsafe { *out = (*response).0.inverse_z(qoi_level, domain) };
        TIDEPROB_OK
    })
}

/// Exceedance probabilities at each level. `mode`: 0 infimum, 1 interval
/// sum. `probabilities_out` must hold `n_levels` doubles.
///
/// # Safety
/// `response` and `ccdf` must be live handles; `levels` must point to
/// `n_levels` ascending nonnegative values; `probabilities_out` must point
/// to `n_levels` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn tideprob_psi(
    response: *const tideprob_response,
    ccdf: *const tideprob_ccdf,
    levels: *const f64,
    n_levels: usize,
    mode: i32,
    domain_lo: f64,
    domain_hi: f64,
    probabilities_out: *mut f64,
) -> tideprob_status {
    guarded(|| {
        require_nonnull!(response);
        require_nonnull!(ccdf);
        require_nonnull!(levels);
        require_nonnull!(probabilities_out);
        let levels = unsafe { std::slice::from_raw_parts(levels, n_levels) };
        let levels = match ExceedanceLevels::new(levels.to_vec()) {
            Ok(l) => l,
            Err(e) => return from_lib_error(e),
        };
        let domain = match StageDomain::new(domain_lo, domain_hi) {
            Ok(d) => d,
            Err(e) => return from_lib_error(e),
        };
        let mode = match mode {
            0 => PsiMode::Infimum,
            1 => PsiMode::IntervalSum,
            other => return fail(TIDEPROB_ERR_INVALID, &format!("unknown psi mode {other}")),
        };
        let curve = psi(
            &unsafe { &*response }.0,
            &unsafe { &*ccdf }.0,
            &levels,
            mode,
            domain,
        );
        unsafe { std::slice::from_raw_parts_mut(probabilities_out, n_levels) }
            .copy_from_slice(&curve.probabilities);
        TIDEPROB_OK
    })
}

/// Release a response handle.
///
/// # Safety
/// `response` must come from this API and not have been freed already.
#[no_mangle]
pub unsafe extern "C" fn tideprob_response_free(response: *mut tideprob_response) {
    if !response.is_null() {
        drop(unsafe { Box::from_raw(response) });
    }
}
