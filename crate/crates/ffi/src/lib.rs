//! C interface to `otto-sta`.
//!
//! Profiles and experiment configs cross the boundary as opaque handles.
//! Each is created by one of the constructors below and released with the
//! matching `*_free`. Fallible calls return an [`OttoStatus`]; after a
//! failure, [`otto_last_error_message`] describes it on the calling thread
//! until the next failure there. Output pointers are written only on
//! success.
//!
//! The header `include/otto_sta.h` is generated from this file at build
//! time.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use otto_sta::costs::QuadratureOptions;
use otto_sta::harness::{self, evaluate_profile, ExperimentConfig};
use otto_sta::optimizer::{run_ensemble, CostMetric};
use otto_sta::profiles::io::ProfileDocument;
use otto_sta::profiles::{AnyProfile, Endpoints, PolynomialAnsatz, ProfileModel, SmoothedRampAnsatz};
use otto_sta::thermo::{sudden_quench_benchmark, CycleParams, CycleReport};
use otto_sta::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OttoStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidParameters = 3,
    OutsideCoolingWindow = 4,
    InvalidProfile = 5,
    BoundaryViolation = 6,
    Quadrature = 7,
    Optimization = 8,
    Io = 9,
    Json = 10,
    NothingToExport = 11,
    MetricViolation = 12,
    Panic = 99,
}

/// Operating point of the refrigerator.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OttoParams {
    pub omega1: f64,
    pub omega2: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub tau: f64,
}

/// ω and its first two time derivatives at one instant.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct OttoJet {
    pub omega: f64,
    pub omega_dot: f64,
    pub omega_ddot: f64,
}

/// Energetics of one cycle. The `hsta_*` fields, `min_omega_sq`,
/// `trap_inverted` and `residual_max` are zero for the sudden quench.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct OttoCycleReport {
    pub w1: f64,
    pub w3: f64,
    pub q4: f64,
    pub c_ab: f64,
    pub c_cd: f64,
    pub hsta_ab: f64,
    pub hsta_cd: f64,
    pub j_c: f64,
    pub eps: f64,
    pub eps_ad: f64,
    pub eps_c: f64,
    pub chi: f64,
    pub min_omega_sq: f64,
    pub trap_inverted: bool,
    /// Largest of the six boundary-condition residuals.
    pub residual_max: f64,
}

impl OttoCycleReport {
    fn from_cycle(r: &CycleReport) -> Self {
        Self {
            w1: r.w1,
            w3: r.w3,
            q4: r.q4,
            c_ab: r.c_ab,
            c_cd: r.c_cd,
            j_c: r.j_c,
            eps: r.eps,
            eps_ad: r.eps_ad,
            eps_c: r.eps_c,
            chi: r.chi,
            ..Self::default()
        }
    }
}

/// A frequency ramp for the compression stroke.
pub struct OttoProfile {
    inner: AnyProfile,
}

/// An experiment configuration as read by the command-line tool.
pub struct OttoConfig {
    inner: ExperimentConfig,
}

struct Failure {
    status: OttoStatus,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::InvalidParameters(_) | Error::NoRefrigeration { .. } | Error::QuenchClosesWindow { .. } => {
                OttoStatus::InvalidParameters
            }
            Error::OutsideCoolingWindow { .. } => OttoStatus::OutsideCoolingWindow,
            Error::MetricViolation { .. } => OttoStatus::MetricViolation,
            Error::NonPositiveFrequency { .. }
            | Error::InvalidProfile(_)
            | Error::InvertedStretch { .. }
            | Error::ShapeMismatch { .. } => OttoStatus::InvalidProfile,
            Error::BoundaryViolation { .. } => OttoStatus::BoundaryViolation,
            Error::InvalidGrid(_) | Error::QuadratureNotConverged { .. } | Error::NonFiniteIntegrand { .. } => {
                OttoStatus::Quadrature
            }
            Error::NonFiniteGradient { .. } | Error::NonFiniteObjective { .. } | Error::AllRestartsFailed { .. } => {
                OttoStatus::Optimization
            }
            Error::Config(_) => OttoStatus::InvalidArgument,
            Error::NothingToExport(_) => OttoStatus::NothingToExport,
            Error::Io { .. } => OttoStatus::Io,
            Error::Json(_) => OttoStatus::Json,
        };
        Failure {
            status,
            message: e.to_string(),
        }
    }
}

fn fail<T>(status: OttoStatus, message: impl Into<String>) -> Result<T, Failure> {
    Err(Failure {
        status,
        message: message.into(),
    })
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> OttoStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => OttoStatus::Ok,
        Ok(Err(failure)) => {
            set_last_error(failure.message);
            failure.status
        }
        Err(payload) => {
            let what = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("internal panic: {what}"));
            OttoStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    match p.as_ref() {
        Some(r) => Ok(r),
        None => fail(OttoStatus::NullPointer, format!("{what} is NULL")),
    }
}

unsafe fn deref_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    match p.as_mut() {
        Some(r) => Ok(r),
        None => fail(OttoStatus::NullPointer, format!("{what} is NULL")),
    }
}

unsafe fn string_arg(p: *const c_char, what: &str) -> Result<String, Failure> {
    if p.is_null() {
        return fail(OttoStatus::NullPointer, format!("{what} is NULL"));
    }
    match CStr::from_ptr(p).to_str() {
        Ok(s) => Ok(s.to_owned()),
        Err(_) => fail(OttoStatus::InvalidArgument, format!("{what} is not UTF-8")),
    }
}

fn params_of(p: &OttoParams) -> Result<CycleParams, Failure> {
    Ok(CycleParams::new(p.omega1, p.omega2, p.beta1, p.beta2, p.tau)?)
}

fn endpoints_of(p: &OttoParams) -> Result<Endpoints, Failure> {
    Ok(Endpoints::new(p.omega1, p.omega2, p.tau)?)
}

unsafe fn emit_profile(out: *mut *mut OttoProfile, inner: AnyProfile) -> Result<(), Failure> {
    let slot = deref_mut(out, "out")?;
    *slot = Box::into_raw(Box::new(OttoProfile { inner }));
    Ok(())
}

/// Description of the last failure on this thread, or NULL if none. The
/// string stays valid until the next failing call on this thread.
#[no_mangle]
pub extern "C" fn otto_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Version of the library as a static string.
#[no_mangle]
pub extern "C" fn otto_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// The (10, −15, 6) polynomial ramp between `params.omega1` and
/// `params.omega2` over `params.tau`.
///
/// # Safety
/// `params` must point to a valid [`OttoParams`] and `out` to writable
/// storage for a handle.
#[no_mangle]
pub unsafe extern "C" fn otto_profile_benchmark(params: *const OttoParams, out: *mut *mut OttoProfile) -> OttoStatus {
    guard(|| {
        let ep = endpoints_of(deref(params, "params")?)?;
        emit_profile(out, AnyProfile::Polynomial(PolynomialAnsatz::benchmark(ep)))
    })
}

/// ω₁ + Δω Σ αₙ (t/τ)ⁿ with `alpha[0]` multiplying the cube.
///
/// # Safety
/// `alpha` must point to `n` readable doubles; see
/// [`otto_profile_benchmark`] for the other arguments.
#[no_mangle]
pub unsafe extern "C" fn otto_profile_polynomial(
    params: *const OttoParams,
    alpha: *const f64,
    n: usize,
    out: *mut *mut OttoProfile,
) -> OttoStatus {
    guard(|| {
        let ep = endpoints_of(deref(params, "params")?)?;
        if alpha.is_null() {
            return fail(OttoStatus::NullPointer, "alpha is NULL");
        }
        let alpha = std::slice::from_raw_parts(alpha, n).to_vec();
        emit_profile(out, AnyProfile::Polynomial(PolynomialAnsatz::new(alpha, ep)?))
    })
}

/// Linear ramp between `t1` and `t2` with both corners smoothed over ±`sigma`.
///
/// # Safety
/// See [`otto_profile_benchmark`].
#[no_mangle]
pub unsafe extern "C" fn otto_profile_smoothed_ramp(
    params: *const OttoParams,
    t1: f64,
    t2: f64,
    sigma: f64,
    out: *mut *mut OttoProfile,
) -> OttoStatus {
    guard(|| {
        let ep = endpoints_of(deref(params, "params")?)?;
        emit_profile(
            out,
            AnyProfile::SmoothedRamp(SmoothedRampAnsatz::new(t1, t2, sigma, ep)?),
        )
    })
}

/// Parses a profile document.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` writable storage for a
/// handle.
#[no_mangle]
pub unsafe extern "C" fn otto_profile_from_json(json: *const c_char, out: *mut *mut OttoProfile) -> OttoStatus {
    guard(|| {
        let doc = ProfileDocument::from_json(&string_arg(json, "json")?)?;
        emit_profile(out, doc.to_profile()?)
    })
}

/// Reads a profile document from a file.
///
/// # Safety
/// As [`otto_profile_from_json`], with `path` a NUL-terminated path.
#[no_mangle]
pub unsafe extern "C" fn otto_profile_load(path: *const c_char, out: *mut *mut OttoProfile) -> OttoStatus {
    guard(|| {
        let doc = ProfileDocument::load(&PathBuf::from(string_arg(path, "path")?))?;
        emit_profile(out, doc.to_profile()?)
    })
}

/// Serializes a profile as a JSON document. Release the string with
/// [`otto_string_free`].
///
/// # Safety
/// `profile` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn otto_profile_to_json(profile: *const OttoProfile, out: *mut *mut c_char) -> OttoStatus {
    guard(|| {
        let p = deref(profile, "profile")?;
        let json = ProfileDocument::from_profile(&p.inner).to_json()?;
        let slot = deref_mut(out, "out")?;
        *slot = CString::new(json)
            .map_err(|_| Failure {
                status: OttoStatus::Json,
                message: "document contains NUL".into(),
            })?
            .into_raw();
        Ok(())
    })
}

/// Frees a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn otto_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Stroke duration of a profile.
///
/// # Safety
/// `profile` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn otto_profile_tau(profile: *const OttoProfile, out: *mut f64) -> OttoStatus {
    guard(|| {
        let tau = deref(profile, "profile")?.inner.tau();
        *deref_mut(out, "out")? = tau;
        Ok(())
    })
}

/// ω, ω̇ and ω̈ at `t`.
///
/// # Safety
/// `profile` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn otto_profile_eval(profile: *const OttoProfile, t: f64, out: *mut OttoJet) -> OttoStatus {
    guard(|| {
        let p = deref(profile, "profile")?;
        let tau = p.inner.tau();
        if !(0.0..=tau).contains(&t) {
            return fail(OttoStatus::InvalidArgument, format!("t = {t} outside [0, {tau}]"));
        }
        let j = p.inner.jet(t);
        *deref_mut(out, "out")? = OttoJet {
            omega: j.omega,
            omega_dot: j.domega,
            omega_ddot: j.ddomega,
        };
        Ok(())
    })
}

/// Releases a profile. NULL is ignored.
///
/// # Safety
/// `profile` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn otto_profile_free(profile: *mut OttoProfile) {
    if !profile.is_null() {
        drop(Box::from_raw(profile));
    }
}

/// Full energetics of a cycle driven by `profile` on the compression stroke
/// and its time reverse on the expansion stroke. The profile's endpoints
/// must match `params`, but its boundary conditions are not enforced; see
/// `residual_max`.
///
/// # Safety
/// `profile` must be a live handle, `params` valid and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn otto_evaluate(
    profile: *const OttoProfile,
    params: *const OttoParams,
    out: *mut OttoCycleReport,
) -> OttoStatus {
    guard(|| {
        let p = deref(profile, "profile")?;
        let cp = params_of(deref(params, "params")?)?;
        let ep = p.inner.endpoints();
        if ep != Endpoints::compression(&cp) {
            return fail(
                OttoStatus::InvalidArgument,
                format!("profile endpoints {ep:?} do not match the cycle parameters"),
            );
        }
        let e = evaluate_profile(&p.inner, &cp, &QuadratureOptions::default())?;
        *deref_mut(out, "out")? = OttoCycleReport {
            hsta_ab: e.costs.hsta_ab.value,
            hsta_cd: e.costs.hsta_cd.value,
            min_omega_sq: e.costs.min_omega_sq,
            trap_inverted: e.costs.trap_inverted,
            residual_max: e.residuals.max_abs(),
            ..OttoCycleReport::from_cycle(&e.cycle)
        };
        Ok(())
    })
}

/// Energetics of the instantaneous-quench cycle.
///
/// # Safety
/// `params` must be valid and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn otto_sudden_quench(params: *const OttoParams, out: *mut OttoCycleReport) -> OttoStatus {
    guard(|| {
        let r = sudden_quench_benchmark(&params_of(deref(params, "params")?)?)?;
        *deref_mut(out, "out")? = OttoCycleReport::from_cycle(&r);
        Ok(())
    })
}

unsafe fn emit_config(out: *mut *mut OttoConfig, inner: ExperimentConfig) -> Result<(), Failure> {
    let slot = deref_mut(out, "out")?;
    *slot = Box::into_raw(Box::new(OttoConfig { inner }));
    Ok(())
}

/// The default experiment configuration.
///
/// # Safety
/// `out` must be writable storage for a handle.
#[no_mangle]
pub unsafe extern "C" fn otto_config_default(out: *mut *mut OttoConfig) -> OttoStatus {
    guard(|| emit_config(out, ExperimentConfig::default()))
}

/// Parses an experiment configuration; unknown keys are rejected.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn otto_config_from_json(json: *const c_char, out: *mut *mut OttoConfig) -> OttoStatus {
    guard(|| emit_config(out, ExperimentConfig::from_json(&string_arg(json, "json")?)?))
}

/// # Safety
/// `config` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn otto_config_set_seed(config: *mut OttoConfig, seed: u64) -> OttoStatus {
    guard(|| {
        let c = &mut deref_mut(config, "config")?.inner;
        c.ensemble.base_seed = seed;
        c.audit.ensemble.base_seed = seed;
        Ok(())
    })
}

/// Restart count of every ensemble the config runs.
///
/// # Safety
/// `config` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn otto_config_set_restarts(config: *mut OttoConfig, restarts: usize) -> OttoStatus {
    guard(|| {
        if restarts == 0 {
            return fail(OttoStatus::InvalidArgument, "restarts must be positive");
        }
        let c = &mut deref_mut(config, "config")?.inner;
        c.ensemble.n_restarts = restarts;
        c.sweep.restarts = restarts;
        c.audit.ensemble.n_restarts = restarts;
        Ok(())
    })
}

/// # Safety
/// `config` must be a live handle and `dir` a NUL-terminated path.
#[no_mangle]
pub unsafe extern "C" fn otto_config_set_output_dir(config: *mut OttoConfig, dir: *const c_char) -> OttoStatus {
    guard(|| {
        let dir = string_arg(dir, "dir")?;
        deref_mut(config, "config")?.inner.output_dir = PathBuf::from(dir);
        Ok(())
    })
}

/// Releases a config. NULL is ignored.
///
/// # Safety
/// `config` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn otto_config_free(config: *mut OttoConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Trains the configured ensemble in memory and returns its best
/// post-processed ramp. Nothing is written to disk.
///
/// # Safety
/// `config` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn otto_optimize(config: *const OttoConfig, out: *mut *mut OttoProfile) -> OttoStatus {
    guard(|| {
        let cfg = &deref(config, "config")?.inner;
        cfg.validate()?;
        cfg.params.require_cooling_window()?;
        let problem = cfg.problem(cfg.params, CostMetric::Schmidt);
        let outcome = run_ensemble(&cfg.ensemble, &cfg.schedule, &problem)?;
        emit_profile(out, AnyProfile::Tabulated(outcome.best().profile.clone()))
    })
}

/// Runs one command of the command-line tool (`evaluate`, `optimize`,
/// `sweep`, `audit` or `export`), writing its files under the config's
/// output directory.
///
/// # Safety
/// `config` must be a live handle and `command` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn otto_run_command(config: *const OttoConfig, command: *const c_char) -> OttoStatus {
    guard(|| {
        let cfg = &deref(config, "config")?.inner;
        match string_arg(command, "command")?.as_str() {
            "evaluate" => harness::cmd_evaluate(cfg).map(drop),
            "optimize" => harness::cmd_optimize(cfg).map(drop),
            "sweep" => harness::cmd_sweep(cfg).map(drop),
            "audit" => harness::cmd_audit(cfg).map(drop),
            "export" => harness::cmd_export(cfg).map(drop),
            other => return fail(OttoStatus::InvalidArgument, format!("unknown command `{other}`")),
        }
        .map_err(Failure::from)
    })
}
