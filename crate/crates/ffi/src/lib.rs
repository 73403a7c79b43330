//! C ABI over `dcec`. Scenarios are opaque handles; every fallible call
//! returns a [`DcecStatus`] and leaves a message for [`dcec_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use dcec::analytic;
use dcec::antenna::AntennaPattern;
use dcec::config::{Scenario, ScenarioConfig};
use dcec::experiment;
use dcec::montecarlo;
use dcec::popularity::{ContentCatalog, Policy};
use dcec::Error;

/// Opaque scenario handle.
pub struct DcecScenario {
    inner: Scenario,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DcecStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParameter = 2,
    Config = 3,
    Io = 4,
    Numeric = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DcecPolicy {
    Dcec = 0,
    Mpc = 1,
}

impl From<DcecPolicy> for Policy {
    fn from(p: DcecPolicy) -> Self {
        match p {
            DcecPolicy::Dcec => Policy::Dcec,
            DcecPolicy::Mpc => Policy::Mpc,
        }
    }
}

/// Closed-form result. Rates in bit/s, delays in seconds. `r_d2d` is NaN
/// when the policy has no D2D traffic.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct DcecPoint {
    pub offloading_gain: f64,
    pub p_local: f64,
    pub p_d2d: f64,
    pub p_cluster: f64,
    pub p_miss: f64,
    pub r_backhaul: f64,
    pub r_nearest: f64,
    pub r_cluster: f64,
    pub r_d2d: f64,
    pub d_total: f64,
    pub d_backhaul: f64,
    pub d_nearest: f64,
    pub d_cluster: f64,
    pub d_d2d: f64,
}

/// Monte Carlo means with 95% confidence half-widths. D2D fields are NaN
/// when no drop produced a D2D sample.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct DcecSimulation {
    pub drops: u64,
    pub r_backhaul: f64,
    pub r_backhaul_ci: f64,
    pub r_nearest: f64,
    pub r_nearest_ci: f64,
    pub r_cluster: f64,
    pub r_cluster_ci: f64,
    pub r_d2d: f64,
    pub r_d2d_ci: f64,
    pub d_total: f64,
    pub d_total_ci: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> DcecStatus {
    match e {
        Error::InvalidParameter(_)
        | Error::CapacityOverflow { .. }
        | Error::BelowReferenceDistance { .. }
        | Error::NotEnoughStations { .. } => DcecStatus::InvalidParameter,
        Error::Pole { .. } | Error::MissingRate { .. } => DcecStatus::Numeric,
        Error::Config(_) => DcecStatus::Config,
        Error::Io { .. } | Error::Csv(_) => DcecStatus::Io,
    }
}

/// Runs `f`, converting errors and panics into a status.
fn guard(f: impl FnOnce() -> Result<(), (DcecStatus, String)>) -> DcecStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DcecStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            DcecStatus::Panic
        }
    }
}

fn lift<T>(r: dcec::Result<T>) -> Result<T, (DcecStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (DcecStatus, String) {
    (DcecStatus::NullPointer, format!("{what} is null"))
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next failing call on the same thread; do not free.
#[no_mangle]
pub extern "C" fn dcec_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn dcec_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Scenario with built-in defaults. Free with [`dcec_scenario_free`].
#[no_mangle]
pub extern "C" fn dcec_scenario_default() -> *mut DcecScenario {
    Box::into_raw(Box::new(DcecScenario { inner: Scenario::default() }))
}

/// Parses a JSON scenario. Keys left out take their defaults.
///
/// # Safety
/// `json` must be a valid NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn dcec_scenario_from_json(json: *const c_char, out: *mut *mut DcecScenario) -> DcecStatus {
    guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        // SAFETY: caller guarantees a NUL-terminated string.
        let text = unsafe { CStr::from_ptr(json) }
            .to_str()
            .map_err(|e| (DcecStatus::Config, format!("json is not UTF-8: {e}")))?;
        let inner = lift(ScenarioConfig::from_json(text).and_then(|c| c.to_scenario()))?;
        // SAFETY: caller guarantees `out` is writable.
        unsafe { *out = Box::into_raw(Box::new(DcecScenario { inner })) };
        Ok(())
    })
}

/// # Safety
/// `scenario` must come from this library and not be freed already. NULL is a no-op.
#[no_mangle]
pub unsafe extern "C" fn dcec_scenario_free(scenario: *mut DcecScenario) {
    if !scenario.is_null() {
        // SAFETY: pointer came from Box::into_raw in this crate.
        drop(unsafe { Box::from_raw(scenario) });
    }
}

/// # Safety
/// `scenario` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dcec_analytic(
    scenario: *const DcecScenario,
    policy: DcecPolicy,
    out: *mut DcecPoint,
) -> DcecStatus {
    guard(|| {
        // SAFETY: caller guarantees a live handle.
        let s = &unsafe { scenario.as_ref() }.ok_or_else(|| null("scenario"))?.inner;
        if out.is_null() {
            return Err(null("out"));
        }
        let a = lift(s.catalog().and_then(|c| analytic::evaluate(&s.params, &c, &s.cache, policy.into())))?;
        let point = DcecPoint {
            offloading_gain: a.offloading_gain(),
            p_local: a.probs.local,
            p_d2d: a.probs.d2d,
            p_cluster: a.probs.cluster,
            p_miss: a.probs.miss,
            r_backhaul: a.rates.backhaul,
            r_nearest: a.rates.nearest,
            r_cluster: a.rates.cluster,
            r_d2d: a.rates.d2d.unwrap_or(f64::NAN),
            d_total: a.delay.total,
            d_backhaul: a.delay.backhaul,
            d_nearest: a.delay.nearest,
            d_cluster: a.delay.cluster,
            d_d2d: a.delay.d2d,
        };
        // SAFETY: checked non-null; caller guarantees writability.
        unsafe { out.write(point) };
        Ok(())
    })
}

/// Monte Carlo run of `drops` drops. Output depends only on the scenario,
/// policy, drop count and seed.
///
/// # Safety
/// `scenario` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dcec_simulate(
    scenario: *const DcecScenario,
    policy: DcecPolicy,
    drops: u64,
    seed: u64,
    out: *mut DcecSimulation,
) -> DcecStatus {
    guard(|| {
        // SAFETY: caller guarantees a live handle.
        let s = &unsafe { scenario.as_ref() }.ok_or_else(|| null("scenario"))?.inner;
        if out.is_null() {
            return Err(null("out"));
        }
        let (probs, sum) = lift(experiment::simulate_scenario(s, policy.into(), drops, seed))?;
        let (delay, delay_ci) = lift(montecarlo::estimate_delay(&s.params, &sum, &probs))?;
        let nan_if_empty = |e: &montecarlo::Estimate, x: f64| if e.is_empty() { f64::NAN } else { x };
        let sim = DcecSimulation {
            drops: sum.drops,
            r_backhaul: sum.backhaul.mean,
            r_backhaul_ci: sum.backhaul.ci_half_width(),
            r_nearest: sum.nearest.mean,
            r_nearest_ci: sum.nearest.ci_half_width(),
            r_cluster: sum.cluster.mean,
            r_cluster_ci: sum.cluster.ci_half_width(),
            r_d2d: nan_if_empty(&sum.d2d, sum.d2d.mean),
            r_d2d_ci: nan_if_empty(&sum.d2d, sum.d2d.ci_half_width()),
            d_total: delay.total,
            d_total_ci: delay_ci,
        };
        // SAFETY: checked non-null; caller guarantees writability.
        unsafe { out.write(sim) };
        Ok(())
    })
}

/// Delay-minimizing cluster size in `k_min..=k_max`; ties go to the smaller K.
///
/// # Safety
/// `scenario` must be a live handle; `k_out` and `delay_out` writable.
#[no_mangle]
pub unsafe extern "C" fn dcec_optimal_cluster_size(
    scenario: *const DcecScenario,
    k_min: usize,
    k_max: usize,
    k_out: *mut usize,
    delay_out: *mut f64,
) -> DcecStatus {
    guard(|| {
        // SAFETY: caller guarantees a live handle.
        let s = &unsafe { scenario.as_ref() }.ok_or_else(|| null("scenario"))?.inner;
        if k_out.is_null() || delay_out.is_null() {
            return Err(null("output pointer"));
        }
        if k_min == 0 || k_min > k_max {
            return Err((DcecStatus::InvalidParameter, format!("bad K range {k_min}..={k_max}")));
        }
        let (k, d) = lift(s.catalog().and_then(|c| analytic::optimal_cluster_size(&s.params, &c, &s.cache, k_min..=k_max)))?;
        // SAFETY: checked non-null.
        unsafe {
            k_out.write(k);
            delay_out.write(d.total);
        }
        Ok(())
    })
}

/// Writes the `n` Zipf request probabilities into `out`.
///
/// # Safety
/// `out` must point to `n` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn dcec_zipf(n: usize, skewness: f64, out: *mut f64) -> DcecStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let c = lift(ContentCatalog::zipf(n, skewness))?;
        // SAFETY: caller guarantees `n` writable doubles.
        unsafe { ptr::copy_nonoverlapping(c.popularity().as_ptr(), out, n) };
        Ok(())
    })
}

/// Mean antenna gain (linear) over a uniform angle. A non-positive
/// `mainlobe_deg` selects the width at which the main lobe meets the side lobe.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dcec_average_gain(
    main_db: f64,
    side_db: f64,
    halfpower_deg: f64,
    mainlobe_deg: f64,
    rolloff: f64,
    out: *mut f64,
) -> DcecStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let width = (mainlobe_deg > 0.0).then_some(mainlobe_deg);
        let p = lift(AntennaPattern::from_db(main_db, side_db, halfpower_deg, width, rolloff))?;
        // SAFETY: checked non-null.
        unsafe { out.write(p.average_gain()) };
        Ok(())
    })
}
