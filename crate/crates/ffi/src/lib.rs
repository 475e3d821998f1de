//! C ABI over `qudit-bell`.
//!
//! Objects are opaque heap handles created by `qb_*_new`-style functions and
//! released with the matching `qb_*_free`. Every fallible call returns a
//! [`QbStatus`]; on failure a message is available from
//! [`qb_last_error_message`] on the same thread. Panics never cross the
//! boundary; they are reported as [`QbStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use qudit_bell::bounds::{hlnhv_bound, lhv_bound, Bipartition, EnumerationOptions};
use qudit_bell::optimize::{cglmp_max_closed_form, critical_visibility, max_violation, prescribed_angles};
use qudit_bell::quantum::{noisy_ghz_table, PhaseConfiguration};
use qudit_bell::scenario::{bell_value, cglmp_value, correlation_q};
use qudit_bell::{BellScenario, Error, JointProbabilityTable, SettingString};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QbStatus {
    Ok = 0,
    InvalidArgument = 1,
    /// Enumeration budget or size limit exceeded.
    BudgetExceeded = 2,
    NullPointer = 3,
    /// Malformed JSON or text input.
    Parse = 4,
    Panic = 5,
}

/// A `(N, d)` scenario.
pub struct QbScenario(BellScenario);

/// A joint probability table.
pub struct QbTable(JointProbabilityTable);

/// Phase-shifter settings for every party.
pub struct QbPhases(PhaseConfiguration);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Fail(QbStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::BudgetExceeded { .. } | Error::TooLarge { .. } => QbStatus::BudgetExceeded,
            Error::Json(_) => QbStatus::Parse,
            _ => QbStatus::InvalidArgument,
        };
        Fail(status, e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(QbStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> QbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => QbStatus::Ok,
        Ok(Err(Fail(status, message))) => {
            set_error(message);
            status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {message}"));
            QbStatus::Panic
        }
    }
}

unsafe fn get<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut T, value: T, what: &str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

unsafe fn text<'a>(s: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if s.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(s).to_str().map_err(|e| Fail(QbStatus::Parse, format!("{what}: {e}")))
}

unsafe fn free<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Message of the last failed call on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn qb_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn qb_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn qb_scenario_new(
    n_parties: usize,
    dimension: usize,
    out: *mut *mut QbScenario,
) -> QbStatus {
    guard(|| {
        let s = BellScenario::new(n_parties, dimension)?;
        put(out, Box::into_raw(Box::new(QbScenario(s))), "out")
    })
}

/// # Safety
/// `scenario` must be NULL or a handle from [`qb_scenario_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qb_scenario_free(scenario: *mut QbScenario) {
    free(scenario)
}

/// Prescribed optimal phases for `scenario`.
///
/// # Safety
/// `scenario` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn qb_phases_prescribed(
    scenario: *const QbScenario,
    out: *mut *mut QbPhases,
) -> QbStatus {
    guard(|| {
        let s = get(scenario, "scenario")?;
        put(out, Box::into_raw(Box::new(QbPhases(prescribed_angles(&s.0)))), "out")
    })
}

/// All-zero phases.
///
/// # Safety
/// `scenario` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn qb_phases_zero(scenario: *const QbScenario, out: *mut *mut QbPhases) -> QbStatus {
    guard(|| {
        let s = get(scenario, "scenario")?;
        put(out, Box::into_raw(Box::new(QbPhases(PhaseConfiguration::zeros(s.0)))), "out")
    })
}

/// Sets the `len` phases of zero-based `party` for `setting` (1 or 2).
///
/// # Safety
/// `phases` must be a live handle and `values` must point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn qb_phases_set(
    phases: *mut QbPhases,
    party: usize,
    setting: u8,
    values: *const f64,
    len: usize,
) -> QbStatus {
    guard(|| {
        let p = phases.as_mut().ok_or_else(|| null("phases"))?;
        if values.is_null() {
            return Err(null("values"));
        }
        let v = std::slice::from_raw_parts(values, len).to_vec();
        p.0.set_phase(party, setting, v)?;
        Ok(())
    })
}

/// # Safety
/// `phases` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qb_phases_free(phases: *mut QbPhases) {
    free(phases)
}

/// Joint probabilities of `V |GHZ><GHZ| + (1 - V) 1/d^N` measured with
/// `phases`.
///
/// # Safety
/// `phases` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn qb_table_ghz(
    phases: *const QbPhases,
    visibility: f64,
    out: *mut *mut QbTable,
) -> QbStatus {
    guard(|| {
        let p = get(phases, "phases")?;
        let t = noisy_ghz_table(&p.0, visibility)?;
        put(out, Box::into_raw(Box::new(QbTable(t))), "out")
    })
}

/// Parses a probability table from JSON.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn qb_table_from_json(json: *const c_char, out: *mut *mut QbTable) -> QbStatus {
    guard(|| {
        let t = JointProbabilityTable::from_json(text(json, "json")?)?;
        put(out, Box::into_raw(Box::new(QbTable(t))), "out")
    })
}

/// Serializes a table; release the string with [`qb_string_free`].
///
/// # Safety
/// `table` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn qb_table_to_json(table: *const QbTable, out: *mut *mut c_char) -> QbStatus {
    guard(|| {
        let t = get(table, "table")?;
        let json = CString::new(t.0.to_json()?).map_err(|e| Fail(QbStatus::Parse, e.to_string()))?;
        put(out, json.into_raw(), "out")
    })
}

/// # Safety
/// `table` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qb_table_free(table: *mut QbTable) {
    free(table)
}

/// # Safety
/// `s` must be NULL or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qb_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `table` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn qb_bell_value(table: *const QbTable, out: *mut f64) -> QbStatus {
    guard(|| {
        let t = get(table, "table")?;
        put(out, bell_value(&t.0), "out")
    })
}

/// Correlation `Q` for a setting string such as `"121"`.
///
/// # Safety
/// `table` must be a live handle, `setting` NUL-terminated, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qb_correlation(
    table: *const QbTable,
    setting: *const c_char,
    out: *mut f64,
) -> QbStatus {
    guard(|| {
        let t = get(table, "table")?;
        let s: SettingString =
            text(setting, "setting")?.parse().map_err(|e: Error| Fail(QbStatus::Parse, e.to_string()))?;
        put(out, correlation_q(&s, &t.0)?, "out")
    })
}

/// Two-party CGLMP value; fails unless the table has two parties.
///
/// # Safety
/// `table` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn qb_cglmp_value(table: *const QbTable, out: *mut f64) -> QbStatus {
    guard(|| {
        let t = get(table, "table")?;
        put(out, cglmp_value(&t.0)?, "out")
    })
}

/// Exhaustive hybrid bound for `partition` (e.g. `"1,2/3"`), as the exact
/// fraction `numerator / denominator`. `budget` of 0 selects the default.
///
/// # Safety
/// `scenario` must be a live handle, `partition` NUL-terminated, and the
/// three output pointers valid for writes.
#[no_mangle]
pub unsafe extern "C" fn qb_hlnhv_bound(
    scenario: *const QbScenario,
    partition: *const c_char,
    budget: u64,
    numerator: *mut i64,
    denominator: *mut i64,
    enumerated: *mut u64,
) -> QbStatus {
    guard(|| {
        let s = get(scenario, "scenario")?;
        let p = Bipartition::parse(text(partition, "partition")?, s.0.n_parties())
            .map_err(|e| Fail(QbStatus::Parse, e.to_string()))?;
        if numerator.is_null() || denominator.is_null() || enumerated.is_null() {
            return Err(null("output"));
        }
        let r = hlnhv_bound(&s.0, &p, options(budget))?;
        put(numerator, *r.value.numer(), "numerator")?;
        put(denominator, *r.value.denom(), "denominator")?;
        put(enumerated, r.strategies_enumerated, "enumerated")
    })
}

/// Exhaustive fully local bound; see [`qb_hlnhv_bound`].
///
/// # Safety
/// `scenario` must be a live handle and the output pointers valid for writes.
#[no_mangle]
pub unsafe extern "C" fn qb_lhv_bound(
    scenario: *const QbScenario,
    budget: u64,
    numerator: *mut i64,
    denominator: *mut i64,
    enumerated: *mut u64,
) -> QbStatus {
    guard(|| {
        let s = get(scenario, "scenario")?;
        if numerator.is_null() || denominator.is_null() || enumerated.is_null() {
            return Err(null("output"));
        }
        let r = lhv_bound(&s.0, options(budget))?;
        put(numerator, *r.value.numer(), "numerator")?;
        put(denominator, *r.value.denom(), "denominator")?;
        put(enumerated, r.strategies_enumerated, "enumerated")
    })
}

fn options(budget: u64) -> EnumerationOptions {
    if budget == 0 {
        EnumerationOptions::default()
    } else {
        EnumerationOptions { budget }
    }
}

/// Closed-form maximal GHZ value.
///
/// # Safety
/// `scenario` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn qb_max_violation(scenario: *const QbScenario, out: *mut f64) -> QbStatus {
    guard(|| {
        let s = get(scenario, "scenario")?;
        put(out, max_violation(&s.0), "out")
    })
}

/// Critical visibility `2^{N-1} / max`.
///
/// # Safety
/// `scenario` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn qb_critical_visibility(scenario: *const QbScenario, out: *mut f64) -> QbStatus {
    guard(|| {
        let s = get(scenario, "scenario")?;
        put(out, critical_visibility(&s.0).critical_visibility, "out")
    })
}

/// Two-party maximum for dimension `d`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn qb_cglmp_max(dimension: usize, out: *mut f64) -> QbStatus {
    guard(|| put(out, cglmp_max_closed_form(dimension)?, "out"))
}
