//! C ABI over `parkwise-core`.
//!
//! Every function returns a [`PwStatus`] and writes results through out
//! pointers. On failure, [`pw_last_error_message`] describes the most recent
//! error on the calling thread. Strings returned by the library must be
//! released with [`pw_string_free`]; engines with [`pw_engine_free`].
//!
//! The header `include/parkwise.h` is generated by the build script.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use parkwise_core::occupancy::{OccupancyError, OccupancyState, Registry, TrackerConfig};
use parkwise_core::perception::{BBox, DetectionEvent};
use parkwise_core::recommender::{recommend, RecommendError, RecommendationRequest};
use parkwise_core::GeoPoint;

/// Result code of every `pw_*` call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PwStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidArgument = 2,
    Parse = 3,
    RegistryMiss = 4,
    UnknownCamera = 5,
    StaleFrame = 6,
    NoAvailability = 7,
    Internal = 8,
}

/// Opaque tracker instance.
pub struct PwEngine {
    state: OccupancyState,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(CString::new(msg).expect("nul bytes removed")));
}

struct Fail(PwStatus, String);

impl Fail {
    fn new(status: PwStatus, msg: impl std::fmt::Display) -> Self {
        Fail(status, msg.to_string())
    }
}

impl From<OccupancyError> for Fail {
    fn from(e: OccupancyError) -> Self {
        let status = match e {
            OccupancyError::RegistryMiss(_) => PwStatus::RegistryMiss,
            OccupancyError::UnknownCamera { .. } => PwStatus::UnknownCamera,
            OccupancyError::StaleFrame { .. } => PwStatus::StaleFrame,
        };
        Fail::new(status, e)
    }
}

impl From<RecommendError> for Fail {
    fn from(e: RecommendError) -> Self {
        let status = match e {
            RecommendError::NoAvailability => PwStatus::NoAvailability,
            _ => PwStatus::InvalidArgument,
        };
        Fail::new(status, e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> PwStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PwStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            PwStatus::Internal
        }
    }
}

unsafe fn out_ref<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| Fail::new(PwStatus::NullArgument, format!("{name} is null")))
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail::new(PwStatus::NullArgument, format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail::new(PwStatus::InvalidArgument, format!("{name} is not UTF-8")))
}

unsafe fn engine_ref<'a>(p: *const PwEngine) -> Result<&'a PwEngine, Fail> {
    p.as_ref().ok_or_else(|| Fail::new(PwStatus::NullArgument, "engine is null"))
}

unsafe fn engine_mut<'a>(p: *mut PwEngine) -> Result<&'a mut PwEngine, Fail> {
    p.as_mut().ok_or_else(|| Fail::new(PwStatus::NullArgument, "engine is null"))
}

fn point(lat: f64, lon: f64) -> Result<GeoPoint, Fail> {
    GeoPoint::new(lat, lon).map_err(|e| Fail::new(PwStatus::InvalidArgument, e))
}

fn give_string(s: String, out: &mut *mut c_char) -> Result<(), Fail> {
    *out = CString::new(s).map_err(|e| Fail::new(PwStatus::Internal, e))?.into_raw();
    Ok(())
}

/// Great-circle distance in km between two WGS-84 points in degrees.
///
/// # Safety
/// `out_km` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn pw_haversine_km(lat_a: f64, lon_a: f64, lat_b: f64, lon_b: f64, out_km: *mut f64) -> PwStatus {
    guard(|| {
        let out = out_ref(out_km, "out_km")?;
        *out = parkwise_core::haversine_km(point(lat_a, lon_a)?, point(lat_b, lon_b)?);
        Ok(())
    })
}

/// Intersection over union of two `[x_min, y_min, x_max, y_max]` boxes.
///
/// # Safety
/// `a` and `b` must be null or point to 4 readable doubles; `out_iou` must
/// be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn pw_iou(a: *const f64, b: *const f64, out_iou: *mut f64) -> PwStatus {
    guard(|| {
        let out = out_ref(out_iou, "out_iou")?;
        let read = |p: *const f64, name: &str| -> Result<BBox, Fail> {
            if p.is_null() {
                return Err(Fail::new(PwStatus::NullArgument, format!("{name} is null")));
            }
            let v = std::slice::from_raw_parts(p, 4);
            BBox::new(v[0], v[1], v[2], v[3]).map_err(|e| Fail::new(PwStatus::InvalidArgument, e))
        };
        *out = parkwise_core::iou(&read(a, "a")?, &read(b, "b")?);
        Ok(())
    })
}

/// `alpha * distance_km + (1 - alpha) / spots`.
///
/// # Safety
/// `out_value` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn pw_objective(distance_km: f64, spots: u32, alpha: f64, out_value: *mut f64) -> PwStatus {
    guard(|| {
        let out = out_ref(out_value, "out_value")?;
        *out = parkwise_core::objective(distance_km, spots, alpha)?;
        Ok(())
    })
}

/// Creates a tracker for a registry given as a JSON array of lots.
/// `config_json` may be null for the default tracker configuration.
///
/// # Safety
/// String arguments must be null or NUL-terminated; `out_engine` must be
/// null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn pw_engine_new(registry_json: *const c_char, config_json: *const c_char, out_engine: *mut *mut PwEngine) -> PwStatus {
    guard(|| {
        let out = out_ref(out_engine, "out_engine")?;
        *out = ptr::null_mut();
        let registry = Registry::from_json(str_arg(registry_json, "registry_json")?).map_err(|e| Fail::new(PwStatus::Parse, e))?;
        let config = if config_json.is_null() {
            TrackerConfig::default()
        } else {
            serde_json::from_str(str_arg(config_json, "config_json")?).map_err(|e| Fail::new(PwStatus::Parse, e))?
        };
        let state = OccupancyState::new(registry, config).map_err(|e| Fail::new(PwStatus::InvalidArgument, e))?;
        *out = Box::into_raw(Box::new(PwEngine { state }));
        Ok(())
    })
}

/// Releases an engine. Null is ignored.
///
/// # Safety
/// `engine` must be null or a pointer from [`pw_engine_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pw_engine_free(engine: *mut PwEngine) {
    if !engine.is_null() {
        drop(Box::from_raw(engine));
    }
}

/// Applies one wire-format detection event. On error the engine is unchanged.
///
/// # Safety
/// `engine` must come from [`pw_engine_new`]; `event_json` must be null or
/// NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn pw_engine_apply_event(engine: *mut PwEngine, event_json: *const c_char) -> PwStatus {
    guard(|| {
        let engine = engine_mut(engine)?;
        let event = DetectionEvent::from_wire(str_arg(event_json, "event_json")?).map_err(|e| Fail::new(PwStatus::Parse, e))?;
        engine.state.apply_event(&event)?;
        Ok(())
    })
}

/// Current free-spot count for one lot.
///
/// # Safety
/// `engine` must come from [`pw_engine_new`]; `lot_id` must be null or
/// NUL-terminated; `out_spots` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn pw_engine_available_spots(engine: *const PwEngine, lot_id: *const c_char, out_spots: *mut u32) -> PwStatus {
    guard(|| {
        let engine = engine_ref(engine)?;
        let out = out_ref(out_spots, "out_spots")?;
        *out = engine.state.available_spots(str_arg(lot_id, "lot_id")?)?;
        Ok(())
    })
}

/// Takes a snapshot and returns its canonical JSON.
///
/// # Safety
/// `engine` must come from [`pw_engine_new`]; `out_json` must be null or
/// valid for writes. Free the result with [`pw_string_free`].
#[no_mangle]
pub unsafe extern "C" fn pw_engine_snapshot_json(engine: *mut PwEngine, out_json: *mut *mut c_char) -> PwStatus {
    guard(|| {
        let engine = engine_mut(engine)?;
        let out = out_ref(out_json, "out_json")?;
        *out = ptr::null_mut();
        give_string(engine.state.snapshot().canonical_json(), out)
    })
}

/// Ranks lots for a driver at (`lat`, `lon`) against a fresh snapshot.
/// `top_k` of 0 returns every lot with free spots. The result is the JSON
/// ranking, best first.
///
/// # Safety
/// `engine` must come from [`pw_engine_new`]; `out_json` must be null or
/// valid for writes. Free the result with [`pw_string_free`].
#[no_mangle]
pub unsafe extern "C" fn pw_engine_recommend_json(
    engine: *mut PwEngine,
    lat: f64,
    lon: f64,
    alpha: f64,
    top_k: usize,
    out_json: *mut *mut c_char,
) -> PwStatus {
    guard(|| {
        let engine = engine_mut(engine)?;
        let out = out_ref(out_json, "out_json")?;
        *out = ptr::null_mut();
        let request = RecommendationRequest::new(point(lat, lon)?, alpha, std::num::NonZeroUsize::new(top_k))?;
        let snapshot = engine.state.snapshot();
        let ranking = recommend(&snapshot, engine.state.registry().lots(), &request)?;
        give_string(serde_json::to_string(&ranking).map_err(|e| Fail::new(PwStatus::Internal, e))?, out)
    })
}

/// Message for the last failed call on this thread, or null. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn pw_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must be null or a string from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pw_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
