//! C ABI over [`simlearn::Session`].
//!
//! Sessions are opaque handles created by `simlearn_session_open` and
//! released with `simlearn_session_free`. Every fallible call returns a
//! [`SimlearnStatus`]; on failure `simlearn_last_error_message` describes
//! the error for the calling thread. Results that carry structure are
//! returned as JSON strings owned by the caller and released with
//! `simlearn_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use simlearn::{Error, LabelSource, Session, SessionConfig, Side};

/// Opaque session handle.
pub struct SimlearnSession {
    inner: Session,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimlearnStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Io = 3,
    InvalidData = 4,
    UnknownInstance = 5,
    SelfPair = 6,
    ScoreOutOfRange = 7,
    InvalidArgument = 8,
    Internal = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimlearnSide {
    Left = 0,
    Right = 1,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(err: &Error) -> SimlearnStatus {
    match err {
        Error::Io { .. } => SimlearnStatus::Io,
        Error::UnknownInstance(_) => SimlearnStatus::UnknownInstance,
        Error::SelfPair(_) => SimlearnStatus::SelfPair,
        Error::ScoreOutOfRange(_) => SimlearnStatus::ScoreOutOfRange,
        Error::InvalidArgument(_) => SimlearnStatus::InvalidArgument,
        Error::SchemaParse(_)
        | Error::DuplicateAttribute(_)
        | Error::DuplicateInstance(_)
        | Error::MissingId { .. }
        | Error::UnknownColumn { .. }
        | Error::KindMismatch { .. }
        | Error::Csv(_)
        | Error::DegenerateDataset(_)
        | Error::MalformedLog { .. } => SimlearnStatus::InvalidData,
        _ => SimlearnStatus::Internal,
    }
}

struct Failure(SimlearnStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

/// Runs `f`, recording any error or panic for `simlearn_last_error_message`.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SimlearnStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SimlearnStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            SimlearnStatus::Internal
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure(
            SimlearnStatus::NullArgument,
            format!("{what} is null"),
        ));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(SimlearnStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn session<'a>(s: *const SimlearnSession) -> Result<&'a SimlearnSession, Failure> {
    s.as_ref()
        .ok_or_else(|| Failure(SimlearnStatus::NullArgument, "session is null".into()))
}

unsafe fn put_json(out: *mut *mut c_char, value: &impl serde::Serialize) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure(
            SimlearnStatus::NullArgument,
            "output pointer is null".into(),
        ));
    }
    let json = serde_json::to_string(value)
        .map_err(|e| Failure(SimlearnStatus::Internal, e.to_string()))?;
    *out = CString::new(json)
        .expect("JSON has no nul bytes")
        .into_raw();
    Ok(())
}

fn k_arg(k: usize) -> Option<usize> {
    (k > 0).then_some(k)
}

/// Opens a session over a schema and records file. `labels_path` may be
/// null for an in-memory label log. On success `*out` owns a new handle.
///
/// # Safety
/// String arguments must be null or valid NUL-terminated strings and `out`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn simlearn_session_open(
    schema_path: *const c_char,
    records_path: *const c_char,
    labels_path: *const c_char,
    out: *mut *mut SimlearnSession,
) -> SimlearnStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure(SimlearnStatus::NullArgument, "out is null".into()));
        }
        *out = ptr::null_mut();
        let schema = text(schema_path, "schema_path")?;
        let records = text(records_path, "records_path")?;
        let labels = if labels_path.is_null() {
            None
        } else {
            Some(text(labels_path, "labels_path")?)
        };
        let inner = Session::open(
            Path::new(schema),
            Path::new(records),
            labels.map(Path::new),
            SessionConfig::default(),
        )?;
        *out = Box::into_raw(Box::new(SimlearnSession { inner }));
        Ok(())
    })
}

/// Releases a session. Null is ignored.
///
/// # Safety
/// `session` must be null or a handle from `simlearn_session_open` that
/// has not been freed.
#[no_mangle]
pub unsafe extern "C" fn simlearn_session_free(session: *mut SimlearnSession) {
    if !session.is_null() {
        drop(Box::from_raw(session));
    }
}

/// Number of instances after sparse-attribute filtering.
///
/// # Safety
/// `session` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn simlearn_session_instance_count(
    session: *const SimlearnSession,
    out: *mut usize,
) -> SimlearnStatus {
    guard(|| {
        let s = self::session(session)?;
        if out.is_null() {
            return Err(Failure(SimlearnStatus::NullArgument, "out is null".into()));
        }
        *out = s.inner.dataset().len();
        Ok(())
    })
}

/// Records a user label and retrains the model.
///
/// # Safety
/// `session` must be a live handle not used concurrently from another
/// thread; `a` and `b` must be valid strings.
#[no_mangle]
pub unsafe extern "C" fn simlearn_session_add_label(
    session: *mut SimlearnSession,
    a: *const c_char,
    b: *const c_char,
    score: f64,
) -> SimlearnStatus {
    guard(|| {
        let s = session
            .as_mut()
            .ok_or_else(|| Failure(SimlearnStatus::NullArgument, "session is null".into()))?;
        let (a, b) = (text(a, "a")?, text(b, "b")?);
        s.inner.add_label(a, b, score, LabelSource::User)?;
        Ok(())
    })
}

/// Current model snapshot as JSON.
///
/// # Safety
/// `session` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn simlearn_session_model_json(
    session: *const SimlearnSession,
    out: *mut *mut c_char,
) -> SimlearnStatus {
    guard(|| {
        let s = self::session(session)?;
        put_json(out, &s.inner.model().snapshot())
    })
}

/// Nearest neighbors of `query` as JSON; `k` of 0 uses the default.
///
/// # Safety
/// `session` must be a live handle, `query` a valid string and `out`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn simlearn_session_knn_json(
    session: *const SimlearnSession,
    query: *const c_char,
    k: usize,
    out: *mut *mut c_char,
) -> SimlearnStatus {
    guard(|| {
        let s = self::session(session)?;
        let result = s.inner.knn(text(query, "query")?, k_arg(k))?;
        put_json(out, &result)
    })
}

/// Suggested labeling partners for `anchor` as JSON; `k` of 0 uses the
/// default.
///
/// # Safety
/// `session` must be a live handle, `anchor` a valid string and `out`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn simlearn_session_suggest_json(
    session: *const SimlearnSession,
    anchor: *const c_char,
    side: SimlearnSide,
    k: usize,
    out: *mut *mut c_char,
) -> SimlearnStatus {
    guard(|| {
        let s = self::session(session)?;
        let side = match side {
            SimlearnSide::Left => Side::Left,
            SimlearnSide::Right => Side::Right,
        };
        let result = s.inner.suggest(text(anchor, "anchor")?, side, k_arg(k))?;
        put_json(out, &result)
    })
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn simlearn_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must be null or a string obtained from this library that has not
/// been freed.
#[no_mangle]
pub unsafe extern "C" fn simlearn_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
