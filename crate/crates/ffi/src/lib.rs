//! C interface to the certification toolkit.
//!
//! Every function returns an [`NpcStatus`]; on failure the message of the
//! most recent error on the calling thread is available from
//! [`npc_last_error`]. Models are opaque handles released with
//! [`npc_model_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use npc_robust::exact::{certify, CertifyMode, CertifyOptions};
use npc_robust::{io, Domain, Error, Metric, PrototypeModel, ThreatNorm, ThreatSpec};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NpcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    /// The requested (metric, threat, domain) cell has no supported solver.
    Unsupported = 4,
    Io = 5,
    Parse = 6,
    Solver = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NpcMetric {
    L1 = 0,
    L2 = 1,
    Linf = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NpcThreat {
    L1 = 0,
    L2 = 1,
    Linf = 2,
    EmbeddedL2 = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NpcDomain {
    Unbounded = 0,
    UnitBox = 1,
    SphereProduct = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NpcMode {
    LowerBound = 0,
    Exact = 1,
}

/// Result of [`npc_certify`]. Absent values are NaN.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NpcCertificate {
    pub predicted: u32,
    pub correct: bool,
    pub lower_bound: f64,
    pub exact: f64,
    pub upper_bound: f64,
    pub shortcut_hit: bool,
    pub subproblems_solved: u32,
    pub wall_time: f64,
}

/// Opaque model handle.
pub struct NpcModel {
    inner: PrototypeModel,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> NpcStatus {
    match e {
        Error::DimensionMismatch { .. } => NpcStatus::DimensionMismatch,
        Error::UnsupportedCombination { .. } => NpcStatus::Unsupported,
        Error::Io { .. } => NpcStatus::Io,
        Error::Parse { .. } | Error::Json(_) | Error::Format(_) | Error::SchemaVersionMismatch(_) => NpcStatus::Parse,
        Error::IterationLimit { .. } | Error::Infeasible | Error::DegenerateBoundary => NpcStatus::Solver,
        _ => NpcStatus::InvalidArgument,
    }
}

/// Runs `f`, recording its error or panic for [`npc_last_error`].
fn guard(f: impl FnOnce() -> Result<(), (NpcStatus, String)>) -> NpcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => NpcStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            NpcStatus::Panic
        }
    }
}

fn lift(e: Error) -> (NpcStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (NpcStatus, String) {
    (NpcStatus::NullPointer, format!("{what} is null"))
}

/// # Safety
/// `ptr` must point to `len` readable values when non-null.
unsafe fn slice<'a, T>(ptr: *const T, len: usize, what: &str) -> Result<&'a [T], (NpcStatus, String)> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(ptr, len))
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn npc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Builds a model from `num_prototypes` row-major rows of length `dim`.
///
/// # Safety
/// `prototypes` must hold `num_prototypes * dim` doubles, `labels`
/// `num_prototypes` entries, and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn npc_model_new(
    dim: usize,
    num_classes: usize,
    num_prototypes: usize,
    prototypes: *const f64,
    labels: *const u32,
    metric: NpcMetric,
    domain: NpcDomain,
    out: *mut *mut NpcModel,
) -> NpcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let count = num_prototypes.checked_mul(dim).ok_or((NpcStatus::InvalidArgument, "size overflow".into()))?;
        let flat = slice(prototypes, count, "prototypes")?.to_vec();
        let labels = slice(labels, num_prototypes, "labels")?.iter().map(|&y| y as usize).collect();
        let metric = match metric {
            NpcMetric::L1 => Metric::L1,
            NpcMetric::L2 => Metric::L2,
            NpcMetric::Linf => Metric::Linf,
        };
        let domain = match domain {
            NpcDomain::Unbounded => Domain::Unbounded,
            NpcDomain::UnitBox => Domain::UnitBox,
            NpcDomain::SphereProduct => Domain::SphereProduct,
        };
        let inner = PrototypeModel::from_flat(dim, num_classes, flat, labels, metric, domain).map_err(lift)?;
        *out = Box::into_raw(Box::new(NpcModel { inner }));
        Ok(())
    })
}

/// Loads a JSON or NPC1 model file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn npc_model_load(path: *const c_char, out: *mut *mut NpcModel) -> NpcStatus {
    guard(|| {
        if path.is_null() {
            return Err(null("path"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| (NpcStatus::InvalidArgument, "path is not UTF-8".to_string()))?;
        let inner = io::load_model(Path::new(path)).map_err(lift)?;
        *out = Box::into_raw(Box::new(NpcModel { inner }));
        Ok(())
    })
}

/// Writes the model as JSON (or NPC1 for a `.npc` / `.bin` extension).
///
/// # Safety
/// `model` must come from this library; `path` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn npc_model_save(model: *const NpcModel, path: *const c_char) -> NpcStatus {
    guard(|| {
        let model = model.as_ref().ok_or_else(|| null("model"))?;
        if path.is_null() {
            return Err(null("path"));
        }
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| (NpcStatus::InvalidArgument, "path is not UTF-8".to_string()))?;
        io::save_model(&model.inner, Path::new(path)).map_err(lift)
    })
}

/// Releases a model. NULL is ignored.
///
/// # Safety
/// `model` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn npc_model_free(model: *mut NpcModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// # Safety
/// `model` must be a live handle or NULL (which yields 0).
#[no_mangle]
pub unsafe extern "C" fn npc_model_dim(model: *const NpcModel) -> usize {
    model.as_ref().map_or(0, |m| m.inner.dim())
}

/// # Safety
/// `model` must be a live handle or NULL (which yields 0).
#[no_mangle]
pub unsafe extern "C" fn npc_model_num_classes(model: *const NpcModel) -> usize {
    model.as_ref().map_or(0, |m| m.inner.num_classes())
}

/// Predicted class of `z`.
///
/// # Safety
/// `z` must hold `len` doubles; `out_class` must be writable.
#[no_mangle]
pub unsafe extern "C" fn npc_classify(model: *const NpcModel, z: *const f64, len: usize, out_class: *mut u32) -> NpcStatus {
    guard(|| {
        let model = model.as_ref().ok_or_else(|| null("model"))?;
        let z = slice(z, len, "z")?;
        if out_class.is_null() {
            return Err(null("out_class"));
        }
        let c = model.inner.classify(z).map_err(lift)?;
        *out_class = c.class as u32;
        Ok(())
    })
}

/// Certifies `z` with label `label` against the given threat.
///
/// # Safety
/// `z` must hold `len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn npc_certify(
    model: *const NpcModel,
    z: *const f64,
    len: usize,
    label: u32,
    threat: NpcThreat,
    domain: NpcDomain,
    mode: NpcMode,
    out: *mut NpcCertificate,
) -> NpcStatus {
    guard(|| {
        let model = model.as_ref().ok_or_else(|| null("model"))?;
        let z = slice(z, len, "z")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let q = match threat {
            NpcThreat::L1 => ThreatNorm::L1,
            NpcThreat::L2 => ThreatNorm::L2,
            NpcThreat::Linf => ThreatNorm::Linf,
            NpcThreat::EmbeddedL2 => ThreatNorm::EmbeddedL2,
        };
        let domain = match domain {
            NpcDomain::Unbounded => Domain::Unbounded,
            NpcDomain::UnitBox => Domain::UnitBox,
            NpcDomain::SphereProduct => Domain::SphereProduct,
        };
        let mode = match mode {
            NpcMode::LowerBound => CertifyMode::LowerBound,
            NpcMode::Exact => CertifyMode::Exact,
        };
        let cert = certify(
            &model.inner,
            z,
            label as usize,
            &ThreatSpec::new(q, domain),
            mode,
            &CertifyOptions::default(),
        )
        .map_err(lift)?;
        *out = NpcCertificate {
            predicted: cert.label_predicted as u32,
            correct: cert.correct,
            lower_bound: cert.lower_bound,
            exact: cert.exact.unwrap_or(f64::NAN),
            upper_bound: cert.upper_bound.unwrap_or(f64::NAN),
            shortcut_hit: cert.diagnostics.shortcut_hit,
            subproblems_solved: cert.diagnostics.subproblems_solved as u32,
            wall_time: cert.diagnostics.wall_time,
        };
        Ok(())
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn npc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
