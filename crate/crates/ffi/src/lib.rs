//! C ABI for `souq`.
//!
//! Distributions are passed as opaque [`SouqSecondOrder`] handles created by
//! [`souq_second_order_new`] and released with [`souq_second_order_free`].
//! Every fallible function returns a [`SouqStatus`]; on failure a message is
//! available from [`souq_last_error_message`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::slice;

use souq::eval::{auroc, Cohort, ScoredInstance};
use souq::measures::{measure, Family, UncertaintyTriple};
use souq::simplex::{EmpiricalSecondOrder, ProbVector};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SouqStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidDistribution = 3,
    MeasureFailed = 4,
    BufferTooSmall = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SouqFamily {
    GlobalEntropy = 0,
    LabelEntropy = 1,
    Variance = 2,
}

impl From<SouqFamily> for Family {
    fn from(f: SouqFamily) -> Self {
        match f {
            SouqFamily::GlobalEntropy => Family::GlobalEntropy,
            SouqFamily::LabelEntropy => Family::LabelEntropy,
            SouqFamily::Variance => Family::Variance,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SouqTriple {
    pub total: f64,
    pub aleatoric: f64,
    pub epistemic: f64,
}

impl From<UncertaintyTriple> for SouqTriple {
    fn from(t: UncertaintyTriple) -> Self {
        Self {
            total: t.total,
            aleatoric: t.aleatoric,
            epistemic: t.epistemic,
        }
    }
}

/// Opaque second-order distribution.
pub struct SouqSecondOrder {
    inner: EmpiricalSecondOrder,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).expect("nul bytes removed"));
}

fn fail(status: SouqStatus, msg: impl Into<String>) -> SouqStatus {
    set_error(msg);
    status
}

fn guard(f: impl FnOnce() -> SouqStatus) -> SouqStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => {
            if status == SouqStatus::Ok {
                set_error("");
            }
            status
        }
        Err(_) => fail(SouqStatus::Panic, "internal panic"),
    }
}

/// Message describing the last failed call on this thread, or an empty
/// string. Valid until the next `souq_*` call on the same thread.
#[no_mangle]
pub extern "C" fn souq_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn souq_version() -> *const c_char {
    static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(v) => v,
        Err(_) => panic!("version contains a nul byte"),
    };
    VERSION.as_ptr()
}

/// Builds a distribution from `num_atoms` row-major probability vectors of
/// length `num_classes`. `weights` may be NULL for uniform weights.
///
/// # Safety
/// `atoms` must point to `num_atoms * num_classes` doubles, `weights` to
/// `num_atoms` doubles or be NULL, and `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn souq_second_order_new(
    atoms: *const f64,
    num_atoms: usize,
    num_classes: usize,
    weights: *const f64,
    out: *mut *mut SouqSecondOrder,
) -> SouqStatus {
    guard(|| {
        if atoms.is_null() || out.is_null() {
            return fail(SouqStatus::NullPointer, "atoms and out must not be NULL");
        }
        if num_atoms == 0 || num_classes < 2 {
            return fail(SouqStatus::InvalidArgument, "need at least one atom and two classes");
        }
        let Some(len) = num_atoms.checked_mul(num_classes) else {
            return fail(SouqStatus::InvalidArgument, "atom buffer size overflows");
        };
        // SAFETY: caller guarantees the buffer length.
        let data = unsafe { slice::from_raw_parts(atoms, len) };
        let rows: Result<Vec<ProbVector>, _> = data.chunks(num_classes).map(ProbVector::new).collect();
        let rows = match rows {
            Ok(rows) => rows,
            Err(e) => return fail(SouqStatus::InvalidDistribution, e.to_string()),
        };
        let q = if weights.is_null() {
            EmpiricalSecondOrder::uniform(rows)
        } else {
            // SAFETY: caller guarantees `num_atoms` weights.
            let w = unsafe { slice::from_raw_parts(weights, num_atoms) };
            EmpiricalSecondOrder::new(rows, w.to_vec())
        };
        match q {
            Ok(inner) => {
                // SAFETY: `out` checked non-null above.
                unsafe { *out = Box::into_raw(Box::new(SouqSecondOrder { inner })) };
                SouqStatus::Ok
            }
            Err(e) => fail(SouqStatus::InvalidDistribution, e.to_string()),
        }
    })
}

/// Releases a handle. NULL is ignored.
///
/// # Safety
/// `q` must come from [`souq_second_order_new`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn souq_second_order_free(q: *mut SouqSecondOrder) {
    if !q.is_null() {
        // SAFETY: ownership returns from the caller.
        drop(unsafe { Box::from_raw(q) });
    }
}

/// Number of classes, or 0 for NULL.
///
/// # Safety
/// `q` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn souq_second_order_num_classes(q: *const SouqSecondOrder) -> usize {
    // SAFETY: caller guarantees validity.
    unsafe { q.as_ref() }.map_or(0, |q| q.inner.num_classes())
}

/// Number of atoms, or 0 for NULL.
///
/// # Safety
/// `q` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn souq_second_order_num_atoms(q: *const SouqSecondOrder) -> usize {
    // SAFETY: caller guarantees validity.
    unsafe { q.as_ref() }.map_or(0, |q| q.inner.num_atoms())
}

/// Computes the global triple and, for label-wise families, the per-label
/// triples. `per_label` may be NULL; otherwise it must hold `per_label_len`
/// entries with `per_label_len >= num_classes` for label-wise families.
///
/// # Safety
/// `q` must be a live handle, `global` a valid pointer, and `per_label`
/// NULL or valid for `per_label_len` writes.
#[no_mangle]
pub unsafe extern "C" fn souq_measure(
    q: *const SouqSecondOrder,
    family: SouqFamily,
    global: *mut SouqTriple,
    per_label: *mut SouqTriple,
    per_label_len: usize,
) -> SouqStatus {
    guard(|| {
        // SAFETY: caller guarantees validity.
        let (Some(q), false) = (unsafe { q.as_ref() }, global.is_null()) else {
            return fail(SouqStatus::NullPointer, "q and global must not be NULL");
        };
        let report = match measure(&q.inner, family.into()) {
            Ok(r) => r,
            Err(e) => return fail(SouqStatus::MeasureFailed, e.to_string()),
        };
        if !per_label.is_null() && !report.per_label.is_empty() {
            if per_label_len < report.per_label.len() {
                return fail(
                    SouqStatus::BufferTooSmall,
                    format!("per_label needs {} entries", report.per_label.len()),
                );
            }
            // SAFETY: length checked above.
            let dst = unsafe { slice::from_raw_parts_mut(per_label, report.per_label.len()) };
            for (d, t) in dst.iter_mut().zip(&report.per_label) {
                *d = (*t).into();
            }
        }
        // SAFETY: checked non-null.
        unsafe { *global = report.global.into() };
        SouqStatus::Ok
    })
}

/// AUROC with the out-of-distribution scores as the positive class; ties
/// count one half.
///
/// # Safety
/// `id_scores` and `ood_scores` must hold `n_id` and `n_ood` doubles, and
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn souq_auroc(
    id_scores: *const f64,
    n_id: usize,
    ood_scores: *const f64,
    n_ood: usize,
    out: *mut f64,
) -> SouqStatus {
    guard(|| {
        if id_scores.is_null() || ood_scores.is_null() || out.is_null() {
            return fail(SouqStatus::NullPointer, "score buffers and out must not be NULL");
        }
        // SAFETY: caller guarantees the lengths.
        let (id, ood) = unsafe {
            (
                slice::from_raw_parts(id_scores, n_id),
                slice::from_raw_parts(ood_scores, n_ood),
            )
        };
        let items: Vec<ScoredInstance> = id
            .iter()
            .map(|&s| (s, Cohort::InDistribution))
            .chain(ood.iter().map(|&s| (s, Cohort::OutOfDistribution)))
            .enumerate()
            .map(|(i, (s, c))| ScoredInstance::new(i.to_string(), s, 0).with_cohort(c))
            .collect();
        match auroc(&items) {
            Ok(a) => {
                // SAFETY: checked non-null.
                unsafe { *out = a };
                SouqStatus::Ok
            }
            Err(e) => fail(SouqStatus::InvalidArgument, e.to_string()),
        }
    })
}
