//! C ABI over the structsynth core.
//!
//! Documents are opaque handles. Every fallible call returns an [`SsStatus`];
//! on failure [`ss_last_error_message`] describes what went wrong on the
//! calling thread. Strings and byte buffers handed out by this library must be
//! released with [`ss_string_free`] and [`ss_bytes_free`].

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use structsynth::align::lexical_score;
use structsynth::assets::AssetResolver;
use structsynth::layout::{compute_layout, element_boxes, rasterize, Viewport};
use structsynth::markup::{extract_text, parse_bytes, serialize_document, AnnotatedDocument, Diagnostic};
use structsynth::quality::{lint, repair};
use structsynth::schema::{canonicalize_label, describe, Domain};

pub const SS_DOMAIN_SLIDE: u32 = 0;
pub const SS_DOMAIN_UI: u32 = 1;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SsStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    ParseFailed = 4,
    UnknownLabel = 5,
    RenderFailed = 6,
    Panic = 7,
}

/// A parsed document plus the diagnostics from parsing it.
pub struct SsDocument {
    doc: AnnotatedDocument,
    diagnostics: Vec<Diagnostic>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(SsStatus, String);

type Outcome<T> = Result<T, Failure>;

fn fail<T>(status: SsStatus, message: impl Into<String>) -> Outcome<T> {
    Err(Failure(status, message.into()))
}

fn set_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

/// Runs `body`, turning errors and panics into a status code.
fn guard(body: impl FnOnce() -> Outcome<()>) -> SsStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            SsStatus::Ok
        }
        Ok(Err(Failure(status, message))) => {
            set_error(&message);
            status
        }
        Err(_) => {
            set_error("internal panic");
            SsStatus::Panic
        }
    }
}

fn domain(raw: u32) -> Outcome<Domain> {
    match raw {
        SS_DOMAIN_SLIDE => Ok(Domain::Slide),
        SS_DOMAIN_UI => Ok(Domain::Ui),
        _ => fail(SsStatus::InvalidArgument, format!("unknown domain {raw}")),
    }
}

unsafe fn document<'a>(handle: *const SsDocument) -> Outcome<&'a SsDocument> {
    handle
        .as_ref()
        .map_or_else(|| fail(SsStatus::NullArgument, "document is null"), Ok)
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Outcome<&'a str> {
    if p.is_null() {
        return fail(SsStatus::NullArgument, format!("{what} is null"));
    }
    CStr::from_ptr(p)
        .to_str()
        .or_else(|_| fail(SsStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn out_ptr<'a, T>(p: *mut T, what: &str) -> Outcome<&'a mut T> {
    p.as_mut()
        .map_or_else(|| fail(SsStatus::NullArgument, format!("{what} is null")), Ok)
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).expect("NULs removed").into_raw()
}

/// Zero width and height select the domain's default viewport.
fn viewport(domain: Domain, width: u32, height: u32) -> Outcome<Viewport> {
    if width == 0 && height == 0 {
        return Ok(Viewport::for_domain(domain));
    }
    Viewport::new(width, height).or_else(|e| fail(SsStatus::InvalidArgument, e.to_string()))
}

fn to_json(value: &impl serde::Serialize) -> String {
    serde_json::to_string(value).expect("values serialize")
}

/// Parses `len` bytes of markup. Invalid UTF-8 is replaced, not rejected.
///
/// # Safety
/// `bytes` must point to `len` readable bytes; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ss_document_parse(
    bytes: *const u8,
    len: usize,
    domain_id: u32,
    out: *mut *mut SsDocument,
) -> SsStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = ptr::null_mut();
        if bytes.is_null() && len > 0 {
            return fail(SsStatus::NullArgument, "bytes is null");
        }
        let input = if len == 0 {
            &[][..]
        } else {
            std::slice::from_raw_parts(bytes, len)
        };
        let (doc, diagnostics) =
            parse_bytes(input, domain(domain_id)?).or_else(|e| fail(SsStatus::ParseFailed, e.to_string()))?;
        *out = Box::into_raw(Box::new(SsDocument { doc, diagnostics }));
        Ok(())
    })
}

/// # Safety
/// `doc` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ss_document_free(doc: *mut SsDocument) {
    if !doc.is_null() {
        drop(Box::from_raw(doc));
    }
}

/// Parse diagnostics as a JSON array.
///
/// # Safety
/// `doc` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ss_document_diagnostics_json(doc: *const SsDocument, out: *mut *mut c_char) -> SsStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = into_c_string(to_json(&document(doc)?.diagnostics));
        Ok(())
    })
}

/// Applies the repair heuristics, producing a new document. When `report` is
/// not null it receives the applied repairs as JSON lines.
///
/// # Safety
/// `doc` must be a live handle; `out` must be writable; `report` may be null.
#[no_mangle]
pub unsafe extern "C" fn ss_document_repair(
    doc: *const SsDocument,
    out: *mut *mut SsDocument,
    report: *mut *mut c_char,
) -> SsStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let d = document(doc)?;
        let (fixed, applied) = repair(&d.doc);
        *out = Box::into_raw(Box::new(SsDocument {
            doc: fixed,
            diagnostics: Vec::new(),
        }));
        if let Some(r) = report.as_mut() {
            *r = into_c_string(applied.to_json_lines());
        }
        Ok(())
    })
}

/// # Safety
/// `doc` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ss_document_serialize(doc: *const SsDocument, out: *mut *mut c_char) -> SsStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = into_c_string(serialize_document(&document(doc)?.doc));
        Ok(())
    })
}

/// # Safety
/// `doc` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ss_document_extract_text(doc: *const SsDocument, out: *mut *mut c_char) -> SsStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = into_c_string(extract_text(&document(doc)?.doc));
        Ok(())
    })
}

/// Labeled boxes as a JSON array. A 0x0 viewport means the domain default.
///
/// # Safety
/// `doc` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ss_document_boxes_json(
    doc: *const SsDocument,
    width: u32,
    height: u32,
    out: *mut *mut c_char,
) -> SsStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let d = &document(doc)?.doc;
        let vp = viewport(d.domain, width, height)?;
        let layout = compute_layout(d, vp);
        *out = into_c_string(to_json(&element_boxes(&layout, d, vp)));
        Ok(())
    })
}

/// Lint findings as a JSON array. A 0x0 viewport means the domain default.
///
/// # Safety
/// `doc` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ss_document_lint_json(
    doc: *const SsDocument,
    width: u32,
    height: u32,
    out: *mut *mut c_char,
) -> SsStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let d = &document(doc)?.doc;
        let layout = compute_layout(d, viewport(d.domain, width, height)?);
        *out = into_c_string(to_json(&lint(d, &layout, d.domain)));
        Ok(())
    })
}

/// Renders the document to PNG with offline placeholder assets.
///
/// # Safety
/// `doc` must be a live handle; `out` and `out_len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ss_document_render_png(
    doc: *const SsDocument,
    width: u32,
    height: u32,
    seed: u64,
    out: *mut *mut u8,
    out_len: *mut usize,
) -> SsStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let out_len = out_ptr(out_len, "out_len")?;
        let d = &document(doc)?.doc;
        let layout = compute_layout(d, viewport(d.domain, width, height)?);
        let resolver = AssetResolver::offline();
        let assets: BTreeMap<_, _> = d
            .placeholders
            .iter()
            .map(|p| (p.id(), resolver.resolve(p, seed)))
            .collect();
        let raster = rasterize(&layout, d, &assets, seed).or_else(|e| fail(SsStatus::RenderFailed, e.to_string()))?;
        let png = raster.to_png().into_boxed_slice();
        *out_len = png.len();
        *out = Box::into_raw(png).cast::<u8>();
        Ok(())
    })
}

/// Lexical alignment score in [0, 1].
///
/// # Safety
/// Both strings must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ss_lexical_score(
    doc_text: *const c_char,
    description: *const c_char,
    out: *mut f64,
) -> SsStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let score = lexical_score(text(doc_text, "doc_text")?, text(description, "description")?)
            .or_else(|e| fail(SsStatus::InvalidArgument, e.to_string()))?;
        *out = score.value;
        Ok(())
    })
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ss_schema_describe_json(out: *mut *mut c_char) -> SsStatus {
    guard(|| {
        *out_ptr(out, "out")? = into_c_string(describe().to_string());
        Ok(())
    })
}

/// Maps a raw label to its canonical class name.
///
/// # Safety
/// `raw` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ss_canonicalize_label(raw: *const c_char, domain_id: u32, out: *mut *mut c_char) -> SsStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = ptr::null_mut();
        let class = canonicalize_label(text(raw, "raw")?, domain(domain_id)?)
            .or_else(|e| fail(SsStatus::UnknownLabel, e.to_string()))?;
        *out = into_c_string(class.name.to_string());
        Ok(())
    })
}

/// # Safety
/// `s` must be null or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn ss_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `bytes` must be null or a buffer returned by this library with its length.
#[no_mangle]
pub unsafe extern "C" fn ss_bytes_free(bytes: *mut u8, len: usize) {
    if !bytes.is_null() {
        drop(Box::from_raw(ptr::slice_from_raw_parts_mut(bytes, len)));
    }
}

/// Message for the last failed call on this thread, or null. The pointer is
/// valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn ss_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}
