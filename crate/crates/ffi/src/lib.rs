//! C interface to `harmony-core`.
//!
//! Objects cross the boundary as opaque handles created by `harmony_*_new`,
//! `*_decode`, `*_parse` or `*_load` functions and released with the
//! matching `*_free`. Every fallible call returns a [`HarmonyStatus`]; on
//! failure [`harmony_last_error`] describes the most recent error on the
//! calling thread. Panics never unwind into C: they are reported as
//! `HARMONY_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use harmony_core::harmonizer::{Checkpoint, HarmonizerModel};
use harmony_core::image::{self as img, ImageF32, Mask, Rect};
use harmony_core::lut::{self, Lut3d};
use harmony_core::metrics::MetricsReport;
use harmony_core::pipeline::{self, HarmonizeOptions};
use harmony_core::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HarmonyStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Decode = 3,
    Parse = 4,
    Dimension = 5,
    Io = 6,
    Numeric = 7,
    Checkpoint = 8,
    Fit = 9,
    Internal = 10,
    Panic = 11,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HarmonyFormat {
    Png = 0,
    /// Binary or ASCII PNM (P2, P3, P5, P6); encoding writes P6 / P5.
    Pnm = 1,
}

impl From<HarmonyFormat> for img::ImageFormat {
    fn from(f: HarmonyFormat) -> Self {
        match f {
            HarmonyFormat::Png => img::ImageFormat::Png,
            HarmonyFormat::Pnm => img::ImageFormat::Ppm,
        }
    }
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HarmonyRect {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
}

impl From<HarmonyRect> for Rect {
    fn from(r: HarmonyRect) -> Self {
        Rect::new(r.x, r.y, r.w, r.h)
    }
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HarmonyOptions {
    /// Non-zero: use a background crop around the placement as reference.
    pub locality: u8,
    /// Reference crop scale, at least 1.
    pub expand: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct HarmonyMetrics {
    pub mse: f64,
    /// `INFINITY` for identical images.
    pub psnr: f64,
    pub ssim: f64,
}

/// Byte buffer owned by the library; release with [`harmony_buffer_free`].
#[repr(C)]
#[derive(Debug)]
pub struct HarmonyBuffer {
    pub data: *mut u8,
    pub len: usize,
}

pub struct HarmonyImage(ImageF32);
pub struct HarmonyMask(Mask);
pub struct HarmonyLut(Lut3d);
pub struct HarmonyModel(HarmonizerModel);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> HarmonyStatus {
    match e {
        Error::Decode { .. } => HarmonyStatus::Decode,
        Error::CubeParse { .. } | Error::Json(_) => HarmonyStatus::Parse,
        Error::Bounds { .. } | Error::DimensionMismatch(_) => HarmonyStatus::Dimension,
        Error::InvalidArgument(_) | Error::Config(_) => HarmonyStatus::InvalidArgument,
        Error::Io { .. } => HarmonyStatus::Io,
        Error::Numeric { .. } => HarmonyStatus::Numeric,
        Error::Checkpoint(_) => HarmonyStatus::Checkpoint,
        Error::Fit(_) => HarmonyStatus::Fit,
        _ => HarmonyStatus::Internal,
    }
}

enum Failure {
    Null(&'static str),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> HarmonyStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => HarmonyStatus::Ok,
        Ok(Err(Failure::Null(what))) => {
            set_last_error(format!("null pointer: {what}"));
            HarmonyStatus::NullPointer
        }
        Ok(Err(Failure::Core(e))) => {
            set_last_error(e.to_string());
            status_of(&e)
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("internal panic: {msg}"));
            HarmonyStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &'static str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn c_str<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Error::InvalidArgument(format!("{what} is not valid UTF-8")).into())
}

unsafe fn emit<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::Null("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn release<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Message for the last failed call on this thread, or NULL if none.
/// Valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn harmony_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn harmony_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Image from `width * height * 3` interleaved RGB floats in `[0, 1]`.
///
/// # Safety
/// `data` must point to `len` readable floats; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn harmony_image_new(
    width: usize,
    height: usize,
    data: *const f32,
    len: usize,
    out: *mut *mut HarmonyImage,
) -> HarmonyStatus {
    guard(|| {
        let data = slice(data, len, "data")?.to_vec();
        emit(out, HarmonyImage(ImageF32::new(width, height, data)?))
    })
}

/// # Safety
/// `bytes` must point to `len` readable bytes; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn harmony_image_decode(
    bytes: *const u8,
    len: usize,
    format: HarmonyFormat,
    out: *mut *mut HarmonyImage,
) -> HarmonyStatus {
    guard(|| {
        let bytes = slice(bytes, len, "bytes")?;
        emit(out, HarmonyImage(img::decode_image(bytes, format.into())?))
    })
}

/// Encodes to 8-bit PNG or PNM. Free the buffer with [`harmony_buffer_free`].
///
/// # Safety
/// `image` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn harmony_image_encode(
    image: *const HarmonyImage,
    format: HarmonyFormat,
    out: *mut HarmonyBuffer,
) -> HarmonyStatus {
    guard(|| {
        let image = deref(image, "image")?;
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let bytes = img::encode_image(&image.0, format.into())?.into_boxed_slice();
        let len = bytes.len();
        *out = HarmonyBuffer {
            data: Box::into_raw(bytes).cast(),
            len,
        };
        Ok(())
    })
}

/// # Safety
/// `buffer` must come from this library or be zeroed; it is reset to empty.
#[no_mangle]
pub unsafe extern "C" fn harmony_buffer_free(buffer: *mut HarmonyBuffer) {
    if let Some(b) = buffer.as_mut() {
        if !b.data.is_null() {
            drop(Box::from_raw(ptr::slice_from_raw_parts_mut(b.data, b.len)));
        }
        b.data = ptr::null_mut();
        b.len = 0;
    }
}

/// Width in pixels, or 0 for NULL.
///
/// # Safety
/// `image` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn harmony_image_width(image: *const HarmonyImage) -> usize {
    image.as_ref().map_or(0, |i| i.0.width())
}

/// Height in pixels, or 0 for NULL.
///
/// # Safety
/// `image` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn harmony_image_height(image: *const HarmonyImage) -> usize {
    image.as_ref().map_or(0, |i| i.0.height())
}

/// Copies the interleaved RGB samples into `dst`, which must hold exactly
/// `width * height * 3` floats.
///
/// # Safety
/// `image` must be a live handle; `dst` must point to `len` writable floats.
#[no_mangle]
pub unsafe extern "C" fn harmony_image_read(image: *const HarmonyImage, dst: *mut f32, len: usize) -> HarmonyStatus {
    guard(|| {
        let src = deref(image, "image")?.0.data();
        if len != src.len() {
            return Err(Error::DimensionMismatch(format!("buffer holds {len} floats, image has {}", src.len())).into());
        }
        if dst.is_null() {
            return Err(Failure::Null("dst"));
        }
        std::slice::from_raw_parts_mut(dst, len).copy_from_slice(src);
        Ok(())
    })
}

/// # Safety
/// `image` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn harmony_image_free(image: *mut HarmonyImage) {
    release(image)
}

/// Soft mask from `width * height` alphas in `[0, 1]`.
///
/// # Safety
/// `data` must point to `len` readable floats; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn harmony_mask_new(
    width: usize,
    height: usize,
    data: *const f32,
    len: usize,
    out: *mut *mut HarmonyMask,
) -> HarmonyStatus {
    guard(|| {
        let data = slice(data, len, "data")?.to_vec();
        emit(out, HarmonyMask(Mask::new(width, height, data)?))
    })
}

/// # Safety
/// `mask` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn harmony_mask_free(mask: *mut HarmonyMask) {
    release(mask)
}

/// Parses `.cube` text. Parse failures return `HARMONY_STATUS_PARSE` and
/// the error message names the offending line.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn harmony_lut_parse(text: *const c_char, out: *mut *mut HarmonyLut) -> HarmonyStatus {
    guard(|| {
        let text = c_str(text, "text")?;
        emit(out, HarmonyLut(lut::parse_cube(text)?))
    })
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn harmony_lut_identity(size: usize, out: *mut *mut HarmonyLut) -> HarmonyStatus {
    guard(|| emit(out, HarmonyLut(lut::identity_lut(size)?)))
}

/// Lattice points per axis, or 0 for NULL.
///
/// # Safety
/// `lut` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn harmony_lut_size(lut: *const HarmonyLut) -> usize {
    lut.as_ref().map_or(0, |l| l.0.size())
}

/// Trilinear lookup of one color.
///
/// # Safety
/// `lut` must be a live handle; `rgb_in` and `rgb_out` must point to 3 floats.
#[no_mangle]
pub unsafe extern "C" fn harmony_lut_apply_color(
    lut: *const HarmonyLut,
    rgb_in: *const f32,
    rgb_out: *mut f32,
) -> HarmonyStatus {
    guard(|| {
        let lut = deref(lut, "lut")?;
        let c = slice(rgb_in, 3, "rgb_in")?;
        if rgb_out.is_null() {
            return Err(Failure::Null("rgb_out"));
        }
        let y = lut::apply_lut(&lut.0, [c[0], c[1], c[2]]);
        std::slice::from_raw_parts_mut(rgb_out, 3).copy_from_slice(&y);
        Ok(())
    })
}

/// # Safety
/// `lut` and `image` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn harmony_lut_apply(
    lut: *const HarmonyLut,
    image: *const HarmonyImage,
    out: *mut *mut HarmonyImage,
) -> HarmonyStatus {
    guard(|| {
        let lut = deref(lut, "lut")?;
        let image = deref(image, "image")?;
        emit(out, HarmonyImage(lut::apply_lut_image(&lut.0, &image.0)))
    })
}

/// # Safety
/// `lut` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn harmony_lut_free(lut: *mut HarmonyLut) {
    release(lut)
}

/// Loads a JSON checkpoint from a file path.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn harmony_model_load(path: *const c_char, out: *mut *mut HarmonyModel) -> HarmonyStatus {
    guard(|| {
        let path = c_str(path, "path")?;
        emit(out, HarmonyModel(Checkpoint::load(Path::new(path))?.model()?))
    })
}

/// Untrained model; it leaves every foreground unchanged.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn harmony_model_init(seed: u64, out: *mut *mut HarmonyModel) -> HarmonyStatus {
    guard(|| emit(out, HarmonyModel(HarmonizerModel::init(seed))))
}

/// # Safety
/// `model` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn harmony_model_free(model: *mut HarmonyModel) {
    release(model)
}

/// Harmonizes `fg` and blends it into `bg` at `placement` through `mask`.
///
/// # Safety
/// All handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn harmony_harmonize_composite(
    model: *const HarmonyModel,
    fg: *const HarmonyImage,
    bg: *const HarmonyImage,
    mask: *const HarmonyMask,
    placement: HarmonyRect,
    options: HarmonyOptions,
    out: *mut *mut HarmonyImage,
) -> HarmonyStatus {
    guard(|| {
        let opts = HarmonizeOptions {
            locality: options.locality != 0,
            expand: options.expand,
        };
        let result = pipeline::harmonize_composite(
            &deref(model, "model")?.0,
            &deref(fg, "fg")?.0,
            &deref(bg, "bg")?.0,
            &deref(mask, "mask")?.0,
            placement.into(),
            &opts,
        )?;
        emit(out, HarmonyImage(result))
    })
}

/// Direct composite without harmonization.
///
/// # Safety
/// All handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn harmony_composite(
    fg: *const HarmonyImage,
    bg: *const HarmonyImage,
    mask: *const HarmonyMask,
    placement: HarmonyRect,
    out: *mut *mut HarmonyImage,
) -> HarmonyStatus {
    guard(|| {
        let result = img::composite(
            &deref(fg, "fg")?.0,
            &deref(bg, "bg")?.0,
            &deref(mask, "mask")?.0,
            placement.into(),
        )?;
        emit(out, HarmonyImage(result))
    })
}

/// MSE and PSNR on the 0-255 scale and SSIM of `image` against `reference`.
///
/// # Safety
/// Both handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn harmony_metrics(
    image: *const HarmonyImage,
    reference: *const HarmonyImage,
    out: *mut HarmonyMetrics,
) -> HarmonyStatus {
    guard(|| {
        let r = MetricsReport::compute(&deref(image, "image")?.0, &deref(reference, "reference")?.0)?;
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        *out = HarmonyMetrics {
            mse: r.mse,
            psnr: r.psnr,
            ssim: r.ssim,
        };
        Ok(())
    })
}
