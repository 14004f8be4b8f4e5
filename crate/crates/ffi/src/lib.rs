//! C ABI over `eeg_homog`.
//!
//! Objects are opaque handles created by `eh_*_new`/`eh_*` constructors and
//! released with the matching `eh_*_free`. Every fallible call returns an
//! [`EhStatus`]; on failure the message is available from
//! [`eh_last_error`] on the same thread until the next failing call.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use eeg_homog::edge::{EdgeConfig, EdgeMode};
use eeg_homog::{EdgeMap, EegSample, EncodedImage, EnrichedTensor, Error, IcwmhConfig, Interpolation};

#[repr(i32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EhStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidConfig = 3,
    ShapeMismatch = 4,
    Format = 5,
    Io = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

#[repr(i32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EhInterpolation {
    Bilinear = 0,
    Nearest = 1,
}

#[repr(i32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EhEdgeMode {
    Canny = 0,
    AdaptiveMean = 1,
    AdaptiveGaussian = 2,
}

/// Edge detector settings. Thresholds are on the 0..255 scale; `mode` is an
/// `EhEdgeMode` value.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct EhEdgeConfig {
    pub mode: i32,
    pub blur_kernel: usize,
    pub canny_low: f64,
    pub canny_high: f64,
    pub adaptive_block: usize,
    pub adaptive_c: f64,
}

impl TryFrom<EhEdgeConfig> for EdgeConfig {
    type Error = Fail;

    fn try_from(c: EhEdgeConfig) -> Result<Self, Fail> {
        let mode = match c.mode {
            x if x == EhEdgeMode::Canny as i32 => EdgeMode::Canny,
            x if x == EhEdgeMode::AdaptiveMean as i32 => EdgeMode::AdaptiveMean,
            x if x == EhEdgeMode::AdaptiveGaussian as i32 => EdgeMode::AdaptiveGaussian,
            x => return Err(Fail(EhStatus::InvalidConfig, format!("unknown edge mode {x}"))),
        };
        Ok(EdgeConfig {
            mode,
            blur_kernel: c.blur_kernel,
            canny_low: c.canny_low,
            canny_high: c.canny_high,
            adaptive_block: c.adaptive_block,
            adaptive_c: c.adaptive_c,
        })
    }
}

/// Multichannel recording, `channels x length`.
pub struct EhSample(EegSample);
/// Single-plane image with values in [0, 1].
pub struct EhImage(EncodedImage);
/// Binary edge map.
pub struct EhEdgeMap(EdgeMap);
/// `[3, H, W]` tensor: encoded, edge, enriched.
pub struct EhTensor(EnrichedTensor);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> EhStatus {
    match e {
        Error::ShapeMismatch(_) | Error::DimensionMismatch { .. } | Error::ImageTooSmall { .. } => {
            EhStatus::ShapeMismatch
        }
        Error::Format { .. } => EhStatus::Format,
        Error::Io { .. } => EhStatus::Io,
        e if e.is_config_error() => EhStatus::InvalidConfig,
        _ => EhStatus::InvalidArgument,
    }
}

pub struct Fail(EhStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(EhStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> EhStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => EhStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside eeg_homog".into());
            EhStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn copy_out(src: &[f64], dst: *mut f64, len: usize) -> Result<(), Fail> {
    if len < src.len() {
        return Err(Fail(
            EhStatus::BufferTooSmall,
            format!("buffer holds {len} values, need {}", src.len()),
        ));
    }
    if dst.is_null() {
        return Err(null("buffer"));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), dst, src.len());
    Ok(())
}

unsafe fn free<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Message of the last failed call on this thread, or NULL. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn eh_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub extern "C" fn eh_edge_config_default() -> EhEdgeConfig {
    let d = EdgeConfig::default();
    EhEdgeConfig {
        mode: EhEdgeMode::Canny as i32,
        blur_kernel: d.blur_kernel,
        canny_low: d.canny_low,
        canny_high: d.canny_high,
        adaptive_block: d.adaptive_block,
        adaptive_c: d.adaptive_c,
    }
}

/// Copies `channels * length` channel-major values. `label < 0` means
/// unlabeled.
///
/// # Safety
/// `data` must point to `channels * length` readable doubles and `out` must
/// be writable.
#[no_mangle]
pub unsafe extern "C" fn eh_sample_new(
    channels: usize,
    length: usize,
    data: *const f64,
    label: i64,
    out: *mut *mut EhSample,
) -> EhStatus {
    guard(|| {
        let n = channels
            .checked_mul(length)
            .ok_or_else(|| Fail(EhStatus::InvalidArgument, "channels * length overflows".into()))?;
        let values = slice(data, n, "data")?.to_vec();
        let label = usize::try_from(label).ok();
        put(out, EhSample(EegSample::new(channels, length, values, label)?))
    })
}

/// Reads an EEGB or CSV recording.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn eh_sample_read(path: *const c_char, out: *mut *mut EhSample) -> EhStatus {
    guard(|| {
        if path.is_null() {
            return Err(null("path"));
        }
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| Fail(EhStatus::InvalidArgument, "path is not UTF-8".into()))?;
        put(out, EhSample(eeg_homog::formats::read_sample(Path::new(path))?))
    })
}

/// # Safety
/// `sample` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn eh_sample_channels(sample: *const EhSample) -> usize {
    sample.as_ref().map_or(0, |s| s.0.channels)
}

/// # Safety
/// `sample` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn eh_sample_length(sample: *const EhSample) -> usize {
    sample.as_ref().map_or(0, |s| s.0.length)
}

/// Label of the sample, or -1 when unlabeled (or `sample` is NULL).
///
/// # Safety
/// `sample` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn eh_sample_label(sample: *const EhSample) -> i64 {
    sample.as_ref().and_then(|s| s.0.label).map_or(-1, |l| l as i64)
}

/// # Safety
/// `sample` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn eh_sample_free(sample: *mut EhSample) {
    free(sample)
}

/// Mean square of one channel.
///
/// # Safety
/// `sample` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn eh_channel_power(sample: *const EhSample, channel: usize, out: *mut f64) -> EhStatus {
    guard(|| {
        let s = deref(sample, "sample")?;
        let p = eeg_homog::channel_power(&s.0, channel)?;
        *out.as_mut().ok_or_else(|| null("out"))? = p;
        Ok(())
    })
}

/// Homogenizes channel magnitudes and resizes to `height x width`.
/// `interpolation` is an `EhInterpolation` value.
///
/// # Safety
/// `sample` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn eh_icwmh(
    sample: *const EhSample,
    height: usize,
    width: usize,
    interpolation: i32,
    out: *mut *mut EhImage,
) -> EhStatus {
    guard(|| {
        let s = deref(sample, "sample")?;
        let cfg = IcwmhConfig {
            height,
            width,
            interpolation: match interpolation {
                x if x == EhInterpolation::Bilinear as i32 => Interpolation::Bilinear,
                x if x == EhInterpolation::Nearest as i32 => Interpolation::Nearest,
                x => return Err(Fail(EhStatus::InvalidConfig, format!("unknown interpolation {x}"))),
            },
        };
        put(out, EhImage(eeg_homog::icwmh(&s.0, &cfg)?))
    })
}

/// Wraps row-major pixels in [0, 1].
///
/// # Safety
/// `data` must point to `height * width` readable doubles and `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn eh_image_new(
    height: usize,
    width: usize,
    data: *const f64,
    out: *mut *mut EhImage,
) -> EhStatus {
    guard(|| {
        let n = height
            .checked_mul(width)
            .ok_or_else(|| Fail(EhStatus::InvalidArgument, "height * width overflows".into()))?;
        put(
            out,
            EhImage(EncodedImage::new(height, width, slice(data, n, "data")?.to_vec())?),
        )
    })
}

/// # Safety
/// `image` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn eh_image_height(image: *const EhImage) -> usize {
    image.as_ref().map_or(0, |i| i.0.height())
}

/// # Safety
/// `image` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn eh_image_width(image: *const EhImage) -> usize {
    image.as_ref().map_or(0, |i| i.0.width())
}

/// Copies the row-major pixels into `buf`, which must hold `height * width`.
///
/// # Safety
/// `buf` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn eh_image_copy(image: *const EhImage, buf: *mut f64, len: usize) -> EhStatus {
    guard(|| copy_out(deref(image, "image")?.0.as_slice(), buf, len))
}

/// # Safety
/// `image` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn eh_image_free(image: *mut EhImage) {
    free(image)
}

/// Runs the edge detector. A NULL `config` uses the defaults.
///
/// # Safety
/// `image` must be a live handle, `config` valid or NULL, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn eh_detect_edges(
    image: *const EhImage,
    config: *const EhEdgeConfig,
    out: *mut *mut EhEdgeMap,
) -> EhStatus {
    guard(|| {
        let img = deref(image, "image")?;
        let cfg = match config.as_ref() {
            Some(c) => EdgeConfig::try_from(*c)?,
            None => EdgeConfig::default(),
        };
        put(out, EhEdgeMap(eeg_homog::detect_edges(&img.0, &cfg)?))
    })
}

/// # Safety
/// `edges` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn eh_edge_map_count(edges: *const EhEdgeMap) -> usize {
    edges.as_ref().map_or(0, |e| e.0.count_nonzero())
}

/// # Safety
/// `buf` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn eh_edge_map_copy(edges: *const EhEdgeMap, buf: *mut f64, len: usize) -> EhStatus {
    guard(|| copy_out(deref(edges, "edges")?.0.as_slice(), buf, len))
}

/// # Safety
/// `edges` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn eh_edge_map_free(edges: *mut EhEdgeMap) {
    free(edges)
}

/// Stacks encoded, edge and enriched planes.
///
/// # Safety
/// Both inputs must be live handles and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn eh_assemble(
    image: *const EhImage,
    edges: *const EhEdgeMap,
    out: *mut *mut EhTensor,
) -> EhStatus {
    guard(|| {
        let img = deref(image, "image")?;
        let e = deref(edges, "edges")?;
        put(out, EhTensor(eeg_homog::assemble(&img.0, &e.0)?))
    })
}

/// Number of values in the tensor (`3 * H * W`).
///
/// # Safety
/// `tensor` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn eh_tensor_len(tensor: *const EhTensor) -> usize {
    tensor.as_ref().map_or(0, |t| t.0.as_slice().len())
}

/// Copies the layer-major values into `buf`.
///
/// # Safety
/// `buf` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn eh_tensor_copy(tensor: *const EhTensor, buf: *mut f64, len: usize) -> EhStatus {
    guard(|| copy_out(deref(tensor, "tensor")?.0.as_slice(), buf, len))
}

/// # Safety
/// `tensor` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn eh_tensor_free(tensor: *mut EhTensor) {
    free(tensor)
}

/// Softmax cross-entropy of `logits[0..n]` against `label`.
///
/// # Safety
/// `logits` must point to `n` readable doubles and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn eh_ce_loss(logits: *const f64, n: usize, label: usize, out: *mut f64) -> EhStatus {
    guard(|| {
        let loss = eeg_homog::ce_loss(slice(logits, n, "logits")?, label)?;
        *out.as_mut().ok_or_else(|| null("out"))? = loss;
        Ok(())
    })
}
