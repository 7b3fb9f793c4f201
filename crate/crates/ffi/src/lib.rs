//! C ABI over the texlab library.
//!
//! Rasters and models are opaque handles created and freed through this
//! interface. Every fallible function returns a [`TexlabStatus`]; on failure
//! a message is available from [`texlab_last_error`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use texlab::classifier::SvmModel;
use texlab::features::{attribute_features, feature_length, Attribute, AttributeConfig};
use texlab::imagecore::patch::taper_full_patch;
use texlab::imagecore::{read_raster_auto, write_raster, RasterFormat};
use texlab::metrics::{aggregate_metrics, confusion_from_slices};
use texlab::{Raster, TexlabError};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TexlabStatus {
    Ok = 0,
    NullPointer = 1,
    Format = 2,
    Io = 3,
    Argument = 4,
    Training = 5,
    Config = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TexlabAttribute {
    Amplitude = 0,
    Pyramid = 1,
    Dwt = 2,
    Gabor = 3,
    Curvelet = 4,
}

impl From<TexlabAttribute> for Attribute {
    fn from(a: TexlabAttribute) -> Self {
        match a {
            TexlabAttribute::Amplitude => Attribute::Amplitude,
            TexlabAttribute::Pyramid => Attribute::Pyramid,
            TexlabAttribute::Dwt => Attribute::Dwt,
            TexlabAttribute::Gabor => Attribute::Gabor,
            TexlabAttribute::Curvelet => Attribute::Curvelet,
        }
    }
}

/// Scalar scores of one prediction/reference comparison.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TexlabMetrics {
    pub pixel_accuracy: f64,
    pub mean_iu: f64,
    pub frequency_weighted_iu: f64,
}

/// Opaque raster handle.
pub struct TexlabRaster(Raster);

/// Opaque model handle.
pub struct TexlabModel(SvmModel);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &TexlabError) -> TexlabStatus {
    match e {
        TexlabError::Format(_) => TexlabStatus::Format,
        TexlabError::Io { .. } => TexlabStatus::Io,
        TexlabError::Argument(_) => TexlabStatus::Argument,
        TexlabError::Training(_) => TexlabStatus::Training,
        TexlabError::Config(_) => TexlabStatus::Config,
    }
}

enum Failure {
    Lib(TexlabError),
    Null(&'static str),
    Small { needed: usize },
}

impl From<TexlabError> for Failure {
    fn from(e: TexlabError) -> Self {
        Failure::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> TexlabStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TexlabStatus::Ok,
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("null pointer passed for {what}"));
            TexlabStatus::NullPointer
        }
        Ok(Err(Failure::Small { needed })) => {
            set_error(format!("output buffer too small, {needed} entries needed"));
            TexlabStatus::BufferTooSmall
        }
        Err(_) => {
            set_error("internal panic".into());
            TexlabStatus::Panic
        }
    }
}

unsafe fn path_arg(p: *const c_char) -> Result<PathBuf, Failure> {
    if p.is_null() {
        return Err(Failure::Null("path"));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| TexlabError::Argument("path is not valid UTF-8".into()))?;
    Ok(PathBuf::from(s))
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, what: &'static str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(what))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

/// Message of the last failed call on this thread. The pointer stays valid
/// until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn texlab_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Creates a raster from `width * height` row-major values.
///
/// # Safety
/// `data` must point to `width * height` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn texlab_raster_new(
    width: usize,
    height: usize,
    data: *const f64,
    out: *mut *mut TexlabRaster,
) -> TexlabStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let n = width
            .checked_mul(height)
            .ok_or_else(|| TexlabError::Argument("raster size overflows".into()))?;
        let values = slice_arg(data, n, "data")?.to_vec();
        let r = Raster::new(width, height, values)?;
        *out = Box::into_raw(Box::new(TexlabRaster(r)));
        Ok(())
    })
}

/// Reads a `.pgm` or `.sgrd` file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn texlab_raster_read(path: *const c_char, out: *mut *mut TexlabRaster) -> TexlabStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let r = read_raster_auto(path_arg(path)?)?;
        *out = Box::into_raw(Box::new(TexlabRaster(r)));
        Ok(())
    })
}

/// Writes a raster; the format follows the extension.
///
/// # Safety
/// `raster` must come from this library; `path` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn texlab_raster_write(raster: *const TexlabRaster, path: *const c_char) -> TexlabStatus {
    guard(|| {
        let r = ref_arg(raster, "raster")?;
        let path = path_arg(path)?;
        let format = RasterFormat::from_path(&path)?;
        write_raster(&r.0, &path, format)?;
        Ok(())
    })
}

/// # Safety
/// `raster` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn texlab_raster_width(raster: *const TexlabRaster) -> usize {
    raster.as_ref().map_or(0, |r| r.0.width())
}

/// # Safety
/// `raster` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn texlab_raster_height(raster: *const TexlabRaster) -> usize {
    raster.as_ref().map_or(0, |r| r.0.height())
}

/// Copies the row-major values into `out`, which holds `len` doubles.
///
/// # Safety
/// `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn texlab_raster_copy_data(raster: *const TexlabRaster, out: *mut f64, len: usize) -> TexlabStatus {
    guard(|| {
        let r = ref_arg(raster, "raster")?;
        let data = r.0.data();
        if len < data.len() {
            return Err(Failure::Small { needed: data.len() });
        }
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        std::slice::from_raw_parts_mut(out, data.len()).copy_from_slice(data);
        Ok(())
    })
}

/// # Safety
/// `raster` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn texlab_raster_free(raster: *mut TexlabRaster) {
    if !raster.is_null() {
        drop(Box::from_raw(raster));
    }
}

/// Feature vector length for a square patch of side `side`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn texlab_feature_length(
    attribute: TexlabAttribute,
    scales: usize,
    side: usize,
    out: *mut usize,
) -> TexlabStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = feature_length(&AttributeConfig::new(attribute.into(), scales), side)?;
        Ok(())
    })
}

/// Tapers a square patch and writes its feature vector to `out`
/// (`capacity` doubles). `written` receives the length, also when the
/// buffer is too small.
///
/// # Safety
/// `out` must point to `capacity` writable doubles; `written` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn texlab_extract_features(
    patch: *const TexlabRaster,
    attribute: TexlabAttribute,
    scales: usize,
    out: *mut f64,
    capacity: usize,
    written: *mut usize,
) -> TexlabStatus {
    guard(|| {
        let p = ref_arg(patch, "patch")?;
        let written = out_arg(written, "written")?;
        let tapered = taper_full_patch(&p.0)?;
        let f = attribute_features(&tapered, &AttributeConfig::new(attribute.into(), scales))?;
        *written = f.len();
        if capacity < f.len() {
            return Err(Failure::Small { needed: f.len() });
        }
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        std::slice::from_raw_parts_mut(out, f.len()).copy_from_slice(&f.values);
        Ok(())
    })
}

/// Loads a model JSON written by `texlab train`.
///
/// # Safety
/// `path` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn texlab_model_load(path: *const c_char, out: *mut *mut TexlabModel) -> TexlabStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let m = SvmModel::load(path_arg(path)?)?;
        *out = Box::into_raw(Box::new(TexlabModel(m)));
        Ok(())
    })
}

/// # Safety
/// `model` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn texlab_model_feature_length(model: *const TexlabModel) -> usize {
    model.as_ref().map_or(0, |m| m.0.feature_len)
}

/// # Safety
/// `model` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn texlab_model_class_count(model: *const TexlabModel) -> usize {
    model.as_ref().map_or(0, |m| m.0.classes.len())
}

/// Predicts the class id of a feature vector. If `scores` is not null it
/// receives one score per model class (`scores_len` must cover them).
///
/// # Safety
/// `features` must point to `len` doubles; `class_id` must be writable;
/// `scores`, if not null, must point to `scores_len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn texlab_model_predict(
    model: *const TexlabModel,
    features: *const f64,
    len: usize,
    class_id: *mut usize,
    scores: *mut f64,
    scores_len: usize,
) -> TexlabStatus {
    guard(|| {
        let m = ref_arg(model, "model")?;
        let class_id = out_arg(class_id, "class_id")?;
        let x = slice_arg(features, len, "features")?;
        let p = m.0.predict(x)?;
        if !scores.is_null() {
            if scores_len < p.scores.len() {
                return Err(Failure::Small { needed: p.scores.len() });
            }
            std::slice::from_raw_parts_mut(scores, p.scores.len()).copy_from_slice(&p.scores);
        }
        *class_id = p.class_id;
        Ok(())
    })
}

/// # Safety
/// `model` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn texlab_model_free(model: *mut TexlabModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Scores `n` predicted labels against `n` reference labels. When `iu` is
/// not null it receives `n_classes` per-class values, NaN for classes absent
/// from both arrays.
///
/// # Safety
/// `pred` and `reference` must point to `n` values; `out` must be writable;
/// `iu`, if not null, must point to `n_classes` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn texlab_metrics(
    pred: *const u32,
    reference: *const u32,
    n: usize,
    n_classes: usize,
    out: *mut TexlabMetrics,
    iu: *mut f64,
) -> TexlabStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let p: Vec<usize> = slice_arg(pred, n, "pred")?.iter().map(|&v| v as usize).collect();
        let r: Vec<usize> = slice_arg(reference, n, "reference")?.iter().map(|&v| v as usize).collect();
        let report = aggregate_metrics(&confusion_from_slices(&p, &r, n_classes)?)?;
        *out = TexlabMetrics {
            pixel_accuracy: report.pa,
            mean_iu: report.miu,
            frequency_weighted_iu: report.fwiu,
        };
        if !iu.is_null() {
            let dst = std::slice::from_raw_parts_mut(iu, n_classes);
            for (d, v) in dst.iter_mut().zip(&report.iu) {
                *d = v.unwrap_or(f64::NAN);
            }
        }
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn status_mapping() {
        assert_eq!(status_of(&TexlabError::Config("x".into())), TexlabStatus::Config);
        assert_eq!(status_of(&TexlabError::Format("x".into())), TexlabStatus::Format);
    }

    #[test]
    fn panics_become_status() {
        let s = guard(|| panic!("boom"));
        assert_eq!(s, TexlabStatus::Panic);
        let msg = unsafe { CStr::from_ptr(texlab_last_error()) };
        assert_eq!(msg.to_str().unwrap(), "internal panic");
    }
}
