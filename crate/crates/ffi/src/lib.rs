//! C ABI over the jamlab library.
//!
//! Objects cross the boundary as opaque handles that the caller releases
//! with the matching `*_free` function. Every fallible call returns a
//! [`JamlabStatus`]; on failure a message is kept per thread and read back
//! with [`jamlab_last_error`]. Panics never unwind into C.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use jamlab::cli::SimulateSection;
use jamlab::detector::{load_model, DetectorModel};
use jamlab::raster::{normalize, FeatureGrid, NormStats, RasterProfile};
use jamlab::synth::{gen_ofdm, mix, JammerSpec, SampleBuffer, SlotMask};
use jamlab::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JamlabStatus {
    Ok = 0,
    NullArgument = 1,
    /// Parameter, configuration or buffer alignment rejected.
    InvalidArgument = 2,
    Io = 3,
    /// Bad magic, version, layout or JSON.
    Format = 4,
    Integrity = 5,
    /// Data that does not fit the model or operation.
    Input = 6,
    Training = 7,
    Checkpoint = 8,
    BufferTooSmall = 9,
    Panic = 10,
}

pub const JAMLAB_PROFILE_CANONICAL: u32 = 0;
pub const JAMLAB_PROFILE_REDUCED: u32 = 1;

/// Complex baseband samples.
pub struct JamlabBuffer(SampleBuffer);

/// Channel-major feature grid.
pub struct JamlabGrid(FeatureGrid);

/// Trained detector.
pub struct JamlabModel(DetectorModel<f32>);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

enum Fail {
    Null(&'static str),
    Arg(String),
    Small { need: usize, have: usize },
    Lib(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

impl Fail {
    fn status(&self) -> JamlabStatus {
        match self {
            Fail::Null(_) => JamlabStatus::NullArgument,
            Fail::Arg(_) => JamlabStatus::InvalidArgument,
            Fail::Small { .. } => JamlabStatus::BufferTooSmall,
            Fail::Lib(e) => match e {
                Error::Config(_)
                | Error::Alignment(_)
                | Error::Crop { .. }
                | Error::Stats(_)
                | Error::Contract(_) => JamlabStatus::InvalidArgument,
                Error::Input(_) | Error::Architecture { .. } => JamlabStatus::Input,
                Error::Integrity { .. } => JamlabStatus::Integrity,
                Error::Training { .. } => JamlabStatus::Training,
                Error::Checkpoint(_) => JamlabStatus::Checkpoint,
                Error::Format(_) | Error::Json(_) => JamlabStatus::Format,
                Error::Io { .. } => JamlabStatus::Io,
            },
        }
    }

    fn message(&self) -> String {
        match self {
            Fail::Null(name) => format!("{name} is null"),
            Fail::Arg(m) => m.clone(),
            Fail::Small { need, have } => format!("destination holds {have} values, {need} needed"),
            Fail::Lib(e) => e.to_string(),
        }
    }
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> JamlabStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => JamlabStatus::Ok,
        Ok(Err(fail)) => {
            set_error(fail.message());
            fail.status()
        }
        Err(_) => {
            set_error("internal panic".into());
            JamlabStatus::Panic
        }
    }
}

unsafe fn as_ref<'a, T>(p: *const T, name: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(name))
}

unsafe fn as_str<'a>(p: *const c_char, name: &'static str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail::Null(name));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Fail::Arg(format!("{name} is not valid UTF-8")))
}

unsafe fn as_path(p: *const c_char, name: &'static str) -> Result<PathBuf, Fail> {
    as_str(p, name).map(PathBuf::from)
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail::Null("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn copy_out(src: &[f32], dst: *mut f32, capacity: usize, written: *mut usize) -> Result<(), Fail> {
    if dst.is_null() {
        return Err(Fail::Null("dst"));
    }
    if capacity < src.len() {
        return Err(Fail::Small { need: src.len(), have: capacity });
    }
    ptr::copy_nonoverlapping(src.as_ptr(), dst, src.len());
    if !written.is_null() {
        *written = src.len();
    }
    Ok(())
}

unsafe fn free<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn jamlab_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL. The pointer
/// stays valid until the next jamlab call on the same thread.
#[no_mangle]
pub extern "C" fn jamlab_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Renders a jammer described as JSON, e.g.
/// `{"kind":"single_tone","power_j":1,"freq_hz":1000,"phase_rad":0}`.
///
/// # Safety
/// `spec_json` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn jamlab_jammer_generate(
    spec_json: *const c_char,
    sample_rate_hz: f64,
    duration_s: f64,
    seed: u64,
    out: *mut *mut JamlabBuffer,
) -> JamlabStatus {
    guard(|| {
        let spec: JammerSpec = serde_json::from_str(as_str(spec_json, "spec_json")?).map_err(Error::from)?;
        put(out, JamlabBuffer(spec.generate(sample_rate_hz, duration_s, seed)?))
    })
}

/// Random QPSK-OFDM traffic with the default numerology, unit mean power.
///
/// # Safety
/// `out` must be a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn jamlab_ofdm_generate(
    sample_rate_hz: f64,
    duration_s: f64,
    seed: u64,
    out: *mut *mut JamlabBuffer,
) -> JamlabStatus {
    guard(|| put(out, JamlabBuffer(gen_ofdm(&Default::default(), sample_rate_hz, duration_s, seed)?)))
}

/// `signal + g * jammer + noise` with the jammer active over the whole
/// buffer. `jammer` may be NULL for a clean mix.
///
/// # Safety
/// Handles must be live or NULL; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn jamlab_mix(
    signal: *const JamlabBuffer,
    jammer: *const JamlabBuffer,
    jsr_db: f64,
    snr_db: f64,
    seed: u64,
    out: *mut *mut JamlabBuffer,
) -> JamlabStatus {
    guard(|| {
        let s = &as_ref(signal, "signal")?.0;
        let j = jammer.as_ref().map(|j| &j.0);
        let mask = SlotMask::all_active(s, s.duration_s())?;
        put(out, JamlabBuffer(mix(s, j, jsr_db, snr_db, &mask, seed)?))
    })
}

/// # Safety
/// `path` must be NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn jamlab_buffer_load(path: *const c_char, out: *mut *mut JamlabBuffer) -> JamlabStatus {
    guard(|| put(out, JamlabBuffer(SampleBuffer::load(&as_path(path, "path")?)?)))
}

/// # Safety
/// `buffer` must be live; `path` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn jamlab_buffer_save(buffer: *const JamlabBuffer, path: *const c_char) -> JamlabStatus {
    guard(|| Ok(as_ref(buffer, "buffer")?.0.save(&as_path(path, "path")?)?))
}

/// Sample count; 0 for NULL.
///
/// # Safety
/// `buffer` must be live or NULL.
#[no_mangle]
pub unsafe extern "C" fn jamlab_buffer_len(buffer: *const JamlabBuffer) -> usize {
    buffer.as_ref().map_or(0, |b| b.0.len())
}

/// # Safety
/// `buffer` must be live or NULL.
#[no_mangle]
pub unsafe extern "C" fn jamlab_buffer_sample_rate(buffer: *const JamlabBuffer) -> f64 {
    buffer.as_ref().map_or(0.0, |b| b.0.sample_rate_hz)
}

/// # Safety
/// `buffer` must be live or NULL.
#[no_mangle]
pub unsafe extern "C" fn jamlab_buffer_mean_power(buffer: *const JamlabBuffer) -> f64 {
    buffer.as_ref().map_or(0.0, |b| b.0.mean_power())
}

/// Copies interleaved I/Q into `dst`, which must hold `2 * len` floats.
///
/// # Safety
/// `dst` must point to `capacity` writable floats; `written` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn jamlab_buffer_copy_iq(
    buffer: *const JamlabBuffer,
    dst: *mut f32,
    capacity: usize,
    written: *mut usize,
) -> JamlabStatus {
    guard(|| {
        let b = &as_ref(buffer, "buffer")?.0;
        let iq: Vec<f32> = b.samples.iter().flat_map(|s| [s.re as f32, s.im as f32]).collect();
        copy_out(&iq, dst, capacity, written)
    })
}

/// # Safety
/// `buffer` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn jamlab_buffer_free(buffer: *mut JamlabBuffer) {
    free(buffer)
}

/// Rasterizes a waveform with `JAMLAB_PROFILE_CANONICAL` or
/// `JAMLAB_PROFILE_REDUCED` geometry. The grid is raw (not normalized).
///
/// # Safety
/// `buffer` must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn jamlab_grid_render(
    buffer: *const JamlabBuffer,
    profile: u32,
    out: *mut *mut JamlabGrid,
) -> JamlabStatus {
    guard(|| {
        let profile = match profile {
            JAMLAB_PROFILE_CANONICAL => RasterProfile::CANONICAL,
            JAMLAB_PROFILE_REDUCED => RasterProfile::REDUCED,
            other => return Err(Fail::Arg(format!("unknown raster profile {other}"))),
        };
        put(out, JamlabGrid(profile.render(&as_ref(buffer, "buffer")?.0)?))
    })
}

/// Standardizes each channel with the given mean and standard deviation.
///
/// # Safety
/// `mean` and `std` must each point to `channels` doubles.
#[no_mangle]
pub unsafe extern "C" fn jamlab_grid_normalize(
    grid: *const JamlabGrid,
    mean: *const f64,
    std: *const f64,
    channels: usize,
    out: *mut *mut JamlabGrid,
) -> JamlabStatus {
    guard(|| {
        let g = &as_ref(grid, "grid")?.0;
        as_ref(mean, "mean")?;
        as_ref(std, "std")?;
        let mean = std::slice::from_raw_parts(mean, channels).to_vec();
        let std = std::slice::from_raw_parts(std, channels).to_vec();
        put(out, JamlabGrid(normalize(g, &NormStats::new(mean, std)?)?))
    })
}

/// # Safety
/// `path` must be NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn jamlab_grid_load(path: *const c_char, out: *mut *mut JamlabGrid) -> JamlabStatus {
    guard(|| put(out, JamlabGrid(FeatureGrid::load(&as_path(path, "path")?)?)))
}

/// # Safety
/// `grid` must be live; `path` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn jamlab_grid_save(grid: *const JamlabGrid, path: *const c_char) -> JamlabStatus {
    guard(|| Ok(as_ref(grid, "grid")?.0.save(&as_path(path, "path")?)?))
}

/// # Safety
/// `grid` must be live; the three outputs writable.
#[no_mangle]
pub unsafe extern "C" fn jamlab_grid_dims(
    grid: *const JamlabGrid,
    channels: *mut usize,
    height: *mut usize,
    width: *mut usize,
) -> JamlabStatus {
    guard(|| {
        let g = &as_ref(grid, "grid")?.0;
        if channels.is_null() || height.is_null() || width.is_null() {
            return Err(Fail::Null("dimension output"));
        }
        (*channels, *height, *width) = g.dims();
        Ok(())
    })
}

/// Copies the `C * H * W` values, channel-major.
///
/// # Safety
/// `dst` must point to `capacity` writable floats; `written` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn jamlab_grid_copy(
    grid: *const JamlabGrid,
    dst: *mut f32,
    capacity: usize,
    written: *mut usize,
) -> JamlabStatus {
    guard(|| copy_out(&as_ref(grid, "grid")?.0.values, dst, capacity, written))
}

/// # Safety
/// `grid` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn jamlab_grid_free(grid: *mut JamlabGrid) {
    free(grid)
}

/// Loads a JNET checkpoint.
///
/// # Safety
/// `path` must be NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn jamlab_model_load(path: *const c_char, out: *mut *mut JamlabModel) -> JamlabStatus {
    guard(|| put(out, JamlabModel(load_model(&as_path(path, "path")?)?)))
}

/// Jammed probability of one normalized grid.
///
/// # Safety
/// Handles must be live; `probability` writable.
#[no_mangle]
pub unsafe extern "C" fn jamlab_model_predict(
    model: *const JamlabModel,
    grid: *const JamlabGrid,
    probability: *mut f64,
) -> JamlabStatus {
    guard(|| {
        let m = &as_ref(model, "model")?.0;
        let g = &as_ref(grid, "grid")?.0;
        if probability.is_null() {
            return Err(Fail::Null("probability"));
        }
        *probability = m.predict(g)?;
        Ok(())
    })
}

/// # Safety
/// `model` must be live or NULL.
#[no_mangle]
pub unsafe extern "C" fn jamlab_model_param_count(model: *const JamlabModel) -> usize {
    model.as_ref().map_or(0, |m| m.0.params().len())
}

/// # Safety
/// `model` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn jamlab_model_free(model: *mut JamlabModel) {
    free(model)
}

/// Runs a hopping simulation described as JSON (fields `plan`, `jammer`,
/// `policy`, `n_slots`, `predictor`, ...; all optional) and returns the
/// summary as a JSON string to release with [`jamlab_string_free`].
///
/// # Safety
/// `config_json` must be NUL-terminated; `summary_json` writable.
#[no_mangle]
pub unsafe extern "C" fn jamlab_simulate(
    config_json: *const c_char,
    seed: u64,
    summary_json: *mut *mut c_char,
) -> JamlabStatus {
    guard(|| {
        let cfg: SimulateSection = serde_json::from_str(as_str(config_json, "config_json")?).map_err(Error::from)?;
        if summary_json.is_null() {
            return Err(Fail::Null("summary_json"));
        }
        let text = cfg.run(seed)?.summary_json()?;
        *summary_json = CString::new(text).map_err(|e| Fail::Arg(e.to_string()))?.into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn jamlab_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
