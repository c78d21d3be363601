//! C ABI for the counterfactual-direction library.
//!
//! Conventions:
//! - Opaque handles (`CfdirWorld`, `CfdirDirectionSet`) are created and freed
//!   by paired functions; passing null where a handle is expected returns
//!   `CFDIR_STATUS_INVALID_ARGUMENT`.
//! - Every fallible call returns a [`CfdirStatus`]; on failure a human
//!   readable message is stored per thread and retrievable via
//!   [`cfdir_last_error_message`].
//! - Buffers are caller-allocated; functions taking `buf, cap` fail with
//!   `CFDIR_STATUS_BUFFER_TOO_SMALL` when `cap` is insufficient.
//!
//! The generated header lives at `include/cfdir.h`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};

use cfdir::cli::{RunConfig, World};
use cfdir::directions::{g_direction, h_directions, line_search, AlphaGrid, Direction};
use cfdir::error::Error;
use cfdir::numerics::{Rng, Vector};
use cfdir::proxy::{build_dataset, train_proxy, TrainConfig};
use cfdir::worldmodel::{DistanceMetric, Image, StochasticCode};

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(message: impl Into<String>) {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = message.into());
}

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum CfdirStatus {
    Ok = 0,
    InvalidArgument = 1,
    DimensionMismatch = 2,
    DegenerateDirection = 3,
    NoBaselineFound = 4,
    NotPositiveClass = 5,
    NonConvergence = 6,
    BufferTooSmall = 7,
    Internal = 8,
}

fn status_of(error: &Error) -> CfdirStatus {
    match error {
        Error::InvalidArgument(_) | Error::Config(_) | Error::Parse(_) => {
            CfdirStatus::InvalidArgument
        }
        Error::DimensionMismatch(_) => CfdirStatus::DimensionMismatch,
        Error::DegenerateDirection(_) => CfdirStatus::DegenerateDirection,
        Error::NoBaselineFound { .. } => CfdirStatus::NoBaselineFound,
        Error::SourceNotPositive(_) => CfdirStatus::NotPositiveClass,
        Error::NonConvergence { .. } => CfdirStatus::NonConvergence,
        _ => CfdirStatus::Internal,
    }
}

fn fail(error: &Error) -> CfdirStatus {
    set_error(error.to_string());
    status_of(error)
}

/// Runs a closure, converting panics into `CFDIR_STATUS_INTERNAL` instead of
/// unwinding across the ABI boundary.
fn guarded<F: FnOnce() -> CfdirStatus>(f: F) -> CfdirStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic");
            CfdirStatus::Internal
        }
    }
}

/// Opaque world handle: the synthetic generator/classifier pair plus the run
/// parameters they were configured with.
pub struct CfdirWorld {
    world: World,
    config: RunConfig,
}

/// Opaque set of discovered directions (the gradient direction first, then
/// Hessian directions by rank).
pub struct CfdirDirectionSet {
    directions: Vec<Direction>,
}

/// Proxy-training and direction-extraction parameters for
/// [`cfdir_discover`]. Zero-initialize and overwrite what you need, or call
/// [`cfdir_discover_params_default`].
#[repr(C)]
#[derive(Clone, Copy)]
pub struct CfdirDiscoverParams {
    /// Perturbation ball radius around the source latent.
    pub radius: f64,
    /// Ball samples per dataset (origin sample added on top).
    pub sample_count: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Fraction of samples held out for fit metrics, in (0, 0.5].
    pub holdout_fraction: f64,
    /// Trade-off weight between classifier score and distance.
    pub lambda: f64,
    /// Number of Hessian directions to extract (1..=latent_dim).
    pub h_count: usize,
    /// Distance metric: 0 mean-squared, 1 patch-stat.
    pub metric: u32,
    /// Seed for sampling and training.
    pub seed: u64,
}

/// Line-search outcome.
#[repr(C)]
#[derive(Clone, Copy)]
pub struct CfdirCfResult {
    pub alpha: f64,
    pub logit_before: f64,
    pub logit_after: f64,
    pub distance: f64,
    pub cf_loss: f64,
    pub flipped: bool,
}

fn metric_from(code: u32) -> Option<DistanceMetric> {
    match code {
        0 => Some(DistanceMetric::MeanSquared),
        1 => Some(DistanceMetric::PatchStat),
        _ => None,
    }
}

unsafe fn slice_arg<'a>(ptr: *const f64, len: usize) -> Option<&'a [f64]> {
    if ptr.is_null() {
        None
    } else {
        Some(std::slice::from_raw_parts(ptr, len))
    }
}

/// Copies the latest error message for this thread into `buf` (NUL
/// terminated, truncated to `cap`). Returns the full message length in
/// bytes, excluding the terminator.
///
/// # Safety
/// `buf` must point to `cap` writable bytes, or be null (then only the
/// required length is returned).
#[no_mangle]
pub unsafe extern "C" fn cfdir_last_error_message(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|slot| {
        let message = slot.borrow();
        let bytes = message.as_bytes();
        if !buf.is_null() && cap > 0 {
            let n = bytes.len().min(cap - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Creates a world from the built-in benchmark configuration.
#[no_mangle]
pub extern "C" fn cfdir_world_new_benchmark() -> *mut CfdirWorld {
    let config = RunConfig::benchmark();
    match World::synthetic(&config) {
        Ok(world) => Box::into_raw(Box::new(CfdirWorld { world, config })),
        Err(e) => {
            set_error(e.to_string());
            std::ptr::null_mut()
        }
    }
}

/// Creates a world from a full run-configuration JSON document (the same
/// schema the CLI consumes). Returns null on error.
///
/// # Safety
/// `config_json` must be a valid NUL-terminated UTF-8 string.
#[no_mangle]
pub unsafe extern "C" fn cfdir_world_new_from_config_json(
    config_json: *const c_char,
) -> *mut CfdirWorld {
    if config_json.is_null() {
        set_error("config_json is null");
        return std::ptr::null_mut();
    }
    let text = match CStr::from_ptr(config_json).to_str() {
        Ok(t) => t,
        Err(_) => {
            set_error("config_json is not valid UTF-8");
            return std::ptr::null_mut();
        }
    };
    let config: RunConfig = match cfdir::textio::from_json_str(text) {
        Ok(c) => c,
        Err(e) => {
            set_error(e.to_string());
            return std::ptr::null_mut();
        }
    };
    if let Err(e) = config.validate() {
        set_error(e.to_string());
        return std::ptr::null_mut();
    }
    match World::synthetic(&config) {
        Ok(world) => Box::into_raw(Box::new(CfdirWorld { world, config })),
        Err(e) => {
            set_error(e.to_string());
            std::ptr::null_mut()
        }
    }
}

/// Frees a world handle; null is a no-op.
///
/// # Safety
/// `world` must have come from a `cfdir_world_new_*` function and not have
/// been freed already.
#[no_mangle]
pub unsafe extern "C" fn cfdir_world_free(world: *mut CfdirWorld) {
    if !world.is_null() {
        drop(Box::from_raw(world));
    }
}

/// Latent width of the world's generator; 0 for a null handle.
///
/// # Safety
/// `world` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn cfdir_world_latent_dim(world: *const CfdirWorld) -> usize {
    if world.is_null() {
        return 0;
    }
    (*world).config.generator.latent_dim
}

/// Image dimensions of the world's generator.
///
/// # Safety
/// `world` must be a live handle or null; `width`/`height` must be writable
/// or null.
#[no_mangle]
pub unsafe extern "C" fn cfdir_world_image_size(
    world: *const CfdirWorld,
    width: *mut usize,
    height: *mut usize,
) -> CfdirStatus {
    if world.is_null() {
        set_error("world is null");
        return CfdirStatus::InvalidArgument;
    }
    if !width.is_null() {
        *width = (*world).config.generator.width;
    }
    if !height.is_null() {
        *height = (*world).config.generator.height;
    }
    CfdirStatus::Ok
}

/// Decodes a latent into `out_pixels` (row-major, `width * height` floats in
/// [0, 1]).
///
/// # Safety
/// `world` must be a live handle; `z_sem` must point to `z_len` doubles;
/// `out_pixels` must have room for `out_cap` floats.
#[no_mangle]
pub unsafe extern "C" fn cfdir_world_decode(
    world: *const CfdirWorld,
    z_sem: *const f64,
    z_len: usize,
    z_t_seed: u64,
    out_pixels: *mut f32,
    out_cap: usize,
) -> CfdirStatus {
    guarded(|| {
        let Some(world) = world.as_ref() else {
            set_error("world is null");
            return CfdirStatus::InvalidArgument;
        };
        let Some(z) = slice_arg(z_sem, z_len) else {
            set_error("z_sem is null");
            return CfdirStatus::InvalidArgument;
        };
        let z = match Vector::new(z.to_vec()) {
            Ok(z) => z,
            Err(e) => return fail(&e),
        };
        let image = match world
            .world
            .generator
            .decode(&z, StochasticCode { seed: z_t_seed })
        {
            Ok(img) => img,
            Err(e) => return fail(&e),
        };
        let pixels = image.pixels();
        if out_pixels.is_null() || out_cap < pixels.len() {
            set_error(format!("pixel buffer needs {} floats", pixels.len()));
            return CfdirStatus::BufferTooSmall;
        }
        std::ptr::copy_nonoverlapping(pixels.as_ptr(), out_pixels, pixels.len());
        CfdirStatus::Ok
    })
}

/// Classifies an image; positive logit means positive class.
///
/// # Safety
/// `world` must be a live handle; `pixels` must point to `width * height`
/// floats; `out_logit` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cfdir_world_classify(
    world: *const CfdirWorld,
    pixels: *const f32,
    width: usize,
    height: usize,
    out_logit: *mut f64,
) -> CfdirStatus {
    guarded(|| {
        let Some(world) = world.as_ref() else {
            set_error("world is null");
            return CfdirStatus::InvalidArgument;
        };
        if pixels.is_null() || out_logit.is_null() {
            set_error("pixels or out_logit is null");
            return CfdirStatus::InvalidArgument;
        }
        let data = std::slice::from_raw_parts(pixels, width * height).to_vec();
        let image = match Image::new(width, height, data) {
            Ok(img) => img,
            Err(e) => return fail(&e),
        };
        match world.world.classifier.classify(&image) {
            Ok(logit) => {
                *out_logit = logit;
                CfdirStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Fills `params` with the benchmark defaults.
///
/// # Safety
/// `params` must be writable or null.
#[no_mangle]
pub unsafe extern "C" fn cfdir_discover_params_default(params: *mut CfdirDiscoverParams) {
    if params.is_null() {
        return;
    }
    let config = RunConfig::benchmark();
    *params = CfdirDiscoverParams {
        radius: config.radius,
        sample_count: config.sample_count,
        epochs: config.proxy.epochs,
        batch_size: config.proxy.batch_size,
        learning_rate: config.proxy.learning_rate,
        holdout_fraction: config.proxy.holdout_fraction,
        lambda: config.lambda,
        h_count: config.h_count,
        metric: 1,
        seed: config.seed,
    };
}

/// Trains a proxy around `z_sem` and extracts the gradient direction plus
/// `params.h_count` Hessian directions. Returns null on failure.
///
/// # Safety
/// `world` must be a live handle; `z_sem` must point to `z_len` doubles;
/// `params` must be readable.
#[no_mangle]
pub unsafe extern "C" fn cfdir_discover(
    world: *const CfdirWorld,
    z_sem: *const f64,
    z_len: usize,
    z_t_seed: u64,
    params: *const CfdirDiscoverParams,
) -> *mut CfdirDirectionSet {
    let mut result: *mut CfdirDirectionSet = std::ptr::null_mut();
    let status = guarded(|| {
        let Some(world) = world.as_ref() else {
            set_error("world is null");
            return CfdirStatus::InvalidArgument;
        };
        let Some(z) = slice_arg(z_sem, z_len) else {
            set_error("z_sem is null");
            return CfdirStatus::InvalidArgument;
        };
        let Some(params) = params.as_ref() else {
            set_error("params is null");
            return CfdirStatus::InvalidArgument;
        };
        let Some(metric) = metric_from(params.metric) else {
            set_error(format!("unknown metric code {}", params.metric));
            return CfdirStatus::InvalidArgument;
        };
        let z = match Vector::new(z.to_vec()) {
            Ok(z) => z,
            Err(e) => return fail(&e),
        };
        let mut rng = Rng::new(params.seed).derive(1);
        let dataset = match build_dataset(
            world.world.generator.as_ref(),
            world.world.classifier.as_ref(),
            metric,
            &z,
            StochasticCode { seed: z_t_seed },
            params.radius,
            params.sample_count,
            &mut rng,
        ) {
            Ok(d) => d,
            Err(e) => return fail(&e),
        };
        let train_config = TrainConfig {
            epochs: params.epochs,
            batch_size: params.batch_size,
            learning_rate: params.learning_rate,
            seed: params.seed,
            hidden: RunConfig::benchmark().proxy.hidden,
            holdout_fraction: params.holdout_fraction,
        };
        let (net, _report) = match train_proxy(&dataset, &train_config) {
            Ok(t) => t,
            Err(e) => return fail(&e),
        };
        let g = match g_direction(&net, &z, params.lambda, "ffi") {
            Ok(g) => g,
            Err(e) => return fail(&e),
        };
        let hs = match h_directions(&net, &z, params.lambda, params.h_count, "ffi") {
            Ok(h) => h,
            Err(e) => return fail(&e),
        };
        let mut directions = Vec::with_capacity(1 + hs.len());
        directions.push(g);
        directions.extend(hs);
        result = Box::into_raw(Box::new(CfdirDirectionSet { directions }));
        CfdirStatus::Ok
    });
    if status != CfdirStatus::Ok {
        return std::ptr::null_mut();
    }
    result
}

/// Number of directions in a set; 0 for null.
///
/// # Safety
/// `set` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn cfdir_directions_len(set: *const CfdirDirectionSet) -> usize {
    if set.is_null() {
        0
    } else {
        (*set).directions.len()
    }
}

/// Copies direction `index` into `out_vector`. `out_kind` receives 0 for the
/// gradient direction and 1 for Hessian directions; `out_eigenvalue` is
/// meaningful only for the latter.
///
/// # Safety
/// `set` must be a live handle; `out_vector` must have room for `out_cap`
/// doubles; the remaining out pointers must be writable or null.
#[no_mangle]
pub unsafe extern "C" fn cfdir_directions_get(
    set: *const CfdirDirectionSet,
    index: usize,
    out_vector: *mut f64,
    out_cap: usize,
    out_kind: *mut u32,
    out_rank: *mut usize,
    out_eigenvalue: *mut f64,
) -> CfdirStatus {
    guarded(|| {
        let Some(set) = set.as_ref() else {
            set_error("direction set is null");
            return CfdirStatus::InvalidArgument;
        };
        let Some(direction) = set.directions.get(index) else {
            set_error(format!(
                "direction index {index} out of range ({} available)",
                set.directions.len()
            ));
            return CfdirStatus::InvalidArgument;
        };
        let values = direction.vector().as_slice();
        if out_vector.is_null() || out_cap < values.len() {
            set_error(format!("direction buffer needs {} doubles", values.len()));
            return CfdirStatus::BufferTooSmall;
        }
        std::ptr::copy_nonoverlapping(values.as_ptr(), out_vector, values.len());
        if !out_kind.is_null() {
            *out_kind = match direction.kind() {
                cfdir::directions::DirectionKind::Gradient => 0,
                cfdir::directions::DirectionKind::Hessian => 1,
            };
        }
        if !out_rank.is_null() {
            *out_rank = direction.eigen_rank().unwrap_or(0);
        }
        if !out_eigenvalue.is_null() {
            *out_eigenvalue = direction.eigenvalue().unwrap_or(0.0);
        }
        CfdirStatus::Ok
    })
}

/// Frees a direction set; null is a no-op.
///
/// # Safety
/// `set` must have come from [`cfdir_discover`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn cfdir_directions_free(set: *mut CfdirDirectionSet) {
    if !set.is_null() {
        drop(Box::from_raw(set));
    }
}

/// Line search along `direction` over a symmetric step grid: decodes every
/// step, scores the counterfactual loss, and reports the selected step.
///
/// # Safety
/// `world` must be a live handle; `z_sem` and `direction` must point to
/// `z_len` doubles each; `out` must be writable.
#[allow(clippy::too_many_arguments)]
#[no_mangle]
pub unsafe extern "C" fn cfdir_line_search(
    world: *const CfdirWorld,
    z_sem: *const f64,
    z_len: usize,
    z_t_seed: u64,
    direction: *const f64,
    grid_half_width: f64,
    grid_count: usize,
    lambda: f64,
    metric: u32,
    out: *mut CfdirCfResult,
) -> CfdirStatus {
    guarded(|| {
        let Some(world) = world.as_ref() else {
            set_error("world is null");
            return CfdirStatus::InvalidArgument;
        };
        let (Some(z), Some(d)) = (slice_arg(z_sem, z_len), slice_arg(direction, z_len)) else {
            set_error("z_sem or direction is null");
            return CfdirStatus::InvalidArgument;
        };
        if out.is_null() {
            set_error("out is null");
            return CfdirStatus::InvalidArgument;
        }
        let Some(metric) = metric_from(metric) else {
            set_error("unknown metric code");
            return CfdirStatus::InvalidArgument;
        };
        let step = (|| -> cfdir::Result<CfdirCfResult> {
            let z = Vector::new(z.to_vec())?;
            let unit = Vector::new(d.to_vec())?.normalized(1e-10)?;
            let dir = Direction::new(
                unit,
                cfdir::directions::DirectionKind::Gradient,
                None,
                None,
                "ffi".into(),
                lambda,
            )?;
            let grid = AlphaGrid::symmetric(grid_half_width, grid_count)?;
            let r = line_search(
                world.world.generator.as_ref(),
                world.world.classifier.as_ref(),
                metric,
                &z,
                StochasticCode { seed: z_t_seed },
                &dir,
                &grid,
                lambda,
                "ffi",
            )?;
            Ok(CfdirCfResult {
                alpha: r.alpha,
                logit_before: r.logit_before,
                logit_after: r.logit_after,
                distance: r.distance,
                cf_loss: r.cf_loss,
                flipped: r.flipped,
            })
        })();
        match step {
            Ok(r) => {
                *out = r;
                CfdirStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Latent-path attribution along `direction`: finds a baseline under
/// `baseline_tau`, decodes `path_steps` steps towards it, and writes the
/// signed per-pixel map into `out_map` (row-major, `width * height` doubles).
///
/// # Safety
/// `world` must be a live handle; `z_sem` and `direction` must point to
/// `z_len` doubles each; `out_map` must have room for `out_cap` doubles.
#[allow(clippy::too_many_arguments)]
#[no_mangle]
pub unsafe extern "C" fn cfdir_attribute(
    world: *const CfdirWorld,
    z_sem: *const f64,
    z_len: usize,
    z_t_seed: u64,
    direction: *const f64,
    grid_half_width: f64,
    grid_count: usize,
    baseline_tau: f64,
    path_steps: usize,
    eps_px: f64,
    out_map: *mut f64,
    out_cap: usize,
) -> CfdirStatus {
    guarded(|| {
        let Some(world) = world.as_ref() else {
            set_error("world is null");
            return CfdirStatus::InvalidArgument;
        };
        let (Some(z), Some(d)) = (slice_arg(z_sem, z_len), slice_arg(direction, z_len)) else {
            set_error("z_sem or direction is null");
            return CfdirStatus::InvalidArgument;
        };
        let computed = (|| -> cfdir::Result<Vec<f64>> {
            let z = Vector::new(z.to_vec())?;
            let unit = Vector::new(d.to_vec())?.normalized(1e-10)?;
            let dir = Direction::new(
                unit,
                cfdir::directions::DirectionKind::Gradient,
                None,
                None,
                "ffi".into(),
                1.0,
            )?;
            let grid = AlphaGrid::symmetric(grid_half_width, grid_count)?;
            let zt = StochasticCode { seed: z_t_seed };
            let generator = world.world.generator.as_ref();
            let classifier = world.world.classifier.as_ref();
            let baseline = cfdir::attribution::find_baseline(
                generator,
                classifier,
                &z,
                zt,
                &dir,
                &grid,
                baseline_tau,
            )?;
            let path = cfdir::attribution::latent_path(
                generator,
                classifier,
                &z,
                zt,
                &dir,
                baseline.alpha,
                path_steps,
            )?;
            let factual = generator.decode(&z, zt)?;
            let map = cfdir::attribution::bb_lig(&path, &factual, &baseline.image, eps_px)?;
            Ok(map.values().to_vec())
        })();
        match computed {
            Ok(values) => {
                if out_map.is_null() || out_cap < values.len() {
                    set_error(format!("map buffer needs {} doubles", values.len()));
                    return CfdirStatus::BufferTooSmall;
                }
                std::ptr::copy_nonoverlapping(values.as_ptr(), out_map, values.len());
                CfdirStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}
