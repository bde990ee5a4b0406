//! C interface to the planedet detectors.
//!
//! Clouds and detection results cross the boundary as opaque handles. Every
//! fallible call returns a [`PdStatus`]; on failure a message is kept per
//! thread and can be read with [`pd_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use planedet::fspf::{FspfParams, InlierBudget, InlierClaim};
use planedet::io::{detect_cloud, load_cloud, Detection, RunConfig};
use planedet::merge::MergeParams;
use planedet::normals::Sigma;
use planedet::ops::{GroupingStrategy, OpsParams};
use planedet::{Error, OrientationClass, Point3, PointCloud, UnitVector3};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ParseError = 3,
    IoError = 4,
    DetectionFailed = 5,
    OutOfRange = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PdOrientation {
    Horizontal = 0,
    Vertical = 1,
    Other = 2,
}

impl From<OrientationClass> for PdOrientation {
    fn from(c: OrientationClass) -> Self {
        match c {
            OrientationClass::Horizontal => PdOrientation::Horizontal,
            OrientationClass::Vertical => PdOrientation::Vertical,
            OrientationClass::Other => PdOrientation::Other,
        }
    }
}

/// Opaque point cloud.
pub struct PdCloud {
    cloud: PointCloud,
}

/// Opaque detection result.
pub struct PdDetection {
    inner: Detection,
}

/// Parameters shared by both detectors: gravity direction, orientation
/// tolerance in degrees, merge thresholds, and RNG seed.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct PdCommonParams {
    pub up: [f64; 3],
    pub orientation_tolerance: f64,
    pub merge_angle: f64,
    pub merge_offset: f64,
    pub seed: u64,
}

/// One-point detector parameters. `sigma <= 0` selects the mean neighbor
/// distance.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct PdOpsParams {
    pub sampling_rate: f64,
    pub k: usize,
    pub sigma: f64,
    pub success_probability: f64,
    pub dist_threshold: f64,
    pub min_inliers: usize,
    pub detect_first: bool,
}

/// Fast sampling detector parameters. `max_inlier_points == 0` means half
/// the cloud.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct PdFspfParams {
    pub max_inlier_points: usize,
    pub max_iterations: usize,
    pub local_samples: usize,
    pub min_inlier_fraction: f64,
    pub dist_threshold: f64,
    pub r1: f64,
    pub r2: f64,
    pub claim_sphere: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct PdPlane {
    pub centroid: [f64; 3],
    pub normal: [f64; 3],
    pub inlier_count: usize,
    pub orientation: PdOrientation,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn fail(status: PdStatus, msg: impl Into<String>) -> PdStatus {
    set_error(msg);
    status
}

fn status_of(e: &Error) -> PdStatus {
    match e {
        Error::Parse(_) => PdStatus::ParseError,
        Error::Io(_) => PdStatus::IoError,
        Error::Config(_) | Error::InvalidSpec(_) | Error::Geom(_) => PdStatus::InvalidArgument,
        _ => PdStatus::DetectionFailed,
    }
}

fn guard(f: impl FnOnce() -> PdStatus) -> PdStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(PdStatus::Panic, "internal panic"),
    }
}

fn vec3(v: Point3) -> [f64; 3] {
    [v.x, v.y, v.z]
}

/// Returns the message for the last failed call on this thread, or null.
/// The string stays valid until the next call into this library on the same
/// thread.
#[no_mangle]
pub extern "C" fn pd_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Builds a cloud from `n` interleaved `x, y, z` triples.
///
/// # Safety
/// `xyz` must point to `3 * n` readable doubles (or may be null when `n` is
/// zero); `out` must be a valid pointer to write the handle to.
#[no_mangle]
pub unsafe extern "C" fn pd_cloud_from_xyz(xyz: *const f64, n: usize, out: *mut *mut PdCloud) -> PdStatus {
    guard(|| {
        if out.is_null() || (xyz.is_null() && n > 0) {
            return fail(PdStatus::NullPointer, "null argument");
        }
        let Some(len) = n.checked_mul(3) else {
            return fail(PdStatus::InvalidArgument, "point count overflows");
        };
        let raw = if n == 0 { &[][..] } else { std::slice::from_raw_parts(xyz, len) };
        let points: Vec<Point3> = raw.chunks_exact(3).map(|c| Point3::new(c[0], c[1], c[2])).collect();
        if let Some(i) = points.iter().position(|p| !p.is_finite()) {
            return fail(PdStatus::InvalidArgument, format!("point {i} is not finite"));
        }
        *out = Box::into_raw(Box::new(PdCloud {
            cloud: PointCloud::new(points),
        }));
        PdStatus::Ok
    })
}

/// Loads a PLY or XYZ file. Non-finite points are dropped.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pd_cloud_load(path: *const c_char, out: *mut *mut PdCloud) -> PdStatus {
    guard(|| {
        if path.is_null() || out.is_null() {
            return fail(PdStatus::NullPointer, "null argument");
        }
        let Ok(path) = CStr::from_ptr(path).to_str() else {
            return fail(PdStatus::InvalidArgument, "path is not valid UTF-8");
        };
        match load_cloud(Path::new(path)) {
            Ok(loaded) => {
                *out = Box::into_raw(Box::new(PdCloud { cloud: loaded.cloud }));
                PdStatus::Ok
            }
            Err(e) => {
                let e = Error::from(e);
                fail(status_of(&e), e.to_string())
            }
        }
    })
}

/// # Safety
/// `cloud` must be null or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn pd_cloud_len(cloud: *const PdCloud) -> usize {
    cloud.as_ref().map_or(0, |c| c.cloud.len())
}

/// # Safety
/// `cloud` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pd_cloud_free(cloud: *mut PdCloud) {
    if !cloud.is_null() {
        drop(Box::from_raw(cloud));
    }
}

#[no_mangle]
pub extern "C" fn pd_common_params_default() -> PdCommonParams {
    let r = RunConfig::default();
    PdCommonParams {
        up: vec3(r.up.as_point()),
        orientation_tolerance: r.orientation_tolerance,
        merge_angle: r.merge.angle_threshold,
        merge_offset: r.merge.offset_threshold,
        seed: r.seed,
    }
}

#[no_mangle]
pub extern "C" fn pd_ops_params_default() -> PdOpsParams {
    let p = OpsParams::default();
    PdOpsParams {
        sampling_rate: p.sampling_rate,
        k: p.k,
        sigma: match p.sigma {
            Sigma::Fixed(s) => s,
            Sigma::MeanNeighborDistance => 0.0,
        },
        success_probability: p.success_probability,
        dist_threshold: p.dist_threshold,
        min_inliers: p.min_inliers,
        detect_first: p.grouping == GroupingStrategy::DetectFirst,
    }
}

#[no_mangle]
pub extern "C" fn pd_fspf_params_default() -> PdFspfParams {
    let p = FspfParams::default();
    PdFspfParams {
        max_inlier_points: match p.max_inlier_points {
            InlierBudget::Points(n) => n,
            InlierBudget::PerCloudPoint(_) => 0,
        },
        max_iterations: p.max_iterations,
        local_samples: p.local_samples,
        min_inlier_fraction: p.min_inlier_fraction,
        dist_threshold: p.dist_threshold,
        r1: p.r1,
        r2: p.r2,
        claim_sphere: p.claim == InlierClaim::Sphere,
    }
}

fn run_config(common: &PdCommonParams) -> Result<RunConfig, PdStatus> {
    let up = UnitVector3::new_normalize(Point3::new(common.up[0], common.up[1], common.up[2]))
        .ok_or_else(|| fail(PdStatus::InvalidArgument, "up vector must be finite and nonzero"))?;
    Ok(RunConfig {
        up,
        orientation_tolerance: common.orientation_tolerance,
        merge: MergeParams {
            angle_threshold: common.merge_angle,
            offset_threshold: common.merge_offset,
        },
        seed: common.seed,
        ..RunConfig::default()
    })
}

unsafe fn detect(
    cloud: *const PdCloud,
    common: *const PdCommonParams,
    out: *mut *mut PdDetection,
    make: impl FnOnce(RunConfig) -> RunConfig,
) -> PdStatus {
    if cloud.is_null() || out.is_null() {
        return fail(PdStatus::NullPointer, "null argument");
    }
    let common = common.as_ref().copied().unwrap_or_else(|| pd_common_params_default());
    let config = match run_config(&common) {
        Ok(c) => make(c),
        Err(s) => return s,
    };
    match detect_cloud(&(*cloud).cloud, &config) {
        Ok(inner) => {
            *out = Box::into_raw(Box::new(PdDetection { inner }));
            PdStatus::Ok
        }
        Err(e) => fail(status_of(&e), e.to_string()),
    }
}

/// Runs the one-point detector followed by merging.
///
/// # Safety
/// `cloud` must be a live handle and `out` a valid pointer. `params` and
/// `common` may be null to use defaults.
#[no_mangle]
pub unsafe extern "C" fn pd_detect_ops(
    cloud: *const PdCloud,
    params: *const PdOpsParams,
    common: *const PdCommonParams,
    out: *mut *mut PdDetection,
) -> PdStatus {
    guard(|| {
        let p = params.as_ref().copied().unwrap_or_else(|| pd_ops_params_default());
        let ops = OpsParams {
            sampling_rate: p.sampling_rate,
            k: p.k,
            sigma: if p.sigma > 0.0 {
                Sigma::Fixed(p.sigma)
            } else {
                Sigma::MeanNeighborDistance
            },
            success_probability: p.success_probability,
            dist_threshold: p.dist_threshold,
            min_inliers: p.min_inliers,
            grouping: if p.detect_first {
                GroupingStrategy::DetectFirst
            } else {
                GroupingStrategy::GroupFirst
            },
            ..OpsParams::default()
        };
        detect(cloud, common, out, |c| RunConfig {
            detector: planedet::io::Detector::Ops(ops),
            ..c
        })
    })
}

/// Runs the fast sampling detector followed by merging.
///
/// # Safety
/// Same contract as [`pd_detect_ops`].
#[no_mangle]
pub unsafe extern "C" fn pd_detect_fspf(
    cloud: *const PdCloud,
    params: *const PdFspfParams,
    common: *const PdCommonParams,
    out: *mut *mut PdDetection,
) -> PdStatus {
    guard(|| {
        let p = params.as_ref().copied().unwrap_or_else(|| pd_fspf_params_default());
        let fspf = FspfParams {
            max_inlier_points: match p.max_inlier_points {
                0 => FspfParams::default().max_inlier_points,
                n => InlierBudget::Points(n),
            },
            max_iterations: p.max_iterations,
            local_samples: p.local_samples,
            min_inlier_fraction: p.min_inlier_fraction,
            dist_threshold: p.dist_threshold,
            r1: p.r1,
            r2: p.r2,
            claim: if p.claim_sphere { InlierClaim::Sphere } else { InlierClaim::Draws },
            ..FspfParams::default()
        };
        detect(cloud, common, out, |c| RunConfig {
            detector: planedet::io::Detector::Fspf(fspf),
            ..c
        })
    })
}

/// Number of planes after merging.
///
/// # Safety
/// `det` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pd_detection_plane_count(det: *const PdDetection) -> usize {
    det.as_ref().map_or(0, |d| d.inner.planes.len())
}

/// Number of planes the detector reported before merging.
///
/// # Safety
/// `det` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pd_detection_pre_merge_count(det: *const PdDetection) -> usize {
    det.as_ref().map_or(0, |d| d.inner.pre_merge_count)
}

/// # Safety
/// `det` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pd_detection_plane(det: *const PdDetection, index: usize, out: *mut PdPlane) -> PdStatus {
    guard(|| {
        if det.is_null() || out.is_null() {
            return fail(PdStatus::NullPointer, "null argument");
        }
        let planes = &(*det).inner.planes;
        let Some((plane, class)) = planes.get(index) else {
            return fail(
                PdStatus::OutOfRange,
                format!("plane {index} out of range ({} planes)", planes.len()),
            );
        };
        *out = PdPlane {
            centroid: vec3(plane.centroid),
            normal: vec3(plane.normal.as_point()),
            inlier_count: plane.inliers.len(),
            orientation: (*class).into(),
        };
        PdStatus::Ok
    })
}

/// Copies per-point labels into caller buffers of length `len`, which must
/// equal the cloud size. Unsegmented points get plane id -1. Either buffer
/// may be null to skip it.
///
/// # Safety
/// Non-null buffers must have room for `len` elements.
#[no_mangle]
pub unsafe extern "C" fn pd_detection_labels(
    det: *const PdDetection,
    plane_ids: *mut i64,
    orientations: *mut PdOrientation,
    len: usize,
) -> PdStatus {
    guard(|| {
        let Some(det) = det.as_ref() else {
            return fail(PdStatus::NullPointer, "null argument");
        };
        let labeling = &det.inner.labeling;
        if len != labeling.len() {
            return fail(
                PdStatus::InvalidArgument,
                format!("buffer length {len} does not match {} points", labeling.len()),
            );
        }
        if !plane_ids.is_null() {
            let ids = std::slice::from_raw_parts_mut(plane_ids, len);
            for (i, slot) in ids.iter_mut().enumerate() {
                *slot = labeling.plane_id(i).map_or(-1, i64::from);
            }
        }
        if !orientations.is_null() {
            let o = std::slice::from_raw_parts_mut(orientations, len);
            for (i, slot) in o.iter_mut().enumerate() {
                *slot = labeling.orientation(i).into();
            }
        }
        PdStatus::Ok
    })
}

/// # Safety
/// `det` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pd_detection_free(det: *mut PdDetection) {
    if !det.is_null() {
        drop(Box::from_raw(det));
    }
}
