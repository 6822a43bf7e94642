//! C ABI over `fractree`: opaque tree handles, integer status codes and a
//! thread-local last-error message. The header `include/fractree.h` is
//! generated from this file by cbindgen.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use fractree::agora::{generate_discrete, AgoraConfig, AgoraModel, PointTree};
use fractree::branching::{generate_tree_seeded, BranchingTree, Budget};
use fractree::dimension::{estimate_dimension, DimMethod, Points, Sweep};
use fractree::io::{write_points_csv, PointRecords};
use fractree::{Error, ProcessParams, SpatialProfile};

/// Status returned by every fallible entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FtStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    BufferTooSmall = 3,
    RejectionGuard = 4,
    Resource = 5,
    Io = 6,
    Runtime = 7,
    Panic = 8,
}

/// Displacement profile codes accepted by `ft_ct_generate`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FtProfile {
    Exponential = 0,
    Gaussian = 1,
    HardCutoff = 2,
}

/// Discrete model codes accepted by `ft_discrete_generate`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FtModel {
    Smooth = 0,
    HardThreshold = 1,
}

/// Opaque continuous-time tree.
pub struct FtBranchingTree(BranchingTree);

/// Opaque discrete-model tree.
pub struct FtPointTree(PointTree);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(FtStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::RejectionGuard { .. } | Error::Partial { .. } => FtStatus::RejectionGuard,
            Error::Resource(_) => FtStatus::Resource,
            Error::Io { .. } | Error::Json { .. } => FtStatus::Io,
            e if e.is_validation() => FtStatus::InvalidArgument,
            _ => FtStatus::Runtime,
        };
        Failure(status, e.to_string())
    }
}

fn failure(status: FtStatus, msg: &str) -> Failure {
    Failure(status, msg.to_string())
}

fn run(f: impl FnOnce() -> Result<(), Failure>) -> FtStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            FtStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic".into());
            FtStatus::Panic
        }
    }
}

fn profile_from(code: i32) -> Result<SpatialProfile, Failure> {
    match code {
        c if c == FtProfile::Exponential as i32 => Ok(SpatialProfile::Exponential),
        c if c == FtProfile::Gaussian as i32 => Ok(SpatialProfile::Gaussian),
        c if c == FtProfile::HardCutoff as i32 => Ok(SpatialProfile::HardCutoff),
        c => Err(Failure(
            FtStatus::InvalidArgument,
            format!("unknown profile code {c}"),
        )),
    }
}

fn model_from(code: i32) -> Result<AgoraModel, Failure> {
    match code {
        c if c == FtModel::Smooth as i32 => Ok(AgoraModel::Smooth),
        c if c == FtModel::HardThreshold as i32 => Ok(AgoraModel::HardThreshold),
        c => Err(Failure(
            FtStatus::InvalidArgument,
            format!("unknown model code {c}"),
        )),
    }
}

/// # Safety
/// `buf` must be null or point to `cap` writable elements.
unsafe fn copy_out<T: Copy>(src: &[T], buf: *mut T, cap: usize) -> Result<(), Failure> {
    if buf.is_null() {
        return Err(failure(FtStatus::NullPointer, "output buffer is null"));
    }
    if cap < src.len() {
        return Err(Failure(
            FtStatus::BufferTooSmall,
            format!("buffer holds {cap} elements, {} needed", src.len()),
        ));
    }
    // SAFETY: caller guarantees `cap >= src.len()` writable elements at `buf`.
    ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
    Ok(())
}

/// # Safety
/// `path` must be null or a valid NUL-terminated string.
unsafe fn path_from<'a>(path: *const c_char) -> Result<&'a Path, Failure> {
    if path.is_null() {
        return Err(failure(FtStatus::NullPointer, "path is null"));
    }
    // SAFETY: caller guarantees a valid C string.
    let s = CStr::from_ptr(path)
        .to_str()
        .map_err(|_| failure(FtStatus::InvalidArgument, "path is not UTF-8"))?;
    Ok(Path::new(s))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ft_version() -> *const c_char {
    static VERSION: &CStr =
        match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
            Ok(v) => v,
            Err(_) => panic!("version contains NUL"),
        };
    VERSION.as_ptr()
}

/// Message describing the last failure on the calling thread, or null.
/// The pointer stays valid until the next `ft_` call on this thread.
#[no_mangle]
pub extern "C" fn ft_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Grows a continuous-time tree with growth exponent `rho` in dimension `d`
/// until `max_vertices` vertices exist or time `max_time` passes
/// (`max_time <= 0` means no time limit). On success `*out` receives a
/// handle to release with `ft_ct_free`.
///
/// # Safety
/// `out` must be null or point to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn ft_ct_generate(
    d: u32,
    rho: f64,
    profile: i32,
    max_vertices: u64,
    max_time: f64,
    seed: u64,
    out: *mut *mut FtBranchingTree,
) -> FtStatus {
    run(|| {
        if out.is_null() {
            return Err(failure(FtStatus::NullPointer, "out is null"));
        }
        let params =
            ProcessParams::from_rho(d as usize, rho, profile_from(profile)?)?.with_seed(seed);
        let mut budget = Budget::vertices(usize::try_from(max_vertices).unwrap_or(usize::MAX));
        if max_time.is_nan() {
            return Err(failure(FtStatus::InvalidArgument, "max_time is NaN"));
        }
        if max_time > 0.0 {
            budget.max_time = Some(max_time);
        }
        let (tree, _) = generate_tree_seeded(&params, &budget)?;
        // SAFETY: `out` checked non-null above; caller guarantees it is writable.
        *out = Box::into_raw(Box::new(FtBranchingTree(tree)));
        Ok(())
    })
}

/// Number of vertices, or 0 for a null handle.
///
/// # Safety
/// `tree` must be null or a live handle from `ft_ct_generate`.
#[no_mangle]
pub unsafe extern "C" fn ft_ct_len(tree: *const FtBranchingTree) -> usize {
    tree.as_ref().map_or(0, |t| t.0.len())
}

/// Spatial dimension, or 0 for a null handle.
///
/// # Safety
/// `tree` must be null or a live handle from `ft_ct_generate`.
#[no_mangle]
pub unsafe extern "C" fn ft_ct_dim(tree: *const FtBranchingTree) -> usize {
    tree.as_ref().map_or(0, |t| t.0.dim())
}

/// Copies `len * dim` coordinates, row-major, into `buf`.
///
/// # Safety
/// `tree` must be null or a live handle; `buf` must hold `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn ft_ct_coords(
    tree: *const FtBranchingTree,
    buf: *mut f64,
    cap: usize,
) -> FtStatus {
    run(|| {
        let t = tree
            .as_ref()
            .ok_or_else(|| failure(FtStatus::NullPointer, "tree is null"))?;
        copy_out(t.0.coords(), buf, cap)
    })
}

/// Copies the `len` birth times into `buf`.
///
/// # Safety
/// `tree` must be null or a live handle; `buf` must hold `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn ft_ct_birth_times(
    tree: *const FtBranchingTree,
    buf: *mut f64,
    cap: usize,
) -> FtStatus {
    run(|| {
        let t = tree
            .as_ref()
            .ok_or_else(|| failure(FtStatus::NullPointer, "tree is null"))?;
        copy_out(t.0.taus(), buf, cap)
    })
}

/// Copies the `len` parent indices into `buf`; the root's entry is -1.
///
/// # Safety
/// `tree` must be null or a live handle; `buf` must hold `cap` integers.
#[no_mangle]
pub unsafe extern "C" fn ft_ct_parents(
    tree: *const FtBranchingTree,
    buf: *mut i64,
    cap: usize,
) -> FtStatus {
    run(|| {
        let t = tree
            .as_ref()
            .ok_or_else(|| failure(FtStatus::NullPointer, "tree is null"))?;
        let parents: Vec<i64> = (0..t.0.len())
            .map(|v| t.0.parent(v).map_or(-1, |p| p as i64))
            .collect();
        copy_out(&parents, buf, cap)
    })
}

/// Writes the tree as a point CSV file.
///
/// # Safety
/// `tree` must be null or a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn ft_ct_write_csv(
    tree: *const FtBranchingTree,
    path: *const c_char,
) -> FtStatus {
    run(|| {
        let t = tree
            .as_ref()
            .ok_or_else(|| failure(FtStatus::NullPointer, "tree is null"))?;
        write_points_csv(&PointRecords::from(&t.0), path_from(path)?)?;
        Ok(())
    })
}

/// Releases a handle; null is ignored.
///
/// # Safety
/// `tree` must be null or a handle from `ft_ct_generate` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ft_ct_free(tree: *mut FtBranchingTree) {
    if !tree.is_null() {
        // SAFETY: caller guarantees ownership of a handle created by Box::into_raw.
        drop(Box::from_raw(tree));
    }
}

/// Runs a discrete model for `n_points` steps after the root. On success
/// `*out` receives a handle to release with `ft_pt_free`.
///
/// # Safety
/// `out` must be null or point to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn ft_discrete_generate(
    d: u32,
    alpha: f64,
    theta: f64,
    n_points: u64,
    model: i32,
    seed: u64,
    out: *mut *mut FtPointTree,
) -> FtStatus {
    run(|| {
        if out.is_null() {
            return Err(failure(FtStatus::NullPointer, "out is null"));
        }
        let n = usize::try_from(n_points)
            .map_err(|_| failure(FtStatus::InvalidArgument, "n_points too large"))?;
        let cfg = AgoraConfig::new(d as usize, alpha, theta, n, model_from(model)?).with_seed(seed);
        let tree = generate_discrete(&cfg)?;
        // SAFETY: `out` checked non-null above; caller guarantees it is writable.
        *out = Box::into_raw(Box::new(FtPointTree(tree)));
        Ok(())
    })
}

/// Number of points including the root, or 0 for a null handle.
///
/// # Safety
/// `tree` must be null or a live handle from `ft_discrete_generate`.
#[no_mangle]
pub unsafe extern "C" fn ft_pt_len(tree: *const FtPointTree) -> usize {
    tree.as_ref().map_or(0, |t| t.0.len())
}

/// Spatial dimension, or 0 for a null handle.
///
/// # Safety
/// `tree` must be null or a live handle from `ft_discrete_generate`.
#[no_mangle]
pub unsafe extern "C" fn ft_pt_dim(tree: *const FtPointTree) -> usize {
    tree.as_ref().map_or(0, |t| t.0.dim())
}

/// Copies `len * dim` coordinates, row-major, into `buf`.
///
/// # Safety
/// `tree` must be null or a live handle; `buf` must hold `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn ft_pt_coords(
    tree: *const FtPointTree,
    buf: *mut f64,
    cap: usize,
) -> FtStatus {
    run(|| {
        let t = tree
            .as_ref()
            .ok_or_else(|| failure(FtStatus::NullPointer, "tree is null"))?;
        copy_out(t.0.coords(), buf, cap)
    })
}

/// Copies the `len` parent indices into `buf`; the root's entry is -1.
///
/// # Safety
/// `tree` must be null or a live handle; `buf` must hold `cap` integers.
#[no_mangle]
pub unsafe extern "C" fn ft_pt_parents(
    tree: *const FtPointTree,
    buf: *mut i64,
    cap: usize,
) -> FtStatus {
    run(|| {
        let t = tree
            .as_ref()
            .ok_or_else(|| failure(FtStatus::NullPointer, "tree is null"))?;
        let parents: Vec<i64> = (0..t.0.len())
            .map(|v| t.0.parent(v).map_or(-1, |p| p as i64))
            .collect();
        copy_out(&parents, buf, cap)
    })
}

/// Copies `len` seed flags (1 for points attached to the root) into `buf`.
///
/// # Safety
/// `tree` must be null or a live handle; `buf` must hold `cap` bytes.
#[no_mangle]
pub unsafe extern "C" fn ft_pt_is_seed(
    tree: *const FtPointTree,
    buf: *mut u8,
    cap: usize,
) -> FtStatus {
    run(|| {
        let t = tree
            .as_ref()
            .ok_or_else(|| failure(FtStatus::NullPointer, "tree is null"))?;
        let flags: Vec<u8> = (0..t.0.len()).map(|v| u8::from(t.0.is_seed(v))).collect();
        copy_out(&flags, buf, cap)
    })
}

/// Writes the tree as a point CSV file.
///
/// # Safety
/// `tree` must be null or a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn ft_pt_write_csv(
    tree: *const FtPointTree,
    path: *const c_char,
) -> FtStatus {
    run(|| {
        let t = tree
            .as_ref()
            .ok_or_else(|| failure(FtStatus::NullPointer, "tree is null"))?;
        write_points_csv(&PointRecords::from(&t.0), path_from(path)?)?;
        Ok(())
    })
}

/// Releases a handle; null is ignored.
///
/// # Safety
/// `tree` must be null or a handle from `ft_discrete_generate` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ft_pt_free(tree: *mut FtPointTree) {
    if !tree.is_null() {
        // SAFETY: caller guarantees ownership of a handle created by Box::into_raw.
        drop(Box::from_raw(tree));
    }
}

/// Box-counting dimension of `n_points` points in dimension `d` over the
/// default scale sweep.
///
/// # Safety
/// `coords` must hold `n_points * d` doubles; `slope` and `stderr` must be
/// writable (`stderr` may be null).
#[no_mangle]
pub unsafe extern "C" fn ft_box_count_dimension(
    coords: *const f64,
    n_points: usize,
    d: u32,
    slope: *mut f64,
    stderr: *mut f64,
) -> FtStatus {
    run(|| {
        if coords.is_null() || slope.is_null() {
            return Err(failure(FtStatus::NullPointer, "coords or slope is null"));
        }
        let len = n_points
            .checked_mul(d as usize)
            .ok_or_else(|| failure(FtStatus::InvalidArgument, "n_points * d overflows"))?;
        // SAFETY: caller guarantees `n_points * d` readable doubles.
        let data = std::slice::from_raw_parts(coords, len);
        let fit = estimate_dimension(
            Points::new(d as usize, data)?,
            DimMethod::BoxCount,
            &Sweep::default(),
        )?;
        *slope = fit.slope;
        if !stderr.is_null() {
            *stderr = fit.stderr;
        }
        Ok(())
    })
}
