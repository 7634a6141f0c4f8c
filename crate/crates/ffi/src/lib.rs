//! C ABI over the core library.
//!
//! Every fallible function returns a [`BdStatus`]; on failure the message is
//! available from [`bd_last_error_message`] on the same thread. Objects are
//! opaque handles created by `*_new` functions and released with `*_free`.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use bdlab::kinetic::{bernoulli_exact, integrate, IntegrateOptions, Trajectory};
use bdlab::particle_sim::{run_ensemble, EnsembleOptions};
use bdlab::runner::{run_config_file, RunOptions};
use bdlab::{DensityField, Error, GridModel, KernelSpec, ModelParams, TorusDomain};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Numerical = 4,
    Io = 5,
    CertificateViolated = 6,
    Absorbing = 7,
    Panic = 8,
}

pub struct BdDomain {
    inner: TorusDomain,
}

pub struct BdKernel {
    inner: KernelSpec,
}

pub struct BdModel {
    params: ModelParams,
    grid: GridModel,
}

pub struct BdTrajectory {
    inner: Trajectory,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(e: &Error) -> BdStatus {
    match e {
        Error::InvalidKernel(_)
        | Error::InvalidDomain(_)
        | Error::PeriodizationOverlap { .. }
        | Error::DomainMismatch(_)
        | Error::NegativeDensity { .. }
        | Error::InvalidParameter { .. } => BdStatus::InvalidArgument,
        Error::Config { .. } => BdStatus::Config,
        Error::Instability { .. } | Error::NoConvergence { .. } => BdStatus::Numerical,
        Error::Absorbing => BdStatus::Absorbing,
        Error::CertificateViolated(_) => BdStatus::CertificateViolated,
        Error::Io(_) | Error::Json(_) => BdStatus::Io,
    }
}

/// Run `f`, translating errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), BdStatus>) -> BdStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => BdStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic");
            BdStatus::Panic
        }
    }
}

fn lib<T>(r: bdlab::Result<T>) -> Result<T, BdStatus> {
    r.map_err(|e| {
        set_error(e.to_string());
        status_of(&e)
    })
}

fn null(name: &str) -> BdStatus {
    set_error(format!("`{name}` is null"));
    BdStatus::NullPointer
}

unsafe fn as_ref<'a, T>(p: *const T, name: &str) -> Result<&'a T, BdStatus> {
    p.as_ref().ok_or_else(|| null(name))
}

unsafe fn write_out<T>(out: *mut T, name: &str, value: T) -> Result<(), BdStatus> {
    if out.is_null() {
        return Err(null(name));
    }
    out.write(value);
    Ok(())
}

unsafe fn slice<'a>(p: *const f64, len: usize, name: &str) -> Result<&'a [f64], BdStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(name));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn path_arg(p: *const c_char, name: &str) -> Result<PathBuf, BdStatus> {
    if p.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(p).to_str().map(PathBuf::from).map_err(|_| {
        set_error(format!("`{name}` is not valid UTF-8"));
        BdStatus::InvalidArgument
    })
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

unsafe fn free<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Message of the last failed call on this thread, or null. Valid until the next call.
#[no_mangle]
pub extern "C" fn bd_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn bd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bd_domain_new(
    dim: usize,
    edge: f64,
    points: usize,
    out: *mut *mut BdDomain,
) -> BdStatus {
    guard(|| {
        let d = lib(TorusDomain::new(dim, edge, points))?;
        write_out(out, "out", boxed(BdDomain { inner: d }))
    })
}

/// # Safety
/// `domain` must be null or come from [`bd_domain_new`].
#[no_mangle]
pub unsafe extern "C" fn bd_domain_free(domain: *mut BdDomain) {
    free(domain)
}

/// Number of grid points, `points^dim`, or 0 for a null handle.
///
/// # Safety
/// `domain` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bd_domain_len(domain: *const BdDomain) -> usize {
    domain.as_ref().map_or(0, |d| d.inner.len())
}

unsafe fn new_kernel(spec: bdlab::Result<KernelSpec>, out: *mut *mut BdKernel) -> BdStatus {
    guard(|| {
        let k = lib(spec)?;
        write_out(out, "out", boxed(BdKernel { inner: k }))
    })
}

/// `amplitude` times the indicator of the ball of `radius`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bd_kernel_ball(
    amplitude: f64,
    radius: f64,
    dim: usize,
    out: *mut *mut BdKernel,
) -> BdStatus {
    new_kernel(KernelSpec::ball(amplitude, radius, dim), out)
}

/// `amplitude * exp(-r^2 / (2 sigma^2))`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bd_kernel_gaussian(
    amplitude: f64,
    sigma: f64,
    dim: usize,
    out: *mut *mut BdKernel,
) -> BdStatus {
    new_kernel(KernelSpec::gaussian(amplitude, sigma, dim), out)
}

/// Gaussian normalized to total `mass`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bd_kernel_gaussian_mass(
    mass: f64,
    sigma: f64,
    dim: usize,
    out: *mut *mut BdKernel,
) -> BdStatus {
    new_kernel(KernelSpec::gaussian_with_mass(mass, sigma, dim), out)
}

/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bd_kernel_zero(dim: usize, out: *mut *mut BdKernel) -> BdStatus {
    new_kernel(KernelSpec::zero(dim), out)
}

/// Total mass of the continuum kernel.
///
/// # Safety
/// `kernel` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bd_kernel_mass(kernel: *const BdKernel, out: *mut f64) -> BdStatus {
    guard(|| {
        let k = as_ref(kernel, "kernel")?;
        write_out(out, "out", k.inner.stats().mass)
    })
}

/// # Safety
/// `kernel` must be null or come from a `bd_kernel_*` constructor.
#[no_mangle]
pub unsafe extern "C" fn bd_kernel_free(kernel: *mut BdKernel) {
    free(kernel)
}

/// Model with mortality `m`, dispersal `a_plus` and competition `a_minus`,
/// discretized on `domain`. The kernels and domain are copied.
///
/// # Safety
/// Handles must be live and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bd_model_new(
    mortality: f64,
    a_plus: *const BdKernel,
    a_minus: *const BdKernel,
    domain: *const BdDomain,
    out: *mut *mut BdModel,
) -> BdStatus {
    guard(|| {
        let (p, n, d) = (
            as_ref(a_plus, "a_plus")?,
            as_ref(a_minus, "a_minus")?,
            as_ref(domain, "domain")?,
        );
        let params = lib(ModelParams::new(
            mortality,
            p.inner.clone(),
            n.inner.clone(),
        ))?;
        let grid = lib(params.on_grid(&d.inner))?;
        write_out(out, "out", boxed(BdModel { params, grid }))
    })
}

/// # Safety
/// `model` must be null or come from [`bd_model_new`].
#[no_mangle]
pub unsafe extern "C" fn bd_model_free(model: *mut BdModel) {
    free(model)
}

/// Carrying capacity `(<a+> - m) / <a->` of the grid model; NaN when undefined.
///
/// # Safety
/// `model` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bd_model_carrying_capacity(
    model: *const BdModel,
    out: *mut f64,
) -> BdStatus {
    guard(|| {
        let m = as_ref(model, "model")?;
        write_out(out, "out", m.grid.carrying_capacity().unwrap_or(f64::NAN))
    })
}

/// Homogeneous solution of the kinetic equation started at `psi0`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bd_bernoulli_exact(
    psi0: f64,
    mortality: f64,
    plus_mass: f64,
    minus_mass: f64,
    t: f64,
    out: *mut f64,
) -> BdStatus {
    guard(|| {
        let v = lib(bernoulli_exact(psi0, mortality, plus_mass, minus_mass, t))?;
        write_out(out, "out", v)
    })
}

/// Integrate the kinetic equation from `rho0` (length `bd_domain_len`).
///
/// # Safety
/// `model` must be live, `rho0` must hold `len` values and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn bd_kinetic_integrate(
    model: *const BdModel,
    rho0: *const f64,
    len: usize,
    t_end: f64,
    dt: f64,
    output_every: usize,
    out: *mut *mut BdTrajectory,
) -> BdStatus {
    guard(|| {
        let m = as_ref(model, "model")?;
        let values = slice(rho0, len, "rho0")?.to_vec();
        let field = lib(DensityField::new(m.grid.domain.clone(), values))?;
        let traj = lib(integrate(
            &field,
            &m.grid,
            IntegrateOptions::new(t_end, dt).every(output_every),
        ))?;
        write_out(out, "out", boxed(BdTrajectory { inner: traj }))
    })
}

/// Number of stored frames, or 0 for a null handle.
///
/// # Safety
/// `traj` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bd_trajectory_frames(traj: *const BdTrajectory) -> usize {
    traj.as_ref().map_or(0, |t| t.inner.times.len())
}

/// Time and field of frame `frame`; `values` must hold `len` = grid-size doubles.
///
/// # Safety
/// `traj` must be live, `time` valid, and `values` writable for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn bd_trajectory_frame(
    traj: *const BdTrajectory,
    frame: usize,
    time: *mut f64,
    values: *mut f64,
    len: usize,
) -> BdStatus {
    guard(|| {
        let t = as_ref(traj, "traj")?;
        let Some(field) = t.inner.fields.get(frame) else {
            set_error(format!(
                "frame {frame} out of range ({} frames)",
                t.inner.fields.len()
            ));
            return Err(BdStatus::InvalidArgument);
        };
        if len != field.values().len() {
            set_error(format!(
                "buffer holds {len} values, frame has {}",
                field.values().len()
            ));
            return Err(BdStatus::InvalidArgument);
        }
        if values.is_null() {
            return Err(null("values"));
        }
        std::slice::from_raw_parts_mut(values, len).copy_from_slice(field.values());
        write_out(time, "time", t.inner.times[frame])
    })
}

/// # Safety
/// `traj` must be null or come from [`bd_kinetic_integrate`].
#[no_mangle]
pub unsafe extern "C" fn bd_trajectory_free(traj: *mut BdTrajectory) {
    free(traj)
}

/// Ensemble-mean population at each of `n_times` increasing `times`,
/// from Poisson(`rho0`) starts; writes `n_times` values to `means`.
///
/// # Safety
/// `model` must be live; `rho0` holds `len` values; `times` and `means` hold `n_times`.
#[no_mangle]
pub unsafe extern "C" fn bd_ensemble_mean_population(
    model: *const BdModel,
    rho0: *const f64,
    len: usize,
    times: *const f64,
    n_times: usize,
    n_runs: usize,
    seed: u64,
    means: *mut f64,
) -> BdStatus {
    guard(|| {
        let m = as_ref(model, "model")?;
        let field = lib(DensityField::new(
            m.grid.domain.clone(),
            slice(rho0, len, "rho0")?.to_vec(),
        ))?;
        let ts = slice(times, n_times, "times")?.to_vec();
        let Some(&t_end) = ts.last() else {
            set_error("need at least one time");
            return Err(BdStatus::InvalidArgument);
        };
        let mut opts = EnsembleOptions::new(t_end, n_runs, seed);
        opts.snapshot_times = ts;
        opts.pair_r_max = 0.5 * m.grid.domain.edge();
        let ens = lib(run_ensemble(&m.params, &field, &opts))?;
        if means.is_null() {
            return Err(null("means"));
        }
        std::slice::from_raw_parts_mut(means, n_times).copy_from_slice(&ens.mean_population());
        Ok(())
    })
}

/// Run a TOML experiment config. `output_dir` may be null to use the config's.
/// Sets `*violated` to 1 when a certificate failed, and returns
/// [`BdStatus::CertificateViolated`] in that case.
///
/// # Safety
/// Strings must be NUL-terminated; `violated` may be null.
#[no_mangle]
pub unsafe extern "C" fn bd_run_config(
    path: *const c_char,
    output_dir: *const c_char,
    violated: *mut c_int,
) -> BdStatus {
    guard(|| {
        let cfg = path_arg(path, "path")?;
        let opts = RunOptions {
            output_dir: if output_dir.is_null() {
                None
            } else {
                Some(path_arg(output_dir, "output_dir")?)
            },
            ..RunOptions::default()
        };
        let report = lib(run_config_file(&cfg, &opts))?;
        if !violated.is_null() {
            violated.write(report.violated as c_int);
        }
        if report.violated {
            set_error("a certificate's hypotheses held but its conclusion failed");
            return Err(BdStatus::CertificateViolated);
        }
        Ok(())
    })
}
