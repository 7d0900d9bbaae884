//! C ABI over `landslide-core`.
//!
//! Objects cross the boundary as opaque handles created by `*_new` functions and released
//! by the matching `*_free`. Every fallible call returns an [`LsStatus`]; on failure the
//! message is kept per thread and can be read with [`ls_last_error_message`]. Panics are
//! caught and reported as [`LsStatus::Internal`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use landslide_core::algebra::to_poincare_ball;
use landslide_core::frame::{build_connection, flatness_residual, integrate_frame, ConnectionForm};
use landslide_core::gauss::{residual_sup, solve_profile_ode, MetricData};
use landslide_core::grid::DomainGrid;
use landslide_core::holonomy::{complex_landslide, frame_holonomy_at_sqrt_q};
use landslide_core::surface::{spectral_immersion, SurfaceMesh};
use landslide_core::Error;
use num_complex::Complex64;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Degenerate = 3,
    NoConvergence = 4,
    Flatness = 5,
    SpectralOnCircle = 6,
    Io = 7,
    Internal = 8,
}

/// Solved data on a cylinder together with its flat connection.
pub struct LsData {
    data: MetricData,
    conn: ConnectionForm,
}

/// Immersed surface at one spectral value.
pub struct LsSurface {
    mesh: SurfaceMesh,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> LsStatus {
    match e {
        Error::InvalidArgument(_) | Error::Config(_) => LsStatus::InvalidArgument,
        Error::DegenerateConfiguration(_)
        | Error::DegenerateProfile(_)
        | Error::DegenerateSolution { .. }
        | Error::DegenerateData(_)
        | Error::DegenerateForms(_)
        | Error::ProfileBlowUp(_) => LsStatus::Degenerate,
        Error::NoConvergence { .. } => LsStatus::NoConvergence,
        Error::FlatnessTooLarge { .. } => LsStatus::Flatness,
        Error::SpectralOnCircle(_) => LsStatus::SpectralOnCircle,
        Error::Io(_) | Error::Json(_) => LsStatus::Io,
    }
}

fn guard(f: impl FnOnce() -> Result<(), LsStatus>) -> LsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => LsStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic".into());
            LsStatus::Internal
        }
    }
}

fn check<T>(r: landslide_core::Result<T>) -> Result<T, LsStatus> {
    r.map_err(|e| {
        set_error(e.to_string());
        status_of(&e)
    })
}

fn non_null<T>(p: *const T) -> Result<(), LsStatus> {
    if p.is_null() {
        set_error("null pointer argument".into());
        Err(LsStatus::NullPointer)
    } else {
        Ok(())
    }
}

/// Copies the last error message of this thread into `buf` (NUL-terminated, truncated to
/// `len`) and returns the full message length without the terminator, 0 if none.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn ls_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else { return 0 };
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Solves the y-dependent structure equations on an `nx × ny` cylinder of size
/// `lx × ly` with constant `Q = q_re + i q_im` and `u(0) = u0`.
///
/// # Safety
/// `out` must be valid for writing one pointer.
#[no_mangle]
pub unsafe extern "C" fn ls_profile_new(
    s: f64,
    q_re: f64,
    q_im: f64,
    u0: f64,
    nx: usize,
    ny: usize,
    lx: f64,
    ly: f64,
    out: *mut *mut LsData,
) -> LsStatus {
    guard(|| {
        non_null(out)?;
        let grid = check(DomainGrid::cylinder(nx, ny, lx, ly))?;
        let data = check(solve_profile_ode(s, Complex64::new(q_re, q_im), u0, &grid))?;
        let conn = build_connection(&data);
        *out = Box::into_raw(Box::new(LsData { data, conn }));
        Ok(())
    })
}

/// # Safety
/// `data` must be null or a handle from [`ls_profile_new`] not freed before.
#[no_mangle]
pub unsafe extern "C" fn ls_data_free(data: *mut LsData) {
    if !data.is_null() {
        drop(Box::from_raw(data));
    }
}

/// Sup-norm of the structure-equation residual.
///
/// # Safety
/// `data` must be a live handle and `out` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn ls_data_gauss_residual(data: *const LsData, out: *mut f64) -> LsStatus {
    guard(|| {
        non_null(data)?;
        non_null(out)?;
        *out = residual_sup(&(*data).data);
        Ok(())
    })
}

/// Interior sup-norm of the zero-curvature defect at `λ`.
///
/// # Safety
/// `data` must be a live handle and `out` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn ls_flatness_residual(data: *const LsData, l_re: f64, l_im: f64, out: *mut f64) -> LsStatus {
    guard(|| {
        non_null(data)?;
        non_null(out)?;
        *out = flatness_residual(&(*data).conn, Complex64::new(l_re, l_im));
        Ok(())
    })
}

/// Loop holonomy around the cylinder at `μ = √q`, written row-major as
/// `re₁₁, im₁₁, re₁₂, im₁₂, re₂₁, im₂₁, re₂₂, im₂₂`.
///
/// # Safety
/// `data` must be a live handle and `out` valid for 8 doubles.
#[no_mangle]
pub unsafe extern "C" fn ls_frame_holonomy(data: *const LsData, q_re: f64, q_im: f64, out: *mut f64) -> LsStatus {
    guard(|| {
        non_null(data)?;
        non_null(out)?;
        let d = &*data;
        let rec = check(frame_holonomy_at_sqrt_q(&d.conn, Complex64::new(q_re, q_im), d.data.grid.ny / 2))?;
        let m = rec.matrix.matrix();
        let vals = [m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]];
        for (k, v) in vals.iter().enumerate() {
            *out.add(2 * k) = v.re;
            *out.add(2 * k + 1) = v.im;
        }
        Ok(())
    })
}

/// Runs the complex landslide at `q` with `0 < |q| < 1` and writes the trace mismatch
/// between the frame holonomy and the holonomy of the developing map.
///
/// # Safety
/// `data` must be a live handle and `out` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn ls_complex_landslide(data: *const LsData, q_re: f64, q_im: f64, out: *mut f64) -> LsStatus {
    guard(|| {
        non_null(data)?;
        non_null(out)?;
        let d = &*data;
        let st = check(complex_landslide(&d.data, &d.conn, Complex64::new(q_re, q_im), None))?;
        match st.compare_residual {
            Some(r) => {
                *out = r;
                Ok(())
            }
            None => {
                set_error("no developing map on the unit circle".into());
                Err(LsStatus::SpectralOnCircle)
            }
        }
    })
}

/// Surface at `λ₀` with `0 < |λ₀| < 1`, frame based at the middle of the first column.
///
/// # Safety
/// `data` must be a live handle and `out` valid for writing one pointer.
#[no_mangle]
pub unsafe extern "C" fn ls_surface_new(data: *const LsData, l_re: f64, l_im: f64, out: *mut *mut LsSurface) -> LsStatus {
    guard(|| {
        non_null(data)?;
        non_null(out)?;
        let d = &*data;
        let frame = check(integrate_frame(&d.conn, Complex64::new(l_re, l_im), (0, d.data.grid.ny / 2)))?;
        let mesh = check(spectral_immersion(&frame))?;
        *out = Box::into_raw(Box::new(LsSurface { mesh }));
        Ok(())
    })
}

/// # Safety
/// `surface` must be null or a handle from [`ls_surface_new`] not freed before.
#[no_mangle]
pub unsafe extern "C" fn ls_surface_free(surface: *mut LsSurface) {
    if !surface.is_null() {
        drop(Box::from_raw(surface));
    }
}

/// Number of vertices, 0 for a null handle.
///
/// # Safety
/// `surface` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ls_surface_vertex_count(surface: *const LsSurface) -> usize {
    if surface.is_null() {
        0
    } else {
        (*surface).mesh.f.data.len()
    }
}

/// Writes Poincaré-ball coordinates `x, y, z` of every vertex, row by row. `len` is the
/// capacity of `buf` in doubles and must be at least three times the vertex count.
///
/// # Safety
/// `surface` must be a live handle and `buf` valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ls_surface_vertices(surface: *const LsSurface, buf: *mut f64, len: usize) -> LsStatus {
    guard(|| {
        non_null(surface)?;
        non_null(buf)?;
        let pts = &(*surface).mesh.f.data;
        if len < 3 * pts.len() {
            set_error(format!("buffer holds {len} doubles, need {}", 3 * pts.len()));
            return Err(LsStatus::InvalidArgument);
        }
        for (k, p) in pts.iter().enumerate() {
            let b = to_poincare_ball(p);
            std::ptr::copy_nonoverlapping(b.as_ptr(), buf.add(3 * k), 3);
        }
        Ok(())
    })
}
