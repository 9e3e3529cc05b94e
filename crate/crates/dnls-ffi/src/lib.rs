//! C interface to the distorted transform, the V operators and the evolution state.
//!
//! Complex arrays cross the boundary as interleaved doubles (re, im), `2 * n` values for a
//! grid of `n` nodes. Position arrays are in natural order starting at x = -L, frequency
//! arrays in FFT order. Every fallible call returns a `DnlsStatus`; on failure the message
//! is available from `dnls_last_error` until the next failing call on the same thread.

use dnls::dft::DistortedPlan;
use dnls::propagator::{linear_flow, EvolutionState};
use dnls::vops::VOperators;
use dnls::{ComplexField, Error, GridSpec, ScatteringCoeffs, Space, C64};
use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DnlsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidGrid = 3,
    Domain = 4,
    BoundaryMass = 5,
    MassDrift = 6,
    Precondition = 7,
    NonFinite = 8,
    Other = 9,
    Panic = 10,
}

/// Distorted Fourier plan for one grid and potential strength.
pub struct DnlsPlan {
    plan: Arc<DistortedPlan>,
}

/// V(t) and its inverse for one potential strength.
pub struct DnlsVops {
    ops: VOperators,
}

/// Strang evolution of the cubic equation on a plan's grid.
pub struct DnlsState {
    state: EvolutionState,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> DnlsStatus {
    match e {
        Error::InvalidGrid(_) | Error::GridMismatch(_) => DnlsStatus::InvalidGrid,
        Error::Domain(_) => DnlsStatus::Domain,
        Error::BoundaryMass { .. } | Error::BandEdge { .. } => DnlsStatus::BoundaryMass,
        Error::MassDrift { .. } => DnlsStatus::MassDrift,
        Error::Precondition(_) => DnlsStatus::Precondition,
        Error::NonFinite(_) => DnlsStatus::NonFinite,
        Error::Config { .. } => DnlsStatus::InvalidArgument,
        _ => DnlsStatus::Other,
    }
}

enum Failure {
    Null(&'static str),
    Arg(String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> DnlsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DnlsStatus::Ok,
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            DnlsStatus::NullPointer
        }
        Ok(Err(Failure::Arg(msg))) => {
            set_error(msg);
            DnlsStatus::InvalidArgument
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".to_string());
            DnlsStatus::Panic
        }
    }
}

unsafe fn reference<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn mutable<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(what))
}

unsafe fn read_field(
    grid: GridSpec,
    data: *const f64,
    space: Space,
) -> Result<ComplexField, Failure> {
    if data.is_null() {
        return Err(Failure::Null("input array"));
    }
    let raw = std::slice::from_raw_parts(data, 2 * grid.len());
    let values = raw.chunks_exact(2).map(|c| C64::new(c[0], c[1])).collect();
    Ok(ComplexField::new(grid, values, space)?)
}

unsafe fn write_field(f: &ComplexField, out: *mut f64) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::Null("output array"));
    }
    let dst = std::slice::from_raw_parts_mut(out, 2 * f.len());
    for (c, v) in dst.chunks_exact_mut(2).zip(&f.values) {
        c[0] = v.re;
        c[1] = v.im;
    }
    Ok(())
}

fn box_out<T>(out: *mut *mut T, v: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::Null("handle output"));
    }
    unsafe { *out = Box::into_raw(Box::new(v)) };
    Ok(())
}

/// Message of the last failing call on this thread, or null. Valid until the next failure.
#[no_mangle]
pub extern "C" fn dnls_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub extern "C" fn dnls_clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

/// Transmission and reflection coefficients at frequency `xi`, each as (re, im).
///
/// # Safety
/// `t_out` and `r_out` must each point to two writable doubles.
#[no_mangle]
pub unsafe extern "C" fn dnls_scattering(
    q: f64,
    xi: f64,
    t_out: *mut f64,
    r_out: *mut f64,
) -> DnlsStatus {
    guard(|| {
        let c = ScatteringCoeffs::new(q)?;
        if !xi.is_finite() {
            return Err(Failure::Arg(format!("xi must be finite, got {xi}")));
        }
        let t = mutable(t_out as *mut [f64; 2], "t_out")?;
        let r = mutable(r_out as *mut [f64; 2], "r_out")?;
        let (tv, rv) = (c.transmission(xi), c.reflection(xi));
        *t = [tv.re, tv.im];
        *r = [rv.re, rv.im];
        Ok(())
    })
}

/// Fresnel boundary function Fr(y) for y >= 0, written as (re, im).
///
/// # Safety
/// `out` must point to two writable doubles.
#[no_mangle]
pub unsafe extern "C" fn dnls_fresnel_fr(y: f64, out: *mut f64) -> DnlsStatus {
    guard(|| {
        let v = dnls::fresnel::fresnel_fr(y)?;
        *mutable(out as *mut [f64; 2], "out")? = [v.re, v.im];
        Ok(())
    })
}

/// Build a plan on [-l, l) with `n` nodes for strength `q`.
///
/// # Safety
/// `out` must be a valid pointer; the handle is released with `dnls_plan_free`.
#[no_mangle]
pub unsafe extern "C" fn dnls_plan_new(
    l: f64,
    n: usize,
    q: f64,
    out: *mut *mut DnlsPlan,
) -> DnlsStatus {
    guard(|| {
        let plan = DistortedPlan::new(GridSpec::new(l, n)?, ScatteringCoeffs::new(q)?)?;
        box_out(
            out,
            DnlsPlan {
                plan: Arc::new(plan),
            },
        )
    })
}

/// # Safety
/// `plan` must come from `dnls_plan_new` and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn dnls_plan_free(plan: *mut DnlsPlan) {
    if !plan.is_null() {
        drop(Box::from_raw(plan));
    }
}

/// Number of grid nodes, or 0 for a null handle.
///
/// # Safety
/// `plan` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dnls_plan_len(plan: *const DnlsPlan) -> usize {
    plan.as_ref().map_or(0, |p| p.plan.grid().len())
}

/// # Safety
/// `input` and `out` must hold `2 n` doubles; they may alias.
#[no_mangle]
pub unsafe extern "C" fn dnls_plan_forward(
    plan: *const DnlsPlan,
    input: *const f64,
    out: *mut f64,
) -> DnlsStatus {
    guard(|| {
        let p = &reference(plan, "plan")?.plan;
        let f = read_field(p.grid(), input, Space::Position)?;
        write_field(&p.forward(&f)?, out)
    })
}

/// # Safety
/// `input` and `out` must hold `2 n` doubles; they may alias.
#[no_mangle]
pub unsafe extern "C" fn dnls_plan_inverse(
    plan: *const DnlsPlan,
    input: *const f64,
    out: *mut f64,
) -> DnlsStatus {
    guard(|| {
        let p = &reference(plan, "plan")?.plan;
        let f = read_field(p.grid(), input, Space::Frequency)?;
        write_field(&p.inverse(&f)?, out)
    })
}

/// Linear propagator U(t) applied to position samples.
///
/// # Safety
/// `input` and `out` must hold `2 n` doubles; they may alias.
#[no_mangle]
pub unsafe extern "C" fn dnls_linear_flow(
    plan: *const DnlsPlan,
    t: f64,
    input: *const f64,
    out: *mut f64,
) -> DnlsStatus {
    guard(|| {
        let p = &reference(plan, "plan")?.plan;
        let f = read_field(p.grid(), input, Space::Position)?;
        write_field(&linear_flow(p, &f, t)?, out)
    })
}

/// # Safety
/// `out` must be a valid pointer; the handle is released with `dnls_vops_free`.
#[no_mangle]
pub unsafe extern "C" fn dnls_vops_new(q: f64, out: *mut *mut DnlsVops) -> DnlsStatus {
    guard(|| {
        let ops = VOperators::new(ScatteringCoeffs::new(q)?);
        box_out(out, DnlsVops { ops })
    })
}

/// # Safety
/// `ops` must come from `dnls_vops_new` and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn dnls_vops_free(ops: *mut DnlsVops) {
    if !ops.is_null() {
        drop(Box::from_raw(ops));
    }
}

/// V(t) (or its inverse when `inverse` is true) on samples over [-l, l) with `n` nodes.
/// The output lives on the same grid.
///
/// # Safety
/// `input` and `out` must hold `2 n` doubles; they may alias.
#[no_mangle]
pub unsafe extern "C" fn dnls_vops_apply(
    ops: *const DnlsVops,
    l: f64,
    n: usize,
    t: f64,
    inverse: bool,
    input: *const f64,
    out: *mut f64,
) -> DnlsStatus {
    guard(|| {
        let ops = &reference(ops, "ops")?.ops;
        let g = GridSpec::new(l, n)?;
        let f = read_field(g, input, Space::Position)?;
        let r = if inverse {
            ops.vinv_on(t, &f, g)?
        } else {
            ops.v_on(t, &f, g)?
        };
        write_field(&r, out)
    })
}

/// Start an evolution at t = 0 from position samples `u0` on the plan's grid.
///
/// # Safety
/// `u0` must hold `2 n` doubles and `out` be a valid pointer. The state keeps its own
/// reference to the plan, so the plan handle may be freed first.
#[no_mangle]
pub unsafe extern "C" fn dnls_state_new(
    plan: *const DnlsPlan,
    lambda: f64,
    u0: *const f64,
    out: *mut *mut DnlsState,
) -> DnlsStatus {
    guard(|| {
        let p = reference(plan, "plan")?.plan.clone();
        let f = read_field(p.grid(), u0, Space::Position)?;
        let state = EvolutionState::new(p, f, lambda)?;
        box_out(out, DnlsState { state })
    })
}

/// # Safety
/// `state` must come from `dnls_state_new` and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn dnls_state_free(state: *mut DnlsState) {
    if !state.is_null() {
        drop(Box::from_raw(state));
    }
}

/// Step with Strang splitting until `t_end`, the last step shortened to land on it.
///
/// # Safety
/// `state` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn dnls_state_advance(
    state: *mut DnlsState,
    t_end: f64,
    dt: f64,
) -> DnlsStatus {
    guard(|| {
        let s = &mut mutable(state, "state")?.state;
        if !(dt > 0.0 && t_end.is_finite()) {
            return Err(Failure::Arg(format!(
                "need dt > 0 and finite t_end, got dt={dt}, t_end={t_end}"
            )));
        }
        Ok(s.advance_to(t_end, dt)?)
    })
}

/// Current time, samples, relative mass drift and energy. Any output pointer may be null.
///
/// # Safety
/// `state` must be a live handle; `u_out`, when set, must hold `2 n` doubles.
#[no_mangle]
pub unsafe extern "C" fn dnls_state_read(
    state: *const DnlsState,
    t_out: *mut f64,
    u_out: *mut f64,
    mass_drift_out: *mut f64,
    energy_out: *mut f64,
) -> DnlsStatus {
    guard(|| {
        let s = &reference(state, "state")?.state;
        if let Some(t) = t_out.as_mut() {
            *t = s.t;
        }
        if !u_out.is_null() {
            write_field(&s.u, u_out)?;
        }
        if let Some(m) = mass_drift_out.as_mut() {
            *m = s.mass_drift();
        }
        if let Some(e) = energy_out.as_mut() {
            *e = s.energy()?;
        }
        Ok(())
    })
}
