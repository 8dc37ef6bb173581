//! C ABI over the monofix solvers.
//!
//! Every function returns an [`MfxStatus`] code unless noted. On failure the
//! thread-local message from [`mfx_last_error_message`] says why. Handles are
//! opaque and must be released with their `_free` function. Panics never
//! cross the boundary; they surface as `MFX_STATUS_INTERNAL`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;
use std::slice;

use monofix::cli::{run, RunConfig};
use monofix::engine::{
    matrix_certificate, solve, spectral_radius, ContractionOperator, EngineError, FixpointProblem,
    SolveOptions, StopRule, Verdict, SPECTRAL_MAX_ITER, SPECTRAL_TOLERANCE,
};
use monofix::fredholm::{
    fredholm_solve, FredholmProblem, GridSpace, Integrand, KernelBound, Quadrature,
};
use monofix::instances::{RealDistance, RealLine};
use monofix::space::{DistanceSpace, VectorProduct};
use nalgebra::{DMatrix, DVector};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MfxStatus {
    Ok = 0,
    InvalidArgument = 1,
    CertificateRefused = 2,
    NotConverged = 3,
    NullPointer = 4,
    Internal = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MfxVerdict {
    Certified = 0,
    Refuted = 1,
    Inconclusive = 2,
}

impl From<Verdict> for MfxVerdict {
    fn from(v: Verdict) -> Self {
        match v {
            Verdict::Certified => MfxVerdict::Certified,
            Verdict::Refuted => MfxVerdict::Refuted,
            Verdict::Inconclusive => MfxVerdict::Inconclusive,
        }
    }
}

/// Outcome of a solve: termination, iterate count, fixed point and the
/// JSON trace.
pub struct MfxTrace {
    converged: bool,
    iterations: usize,
    solution: Vec<f64>,
    json: CString,
}

/// Nyström problem under construction on a midpoint grid.
pub struct MfxFredholm {
    quad: Quadrature,
    kernel: Option<DMatrix<f64>>,
    rhs: Option<Vec<f64>>,
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

fn fail(status: MfxStatus, msg: impl Into<String>) -> MfxStatus {
    set_error(msg);
    status
}

fn guard(f: impl FnOnce() -> MfxStatus) -> MfxStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(MfxStatus::Internal, "internal panic"),
    }
}

fn status_for(e: &EngineError) -> MfxStatus {
    match e {
        EngineError::CertificateRefused { .. } | EngineError::NonMonotone { .. } => {
            MfxStatus::CertificateRefused
        }
        EngineError::DivergenceDetected { .. }
        | EngineError::OrbitContractionViolated { .. }
        | EngineError::NotMonotoneStart
        | EngineError::OrderViolated { .. } => MfxStatus::NotConverged,
        _ => MfxStatus::InvalidArgument,
    }
}

/// `n×n` row-major matrix from a raw pointer.
///
/// # Safety
/// `data` must point to `n*n` readable doubles.
unsafe fn read_matrix(data: *const f64, n: usize) -> Result<DMatrix<f64>, MfxStatus> {
    if data.is_null() {
        return Err(fail(MfxStatus::NullPointer, "matrix pointer is null"));
    }
    if n == 0 {
        return Err(fail(
            MfxStatus::InvalidArgument,
            "dimension must be positive",
        ));
    }
    let len = n
        .checked_mul(n)
        .ok_or_else(|| fail(MfxStatus::InvalidArgument, "dimension overflows"))?;
    let s = slice::from_raw_parts(data, len);
    Ok(DMatrix::from_row_slice(n, n, s))
}

/// # Safety
/// `data` must point to `n` readable doubles.
unsafe fn read_vec(data: *const f64, n: usize, name: &str) -> Result<Vec<f64>, MfxStatus> {
    if data.is_null() {
        return Err(fail(MfxStatus::NullPointer, format!("{name} is null")));
    }
    Ok(slice::from_raw_parts(data, n).to_vec())
}

fn finish_trace(trace: MfxTrace, out: *mut *mut MfxTrace) {
    // SAFETY: callers check `out` for null before solving.
    unsafe { *out = Box::into_raw(Box::new(trace)) };
}

/// Spectral radius of a non-negative `n×n` row-major matrix by power
/// iteration to relative tolerance `1e-13`.
///
/// # Safety
/// `mat` must point to `n*n` doubles; `out_radius` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mfx_spectral_radius(
    mat: *const f64,
    n: usize,
    out_radius: *mut f64,
) -> MfxStatus {
    guard(|| {
        if out_radius.is_null() {
            return fail(MfxStatus::NullPointer, "out_radius is null");
        }
        let m = match read_matrix(mat, n) {
            Ok(m) => m,
            Err(s) => return s,
        };
        match spectral_radius(&m, 1e-13, SPECTRAL_MAX_ITER) {
            Ok(est) => {
                *out_radius = est.radius;
                MfxStatus::Ok
            }
            Err(e) => fail(MfxStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// Certificate for `λ = L·` on `ℝⁿ₊`: certified when `ρ(L) < 1` with margin.
/// Writes the verdict and the bracket `[lower, upper]` on `ρ(L)`.
///
/// # Safety
/// `mat` must point to `n*n` doubles; the out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn mfx_matrix_certificate(
    mat: *const f64,
    n: usize,
    out_verdict: *mut MfxVerdict,
    out_lower: *mut f64,
    out_upper: *mut f64,
) -> MfxStatus {
    guard(|| {
        if out_verdict.is_null() || out_lower.is_null() || out_upper.is_null() {
            return fail(MfxStatus::NullPointer, "output pointer is null");
        }
        let m = match read_matrix(mat, n) {
            Ok(m) => m,
            Err(s) => return s,
        };
        match matrix_certificate(&m, SPECTRAL_TOLERANCE) {
            Ok(c) => {
                let est = c.spectral.expect("matrix certificate carries an estimate");
                *out_verdict = c.verdict.into();
                *out_lower = est.lower;
                *out_upper = est.upper;
                MfxStatus::Ok
            }
            Err(e) => fail(MfxStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// Picard iteration for `x ↦ A·x + b` on `ℝⁿ` with the vector distance.
/// `lambda` is the `n×n` contraction matrix, or null for `|A|`. Stops when
/// two consecutive step distances are below `2^-eps_level`.
///
/// `*out` receives a trace whenever the status is `MFX_STATUS_OK`,
/// `MFX_STATUS_CERTIFICATE_REFUSED` or `MFX_STATUS_NOT_CONVERGED`.
///
/// # Safety
/// `a` and `lambda` (if not null) point to `n*n` doubles, `b` and `x0` to
/// `n` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mfx_affine_solve(
    a: *const f64,
    b: *const f64,
    x0: *const f64,
    n: usize,
    lambda: *const f64,
    eps_level: u32,
    max_iter: u32,
    override_certificate: bool,
    out: *mut *mut MfxTrace,
) -> MfxStatus {
    guard(|| {
        if out.is_null() {
            return fail(MfxStatus::NullPointer, "out is null");
        }
        *out = ptr::null_mut();
        if eps_level == 0 {
            return fail(MfxStatus::InvalidArgument, "eps_level starts at 1");
        }
        let am = match read_matrix(a, n) {
            Ok(m) => m,
            Err(s) => return s,
        };
        let lm = if lambda.is_null() {
            am.abs()
        } else {
            match read_matrix(lambda, n) {
                Ok(m) => m,
                Err(s) => return s,
            }
        };
        let (bv, start) = match (read_vec(b, n, "b"), read_vec(x0, n, "x0")) {
            (Ok(b), Ok(x)) => (DVector::from_vec(b), x),
            (Err(s), _) | (_, Err(s)) => return s,
        };
        let space = match VectorProduct::new(RealLine::new(RealDistance::Absolute), n) {
            Ok(s) => s,
            Err(e) => return fail(MfxStatus::InvalidArgument, e.to_string()),
        };
        let op = match ContractionOperator::matrix(space.monoid(), lm) {
            Ok(op) => op,
            Err(e) => return fail(MfxStatus::InvalidArgument, e.to_string()),
        };
        let map = move |x: &Vec<f64>| {
            (&am * DVector::from_column_slice(x) + &bv)
                .iter()
                .copied()
                .collect()
        };
        let problem = FixpointProblem::new(&space, map, op, start).with_stop(StopRule {
            eps_level: eps_level as usize,
            max_iter: max_iter as usize,
        });
        let options = SolveOptions {
            override_certificate,
            ..SolveOptions::default()
        };
        let (trace, status) = match solve(&problem, &options) {
            Ok(t) if t.converged() => (t, MfxStatus::Ok),
            Ok(t) => {
                set_error(t.termination.label());
                (t, MfxStatus::NotConverged)
            }
            Err(f) => {
                let status = status_for(&f.error);
                set_error(f.error.to_string());
                if status == MfxStatus::InvalidArgument {
                    return status;
                }
                (*f.trace, status)
            }
        };
        let json = trace.to_json(&space).to_string();
        finish_trace(
            MfxTrace {
                converged: trace.converged(),
                iterations: trace.iterations(),
                solution: trace.fixpoint().cloned().unwrap_or_default(),
                json: CString::new(json).unwrap_or_default(),
            },
            out,
        );
        status
    })
}

/// True when the run converged. False for null.
///
/// # Safety
/// `trace` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mfx_trace_converged(trace: *const MfxTrace) -> bool {
    trace.as_ref().is_some_and(|t| t.converged)
}

/// Iterations performed. Zero for null.
///
/// # Safety
/// `trace` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mfx_trace_iterations(trace: *const MfxTrace) -> usize {
    trace.as_ref().map_or(0, |t| t.iterations)
}

/// Length of the fixed point, zero when the run did not converge.
///
/// # Safety
/// `trace` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mfx_trace_solution_len(trace: *const MfxTrace) -> usize {
    trace.as_ref().map_or(0, |t| t.solution.len())
}

/// Copies the fixed point into `out`, which holds `len` doubles.
///
/// # Safety
/// `trace` is a live handle and `out` points to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn mfx_trace_solution(
    trace: *const MfxTrace,
    out: *mut f64,
    len: usize,
) -> MfxStatus {
    guard(|| {
        let Some(t) = trace.as_ref() else {
            return fail(MfxStatus::NullPointer, "trace is null");
        };
        if out.is_null() {
            return fail(MfxStatus::NullPointer, "out is null");
        }
        if !t.converged {
            return fail(MfxStatus::NotConverged, "no fixed point");
        }
        if len < t.solution.len() {
            return fail(
                MfxStatus::InvalidArgument,
                format!("buffer holds {len}, need {}", t.solution.len()),
            );
        }
        ptr::copy_nonoverlapping(t.solution.as_ptr(), out, t.solution.len());
        MfxStatus::Ok
    })
}

/// JSON trace, valid until the handle is freed. Null for null.
///
/// # Safety
/// `trace` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mfx_trace_json(trace: *const MfxTrace) -> *const c_char {
    trace.as_ref().map_or(ptr::null(), |t| t.json.as_ptr())
}

/// # Safety
/// `trace` is null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mfx_trace_free(trace: *mut MfxTrace) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}

/// Midpoint grid with `nodes` cells on `[a, b]`. Null on invalid input.
#[no_mangle]
pub extern "C" fn mfx_fredholm_new(a: f64, b: f64, nodes: usize) -> *mut MfxFredholm {
    clear_error();
    match Quadrature::midpoint(a, b, nodes) {
        Ok(quad) => Box::into_raw(Box::new(MfxFredholm {
            quad,
            kernel: None,
            rhs: None,
        })),
        Err(e) => {
            set_error(e.to_string());
            ptr::null_mut()
        }
    }
}

/// Number of quadrature nodes; zero for null.
///
/// # Safety
/// `h` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mfx_fredholm_node_count(h: *const MfxFredholm) -> usize {
    h.as_ref().map_or(0, |h| h.quad.len())
}

/// Copies the quadrature nodes into `out`.
///
/// # Safety
/// `h` is a live handle and `out` points to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn mfx_fredholm_nodes(
    h: *const MfxFredholm,
    out: *mut f64,
    len: usize,
) -> MfxStatus {
    guard(|| {
        let Some(h) = h.as_ref() else {
            return fail(MfxStatus::NullPointer, "handle is null");
        };
        if out.is_null() {
            return fail(MfxStatus::NullPointer, "out is null");
        }
        if len < h.quad.len() {
            return fail(MfxStatus::InvalidArgument, "buffer too small");
        }
        ptr::copy_nonoverlapping(h.quad.nodes().as_ptr(), out, h.quad.len());
        MfxStatus::Ok
    })
}

/// Linear kernel `K(tᵢ, sⱼ)` at the nodes, `n×n` row-major; `|K|` is the
/// dominating bound.
///
/// # Safety
/// `h` is a live handle and `k` points to `n*n` doubles.
#[no_mangle]
pub unsafe extern "C" fn mfx_fredholm_set_kernel(
    h: *mut MfxFredholm,
    k: *const f64,
    n: usize,
) -> MfxStatus {
    guard(|| {
        let Some(h) = h.as_mut() else {
            return fail(MfxStatus::NullPointer, "handle is null");
        };
        if n != h.quad.len() {
            return fail(
                MfxStatus::InvalidArgument,
                format!("kernel is {n}×{n}, grid has {} nodes", h.quad.len()),
            );
        }
        match read_matrix(k, n) {
            Ok(m) if m.iter().all(|v| v.is_finite()) => {
                h.kernel = Some(m);
                MfxStatus::Ok
            }
            Ok(_) => fail(MfxStatus::InvalidArgument, "kernel has non-finite entries"),
            Err(s) => s,
        }
    })
}

/// Right-hand side `f(tᵢ)` at the nodes.
///
/// # Safety
/// `h` is a live handle and `f` points to `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn mfx_fredholm_set_rhs(
    h: *mut MfxFredholm,
    f: *const f64,
    n: usize,
) -> MfxStatus {
    guard(|| {
        let Some(h) = h.as_mut() else {
            return fail(MfxStatus::NullPointer, "handle is null");
        };
        if n != h.quad.len() {
            return fail(
                MfxStatus::InvalidArgument,
                format!("rhs has {n} values, grid has {} nodes", h.quad.len()),
            );
        }
        match read_vec(f, n, "rhs") {
            Ok(v) if v.iter().all(|x| x.is_finite()) => {
                h.rhs = Some(v);
                MfxStatus::Ok
            }
            Ok(_) => fail(MfxStatus::InvalidArgument, "rhs has non-finite entries"),
            Err(s) => s,
        }
    })
}

/// Certifies and solves the configured problem. `*out` receives a trace
/// under the same rule as [`mfx_affine_solve`]; the solution holds one value
/// per node.
///
/// # Safety
/// `h` is a live handle and `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn mfx_fredholm_solve(
    h: *const MfxFredholm,
    eps_level: u32,
    override_certificate: bool,
    out: *mut *mut MfxTrace,
) -> MfxStatus {
    guard(|| {
        let Some(h) = h.as_ref() else {
            return fail(MfxStatus::NullPointer, "handle is null");
        };
        if out.is_null() {
            return fail(MfxStatus::NullPointer, "out is null");
        }
        *out = ptr::null_mut();
        let (Some(k), Some(f)) = (&h.kernel, &h.rhs) else {
            return fail(
                MfxStatus::InvalidArgument,
                "set kernel and rhs before solving",
            );
        };
        if eps_level == 0 {
            return fail(MfxStatus::InvalidArgument, "eps_level starts at 1");
        }
        let built = KernelBound::from_values(&h.quad, k.abs()).and_then(|bound| {
            let rhs = DMatrix::from_column_slice(f.len(), 1, f);
            FredholmProblem::new(h.quad.clone(), rhs, Integrand::Linear(k.clone()), bound)
        });
        let mut problem = match built {
            Ok(p) => p,
            Err(e) => return fail(MfxStatus::InvalidArgument, e.to_string()),
        };
        problem.stop.eps_level = eps_level as usize;
        let options = SolveOptions {
            override_certificate,
            ..SolveOptions::default()
        };
        let run = match fredholm_solve(&problem, &options) {
            Ok(r) => r,
            Err(e) => return fail(MfxStatus::InvalidArgument, e.to_string()),
        };
        let space = match GridSpace::new(h.quad.nodes().to_vec(), 1) {
            Ok(s) => s,
            Err(e) => return fail(MfxStatus::Internal, e.to_string()),
        };
        let (trace, status) = match run.result {
            Ok(t) if t.converged() => (t, MfxStatus::Ok),
            Ok(t) => {
                set_error(t.termination.label());
                (t, MfxStatus::NotConverged)
            }
            Err(f) => {
                let status = status_for(&f.error);
                set_error(f.error.to_string());
                if status == MfxStatus::InvalidArgument {
                    return status;
                }
                (*f.trace, status)
            }
        };
        let mut json = trace.to_json(&space);
        json["certificate_routes"] = serde_json::to_value(&run.certificate).unwrap_or_default();
        finish_trace(
            MfxTrace {
                converged: trace.converged(),
                iterations: trace.iterations(),
                solution: trace
                    .fixpoint()
                    .map(|x| x.iter().copied().collect())
                    .unwrap_or_default(),
                json: CString::new(json.to_string()).unwrap_or_default(),
            },
            out,
        );
        status
    })
}

/// # Safety
/// `h` is null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mfx_fredholm_free(h: *mut MfxFredholm) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Runs the command-line pipeline and returns its exit code: 0 converged or
/// verified, 1 input error, 2 certificate refused, 3 not converged or
/// verification failed. `seed < 0` selects the default seed; `eps_level`
/// and `max_iter` of 0 keep the problem file's values.
///
/// # Safety
/// `mode`, `problem` and `out_dir` are NUL-terminated UTF-8 strings.
#[no_mangle]
pub unsafe extern "C" fn mfx_run(
    mode: *const c_char,
    problem: *const c_char,
    out_dir: *const c_char,
    seed: i64,
    eps_level: u32,
    max_iter: u32,
    override_certificate: bool,
) -> i32 {
    clear_error();
    let text = |p: *const c_char, name: &str| -> Result<String, MfxStatus> {
        if p.is_null() {
            return Err(fail(MfxStatus::NullPointer, format!("{name} is null")));
        }
        CStr::from_ptr(p)
            .to_str()
            .map(str::to_owned)
            .map_err(|_| fail(MfxStatus::InvalidArgument, format!("{name} is not UTF-8")))
    };
    let (mode, problem, out) = match (
        text(mode, "mode"),
        text(problem, "problem"),
        text(out_dir, "out_dir"),
    ) {
        (Ok(m), Ok(p), Ok(o)) => (m, p, o),
        (Err(s), _, _) | (_, Err(s), _) | (_, _, Err(s)) => return s as i32,
    };
    let config = RunConfig {
        mode,
        problem: PathBuf::from(problem),
        out: PathBuf::from(out),
        seed: u64::try_from(seed).ok(),
        eps_level: (eps_level > 0).then_some(eps_level as usize),
        max_iter: (max_iter > 0).then_some(max_iter as usize),
        override_certificate,
        horizon: None,
    };
    match catch_unwind(AssertUnwindSafe(|| run(&config))) {
        Ok(outcome) => {
            if let Some(err) = outcome.summary.get("error").and_then(|e| e.as_str()) {
                set_error(err);
            }
            outcome.exit.code()
        }
        Err(_) => fail(MfxStatus::Internal, "internal panic") as i32,
    }
}

/// Message for the last failure on this thread, or null. Valid until the
/// next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn mfx_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}
