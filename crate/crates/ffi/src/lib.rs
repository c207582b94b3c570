//! C ABI for `gslab`.
//!
//! Every function returns a [`GslabStatus`]. On failure the message is kept
//! per thread and can be copied out with [`gslab_last_error_message`].
//! Operators are opaque handles from `gslab_operator_build`, released by
//! `gslab_operator_free`.

use std::cell::RefCell;
use std::ffi::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};

use gslab::bessel::{bessel_j, Order};
use gslab::maximal::{q_star_ratio, RadialDatum};
use gslab::operators::{
    build_kernel, op_norm_lower, operator_norm, schur_bound, DiscreteOperator, Grid, KernelSpec, NormOptions, Piece,
    PowerOptions, SweepGrids,
};
use gslab::Error;
use gslab::Complex64;

/// Result codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GslabStatus {
    Ok = 0,
    Domain = 1,
    Overflow = 2,
    NonConvergence = 3,
    Hypothesis = 4,
    Config = 5,
    Input = 6,
    DimensionMismatch = 7,
    Io = 8,
    NullPointer = 9,
    Panic = 10,
}

/// Kernel piece selector; `Full` is the undecomposed kernel.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GslabPiece {
    Full = 0,
    T1 = 1,
    T2 = 2,
    T3 = 3,
    T4 = 4,
    T5 = 5,
    T6 = 6,
}

impl From<GslabPiece> for Piece {
    fn from(p: GslabPiece) -> Self {
        match p {
            GslabPiece::Full => Piece::Full,
            GslabPiece::T1 => Piece::T1,
            GslabPiece::T2 => Piece::T2,
            GslabPiece::T3 => Piece::T3,
            GslabPiece::T4 => Piece::T4,
            GslabPiece::T5 => Piece::T5,
            GslabPiece::T6 => Piece::T6,
        }
    }
}

/// Opaque discrete operator `K[j, i]` on an r-grid × s-grid.
pub struct GslabOperator(DiscreteOperator);

/// Grid resolution for operator construction and norm estimates.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct GslabGrids {
    pub r_points: usize,
    pub s_order: usize,
    pub t_points: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn status_of(e: &Error) -> GslabStatus {
    match e {
        Error::Domain(_) => GslabStatus::Domain,
        Error::Overflow(_) => GslabStatus::Overflow,
        Error::NonConvergence { .. } => GslabStatus::NonConvergence,
        Error::Hypothesis(_) => GslabStatus::Hypothesis,
        Error::Config(_) => GslabStatus::Config,
        Error::Input(_) => GslabStatus::Input,
        Error::DimensionMismatch { .. } => GslabStatus::DimensionMismatch,
        Error::Io(_) | Error::Json(_) | Error::Csv(_) => GslabStatus::Io,
    }
}

fn fail(code: GslabStatus, msg: String) -> GslabStatus {
    LAST_ERROR.with(|m| *m.borrow_mut() = msg);
    code
}

fn guard<F: FnOnce() -> Result<(), GslabStatus>>(f: F) -> GslabStatus {
    LAST_ERROR.with(|m| m.borrow_mut().clear());
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => GslabStatus::Ok,
        Ok(Err(code)) => code,
        Err(_) => fail(GslabStatus::Panic, "internal panic".into()),
    }
}

fn lift<T>(r: gslab::Result<T>) -> Result<T, GslabStatus> {
    r.map_err(|e| fail(status_of(&e), e.to_string()))
}

fn out<'a, T>(p: *mut T) -> Result<&'a mut T, GslabStatus> {
    // SAFETY: the caller passes either null or a valid, writable pointer.
    unsafe { p.as_mut() }.ok_or_else(|| fail(GslabStatus::NullPointer, "null output pointer".into()))
}

fn slice<'a, T>(p: *const T, n: usize) -> Result<&'a [T], GslabStatus> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(fail(GslabStatus::NullPointer, "null input array".into()));
    }
    // SAFETY: the caller guarantees `n` readable elements at `p`.
    Ok(unsafe { std::slice::from_raw_parts(p, n) })
}

fn order(two_nu: u32) -> Result<Order, GslabStatus> {
    if two_nu > Order::MAX_TWO_NU {
        return Err(fail(GslabStatus::Domain, format!("2ν = {two_nu} exceeds {}", Order::MAX_TWO_NU)));
    }
    Ok(Order::from_two_nu(two_nu))
}

fn grids(g: GslabGrids, interval: (f64, f64)) -> (Grid, Grid, Vec<f64>) {
    let base = SweepGrids::default();
    SweepGrids { r_points: g.r_points.max(1), s_order: g.s_order.max(2), t_points: g.t_points.max(1), ..base }
        .build(interval)
}

/// Copies the last error message of this thread, NUL-terminated and
/// truncated to `len` bytes. Returns the full message length.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn gslab_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|m| {
        let m = m.borrow();
        if !buf.is_null() && len > 0 {
            let n = m.len().min(len - 1);
            // SAFETY: `buf` has `len > n` writable bytes.
            unsafe {
                std::ptr::copy_nonoverlapping(m.as_ptr(), buf.cast::<u8>(), n);
                *buf.add(n) = 0;
            }
        }
        m.len()
    })
}

/// `J_ν(x)` for `ν = two_nu / 2` with an absolute error bound.
///
/// # Safety
/// `value` must be valid for writes; `err_bound` may be null.
#[no_mangle]
pub unsafe extern "C" fn gslab_bessel_j(two_nu: u32, x: f64, value: *mut f64, err_bound: *mut f64) -> GslabStatus {
    guard(|| {
        let v = lift(bessel_j(order(two_nu)?, x))?;
        *out(value)? = v.value;
        if !err_bound.is_null() {
            *out(err_bound)? = v.abs_error_bound;
        }
        Ok(())
    })
}

/// Builds the discretized kernel of `piece` on `I = [lo, hi]` with `t ≡ 0`.
///
/// # Safety
/// `handle` must be valid for writes. Release the result with [`gslab_operator_free`].
#[no_mangle]
pub unsafe extern "C" fn gslab_operator_build(
    piece: GslabPiece,
    two_nu: u32,
    lo: f64,
    hi: f64,
    alpha: f64,
    grid: GslabGrids,
    handle: *mut *mut GslabOperator,
) -> GslabStatus {
    guard(|| {
        let slot = out(handle)?;
        *slot = std::ptr::null_mut();
        let spec = KernelSpec::new(piece.into(), order(two_nu)?, (lo, hi), alpha);
        lift(spec.validate())?;
        let (s, r, _) = grids(grid, (lo, hi));
        let op = lift(build_kernel(&spec, &s, &r))?;
        *slot = Box::into_raw(Box::new(GslabOperator(op)));
        Ok(())
    })
}

/// Releases an operator; null is ignored.
///
/// # Safety
/// `op` must come from [`gslab_operator_build`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn gslab_operator_free(op: *mut GslabOperator) {
    if !op.is_null() {
        // SAFETY: created by Box::into_raw in gslab_operator_build.
        drop(unsafe { Box::from_raw(op) });
    }
}

fn op_ref<'a>(op: *const GslabOperator) -> Result<&'a DiscreteOperator, GslabStatus> {
    // SAFETY: the caller passes a live handle or null.
    unsafe { op.as_ref() }.map(|o| &o.0).ok_or_else(|| fail(GslabStatus::NullPointer, "null operator handle".into()))
}

/// Row and column counts.
///
/// # Safety
/// `op` must be a live handle; `rows` and `cols` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gslab_operator_dims(op: *const GslabOperator, rows: *mut usize, cols: *mut usize) -> GslabStatus {
    guard(|| {
        let o = op_ref(op)?;
        *out(rows)? = o.rows;
        *out(cols)? = o.cols;
        Ok(())
    })
}

/// `y = K g` with complex vectors stored as interleaved `(re, im)` pairs:
/// `g` has `2·cols` doubles, `y` receives `2·rows`.
///
/// # Safety
/// `g` must hold `2·g_len_complex` doubles and `y` have room for `2·rows`.
#[no_mangle]
pub unsafe extern "C" fn gslab_operator_apply(
    op: *const GslabOperator,
    g: *const f64,
    g_len_complex: usize,
    y: *mut f64,
    y_len_complex: usize,
) -> GslabStatus {
    guard(|| {
        let o = op_ref(op)?;
        if y_len_complex != o.rows {
            return Err(fail(GslabStatus::DimensionMismatch, format!("output holds {y_len_complex}, need {}", o.rows)));
        }
        let raw = slice(g, 2 * g_len_complex)?;
        let gv: Vec<Complex64> = raw.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect();
        let res = lift(o.apply(&gv))?;
        if y.is_null() && !res.is_empty() {
            return Err(fail(GslabStatus::NullPointer, "null output array".into()));
        }
        for (k, z) in res.iter().enumerate() {
            // SAFETY: room for 2·rows doubles checked above.
            unsafe {
                *y.add(2 * k) = z.re;
                *y.add(2 * k + 1) = z.im;
            }
        }
        Ok(())
    })
}

/// Schur upper bound for `‖K‖²` between the weighted ℓ² spaces.
///
/// # Safety
/// `op` must be a live handle; `bound` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gslab_operator_schur_bound(op: *const GslabOperator, bound: *mut f64) -> GslabStatus {
    guard(|| {
        *out(bound)? = schur_bound(op_ref(op)?);
        Ok(())
    })
}

/// Largest singular value by seeded power iteration.
///
/// # Safety
/// `op` must be a live handle; `sigma` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gslab_operator_norm(op: *const GslabOperator, seed: u64, sigma: *mut f64) -> GslabStatus {
    guard(|| {
        let opts = PowerOptions { tol: 1e-12, max_iter: 5000, restarts: 3 };
        *out(sigma)? = operator_norm(op_ref(op)?, &opts, seed).sigma;
        Ok(())
    })
}

/// Lower bound for the maximal operator norm of `piece` on `I = [lo, hi]`,
/// maximizing over data and per-row times.
///
/// # Safety
/// `lower_bound` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gslab_norm_lower(
    piece: GslabPiece,
    two_nu: u32,
    lo: f64,
    hi: f64,
    alpha: f64,
    grid: GslabGrids,
    rounds: usize,
    seed: u64,
    lower_bound: *mut f64,
) -> GslabStatus {
    guard(|| {
        let slot = out(lower_bound)?;
        let spec = KernelSpec::new(piece.into(), order(two_nu)?, (lo, hi), alpha);
        let (s, r, t) = grids(grid, (lo, hi));
        let opts = NormOptions { rounds, seed, ..NormOptions::default() };
        *slot = lift(op_norm_lower(&spec, &s, &r, &t, &opts))?.lower_bound;
        Ok(())
    })
}

/// Maximal ratio `Σ_j max_t |Q_ν^t g(r_j)|² ρ_j / ∫ |g|² s^{1/2}` for samples
/// `g(s_k) = re[k] + i·im[k]` (trapezoidal weights), `r_points` midpoints of
/// `(0, 1]` and the given times.
///
/// # Safety
/// `s`, `re`, `im` must hold `n` doubles, `t` must hold `nt`; `ratio` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gslab_q_star_ratio(
    two_nu: u32,
    s: *const f64,
    re: *const f64,
    im: *const f64,
    n: usize,
    t: *const f64,
    nt: usize,
    r_points: usize,
    ratio: *mut f64,
) -> GslabStatus {
    guard(|| {
        let slot = out(ratio)?;
        let (s, re, im, t) = (slice(s, n)?, slice(re, n)?, slice(im, n)?, slice(t, nt)?);
        let vals = re.iter().zip(im).map(|(a, b)| Complex64::new(*a, *b)).collect();
        let g = lift(RadialDatum::from_samples(s.to_vec(), vals))?;
        if r_points == 0 {
            return Err(fail(GslabStatus::Config, "r_points must be positive".into()));
        }
        *slot = lift(q_star_ratio(&g, order(two_nu)?, t, &Grid::r_uniform(r_points)))?;
        Ok(())
    })
}
