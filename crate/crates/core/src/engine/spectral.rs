use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("matrix is {rows}×{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("entry ({row}, {col}) = {value} is negative or not finite")]
    InvalidEntry { row: usize, col: usize, value: f64 },
}

/// Bracket `lower ≤ ρ ≤ upper` from Collatz–Wielandt ratios plus a point
/// estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralEstimate {
    pub radius: f64,
    pub lower: f64,
    pub upper: f64,
    pub iterations: usize,
    /// Whether the bracket closed to the requested tolerance.
    pub converged: bool,
}

pub fn validate_nonnegative(mat: &DMatrix<f64>) -> Result<(), SpectralError> {
    if !mat.is_square() {
        return Err(SpectralError::NotSquare {
            rows: mat.nrows(),
            cols: mat.ncols(),
        });
    }
    for ((row, col), &value) in mat
        .iter()
        .enumerate()
        .map(|(k, v)| ((k % mat.nrows(), k / mat.nrows()), v))
    {
        if !(value >= 0.0 && value.is_finite()) {
            return Err(SpectralError::InvalidEntry { row, col, value });
        }
    }
    Ok(())
}

/// Power iteration for a non-negative matrix.
///
/// Iterates on `A + αI` with `α = ‖A‖∞/2` so the iterate stays positive and
/// periodic spectra do not stall. The upper bound is `max_i (Ax)_i/x_i`.
/// The lower bound uses `Ay ≥ r·y ⇒ ρ ≥ r` for `y` equal to `x` with
/// negligible entries zeroed, which also closes on reducible matrices.
/// `stop` is consulted after every step and may end the iteration early.
pub(crate) fn power_iteration(
    mat: &DMatrix<f64>,
    tol: f64,
    max_iter: usize,
    mut stop: impl FnMut(f64, f64) -> bool,
) -> Result<SpectralEstimate, SpectralError> {
    validate_nonnegative(mat)?;
    let n = mat.nrows();
    let norm_inf = (0..n).map(|i| mat.row(i).sum()).fold(0.0, f64::max);
    if n == 0 || norm_inf == 0.0 {
        return Ok(SpectralEstimate {
            radius: 0.0,
            lower: 0.0,
            upper: 0.0,
            iterations: 0,
            converged: true,
        });
    }
    let alpha = norm_inf / 2.0;
    let mut x = DVector::from_element(n, 1.0);
    let mut lower = 0.0f64;
    let mut upper = norm_inf;
    let mut radius = norm_inf;
    for it in 1..=max_iter {
        let ax = mat * &x;
        let mut hi = 0.0f64;
        let mut lo_full = f64::INFINITY;
        for i in 0..n {
            let r = ax[i] / x[i];
            hi = hi.max(r);
            lo_full = lo_full.min(r);
        }
        let xmax = x.max();
        let cut = xmax * 1e-9;
        let y = x.map(|v| if v >= cut { v } else { 0.0 });
        let ay = mat * &y;
        let lo_cut = (0..n)
            .filter(|&i| y[i] > 0.0)
            .map(|i| ay[i] / y[i])
            .fold(f64::INFINITY, f64::min);
        upper = upper.min(hi);
        lower = lower.max(lo_full).max(lo_cut);

        let bx = ax + &x * alpha;
        let scale = bx.max();
        radius = scale / xmax - alpha;
        x = bx / scale;

        let closed = upper - lower <= tol * upper.max(1.0);
        if closed || stop(lower, upper) {
            return Ok(SpectralEstimate {
                radius: if closed {
                    0.5 * (lower + upper)
                } else {
                    radius.clamp(lower, upper)
                },
                lower,
                upper,
                iterations: it,
                converged: closed,
            });
        }
    }
    Ok(SpectralEstimate {
        radius: radius.clamp(lower, upper),
        lower,
        upper,
        iterations: max_iter,
        converged: false,
    })
}

/// Spectral radius of a non-negative square matrix by power iteration.
pub fn spectral_radius(
    mat: &DMatrix<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<SpectralEstimate, SpectralError> {
    power_iteration(mat, tol, max_iter, |_, _| false)
}
