use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Default largest matrix accepted by [`permanent`].
pub const DEFAULT_MAX_PERMANENT: usize = 12;

/// Permanent of a square matrix, up to [`DEFAULT_MAX_PERMANENT`].
pub fn permanent(a: &DMatrix<Complex64>) -> Result<Complex64> {
    permanent_with_limit(a, DEFAULT_MAX_PERMANENT)
}

pub fn permanent_with_limit(a: &DMatrix<Complex64>, max_n: usize) -> Result<Complex64> {
    if a.nrows() != a.ncols() {
        return Err(Error::NotSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    let n = a.nrows();
    if n > max_n {
        return Err(Error::CapExceeded {
            what: "permanent size",
            value: n,
            limit: max_n,
        });
    }
    let rows: Vec<Complex64> = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| a[(i, j)])
        .collect();
    Ok(glynn(&rows, n))
}

/// Glynn's formula with Gray-code ordering over a row-major `n×n` slice.
///
/// `Per(A) = 2^{1−n} Σ_δ (Πδ) Π_j Σ_i δ_i a_ij` with δ₀ fixed to +1.
pub(crate) fn glynn(a: &[Complex64], n: usize) -> Complex64 {
    debug_assert_eq!(a.len(), n * n);
    match n {
        0 => return Complex64::new(1.0, 0.0),
        1 => return a[0],
        2 => return a[0] * a[3] + a[1] * a[2],
        _ => {}
    }
    assert!(n < 64, "permanent size {n} is beyond any feasible evaluation");
    let mut buf = [Complex64::new(0.0, 0.0); 64];
    let sums = &mut buf[..n];
    for i in 0..n {
        for j in 0..n {
            sums[j] += a[i * n + j];
        }
    }
    let mut delta = [1i8; 64];
    let mut sign = 1.0;
    let mut total = sums.iter().product::<Complex64>();
    let iterations: u64 = 1 << (n - 1);
    for k in 1..iterations {
        let row = k.trailing_zeros() as usize + 1;
        let d = delta[row] as f64;
        let r = &a[row * n..(row + 1) * n];
        for j in 0..n {
            sums[j] -= r[j] * (2.0 * d);
        }
        delta[row] = -delta[row];
        sign = -sign;
        let prod = sums.iter().product::<Complex64>();
        total += prod * sign;
    }
    total / (iterations as f64)
}
